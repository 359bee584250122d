//! The `tribrid` command line.
//!
//! Data goes to `--out` or standard output, diagnostics to standard error.
//! Every file written through `--out` gets a `<out>.manifest.json` next to
//! it recording the command, its arguments and the seed.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::decision::{calibrate_tau, class_log, signals_agree, Family, Verdict};
use crate::encoder::{EncoderConfig, EncoderParams, Signals};
use crate::eval::{self, ExamplePair, ScoredExample, Split};
use crate::label_model::{self, Ensemble, LabelMatrix, LabelModelParams, REFERENCE_TAU_DIST, REFERENCE_TAU_LOG};
use crate::negation::{CoverageReport, Negator, RuleSet, VerbLexicon};
use crate::objective::{self, OptimizerKind, TrainConfig, TrainExample};
use crate::stance::Stance;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "tribrid", version, about = "Stance classification with negated perspectives")]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, env = "TRIBRID_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Negate sentences and report template coverage.
    Negate(NegateArgs),
    /// Train the encoder on the train split.
    Train(TrainArgs),
    /// Write one decision per pair of a split.
    Predict(PredictArgs),
    /// Score a predictions file against gold labels.
    Evaluate(EvaluateArgs),
    /// Filter-percentage sweep for the logit and distance procedures.
    Sweep(SweepArgs),
    /// Count predictions that change when the perspective is negated.
    Flip(FlipArgs),
    /// Fit the label model on the train split.
    EnsembleFit(EnsembleFitArgs),
    /// Predict with a fitted label model.
    EnsemblePredict(EnsemblePredictArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Negate(_) => "negate",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Evaluate(_) => "evaluate",
            Command::Sweep(_) => "sweep",
            Command::Flip(_) => "flip",
            Command::EnsembleFit(_) => "ensemble-fit",
            Command::EnsemblePredict(_) => "ensemble-predict",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TemplateArgs {
    /// Rule file; the bundled fourteen templates when absent.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

impl TemplateArgs {
    fn load(&self) -> anyhow::Result<RuleSet> {
        match &self.templates {
            None => Ok(RuleSet::bundled()),
            Some(p) => RuleSet::from_file(p, VerbLexicon::bundled())
                .with_context(|| format!("loading templates from {}", p.display())),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// JSONL dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Split to process.
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
}

impl DataArgs {
    fn load_all(&self) -> anyhow::Result<Vec<ExamplePair>> {
        eval::load_dataset(&self.dataset).with_context(|| format!("reading {}", self.dataset.display()))
    }

    fn load_split(&self) -> anyhow::Result<Vec<ExamplePair>> {
        let data = eval::split_of(&self.load_all()?, self.split);
        if data.is_empty() {
            bail!("{} has no {} rows", self.dataset.display(), self.split.as_str());
        }
        Ok(data)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BankArgs {
    /// Comma-separated logit thresholds.
    #[arg(long, value_delimiter = ',')]
    pub tau_bank_log: Vec<f64>,
    /// Comma-separated distance thresholds.
    #[arg(long, value_delimiter = ',')]
    pub tau_bank_dist: Vec<f64>,
    /// Use the reference banks for any bank not given.
    #[arg(long, conflicts_with = "bank_quantiles")]
    pub reference_banks: bool,
    /// Place both banks at these discard fractions of the train-split gaps.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["tau_bank_log", "tau_bank_dist"])]
    pub bank_quantiles: Vec<f64>,
}

impl BankArgs {
    fn banks(&self, train: &[Signals]) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
        if !self.bank_quantiles.is_empty() {
            let banks = label_model::quantile_banks(train, &self.bank_quantiles).context("placing quantile banks")?;
            eprintln!("banks: log {:?}, dist {:?}", banks.0, banks.1);
            return Ok(banks);
        }
        let pick = |given: &[f64], reference: &[f64]| {
            if given.is_empty() && self.reference_banks {
                reference.to_vec()
            } else {
                given.to_vec()
            }
        };
        let log = pick(&self.tau_bank_log, &REFERENCE_TAU_LOG);
        let dist = pick(&self.tau_bank_dist, &REFERENCE_TAU_DIST);
        if log.is_empty() && dist.is_empty() {
            bail!("the label model needs --tau-bank-log and/or --tau-bank-dist (or --reference-banks, --bank-quantiles)");
        }
        Ok((log, dist))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct NegateArgs {
    /// Plain text, one sentence per line.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    pub input: Option<PathBuf>,
    /// JSONL dataset; its perspectives are negated.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Negator::Templates)]
    pub negator: Negator,
    #[command(flatten)]
    pub templates: TemplateArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerChoice {
    Sgd,
    Adam,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub templates: TemplateArgs,
    /// Where to write the checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Loss history JSON; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = objective::DEFAULT_MARGIN)]
    pub margin: f64,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, value_enum, default_value_t = OptimizerChoice::Sgd)]
    pub optimizer: OptimizerChoice,
    /// Train the pair-only model: negated perspectives are never used.
    #[arg(long)]
    pub no_negation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Log,
    Dist,
    Agree,
    Weak,
    Majority,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub templates: TemplateArgs,
    #[arg(long, value_enum, default_value_t = Mode::Log)]
    pub mode: Mode,
    /// Abstention threshold for `log` and `dist`.
    #[arg(long, default_value_t = 0.0, conflicts_with = "discard")]
    pub tau: f64,
    /// Pick tau so this fraction of the dev split would abstain.
    #[arg(long)]
    pub discard: Option<f64>,
    #[command(flatten)]
    pub banks: BankArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Predictions JSONL with `id` and `verdict` fields.
    #[arg(long)]
    pub predictions: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Stance::Support)]
    pub positive: Stance,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub templates: TemplateArgs,
    /// One method only; both when absent.
    #[arg(long, value_enum)]
    pub mode: Option<Family>,
    /// Comma-separated discard fractions in (0, 1).
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]
    pub percentages: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FlipArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub templates: TemplateArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = Negator::ALL)]
    pub negators: Vec<Negator>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EnsembleFitArgs {
    /// Label matrix CSV to fit on directly, instead of a model and dataset.
    #[arg(long, conflicts_with_all = ["checkpoint", "dataset"])]
    pub label_matrix: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    pub checkpoint: Option<PathBuf>,
    /// Its train split is used.
    #[arg(long, requires = "checkpoint")]
    pub dataset: Option<PathBuf>,
    #[command(flatten)]
    pub templates: TemplateArgs,
    #[command(flatten)]
    pub banks: BankArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EnsemblePredictArgs {
    /// Parameters written by `ensemble-fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub templates: TemplateArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    args: &'a Command,
}

/// One line of `predict` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior: Option<f64>,
    /// No negated perspective; the pair-only logit decision was used.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

#[derive(Serialize)]
struct NegationRow<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<&'a str>,
    text: &'a str,
    negated: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rule: Option<usize>,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) if is_broken_pipe(&e) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let kind = if let Some(io) = c.downcast_ref::<io::Error>() {
            Some(io.kind())
        } else if let Some(json) = c.downcast_ref::<serde_json::Error>() {
            json.io_error_kind()
        } else if let Some(csv) = c.downcast_ref::<csv::Error>() {
            match csv.kind() {
                csv::ErrorKind::Io(io) => Some(io.kind()),
                _ => None,
            }
        } else {
            None
        };
        kind == Some(io::ErrorKind::BrokenPipe)
    })
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    log::info!("{} (seed {})", cli.command.name(), cli.seed);
    match &cli.command {
        Command::Negate(a) => negate(a)?,
        Command::Train(a) => train(a, cli.seed)?,
        Command::Predict(a) => predict(a)?,
        Command::Evaluate(a) => evaluate(a)?,
        Command::Sweep(a) => sweep(a)?,
        Command::Flip(a) => flip(a)?,
        Command::EnsembleFit(a) => ensemble_fit(a)?,
        Command::EnsemblePredict(a) => ensemble_predict(a)?,
    }
    for out in primary_outputs(&cli.command) {
        write_manifest(out, cli)?;
    }
    Ok(())
}

fn primary_outputs(command: &Command) -> Vec<&Path> {
    let mut outs: Vec<Option<&Path>> = match command {
        Command::Negate(a) => vec![a.out.as_deref()],
        Command::Train(a) => vec![Some(a.checkpoint.as_path()), a.out.as_deref()],
        Command::Predict(a) => vec![a.out.as_deref()],
        Command::Evaluate(a) => vec![a.out.as_deref()],
        Command::Sweep(a) => vec![a.out.as_deref()],
        Command::Flip(a) => vec![a.out.as_deref()],
        Command::EnsembleFit(a) => vec![a.out.as_deref()],
        Command::EnsemblePredict(a) => vec![a.out.as_deref()],
    };
    outs.drain(..).flatten().collect()
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_manifest(out: &Path, cli: &Cli) -> anyhow::Result<()> {
    let manifest = Manifest {
        tool: "tribrid",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        seed: cli.seed,
        args: &cli.command,
    };
    let path = manifest_path(out);
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn sink(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_jsonl<T: Serialize>(out: Option<&Path>, rows: &[T]) -> anyhow::Result<()> {
    let mut w = sink(out)?;
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn load_checkpoint(path: &Path) -> anyhow::Result<EncoderParams> {
    EncoderParams::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn negate(a: &NegateArgs) -> anyhow::Result<()> {
    let rules = a.templates.load()?;
    let items: Vec<(Option<String>, String)> = match (&a.input, &a.dataset) {
        (Some(p), _) => {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let mut lines = Vec::new();
            for line in BufReader::new(file).lines() {
                let line = line?;
                if !line.trim().is_empty() {
                    lines.push((None, line));
                }
            }
            lines
        }
        (None, Some(p)) => eval::load_dataset(p)
            .with_context(|| format!("reading {}", p.display()))?
            .into_iter()
            .map(|pair| (Some(pair.id), pair.perspective))
            .collect(),
        (None, None) => bail!("one of --input or --dataset is required"),
    };

    let mut covered = 0;
    let rows: Vec<NegationRow> = items
        .iter()
        .map(|(id, text)| {
            let (negated, rule) = match a.negator {
                Negator::Templates => match rules.negate(text) {
                    Some(r) => (Some(r.negated_text), Some(r.rule_index)),
                    None => (None, None),
                },
                other => (other.apply(&rules, text), None),
            };
            covered += usize::from(negated.is_some());
            NegationRow {
                id: id.as_deref(),
                text,
                negated,
                rule,
            }
        })
        .collect();
    write_jsonl(a.out.as_deref(), &rows)?;
    eprintln!("{} coverage {}", a.negator.name(), CoverageReport::new(covered, items.len()));
    Ok(())
}

fn train(a: &TrainArgs, seed: u64) -> anyhow::Result<()> {
    let rules = a.templates.load()?;
    let data = eval::load_dataset(&a.dataset).with_context(|| format!("reading {}", a.dataset.display()))?;
    let train_pairs = eval::split_of(&data, Split::Train);
    let use_negation = !a.no_negation;
    let examples: Vec<TrainExample> = train_pairs
        .iter()
        .map(|p| TrainExample {
            triple: eval::triple_for(&rules, p, use_negation),
            label: p.label,
        })
        .collect();
    let config = TrainConfig {
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        epochs: a.epochs,
        margin: a.margin,
        seed,
        optimizer: match a.optimizer {
            OptimizerChoice::Sgd => OptimizerKind::default(),
            OptimizerChoice::Adam => OptimizerKind::Adam {
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
        },
        use_negation,
    };
    let params = EncoderParams::init(EncoderConfig::default(), seed);
    let (params, history) = objective::train(params, &examples, &config)?;
    params.save(&a.checkpoint)?;
    eprintln!(
        "trained on {} pairs: loss {:.4} -> {:.4}",
        examples.len(),
        history.initial.total,
        history.final_loss().total
    );
    write_json(a.out.as_deref(), &history)
}

fn decide_all(
    signals: &[(String, Signals)],
    mode: Mode,
    tau: f64,
) -> Vec<PredictionRow> {
    signals
        .iter()
        .map(|(id, s)| {
            let row = |verdict, confidence, fallback| PredictionRow {
                id: id.clone(),
                verdict,
                confidence,
                posterior: None,
                fallback,
            };
            match mode {
                Mode::Log => {
                    let d = class_log(s, tau);
                    row(d.verdict, Some(d.confidence), false)
                }
                Mode::Dist if !s.has_negation() => {
                    let d = class_log(s, 0.0);
                    row(d.verdict, Some(d.confidence), true)
                }
                Mode::Dist => {
                    let d = Family::Distance.decide(s, tau);
                    row(d.verdict, Some(d.confidence), false)
                }
                Mode::Agree => row(signals_agree(s).map_or(Verdict::Abstain, Verdict::from), None, false),
                Mode::Weak | Mode::Majority => unreachable!("ensemble modes are handled separately"),
            }
        })
        .collect()
}

fn scored(model: &EncoderParams, rules: &RuleSet, pairs: &[ExamplePair]) -> Vec<ScoredExample> {
    eval::score_dataset(model, rules, pairs, true)
}

fn predict(a: &PredictArgs) -> anyhow::Result<()> {
    let model = load_checkpoint(&a.checkpoint)?;
    let rules = a.templates.load()?;
    let all = a.data.load_all()?;
    let pairs = a.data.load_split()?;
    let scored = scored(&model, &rules, &pairs);

    let rows = match a.mode {
        Mode::Weak | Mode::Majority => {
            if a.discard.is_some() {
                bail!("--discard applies to the log and dist modes");
            }
            let train = scored_signals(&model, &rules, &eval::split_of(&all, Split::Train));
            let (log, dist) = a.banks.banks(&train)?;
            let eval_signals: Vec<Signals> = scored.iter().map(|s| s.signals).collect();
            let ensemble = if a.mode == Mode::Weak { Ensemble::Weak } else { Ensemble::Majority };
            let preds = label_model::fit_predict_pipeline(&train, &eval_signals, &log, &dist, ensemble)?;
            scored
                .iter()
                .zip(preds)
                .map(|(s, p)| PredictionRow {
                    id: s.id.clone(),
                    verdict: p.verdict(),
                    confidence: None,
                    posterior: p.posterior,
                    fallback: p.fallback,
                })
                .collect()
        }
        mode => {
            let tau = match a.discard {
                None => a.tau,
                Some(x) => {
                    let family = match mode {
                        Mode::Log => Family::Logit,
                        Mode::Dist => Family::Distance,
                        _ => bail!("--discard applies to the log and dist modes"),
                    };
                    let dev = scored_signals(&model, &rules, &eval::split_of(&all, Split::Dev));
                    let gaps: Vec<f64> = dev.iter().filter_map(|s| family.gap(s)).collect();
                    let tau = calibrate_tau(&gaps, x).context("calibrating on the dev split")?;
                    eprintln!("calibrated {} tau = {tau:.6} for discard {x}", family.name());
                    tau
                }
            };
            if !(tau >= 0.0) {
                bail!("--tau must be >= 0");
            }
            let signals: Vec<(String, Signals)> = scored.iter().map(|s| (s.id.clone(), s.signals)).collect();
            decide_all(&signals, mode, tau)
        }
    };
    let abstained = rows.iter().filter(|r| r.verdict == Verdict::Abstain).count();
    let fallback = rows.iter().filter(|r| r.fallback).count();
    eprintln!("{} rows, {abstained} abstained, {fallback} fallback", rows.len());
    write_jsonl(a.out.as_deref(), &rows)
}

fn scored_signals(model: &EncoderParams, rules: &RuleSet, pairs: &[ExamplePair]) -> Vec<Signals> {
    scored(model, rules, pairs).into_iter().map(|s| s.signals).collect()
}

fn evaluate(a: &EvaluateArgs) -> anyhow::Result<()> {
    let gold = a.data.load_split()?;
    let file = File::open(&a.predictions).with_context(|| format!("opening {}", a.predictions.display()))?;
    let mut preds = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: PredictionRow = serde_json::from_str(&line)
            .with_context(|| format!("{} line {}", a.predictions.display(), i + 1))?;
        preds.push((row.id, row.verdict));
    }
    let report = eval::compute_metrics(&preds, &gold, a.positive)?;
    eprintln!("{report}");
    write_json(a.out.as_deref(), &report)
}

fn sweep(a: &SweepArgs) -> anyhow::Result<()> {
    let model = load_checkpoint(&a.checkpoint)?;
    let rules = a.templates.load()?;
    let pairs = a.data.load_split()?;
    let rows = eval::negatable(&scored(&model, &rules, &pairs));
    if rows.is_empty() {
        bail!("no perspective in the split can be negated");
    }
    let families: Vec<Family> = match a.mode {
        Some(f) => vec![f],
        None => vec![Family::Logit, Family::Distance],
    };
    let mut report = eval::SweepReport::default();
    for f in families {
        report.rows.extend(eval::sweep_filter(&rows, f, &a.percentages)?.rows);
    }
    eprintln!("sweep over {} negatable pairs of {}", rows.len(), pairs.len());
    let mut w = sink(a.out.as_deref())?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn flip(a: &FlipArgs) -> anyhow::Result<()> {
    let model = load_checkpoint(&a.checkpoint)?;
    let rules = a.templates.load()?;
    let pairs = a.data.load_split()?;
    let report = eval::flip_report(&model, &rules, &a.negators, &pairs);
    for r in &report.rows {
        eprintln!(
            "{:<9} coverage {:.3}  flipped {:>4}  F1 {:.2}",
            r.negator.name(),
            r.coverage,
            r.flipped,
            100.0 * r.flipped_metrics.f1
        );
    }
    let mut w = sink(a.out.as_deref())?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn ensemble_fit(a: &EnsembleFitArgs) -> anyhow::Result<()> {
    let params: LabelModelParams = match (&a.label_matrix, &a.checkpoint, &a.dataset) {
        (Some(path), _, _) => {
            let matrix = LabelMatrix::load_csv(path).with_context(|| format!("reading {}", path.display()))?;
            label_model::estimate(&matrix)?
        }
        (None, Some(ckpt), Some(dataset)) => {
            let model = load_checkpoint(ckpt)?;
            let rules = a.templates.load()?;
            let data = eval::load_dataset(dataset).with_context(|| format!("reading {}", dataset.display()))?;
            let train = scored_signals(&model, &rules, &eval::split_of(&data, Split::Train));
            let (log, dist) = a.banks.banks(&train)?;
            label_model::fit(&train, &log, &dist)?
        }
        _ => bail!("give --label-matrix, or --checkpoint together with --dataset"),
    };
    for (t, acc) in params.columns.iter().zip(&params.accuracies) {
        eprintln!("{}:{} accuracy {acc:.3}", t.family.name(), t.tau);
    }
    write_json(a.out.as_deref(), &params)
}

fn ensemble_predict(a: &EnsemblePredictArgs) -> anyhow::Result<()> {
    let params = LabelModelParams::load_json(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let model = load_checkpoint(&a.checkpoint)?;
    let rules = a.templates.load()?;
    let pairs = a.data.load_split()?;
    let scored = scored(&model, &rules, &pairs);
    let signals: Vec<Signals> = scored.iter().map(|s| s.signals).collect();
    let rows: Vec<PredictionRow> = scored
        .iter()
        .zip(label_model::predict_signals(&params, &signals))
        .map(|(s, p)| PredictionRow {
            id: s.id.clone(),
            verdict: p.verdict(),
            confidence: None,
            posterior: p.posterior,
            fallback: p.fallback,
        })
        .collect();
    write_jsonl(a.out.as_deref(), &rows)
}
