//! Acceptance criteria. Each criterion prints one `AC<n> PASS|FAIL` line; the
//! process exits non-zero if any fails.
//!
//!     cargo test --release --test acceptance

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tribrid::decision::{class_dist, class_log, signals_agree, Family, Threshold, Verdict};
use tribrid::encoder::{l2_distance, EncoderConfig, EncoderParams, InputTriple, Signals};
use tribrid::eval::{evaluate_at, flip_report, negatable, score_dataset, split_of, sweep_filter, synthetic, triple_for, MetricsReport, Split};
use tribrid::label_model::{estimate, predict, LabelMatrix};
use tribrid::negation::{negate_delnot, Negator, RuleSet};
use tribrid::objective::{kink_pattern, loss, loss_and_gradient_of, train, Components, TrainConfig, TrainExample};
use tribrid::tokenizer::tokenize;
use tribrid::Stance;

const AC1_BUDGET: Duration = Duration::from_secs(1);
const AC2_BUDGET: Duration = Duration::from_secs(30);
const AC2_DRAWS: u64 = 100;
const AC2_STEP: f64 = 1e-4;
const AC2_TOLERANCE: f64 = 1e-4;
const AC3_CASES: usize = 1000;
const AC4_BUDGET: Duration = Duration::from_secs(60);
const AC4_SEEDS: u64 = 20;
const AC4_ROWS: usize = 10_000;
const AC4_MAE: f64 = 0.05;
const AC4_F1_SLACK: f64 = 0.01;
const AC5_BUDGET: Duration = Duration::from_secs(300);
const AC5_MIN_F1: f64 = 0.90;
const AC5_SLACK: f64 = 0.02;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- AC1

fn lower_tokens(s: &str) -> Vec<String> {
    tokenize(s).into_iter().map(|t| t.to_lowercase()).collect()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let rules = RuleSet::bundled();
    let golden = include_str!("data/negation_golden.tsv");
    let (mut total, mut exact) = (0, 0);
    for line in golden.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        let got = rules.negate(cols[0]);
        let expected = (cols[1] != "-").then_some(cols[1]);
        let rule = (cols[2] != "-").then(|| cols[2].parse::<usize>().unwrap());
        total += 1;
        if got.as_ref().map(|r| r.negated_text.as_str()) == expected && got.as_ref().map(|r| r.rule_index) == rule {
            exact += 1;
        }
    }

    // insert a not with an auxiliary rule, then delete it again
    let subjects = ["Zoos", "The plan", "Social media", "Our city", "Remote work"];
    let aux = ["is", "are", "was", "were", "will", "can", "should", "must", "would"];
    let words = ["good", "fair", "cheap", "ready", "for", "the", "city", "people", "today"];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut involutions = 0;
    let draws = 500;
    for _ in 0..draws {
        let n = rng.gen_range(1..6);
        let tail: Vec<&str> = (0..n).map(|_| *words.choose(&mut rng).unwrap()).collect();
        let s = format!("{} {} {}.", subjects.choose(&mut rng).unwrap(), aux.choose(&mut rng).unwrap(), tail.join(" "));
        let Some(r) = rules.negate(&s) else { continue };
        let by_baseline = negate_delnot(&r.negated_text).map(|b| lower_tokens(&b));
        let by_rule = rules.negate(&r.negated_text).map(|b| lower_tokens(&b.negated_text));
        if by_baseline.as_ref() == Some(&lower_tokens(&s)) && by_rule.as_ref() == Some(&lower_tokens(&s)) {
            involutions += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        exact == total && total == 50 && involutions == draws && elapsed < AC1_BUDGET,
        format!("negation golden {exact}/{total} exact, not-involution {involutions}/{draws}, {:.2}s (budget {}s)", elapsed.as_secs_f64(), AC1_BUDGET.as_secs()),
    )
}

// ---------------------------------------------------------------- AC2

fn gradient_draw(seed: u64, hinge_active: bool) -> (EncoderParams, TrainExample, f64) {
    let words = ["zoos", "are", "cruel", "not", "cities", "help", "harm", "people", "taxes", "rise", "good", "bad"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = EncoderConfig {
        hash_size: 32,
        dim: 3,
        init_scale: 0.6,
    };
    let params = EncoderParams::init(config, seed);
    let mut sentence = || {
        let n = rng.gen_range(1..7);
        (0..n).map(|_| *words.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ")
    };
    let triple = InputTriple::new(sentence(), sentence(), Some(sentence()));
    let c = params.encode(&triple.claim);
    let dp = l2_distance(c.as_slice(), params.encode(&triple.perspective).as_slice());
    let dn = l2_distance(c.as_slice(), params.encode(triple.negated.as_deref().unwrap()).as_slice());
    let label = if hinge_active != (dp <= dn) { Stance::Support } else { Stance::Oppose };
    let (pos, neg) = if label == Stance::Support { (dp, dn) } else { (dn, dp) };
    let margin = if hinge_active {
        (neg - pos).max(0.0) + rng.gen_range(0.2..1.0)
    } else {
        (neg - pos) * rng.gen_range(0.1..0.8)
    };
    (params, TrainExample { triple, label }, margin)
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let (mut checked, mut active) = (0usize, 0);
    let mut pass = true;
    for seed in 0..AC2_DRAWS {
        let (params, ex, margin) = gradient_draw(seed, seed % 2 == 0);
        if loss(&params, &ex, margin, true).l_tri > 0.0 {
            active += 1;
        }
        let base = kink_pattern(&params, &ex, margin, true);
        for which in [Components::CE, Components::COS, Components::TRI, Components::ALL] {
            let analytic = loss_and_gradient_of(&params, &ex, margin, true, which).1.to_dense(params.hash_size);
            for (i, a) in analytic.iter().enumerate() {
                let at = |delta: f64| {
                    let mut q = params.clone();
                    *q.param_mut(i) += delta;
                    (which.pick(&loss(&q, &ex, margin, true)), kink_pattern(&q, &ex, margin, true))
                };
                let ((up, ku), (down, kd)) = (at(AC2_STEP), at(-AC2_STEP));
                if ku != base || kd != base {
                    continue;
                }
                let numeric = (up - down) / (2.0 * AC2_STEP);
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
                checked += 1;
                pass &= rel < AC2_TOLERANCE;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        pass && active == AC2_DRAWS / 2 && elapsed < AC2_BUDGET,
        format!(
            "gradients {AC2_DRAWS} draws ({active} hinge-active), {checked} coordinate checks, worst rel err {worst:.2e} < {AC2_TOLERANCE:.0e}, {:.1}s (budget {}s)",
            elapsed.as_secs_f64(),
            AC2_BUDGET.as_secs()
        ),
    )
}

// ---------------------------------------------------------------- AC3

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // half the values come from a coarse grid so that exact ties occur
    let value = |rng: &mut ChaCha8Rng, scale: f64, signed: bool| {
        let v = if rng.gen_bool(0.5) { f64::from(rng.gen_range(0..8)) * 0.5 * scale } else { rng.gen_range(0.0..4.0) * scale };
        if signed && rng.gen_bool(0.5) {
            -v
        } else {
            v
        }
    };
    let mut violations = 0;
    let mut ties = 0;
    for _ in 0..AC3_CASES {
        let s = Signals {
            lpos: value(&mut rng, 2.0, true),
            lneg: value(&mut rng, 2.0, true),
            dist_p: value(&mut rng, 0.5, false),
            dist_np: rng.gen_bool(0.85).then(|| value(&mut rng, 0.5, false)),
            cos_p: 0.0,
            cos_np: Some(0.0),
        };
        let tau = if rng.gen_bool(0.3) { 0.0 } else { value(&mut rng, 1.0, false) };
        let lgap = (s.lpos - s.lneg).abs();
        let expect_log = if lgap < tau {
            Verdict::Abstain
        } else if s.lpos >= s.lneg {
            Verdict::Support
        } else {
            Verdict::Oppose
        };
        let expect_dist = match s.dist_np {
            None => Verdict::Abstain,
            Some(np) if (s.dist_p - np).abs() < tau => Verdict::Abstain,
            Some(np) if s.dist_p < np => Verdict::Support,
            Some(_) => Verdict::Oppose,
        };
        let expect_agree = match (s.dist_np, expect_log.stance()) {
            (Some(np), Some(l)) if s.lpos != s.lneg && s.dist_p != np => {
                let d = if s.dist_p < np { Stance::Support } else { Stance::Oppose };
                (d == l).then_some(l)
            }
            _ => None,
        };
        if s.lpos == s.lneg || s.dist_np == Some(s.dist_p) {
            ties += 1;
        }
        let agree_ok = if tau == 0.0 { signals_agree(&s) == expect_agree } else { true };
        let higher = tau + 0.5;
        let monotone = class_log(&s, tau).verdict != Verdict::Abstain || class_log(&s, higher).verdict == Verdict::Abstain;
        if class_log(&s, tau).verdict != expect_log || class_dist(&s, tau).verdict != expect_dist || !agree_ok || !monotone {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("decision rules {AC3_CASES} random signal sets ({ties} with exact ties), {violations} violations"))
}

// ---------------------------------------------------------------- AC4

fn ac4() -> Outcome {
    let start = Instant::now();
    let mut worst_mae = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    for seed in 0..AC4_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + seed);
        let acc: Vec<f64> = (0..10).map(|_| rng.gen_range(0.6..0.9)).collect();
        let abstain: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..0.3)).collect();
        let mut rows = Vec::with_capacity(AC4_ROWS);
        let mut truth = Vec::with_capacity(AC4_ROWS);
        for _ in 0..AC4_ROWS {
            let y: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
            rows.push(
                acc.iter()
                    .zip(&abstain)
                    .map(|(a, q)| if rng.gen_bool(*q) { 0 } else if rng.gen_bool(*a) { y } else { -y })
                    .collect::<Vec<i8>>(),
            );
            truth.push(Stance::from_sign(y).unwrap());
        }
        let matrix = LabelMatrix {
            columns: (0..10).map(|i| Threshold::new(i as f64, Family::Logit).unwrap()).collect(),
            rows,
        };
        let params = match estimate(&matrix) {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("label model seed {seed}: {e}")),
        };
        let mae = params.accuracies.iter().zip(&acc).map(|(a, b)| (a - b).abs()).sum::<f64>() / acc.len() as f64;
        worst_mae = worst_mae.max(mae);

        let ensemble: Vec<Verdict> = matrix.rows.iter().map(|r| predict(&params, r).0.into()).collect();
        let ensemble_f1 = MetricsReport::from_aligned(&ensemble, &truth, Stance::Support).f1;
        let best_single = (0..10)
            .map(|j| {
                let v: Vec<Verdict> = matrix.column(j).map(|x| Stance::from_sign(x).map_or(Verdict::Abstain, Verdict::from)).collect();
                MetricsReport::from_aligned(&v, &truth, Stance::Support).f1
            })
            .fold(0.0, f64::max);
        worst_margin = worst_margin.min(ensemble_f1 - best_single);
    }
    let elapsed = start.elapsed();
    outcome(
        worst_mae < AC4_MAE && worst_margin >= -AC4_F1_SLACK && elapsed < AC4_BUDGET,
        format!(
            "label model {AC4_SEEDS} seeds x {AC4_ROWS} rows, worst accuracy MAE {worst_mae:.4} < {AC4_MAE}, worst ensemble-minus-best-column F1 {worst_margin:+.4} >= -{AC4_F1_SLACK}, {:.1}s (budget {}s)",
            elapsed.as_secs_f64(),
            AC4_BUDGET.as_secs()
        ),
    )
}

// ---------------------------------------------------------------- AC5 / AC6

fn train_on_bundled(use_negation: bool) -> EncoderParams {
    let data = synthetic::bundled();
    let rules = RuleSet::bundled();
    let config = TrainConfig {
        use_negation,
        ..TrainConfig::default()
    };
    let examples: Vec<TrainExample> = split_of(&data, Split::Train)
        .iter()
        .map(|p| TrainExample {
            triple: triple_for(&rules, p, use_negation),
            label: p.label,
        })
        .collect();
    train(EncoderParams::init(EncoderConfig::default(), config.seed), &examples, &config).unwrap().0
}

fn ac5() -> Outcome {
    let start = Instant::now();
    let model = train_on_bundled(true);
    let rules = RuleSet::bundled();
    let test = score_dataset(&model, &rules, &split_of(&synthetic::bundled(), Split::Test), true);
    let f1 = evaluate_at(&test, Family::Logit, 0.0).f1;
    let rows = negatable(&test);
    let xs = [0.1, 0.2, 0.3, 0.4, 0.5];
    let mut worst_drop = 0.0f64;
    let mut curves = Vec::new();
    for family in [Family::Logit, Family::Distance] {
        let report = sweep_filter(&rows, family, &xs).unwrap();
        let f: Vec<f64> = report.rows.iter().map(|r| r.metrics.f1).collect();
        for w in f.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        curves.push(format!("{} [{}]", family.name(), f.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")));
    }
    let elapsed = start.elapsed();
    outcome(
        f1 >= AC5_MIN_F1 && worst_drop <= AC5_SLACK && elapsed < AC5_BUDGET,
        format!(
            "benchmark test F1 at tau=0 {f1:.4} >= {AC5_MIN_F1}, sweep X=0.1..0.5 {}, worst drop {worst_drop:.4} <= {AC5_SLACK}, {:.1}s (budget {}s)",
            curves.join(", "),
            elapsed.as_secs_f64(),
            AC5_BUDGET.as_secs()
        ),
    )
}

fn ac6() -> Outcome {
    let model = train_on_bundled(false);
    let report = flip_report(&model, &RuleSet::bundled(), &Negator::ALL, &split_of(&synthetic::bundled(), Split::Test));
    let row = |n: Negator| report.rows.iter().find(|r| r.negator == n).unwrap();
    let (app, del, tpl) = (row(Negator::AppSuff), row(Negator::DelNot), row(Negator::Templates));
    outcome(
        report.rows.len() == 3 && app.coverage == 1.0 && tpl.coverage >= del.coverage,
        format!(
            "flip report on pair-only model: coverage appsuff {:.4} (== 1), templates {:.4} >= delnot {:.4}; flipped {}/{}/{}",
            app.coverage, tpl.coverage, del.coverage, app.flipped, del.flipped, tpl.flipped
        ),
    )
}

// ---------------------------------------------------------------- AC7

fn ac7() -> Outcome {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic.jsonl");
    let run = |dir: &Path| -> Result<(Vec<u8>, Vec<u8>), String> {
        let ckpt = dir.join("model.ckpt");
        let preds = dir.join("preds.jsonl");
        let bin = env!("CARGO_BIN_EXE_tribrid");
        let status = |args: &[&std::ffi::OsStr]| -> Result<(), String> {
            let out = Command::new(bin).args(args).env_remove("TRIBRID_SEED").output().map_err(|e| e.to_string())?;
            out.status.success().then_some(()).ok_or_else(|| String::from_utf8_lossy(&out.stderr).into_owned())
        };
        status(&["train".as_ref(), "--dataset".as_ref(), data.as_os_str(), "--checkpoint".as_ref(), ckpt.as_os_str(), "--seed".as_ref(), "9".as_ref()])?;
        status(&["predict".as_ref(), "--checkpoint".as_ref(), ckpt.as_os_str(), "--dataset".as_ref(), data.as_os_str(), "--out".as_ref(), preds.as_os_str()])?;
        Ok((std::fs::read(&ckpt).map_err(|e| e.to_string())?, std::fs::read(&preds).map_err(|e| e.to_string())?))
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    match (run(a.path()), run(b.path())) {
        (Ok(x), Ok(y)) => outcome(
            x == y,
            format!("cli train+predict twice with seed 9: checkpoint {} bytes, predictions {} bytes, identical {}", x.0.len(), x.1.len(), x == y),
        ),
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("cli run failed: {e}")),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [("AC1", ac1), ("AC2", ac2), ("AC3", ac3), ("AC4", ac4), ("AC5", ac5), ("AC6", ac6), ("AC7", ac7)];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!("{name} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of 7 passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
