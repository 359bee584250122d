//! Training objective: cross entropy on the logits, cosine embedding loss on
//! the claim/perspective pair and a margin triplet loss that pulls the
//! supporting text (perspective or its negation) toward the claim. Gradients
//! are derived by hand; the finite-difference checks live in the tests.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{combine_slices, cosine, l2_distance, norm, EncodeTrace, EncoderParams, Gradient, InputTriple};
use crate::error::{Error, Result};
use crate::stance::Stance;

pub const DEFAULT_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainExample {
    pub triple: InputTriple,
    pub label: Stance,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_ce: f64,
    pub l_cos: f64,
    pub l_tri: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(l_ce: f64, l_cos: f64, l_tri: f64) -> Self {
        LossBreakdown {
            l_ce,
            l_cos,
            l_tri,
            total: l_ce + l_cos + l_tri,
        }
    }

    fn accumulate(&mut self, other: &LossBreakdown) {
        self.l_ce += other.l_ce;
        self.l_cos += other.l_cos;
        self.l_tri += other.l_tri;
        self.total += other.total;
    }

    fn scaled(mut self, s: f64) -> Self {
        self.l_ce *= s;
        self.l_cos *= s;
        self.l_tri *= s;
        self.total *= s;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.l_ce.is_finite() && self.l_cos.is_finite() && self.l_tri.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Sgd { momentum: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Triplet margin.
    pub margin: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// When false, negated perspectives are ignored and the triplet term is
    /// never active (pair-only model).
    pub use_negation: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            batch_size: 16,
            epochs: 30,
            margin: DEFAULT_MARGIN,
            seed: 42,
            optimizer: OptimizerKind::default(),
            use_negation: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and >= 0");
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return bad("margin must be finite and >= 0");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        Ok(())
    }
}

/// `-log softmax(true logit)` computed through log-sum-exp.
///
/// Panics on non-finite logits.
pub fn cross_entropy(lpos: f64, lneg: f64, label: Stance) -> f64 {
    assert!(lpos.is_finite() && lneg.is_finite(), "cross_entropy: non-finite logits");
    cross_entropy_raw(lpos, lneg, label)
}

// NaN in, NaN out; training turns that into an error instead of a panic.
fn cross_entropy_raw(lpos: f64, lneg: f64, label: Stance) -> f64 {
    let m = lpos.max(lneg);
    let lse = m + ((lpos - m).exp() + (lneg - m).exp()).ln();
    let truth = match label {
        Stance::Support => lpos,
        Stance::Oppose => lneg,
    };
    lse - truth
}

/// `1 - cos` for a supporting pair, `max(0, cos)` for an opposing one.
pub fn cosine_embedding_loss(c: &[f64], p: &[f64], label: Stance) -> f64 {
    let cos = cosine(c, p);
    match label {
        Stance::Support => 1.0 - cos,
        Stance::Oppose => cos.max(0.0),
    }
}

/// `max(margin + ||c - pos|| - ||c - neg||, 0)`.
pub fn triplet_loss(c: &[f64], pos: &[f64], neg: &[f64], margin: f64) -> f64 {
    (margin + l2_distance(c, pos) - l2_distance(c, neg)).max(0.0)
}

struct Forward {
    c: EncodeTrace,
    p: EncodeTrace,
    n: Option<EncodeTrace>,
    features: Vec<f64>,
    logits: (f64, f64),
}

fn run_forward(params: &EncoderParams, ex: &TrainExample, use_negation: bool) -> Forward {
    let c = params.encode_trace(&ex.triple.claim);
    let p = params.encode_trace(&ex.triple.perspective);
    let n = if use_negation {
        ex.triple.negated.as_deref().map(|t| params.encode_trace(t))
    } else {
        None
    };
    let features = combine_slices(&c.out, &p.out);
    let logits = params.classify(&features);
    Forward { c, p, n, features, logits }
}

fn losses(fwd: &Forward, label: Stance, margin: f64) -> LossBreakdown {
    let l_ce = cross_entropy_raw(fwd.logits.0, fwd.logits.1, label);
    let l_cos = cosine_embedding_loss(&fwd.c.out, &fwd.p.out, label);
    let l_tri = match &fwd.n {
        Some(n) => {
            let (pos, neg) = triplet_sides(label, &fwd.p.out, &n.out);
            triplet_loss(&fwd.c.out, pos, neg, margin)
        }
        None => 0.0,
    };
    LossBreakdown::new(l_ce, l_cos, l_tri)
}

fn triplet_sides<'a>(label: Stance, p: &'a [f64], n: &'a [f64]) -> (&'a [f64], &'a [f64]) {
    match label {
        Stance::Support => (p, n),
        Stance::Oppose => (n, p),
    }
}

/// Loss of one example without the gradient.
pub fn loss(params: &EncoderParams, ex: &TrainExample, margin: f64, use_negation: bool) -> LossBreakdown {
    losses(&run_forward(params, ex, use_negation), ex.label, margin)
}

/// Which selected loss components contribute to the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Components {
    pub ce: bool,
    pub cos: bool,
    pub tri: bool,
}

impl Components {
    pub const ALL: Components = Components { ce: true, cos: true, tri: true };
    pub const CE: Components = Components { ce: true, cos: false, tri: false };
    pub const COS: Components = Components { ce: false, cos: true, tri: false };
    pub const TRI: Components = Components { ce: false, cos: false, tri: true };

    pub fn pick(&self, l: &LossBreakdown) -> f64 {
        let mut s = 0.0;
        if self.ce {
            s += l.l_ce;
        }
        if self.cos {
            s += l.l_cos;
        }
        if self.tri {
            s += l.l_tri;
        }
        s
    }
}

/// Loss and analytic gradient of the total loss of one example.
pub fn loss_and_gradient(
    params: &EncoderParams,
    ex: &TrainExample,
    margin: f64,
    use_negation: bool,
) -> (LossBreakdown, Gradient) {
    loss_and_gradient_of(params, ex, margin, use_negation, Components::ALL)
}

/// Like [`loss_and_gradient`] but differentiates only the chosen components.
/// At hinge kinks and at the cosine clamp the zero subgradient is used.
pub fn loss_and_gradient_of(
    params: &EncoderParams,
    ex: &TrainExample,
    margin: f64,
    use_negation: bool,
    which: Components,
) -> (LossBreakdown, Gradient) {
    let d = params.dim;
    let fwd = run_forward(params, ex, use_negation);
    let breakdown = losses(&fwd, ex.label, margin);
    let mut grad = Gradient::zeros(params);

    let c = &fwd.c.out;
    let p = &fwd.p.out;
    let mut dc = vec![0.0; d];
    let mut dp = vec![0.0; d];
    let mut dn = vec![0.0; d];

    if which.ce {
        let (lp, ln) = fwd.logits;
        let m = lp.max(ln);
        let lse = m + ((lp - m).exp() + (ln - m).exp()).ln();
        let truth = match ex.label {
            Stance::Support => 0,
            Stance::Oppose => 1,
        };
        let mut g = [(lp - lse).exp(), (ln - lse).exp()];
        g[truth] -= 1.0;

        let mut dfeat = vec![0.0; fwd.features.len()];
        for (fi, f) in fwd.features.iter().enumerate() {
            grad.head_w[2 * fi] += f * g[0];
            grad.head_w[2 * fi + 1] += f * g[1];
            dfeat[fi] = params.head_w[2 * fi] * g[0] + params.head_w[2 * fi + 1] * g[1];
        }
        grad.head_b[0] += g[0];
        grad.head_b[1] += g[1];

        // features = (c, p, |c - p|, c * p, cos(c, p))
        for i in 0..d {
            let diff = c[i] - p[i];
            let sign = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            dc[i] += dfeat[i] + dfeat[2 * d + i] * sign + dfeat[3 * d + i] * p[i];
            dp[i] += dfeat[d + i] - dfeat[2 * d + i] * sign + dfeat[3 * d + i] * c[i];
        }
        add_cosine_grad(c, p, dfeat[4 * d], &mut dc, &mut dp);
    }

    if which.cos {
        let coef = match ex.label {
            Stance::Support => -1.0,
            Stance::Oppose if cosine(c, p) > 0.0 => 1.0,
            Stance::Oppose => 0.0,
        };
        add_cosine_grad(c, p, coef, &mut dc, &mut dp);
    }

    if which.tri && breakdown.l_tri > 0.0 {
        if let Some(n) = &fwd.n {
            let (d_pos, d_neg) = match ex.label {
                Stance::Support => (&mut dp, &mut dn),
                Stance::Oppose => (&mut dn, &mut dp),
            };
            let (pos, neg) = triplet_sides(ex.label, p, &n.out);
            let dist_pos = l2_distance(c, pos);
            let dist_neg = l2_distance(c, neg);
            if dist_pos > 0.0 {
                for i in 0..d {
                    let u = (c[i] - pos[i]) / dist_pos;
                    dc[i] += u;
                    d_pos[i] -= u;
                }
            }
            if dist_neg > 0.0 {
                for i in 0..d {
                    let u = (c[i] - neg[i]) / dist_neg;
                    dc[i] -= u;
                    d_neg[i] += u;
                }
            }
        }
    }

    backprop_encoder(params, &fwd.c, &dc, &mut grad);
    backprop_encoder(params, &fwd.p, &dp, &mut grad);
    if let Some(n) = &fwd.n {
        backprop_encoder(params, n, &dn, &mut grad);
    }
    (breakdown, grad)
}

/// Adds `coef * d cos(a, b)` to `da` and `db`; nothing for zero vectors.
fn add_cosine_grad(a: &[f64], b: &[f64], coef: f64, da: &mut [f64], db: &mut [f64]) {
    if coef == 0.0 {
        return;
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return;
    }
    let cos = cosine(a, b);
    for i in 0..a.len() {
        da[i] += coef * (b[i] / (na * nb) - cos * a[i] / (na * na));
        db[i] += coef * (a[i] / (na * nb) - cos * b[i] / (nb * nb));
    }
}

fn backprop_encoder(params: &EncoderParams, trace: &EncodeTrace, d_out: &[f64], grad: &mut Gradient) {
    let d = params.dim;
    if d_out.iter().all(|g| *g == 0.0) {
        return;
    }
    let dz: Vec<f64> = trace
        .out
        .iter()
        .zip(d_out)
        .map(|(h, g)| g * (1.0 - h * h))
        .collect();
    let mut dmean = vec![0.0; d];
    for i in 0..d {
        grad.proj_b[i] += dz[i];
        let w_row = &params.proj_w[i * d..(i + 1) * d];
        let g_row = &mut grad.proj_w[i * d..(i + 1) * d];
        for j in 0..d {
            g_row[j] += dz[i] * trace.mean[j];
            dmean[j] += w_row[j] * dz[i];
        }
    }
    if trace.rows.is_empty() {
        return;
    }
    let inv = 1.0 / trace.rows.len() as f64;
    for &r in &trace.rows {
        let row = grad.embedding_row_mut(r);
        for j in 0..d {
            row[j] += dmean[j] * inv;
        }
    }
}

/// Sign pattern of every non-smooth point the loss passes through. Two
/// parameter settings with the same pattern lie on the same smooth piece, so
/// a finite difference between them is meaningful.
pub fn kink_pattern(params: &EncoderParams, ex: &TrainExample, margin: f64, use_negation: bool) -> Vec<i8> {
    let fwd = run_forward(params, ex, use_negation);
    let sgn = |x: f64| -> i8 {
        if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            0
        }
    };
    let c = &fwd.c.out;
    let p = &fwd.p.out;
    let mut pattern: Vec<i8> = c.iter().zip(p).map(|(a, b)| sgn(a - b)).collect();
    pattern.push(sgn(cosine(c, p)));
    if let Some(n) = &fwd.n {
        let (pos, neg) = triplet_sides(ex.label, p, &n.out);
        pattern.push(sgn(margin + l2_distance(c, pos) - l2_distance(c, neg)));
    }
    pattern
}

/// Mean loss over a dataset with fixed parameters.
pub fn dataset_loss(params: &EncoderParams, data: &[TrainExample], margin: f64, use_negation: bool) -> LossBreakdown {
    let mut acc = LossBreakdown::default();
    for ex in data {
        acc.accumulate(&loss(params, ex, margin, use_negation));
    }
    acc.scaled(1.0 / data.len().max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(flatten)]
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean training loss before the first update.
    pub initial: LossBreakdown,
    /// Mean training loss after each epoch.
    pub epochs: Vec<EpochRecord>,
    pub config: TrainConfig,
}

impl TrainHistory {
    pub fn final_loss(&self) -> LossBreakdown {
        self.epochs.last().map(|e| e.loss).unwrap_or(self.initial)
    }
}

/// Mini-batch training. Deterministic for a given `config.seed`.
pub fn train(
    mut params: EncoderParams,
    data: &[TrainExample],
    config: &TrainConfig,
) -> Result<(EncoderParams, TrainHistory)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let initial = dataset_loss(&params, data, config.margin, config.use_negation);
    if !initial.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: 0,
            step: 0,
            detail: format!("{initial:?}"),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut optimizer = Optimizer::new(config.optimizer, &params);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for (step, batch) in order.chunks(config.batch_size).enumerate() {
            let mut grad = Gradient::zeros(&params);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (l, g) = loss_and_gradient(&params, &data[i], config.margin, config.use_negation);
                if !l.is_finite() || !g.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        step,
                        detail: format!("example {i}: {l:?}"),
                    });
                }
                grad.add_scaled(&g, scale);
            }
            optimizer.step(&mut params, &grad, config.learning_rate);
        }
        let loss = dataset_loss(&params, data, config.margin, config.use_negation);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                step: usize::MAX,
                detail: format!("{loss:?}"),
            });
        }
        log::debug!("epoch {epoch}: total {:.5}", loss.total);
        epochs.push(EpochRecord { epoch, loss });
    }

    Ok((
        params,
        TrainHistory {
            initial,
            epochs,
            config: *config,
        },
    ))
}

/// Optimizer state. Embedding rows get state lazily, the first time they
/// receive a gradient; until then their state is zero and they do not move.
struct Optimizer {
    kind: OptimizerKind,
    step: u64,
    first: Gradient,
    second: Gradient,
}

impl Optimizer {
    fn new(kind: OptimizerKind, params: &EncoderParams) -> Self {
        Optimizer {
            kind,
            step: 0,
            first: Gradient::zeros(params),
            second: Gradient::zeros(params),
        }
    }

    fn step(&mut self, params: &mut EncoderParams, grad: &Gradient, lr: f64) {
        self.step += 1;
        for row in grad.embedding.keys() {
            self.first.embedding_row_mut(*row);
            self.second.embedding_row_mut(*row);
        }
        let d = params.dim;
        let zeros = vec![0.0; d];
        match self.kind {
            OptimizerKind::Sgd { momentum } => {
                let sgd = |p: &mut [f64], v: &mut [f64], g: &[f64]| {
                    for i in 0..p.len() {
                        v[i] = momentum * v[i] + g[i];
                        p[i] -= lr * v[i];
                    }
                };
                for (row, v) in self.first.embedding.iter_mut() {
                    let g = grad.embedding.get(row).unwrap_or(&zeros);
                    sgd(&mut params.embedding[row * d..(row + 1) * d], v, g);
                }
                sgd(&mut params.proj_w, &mut self.first.proj_w, &grad.proj_w);
                sgd(&mut params.proj_b, &mut self.first.proj_b, &grad.proj_b);
                sgd(&mut params.head_w, &mut self.first.head_w, &grad.head_w);
                sgd(&mut params.head_b, &mut self.first.head_b, &grad.head_b);
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                let adam = |p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
                    for i in 0..p.len() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                    }
                };
                for (row, m) in self.first.embedding.iter_mut() {
                    let v = self.second.embedding.get_mut(row).expect("state rows in sync");
                    let g = grad.embedding.get(row).unwrap_or(&zeros);
                    adam(&mut params.embedding[row * d..(row + 1) * d], m, v, g);
                }
                adam(&mut params.proj_w, &mut self.first.proj_w, &mut self.second.proj_w, &grad.proj_w);
                adam(&mut params.proj_b, &mut self.first.proj_b, &mut self.second.proj_b, &grad.proj_b);
                adam(&mut params.head_w, &mut self.first.head_w, &mut self.second.head_w, &grad.head_w);
                adam(&mut params.head_b, &mut self.first.head_b, &mut self.second.head_b, &grad.head_b);
            }
        }
    }
}
