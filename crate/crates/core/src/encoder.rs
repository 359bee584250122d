//! Shared-parameter sentence encoder and the two-logit stance head.
//!
//! A text is tokenized, each token is hashed (FNV-1a, 64 bit) into one of
//! `hash_size` embedding rows, the rows are averaged and the mean goes
//! through a single `tanh` projection. The same parameters encode the claim,
//! the perspective and the negated perspective.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenizer::tokenize;

pub const DEFAULT_HASH_SIZE: usize = 1 << 16;
pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_INIT_SCALE: f64 = 0.05;

const CHECKPOINT_MAGIC: &[u8; 8] = b"TRBDCKPT";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub hash_size: usize,
    pub dim: usize,
    /// Initial weights are drawn from `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            hash_size: DEFAULT_HASH_SIZE,
            dim: DEFAULT_DIM,
            init_scale: DEFAULT_INIT_SCALE,
        }
    }
}

/// All trainable weights. Matrices are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub hash_size: usize,
    pub dim: usize,
    pub seed: u64,
    /// `hash_size x dim`
    pub embedding: Vec<f64>,
    /// `dim x dim`, row = output unit.
    pub proj_w: Vec<f64>,
    pub proj_b: Vec<f64>,
    /// `(4 dim + 1) x 2`, row = feature, column 0 = support, 1 = oppose.
    pub head_w: Vec<f64>,
    pub head_b: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVector(pub Vec<f64>);

impl LatentVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Claim, perspective and (when some rule matched) the negated perspective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputTriple {
    pub claim: String,
    pub perspective: String,
    pub negated: Option<String>,
}

impl InputTriple {
    pub fn new(claim: impl Into<String>, perspective: impl Into<String>, negated: Option<String>) -> Self {
        InputTriple {
            claim: claim.into(),
            perspective: perspective.into(),
            negated,
        }
    }
}

/// Everything the decision procedures look at for one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signals {
    /// Support logit.
    pub lpos: f64,
    /// Oppose logit.
    pub lneg: f64,
    /// `||claim - perspective||_2`
    pub dist_p: f64,
    /// `||claim - negated||_2`, absent without a negated perspective.
    pub dist_np: Option<f64>,
    pub cos_p: f64,
    pub cos_np: Option<f64>,
}

impl Signals {
    pub fn has_negation(&self) -> bool {
        self.dist_np.is_some()
    }

    pub fn logit_gap(&self) -> f64 {
        (self.lpos - self.lneg).abs()
    }

    pub fn distance_gap(&self) -> Option<f64> {
        self.dist_np.map(|np| (self.dist_p - np).abs())
    }
}

/// Anything that turns an input triple into [`Signals`]. The evaluation
/// protocols only depend on this.
pub trait SignalModel {
    fn signals(&self, triple: &InputTriple) -> Signals;
}

impl SignalModel for EncoderParams {
    fn signals(&self, triple: &InputTriple) -> Signals {
        self.forward(triple)
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// `(c, x, |c - x|, c * x, cos(c, x))`, length `4 d + 1`.
///
/// Panics if the two vectors differ in length.
pub fn combine_features(c: &LatentVector, x: &LatentVector) -> Vec<f64> {
    combine_slices(&c.0, &x.0)
}

pub(crate) fn combine_slices(c: &[f64], x: &[f64]) -> Vec<f64> {
    assert_eq!(c.len(), x.len(), "combine_features: dimension mismatch");
    let d = c.len();
    let mut f = Vec::with_capacity(4 * d + 1);
    f.extend_from_slice(c);
    f.extend_from_slice(x);
    f.extend(c.iter().zip(x).map(|(a, b)| (a - b).abs()));
    f.extend(c.iter().zip(x).map(|(a, b)| a * b));
    f.push(cosine(c, x));
    f
}

/// Intermediate values of one encoding, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct EncodeTrace {
    pub rows: Vec<usize>,
    pub mean: Vec<f64>,
    pub out: Vec<f64>,
}

impl EncoderParams {
    pub fn init(config: EncoderConfig, seed: u64) -> Self {
        assert!(config.hash_size > 0 && config.dim > 0, "empty encoder dimensions");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = config.init_scale;
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| if s > 0.0 { rng.gen_range(-s..=s) } else { 0.0 })
                .collect()
        };
        let d = config.dim;
        let embedding = draw(config.hash_size * d);
        let proj_w = draw(d * d);
        let proj_b = draw(d);
        let head_w = draw((4 * d + 1) * 2);
        let hb = draw(2);
        EncoderParams {
            hash_size: config.hash_size,
            dim: d,
            seed,
            embedding,
            proj_w,
            proj_b,
            head_w,
            head_b: [hb[0], hb[1]],
        }
    }

    pub fn feature_len(&self) -> usize {
        4 * self.dim + 1
    }

    pub fn num_params(&self) -> usize {
        self.embedding.len() + self.proj_w.len() + self.proj_b.len() + self.head_w.len() + 2
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(token.as_bytes()) % self.hash_size as u64) as usize
    }

    pub fn encode(&self, text: &str) -> LatentVector {
        LatentVector(self.encode_trace(text).out)
    }

    pub(crate) fn encode_trace(&self, text: &str) -> EncodeTrace {
        let d = self.dim;
        let rows: Vec<usize> = tokenize(text).iter().map(|t| self.bucket(t)).collect();
        let mut mean = vec![0.0; d];
        if !rows.is_empty() {
            for &r in &rows {
                for (m, e) in mean.iter_mut().zip(&self.embedding[r * d..(r + 1) * d]) {
                    *m += e;
                }
            }
            let inv = 1.0 / rows.len() as f64;
            mean.iter_mut().for_each(|m| *m *= inv);
        }
        let out = (0..d)
            .map(|i| {
                let row = &self.proj_w[i * d..(i + 1) * d];
                let z: f64 = self.proj_b[i] + row.iter().zip(&mean).map(|(w, m)| w * m).sum::<f64>();
                z.tanh()
            })
            .collect();
        EncodeTrace { rows, mean, out }
    }

    /// Affine head over a combined feature vector: `(support, oppose)`.
    pub fn classify(&self, features: &[f64]) -> (f64, f64) {
        assert_eq!(features.len(), self.feature_len(), "classify: feature length");
        let mut logits = self.head_b;
        for (f, w) in features.iter().zip(self.head_w.chunks_exact(2)) {
            logits[0] += f * w[0];
            logits[1] += f * w[1];
        }
        (logits[0], logits[1])
    }

    pub fn forward(&self, triple: &InputTriple) -> Signals {
        let c = self.encode(&triple.claim);
        let p = self.encode(&triple.perspective);
        let (lpos, lneg) = self.classify(&combine_features(&c, &p));
        let np = triple.negated.as_deref().map(|t| self.encode(t));
        Signals {
            lpos,
            lneg,
            dist_p: l2_distance(&c.0, &p.0),
            dist_np: np.as_ref().map(|n| l2_distance(&c.0, &n.0)),
            cos_p: cosine(&c.0, &p.0),
            cos_np: np.as_ref().map(|n| cosine(&c.0, &n.0)),
        }
    }

    /// Flat view in the fixed order embedding, proj_w, proj_b, head_w, head_b.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        v.extend_from_slice(&self.embedding);
        v.extend_from_slice(&self.proj_w);
        v.extend_from_slice(&self.proj_b);
        v.extend_from_slice(&self.head_w);
        v.extend_from_slice(&self.head_b);
        v
    }

    /// Mutable access to the `i`-th parameter of [`EncoderParams::flatten`].
    pub fn param_mut(&mut self, mut i: usize) -> &mut f64 {
        for block in [&mut self.embedding, &mut self.proj_w, &mut self.proj_b, &mut self.head_w] {
            if i < block.len() {
                return &mut block[i];
            }
            i -= block.len();
        }
        &mut self.head_b[i]
    }

    pub fn all_finite(&self) -> bool {
        self.flatten().iter().all(|x| x.is_finite())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(40 + 8 * self.num_params());
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.hash_size as u64).to_le_bytes());
        buf.extend_from_slice(&(self.dim as u64).to_le_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        for x in self.flatten() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Loads and rejects a checkpoint whose dimensions differ from `expected`.
    pub fn load_expecting(path: impl AsRef<Path>, expected: EncoderConfig) -> Result<Self> {
        let params = Self::load(path)?;
        if params.dim != expected.dim {
            return Err(Error::DimensionMismatch {
                expected: expected.dim,
                actual: params.dim,
            });
        }
        if params.hash_size != expected.hash_size {
            return Err(Error::DimensionMismatch {
                expected: expected.hash_size,
                actual: params.hash_size,
            });
        }
        Ok(params)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 8 + 4 + 8 + 8 + 8;
        if bytes.len() < HEADER || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let hash_size = u64_at(12) as usize;
        let dim = u64_at(20) as usize;
        let seed = u64_at(28);
        if hash_size == 0 || dim == 0 {
            return Err(Error::Checkpoint("zero dimension in header".into()));
        }
        let n = hash_size
            .checked_mul(dim)
            .and_then(|e| e.checked_add(dim * dim + dim + (4 * dim + 1) * 2 + 2))
            .ok_or_else(|| Error::Checkpoint("header dimensions overflow".into()))?;
        let payload = &bytes[HEADER..];
        if payload.len() != n * 8 {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: payload.len() / 8,
            });
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut take = |k: usize| -> Vec<f64> { values.by_ref().take(k).collect() };
        let embedding = take(hash_size * dim);
        let proj_w = take(dim * dim);
        let proj_b = take(dim);
        let head_w = take((4 * dim + 1) * 2);
        let hb = take(2);
        let params = EncoderParams {
            hash_size,
            dim,
            seed,
            embedding,
            proj_w,
            proj_b,
            head_w,
            head_b: [hb[0], hb[1]],
        };
        if !params.all_finite() {
            return Err(Error::Checkpoint("non-finite weight".into()));
        }
        Ok(params)
    }
}

/// Sparse-in-embedding gradient with the same layout as [`EncoderParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub dim: usize,
    /// Embedding row -> gradient of that row; untouched rows are zero.
    pub embedding: BTreeMap<usize, Vec<f64>>,
    pub proj_w: Vec<f64>,
    pub proj_b: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: [f64; 2],
}

impl Gradient {
    pub fn zeros(params: &EncoderParams) -> Self {
        let d = params.dim;
        Gradient {
            dim: d,
            embedding: BTreeMap::new(),
            proj_w: vec![0.0; d * d],
            proj_b: vec![0.0; d],
            head_w: vec![0.0; (4 * d + 1) * 2],
            head_b: [0.0; 2],
        }
    }

    pub fn embedding_row_mut(&mut self, row: usize) -> &mut Vec<f64> {
        let d = self.dim;
        self.embedding.entry(row).or_insert_with(|| vec![0.0; d])
    }

    pub fn add_scaled(&mut self, other: &Gradient, scale: f64) {
        for (row, g) in &other.embedding {
            let mine = self.embedding_row_mut(*row);
            mine.iter_mut().zip(g).for_each(|(a, b)| *a += scale * b);
        }
        axpy(&mut self.proj_w, &other.proj_w, scale);
        axpy(&mut self.proj_b, &other.proj_b, scale);
        axpy(&mut self.head_w, &other.head_w, scale);
        axpy(&mut self.head_b, &other.head_b, scale);
    }

    /// Dense vector in [`EncoderParams::flatten`] order.
    pub fn to_dense(&self, hash_size: usize) -> Vec<f64> {
        let d = self.dim;
        let mut v = vec![0.0; hash_size * d];
        for (row, g) in &self.embedding {
            v[row * d..(row + 1) * d].copy_from_slice(g);
        }
        v.extend_from_slice(&self.proj_w);
        v.extend_from_slice(&self.proj_b);
        v.extend_from_slice(&self.head_w);
        v.extend_from_slice(&self.head_b);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.embedding.values().flatten().all(|x| x.is_finite())
            && self.proj_w.iter().chain(&self.proj_b).chain(&self.head_w).chain(&self.head_b).all(|x| x.is_finite())
    }
}

fn axpy(dst: &mut [f64], src: &[f64], scale: f64) {
    dst.iter_mut().zip(src).for_each(|(a, b)| *a += scale * b);
}
