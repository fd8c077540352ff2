//! Token-embedding aggregation strategies and vector math.
//!
//! The main scheme is importance-weighted mean pooling,
//! `v = sum(alpha_i * h_i) / sum(alpha_i)`, with alpha_i looked up from the
//! token's lexical category. The full menu (mean, max, last, and the two
//! concatenations) exists for ablations. Summation runs in sequential index
//! order so embeddings reproduce byte-for-byte across runs; compensated
//! summation is available behind an option.

use serde::{Deserialize, Serialize};

use crate::lexicon::{token_weight, WeightingScheme};

#[derive(Debug, thiserror::Error)]
pub enum PoolError {
    #[error("token-embedding sequence must be non-empty")]
    EmptySequence,
    #[error("sequence shape invalid: {0}")]
    BadShape(String),
    #[error("all token weights are zero; weighted pooling undefined")]
    ZeroWeightSum,
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
}

/// Per-token hidden-state vectors paired with their surface tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEmbeddingSequence {
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

impl TokenEmbeddingSequence {
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self, PoolError> {
        if tokens.is_empty() || vectors.is_empty() {
            return Err(PoolError::EmptySequence);
        }
        if tokens.len() != vectors.len() {
            return Err(PoolError::BadShape(format!(
                "{} tokens vs {} vectors",
                tokens.len(),
                vectors.len()
            )));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(PoolError::BadShape("zero-dimensional vectors".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(PoolError::BadShape(format!(
                    "vector {i} has dim {} but expected {dim}",
                    v.len()
                )));
            }
            if let Some(j) = v.iter().position(|x| !x.is_finite()) {
                return Err(PoolError::NonFinite { index: i * dim + j });
            }
        }
        Ok(Self { tokens, vectors, dim })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one token
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

/// A pooled (or otherwise produced) fixed-dimension embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    normalized: bool,
}

impl EmbeddingVector {
    /// Wraps raw values as an unnormalized embedding.
    pub fn raw(values: Vec<f64>) -> Result<Self, PoolError> {
        if values.is_empty() {
            return Err(PoolError::BadShape("empty embedding".into()));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(PoolError::NonFinite { index: i });
        }
        Ok(Self {
            values,
            normalized: false,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Snaps every coordinate to its nearest f32. Cache files and the wire
    /// format carry 32-bit floats, so gallery entries are stored on the f32
    /// grid to make save/load round-trips bit-exact.
    pub fn quantize_to_f32(&self) -> EmbeddingVector {
        EmbeddingVector {
            values: self.values.iter().map(|&x| x as f32 as f64).collect(),
            normalized: self.normalized,
        }
    }

    pub fn to_f32_vec(&self) -> Vec<f32> {
        self.values.iter().map(|&x| x as f32).collect()
    }

    pub fn from_f32_slice(values: &[f32], normalized: bool) -> Result<Self, PoolError> {
        let mut v = Self::raw(values.iter().map(|&x| x as f64).collect())?;
        v.normalized = normalized;
        Ok(v)
    }
}

/// Dot product of two equal-dimension vectors.
pub fn dot(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, PoolError> {
    if a.dim() != b.dim() {
        return Err(PoolError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x * y)
        .sum())
}

/// Cosine similarity, normalizing explicitly. For already-normalized inputs
/// this agrees with `dot` to within float rounding.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, PoolError> {
    let d = dot(a, b)?;
    let na = a.norm();
    let nb = b.norm();
    if na <= f64::EPSILON || nb <= f64::EPSILON {
        return Err(PoolError::ZeroVector);
    }
    Ok(d / (na * nb))
}

/// The Table-4 menu of aggregation strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum PoolingStrategy {
    Weighted(WeightingScheme),
    Mean,
    Max,
    Last,
    MeanConcatLast,
    MeanConcatMax,
}

impl PoolingStrategy {
    pub fn kind(&self) -> PoolingKind {
        match self {
            PoolingStrategy::Weighted(_) => PoolingKind::Weighted,
            PoolingStrategy::Mean => PoolingKind::Mean,
            PoolingStrategy::Max => PoolingKind::Max,
            PoolingStrategy::Last => PoolingKind::Last,
            PoolingStrategy::MeanConcatLast => PoolingKind::MeanConcatLast,
            PoolingStrategy::MeanConcatMax => PoolingKind::MeanConcatMax,
        }
    }

    /// Output dimension for an input of dimension `d`: concatenating
    /// strategies produce 2d, everything else d.
    pub fn output_dim(&self, d: usize) -> usize {
        self.kind().output_dim(d)
    }
}

/// Serializable strategy tag, without the weighting scheme payload. This is
/// what cache files and reports record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingKind {
    Weighted,
    Mean,
    Max,
    Last,
    MeanConcatLast,
    MeanConcatMax,
}

impl PoolingKind {
    pub const ALL: [PoolingKind; 6] = [
        PoolingKind::Weighted,
        PoolingKind::Mean,
        PoolingKind::Max,
        PoolingKind::Last,
        PoolingKind::MeanConcatLast,
        PoolingKind::MeanConcatMax,
    ];

    pub fn code(self) -> u8 {
        match self {
            PoolingKind::Weighted => 0,
            PoolingKind::Mean => 1,
            PoolingKind::Max => 2,
            PoolingKind::Last => 3,
            PoolingKind::MeanConcatLast => 4,
            PoolingKind::MeanConcatMax => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            PoolingKind::Weighted => "weighted",
            PoolingKind::Mean => "mean",
            PoolingKind::Max => "max",
            PoolingKind::Last => "last",
            PoolingKind::MeanConcatLast => "mean+last",
            PoolingKind::MeanConcatMax => "mean+max",
        }
    }

    pub fn output_dim(self, d: usize) -> usize {
        match self {
            PoolingKind::MeanConcatLast | PoolingKind::MeanConcatMax => 2 * d,
            _ => d,
        }
    }

    /// Materializes a strategy; Weighted borrows the given scheme.
    pub fn to_strategy(self, scheme: &WeightingScheme) -> PoolingStrategy {
        match self {
            PoolingKind::Weighted => PoolingStrategy::Weighted(scheme.clone()),
            PoolingKind::Mean => PoolingStrategy::Mean,
            PoolingKind::Max => PoolingStrategy::Max,
            PoolingKind::Last => PoolingStrategy::Last,
            PoolingKind::MeanConcatLast => PoolingStrategy::MeanConcatLast,
            PoolingKind::MeanConcatMax => PoolingStrategy::MeanConcatMax,
        }
    }
}

impl std::fmt::Display for PoolingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PoolingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weighted" => Ok(PoolingKind::Weighted),
            "mean" => Ok(PoolingKind::Mean),
            "max" => Ok(PoolingKind::Max),
            "last" => Ok(PoolingKind::Last),
            "mean+last" | "mean_concat_last" | "meanlast" => Ok(PoolingKind::MeanConcatLast),
            "mean+max" | "mean_concat_max" | "meanmax" => Ok(PoolingKind::MeanConcatMax),
            other => Err(format!("unknown pooling strategy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PoolOptions {
    /// Use Kahan compensated summation for the mean/weighted accumulators.
    pub compensated: bool,
}

/// Aggregates the sequence into one embedding under the strategy. The result
/// is not yet L2-normalized.
pub fn pool(
    seq: &TokenEmbeddingSequence,
    strategy: &PoolingStrategy,
) -> Result<EmbeddingVector, PoolError> {
    pool_with(seq, strategy, PoolOptions::default())
}

pub fn pool_with(
    seq: &TokenEmbeddingSequence,
    strategy: &PoolingStrategy,
    options: PoolOptions,
) -> Result<EmbeddingVector, PoolError> {
    let values = match strategy {
        PoolingStrategy::Weighted(scheme) => {
            let weights: Vec<f64> = seq
                .tokens()
                .iter()
                .map(|t| token_weight(t, scheme))
                .collect();
            weighted_sum(seq.vectors(), &weights, options)?
        }
        PoolingStrategy::Mean => mean_pool(seq.vectors(), options),
        PoolingStrategy::Max => max_pool(seq.vectors()),
        PoolingStrategy::Last => seq.vectors().last().expect("non-empty").clone(),
        PoolingStrategy::MeanConcatLast => {
            let mut v = mean_pool(seq.vectors(), options);
            v.extend_from_slice(seq.vectors().last().expect("non-empty"));
            v
        }
        PoolingStrategy::MeanConcatMax => {
            let mut v = mean_pool(seq.vectors(), options);
            v.extend_from_slice(&max_pool(seq.vectors()));
            v
        }
    };
    EmbeddingVector::raw(values)
}

fn weighted_sum(
    vectors: &[Vec<f64>],
    weights: &[f64],
    options: PoolOptions,
) -> Result<Vec<f64>, PoolError> {
    let dim = vectors[0].len();
    let weight_sum: f64 = weights.iter().sum();
    if weight_sum <= 0.0 {
        return Err(PoolError::ZeroWeightSum);
    }
    let mut acc = vec![0.0f64; dim];
    if options.compensated {
        let mut comp = vec![0.0f64; dim];
        for (vec, &w) in vectors.iter().zip(weights) {
            for k in 0..dim {
                let term = w * vec[k] - comp[k];
                let next = acc[k] + term;
                comp[k] = (next - acc[k]) - term;
                acc[k] = next;
            }
        }
    } else {
        for (vec, &w) in vectors.iter().zip(weights) {
            for k in 0..dim {
                acc[k] += w * vec[k];
            }
        }
    }
    for x in &mut acc {
        *x /= weight_sum;
    }
    Ok(acc)
}

fn mean_pool(vectors: &[Vec<f64>], options: PoolOptions) -> Vec<f64> {
    let dim = vectors[0].len();
    let n = vectors.len() as f64;
    let mut acc = vec![0.0f64; dim];
    if options.compensated {
        let mut comp = vec![0.0f64; dim];
        for vec in vectors {
            for k in 0..dim {
                let term = vec[k] - comp[k];
                let next = acc[k] + term;
                comp[k] = (next - acc[k]) - term;
                acc[k] = next;
            }
        }
    } else {
        for vec in vectors {
            for k in 0..dim {
                acc[k] += vec[k];
            }
        }
    }
    for x in &mut acc {
        *x /= n;
    }
    acc
}

fn max_pool(vectors: &[Vec<f64>]) -> Vec<f64> {
    let dim = vectors[0].len();
    let mut out = vectors[0].clone();
    for vec in &vectors[1..] {
        for k in 0..dim {
            if vec[k] > out[k] {
                out[k] = vec[k];
            }
        }
    }
    out
}

/// Scales the vector to unit L2 norm, preserving direction.
pub fn l2_normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, PoolError> {
    let norm = v.norm();
    if norm <= f64::EPSILON {
        return Err(PoolError::ZeroVector);
    }
    let values = v.values.iter().map(|x| x / norm).collect();
    Ok(EmbeddingVector {
        values,
        normalized: true,
    })
}
