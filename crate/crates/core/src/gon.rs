//! Reference math for gait-oriented normalization (GON).
//!
//! A feature map is cut into horizontal strips; each strip is normalized by
//! its own mean and population standard deviation, taken across channels,
//! strip rows, and width, per batch element:
//!
//! ```text
//! out = gamma * (x - mu) / (sigma + eps) + beta
//! ```
//!
//! The strips are concatenated back in their original vertical order. The
//! two-layer GON-FC head applies a linear map and this normalization twice
//! per strip. Statistics use fixed-order pairwise summation, so outputs are
//! bit-stable run to run.

use thiserror::Error;

use crate::math::{pairwise_mean, pairwise_sum};

#[derive(Debug, Error, PartialEq)]
pub enum GonError {
    #[error("feature dims must all be at least 1, got {n}x{c}x{h}x{w}")]
    BadDims { n: usize, c: usize, h: usize, w: usize },
    #[error("dims imply {expected} values, got {got}")]
    ValueCountMismatch { expected: usize, got: usize },
    #[error("value {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("strip partition is empty")]
    EmptyPartition,
    #[error("strip {index} has zero height")]
    ZeroStripHeight { index: usize },
    #[error("cannot split height {height} into {strips} strips of at least one row")]
    BadSplit { height: usize, strips: usize },
    #[error("partition covers {partition} rows, map height is {height}")]
    PartitionMismatch { partition: usize, height: usize },
    #[error("batch index {batch} out of range for batch size {n}")]
    BatchOutOfRange { batch: usize, n: usize },
    #[error("params describe {got} strips, partition has {expected}")]
    StripCountMismatch { expected: usize, got: usize },
    #[error("strip {strip}: affine vectors have {got} channels, feature has {expected}")]
    ChannelCountMismatch { strip: usize, expected: usize, got: usize },
    #[error("strip {strip} of batch {batch} is constant and epsilon is zero")]
    ConstantStrip { batch: usize, strip: usize },
    #[error("strip {strip}, stage {stage}: vector is constant and epsilon is zero")]
    ConstantVector { strip: usize, stage: usize },
    #[error("epsilon {value} must be non-negative and finite")]
    BadEpsilon { value: f64 },
    #[error("strip {strip}: affine parameters must be finite")]
    NonFiniteParam { strip: usize },
    #[error("weight matrix rows have inconsistent lengths")]
    RaggedWeight,
    #[error("bias has {got} entries, weight has {expected} output rows")]
    BiasLengthMismatch { expected: usize, got: usize },
    #[error("weight or bias entry is not finite")]
    NonFiniteWeight,
    #[error("strip {strip}: second layer consumes {got}, first layer produces {expected}")]
    LayerChainMismatch { strip: usize, expected: usize, got: usize },
    #[error("strip {strip}: input vector has {got} entries, first layer consumes {expected}")]
    VectorDimMismatch { strip: usize, expected: usize, got: usize },
    #[error("features describe {got} strips, weights have {expected}")]
    FeatureCountMismatch { expected: usize, got: usize },
}

/// Dense real tensor, row-major N-C-H-W.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(n: usize, c: usize, h: usize, w: usize, values: Vec<f64>) -> Result<Self, GonError> {
        if n == 0 || c == 0 || h == 0 || w == 0 {
            return Err(GonError::BadDims { n, c, h, w });
        }
        let expected = n * c * h * w;
        if values.len() != expected {
            return Err(GonError::ValueCountMismatch { expected, got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GonError::NonFiniteValue { index });
        }
        Ok(FeatureMap { n, c, h, w, values })
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn index(&self, n: usize, c: usize, h: usize, w: usize) -> usize {
        ((n * self.c + c) * self.h + h) * self.w + w
    }

    pub fn get(&self, n: usize, c: usize, h: usize, w: usize) -> f64 {
        self.values[self.index(n, c, h, w)]
    }
}

/// Horizontal strip heights, top to bottom, summing to the map height.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripPartition {
    heights: Vec<usize>,
}

impl StripPartition {
    pub fn new(heights: Vec<usize>) -> Result<Self, GonError> {
        if heights.is_empty() {
            return Err(GonError::EmptyPartition);
        }
        if let Some(index) = heights.iter().position(|h| *h == 0) {
            return Err(GonError::ZeroStripHeight { index });
        }
        Ok(StripPartition { heights })
    }

    /// Splits `height` into `strips` near-equal strips; when it does not
    /// divide evenly, the topmost strips take one extra row each.
    pub fn equal_split(height: usize, strips: usize) -> Result<Self, GonError> {
        if strips == 0 || strips > height {
            return Err(GonError::BadSplit { height, strips });
        }
        let base = height / strips;
        let extra = height % strips;
        let heights = (0..strips).map(|i| base + usize::from(i < extra)).collect();
        StripPartition::new(heights)
    }

    pub fn heights(&self) -> &[usize] {
        &self.heights
    }

    pub fn strip_count(&self) -> usize {
        self.heights.len()
    }

    pub fn total(&self) -> usize {
        self.heights.iter().sum()
    }

    fn check_against(&self, map: &FeatureMap) -> Result<(), GonError> {
        if self.total() != map.h {
            return Err(GonError::PartitionMismatch { partition: self.total(), height: map.h });
        }
        Ok(())
    }

    /// Start row of each strip.
    fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.heights.len());
        let mut acc = 0;
        for h in &self.heights {
            offsets.push(acc);
            acc += h;
        }
        offsets
    }
}

/// Affine rescaling applied after normalization. Scalar mode is one pair per
/// strip (the literal formula); per-channel mode follows the layer-norm
/// convention with one pair per channel.
#[derive(Debug, Clone, PartialEq)]
pub enum GonAffine {
    Scalar { gamma: f64, beta: f64 },
    PerChannel { gamma: Vec<f64>, beta: Vec<f64> },
}

/// Per-strip affine parameters plus the shared epsilon added to sigma.
#[derive(Debug, Clone, PartialEq)]
pub struct GonParams {
    strips: Vec<GonAffine>,
    epsilon: f64,
}

/// Default epsilon: keeps constant strips finite without visibly perturbing
/// normalized scales.
pub const DEFAULT_EPSILON: f64 = 1e-5;

impl GonParams {
    pub fn new(strips: Vec<GonAffine>, epsilon: f64) -> Result<Self, GonError> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(GonError::BadEpsilon { value: epsilon });
        }
        for (i, affine) in strips.iter().enumerate() {
            let finite = match affine {
                GonAffine::Scalar { gamma, beta } => gamma.is_finite() && beta.is_finite(),
                GonAffine::PerChannel { gamma, beta } => {
                    gamma.iter().chain(beta).all(|v| v.is_finite())
                }
            };
            if !finite {
                return Err(GonError::NonFiniteParam { strip: i });
            }
        }
        Ok(GonParams { strips, epsilon })
    }

    pub fn scalar(pairs: &[(f64, f64)], epsilon: f64) -> Result<Self, GonError> {
        let strips = pairs
            .iter()
            .map(|(gamma, beta)| GonAffine::Scalar { gamma: *gamma, beta: *beta })
            .collect();
        GonParams::new(strips, epsilon)
    }

    /// gamma = 1, beta = 0 for every strip.
    pub fn identity(strip_count: usize, epsilon: f64) -> Self {
        GonParams::scalar(&vec![(1.0, 0.0); strip_count], epsilon)
            .expect("identity parameters are finite")
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn strip_count(&self) -> usize {
        self.strips.len()
    }

    pub fn strip(&self, i: usize) -> &GonAffine {
        &self.strips[i]
    }
}

/// Per-strip mean and population standard deviation for one batch element.
#[derive(Debug, Clone, PartialEq)]
pub struct GonStats {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

fn strip_values(map: &FeatureMap, batch: usize, row0: usize, rows: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(map.c * rows * map.w);
    for c in 0..map.c {
        for h in row0..row0 + rows {
            let base = map.index(batch, c, h, 0);
            out.extend_from_slice(&map.values[base..base + map.w]);
        }
    }
    out
}

fn mean_and_sigma(values: &[f64]) -> (f64, f64) {
    let mu = pairwise_mean(values);
    let squares: Vec<f64> = values.iter().map(|v| (v - mu) * (v - mu)).collect();
    // Population variance: divide by n exactly, not n-1.
    let var = pairwise_sum(&squares) / values.len() as f64;
    (mu, var.sqrt())
}

/// Strip statistics for one batch element.
pub fn gon_stats(
    map: &FeatureMap,
    strips: &StripPartition,
    batch: usize,
) -> Result<GonStats, GonError> {
    strips.check_against(map)?;
    if batch >= map.n {
        return Err(GonError::BatchOutOfRange { batch, n: map.n });
    }
    let mut mu = Vec::with_capacity(strips.strip_count());
    let mut sigma = Vec::with_capacity(strips.strip_count());
    for (row0, rows) in strips.offsets().into_iter().zip(strips.heights()) {
        let values = strip_values(map, batch, row0, *rows);
        let (m, s) = mean_and_sigma(&values);
        mu.push(m);
        sigma.push(s);
    }
    Ok(GonStats { mu, sigma })
}

/// Normalizes every strip of every batch element and re-concatenates the
/// strips in their original order. Output shape equals input shape.
pub fn gon_forward(
    map: &FeatureMap,
    strips: &StripPartition,
    params: &GonParams,
) -> Result<FeatureMap, GonError> {
    strips.check_against(map)?;
    if params.strip_count() != strips.strip_count() {
        return Err(GonError::StripCountMismatch {
            expected: strips.strip_count(),
            got: params.strip_count(),
        });
    }
    for (i, affine) in params.strips.iter().enumerate() {
        if let GonAffine::PerChannel { gamma, beta } = affine {
            if gamma.len() != map.c || beta.len() != map.c {
                return Err(GonError::ChannelCountMismatch {
                    strip: i,
                    expected: map.c,
                    got: gamma.len().max(beta.len()),
                });
            }
        }
    }

    let mut out = map.values.clone();
    let offsets = strips.offsets();
    for batch in 0..map.n {
        for (i, (row0, rows)) in offsets.iter().zip(strips.heights()).enumerate() {
            let values = strip_values(map, batch, *row0, *rows);
            let (mu, sigma) = mean_and_sigma(&values);
            let denom = sigma + params.epsilon;
            if denom == 0.0 {
                return Err(GonError::ConstantStrip { batch, strip: i });
            }
            for c in 0..map.c {
                let (gamma, beta) = match &params.strips[i] {
                    GonAffine::Scalar { gamma, beta } => (*gamma, *beta),
                    GonAffine::PerChannel { gamma, beta } => (gamma[c], beta[c]),
                };
                for h in *row0..*row0 + *rows {
                    let base = map.index(batch, c, h, 0);
                    for w in 0..map.w {
                        out[base + w] = gamma * (map.values[base + w] - mu) / denom + beta;
                    }
                }
            }
        }
    }
    FeatureMap::new(map.n, map.c, map.h, map.w, out)
}

/// One dense layer: `out = weight · in + bias`, `weight[row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    weight: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl LinearMap {
    pub fn new(weight: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self, GonError> {
        let cols = weight.first().map(|r| r.len()).unwrap_or(0);
        if weight.iter().any(|r| r.len() != cols) {
            return Err(GonError::RaggedWeight);
        }
        if bias.len() != weight.len() {
            return Err(GonError::BiasLengthMismatch { expected: weight.len(), got: bias.len() });
        }
        let finite = weight.iter().flatten().chain(&bias).all(|v| v.is_finite());
        if !finite {
            return Err(GonError::NonFiniteWeight);
        }
        Ok(LinearMap { weight, bias })
    }

    pub fn identity(dim: usize) -> Self {
        let weight = (0..dim)
            .map(|r| (0..dim).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        LinearMap::new(weight, vec![0.0; dim]).expect("identity weights are well-formed")
    }

    pub fn in_dim(&self) -> usize {
        self.weight.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn out_dim(&self) -> usize {
        self.weight.len()
    }

    fn apply(&self, input: &[f64]) -> Vec<f64> {
        self.weight
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                let terms: Vec<f64> = row.iter().zip(input).map(|(w, x)| w * x).collect();
                pairwise_sum(&terms) + b
            })
            .collect()
    }
}

/// Per-strip pairs of dense layers for the two-layer head.
#[derive(Debug, Clone, PartialEq)]
pub struct FcWeights {
    layers: Vec<(LinearMap, LinearMap)>,
}

impl FcWeights {
    pub fn new(layers: Vec<(LinearMap, LinearMap)>) -> Result<Self, GonError> {
        for (i, (first, second)) in layers.iter().enumerate() {
            if second.in_dim() != first.out_dim() {
                return Err(GonError::LayerChainMismatch {
                    strip: i,
                    expected: first.out_dim(),
                    got: second.in_dim(),
                });
            }
        }
        Ok(FcWeights { layers })
    }

    pub fn strip_count(&self) -> usize {
        self.layers.len()
    }
}

fn vector_gon(
    input: &[f64],
    affine: &GonAffine,
    epsilon: f64,
    strip: usize,
    stage: usize,
) -> Result<Vec<f64>, GonError> {
    let (mu, sigma) = mean_and_sigma(input);
    let denom = sigma + epsilon;
    if denom == 0.0 {
        return Err(GonError::ConstantVector { strip, stage });
    }
    match affine {
        GonAffine::Scalar { gamma, beta } => {
            Ok(input.iter().map(|v| gamma * (v - mu) / denom + beta).collect())
        }
        GonAffine::PerChannel { gamma, beta } => {
            if gamma.len() != input.len() || beta.len() != input.len() {
                return Err(GonError::ChannelCountMismatch {
                    strip,
                    expected: input.len(),
                    got: gamma.len().max(beta.len()),
                });
            }
            Ok(input
                .iter()
                .zip(gamma.iter().zip(beta))
                .map(|(v, (g, b))| g * (v - mu) / denom + b)
                .collect())
        }
    }
}

/// Two-layer head applied to each strip's vector independently:
/// linear, normalize, linear, normalize. The strip's affine pair is used
/// after both layers.
pub fn gon_fc_forward(
    features: &[Vec<f64>],
    weights: &FcWeights,
    params: &GonParams,
) -> Result<Vec<Vec<f64>>, GonError> {
    if features.len() != weights.strip_count() {
        return Err(GonError::FeatureCountMismatch {
            expected: weights.strip_count(),
            got: features.len(),
        });
    }
    if params.strip_count() != weights.strip_count() {
        return Err(GonError::StripCountMismatch {
            expected: weights.strip_count(),
            got: params.strip_count(),
        });
    }
    let mut out = Vec::with_capacity(features.len());
    for (i, (vector, (first, second))) in features.iter().zip(&weights.layers).enumerate() {
        if vector.len() != first.in_dim() {
            return Err(GonError::VectorDimMismatch {
                strip: i,
                expected: first.in_dim(),
                got: vector.len(),
            });
        }
        let a = first.apply(vector);
        let a = vector_gon(&a, params.strip(i), params.epsilon(), i, 1)?;
        let b = second.apply(&a);
        let b = vector_gon(&b, params.strip(i), params.epsilon(), i, 2)?;
        out.push(b);
    }
    Ok(out)
}
