//! Retrieval evaluation: Rank-1 accuracy, mean Average Precision, and the
//! thickness-level protocol in which THK0 embeddings form the gallery and
//! THK1 through THK9 embeddings are probes.
//!
//! Conventions, chosen once and kept deterministic:
//! - distances: euclidean L2, or cosine as `1 - cosine similarity` with
//!   zero-norm vectors mapped to distance 1.0;
//! - nearest-gallery ties break toward the lowest gallery index;
//! - AP is standard information-retrieval average precision over the full
//!   gallery ranking, no rank cutoff;
//! - probes whose subject never appears in the gallery are excluded from
//!   both metrics and surfaced in the report as `excluded_probes`.

use rayon::prelude::*;
use thiserror::Error;

use crate::math::{pairwise_mean, pairwise_sum};
use crate::thickness::ThicknessLevel;

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("embedding {index} has {got} features, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("embedding {index} (subject {subject}) has a non-finite feature")]
    NonFiniteFeature { index: usize, subject: String },
    #[error("embedding for subject {subject} has no features")]
    EmptyVector { subject: String },
    #[error("gallery is empty")]
    EmptyGallery,
    #[error("no probe subject appears in the gallery")]
    NoPositives,
    #[error("no embedding carries the gallery level {level}")]
    MissingGalleryLevel { level: ThicknessLevel },
    #[error("protocol requires thickness covariates, subject {subject} has {found}")]
    NonThicknessCovariate { subject: String, found: String },
    #[error("no probe embeddings outside the gallery level")]
    NoProbes,
}

/// Identity covariate attached to an embedding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Covariate {
    Thickness(ThicknessLevel),
    Tag(String),
}

impl std::fmt::Display for Covariate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Covariate::Thickness(level) => write!(f, "{level}"),
            Covariate::Tag(tag) => write!(f, "{tag}"),
        }
    }
}

impl std::str::FromStr for Covariate {
    type Err = std::convert::Infallible;

    /// Strings of the form `THK<digit>` become thickness levels, anything
    /// else is kept as a free tag.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.parse::<ThicknessLevel>() {
            Ok(level) => Ok(Covariate::Thickness(level)),
            Err(_) => Ok(Covariate::Tag(s.to_string())),
        }
    }
}

/// One labeled feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub subject_id: String,
    pub covariate: Option<Covariate>,
    pub features: Vec<f64>,
}

impl Embedding {
    pub fn new(
        subject_id: impl Into<String>,
        covariate: Option<Covariate>,
        features: Vec<f64>,
    ) -> Result<Self, RetrievalError> {
        let subject_id = subject_id.into();
        if features.is_empty() {
            return Err(RetrievalError::EmptyVector { subject: subject_id });
        }
        Ok(Embedding { subject_id, covariate, features })
    }
}

/// Embeddings sharing one feature dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingSet {
    embeddings: Vec<Embedding>,
}

impl EmbeddingSet {
    pub fn new(embeddings: Vec<Embedding>) -> Result<Self, RetrievalError> {
        check_dimensions(&embeddings)?;
        Ok(EmbeddingSet { embeddings })
    }

    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    pub fn dimension(&self) -> Option<usize> {
        self.embeddings.first().map(|e| e.features.len())
    }

    pub fn with_level(&self, level: ThicknessLevel) -> Vec<Embedding> {
        self.embeddings
            .iter()
            .filter(|e| e.covariate == Some(Covariate::Thickness(level)))
            .cloned()
            .collect()
    }
}

fn check_dimensions(embeddings: &[Embedding]) -> Result<(), RetrievalError> {
    let Some(first) = embeddings.first() else { return Ok(()) };
    let expected = first.features.len();
    for (index, e) in embeddings.iter().enumerate() {
        if e.features.len() != expected {
            return Err(RetrievalError::DimensionMismatch {
                index,
                expected,
                got: e.features.len(),
            });
        }
        if e.features.iter().any(|v| !v.is_finite()) {
            return Err(RetrievalError::NonFiniteFeature {
                index,
                subject: e.subject_id.clone(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Cosine,
}

impl std::fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DistanceMetric::Euclidean => write!(f, "euclidean"),
            DistanceMetric::Cosine => write!(f, "cosine"),
        }
    }
}

impl std::str::FromStr for DistanceMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(DistanceMetric::Euclidean),
            "cosine" => Ok(DistanceMetric::Cosine),
            other => Err(format!("unknown metric {other:?}, expected euclidean or cosine")),
        }
    }
}

/// Distance between two equal-length vectors under the chosen metric.
pub fn distance(a: &[f64], b: &[f64], metric: DistanceMetric) -> f64 {
    match metric {
        DistanceMetric::Euclidean => {
            let squares: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
            pairwise_sum(&squares).sqrt()
        }
        DistanceMetric::Cosine => {
            let dots: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
            let na = pairwise_sum(&a.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
            let nb = pairwise_sum(&b.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
            if na == 0.0 || nb == 0.0 {
                // Similarity to the zero vector is undefined; pin it to the
                // neutral distance so the ranking stays deterministic.
                return 1.0;
            }
            1.0 - pairwise_sum(&dots) / (na * nb)
        }
    }
}

/// Row i holds probe i's distance to every gallery entry.
pub fn distance_matrix(
    probes: &[Embedding],
    gallery: &[Embedding],
    metric: DistanceMetric,
) -> Result<Vec<Vec<f64>>, RetrievalError> {
    let mut all: Vec<Embedding> = probes.to_vec();
    all.extend_from_slice(gallery);
    check_dimensions(&all)?;
    Ok(probes
        .par_iter()
        .map(|p| gallery.iter().map(|g| distance(&p.features, &g.features, metric)).collect())
        .collect())
}

/// Per-probe outcome; `None` marks a probe with no gallery positive.
struct ProbeOutcome {
    nearest_is_positive: bool,
    average_precision: f64,
}

fn score_probe(
    probe: &Embedding,
    gallery: &[Embedding],
    metric: DistanceMetric,
) -> Option<ProbeOutcome> {
    if !gallery.iter().any(|g| g.subject_id == probe.subject_id) {
        return None;
    }
    let distances: Vec<f64> =
        gallery.iter().map(|g| distance(&probe.features, &g.features, metric)).collect();

    let mut nearest = 0;
    for (j, d) in distances.iter().enumerate().skip(1) {
        if *d < distances[nearest] {
            nearest = j;
        }
    }
    let nearest_is_positive = gallery[nearest].subject_id == probe.subject_id;

    let mut order: Vec<usize> = (0..gallery.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
    let mut positives_seen = 0usize;
    let mut precisions = Vec::new();
    for (rank0, &j) in order.iter().enumerate() {
        if gallery[j].subject_id == probe.subject_id {
            positives_seen += 1;
            precisions.push(positives_seen as f64 / (rank0 + 1) as f64);
        }
    }
    Some(ProbeOutcome { nearest_is_positive, average_precision: pairwise_mean(&precisions) })
}

fn score_probes(
    probes: &[Embedding],
    gallery: &[Embedding],
    metric: DistanceMetric,
) -> Result<Vec<Option<ProbeOutcome>>, RetrievalError> {
    if gallery.is_empty() {
        return Err(RetrievalError::EmptyGallery);
    }
    let mut all: Vec<Embedding> = probes.to_vec();
    all.extend_from_slice(gallery);
    check_dimensions(&all)?;
    Ok(probes.par_iter().map(|p| score_probe(p, gallery, metric)).collect())
}

fn summarize(outcomes: &[Option<ProbeOutcome>]) -> Result<(f64, f64, usize, usize), RetrievalError> {
    let included: Vec<&ProbeOutcome> = outcomes.iter().flatten().collect();
    let excluded = outcomes.len() - included.len();
    if included.is_empty() {
        return Err(RetrievalError::NoPositives);
    }
    let hits = included.iter().filter(|o| o.nearest_is_positive).count();
    let rank1 = hits as f64 / included.len() as f64 * 100.0;
    let aps: Vec<f64> = included.iter().map(|o| o.average_precision).collect();
    let map = pairwise_mean(&aps) * 100.0;
    Ok((rank1, map, included.len(), excluded))
}

/// Percentage of probes whose nearest gallery entry shares their subject.
pub fn rank1(
    probes: &[Embedding],
    gallery: &[Embedding],
    metric: DistanceMetric,
) -> Result<f64, RetrievalError> {
    let outcomes = score_probes(probes, gallery, metric)?;
    Ok(summarize(&outcomes)?.0)
}

/// Mean over probes of average precision of the full gallery ranking, as a
/// percentage.
pub fn mean_average_precision(
    probes: &[Embedding],
    gallery: &[Embedding],
    metric: DistanceMetric,
) -> Result<f64, RetrievalError> {
    let outcomes = score_probes(probes, gallery, metric)?;
    Ok(summarize(&outcomes)?.1)
}

/// One probe level's results. `probes` counts the probes that entered the
/// metrics; excluded probes are tallied on the report.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub level: ThicknessLevel,
    pub probes: usize,
    pub rank1: f64,
    pub map: f64,
}

/// Protocol results: per-level rows plus probe-count-weighted overall values.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_level: Vec<LevelResult>,
    pub overall_rank1: f64,
    pub overall_map: f64,
    pub gallery_count: usize,
    pub excluded_probes: usize,
}

impl EvalReport {
    pub fn included_probes(&self) -> usize {
        self.per_level.iter().map(|l| l.probes).sum()
    }
}

/// Runs the clothing-thickness protocol: level 0 is the gallery, levels 1
/// through 9 are probe sets evaluated independently, and the overall numbers
/// weight each level by its probe count.
pub fn evaluate_protocol(
    set: &EmbeddingSet,
    metric: DistanceMetric,
) -> Result<EvalReport, RetrievalError> {
    for e in set.embeddings() {
        match &e.covariate {
            Some(Covariate::Thickness(_)) => {}
            Some(Covariate::Tag(tag)) => {
                return Err(RetrievalError::NonThicknessCovariate {
                    subject: e.subject_id.clone(),
                    found: format!("tag {tag:?}"),
                });
            }
            None => {
                return Err(RetrievalError::NonThicknessCovariate {
                    subject: e.subject_id.clone(),
                    found: "no covariate".to_string(),
                });
            }
        }
    }
    let gallery_level = ThicknessLevel::new(0).expect("level 0 exists");
    let gallery = set.with_level(gallery_level);
    if gallery.is_empty() {
        return Err(RetrievalError::MissingGalleryLevel { level: gallery_level });
    }

    let mut per_level = Vec::new();
    let mut excluded_probes = 0usize;
    let mut had_probes = false;
    for level in ThicknessLevel::all().skip(1) {
        let probes = set.with_level(level);
        if probes.is_empty() {
            continue;
        }
        had_probes = true;
        let outcomes = score_probes(&probes, &gallery, metric)?;
        match summarize(&outcomes) {
            Ok((rank1, map, included, excluded)) => {
                excluded_probes += excluded;
                per_level.push(LevelResult { level, probes: included, rank1, map });
            }
            // A level whose probes all lack gallery positives contributes no
            // row, only exclusions.
            Err(RetrievalError::NoPositives) => excluded_probes += probes.len(),
            Err(other) => return Err(other),
        }
    }
    if !had_probes {
        return Err(RetrievalError::NoProbes);
    }
    if per_level.is_empty() {
        return Err(RetrievalError::NoPositives);
    }

    let weights: Vec<f64> = per_level.iter().map(|l| l.probes as f64).collect();
    let total: f64 = pairwise_sum(&weights);
    let weighted = |field: fn(&LevelResult) -> f64| -> f64 {
        let terms: Vec<f64> =
            per_level.iter().map(|l| field(l) * l.probes as f64).collect();
        pairwise_sum(&terms) / total
    };
    Ok(EvalReport {
        overall_rank1: weighted(|l| l.rank1),
        overall_map: weighted(|l| l.map),
        gallery_count: gallery.len(),
        excluded_probes,
        per_level,
    })
}
