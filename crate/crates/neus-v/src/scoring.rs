//! Score calibration and aggregation: empirical-CDF mapping of satisfaction
//! probabilities, the four-mode final score, and Pearson correlation for
//! benchmark reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("reference distribution has no samples")]
    EmptyDistribution,
    #[error("probability {value} is outside [0, 1]")]
    ProbabilityOutOfRange { value: f64 },
    #[error("no evaluation modes present")]
    NoModes,
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least two paired samples for a correlation")]
    TooFewSamples,
    #[error("{side} input has zero variance")]
    ZeroVariance { side: &'static str },
}

/// The four evaluation modes a prompt is compiled under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    ObjectExistence,
    SpatialRelationship,
    ObjectActionAlignment,
    OverallConsistency,
}

impl EvaluationMode {
    pub const ALL: [EvaluationMode; 4] = [
        EvaluationMode::ObjectExistence,
        EvaluationMode::SpatialRelationship,
        EvaluationMode::ObjectActionAlignment,
        EvaluationMode::OverallConsistency,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            EvaluationMode::ObjectExistence => "object_existence",
            EvaluationMode::SpatialRelationship => "spatial_relationship",
            EvaluationMode::ObjectActionAlignment => "object_action_alignment",
            EvaluationMode::OverallConsistency => "overall_consistency",
        }
    }
}

impl fmt::Display for EvaluationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for EvaluationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "object_existence" => Ok(EvaluationMode::ObjectExistence),
            "spatial_relationship" => Ok(EvaluationMode::SpatialRelationship),
            "object_action_alignment" => Ok(EvaluationMode::ObjectActionAlignment),
            "overall_consistency" => Ok(EvaluationMode::OverallConsistency),
            other => Err(format!("unknown evaluation mode {other:?}")),
        }
    }
}

/// Reference distribution of satisfaction probabilities for one mode,
/// kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfDistribution {
    mode: EvaluationMode,
    samples: Vec<f64>,
}

impl EcdfDistribution {
    pub fn mode(&self) -> EvaluationMode {
        self.mode
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Sorts a list of satisfaction probabilities into a reference distribution.
/// Duplicates are retained (multiset semantics).
pub fn build_ecdf(results: &[f64], mode: EvaluationMode) -> Result<EcdfDistribution, ScoringError> {
    if results.is_empty() {
        return Err(ScoringError::EmptyDistribution);
    }
    for &p in results {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(ScoringError::ProbabilityOutOfRange { value: p });
        }
    }
    let mut samples = results.to_vec();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(EcdfDistribution { mode, samples })
}

/// Maps a satisfaction probability to its quantile within the reference
/// distribution: `|{x in samples : x <= p}| / |samples|`. Weak inequality,
/// no interpolation, right-continuous.
pub fn ecdf_map(p: f64, distribution: &EcdfDistribution) -> Result<f64, ScoringError> {
    if distribution.is_empty() {
        return Err(ScoringError::EmptyDistribution);
    }
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(ScoringError::ProbabilityOutOfRange { value: p });
    }
    let below_or_equal = distribution.samples.partition_point(|&x| x <= p);
    Ok(below_or_equal as f64 / distribution.samples.len() as f64)
}

/// Satisfaction probability and calibrated score for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeScore {
    pub probability: f64,
    pub score: f64,
}

/// Per-mode calibrated scores and their arithmetic mean. Missing modes are
/// simply absent; they never contribute zeros to the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeusVScore {
    pub per_mode: BTreeMap<EvaluationMode, ModeScore>,
    pub final_score: f64,
}

/// Averages the calibrated scores of the modes that were evaluated.
pub fn aggregate(
    per_mode: &BTreeMap<EvaluationMode, ModeScore>,
) -> Result<NeusVScore, ScoringError> {
    if per_mode.is_empty() {
        return Err(ScoringError::NoModes);
    }
    let sum: f64 = per_mode.values().map(|m| m.score).sum();
    Ok(NeusVScore {
        per_mode: per_mode.clone(),
        final_score: sum / per_mode.len() as f64,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, ScoringError> {
    if xs.len() != ys.len() {
        return Err(ScoringError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(ScoringError::TooFewSamples);
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 {
        return Err(ScoringError::ZeroVariance { side: "first" });
    }
    if var_y == 0.0 {
        return Err(ScoringError::ZeroVariance { side: "second" });
    }
    Ok(cov / (var_x.sqrt() * var_y.sqrt()))
}
