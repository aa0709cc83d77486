//! False-positive threshold identification: accuracy-maximizing sweep over
//! observed confidence scores, plus the ROC curve across all thresholds.

use std::path::Path;

use serde::Deserialize;

use super::PerceptionError;

/// One labeled detection: the raw confidence and whether the proposition was
/// truly present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    pub confidence: f64,
    pub label: bool,
}

impl CalibrationSample {
    pub fn new(confidence: f64, label: bool) -> Self {
        CalibrationSample { confidence, label }
    }
}

/// The accuracy-maximizing threshold and the accuracy it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub gamma_fp: f64,
    pub accuracy: f64,
}

fn check_classes(samples: &[CalibrationSample]) -> Result<(usize, usize), PerceptionError> {
    if samples.len() < 2 {
        return Err(PerceptionError::TooFewSamples);
    }
    let positives = samples.iter().filter(|s| s.label).count();
    let negatives = samples.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(PerceptionError::SingleClass);
    }
    Ok((positives, negatives))
}

/// Sorted distinct scores with, per distinct value, the number of positive
/// and negative samples carrying exactly that score.
fn grouped_scores(samples: &[CalibrationSample]) -> Vec<(f64, usize, usize)> {
    let mut sorted: Vec<&CalibrationSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.confidence.partial_cmp(&b.confidence).unwrap());
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for sample in sorted {
        match groups.last_mut() {
            Some((score, pos, neg)) if *score == sample.confidence => {
                if sample.label {
                    *pos += 1;
                } else {
                    *neg += 1;
                }
            }
            _ => groups.push((
                sample.confidence,
                sample.label as usize,
                !sample.label as usize,
            )),
        }
    }
    groups
}

/// Sweeps every distinct observed score as a candidate threshold, classifying
/// positive iff `score >= gamma`, and returns the accuracy maximizer
/// (smallest such gamma on ties).
pub fn find_optimal_threshold(
    samples: &[CalibrationSample],
) -> Result<ThresholdResult, PerceptionError> {
    let (positives, _) = check_classes(samples)?;
    let groups = grouped_scores(samples);
    let total = samples.len() as f64;

    // Classifying at threshold groups[k].0: true positives are the positives
    // at or above k, true negatives the negatives strictly below k.
    let mut best: Option<ThresholdResult> = None;
    let mut neg_below = 0usize;
    let mut pos_below = 0usize;
    for &(score, pos_here, neg_here) in &groups {
        let true_pos = positives - pos_below;
        let true_neg = neg_below;
        let accuracy = (true_pos + true_neg) as f64 / total;
        let better = match best {
            None => true,
            Some(b) => accuracy > b.accuracy,
        };
        if better {
            best = Some(ThresholdResult {
                gamma_fp: score,
                accuracy,
            });
        }
        pos_below += pos_here;
        neg_below += neg_here;
    }
    Ok(best.expect("at least one candidate threshold"))
}

/// ROC curve over every candidate threshold, descending, with the (0, 0)
/// endpoint prepended. Classification is positive iff `score >= threshold`,
/// so the final point (threshold = minimum score) is (1, 1). The false
/// positive rate is nondecreasing along the returned order.
pub fn roc_curve(samples: &[CalibrationSample]) -> Result<Vec<(f64, f64)>, PerceptionError> {
    let (positives, negatives) = check_classes(samples)?;
    let groups = grouped_scores(samples);

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    for &(_, pos_here, neg_here) in groups.iter().rev() {
        tp += pos_here;
        fp += neg_here;
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    Ok(points)
}

/// Area under an ROC curve by trapezoidal integration.
pub fn roc_auc(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|pair| {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            (x1 - x0) * (y0 + y1) / 2.0
        })
        .sum()
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    score: f64,
    label: u8,
}

/// Reads calibration samples from a CSV with columns `score,label`
/// (label 0 or 1).
pub fn load_samples_csv(path: &Path) -> Result<Vec<CalibrationSample>, PerceptionError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| PerceptionError::Csv(format!("{}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for record in reader.deserialize::<SampleRow>() {
        let row = record.map_err(|e| PerceptionError::Csv(format!("{}: {e}", path.display())))?;
        samples.push(CalibrationSample::new(row.score, row.label != 0));
    }
    Ok(samples)
}

/// Writes ROC points as a CSV with columns `fpr,tpr`.
pub fn write_roc_csv(path: &Path, points: &[(f64, f64)]) -> Result<(), PerceptionError> {
    let mut out = String::from("fpr,tpr\n");
    for &(fpr, tpr) in points {
        out.push_str(&format!("{fpr},{tpr}\n"));
    }
    std::fs::write(path, out).map_err(|e| PerceptionError::Csv(format!("{}: {e}", path.display())))
}
