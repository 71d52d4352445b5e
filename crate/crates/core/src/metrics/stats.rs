use serde::{Deserialize, Serialize};

use super::log::MetricsLog;
use crate::error::{input, Result};

/// Epochs a crossing must hold to count as convergence.
pub const SUSTAIN_EPOCHS: usize = 5;

/// First epoch of a trace at or above `threshold` that stays there for `sustain` consecutive
/// epochs (itself included). A crossing too close to the end to complete the window is not counted.
pub fn first_sustained_crossing(
    trace: &[(usize, f64)],
    threshold: f64,
    sustain: usize,
) -> Option<usize> {
    let sustain = sustain.max(1);
    trace
        .windows(sustain)
        .find(|w| w.iter().all(|&(_, s)| s >= threshold))
        .map(|w| w[0].0)
}

/// Convergence epoch of the direction-averaged class-success trace.
pub fn convergence_epoch(log: &MetricsLog, threshold: f64) -> Result<Option<usize>> {
    if log.is_empty() {
        return Err(input("convergence of an empty log is undefined"));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(input(format!("threshold {threshold} outside (0, 1]")));
    }
    Ok(first_sustained_crossing(
        &log.success_trace(None),
        threshold,
        SUSTAIN_EPOCHS,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// True when the smallest CER sits strictly inside the train-SNR range and both
    /// endpoints are strictly worse.
    pub interior_minimum: bool,
    pub argmin_train_snr_db: f64,
    pub min_cer: f64,
}

/// Locates the minimum of CER over train SNR. `points` are `(train_snr_db, cer)` in any order.
pub fn convexity_score(points: &[(f64, f64)]) -> Result<ConvexityReport> {
    if points.len() < 3 {
        return Err(input(format!(
            "need at least 3 train-SNR points, got {}",
            points.len()
        )));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (imin, &(snr, cer)) = pts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("nonempty");
    let last = pts.len() - 1;
    let interior = imin != 0 && imin != last && pts[0].1 > cer && pts[last].1 > cer;
    Ok(ConvexityReport {
        interior_minimum: interior,
        argmin_train_snr_db: snr,
        min_cer: cer,
    })
}

/// Linear-interpolation quantile of already sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Median of optional values where `None` ranks above every number (for example "never converged").
pub fn median_with_missing(values: &[Option<f64>]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
    v.sort_by(f64::total_cmp);
    let m = quantile_sorted(&v, 0.5);
    m.is_finite().then_some(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub epoch: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl AggregateRow {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Per-epoch median and quartiles of direction-averaged class success across runs.
pub fn aggregate_seeds(runs: &[MetricsLog]) -> Result<Vec<AggregateRow>> {
    let first = runs.first().ok_or_else(|| input("no runs to aggregate"))?;
    let epochs = first.epochs();
    if let Some(bad) = runs.iter().position(|r| r.epochs() != epochs) {
        return Err(input(format!("run {bad} has epochs misaligned with run 0")));
    }
    let traces: Vec<Vec<(usize, f64)>> = runs.iter().map(|r| r.success_trace(None)).collect();
    Ok(epochs
        .iter()
        .enumerate()
        .map(|(i, &epoch)| {
            let mut v: Vec<f64> = traces.iter().map(|t| t[i].1).collect();
            v.sort_by(f64::total_cmp);
            AggregateRow {
                epoch,
                median: quantile_sorted(&v, 0.5),
                q1: quantile_sorted(&v, 0.25),
                q3: quantile_sorted(&v, 0.75),
            }
        })
        .collect())
}

/// Sample variance of epoch-to-epoch changes: how jagged a trace is.
pub fn roughness(values: &[f64]) -> f64 {
    if values.len() < 3 {
        return 0.0;
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64
}
