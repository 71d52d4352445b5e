//! Training and evaluation metrics: logs, CER curves, convergence and convexity diagnostics.

mod cer;
mod log;
mod stats;

pub use cer::{CerCurve, CerEstimate, CerPoint, CER_HEADER};
pub use log::{MetricsLog, MetricsRow, METRICS_HEADER};
pub use stats::{
    aggregate_seeds, convergence_epoch, convexity_score, first_sustained_crossing, median,
    median_with_missing, quantile_sorted, roughness, AggregateRow, ConvexityReport,
    SUSTAIN_EPOCHS,
};
