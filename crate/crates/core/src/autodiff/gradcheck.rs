//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::ParamSet;
use crate::error::Result;

/// Settings for [`finite_difference_check`].
#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    /// Perturbation applied on each side of a coordinate.
    pub step: f64,
    /// Largest acceptable relative error.
    pub tolerance: f64,
    /// Denominator floor: relative error is `|a - n| / max(|a|, |n|, floor)`.
    pub floor: f64,
    /// Check at most this many coordinates per parameter (sampled without replacement); `None` checks all.
    pub max_coords_per_param: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-4,
            floor: 1e-6,
            max_coords_per_param: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter and flat index where the worst error occurred.
    pub worst: Option<(String, usize)>,
    pub coords_checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

/// Compares the gradients stored in `params` against central differences of `loss`.
///
/// `params` must already carry the analytic gradients of `loss` at its current values.
pub fn finite_difference_check<F>(
    params: &ParamSet,
    mut loss: F,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamSet) -> Result<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        coords_checked: 0,
        tolerance: cfg.tolerance,
    };
    for pi in 0..params.len() {
        let len = params.param(pi).value.len();
        let coords: Vec<usize> = match cfg.max_coords_per_param {
            Some(k) if k < len => sample(&mut rng, len, k).into_vec(),
            _ => (0..len).collect(),
        };
        for ix in coords {
            let original = params.param(pi).value.values()[ix];
            probe.param_mut(pi).value.values_mut()[ix] = original + cfg.step;
            let up = loss(&probe)?;
            probe.param_mut(pi).value.values_mut()[ix] = original - cfg.step;
            let down = loss(&probe)?;
            probe.param_mut(pi).value.values_mut()[ix] = original;

            let numeric = (up - down) / (2.0 * cfg.step);
            let analytic = params.param(pi).grad.values()[ix];
            let denom = analytic.abs().max(numeric.abs()).max(cfg.floor);
            let err = (analytic - numeric).abs() / denom;
            report.coords_checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((params.param(pi).name.clone(), ix));
            }
        }
    }
    Ok(report)
}
