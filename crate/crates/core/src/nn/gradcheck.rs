use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// One evaluation of a scalar objective at a parameter vector.
#[derive(Debug, Clone, Default)]
pub struct Probe {
    pub loss: f64,
    /// Analytic gradient; only required at the base point.
    pub grad: Option<Vec<f64>>,
    /// Sign pattern of every rectifier input, if the model has any.
    pub activation_pattern: Vec<bool>,
    /// Smallest |rectifier input|, or infinity.
    pub min_abs_preactivation: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub step: f64,
    pub max_coords: usize,
    /// Coordinates whose perturbation brings a rectifier input this close to
    /// zero (or flips one) are skipped.
    pub kink_threshold: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            max_coords: 200,
            kink_threshold: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Relative error with a small floor on the denominator so that coordinates
/// with vanishing gradient do not divide by zero.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares the analytic gradient against central differences on up to
/// `max_coords` randomly sampled coordinates.
///
/// `objective(params, want_grad)` must be deterministic.
pub fn grad_check<F>(mut objective: F, params: &[f64], cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: FnMut(&[f64], bool) -> Result<Probe>,
{
    let base = objective(params, true)?;
    let grad = base.grad.expect("objective must return a gradient when asked");
    assert_eq!(grad.len(), params.len(), "gradient length differs from parameters");

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let count = cfg.max_coords.min(params.len());
    let coords = sample(&mut rng, params.len(), count).into_vec();

    let mut theta = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for i in coords {
        let orig = theta[i];
        theta[i] = orig + cfg.step;
        let plus = objective(&theta, false)?;
        theta[i] = orig - cfg.step;
        let minus = objective(&theta, false)?;
        theta[i] = orig;

        let near_kink = base.min_abs_preactivation < cfg.kink_threshold
            || plus.min_abs_preactivation < cfg.kink_threshold
            || minus.min_abs_preactivation < cfg.kink_threshold
            || plus.activation_pattern != base.activation_pattern
            || minus.activation_pattern != base.activation_pattern;
        if near_kink {
            report.skipped += 1;
            continue;
        }
        let numeric = (plus.loss - minus.loss) / (2.0 * cfg.step);
        report.max_rel_error = report.max_rel_error.max(relative_error(grad[i], numeric));
        report.checked += 1;
    }
    Ok(report)
}
