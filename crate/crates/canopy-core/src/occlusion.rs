//! Occlusion model: layer fractions, logarithmic-series fit, required-density
//! prediction and effective understory density.
//!
//! The whole-cloud density decomposes into per-layer densities that decay
//! with depth; normalizing by the total gives layer fractions which a
//! logarithmic series distribution describes well. Inverting the truncated
//! fraction sum predicts the acquisition density needed before a given layer
//! effectively receives the density at which top-layer segmentation accuracy
//! plateaus.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::stratify::StratificationResult;

/// Number of layer fractions tracked per plot.
pub const N_TRACKED_LAYERS: usize = 5;

/// Fitted logarithmic-series model of layer fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogSeriesModel {
    /// Shape parameter in (0, 1).
    pub theta: f64,
    /// Mean squared error of the fit over all pooled (n, fraction) pairs.
    pub fit_mse: f64,
    /// Number of (n, fraction) pairs the fit pooled.
    pub n_samples: usize,
}

impl LogSeriesModel {
    /// Fractions predicted for layers 1..=n.
    pub fn fractions(&self, n: usize) -> Vec<f64> {
        (1..=n)
            .map(|k| logseries_pmf(self.theta, k as u32).unwrap_or(0.0))
            .collect()
    }
}

/// Observed layer fractions of one plot, zero-padded to five layers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FractionSample {
    pub plot_id: String,
    pub fractions: [f64; N_TRACKED_LAYERS],
}

impl FractionSample {
    pub fn new(plot_id: impl Into<String>, fractions: [f64; N_TRACKED_LAYERS]) -> Result<Self> {
        if fractions.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::invalid("layer fractions must lie in [0, 1]"));
        }
        let total: f64 = fractions.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::invalid(alloc::format!(
                "layer fractions sum to {total} > 1"
            )));
        }
        Ok(FractionSample {
            plot_id: plot_id.into(),
            fractions,
        })
    }
}

/// Logarithmic series probability mass: θⁿ / (−ln(1−θ)·n).
pub fn logseries_pmf(theta: f64, n: u32) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::invalid(alloc::format!(
            "log-series parameter must lie in (0, 1), got {theta}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("log-series support starts at 1"));
    }
    let norm = -math::ln(1.0 - theta);
    let mut power = theta;
    for _ in 1..n {
        power *= theta;
    }
    Ok(power / (norm * f64::from(n)))
}

/// Pooled mean squared error between observed fractions and the pmf.
fn pooled_mse(samples: &[FractionSample], theta: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for sample in samples {
        for (i, &p) in sample.fractions.iter().enumerate() {
            let predicted = logseries_pmf(theta, (i + 1) as u32).unwrap_or(0.0);
            let diff = p - predicted;
            sum += diff * diff;
            count += 1;
        }
    }
    sum / count as f64
}

/// Fits θ by golden-section search on the pooled MSE over θ ∈ (0, 1).
///
/// Every sample contributes all five (n, fraction) pairs, zeros included, so
/// N = 5 × samples. The guard interval (1e-6, 1 − 1e-6) keeps the search away
/// from the log singularity; the bracket shrinks below 1e-6 in θ.
pub fn fit_theta(samples: &[FractionSample]) -> Result<LogSeriesModel> {
    if samples.is_empty() {
        return Err(Error::EmptyInput(
            "log-series fit needs at least one sample",
        ));
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = 1e-6;
    let mut b = 1.0 - 1e-6;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = pooled_mse(samples, c);
    let mut fd = pooled_mse(samples, d);
    while (b - a) > 1e-6 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = pooled_mse(samples, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = pooled_mse(samples, d);
        }
    }
    let theta = 0.5 * (a + b);
    Ok(LogSeriesModel {
        theta,
        fit_mse: pooled_mse(samples, theta),
        n_samples: samples.len() * N_TRACKED_LAYERS,
    })
}

/// Layer fractions of one stratification: layer density over whole-cloud
/// density, zero-padded to five layers.
pub fn observed_fractions(
    result: &StratificationResult,
    pcd: f64,
    plot_id: impl Into<String>,
) -> Result<FractionSample> {
    if !(pcd > 0.0) {
        return Err(Error::invalid(alloc::format!(
            "cloud density must be positive, got {pcd}"
        )));
    }
    let mut fractions = [0.0f64; N_TRACKED_LAYERS];
    for (i, layer) in result.layers.iter().take(N_TRACKED_LAYERS).enumerate() {
        fractions[i] = (layer.density / pcd).clamp(0.0, 1.0);
    }
    FractionSample::new(plot_id, fractions)
}

/// Whole-cloud density required so the n-th layer effectively receives
/// `pcd_min`: pcd_min / (1 − Σ_{k<n} fraction_k).
///
/// `fractions` lists the layer fractions from the top; only the first n−1 are
/// consumed.
pub fn required_pcd(pcd_min: f64, fractions: &[f64], n: u32) -> Result<f64> {
    if !(pcd_min > 0.0) {
        return Err(Error::invalid(alloc::format!(
            "plateau density must be positive, got {pcd_min}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("layer index starts at 1"));
    }
    let needed = (n - 1) as usize;
    if fractions.len() < needed {
        return Err(Error::invalid(alloc::format!(
            "need {needed} layer fractions to reach layer {n}, got {}",
            fractions.len()
        )));
    }
    let blocked: f64 = fractions[..needed].iter().sum();
    let remaining = 1.0 - blocked;
    if remaining <= 0.0 {
        return Err(Error::SaturatedOcclusion { layer: n });
    }
    Ok(pcd_min / remaining)
}

/// Effective understory density: what remains of `pcd` after removing the
/// top two layers' fractions.
pub fn eupcd(pcd: f64, p1: f64, p2: f64) -> Result<f64> {
    if !(pcd >= 0.0) {
        return Err(Error::invalid("density must be non-negative"));
    }
    if p1 < 0.0 || p2 < 0.0 || p1 + p2 > 1.0 {
        return Err(Error::invalid(alloc::format!(
            "top-layer fractions must be non-negative and sum to at most 1, got {p1} + {p2}"
        )));
    }
    Ok(pcd * (1.0 - p1 - p2))
}
