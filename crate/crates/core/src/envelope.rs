//! Fitted-envelope checks for bounds of the form
//! `|g(p)| ≤ C · P(p) · exp(−σ w(p))` where `C` and `σ` are not known.
//!
//! `σ` is fitted once on the coarse sample by least squares of
//! `ln(|g|/P)` against `w`, then halved. The check passes when the maximum of
//! `|g|/P · exp(σ_fit w)` grows by less than the allowed fraction when the
//! sample is refined.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSample {
    /// `ln |g|`; `-inf` for an exact (or underflowed) zero.
    pub log_value: f64,
    /// `ln P`, the algebraic part of the envelope.
    pub log_power: f64,
    /// Argument of the exponential factor.
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub name: String,
    pub sigma_raw: f64,
    pub sigma_fit: f64,
    pub coarse_max: f64,
    pub fine_max: f64,
    pub growth: f64,
    pub allowed_growth: f64,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.coarse_max.is_finite()
            && self.fine_max.is_finite()
            && self.coarse_max > 0.0
            && self.growth < self.allowed_growth
    }
}

impl fmt::Display for EnvelopeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: sigma_fit={:.4e} max_coarse={:.6e} max_fine={:.6e} growth={:.3}% (allowed {:.1}%)",
            self.name,
            self.sigma_fit,
            self.coarse_max,
            self.fine_max,
            100.0 * self.growth,
            100.0 * self.allowed_growth
        )
    }
}

/// Least-squares decay rate: `-slope` of `ln(|g|/P)` against `w`, over the
/// samples with finite logs and `w ≥ w_min`. Returns 0 when the data do not
/// decay or too few samples remain.
pub fn fit_decay_rate(samples: &[EnvelopeSample], w_min: f64) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.w >= w_min && s.log_value.is_finite() && s.log_power.is_finite())
        .map(|s| (s.w, s.log_value - s.log_power))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mw = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sww: f64 = pts.iter().map(|p| (p.0 - mw) * (p.0 - mw)).sum();
    if sww == 0.0 {
        return 0.0;
    }
    let swy: f64 = pts.iter().map(|p| (p.0 - mw) * (p.1 - my)).sum();
    (-swy / sww).max(0.0)
}

/// `max |g|/P · exp(σ w)` over the samples.
pub fn max_ratio(samples: &[EnvelopeSample], sigma: f64) -> f64 {
    samples
        .iter()
        .map(|s| (s.log_value - s.log_power + sigma * s.w).exp())
        .fold(0.0, f64::max)
}

/// Fit on `coarse`, compare maxima on `coarse` and `fine`.
pub fn refinement_check(
    name: &str,
    coarse: &[EnvelopeSample],
    fine: &[EnvelopeSample],
    w_min: f64,
    allowed_growth: f64,
) -> EnvelopeReport {
    let sigma_raw = fit_decay_rate(coarse, w_min);
    let sigma_fit = 0.5 * sigma_raw;
    let coarse_max = max_ratio(coarse, sigma_fit);
    let fine_max = max_ratio(fine, sigma_fit);
    let growth = if coarse_max > 0.0 { fine_max / coarse_max - 1.0 } else { f64::INFINITY };
    EnvelopeReport {
        name: name.to_string(),
        sigma_raw,
        sigma_fit,
        coarse_max,
        fine_max,
        growth,
        allowed_growth,
    }
}

/// Refine a geometric grid by inserting the geometric midpoint of each cell.
pub fn refine_geometric(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push((w[0] * w[1]).sqrt());
    }
    if let Some(&last) = grid.last() {
        out.push(last);
    }
    out
}
