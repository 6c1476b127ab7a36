//! Separation thresholds, margin thresholds, noise budget and lambda window.

use serde::{Deserialize, Serialize};

use crate::synth::InstanceStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Regularised recovery, spectral term from the instance.
    pub delta_threshold_distfree: f64,
    /// Regularised recovery, spectral term from the ball model.
    pub delta_threshold_stochastic: f64,
    /// Noiseless recovery, spectral term from the instance.
    pub delta_threshold_noiseless_distfree: f64,
    /// Noiseless recovery, spectral term from the ball model.
    pub delta_threshold_noiseless_stochastic: f64,
    /// Noiseless recovery with the spectral term bounded by `2 rho k`.
    pub delta_threshold_noiseless_bound: f64,
    pub alpha_threshold: f64,
    pub alpha_threshold_stochastic: f64,
    /// Largest admissible number of far-noise points.
    pub n2_budget: f64,
    pub lambda_used: f64,
    pub lambda_window: (f64, f64),
    /// Smallest far-noise distance for which the window bounds hold.
    pub nu_min: f64,
    /// Default far-noise distance, `2 delta`.
    pub nu_main: f64,
    /// `false` when `eps >= 1/2`, where the formulas above lose meaning.
    pub eps_valid: bool,
}

/// `[(delta - 1)^2 + 1, delta^2 + 2 delta]`.
pub fn lambda_window(delta: f64) -> (f64, f64) {
    ((delta - 1.0).powi(2) + 1.0, delta * delta + 2.0 * delta)
}

/// Thresholds for an instance. `lambda` defaults to the lower end of the window.
pub fn thresholds(
    stats: &InstanceStats,
    eps: f64,
    delta: f64,
    d: usize,
    k: usize,
    lambda: Option<f64>,
) -> ThresholdReport {
    let n = stats.n_min as f64;
    let (d, k) = (d as f64, k as f64);
    let shrink = 1.0 - 4.0 * eps * eps;
    let lead = 2.0 + 9.0 * eps / shrink;
    let spectral = 2.0 * stats.sigma_max_sq / (n * shrink);
    let structured = stats.rho * n * k;
    let ball = |count: f64| 2.0 * stats.rho * k * stats.theta * (1.0 + 1.0 / count.ln()).powi(2) / d;
    let ball_noisy = ball(structured) / shrink;
    let margin = 10.0 * delta * eps + 4.0 * delta * delta * eps * eps;
    let window = lambda_window(delta);
    let lambda_used = lambda.unwrap_or(window.0);
    ThresholdReport {
        delta_threshold_distfree: lead + spectral.sqrt(),
        delta_threshold_stochastic: lead + ball_noisy.sqrt(),
        delta_threshold_noiseless_distfree: 1.0 + (1.0 + 2.0 * stats.sigma_max_sq / n).sqrt(),
        delta_threshold_noiseless_stochastic: 1.0 + (1.0 + ball(structured)).sqrt(),
        delta_threshold_noiseless_bound: 1.0 + (1.0 + 2.0 * stats.rho * k).sqrt(),
        alpha_threshold: (margin + spectral).sqrt(),
        alpha_threshold_stochastic: (margin + ball_noisy).sqrt(),
        n2_budget: n * (delta * delta * shrink - 2.0 * delta * (1.0 + 4.0 * eps)) / lambda_used,
        lambda_used,
        lambda_window: window,
        nu_min: (1.0 + (delta - 1.0).powi(2)).sqrt(),
        nu_main: 2.0 * delta,
        eps_valid: eps < 0.5,
    }
}
