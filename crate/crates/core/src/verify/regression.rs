//! Frozen regression values for the measured constants.
//!
//! The estimates only assert that some constant exists. These values were set
//! from calibration sweeps over `r ∈ {4, …, 64}` (K = 4, β = 0.45) with a
//! margin, and any later drift past them is a regression.

/// `Σ_{j<r} |k'_j|^γ / |k'_r|^γ` for γ >= 1.
pub const LACUNARY_RATIO_MAX: f64 = 1.0;
/// `sup_t t^{γ/2} Σ |k_i|^γ e^{-|k_i|² t}`.
pub const LACUNARY_HEAT_SUM_MAX: f64 = 4.0;
/// Two-sided band for the data norms against `r^{-β}`.
pub const DATA_NORM_MIN: f64 = 0.25;
pub const DATA_NORM_MAX: f64 = 2.5;
/// Resonant part against `r^{1-2β}` (lower bound on `[K^{-2}, 1]`, upper on `(0, 1]`).
pub const RHO10_LOWER_MIN: f64 = 0.01;
pub const RHO10_UPPER_MAX: f64 = 0.25;
/// Off-resonant parts against `r^{-2β} t^{-δ}`.
pub const RHO11_UPPER_MAX: f64 = 2.0;
pub const RHO12_UPPER_MAX: f64 = 1.5;
/// `u1` against `r^{-2β} t^{-δ} + r^{1-2β} t^{1-δ}`.
pub const U1_UPPER_MAX: f64 = 1.5;
/// `B1(g, g)` against `r^{-2β} (1 + |log t|)`.
pub const B1_LOG_MAX: f64 = 0.2;
/// `B3(g, ρ1)` against `r^{-3β} t^{-δ} + r^{1-3β}`.
pub const B3_G_RHO1_MAX: f64 = 0.05;
/// Operator probes on random fields.
pub const HEAT_GRADIENT_MAX: f64 = 1.0;
pub const B1_ESTIMATE_MAX: f64 = 0.5;
pub const B2_ESTIMATE_MAX: f64 = 0.5;
pub const B3_ESTIMATE_MAX: f64 = 0.5;
/// Density remainder against `r^{-3β} t^{-1-δ} + r^{1-3β} + r^{2-4β} t^{3/2}`.
/// Simulated ratios peak at 7.3e-3 over r ∈ {2, 3, 4}, ν ∈ {0.2, …, 0.9},
/// t ∈ [T/10, T]; frozen with a 7x margin. Enters the certified witness bound.
pub const REMAINDER_CONSTANT: f64 = 0.05;
/// Velocity remainder against `r^{-3β} + r^{1-3β} t^{1+δ} + r^{2-4β} t^{5/2+δ}`
/// (in the weighted form `t^δ ||y||_∞`). Same calibration runs, peak 1.6e-2.
pub const REMAINDER_Y_CONSTANT: f64 = 0.1;
/// Allowed deviation of the fitted growth exponent from `1 - 2β`.
pub const SLOPE_TOLERANCE: f64 = 0.05;
/// Largest max/min ratio of a constant across the `r` sweep.
pub const STABILITY_SPREAD_MAX: f64 = 10.0;
/// Tighter spread for the data norms.
pub const DATA_NORM_SPREAD_MAX: f64 = 4.0;
/// Largest measured `||z||_∞ / ||ρ1,0||_∞` at the remainder check point.
pub const Z_TO_RHO10_MAX: f64 = 0.15;
