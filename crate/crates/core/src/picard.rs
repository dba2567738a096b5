//! First Picard iterates of the mild formulation, in closed form.
//!
//! With `g = e^{tΔ}u0` and `θ = e^{tΔ}ρ0` the first corrections are
//!
//! * `u1 = B1(g, g) + B2(g, θ)`, `ρ1 = B3(g, θ)`,
//! * `B1(u, v) = -∫ e^{(t-s)Δ} ℙ ∇·(u ⊗ v) ds`,
//! * `B2(u, θ) = -∫ (t-s) e^{(t-s)Δ} ℙ (∇·(uθ) e₃) ds`,
//! * `B3(u, θ) = -∫ e^{(t-s)Δ} ∇·(uθ) ds`.
//!
//! For trigonometric inputs every product mode decays at a fixed rate along the
//! heat flow, so each time integral reduces to one scalar [`DuhamelKernel`].

use crate::error::{Error, Result};
use crate::lacunary::{check_remainder_constraint, InitialData, LacunaryParams, WaveTriple, ETA};
use crate::trig_field::{flux_terms, Arity, Frequency, TrigField};

/// `∫_0^t (t-s)^p e^{-(t-s)M} e^{-sA} ds` for `p ∈ {0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DuhamelKernel {
    pub weight_power: u8,
    /// Decay rate of the output mode, `|q|²`.
    pub outgoing_decay: f64,
    /// Combined decay rate of the sources, `|m|² + |n|²`.
    pub incoming_decay: f64,
}

/// Below this argument the auxiliary functions switch to their Taylor series.
const SERIES_CUTOFF: f64 = 0.5;

/// `(1 - e^{-x}) / x`.
fn phi1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `∫_0^1 u e^{-xu} du = (1 - (1 + x) e^{-x}) / x²`.
fn phi2(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        // Σ (-x)^n (n + 1) / (n + 2)!
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut fact = 2.0;
        for n in 0..24 {
            sum += pow * (n as f64 + 1.0) / fact;
            pow *= -x;
            fact *= n as f64 + 3.0;
        }
        sum
    } else {
        (1.0 - (1.0 + x) * (-x).exp()) / (x * x)
    }
}

/// `∫_0^1 (1 - w) e^{-yw} dw = (y - 1 + e^{-y}) / y²`.
fn psi(y: f64) -> f64 {
    if y < SERIES_CUTOFF {
        // Σ (-y)^m / (m + 2)!
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut fact = 2.0;
        for m in 0..24 {
            sum += pow / fact;
            pow *= -y;
            fact *= m as f64 + 3.0;
        }
        sum
    } else {
        (y + (-y).exp_m1()) / (y * y)
    }
}

impl DuhamelKernel {
    pub fn new(weight_power: u8, outgoing_decay: f64, incoming_decay: f64) -> Self {
        DuhamelKernel {
            weight_power,
            outgoing_decay,
            incoming_decay,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.weight_power > 1 {
            return Err(Error::invalid("weight_power", format!("must be 0 or 1, got {}", self.weight_power)));
        }
        for (name, v) in [("outgoing_decay", self.outgoing_decay), ("incoming_decay", self.incoming_decay)] {
            if !(v >= 0.0) || v.is_nan() {
                return Err(Error::invalid(name, format!("decay must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Closed form, written around `min(M, A)` so that no exponential grows.
    fn eval(&self, t: f64) -> f64 {
        let (m, a) = (self.outgoing_decay, self.incoming_decay);
        let base = m.min(a);
        if (base * t).is_infinite() || (-base * t).exp() == 0.0 {
            return 0.0;
        }
        let gap = (m - a).abs() * t;
        let gap = if gap.is_nan() { 0.0 } else { gap };
        let decay = (-base * t).exp();
        match self.weight_power {
            0 => decay * t * phi1(gap),
            _ => {
                if m >= a {
                    decay * t * t * phi2(gap)
                } else {
                    decay * t * t * psi(gap)
                }
            }
        }
    }
}

/// Value of the kernel at time `t > 0`.
pub fn duhamel_integral(kern: &DuhamelKernel, t: f64) -> Result<f64> {
    kern.validate()?;
    check_time(t)?;
    Ok(kern.eval(t))
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("t", format!("must be positive and finite, got {t}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BilinearKind {
    B1,
    B2,
    B3,
}

/// Exact value at time `t` of a bilinear Duhamel term.
///
/// `u` and `f` are time-0 fields; inside the integral they are taken along the
/// heat flow, `e^{sΔ}u` and `e^{sΔ}f`.
pub fn bilinear(kind: BilinearKind, u: &TrigField, f: &TrigField, t: f64) -> Result<TrigField> {
    check_time(t)?;
    if u.arity() != Arity::Vector {
        return Err(Error::Arity {
            expected: "vector",
            found: u.arity().name(),
        });
    }
    let want = match kind {
        BilinearKind::B1 => Arity::Vector,
        BilinearKind::B2 | BilinearKind::B3 => Arity::Scalar,
    };
    if f.arity() != want {
        return Err(Error::Arity {
            expected: want.name(),
            found: f.arity().name(),
        });
    }
    let power = u8::from(kind == BilinearKind::B2);
    let mut out = TrigField::zero(f.arity());
    for term in flux_terms(u, f)? {
        let k = DuhamelKernel::new(power, term.q.norm_sq(), term.source_decay).eval(t);
        if k == 0.0 {
            continue;
        }
        out.accumulate(term.q, term.cos.map(|c| -k * c), term.sin.map(|c| -k * c));
    }
    let out = out.pruned(0.0);
    match kind {
        BilinearKind::B1 => out.leray_project().map(|p| p.pruned(0.0)),
        BilinearKind::B2 => out.times_e3()?.leray_project().map(|p| p.pruned(0.0)),
        BilinearKind::B3 => Ok(out),
    }
}

/// The resonant, off-diagonal difference and sum parts of `ρ1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rho1Parts {
    /// Difference interactions `i = j`, all on `sin(η·x)`.
    pub rho10: TrigField,
    /// Difference interactions `i ≠ j` on `sin((k_i - k'_j)·x)`.
    pub rho11: TrigField,
    /// Sum interactions on `sin((k_i + k'_j)·x)`.
    pub rho12: TrigField,
}

impl Rho1Parts {
    pub fn sum(&self) -> TrigField {
        self.rho10
            .add(&self.rho11)
            .and_then(|f| f.add(&self.rho12))
            .expect("parts are scalar fields")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardState {
    pub g: TrigField,
    pub theta: TrigField,
    pub u1: TrigField,
    pub rho1: TrigField,
    /// Present when the data came from the lacunary construction.
    pub rho1_parts: Option<Rho1Parts>,
    /// Largest coefficient mismatch between the parts and `ρ1`, relative to
    /// `max(1, |coefficient|)`.
    pub reconciliation_error: Option<f64>,
    pub t: f64,
}

/// `g, θ, u1, ρ1` at time `t ∈ (0, 1]` for general data.
///
/// The buoyancy term of the linear flow, `t e^{tΔ} ℙ(ρ0 e₃)`, must vanish:
/// otherwise `g` is no longer a heat-evolved time-0 field and the bilinear
/// terms would need polynomial-in-time weights.
pub fn first_iterates(u0: &TrigField, rho0: &TrigField, t: f64) -> Result<PicardState> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::invalid("t", format!("must lie in (0, 1], got {t}")));
    }
    let buoyancy = rho0.times_e3()?.leray_project()?;
    if !buoyancy.is_zero() {
        return Err(Error::Precondition(
            "the projected buoyancy P(rho0 e3) must vanish for the first iterates".into(),
        ));
    }
    if u0.arity() != Arity::Vector {
        return Err(Error::Arity {
            expected: "vector",
            found: u0.arity().name(),
        });
    }
    let g = u0.heat(t)?;
    let theta = rho0.heat(t)?;
    let u1 = bilinear(BilinearKind::B1, u0, u0, t)?
        .add(&bilinear(BilinearKind::B2, u0, rho0, t)?)?
        .pruned(0.0);
    let rho1 = bilinear(BilinearKind::B3, u0, rho0, t)?;
    Ok(PicardState {
        g,
        theta,
        u1,
        rho1,
        rho1_parts: None,
        reconciliation_error: None,
        t,
    })
}

/// First iterates of the construction, with `ρ1` also assembled from the
/// explicit interaction formulas and reconciled against `B3(g, θ)`.
pub fn first_iterates_lacunary(data: &InitialData, t: f64) -> Result<PicardState> {
    let mut state = first_iterates(&data.u0, &data.rho0, t)?;
    let parts = rho1_parts(&data.waves, data.amp_u, data.amp_rho, t)?;
    let sum = parts.sum();
    let mut worst: f64 = 0.0;
    let freqs: std::collections::BTreeSet<Frequency> =
        sum.modes().chain(state.rho1.modes()).map(|(k, _)| *k).collect();
    for k in freqs {
        let a = sum.get(k).unwrap_or_default();
        let b = state.rho1.get(k).unwrap_or_default();
        for c in 0..3 {
            for (x, y) in [(a.cos[c], b.cos[c]), (a.sin[c], b.sin[c])] {
                worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(1.0));
            }
        }
    }
    state.rho1_parts = Some(parts);
    state.reconciliation_error = Some(worst);
    Ok(state)
}

/// Explicit `ρ1` interaction sums.
///
/// With `a_i = amp_u |k_i| v_i`, `b_j = amp_ρ |k'_j|` and `c_ij = a_i·k'_j`:
/// the sum frequency carries `+c_ij b_j / 2 · K(|k_i + k'_j|²)` on
/// `sin((k_i + k'_j)·x)` and the difference frequency `-c_ij b_j / 2 · K(|k_i - k'_j|²)`
/// on `sin((k_i - k'_j)·x)`, where `K` is the `p = 0` kernel with incoming
/// decay `|k_i|² + |k'_j|²`.
pub fn rho1_parts(waves: &[WaveTriple], amp_u: f64, amp_rho: f64, t: f64) -> Result<Rho1Parts> {
    check_time(t)?;
    let mut rho10 = TrigField::zero(Arity::Scalar);
    let mut rho11 = TrigField::zero(Arity::Scalar);
    let mut rho12 = TrigField::zero(Arity::Scalar);
    let mut eta_coeff = 0.0;
    for wi in waves {
        let ki = wi.kfull;
        for wj in waves {
            let kj = wj.kprime;
            // v_i·k'_j = -kbar_j / (2 kbar_i), exactly
            let c = amp_u * ki.norm() * (-(wj.kbar() as f64) / (2.0 * wi.kbar() as f64));
            let b = amp_rho * kj.norm();
            let incoming = ki.norm_sq() + kj.norm_sq();
            let plus = ki + kj;
            let kp = DuhamelKernel::new(0, plus.norm_sq(), incoming).eval(t);
            if kp != 0.0 {
                rho12.add_scalar_mode(plus, 0.0, c * b / 2.0 * kp);
            }
            if wi.index == wj.index {
                eta_coeff += resonant_term(wi.kbar() as f64, t) * amp_u * amp_rho;
            } else {
                let minus = ki - kj;
                let km = DuhamelKernel::new(0, minus.norm_sq(), incoming).eval(t);
                if km != 0.0 {
                    rho11.add_scalar_mode(minus, 0.0, -c * b / 2.0 * km);
                }
            }
        }
    }
    if eta_coeff != 0.0 {
        rho10.add_scalar_mode(ETA, 0.0, eta_coeff);
    }
    Ok(Rho1Parts {
        rho10: rho10.pruned(0.0),
        rho11: rho11.pruned(0.0),
        rho12: rho12.pruned(0.0),
    })
}

/// Contribution of one wave to the `sin(η·x)` coefficient, per unit amplitude:
/// `|k_i||k'_i| / 4 · K(1, |k_i|² + |k'_i|²)`.
///
/// Written with `|k_i||k'_i| / (A - 1) = sqrt(1 + 1/kbar²) / 2` so that it
/// stays finite for frequencies far beyond floating-point range.
fn resonant_term(kbar: f64, t: f64) -> f64 {
    let inv = if kbar.is_finite() { 1.0 / (kbar * kbar) } else { 0.0 };
    let gap = 2.0 * kbar * kbar * t;
    let grow = if gap.is_finite() { -(-gap).exp_m1() } else { 1.0 };
    0.25 * (-t).exp() * grow * (1.0 + inv).sqrt() / 2.0
}

/// Exact `sin(η·x)` coefficient of `ρ1` for the construction at time `t`,
/// summed over all `r` waves without building any field.
pub fn rho10_exact_coefficient(p: &LacunaryParams, t: f64) -> Result<f64> {
    p.validate_structure().or_else(|e| match e {
        Error::Parameter { name: "r", .. } => Ok(()),
        e => Err(e),
    })?;
    check_time(t)?;
    let amp2 = p.amplitude().powi(2);
    Ok(amp2 * saturating_sum(p.r, |i| resonant_term(p.kbar_f64(i), t)))
}

/// The `sin(η·x)` amplitude of the resonant part in the form
/// `(r^{-2β}/4) Σ e^{-t} |k_i|² (1 - e^{-t(|k_i|²+|k'_i|²)}) / (|k_i|² + |k'_i|² - 1)`.
///
/// This differs from [`rho10_exact_coefficient`] (it carries `|k_i|²` where the
/// Duhamel integral gives `|k_i||k'_i|`, and `e^{-tA}` where it gives
/// `e^{-t(A-1)}`); both tend to the same per-wave value `e^{-t}/8` as
/// `kbar_i² t` grows.
pub fn rho10_coefficient(p: &LacunaryParams, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::invalid("t", format!("must lie in (0, 1], got {t}")));
    }
    let amp2 = p.amplitude().powi(2);
    let term = |i: u32| {
        let kb = p.kbar_f64(i);
        let inv = if kb.is_finite() { 1.0 / (kb * kb) } else { 0.0 };
        let a = 2.0 * kb * kb + 1.0;
        let grow = if (a * t).is_finite() { -(-a * t).exp_m1() } else { 1.0 };
        // |k_i|² / (A - 1) = (1 + 1/kbar²) / 2
        (-t).exp() * (1.0 + inv) / 2.0 * grow
    };
    Ok(amp2 / 4.0 * saturating_sum(p.r, term))
}

/// `Σ_{i=1}^{r} term(i)` for a term that becomes constant once `kbar_i` is huge.
fn saturating_sum(r: u32, term: impl Fn(u32) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut i = 1;
    while i <= r {
        let v = term(i);
        if i > 64 && v == term(i + 1) {
            return sum + v * (r - i + 1) as f64;
        }
        sum += v;
        i += 1;
    }
    sum
}

fn remainder_terms(p: &LacunaryParams, t: f64) -> Result<(f64, f64, f64)> {
    check_remainder_constraint(p.beta, p.nu)?;
    check_time(t)?;
    let horizon = p.horizon();
    if t > horizon * (1.0 + 1e-12) {
        return Err(Error::invalid("t", format!("must not exceed r^(-nu) = {horizon}, got {t}")));
    }
    let r = p.r as f64;
    Ok((r.powf(-3.0 * p.beta), r.powf(1.0 - 3.0 * p.beta), r.powf(2.0 - 4.0 * p.beta)))
}

/// `r^{-3β} + r^{1-3β} t^{1+δ} + r^{2-4β} t^{5/2+δ}`, unit constant.
pub fn remainder_bound_m(p: &LacunaryParams, t: f64) -> Result<f64> {
    let (a, b, c) = remainder_terms(p, t)?;
    Ok(a + b * t.powf(1.0 + p.delta) + c * t.powf(2.5 + p.delta))
}

/// `r^{-3β} t^{-1-δ} + r^{1-3β} + r^{2-4β} t^{3/2}`, the matching bound on the
/// density remainder, unit constant.
pub fn z_bound(p: &LacunaryParams, t: f64) -> Result<f64> {
    let (a, b, c) = remainder_terms(p, t)?;
    Ok(a * t.powf(-1.0 - p.delta) + b + c * t.powf(1.5))
}

/// Norm-level summary of `θ` and `ρ1` at `t` for any `r`, including `r` far
/// beyond the integer frequency range.
///
/// Waves whose diffusion factor `e^{-kbar² t / 4}` is negligible are dropped
/// from the off-resonant parts; `dropped_bound` bounds what they could add to
/// the coefficient sums. The resonant coefficient always includes every wave.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormSummary {
    pub t: f64,
    pub rho10_coefficient: f64,
    /// Coefficient sums (upper bounds on the sup norms).
    pub theta_l1: f64,
    pub rho11_l1: f64,
    pub rho12_l1: f64,
    pub dropped_bound: f64,
    /// Waves kept in the off-resonant parts.
    pub visible_waves: u32,
}

/// Exponent beyond which a wave is treated as fully diffused.
const DIFFUSED_EXPONENT: f64 = 60.0;

pub fn closed_form_summary(p: &LacunaryParams, t: f64) -> Result<ClosedFormSummary> {
    check_time(t)?;
    let r = p.r as f64;
    let amp = p.amplitude();
    // Smallest index whose kbar² t / 4 exceeds the cut, with room for the
    // polynomial prefactors and the r² pair count.
    let mut visible = 0u32;
    while visible < p.r {
        let kb = p.kbar_f64(visible + 1);
        let x = kb * kb * t / 4.0;
        if x > DIFFUSED_EXPONENT + 2.0 * r.ln() + 2.0 * kb.ln().max(0.0) {
            break;
        }
        visible += 1;
    }
    let kept = LacunaryParams { r: visible.max(1), ..*p };
    let waves = crate::lacunary::make_frequencies(&kept)?;
    let waves = &waves[..visible as usize];
    let parts = rho1_parts(waves, amp, amp, t)?;
    let theta_l1 = waves
        .iter()
        .map(|w| amp * w.kprime.norm() * (-w.kprime.norm_sq() * t).exp())
        .sum::<f64>();
    let dropped_bound = if visible < p.r {
        let kb = p.kbar_f64(visible + 1);
        let x = kb * kb * t / 4.0;
        // θ tail plus every dropped pair of both off-resonant parts.
        amp * amp * r * r * (kb + kb * kb * t + 1.0) * (-x).exp() + amp * r * kb * (-4.0 * x).exp()
    } else {
        0.0
    };
    Ok(ClosedFormSummary {
        t,
        rho10_coefficient: rho10_exact_coefficient(p, t)?,
        theta_l1,
        rho11_l1: parts.rho11.linf_upper(),
        rho12_l1: parts.rho12.linf_upper(),
        dropped_bound,
        visible_waves: visible,
    })
}

/// `sup_{t>0} t^{s/2} e^{-t}`: the Besov norm of `sin(η·x)`.
pub fn eta_besov_factor(s: f64) -> f64 {
    let h = s / 2.0;
    h.powf(h) * (-h).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kernel(p: u8, m: f64, a: f64, t: f64) -> f64 {
        duhamel_integral(&DuhamelKernel::new(p, m, a), t).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let e = std::f64::consts::E;
        assert_relative_eq!(kernel(0, 2.0, 1.0, 1.0), 1.0 / e - 1.0 / (e * e), max_relative = 1e-14);
        assert_relative_eq!(kernel(0, 2.0, 1.0, 1.0), 0.232544, epsilon = 1e-6);
        assert_relative_eq!(kernel(0, 1.0, 1.0, 1.0), 1.0 / e, max_relative = 1e-15);
        assert_relative_eq!(kernel(1, 2.0, 1.0, 1.0), (1.0 - 2.0 / e) / e, max_relative = 1e-14);
        assert_relative_eq!(kernel(1, 2.0, 1.0, 1.0), 0.0972089, epsilon = 1e-7);
        assert_relative_eq!(kernel(1, 1.0, 1.0, 2.0), 2.0 * (-2.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn kernel_is_symmetric_in_rates_for_p0() {
        for (m, a) in [(3.0, 7.0), (0.0, 5.0), (100.0, 1.0)] {
            assert_relative_eq!(kernel(0, m, a, 0.3), kernel(0, a, m, 0.3), max_relative = 1e-14);
        }
    }

    #[test]
    fn kernel_errors() {
        assert!(duhamel_integral(&DuhamelKernel::new(0, -1.0, 1.0), 1.0).is_err());
        assert!(duhamel_integral(&DuhamelKernel::new(0, 1.0, f64::NAN), 1.0).is_err());
        assert!(duhamel_integral(&DuhamelKernel::new(2, 1.0, 1.0), 1.0).is_err());
        assert!(duhamel_integral(&DuhamelKernel::new(0, 1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn kernel_continuous_through_degenerate_rates() {
        let (a, t) = (5.0, 0.7);
        // through M = A and through both series cutoffs
        for p in [0u8, 1] {
            for center in [a, a + SERIES_CUTOFF / t, a - SERIES_CUTOFF / t] {
                let mut prev = kernel(p, center - 100e-11, a, t);
                for j in -99..=100 {
                    let v = kernel(p, center + j as f64 * 1e-11, a, t);
                    assert!((v - prev).abs() < 1e-10, "jump near m={center}");
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn kernel_underflow_is_zero() {
        assert_eq!(kernel(0, 1e300, 1e300, 1.0), 0.0);
        assert_eq!(kernel(1, f64::INFINITY, 1e10, 1.0), 0.0);
    }

    #[test]
    fn series_branches_match_closed_forms() {
        for x in [0.3f64, 0.49, 0.51, 0.7] {
            let direct2 = (1.0 - (1.0 + x) * (-x).exp()) / (x * x);
            let directpsi = (x - 1.0 + (-x).exp()) / (x * x);
            assert_relative_eq!(phi2(x), direct2, max_relative = 1e-13);
            assert_relative_eq!(psi(x), directpsi, max_relative = 1e-13);
        }
        assert_eq!(phi2(0.0), 0.5);
        assert_eq!(psi(0.0), 0.5);
    }

    #[test]
    fn b1_single_wave_vanishes() {
        let p = LacunaryParams::new(1, 0.45, 4, 0.2).unwrap();
        let d = InitialData::new(&p).unwrap();
        assert!(bilinear(BilinearKind::B1, &d.u0, &d.u0, 0.3).unwrap().is_empty());
    }

    #[test]
    fn bilinear_arity_and_time_errors() {
        let p = LacunaryParams::new(2, 0.45, 4, 0.2).unwrap();
        let d = InitialData::new(&p).unwrap();
        assert!(matches!(bilinear(BilinearKind::B1, &d.u0, &d.rho0, 0.1), Err(Error::Arity { .. })));
        assert!(matches!(bilinear(BilinearKind::B3, &d.u0, &d.u0, 0.1), Err(Error::Arity { .. })));
        assert!(matches!(bilinear(BilinearKind::B3, &d.rho0, &d.rho0, 0.1), Err(Error::Arity { .. })));
        assert!(bilinear(BilinearKind::B3, &d.u0, &d.rho0, 0.0).is_err());
    }

    #[test]
    fn b1_and_b2_are_solenoidal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let u = TrigField::random(&mut rng, Arity::Vector, 3, 6);
            let v = TrigField::random(&mut rng, Arity::Vector, 3, 6);
            let f = TrigField::random(&mut rng, Arity::Scalar, 3, 6);
            assert!(bilinear(BilinearKind::B1, &u, &v, 0.2).unwrap().divergence().unwrap().is_zero());
            assert!(bilinear(BilinearKind::B2, &u, &f, 0.2).unwrap().divergence().unwrap().is_zero());
        }
    }

    #[test]
    fn b3_resonant_coefficient_single_wave() {
        let p = LacunaryParams::new(1, 0.45, 2, 0.2).unwrap();
        let d = InitialData::scaled(&p, 1.0 / p.amplitude()).unwrap();
        let rho1 = bilinear(BilinearKind::B3, &d.u0, &d.rho0, 0.1).unwrap();
        let c = rho1.get(ETA).unwrap().sin[0];
        let exact = (-0.1f64).exp() * (-(-0.8f64).exp_m1()) * 1.25f64.sqrt() / 8.0;
        assert_relative_eq!(c, exact, max_relative = 1e-13);
        assert_relative_eq!(c, 0.069635, epsilon = 1e-6);
    }

    #[test]
    fn rho10_formula_value() {
        // r = 1 makes r^{-2β} = 1
        let p = LacunaryParams::new(1, 0.45, 2, 0.2).unwrap();
        let c = rho10_coefficient(&p, 0.1).unwrap();
        let closed = 0.25 * (-0.1f64).exp() * 5.0 * (1.0 - (-0.9f64).exp()) / 8.0;
        assert_relative_eq!(c, closed, max_relative = 1e-14);
        assert_relative_eq!(c, 0.083900, epsilon = 1e-6);
        assert!(rho10_coefficient(&p, 1e-12).unwrap() < 1e-10);
    }

    #[test]
    fn first_iterates_basic_cases() {
        let p = LacunaryParams::new(3, 0.45, 4, 0.2).unwrap();
        let d = InitialData::new(&p).unwrap();
        let zero = TrigField::zero(Arity::Scalar);
        let s = first_iterates(&d.u0, &zero, 0.2).unwrap();
        assert!(s.rho1.is_empty());
        assert_eq!(s.u1, bilinear(BilinearKind::B1, &d.u0, &d.u0, 0.2).unwrap());

        let r1 = LacunaryParams::new(1, 0.45, 4, 0.2).unwrap();
        let s = first_iterates_lacunary(&InitialData::new(&r1).unwrap(), 0.5).unwrap();
        let parts = s.rho1_parts.unwrap();
        assert!(parts.rho11.is_empty());
        assert_eq!(parts.rho10.modes().map(|(k, _)| *k).collect::<Vec<_>>(), vec![ETA]);

        assert!(first_iterates(&d.u0, &d.rho0, 1.5).is_err());
        let tilted = TrigField::scalar_wave(Frequency::new(1, 0, 1), 1.0, 0.0);
        assert!(matches!(first_iterates(&d.u0, &tilted, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn parts_reconcile_with_b3() {
        for r in 1..=4 {
            let p = LacunaryParams::new(r, 0.45, 4, 0.2).unwrap();
            let s = first_iterates_lacunary(&InitialData::new(&p).unwrap(), 0.25).unwrap();
            assert!(s.reconciliation_error.unwrap() <= 1e-12);
        }
    }

    #[test]
    fn exact_resonant_coefficient_matches_fields_and_saturates() {
        let p = LacunaryParams::new(6, 0.45, 3, 0.2).unwrap();
        let s = first_iterates_lacunary(&InitialData::new(&p).unwrap(), 0.3).unwrap();
        let field = s.rho1_parts.unwrap().rho10.get(ETA).unwrap().sin[0];
        assert_relative_eq!(field, rho10_exact_coefficient(&p, 0.3).unwrap(), max_relative = 1e-13);

        let big = LacunaryParams { r: 10_000, ..p };
        let direct: f64 = (1..=10_000).map(|i| resonant_term(big.kbar_f64(i), 0.3)).sum();
        assert_relative_eq!(
            rho10_exact_coefficient(&big, 0.3).unwrap(),
            big.amplitude().powi(2) * direct,
            max_relative = 1e-12
        );
    }

    #[test]
    fn remainder_bounds() {
        let p = LacunaryParams::new(16, 0.45, 4, 0.1).unwrap();
        let t = p.horizon();
        let r = 16f64;
        let expect = r.powf(-1.35) + r.powf(-0.35) * t.powf(1.01) + r.powf(0.2) * t.powf(2.51);
        assert_relative_eq!(remainder_bound_m(&p, t).unwrap(), expect, max_relative = 1e-14);
        assert_relative_eq!(remainder_bound_m(&p, 1e-12).unwrap(), r.powf(-1.35), max_relative = 1e-9);
        assert!(remainder_bound_m(&p, 2.0 * t).is_err());
        let bad = LacunaryParams { beta: 0.3, ..p };
        assert!(matches!(remainder_bound_m(&bad, 0.1), Err(Error::Parameter { name: "beta", .. })));
    }

    #[test]
    fn closed_form_summary_matches_fields() {
        let p = LacunaryParams::new(8, 0.45, 2, 0.2).unwrap();
        let t = 0.05;
        let sum = closed_form_summary(&p, t).unwrap();
        let s = first_iterates_lacunary(&InitialData::new(&p).unwrap(), t).unwrap();
        let parts = s.rho1_parts.unwrap();
        assert!(parts.rho11.linf_upper() <= sum.rho11_l1 + sum.dropped_bound + 1e-15);
        assert!((parts.rho11.linf_upper() - sum.rho11_l1).abs() <= sum.dropped_bound + 1e-14);
        assert!((parts.rho12.linf_upper() - sum.rho12_l1).abs() <= sum.dropped_bound + 1e-14);
        let huge = LacunaryParams { r: 1 << 14, ..p };
        let h = closed_form_summary(&huge, huge.horizon()).unwrap();
        assert!(h.visible_waves < 20 && h.dropped_bound < 1e-12, "{h:?}");
    }

    #[test]
    fn eta_factor() {
        assert_relative_eq!(eta_besov_factor(1.0), 0.428882, epsilon = 1e-6);
    }
}
