//! Lacunary plane-wave initial data and its frequency geometry.
//!
//! Wave `i` (1-based) sits at `k'_i = (0, 0, 2^{i-1} K)` and `k_i = k'_i + η`
//! with `η = (0, 1, 0)`. The velocity wave carries `v_i = (0, 1/2, -1/(2 kbar_i))`,
//! orthogonal to `k_i`, so
//!
//! `u0 = r^{-β} Σ |k_i| v_i cos(k_i·x)`, `ρ0 = r^{-β} Σ |k'_i| cos(k'_i·x)`.

use crate::error::{Error, Result};
use crate::trig_field::{Arity, Frequency, TrigField, Vec3};
use crate::verify::BoundReport;

/// Largest admissible top frequency: sums of a few construction
/// frequencies must stay inside `i128`.
pub const MAX_KBAR: i128 = i128::MAX >> 4;

pub const DEFAULT_DELTA: f64 = 0.01;

pub const ETA: Frequency = Frequency::new(0, 1, 0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LacunaryParams {
    /// Number of waves.
    pub r: u32,
    /// Amplitude exponent.
    pub beta: f64,
    /// Base frequency.
    pub k: i128,
    /// Time exponent: the observation time is `r^{-ν}`.
    pub nu: f64,
    pub delta: f64,
    /// Order of the target norm.
    pub s: f64,
}

impl LacunaryParams {
    /// Parameters with `δ = 0.01` and `s = 1`, checked with [`validate`](Self::validate).
    pub fn new(r: u32, beta: f64, k: i128, nu: f64) -> Result<Self> {
        let p = LacunaryParams {
            r,
            beta,
            k,
            nu,
            delta: DEFAULT_DELTA,
            s: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// `β = 1/2 - ν/2` and `K = max(2, round(r^{ν/2}))`.
    pub fn inflation_rule(r: u32, nu: f64, delta: f64, s: f64) -> Result<Self> {
        let p = LacunaryParams {
            r,
            beta: 0.5 - nu / 2.0,
            k: k_rule(r, nu),
            nu,
            delta,
            s,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_s(mut self, s: f64) -> Result<Self> {
        self.s = s;
        self.validate()?;
        Ok(self)
    }

    /// Ranges of every field, without the coupling between β and ν.
    pub fn validate_structure(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::parameter("r", "need at least one wave"));
        }
        if self.k < 2 {
            return Err(Error::parameter("K", format!("base frequency must be an integer >= 2, got {}", self.k)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::parameter("beta", format!("must be positive, got {}", self.beta)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::parameter("nu", format!("must be non-negative, got {}", self.nu)));
        }
        if !(self.delta > 0.0 && self.delta <= 0.2) {
            return Err(Error::parameter("delta", format!("must lie in (0, 0.2], got {}", self.delta)));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::parameter("s", format!("must be positive, got {}", self.s)));
        }
        self.top_kbar()?;
        Ok(())
    }

    /// Full validation, including `β > max{0, 1/2 - (3/4)ν}` needed for the
    /// remainder estimate.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        check_remainder_constraint(self.beta, self.nu)
    }

    pub fn amplitude(&self) -> f64 {
        (self.r as f64).powf(-self.beta)
    }

    /// Observation time `T = r^{-ν}`.
    pub fn horizon(&self) -> f64 {
        (self.r as f64).powf(-self.nu)
    }

    /// `kbar_i = 2^{i-1} K`, `None` on overflow.
    pub fn kbar(&self, i: u32) -> Option<i128> {
        if i == 0 || i > 127 {
            return None;
        }
        self.k.checked_mul(1i128.checked_shl(i - 1)?).filter(|v| *v > 0 && *v <= MAX_KBAR)
    }

    /// `kbar_i` in floating point, valid far beyond the integer range.
    pub fn kbar_f64(&self, i: u32) -> f64 {
        self.k as f64 * 2f64.powi(i as i32 - 1)
    }

    fn top_kbar(&self) -> Result<i128> {
        self.kbar(self.r).ok_or_else(|| {
            Error::parameter(
                "r",
                format!(
                    "2^(r-1)·K = 2^{}·{} exceeds the frequency limit 2^123",
                    self.r - 1,
                    self.k
                ),
            )
        })
    }
}

/// `max{0, 1/2 - (3/4)ν}`.
pub fn remainder_beta_threshold(nu: f64) -> f64 {
    (0.5 - 0.75 * nu).max(0.0)
}

pub(crate) fn check_remainder_constraint(beta: f64, nu: f64) -> Result<()> {
    let floor = remainder_beta_threshold(nu);
    if beta > floor {
        Ok(())
    } else {
        Err(Error::parameter(
            "beta",
            format!(
                "remainder estimate requires beta > max{{0, 1/2 - (3/4)nu}} = {floor}; got beta={beta}, nu={nu}"
            ),
        ))
    }
}

/// `K = max(2, round(r^{ν/2}))`.
pub fn k_rule(r: u32, nu: f64) -> i128 {
    let k = (r as f64).powf(nu / 2.0).round();
    if k.is_finite() && k >= 2.0 {
        k as i128
    } else {
        2
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveTriple {
    /// 1-based wave index.
    pub index: u32,
    pub kprime: Frequency,
    pub kfull: Frequency,
    pub v: Vec3,
}

impl WaveTriple {
    pub fn kbar(&self) -> i128 {
        self.kprime.0[2]
    }
}

pub fn make_frequencies(p: &LacunaryParams) -> Result<Vec<WaveTriple>> {
    p.validate_structure()?;
    (1..=p.r).map(|i| wave(p, i)).collect()
}

fn wave(p: &LacunaryParams, i: u32) -> Result<WaveTriple> {
    let kbar = p
        .kbar(i)
        .ok_or_else(|| Error::parameter("r", format!("frequency 2^{}·{} overflows", i - 1, p.k)))?;
    let kprime = Frequency::new(0, 0, kbar);
    Ok(WaveTriple {
        index: i,
        kprime,
        kfull: kprime + ETA,
        v: [0.0, 0.5, -0.5 / kbar as f64],
    })
}

/// The construction's data together with the amplitudes used to build it.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub params: LacunaryParams,
    pub waves: Vec<WaveTriple>,
    /// Overall factor on `u0`, `r^{-β}` times any extra scaling.
    pub amp_u: f64,
    pub amp_rho: f64,
    pub u0: TrigField,
    pub rho0: TrigField,
}

impl InitialData {
    pub fn new(p: &LacunaryParams) -> Result<Self> {
        Self::scaled(p, 1.0)
    }

    /// Data with both amplitudes multiplied by `factor`.
    pub fn scaled(p: &LacunaryParams, factor: f64) -> Result<Self> {
        if !factor.is_finite() {
            return Err(Error::invalid("factor", "amplitude factor must be finite"));
        }
        let waves = make_frequencies(p)?;
        let amp = p.amplitude() * factor;
        Ok(Self::from_waves(*p, waves, amp, amp))
    }

    /// Data built from `waves` only; used for the slow waves that survive
    /// diffusion when the full set would overflow.
    pub(crate) fn from_waves(params: LacunaryParams, waves: Vec<WaveTriple>, amp_u: f64, amp_rho: f64) -> Self {
        let mut u0 = TrigField::zero(Arity::Vector);
        let mut rho0 = TrigField::zero(Arity::Scalar);
        for w in &waves {
            let a = amp_u * w.kfull.norm();
            u0.add_vector_mode(w.kfull, w.v.map(|c| a * c), [0.0; 3]);
            rho0.add_scalar_mode(w.kprime, amp_rho * w.kprime.norm(), 0.0);
        }
        InitialData {
            params,
            waves,
            amp_u,
            amp_rho,
            u0,
            rho0,
        }
    }
}

/// `(u0, ρ0)` for `p`.
pub fn make_initial_data(p: &LacunaryParams) -> Result<(TrigField, TrigField)> {
    let d = InitialData::new(p)?;
    Ok((d.u0, d.rho0))
}

/// Exact checks of the orthogonality relations, plus the approximate
/// `v_i·k_j ≈ v_i·k'_j` reported for information.
///
/// `v_i·(a, b, c) = (b·kbar_i - c) / (2 kbar_i)`, so every relation reduces to
/// an integer identity between numerators over the common denominator `2 kbar_i`.
pub fn verify_construction(p: &LacunaryParams) -> Result<Vec<BoundReport>> {
    let waves = make_frequencies(p)?;
    let numer = |w: &WaveTriple, k: &Frequency| -> i128 { k.0[1] * w.kbar() - k.0[2] };
    let mut out = Vec::new();

    let mut orth = true;
    let mut half = true;
    let mut cross = true;
    let mut lacunary = true;
    let mut worst_rel: f64 = 0.0;
    for (i, wi) in waves.iter().enumerate() {
        orth &= wi.v[0] == 0.0 && numer(wi, &wi.kfull) == 0;
        // v_i·k'_i = -1/2  <=>  numerator = -kbar_i
        half &= numer(wi, &wi.kprime) == -wi.kbar();
        if let Some(next) = waves.get(i + 1) {
            lacunary &= next.kbar() == 2 * wi.kbar();
        }
        for wj in &waves {
            // v_i·k'_j = -kbar_j / (2 kbar_i)
            cross &= numer(wi, &wj.kprime) == -wj.kbar();
            let exact = numer(wi, &wj.kprime) as f64 / (2.0 * wi.kbar() as f64);
            let approx = numer(wi, &wj.kfull) as f64 / (2.0 * wi.kbar() as f64);
            worst_rel = worst_rel.max(((approx - exact) / exact).abs());
        }
    }
    let pass_flag = |name: &str, ok: bool| {
        BoundReport::new(name, Some(*p), None, if ok { 0.0 } else { 1.0 }, 1.0).with_pass(ok)
    };
    out.push(pass_flag("v_i.k_i = 0", orth));
    out.push(pass_flag("v_i.k'_i = -1/2", half));
    out.push(pass_flag("v_i.k'_j = -|k'_j|/(2|k'_i|)", cross));
    out.push(pass_flag("|k'_(i+1)| = 2|k'_i|", lacunary));
    let model = 1.0 / (2.0 * (p.k as f64).powi(2));
    out.push(
        BoundReport::new("v_i.k_j ~ v_i.k'_j (relative deviation)", Some(*p), None, worst_rel, model)
            .with_pass(worst_rel <= model)
            .informational()
            .with_note("the eta component adds exactly 1/2 to every v_i.k_j"),
    );
    Ok(out)
}

/// `sup_{τ>0} Σ_{m∈ℤ} sqrt(4^m τ) e^{-4^m τ}`.
///
/// With `τ = K² t` this bounds `t^{1/2} Σ_i kbar_i e^{-kbar_i² t}` for every
/// `r` and `K`, which in turn bounds the Besov norm of the data through the
/// coefficient sums. The sum is invariant under `τ -> 4τ`, so one period is
/// scanned; the returned value includes a margin for the scan spacing.
pub fn lacunary_sup_constant() -> f64 {
    static VALUE: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *VALUE.get_or_init(|| {
        let h = |x: f64| x.sqrt() * (-x).exp();
        let sum = |tau: f64| (-40..=8).map(|m| h(4f64.powi(m) * tau)).sum::<f64>();
        let n = 20_000;
        let step = 4f64.ln() / n as f64;
        let best = (0..=n).map(|j| sum((j as f64 * step).exp())).fold(0.0, f64::max);
        // |d sum / d ln τ| <= Σ |h'(x) x| <= 2 over the period.
        best + 2.0 * step
    })
}

/// Certified upper bounds on the homogeneous `B^{-1}` norms of `(u0, ρ0)`.
pub fn data_norm_upper(p: &LacunaryParams) -> (f64, f64) {
    let lam = lacunary_sup_constant();
    let k2 = (p.k as f64).powi(2);
    // |k_s||v_s| = (kbar² + 1) / (2 kbar) <= kbar (1 + 1/K²) / 2, and |k_s|² >= kbar².
    let u = p.amplitude() * 0.5 * (1.0 + 1.0 / k2) * lam;
    let rho = p.amplitude() * lam;
    (u, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig_field::TGridSpec;

    fn params(r: u32, k: i128) -> LacunaryParams {
        LacunaryParams::new(r, 0.45, k, 0.2).unwrap()
    }

    #[test]
    fn frequencies_match_construction() {
        let w = make_frequencies(&params(3, 4)).unwrap();
        assert_eq!(w[0].kprime, Frequency::new(0, 0, 4));
        assert_eq!(w[0].kfull, Frequency::new(0, 1, 4));
        assert_eq!(w[0].v, [0.0, 0.5, -0.125]);
        assert_eq!(w[2].kprime, Frequency::new(0, 0, 16));
        assert_eq!(w[2].v, [0.0, 0.5, -0.03125]);
        for t in &w {
            assert_eq!(t.kfull.dot(&t.v), 0.0);
            assert_eq!(t.kprime.dot(&t.v), -0.5);
        }
    }

    #[test]
    fn single_wave_data() {
        let p = LacunaryParams::new(1, 0.3, 4, 0.5).unwrap();
        let d = InitialData::new(&p).unwrap();
        let m = d.u0.get(Frequency::new(0, 1, 4)).unwrap();
        let a = 17f64.sqrt();
        assert_eq!(m.cos, [0.0, 0.5 * a, -0.125 * a]);
        assert_eq!(d.rho0.get(Frequency::new(0, 0, 4)).unwrap().cos[0], 4.0);
    }

    #[test]
    fn data_is_solenoidal_and_buoyancy_is_a_gradient() {
        for k in [3, 4, 5] {
            let (u0, rho0) = make_initial_data(&params(5, k)).unwrap();
            assert!(u0.divergence().unwrap().is_zero());
            assert!(rho0.times_e3().unwrap().leray_project().unwrap().is_zero());
            assert!(u0.is_mean_zero() && rho0.is_mean_zero());
            assert_eq!(rho0.len(), 5);
            assert!(rho0.modes().all(|(f, _)| f.0[0] == 0 && f.0[1] == 0));
        }
    }

    #[test]
    fn construction_checks_pass() {
        let reports = verify_construction(&params(5, 4)).unwrap();
        assert!(reports.iter().all(|r| !r.is_failure()), "{reports:#?}");
        let approx = reports.last().unwrap();
        assert!(approx.informational && !approx.pass);
    }

    #[test]
    fn parameter_errors() {
        assert!(LacunaryParams::new(4, 0.3, 4, 0.1).is_err());
        let err = LacunaryParams::new(4, 0.3, 4, 0.1).unwrap_err().to_string();
        assert!(err.contains("1/2 - (3/4)nu"), "{err}");
        assert!(LacunaryParams::new(4, 0.45, 1, 0.2).is_err());
        assert!(LacunaryParams::new(0, 0.45, 4, 0.2).is_err());
        assert!(LacunaryParams::new(200, 0.45, 4, 0.2).is_err());
        assert!(LacunaryParams::new(64, 0.45, 2, 0.2).is_ok());
        assert!(LacunaryParams::new(4, 0.45, 4, 0.2).unwrap().with_delta(0.5).is_err());
    }

    #[test]
    fn k_rule_rounds_and_floors() {
        assert_eq!(k_rule(64, 0.2), 2);
        assert_eq!(k_rule(1 << 20, 0.2), 4);
        assert_eq!(k_rule(1 << 20, 0.5), 32);
        assert_eq!(k_rule(1, 0.9), 2);
    }

    #[test]
    fn sup_constant_bounds_measured_norms() {
        let lam = lacunary_sup_constant();
        assert!(lam > 1.2 && lam < 1.3, "{lam}");
        for r in [1, 2, 4, 8] {
            let p = params(r, 4);
            let (u0, rho0) = make_initial_data(&p).unwrap();
            let (bu, brho) = data_norm_upper(&p);
            let g = TGridSpec::default();
            assert!(u0.besov_norm(1.0, &g).unwrap().value <= bu);
            assert!(rho0.besov_norm(1.0, &g).unwrap().value <= brho);
        }
    }
}
