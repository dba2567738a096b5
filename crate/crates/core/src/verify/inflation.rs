//! The growth experiment along `β = 1/2 - ν/2`, `K = max(2, round(r^{ν/2}))`,
//! `T = r^{-ν}`.

use super::lemmas::fields_available;
use super::regression as frozen;
use super::report::{loglog_slope, BoundReport, SweepResult};
use crate::error::{Error, Result};
use crate::lacunary::{data_norm_upper, k_rule, InitialData, LacunaryParams};
use crate::picard::{closed_form_summary, eta_besov_factor, rho10_exact_coefficient, z_bound};
use crate::trig_field::TGridSpec;

pub const INFLATION_COLUMNS: [&str; 13] = [
    "r",
    "beta",
    "nu",
    "delta",
    "K",
    "T",
    "s",
    "norm_u0_B1",
    "norm_rho0_B1",
    "rho10_besov",
    "correction_sum",
    "net_lower_bound",
    "slope_running",
];

#[derive(Clone, Debug, PartialEq)]
pub struct InflationConfig {
    pub rs: Vec<u32>,
    pub nu: f64,
    pub delta: f64,
    pub s: f64,
    /// Fixed `β` instead of `1/2 - ν/2`; then the full parameter constraint applies.
    pub beta: Option<f64>,
    /// Fixed `K` instead of the rule.
    pub k: Option<i128>,
    /// Common factor on both data amplitudes.
    pub amplitude_scale: f64,
    pub grid: TGridSpec,
}

impl Default for InflationConfig {
    fn default() -> Self {
        InflationConfig {
            rs: vec![8, 16, 32, 64],
            nu: 0.2,
            delta: 0.01,
            s: 1.0,
            beta: None,
            k: None,
            amplitude_scale: 1.0,
            grid: TGridSpec::default(),
        }
    }
}

impl InflationConfig {
    /// Parameters of one sweep point.
    pub fn params(&self, r: u32) -> Result<LacunaryParams> {
        let p = LacunaryParams {
            r,
            beta: self.beta.unwrap_or(0.5 - self.nu / 2.0),
            k: self.k.unwrap_or_else(|| k_rule(r, self.nu)),
            nu: self.nu,
            delta: self.delta,
            s: self.s,
        };
        if self.beta.is_some() {
            p.validate()?;
        } else {
            p.validate_structure()?;
        }
        Ok(p)
    }
}

/// The five correction terms of the closing chain at time `t`, unit constants:
/// `r^{-β} t^{-1/2}`, `r^{-2β} t^{-δ}`, `r^{-3β} t^{-1-δ}`, `r^{1-3β}`,
/// `r^{2-4β} t^{3/2}`.
pub fn correction_terms(p: &LacunaryParams, t: f64) -> [f64; 5] {
    let r = p.r as f64;
    let (b, d) = (p.beta, p.delta);
    [
        r.powf(-b) * t.powf(-0.5),
        r.powf(-2.0 * b) * t.powf(-d),
        r.powf(-3.0 * b) * t.powf(-1.0 - d),
        r.powf(1.0 - 3.0 * b),
        r.powf(2.0 - 4.0 * b) * t.powf(1.5),
    ]
}

/// `sup_{0<t<=1} t^{s/2} e^{-t}`: the inhomogeneous `B^{-s}` norm of `sin(η·x)`.
pub fn eta_besov_factor_inhomogeneous(s: f64) -> f64 {
    if s <= 2.0 {
        eta_besov_factor(s)
    } else {
        (-1.0f64).exp()
    }
}

/// Certified lower bound on `||ρ(T)||_{B^{-s}}` from the first iterates and the
/// remainder model with the frozen constant.
///
/// Uses the inhomogeneous norm (heat times up to 1), which never exceeds the
/// homogeneous one and is itself bounded by the sup norm. Every correction is a
/// coefficient sum, i.e. an upper bound on the sup norm of that part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifiedBound {
    pub rho10_besov: f64,
    pub theta: f64,
    pub rho11: f64,
    pub rho12: f64,
    pub dropped: f64,
    pub remainder: f64,
    pub lower_bound: f64,
}

pub fn certified_lower_bound(p: &LacunaryParams, t: f64) -> Result<CertifiedBound> {
    let cf = closed_form_summary(p, t)?;
    let rho10_besov = cf.rho10_coefficient * eta_besov_factor_inhomogeneous(p.s);
    let remainder = frozen::REMAINDER_CONSTANT * z_bound(p, t)?;
    let lower_bound = rho10_besov - cf.theta_l1 - cf.rho11_l1 - cf.rho12_l1 - cf.dropped_bound - remainder;
    Ok(CertifiedBound {
        rho10_besov,
        theta: cf.theta_l1,
        rho11: cf.rho11_l1,
        rho12: cf.rho12_l1,
        dropped: cf.dropped_bound,
        remainder,
        lower_bound,
    })
}

/// One row per `r`, in increasing order, plus the fitted slope of
/// `||ρ1,0(T)||_{B^{-s}}` against `r`.
pub fn inflation_experiment(cfg: &InflationConfig) -> Result<SweepResult> {
    if cfg.rs.is_empty() {
        return Err(Error::invalid("rs", "need at least one r"));
    }
    if !(cfg.amplitude_scale > 0.0 && cfg.amplitude_scale.is_finite()) {
        return Err(Error::invalid("amplitude_scale", "must be positive and finite"));
    }
    let mut rs = cfg.rs.clone();
    rs.sort_unstable();
    rs.dedup();
    let mut sweep = SweepResult::new("inflation", &INFLATION_COLUMNS);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let a2 = cfg.amplitude_scale * cfg.amplitude_scale;
    for r in rs {
        let p = cfg.params(r)?;
        let t = p.horizon();
        let (nu0, nrho0) = if fields_available(&p) {
            let d = InitialData::scaled(&p, cfg.amplitude_scale)?;
            (d.u0.besov_norm(1.0, &cfg.grid)?.value, d.rho0.besov_norm(1.0, &cfg.grid)?.value)
        } else {
            let (u, rho) = data_norm_upper(&p);
            (u * cfg.amplitude_scale, rho * cfg.amplitude_scale)
        };
        let rho10 = a2 * rho10_exact_coefficient(&p, t)? * eta_besov_factor(p.s);
        let corr: f64 = correction_terms(&p, t).iter().sum();
        xs.push(r as f64);
        ys.push(rho10);
        let running = loglog_slope(&xs, &ys).unwrap_or(f64::NAN);
        sweep.push_row(vec![
            r as f64,
            p.beta,
            p.nu,
            p.delta,
            p.k as f64,
            t,
            p.s,
            nu0,
            nrho0,
            rho10,
            corr,
            rho10 - corr,
            running,
        ]);
        if cfg.amplitude_scale == 1.0 && p.validate().is_ok() {
            let cb = certified_lower_bound(&p, t)?;
            sweep.reports.push(
                BoundReport::new("net_lower_bound_measured", Some(p), Some(t), cb.lower_bound, rho10)
                    .informational()
                    .with_note(format!(
                        "rho10={:e} theta={:e} rho11={:e} rho12={:e} remainder={:e}",
                        cb.rho10_besov, cb.theta, cb.rho11, cb.rho12, cb.remainder
                    )),
            );
        }
    }
    sweep.slope = loglog_slope(&xs, &ys);
    if let Some(slope) = sweep.slope {
        let target = 1.0 - 2.0 * cfg.beta.unwrap_or(0.5 - cfg.nu / 2.0);
        sweep.reports.push(
            BoundReport::new("inflation_slope", None, None, slope, target)
                .with_pass((slope - target).abs() <= frozen::SLOPE_TOLERANCE)
                .with_note(format!("target 1-2beta={target}, tolerance {}", frozen::SLOPE_TOLERANCE)),
        );
    }
    sweep.reports.extend(exponent_conditions(
        cfg.beta.unwrap_or(0.5 - cfg.nu / 2.0),
        cfg.nu,
        cfg.delta,
    ));
    Ok(sweep)
}

/// Signs of the exponents in the closing chain and the remainder smallness
/// condition. Each report's `lhs` is the exponent; pass means the sign needed.
pub fn exponent_conditions(beta: f64, nu: f64, delta: f64) -> Vec<BoundReport> {
    let negative = [
        ("exp_theta", -1.0 + beta - nu / 2.0),
        ("exp_rho11", -1.0 + nu * delta),
        ("exp_z_early", -1.0 - beta + nu + nu * delta),
        ("exp_z_mid", -beta),
        ("exp_z_late", 1.0 - 2.0 * beta - 1.5 * nu),
        ("exp_c2_linear", -beta),
        ("exp_c2_growth", 1.0 - 2.0 * beta - 1.5 * nu),
        ("exp_c1c3_early", -3.0 * beta + (0.5 + delta) * nu),
        ("exp_c1c3_mid", 1.0 - 3.0 * beta - 1.5 * nu),
        ("exp_c1c3_late", 2.0 - 4.0 * beta - 3.0 * nu),
    ];
    let mut out: Vec<BoundReport> = negative
        .iter()
        .map(|(name, e)| BoundReport::new(*name, None, None, *e, 1.0).with_pass(*e < 0.0).with_note("needs < 0"))
        .collect();
    let growth = 1.0 - 2.0 * beta;
    out.push(
        BoundReport::new("exp_growth", None, None, growth, 1.0)
            .with_pass(growth > 0.0)
            .with_note("needs > 0"),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> InflationConfig {
        InflationConfig {
            grid: TGridSpec {
                points: 60,
                ..TGridSpec::default()
            },
            ..InflationConfig::default()
        }
    }

    #[test]
    fn conditions_hold_for_small_nu() {
        let reps = exponent_conditions(0.4, 0.2, 0.01);
        assert_eq!(reps.len(), 11);
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
        assert!(exponent_conditions(0.5, 0.0, 0.01).iter().any(|r| !r.pass));
    }

    #[test]
    fn rows_and_running_slope() {
        let s = inflation_experiment(&quick()).unwrap();
        assert_eq!(s.rows.len(), 4);
        assert_eq!(s.columns.len(), 13);
        assert!(s.rows[0][12].is_nan());
        let last = s.rows[3][12];
        assert_eq!(Some(last), s.slope);
        let rho = s.column("rho10_besov").unwrap();
        assert!(rho.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn slope_ignores_amplitude_scale() {
        let a = inflation_experiment(&quick()).unwrap().slope.unwrap();
        let cfg = InflationConfig {
            amplitude_scale: 0.37,
            ..quick()
        };
        let b = inflation_experiment(&cfg).unwrap().slope.unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn zero_nu_is_flat() {
        let cfg = InflationConfig {
            nu: 0.0,
            ..quick()
        };
        let s = inflation_experiment(&cfg).unwrap().slope.unwrap();
        assert!(s.abs() < 0.05, "{s}");
    }

    #[test]
    fn fixed_beta_is_validated() {
        let cfg = InflationConfig {
            nu: 0.1,
            beta: Some(0.3),
            ..quick()
        };
        let err = inflation_experiment(&cfg).unwrap_err().to_string();
        assert!(err.contains("1/2 - (3/4)nu"), "{err}");
    }
}
