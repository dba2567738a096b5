//! Search for a parameter choice that exhibits the inflation with certified
//! margins: small data, short time, large density norm.

use super::inflation::{certified_lower_bound, CertifiedBound};
use super::report::BoundReport;
use crate::error::{Error, Result};
use crate::lacunary::{data_norm_upper, k_rule, LacunaryParams, DEFAULT_DELTA};

/// Largest `r` examined.
pub const WITNESS_R_MAX: u32 = 1 << 14;

/// `ν` values tried, each with `β = 1/2 - ν/2`.
pub fn witness_nu_grid() -> Vec<f64> {
    (1..20).map(|j| j as f64 * 0.05).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Witness {
    pub params: LacunaryParams,
    pub t: f64,
    pub data_norm_u: f64,
    pub data_norm_rho: f64,
    pub bound: CertifiedBound,
}

impl Witness {
    /// `(ε - data, ε - T, lower - 1/ε)`; all positive for a witness.
    pub fn margins(&self, epsilon: f64) -> (f64, f64, f64) {
        (
            epsilon - self.data_norm_u.max(self.data_norm_rho),
            epsilon - self.t,
            self.bound.lower_bound - 1.0 / epsilon,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    pub epsilon: f64,
    pub s: f64,
    pub witness: Option<Witness>,
    pub r_max: u32,
    /// Candidate `(ν, r)` pairs evaluated.
    pub evaluated: usize,
    pub reports: Vec<BoundReport>,
}

/// Parameters on the growth path without the integer frequency range check:
/// only the closed forms are used, which work in floating point.
fn path_params(r: u32, nu: f64, s: f64) -> LacunaryParams {
    LacunaryParams {
        r,
        beta: 0.5 - nu / 2.0,
        k: k_rule(r, nu),
        nu,
        delta: DEFAULT_DELTA,
        s,
    }
}

fn admits(p: &LacunaryParams, epsilon: f64) -> Result<Option<Witness>> {
    let t = p.horizon();
    if t >= epsilon {
        return Ok(None);
    }
    let (du, drho) = data_norm_upper(p);
    if du >= epsilon || drho >= epsilon {
        return Ok(None);
    }
    let bound = certified_lower_bound(p, t)?;
    if bound.lower_bound > 1.0 / epsilon {
        Ok(Some(Witness {
            params: *p,
            t,
            data_norm_u: du,
            data_norm_rho: drho,
            bound,
        }))
    } else {
        Ok(None)
    }
}

/// Smallest `r <= WITNESS_R_MAX` (over the `ν` grid, ties to the smaller `ν`)
/// whose data have certified `B^{-1}` norms below `ε`, with `T = r^{-ν} < ε`
/// and a certified `||ρ(T)||_{B^{-s}} > 1/ε`.
///
/// The data norms use the `r`-uniform bound of [`data_norm_upper`]; the density
/// bound is [`certified_lower_bound`], which carries the frozen remainder
/// constant. Every condition only gets harder as `ε` shrinks, so the returned
/// `r` never decreases with `ε`.
pub fn theorem_witness(epsilon: f64, s: f64) -> Result<WitnessReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid("s", format!("must be positive, got {s}")));
    }
    let mut best: Option<Witness> = None;
    let mut evaluated = 0;
    for nu in witness_nu_grid() {
        let limit = best.map_or(WITNESS_R_MAX, |w| w.params.r - 1);
        for r in 2..=limit {
            let p = path_params(r, nu, s);
            evaluated += 1;
            if let Some(w) = admits(&p, epsilon)? {
                best = Some(w);
                break;
            }
        }
    }
    let mut reports = Vec::new();
    if let Some(w) = &best {
        let (md, mt, ml) = w.margins(epsilon);
        let p = Some(w.params);
        reports.push(
            BoundReport::new("witness_data_norm", p, Some(w.t), w.data_norm_u.max(w.data_norm_rho), epsilon)
                .with_pass(md > 0.0),
        );
        reports.push(BoundReport::new("witness_time", p, Some(w.t), w.t, epsilon).with_pass(mt > 0.0));
        reports.push(
            BoundReport::new("witness_density_norm", p, Some(w.t), w.bound.lower_bound, 1.0 / epsilon)
                .with_pass(ml > 0.0)
                .with_note(format!("nu={} s={s}", w.params.nu)),
        );
    } else {
        reports.push(
            BoundReport::new("witness", None, None, 0.0, 1.0 / epsilon)
                .with_pass(false)
                .with_note(format!("not reached within r <= {WITNESS_R_MAX}")),
        );
    }
    Ok(WitnessReport {
        epsilon,
        s,
        witness: best,
        r_max: WITNESS_R_MAX,
        evaluated,
        reports,
    })
}
