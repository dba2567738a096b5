//! Quantitative checks of the construction's bounds.
//!
//! Every "bounded by a constant" statement becomes a [`BoundReport`]: the
//! measured quantity, the model with unit constant, their ratio, and a verdict
//! against a frozen value from [`regression`].

mod inflation;
mod lemmas;
pub mod regression;
mod report;
mod witness;

pub use inflation::{
    certified_lower_bound, correction_terms, eta_besov_factor_inhomogeneous, exponent_conditions, inflation_experiment,
    CertifiedBound, InflationConfig, INFLATION_COLUMNS,
};
pub use lemmas::{
    bilinear_constant, check_b3_g_rho1, check_data_norms, check_lacunary_sums, check_rho1_bounds,
    heat_gradient_constant, operator_norm_probes,
};
pub use report::{loglog_slope, spread, BoundReport, SweepResult};
pub use witness::{theorem_witness, witness_nu_grid, Witness, WitnessReport, WITNESS_R_MAX};

use crate::error::Result;
use crate::lacunary::LacunaryParams;
use crate::spectral_sim::ResidualReport;
use crate::trig_field::TGridSpec;

/// Heat times used for the `ρ1` and `u1` constants in [`stability_sweep`].
pub fn stability_time_grid() -> TGridSpec {
    TGridSpec {
        t_min: 1e-4,
        t_max: 1.0,
        points: 25,
        ..TGridSpec::default()
    }
}

/// All r-dependent lemma reports for one parameter set.
pub fn lemma_reports(p: &LacunaryParams, data_grid: &TGridSpec, time_grid: &TGridSpec) -> Result<Vec<BoundReport>> {
    let (ratio, heat) = check_lacunary_sums(p, 1.0)?;
    let mut out = vec![ratio, heat];
    out.extend(check_data_norms(p, data_grid)?);
    out.extend(check_rho1_bounds(p, time_grid)?.reports);
    Ok(out)
}

/// Parameters of the stability sweep at one `r`: `K = 4`, `β = 0.45`, `ν = 0.2`.
pub fn stability_params(r: u32) -> Result<LacunaryParams> {
    LacunaryParams::new(r, 0.45, 4, 0.2)
}

/// Runs [`lemma_reports`] for every `r` at [`stability_params`] and appends
/// [`stability_reports`].
pub fn stability_sweep(rs: &[u32], data_grid: &TGridSpec, time_grid: &TGridSpec) -> Result<Vec<BoundReport>> {
    let mut all = Vec::new();
    for &r in rs {
        all.extend(lemma_reports(&stability_params(r)?, data_grid, time_grid)?);
    }
    let stab = stability_reports(rs, &all);
    all.extend(stab);
    Ok(all)
}

/// One `stability_<name>` report per bound name in `reports`, whose `lhs` is
/// the max/min ratio of the implied constants across the sweep.
pub fn stability_reports(rs: &[u32], reports: &[BoundReport]) -> Vec<BoundReport> {
    let names: std::collections::BTreeSet<&str> = reports.iter().map(|r| r.name.as_str()).collect();
    names
        .into_iter()
        .map(|name| {
            let cs: Vec<f64> = reports.iter().filter(|r| r.name == name).map(|r| r.implied_constant).collect();
            let sp = spread(&cs);
            let max = if name.starts_with("u0_") || name.starts_with("rho0_") {
                regression::DATA_NORM_SPREAD_MAX
            } else {
                regression::STABILITY_SPREAD_MAX
            };
            BoundReport::new(format!("stability_{name}"), None, None, sp, 1.0)
                .with_pass(sp.is_finite() && sp <= max)
                .with_note(format!("max/min over r in {rs:?}"))
        })
        .collect()
}

/// Remainder checks for one simulated snapshot: `z` below the resonant
/// amplitude, and both remainders within the frozen model constants.
pub fn remainder_reports(p: &LacunaryParams, rep: &ResidualReport) -> Vec<BoundReport> {
    let mut out = Vec::new();
    let (pp, t) = (Some(*p), Some(rep.t));
    if let Some(amp) = rep.rho10_amplitude {
        let ratio = rep.z_linf / amp;
        out.push(
            BoundReport::new("z_below_rho10", pp, t, rep.z_linf, amp)
                .with_pass(rep.z_linf < amp && ratio <= regression::Z_TO_RHO10_MAX),
        );
    }
    if let Some(zb) = rep.z_bound {
        out.push(BoundReport::new("remainder_z", pp, t, rep.z_linf, zb).at_most(regression::REMAINDER_CONSTANT));
    }
    if let Some(m) = rep.bound_m {
        let weighted = rep.t.powf(p.delta) * rep.y_linf;
        out.push(BoundReport::new("remainder_y", pp, t, weighted, m).at_most(regression::REMAINDER_Y_CONSTANT));
    }
    out
}

/// `||y||_∞` of the full run over the run with data scaled by `factor < 1`:
/// the remainder is at least quadratic and at most cubic in the amplitude, so
/// the ratio must lie in `[factor^-2, factor^-3]`.
pub fn amplitude_reduction_report(p: &LacunaryParams, full: &ResidualReport, reduced: &ResidualReport, factor: f64) -> BoundReport {
    let ratio = full.y_linf / reduced.y_linf;
    let (lo, hi) = (factor.powi(-2), factor.powi(-3));
    BoundReport::new("y_amplitude_reduction", Some(*p), Some(full.t), ratio, lo)
        .with_pass(ratio >= lo && ratio <= hi)
        .with_note(format!("factor={factor}, allowed [{lo}, {hi}]"))
}
