//! One function per subcommand. Each writes its tables into the output
//! directory and returns the reports that decide the exit code.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use norminflate::lacunary::{make_frequencies, verify_construction, InitialData};
use norminflate::picard::{first_iterates_lacunary, rho10_coefficient, rho10_exact_coefficient};
use norminflate::spectral_sim::{remainder_experiment, validate_resolution, ResidualReport};
use norminflate::verify::{
    amplitude_reduction_report, check_data_norms, check_rho1_bounds, inflation_experiment, lemma_reports,
    operator_norm_probes, remainder_reports, stability_params, stability_reports, stability_time_grid,
    theorem_witness, InflationConfig,
};
use norminflate::{BoundReport, LacunaryParams, TrigField};
use rayon::prelude::*;

use crate::config::{Command, RunConfig, SweepKind};
use crate::output::{emit_csv, line_chart, num, write_table, Series};

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub reports: Vec<BoundReport>,
    pub files: Vec<PathBuf>,
}

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub dir: PathBuf,
    pub comments: Vec<String>,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn table(&self, out: &mut Outcome, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.path(name);
        let columns: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
        write_table(&path, &self.comments, &columns, rows)?;
        out.files.push(path);
        Ok(())
    }

    fn chart(&self, out: &mut Outcome, name: &str, svg: String) -> Result<()> {
        if !self.cfg.plot {
            return Ok(());
        }
        let path = self.path(name);
        std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        out.files.push(path);
        Ok(())
    }
}

/// Parameters at `r`. Explicit `β` gets the full constraint check, the
/// default growth path only the structural one.
pub fn params_at(cfg: &RunConfig, r: u32) -> Result<LacunaryParams> {
    let p = cfg.params.at(r);
    if cfg.params.beta.is_some() {
        p.validate()?;
    } else {
        p.validate_structure()?;
    }
    Ok(p)
}

pub fn run_command(ctx: &Ctx) -> Result<Outcome> {
    match ctx.cfg.command.context("no command")? {
        Command::Construct => construct(ctx),
        Command::Picard => picard(ctx),
        Command::Simulate => simulate(ctx),
        Command::Besov => besov(ctx),
        Command::Sweep => match ctx.cfg.sweep.kind {
            SweepKind::Inflation => sweep_inflation(ctx),
            SweepKind::Stability => sweep_stability(ctx),
        },
        Command::Witness => witness(ctx),
    }
}

fn construct(ctx: &Ctx) -> Result<Outcome> {
    let p = params_at(ctx.cfg, ctx.cfg.params.r)?;
    let mut out = Outcome::default();
    let rows: Vec<Vec<String>> = make_frequencies(&p)?
        .iter()
        .map(|w| {
            let mut row = vec![w.index.to_string(), w.kbar().to_string()];
            row.extend(w.kprime.0.iter().map(i128::to_string));
            row.extend(w.kfull.0.iter().map(i128::to_string));
            row.extend(w.v.iter().map(|&x| num(x)));
            row
        })
        .collect();
    ctx.table(
        &mut out,
        "frequencies.csv",
        &["i", "kbar", "kprime1", "kprime2", "kprime3", "k1", "k2", "k3", "v1", "v2", "v3"],
        &rows,
    )?;
    out.reports = verify_construction(&p)?;
    Ok(out)
}

fn mode_rows(part: &str, f: &TrigField, rows: &mut Vec<Vec<String>>) {
    for (k, m) in f.modes() {
        for c in 0..f.arity().components() {
            if m.cos[c] == 0.0 && m.sin[c] == 0.0 {
                continue;
            }
            let mut row = vec![part.to_string()];
            row.extend(k.0.iter().map(i128::to_string));
            row.extend([c.to_string(), num(m.cos[c]), num(m.sin[c])]);
            rows.push(row);
        }
    }
}

fn picard(ctx: &Ctx) -> Result<Outcome> {
    let p = params_at(ctx.cfg, ctx.cfg.params.r)?;
    let t = ctx.cfg.picard.t;
    let data = InitialData::new(&p)?;
    let state = first_iterates_lacunary(&data, t)?;
    let parts = state.rho1_parts.as_ref().context("lacunary iterates carry parts")?;
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for (name, f) in [
        ("g", &state.g),
        ("theta", &state.theta),
        ("u1", &state.u1),
        ("rho1", &state.rho1),
        ("rho10", &parts.rho10),
        ("rho11", &parts.rho11),
        ("rho12", &parts.rho12),
    ] {
        mode_rows(name, f, &mut rows);
    }
    ctx.table(&mut out, "picard.csv", &["field", "k1", "k2", "k3", "component", "cos", "sin"], &rows)?;

    let err = state.reconciliation_error.context("lacunary iterates carry a mismatch")?;
    out.reports.push(
        BoundReport::new("rho1_reconciliation", Some(p), Some(t), err, 1.0)
            .at_most(1e-12)
            .with_note("explicit interaction sums against B3(g, theta)"),
    );
    let exact = rho10_exact_coefficient(&p, t)?;
    let formula = rho10_coefficient(&p, t)?;
    out.reports.push(
        BoundReport::new("rho10_formula_vs_exact", Some(p), Some(t), formula, exact)
            .informational()
            .with_note("closed-form amplitude over the Duhamel coefficient"),
    );

    let sweep = check_rho1_bounds(&p, &ctx.cfg.tgrid.spec())?;
    let path = ctx.path("rho1_bounds.csv");
    emit_csv(&sweep, &path, &ctx.comments)?;
    out.files.push(path);
    out.reports.extend(sweep.reports);
    Ok(out)
}

fn residual_row(rep: &ResidualReport) -> Vec<String> {
    let opt = |x: Option<f64>| num(x.unwrap_or(f64::NAN));
    vec![
        num(rep.t),
        num(rep.y_linf),
        num(rep.z_linf),
        num(rep.picard_linf),
        num(rep.u1_linf),
        opt(rep.rho10_amplitude),
        num(rep.unresolved),
        opt(rep.bound_m),
        opt(rep.z_bound),
    ]
}

fn simulate(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let p = params_at(cfg, cfg.params.r)?;
    let n = cfg.sim.n;
    let verdict = validate_resolution(&p, n);
    if !verdict.ok {
        bail!("sim.n = {n} cannot resolve the data and its interactions; need at least {}", verdict.minimal_n);
    }
    let full = remainder_experiment(&p, cfg.sim.amplitude_scale, n, &cfg.sim.times)?;
    let mut out = Outcome::default();
    let rows: Vec<Vec<String>> = full.iter().map(residual_row).collect();
    ctx.table(
        &mut out,
        "residuals.csv",
        &["t", "y_linf", "z_linf", "rho1_linf", "u1_linf", "rho10_amplitude", "unresolved", "bound_m", "z_bound"],
        &rows,
    )?;
    for rep in &full {
        out.reports.extend(remainder_reports(&p, rep));
    }
    if let Some(factor) = cfg.sim.reduction_factor {
        let reduced = remainder_experiment(&p, cfg.sim.amplitude_scale * factor, n, &cfg.sim.times)?;
        for (a, b) in full.iter().zip(&reduced) {
            out.reports.push(amplitude_reduction_report(&p, a, b, factor));
        }
    }
    let series = |name: &str, f: fn(&ResidualReport) -> f64| Series {
        name: name.into(),
        points: full.iter().map(|r| (r.t, f(r))).collect(),
    };
    let svg = line_chart(
        "Remainders after the first iterates",
        "t",
        "sup norm",
        &[series("y", |r| r.y_linf), series("z", |r| r.z_linf), series("rho1", |r| r.picard_linf)],
        false,
        true,
    );
    ctx.chart(&mut out, "residuals.svg", svg)?;
    Ok(out)
}

fn besov(ctx: &Ctx) -> Result<Outcome> {
    let p = params_at(ctx.cfg, ctx.cfg.params.r)?;
    let grid = ctx.cfg.tgrid.spec();
    let data = InitialData::new(&p)?;
    let mut orders = vec![1.0];
    if p.s != 1.0 {
        orders.push(p.s);
    }
    let mut rows = Vec::new();
    for (name, f) in [("u0", &data.u0), ("rho0", &data.rho0)] {
        for &s in &orders {
            for (kind, est) in [("homogeneous", f.besov_norm(s, &grid)?), ("inhomogeneous", f.besov_norm_inhomogeneous(s, &grid)?)] {
                rows.push(vec![
                    name.to_string(),
                    num(s),
                    kind.to_string(),
                    num(est.value),
                    num(est.argmax_t),
                    est.at_endpoint.to_string(),
                ]);
            }
        }
    }
    let mut out = Outcome::default();
    ctx.table(&mut out, "besov.csv", &["field", "s", "kind", "value", "argmax_t", "at_endpoint"], &rows)?;
    out.reports = check_data_norms(&p, &grid)?;
    Ok(out)
}

fn sweep_inflation(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let icfg = InflationConfig {
        rs: cfg.sweep.rs.clone(),
        nu: cfg.params.nu,
        delta: cfg.params.delta,
        s: cfg.params.s,
        beta: cfg.params.beta,
        k: cfg.params.k.map(i128::from),
        amplitude_scale: cfg.sweep.amplitude_scale,
        grid: cfg.tgrid.spec(),
    };
    let sweep = inflation_experiment(&icfg)?;
    let mut out = Outcome::default();
    let path = ctx.path("inflation.csv");
    let mut comments = ctx.comments.clone();
    if let Some(slope) = sweep.slope {
        comments.push(format!("slope={}", num(slope)));
    }
    emit_csv(&sweep, &path, &comments)?;
    out.files.push(path);
    let column = |name: &str| sweep.column(name).unwrap_or_default();
    let rs = column("r");
    let series = |name: &str| Series {
        name: name.into(),
        points: rs.iter().copied().zip(column(name)).collect(),
    };
    let svg = line_chart(
        "Resonant density term along the parameter path",
        "r",
        "B^-s norm",
        &[series("rho10_besov"), series("net_lower_bound"), series("norm_rho0_B1")],
        true,
        true,
    );
    ctx.chart(&mut out, "inflation.svg", svg)?;
    out.reports = sweep.reports;
    Ok(out)
}

fn sweep_stability(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let grid = cfg.tgrid.spec();
    let times = stability_time_grid();
    let mut rs = cfg.sweep.rs.clone();
    rs.sort_unstable();
    rs.dedup();
    let per_r: Vec<Vec<BoundReport>> = rs
        .par_iter()
        .map(|&r| Ok(lemma_reports(&stability_params(r)?, &grid, &times)?))
        .collect::<Result<_>>()?;
    let lemmas: Vec<BoundReport> = per_r.into_iter().flatten().collect();

    let mut out = Outcome::default();
    let rows: Vec<Vec<String>> = lemmas
        .iter()
        .filter_map(|rep| {
            let p = rep.params?;
            Some(vec![rep.name.clone(), p.r.to_string(), num(rep.implied_constant), rep.pass.to_string()])
        })
        .collect();
    ctx.table(&mut out, "stability.csv", &["name", "r", "implied_constant", "pass"], &rows)?;

    let mut names: Vec<&str> = lemmas.iter().map(|r| r.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    let series: Vec<Series> = names
        .iter()
        .map(|&name| Series {
            name: name.into(),
            points: lemmas
                .iter()
                .filter(|rep| rep.name == name)
                .filter_map(|rep| Some((rep.params?.r as f64, rep.implied_constant.abs())))
                .collect(),
        })
        .collect();
    let svg = line_chart("Implied constants across r", "r", "constant", &series, true, true);
    ctx.chart(&mut out, "constants.svg", svg)?;

    let spreads = stability_reports(&rs, &lemmas);
    out.reports = lemmas;
    out.reports.extend(spreads);
    out.reports.extend(operator_norm_probes(cfg.sweep.probe_trials, cfg.seed)?);
    Ok(out)
}

fn witness(ctx: &Ctx) -> Result<Outcome> {
    let w = &ctx.cfg.witness;
    let rep = theorem_witness(w.epsilon, w.s)?;
    let mut out = Outcome::default();
    let columns = [
        "epsilon",
        "s",
        "found",
        "r",
        "nu",
        "beta",
        "K",
        "T",
        "data_norm_u",
        "data_norm_rho",
        "rho10_besov",
        "theta",
        "rho11",
        "rho12",
        "dropped",
        "remainder",
        "lower_bound",
        "margin_data",
        "margin_time",
        "margin_density",
        "evaluated",
    ];
    let mut row = vec![num(rep.epsilon), num(rep.s), rep.witness.is_some().to_string()];
    match &rep.witness {
        Some(wt) => {
            let (md, mt, ml) = wt.margins(rep.epsilon);
            let b = &wt.bound;
            row.extend([wt.params.r.to_string(), num(wt.params.nu), num(wt.params.beta), wt.params.k.to_string()]);
            row.extend(
                [
                    wt.t,
                    wt.data_norm_u,
                    wt.data_norm_rho,
                    b.rho10_besov,
                    b.theta,
                    b.rho11,
                    b.rho12,
                    b.dropped,
                    b.remainder,
                    b.lower_bound,
                    md,
                    mt,
                    ml,
                ]
                .map(num),
            );
        }
        None => row.extend(std::iter::repeat_n(String::new(), 17)),
    }
    row.push(rep.evaluated.to_string());
    ctx.table(&mut out, "witness.csv", &columns, &[row])?;
    out.reports = rep.reports;
    Ok(out)
}

/// Writes `config` as pretty JSON with a trailing newline.
pub fn write_resolved_config(cfg: &RunConfig, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(cfg)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
