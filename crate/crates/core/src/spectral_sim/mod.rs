//! Dealiased pseudo-spectral solver for the Boussinesq system on 𝕋³.
//!
//! The Leray-projected system `∂_t u = Δu + ℙ(-∇·(u⊗u) + ρe₃)`,
//! `∂_t ρ = Δρ - ∇·(uρ)` is advanced with integrating-factor (Lawson) RK4: the
//! heat factors `e^{-|k|²h}` are applied exactly and RK4 handles the rest.
//! Products are formed on the grid and masked with the 2/3 rule.
//!
//! Axes along which both initial fields are constant stay constant under the
//! flow, so by default they are stored with a single point. The result equals
//! the full `N³` computation up to roundoff.

mod grid;
mod snapshot;

pub use grid::{dealias_limit, to_grid, Fft3, GridField};
pub use snapshot::{read_snapshot, write_snapshot};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lacunary::{InitialData, LacunaryParams};
use crate::picard::{first_iterates_lacunary, remainder_bound_m, z_bound, PicardState};
use crate::trig_field::{Arity, TrigField};
use grid::check_grid_size;

/// Abort threshold for `‖u‖_∞ N dt`.
pub const CFL_LIMIT: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    /// Sorted output times in `[0, t_final]`.
    pub snapshot_times: Vec<f64>,
    /// Store invariant axes with one point.
    pub collapse_invariant_axes: bool,
}

impl SimConfig {
    pub fn new(n: usize, dt: f64, t_final: f64) -> Self {
        SimConfig {
            n,
            dt,
            t_final,
            snapshot_times: vec![t_final],
            collapse_invariant_axes: true,
        }
    }

    /// Step size from the heuristic `dt <= 0.5 / (N max(1, ‖u0‖_∞))`, shrunk so
    /// that it divides `t_final` evenly.
    pub fn heuristic(n: usize, u0_linf: f64, t_final: f64) -> Self {
        let dt_max = 0.5 / (n as f64 * u0_linf.max(1.0));
        let steps = (t_final / dt_max).ceil().max(1.0);
        SimConfig::new(n, t_final / steps, t_final)
    }

    pub fn validate(&self) -> Result<()> {
        check_grid_size(self.n)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid("t_final", format!("must be positive, got {}", self.t_final)));
        }
        let mut prev = 0.0;
        for &t in &self.snapshot_times {
            if !(t >= prev && t <= self.t_final) {
                return Err(Error::invalid(
                    "snapshot_times",
                    format!("must be sorted within [0, {}], got {t}", self.t_final),
                ));
            }
            prev = t;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: GridField,
    pub rho: GridField,
}

/// Per-step diagnostics of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimStats {
    pub steps: usize,
    pub max_divergence: f64,
    pub max_mean_drift: f64,
    pub max_cfl: f64,
}

/// Runs the solver and returns the requested snapshots.
pub fn simulate(u0: &TrigField, rho0: &TrigField, cfg: &SimConfig) -> Result<Vec<Snapshot>> {
    simulate_with_stats(u0, rho0, cfg).map(|(s, _)| s)
}

pub fn simulate_with_stats(u0: &TrigField, rho0: &TrigField, cfg: &SimConfig) -> Result<(Vec<Snapshot>, SimStats)> {
    cfg.validate()?;
    if u0.arity() != Arity::Vector || rho0.arity() != Arity::Scalar {
        return Err(Error::Arity {
            expected: "vector velocity and scalar density",
            found: "other",
        });
    }
    let n = cfg.n;
    let dims = if cfg.collapse_invariant_axes {
        grid_dims(&[u0, rho0], n)
    } else {
        [n, n, n]
    };
    let solver = Solver::new(n, dims);
    let mut state = State {
        u: GridField::from_trig_dims(u0, n, dims)?,
        rho: GridField::from_trig_dims(rho0, n, dims)?,
    };
    solver.project(&mut state.u);
    let mean0 = state.rho.mean(0);

    let mut stats = SimStats::default();
    let mut out = Vec::with_capacity(cfg.snapshot_times.len());
    let mut t = 0.0;
    let mut next = 0;
    let tol = 1e-12 * cfg.t_final.max(1.0);
    loop {
        while next < cfg.snapshot_times.len() && (cfg.snapshot_times[next] - t).abs() <= tol {
            out.push(Snapshot {
                t: cfg.snapshot_times[next],
                u: state.u.clone(),
                rho: state.rho.clone(),
            });
            next += 1;
        }
        if next == cfg.snapshot_times.len() || t >= cfg.t_final - tol {
            break;
        }
        let target = cfg.snapshot_times[next];
        let h = if target - t < cfg.dt + tol { target - t } else { cfg.dt };
        let u_max = solver.step(&mut state, h)?;
        t = if (target - t - h).abs() <= tol { target } else { t + h };
        stats.steps += 1;
        let cfl = u_max * n as f64 * cfg.dt;
        stats.max_cfl = stats.max_cfl.max(cfl);
        if cfl > CFL_LIMIT {
            return Err(Error::Cfl {
                t,
                u_max,
                dt: cfg.dt,
                n,
            });
        }
        for (field, g) in [("u", &state.u), ("rho", &state.rho)] {
            if g.coeffs().iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite { field, t });
            }
        }
        stats.max_divergence = stats.max_divergence.max(solver.divergence_max(&state.u));
        stats.max_mean_drift = stats.max_mean_drift.max((state.rho.mean(0) - mean0).abs());
    }
    Ok((out, stats))
}

/// Points per axis: 1 where no field varies along the axis, `N` otherwise.
pub fn grid_dims(fields: &[&TrigField], n: usize) -> [usize; 3] {
    let mut dims = [1; 3];
    for f in fields {
        for (k, _) in f.modes() {
            for a in 0..3 {
                if k.0[a] != 0 {
                    dims[a] = n;
                }
            }
        }
    }
    dims
}

#[derive(Clone)]
struct State {
    u: GridField,
    rho: GridField,
}

struct Solver {
    n: usize,
    dims: [usize; 3],
    fft: Fft3,
    /// `k` per flat index, and the dealiasing mask.
    k: Vec<[f64; 3]>,
    ksq: Vec<f64>,
    keep: Vec<bool>,
}

impl Solver {
    fn new(n: usize, dims: [usize; 3]) -> Self {
        let len = dims[0] * dims[1] * dims[2];
        let limit = dealias_limit(n);
        let mut k = Vec::with_capacity(len);
        let mut ksq = Vec::with_capacity(len);
        let mut keep = Vec::with_capacity(len);
        let probe = GridField::zero_dims(n, dims, Arity::Scalar);
        for idx in 0..len {
            let w = probe.wavenumbers(idx);
            let kf = [w[0] as f64, w[1] as f64, w[2] as f64];
            k.push(kf);
            ksq.push(kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]);
            keep.push(w.iter().all(|c| c.abs() <= limit));
        }
        Solver {
            n,
            dims,
            fft: Fft3::with_dims(n, dims),
            k,
            ksq,
            keep,
        }
    }

    fn divergence_max(&self, u: &GridField) -> f64 {
        let c = u.coeffs();
        (0..self.k.len())
            .map(|i| {
                let k = self.k[i];
                (c[0][i] * k[0] + c[1][i] * k[1] + c[2][i] * k[2]).norm()
            })
            .fold(0.0, f64::max)
    }

    fn project(&self, u: &mut GridField) {
        let c = u.coeffs_mut();
        for i in 0..self.ksq.len() {
            if self.ksq[i] == 0.0 {
                continue;
            }
            let k = self.k[i];
            let dot = c[0][i] * k[0] + c[1][i] * k[1] + c[2][i] * k[2];
            let a = dot / self.ksq[i];
            for (comp, kc) in c.iter_mut().zip(k) {
                comp[i] -= a * kc;
            }
        }
    }

    fn heat_factors(&self, h: f64) -> Vec<f64> {
        self.ksq.iter().map(|k| (-k * h).exp()).collect()
    }

    fn heat(&self, s: &State, factors: &[f64]) -> State {
        let mut out = s.clone();
        for comp in out.u.coeffs_mut().iter_mut().chain(out.rho.coeffs_mut().iter_mut()) {
            for (z, e) in comp.iter_mut().zip(factors) {
                *z *= e;
            }
        }
        out
    }

    fn forward_masked(&self, values: Vec<f64>) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        self.fft.forward(&mut buf);
        for (z, keep) in buf.iter_mut().zip(&self.keep) {
            if !keep {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        buf
    }

    /// Nonlinear and buoyancy terms; also returns `max |u|` on the grid.
    fn rhs(&self, s: &State) -> (State, f64) {
        let len = self.ksq.len();
        let u = s.u.to_physical(&self.fft);
        let rho = s.rho.to_physical(&self.fft)[0].clone();
        let u_max = (0..len)
            .map(|i| u[0][i] * u[0][i] + u[1][i] * u[1][i] + u[2][i] * u[2][i])
            .fold(0.0, f64::max)
            .sqrt();

        let i_unit = Complex64::new(0.0, 1.0);
        let mut nu = vec![vec![Complex64::new(0.0, 0.0); len]; 3];
        // -∂_j(u_i u_j), one symmetric product at a time
        for a in 0..3 {
            for b in a..3 {
                let p = self.forward_masked((0..len).map(|i| u[a][i] * u[b][i]).collect());
                for i in 0..len {
                    let k = self.k[i];
                    nu[a][i] -= i_unit * k[b] * p[i];
                    if a != b {
                        nu[b][i] -= i_unit * k[a] * p[i];
                    }
                }
            }
        }
        let mut nrho = vec![Complex64::new(0.0, 0.0); len];
        for j in 0..3 {
            let q = self.forward_masked((0..len).map(|i| u[j][i] * rho[i]).collect());
            for i in 0..len {
                nrho[i] -= i_unit * self.k[i][j] * q[i];
            }
        }
        for i in 0..len {
            nu[2][i] += s.rho.coeffs()[0][i];
        }
        let mut du = GridField::from_coeffs(self.n, self.dims, Arity::Vector, nu);
        self.project(&mut du);
        let drho = GridField::from_coeffs(self.n, self.dims, Arity::Scalar, vec![nrho]);
        (State { u: du, rho: drho }, u_max)
    }

    /// One Lawson RK4 step of size `h`; returns `max |u|` at the start.
    fn step(&self, s: &mut State, h: f64) -> Result<f64> {
        let (e_half, e_full) = (self.heat_factors(h / 2.0), self.heat_factors(h));
        let (k1, u_max) = self.rhs(s);
        let (k2, _) = self.rhs(&self.heat(&axpy(s, h / 2.0, &k1), &e_half));
        let half = self.heat(s, &e_half);
        let (k3, _) = self.rhs(&axpy(&half, h / 2.0, &k2));
        let full = self.heat(s, &e_full);
        let (k4, _) = self.rhs(&axpy(&full, h, &self.heat(&k3, &e_half)));
        // E_h s + h/6 (E_h k1 + 2 E_{h/2}(k2 + k3) + k4)
        let mid = self.heat(&axpy(&k2, 1.0, &k3), &e_half);
        let k1h = self.heat(&k1, &e_full);
        let mut next = full;
        next = axpy(&next, h / 6.0, &k1h);
        next = axpy(&next, h / 3.0, &mid);
        next = axpy(&next, h / 6.0, &k4);
        *s = next;
        Ok(u_max)
    }
}

/// `a + c·b`, component-wise.
fn axpy(a: &State, c: f64, b: &State) -> State {
    let mut out = a.clone();
    for (x, y) in out
        .u
        .coeffs_mut()
        .iter_mut()
        .chain(out.rho.coeffs_mut().iter_mut())
        .zip(b.u.coeffs().iter().chain(b.rho.coeffs().iter()))
    {
        for (p, q) in x.iter_mut().zip(y) {
            *p += q * c;
        }
    }
    out
}

/// Remainder of a simulated snapshot after subtracting the first iterates.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub t: f64,
    /// `‖u - g - u1‖_∞` on the grid.
    pub y_linf: f64,
    /// `‖ρ - θ - ρ1‖_∞` on the grid.
    pub z_linf: f64,
    /// `‖ρ1‖_∞` on the grid.
    pub picard_linf: f64,
    pub u1_linf: f64,
    /// `|sin(η·x)|` amplitude of the resonant part, when available.
    pub rho10_amplitude: Option<f64>,
    /// Coefficient sum of iterate modes beyond the grid's resolution.
    pub unresolved: f64,
    /// Remainder model at `t` with unit constant, when `t <= r^{-ν}`.
    pub bound_m: Option<f64>,
    pub z_bound: Option<f64>,
}

/// Compares a snapshot with the first iterates at the same time.
pub fn residual_decompose(
    snap: &Snapshot,
    picard: &PicardState,
    params: Option<&LacunaryParams>,
) -> Result<ResidualReport> {
    if (snap.t - picard.t).abs() > 1e-12 * picard.t.max(1.0) {
        return Err(Error::invalid(
            "t",
            format!("snapshot time {} differs from iterate time {}", snap.t, picard.t),
        ));
    }
    let (n, dims) = (snap.u.n(), snap.u.dims());
    let fft = Fft3::with_dims(n, dims);
    let (g, d1) = GridField::from_trig_truncated(&picard.g, n, dims)?;
    let (u1, d2) = GridField::from_trig_truncated(&picard.u1, n, dims)?;
    let (theta, d3) = GridField::from_trig_truncated(&picard.theta, n, dims)?;
    let (rho1, d4) = GridField::from_trig_truncated(&picard.rho1, n, dims)?;
    let y = snap.u.sub(&g)?.sub(&u1)?;
    let z = snap.rho.sub(&theta)?.sub(&rho1)?;
    let rho10_amplitude = picard
        .rho1_parts
        .as_ref()
        .map(|p| p.rho10.get(crate::lacunary::ETA).map_or(0.0, |m| m.sin[0].hypot(m.cos[0])));
    let (bound_m, zb) = match params {
        Some(p) => (remainder_bound_m(p, picard.t).ok(), z_bound(p, picard.t).ok()),
        None => (None, None),
    };
    Ok(ResidualReport {
        t: picard.t,
        y_linf: y.linf(&fft),
        z_linf: z.linf(&fft),
        picard_linf: rho1.linf(&fft),
        u1_linf: u1.linf(&fft),
        rho10_amplitude,
        unresolved: d1 + d2 + d3 + d4,
        bound_m,
        z_bound: zb,
    })
}

/// Simulates the construction's data, with both amplitudes multiplied by
/// `scale`, and compares each snapshot with the first iterates.
///
/// The step follows [`SimConfig::heuristic`] for the last requested time.
pub fn remainder_experiment(p: &LacunaryParams, scale: f64, n: usize, times: &[f64]) -> Result<Vec<ResidualReport>> {
    let t_final = times.iter().cloned().fold(0.0, f64::max);
    if times.is_empty() || times.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::invalid("times", "need snapshot times in (0, 1]"));
    }
    let data = InitialData::scaled(p, scale)?;
    let u_max = data.u0.linf_norm()?.value;
    let mut cfg = SimConfig::heuristic(n, u_max, t_final);
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    cfg.snapshot_times = sorted;
    let snaps = simulate(&data.u0, &data.rho0, &cfg)?;
    snaps
        .iter()
        .map(|snap| {
            let state = first_iterates_lacunary(&data, snap.t)?;
            residual_decompose(snap, &state, Some(p))
        })
        .collect()
}

/// Time-step convergence: runs with `dt0 / 2^j` for `j < levels` against a
/// reference with `dt0 / 2^{levels + 2}`, all on the same grid.
///
/// Returns `(dt, max coefficient error)` per level and the fitted order.
pub fn temporal_convergence(
    u0: &TrigField,
    rho0: &TrigField,
    n: usize,
    t_final: f64,
    dt0: f64,
    levels: u32,
) -> Result<(Vec<(f64, f64)>, Option<f64>)> {
    let run = |dt: f64| -> Result<Snapshot> {
        let mut snaps = simulate(u0, rho0, &SimConfig::new(n, dt, t_final))?;
        Ok(snaps.pop().expect("final snapshot"))
    };
    let reference = run(dt0 / 2f64.powi(levels as i32 + 2))?;
    let mut out = Vec::new();
    for j in 0..levels {
        let dt = dt0 / 2f64.powi(j as i32);
        let s = run(dt)?;
        let du = s.u.sub(&reference.u)?;
        let dr = s.rho.sub(&reference.rho)?;
        let err = du
            .coeffs()
            .iter()
            .chain(dr.coeffs())
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        out.push((dt, err));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = out.iter().cloned().unzip();
    Ok((out, crate::verify::loglog_slope(&xs, &ys)))
}

/// Whether `N` leaves room for the data and its first interactions:
/// `2^{r-1}K + 2 <= N/3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResolutionVerdict {
    pub ok: bool,
    pub minimal_n: usize,
}

pub fn validate_resolution(p: &LacunaryParams, n: usize) -> ResolutionVerdict {
    let need = p.kbar(p.r).and_then(|k| k.checked_add(2)).and_then(|k| k.checked_mul(3));
    let ok = need.is_some_and(|need| need <= n as i128);
    let minimal_n = match need {
        Some(need) if need <= 1 << 62 => (need as u64).next_power_of_two() as usize,
        _ => usize::MAX,
    };
    ResolutionVerdict { ok, minimal_n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig_field::Frequency;

    #[test]
    fn resolution_examples() {
        let p = |r, k| LacunaryParams::new(r, 0.45, k, 0.2).unwrap();
        assert_eq!(validate_resolution(&p(2, 4), 64), ResolutionVerdict { ok: true, minimal_n: 32 });
        assert_eq!(validate_resolution(&p(3, 4), 32), ResolutionVerdict { ok: false, minimal_n: 64 });
        assert!(validate_resolution(&p(1, 2), 16).ok);
    }

    #[test]
    fn zero_data_stays_zero() {
        let cfg = SimConfig::new(8, 0.01, 0.05);
        let snaps = simulate(&TrigField::zero(Arity::Vector), &TrigField::zero(Arity::Scalar), &cfg).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].u.nonzero().count(), 0);
        assert_eq!(snaps[0].rho.nonzero().count(), 0);
    }

    #[test]
    fn config_errors() {
        let u = TrigField::zero(Arity::Vector);
        let r = TrigField::zero(Arity::Scalar);
        assert!(simulate(&u, &r, &SimConfig::new(12, 0.01, 0.1)).is_err());
        assert!(simulate(&u, &r, &SimConfig::new(8, -0.01, 0.1)).is_err());
        let mut c = SimConfig::new(8, 0.01, 0.1);
        c.snapshot_times = vec![0.05, 0.01];
        assert!(simulate(&u, &r, &c).is_err());
    }

    #[test]
    fn cfl_violation_aborts() {
        let u = TrigField::vector_wave(Frequency::new(0, 1, 0), [50.0, 0.0, 0.0], [0.0; 3]);
        let err = simulate(&u, &TrigField::zero(Arity::Scalar), &SimConfig::new(16, 0.01, 0.1)).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }), "{err}");
    }

    #[test]
    fn collapsed_run_matches_full_grid() {
        let p = LacunaryParams::new(1, 0.45, 2, 0.2).unwrap();
        let (u0, rho0) = crate::lacunary::make_initial_data(&p).unwrap();
        assert_eq!(grid_dims(&[&u0, &rho0], 16), [1, 16, 16]);
        let mut cfg = SimConfig::new(16, 0.005, 0.02);
        let flat = simulate(&u0, &rho0, &cfg).unwrap().pop().unwrap();
        cfg.collapse_invariant_axes = false;
        let full = simulate(&u0, &rho0, &cfg).unwrap().pop().unwrap();
        assert_eq!(flat.u.dims(), [1, 16, 16]);
        for (f, g) in [(&flat.u, &full.u), (&flat.rho, &full.rho)] {
            let a = f.to_trig(1e-15);
            let b = g.to_trig(1e-15);
            assert!(a.sub(&b).unwrap().linf_upper() < 1e-13);
        }
    }

    #[test]
    fn snapshot_times_are_hit_exactly() {
        let mut c = SimConfig::new(8, 0.03, 0.1);
        c.snapshot_times = vec![0.0, 0.05, 0.1];
        let u = TrigField::vector_wave(Frequency::new(0, 1, 0), [0.1, 0.0, 0.0], [0.0; 3]);
        let snaps = simulate(&u, &TrigField::zero(Arity::Scalar), &c).unwrap();
        let ts: Vec<f64> = snaps.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0.0, 0.05, 0.1]);
        let amp = snaps[2].u.coeff(0, [0, 1, 0]).re;
        assert!((amp - 0.05 * (-0.1f64).exp()).abs() < 1e-14);
    }
}
