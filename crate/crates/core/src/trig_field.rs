//! Exact algebra of finite trigonometric polynomials on the 3-torus.
//!
//! A [`TrigField`] is a finite sum of `cos(k·x)` / `sin(k·x)` plane waves with
//! real scalar or real 3-vector coefficients. Every operation here (heat flow,
//! Leray projection, advection products) maps such sums to such sums exactly,
//! so the first Picard iterates of the construction can be written down in
//! closed form instead of being discretised.
//!
//! Each pair `{k, -k}` is stored once, under the representative whose leading
//! nonzero entry is positive. `cos` is even, so its coefficient is unchanged
//! when a mode is folded onto the representative; `sin` flips sign.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Relative size below which a cancelled projection or divergence is rounding noise.
const ROUNDOFF: f64 = 16.0 * f64::EPSILON;

/// Upper bound on evaluation-grid points for [`TrigField::linf_norm`].
const LINF_GRID_BUDGET: usize = 1 << 30;

/// Integer wavenumber on the torus.
///
/// Stored as `i128`: the lacunary construction doubles the base frequency per
/// wave, and sweeps up to 64 waves overflow 64-bit integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frequency(pub [i128; 3]);

impl Frequency {
    pub const ZERO: Frequency = Frequency([0, 0, 0]);

    pub const fn new(k1: i128, k2: i128, k3: i128) -> Self {
        Frequency([k1, k2, k3])
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0, 0, 0]
    }

    pub fn as_f64(&self) -> Vec3 {
        [self.0[0] as f64, self.0[1] as f64, self.0[2] as f64]
    }

    /// `|k|^2`, evaluated in floating point so that huge lacunary wavenumbers
    /// do not overflow.
    pub fn norm_sq(&self) -> f64 {
        let k = self.as_f64();
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, v: &Vec3) -> f64 {
        let k = self.as_f64();
        k[0] * v[0] + k[1] * v[1] + k[2] * v[2]
    }

    /// True when the leading nonzero entry is positive (the zero frequency counts).
    pub fn is_canonical(&self) -> bool {
        match self.0.iter().find(|&&c| c != 0) {
            Some(&c) => c > 0,
            None => true,
        }
    }

    /// The stored representative of `{k, -k}` and the sign picked up by a sine
    /// coefficient when folded onto it.
    pub fn canonical(self) -> (Frequency, f64) {
        if self.is_canonical() {
            (self, 1.0)
        } else {
            (-self, -1.0)
        }
    }
}

impl Add for Frequency {
    type Output = Frequency;
    fn add(self, o: Frequency) -> Frequency {
        Frequency([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Frequency {
    type Output = Frequency;
    fn sub(self, o: Frequency) -> Frequency {
        Frequency([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Frequency {
    type Output = Frequency;
    fn neg(self) -> Frequency {
        Frequency([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Scalar,
    Vector,
}

impl Arity {
    pub fn name(self) -> &'static str {
        match self {
            Arity::Scalar => "scalar",
            Arity::Vector => "vector",
        }
    }

    pub fn components(self) -> usize {
        match self {
            Arity::Scalar => 1,
            Arity::Vector => 3,
        }
    }
}

/// Coefficients of one plane wave `cos·cos(k·x) + sin·sin(k·x)`.
///
/// Scalar fields use component 0 only; components 1 and 2 stay zero.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mode {
    pub cos: Vec3,
    pub sin: Vec3,
}

impl Mode {
    pub fn max_abs(&self) -> f64 {
        self.cos
            .iter()
            .chain(self.sin.iter())
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(self.sin.iter()).all(|&c| c == 0.0)
    }

    fn scaled(&self, c: f64) -> Mode {
        Mode {
            cos: scale3(&self.cos, c),
            sin: scale3(&self.sin, c),
        }
    }
}

/// A term of `∇·(u ⊗ f)` produced by one pair of source modes, before folding.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FluxTerm {
    pub q: Frequency,
    pub cos: Vec3,
    pub sin: Vec3,
    /// `|m|^2 + |n|^2` of the two source modes.
    pub source_decay: f64,
}

/// L∞ estimate of a field: `value` is the maximum over the evaluation grid
/// (a lower bound for the true supremum) and `upper` a coefficient-sum bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinfNorm {
    pub value: f64,
    pub upper: f64,
    /// Points per axis of the grid that was evaluated, or `[1, 1, 1]` when the
    /// bracket was already closed at the origin.
    pub grid: [usize; 3],
}

/// Log-spaced heat-time grid for the Besov sup.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TGridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Rounds of 10x zoom around the grid argmax.
    pub refine_rounds: usize,
    /// After diffusion, modes below `prune_rel` times the diffused field's
    /// coefficient sum are dropped.
    pub prune_rel: f64,
}

impl Default for TGridSpec {
    fn default() -> Self {
        TGridSpec {
            t_min: 1e-8,
            t_max: 4.0,
            points: 400,
            refine_rounds: 3,
            prune_rel: 1e-16,
        }
    }
}

impl TGridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min.is_finite()) {
            return Err(Error::invalid("t_min", format!("must be positive, got {}", self.t_min)));
        }
        if !(self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::invalid(
                "t_max",
                format!("must exceed t_min={}, got {}", self.t_min, self.t_max),
            ));
        }
        if self.points < 3 {
            return Err(Error::invalid("points", format!("need at least 3, got {}", self.points)));
        }
        if !(self.prune_rel >= 0.0 && self.prune_rel < 1.0) {
            return Err(Error::invalid("prune_rel", format!("must lie in [0, 1), got {}", self.prune_rel)));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        log_space(self.t_min, self.t_max, self.points)
    }
}

pub(crate) fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `sup_t t^{s/2} ||e^{tΔ} f||_∞` over a heat-time grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovEstimate {
    pub value: f64,
    pub argmax_t: f64,
    pub s: f64,
    /// The grid maximum sat on the first or last grid time.
    pub at_endpoint: bool,
}

/// Finite trigonometric polynomial on 𝕋³, scalar or 3-vector valued.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigField {
    arity: Arity,
    modes: BTreeMap<Frequency, Mode>,
}

impl TrigField {
    pub fn zero(arity: Arity) -> Self {
        TrigField {
            arity,
            modes: BTreeMap::new(),
        }
    }

    /// `amp_cos·cos(k·x) + amp_sin·sin(k·x)`.
    pub fn scalar_wave(k: Frequency, amp_cos: f64, amp_sin: f64) -> Self {
        let mut f = TrigField::zero(Arity::Scalar);
        f.add_scalar_mode(k, amp_cos, amp_sin);
        f
    }

    pub fn vector_wave(k: Frequency, cos: Vec3, sin: Vec3) -> Self {
        let mut f = TrigField::zero(Arity::Vector);
        f.add_vector_mode(k, cos, sin);
        f
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Stored modes in canonical frequency order.
    pub fn modes(&self) -> impl Iterator<Item = (&Frequency, &Mode)> {
        self.modes.iter()
    }

    /// The mode as seen from `k` (folding `-k` onto the stored representative).
    pub fn get(&self, k: Frequency) -> Option<Mode> {
        let (rep, sign) = k.canonical();
        self.modes.get(&rep).map(|m| Mode {
            cos: m.cos,
            sin: scale3(&m.sin, sign),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.modes.values().all(Mode::is_zero)
    }

    pub fn is_mean_zero(&self) -> bool {
        self.modes.get(&Frequency::ZERO).is_none_or(Mode::is_zero)
    }

    pub fn add_scalar_mode(&mut self, k: Frequency, amp_cos: f64, amp_sin: f64) {
        debug_assert_eq!(self.arity, Arity::Scalar);
        self.accumulate(k, [amp_cos, 0.0, 0.0], [amp_sin, 0.0, 0.0]);
    }

    pub fn add_vector_mode(&mut self, k: Frequency, cos: Vec3, sin: Vec3) {
        debug_assert_eq!(self.arity, Arity::Vector);
        self.accumulate(k, cos, sin);
    }

    /// Adds a wave at any frequency, folding it onto the canonical representative.
    pub(crate) fn accumulate(&mut self, k: Frequency, cos: Vec3, sin: Vec3) {
        let (rep, sign) = k.canonical();
        let entry = self.modes.entry(rep).or_default();
        for c in 0..3 {
            entry.cos[c] += cos[c];
            if !rep.is_zero() {
                entry.sin[c] += sign * sin[c];
            }
        }
    }

    /// Point value; scalar fields return `[f(x), 0, 0]`.
    pub fn evaluate(&self, x: Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (k, m) in &self.modes {
            let phase = k.dot(&x);
            let (s, c) = phase.sin_cos();
            for i in 0..3 {
                out[i] += m.cos[i] * c + m.sin[i] * s;
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> TrigField {
        TrigField {
            arity: self.arity,
            modes: self.modes.iter().map(|(k, m)| (*k, m.scaled(c))).collect(),
        }
    }

    pub fn add(&self, other: &TrigField) -> Result<TrigField> {
        expect_arity(other, self.arity)?;
        let mut out = self.clone();
        for (k, m) in &other.modes {
            out.accumulate(*k, m.cos, m.sin);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TrigField) -> Result<TrigField> {
        self.add(&other.scale(-1.0))
    }

    /// Drops modes whose largest coefficient is at most `threshold`.
    pub fn pruned(&self, threshold: f64) -> TrigField {
        TrigField {
            arity: self.arity,
            modes: self
                .modes
                .iter()
                .filter(|(_, m)| m.max_abs() > threshold)
                .map(|(k, m)| (*k, *m))
                .collect(),
        }
    }

    /// Heat semigroup `e^{tΔ}`: each mode decays by `exp(-|k|^2 t)`.
    pub fn heat(&self, t: f64) -> Result<TrigField> {
        self.heat_pruned(t, 0.0)
    }

    /// Heat flow followed by pruning of modes at or below `threshold`
    /// (a threshold of 0 keeps every mode).
    pub fn heat_pruned(&self, t: f64, threshold: f64) -> Result<TrigField> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("heat time must be finite and >= 0, got {t}")));
        }
        let mut modes = BTreeMap::new();
        for (k, m) in &self.modes {
            let m = m.scaled((-k.norm_sq() * t).exp());
            if threshold > 0.0 && m.max_abs() <= threshold {
                continue;
            }
            modes.insert(*k, m);
        }
        Ok(TrigField {
            arity: self.arity,
            modes,
        })
    }

    /// Leray projector: `v -> v - (v·k)k/|k|^2` on every nonzero mode.
    pub fn leray_project(&self) -> Result<TrigField> {
        expect_arity(self, Arity::Vector)?;
        let modes = self
            .modes
            .iter()
            .map(|(k, m)| {
                if k.is_zero() {
                    return (*k, *m);
                }
                let kf = k.as_f64();
                let ksq = k.norm_sq();
                let proj = |v: &Vec3| {
                    // Two sweeps: the second removes the residue left by the first.
                    let mut w = *v;
                    for _ in 0..2 {
                        let a = dot3(&w, &kf) / ksq;
                        for i in 0..3 {
                            w[i] -= a * kf[i];
                        }
                    }
                    let floor = ROUNDOFF * norm3(v);
                    w.map(|c| if c.abs() <= floor { 0.0 } else { c })
                };
                (
                    *k,
                    Mode {
                        cos: proj(&m.cos),
                        sin: proj(&m.sin),
                    },
                )
            })
            .collect();
        Ok(TrigField {
            arity: Arity::Vector,
            modes,
        })
    }

    /// `∇·f` of a vector field.
    pub fn divergence(&self) -> Result<TrigField> {
        expect_arity(self, Arity::Vector)?;
        let mut out = TrigField::zero(Arity::Scalar);
        for (k, m) in &self.modes {
            if k.is_zero() {
                continue;
            }
            let dc = cancelled_dot(k, &m.cos);
            let ds = cancelled_dot(k, &m.sin);
            // ∂ cos(k·x) = -k sin(k·x), ∂ sin(k·x) = k cos(k·x)
            out.modes.insert(
                *k,
                Mode {
                    cos: [ds, 0.0, 0.0],
                    sin: [-dc, 0.0, 0.0],
                },
            );
        }
        Ok(out)
    }

    /// `∂f/∂x_axis`, same arity as `f`.
    pub fn partial(&self, axis: usize) -> TrigField {
        assert!(axis < 3, "axis out of range");
        let modes = self
            .modes
            .iter()
            .filter(|(k, _)| k.0[axis] != 0)
            .map(|(k, m)| {
                let ka = k.0[axis] as f64;
                (
                    *k,
                    Mode {
                        cos: scale3(&m.sin, ka),
                        sin: scale3(&m.cos, -ka),
                    },
                )
            })
            .collect();
        TrigField {
            arity: self.arity,
            modes,
        }
    }

    /// `∇q` of a scalar field.
    pub fn gradient(&self) -> Result<TrigField> {
        expect_arity(self, Arity::Scalar)?;
        let parts = [self.partial(0), self.partial(1), self.partial(2)];
        Ok(TrigField::from_components(&parts))
    }

    /// Assembles a vector field from three scalar components.
    pub fn from_components(parts: &[TrigField; 3]) -> TrigField {
        let mut out = TrigField::zero(Arity::Vector);
        for (axis, p) in parts.iter().enumerate() {
            for (k, m) in &p.modes {
                let mut cos = [0.0; 3];
                let mut sin = [0.0; 3];
                cos[axis] = m.cos[0];
                sin[axis] = m.sin[0];
                out.accumulate(*k, cos, sin);
            }
        }
        out
    }

    /// Component `i` of a vector field as a scalar field.
    pub fn component(&self, i: usize) -> Result<TrigField> {
        expect_arity(self, Arity::Vector)?;
        let modes = self
            .modes
            .iter()
            .map(|(k, m)| {
                (
                    *k,
                    Mode {
                        cos: [m.cos[i], 0.0, 0.0],
                        sin: [m.sin[i], 0.0, 0.0],
                    },
                )
            })
            .collect();
        Ok(TrigField {
            arity: Arity::Scalar,
            modes,
        })
    }

    /// The vector field `f e₃` of a scalar `f`.
    pub fn times_e3(&self) -> Result<TrigField> {
        expect_arity(self, Arity::Scalar)?;
        let modes = self
            .modes
            .iter()
            .map(|(k, m)| {
                (
                    *k,
                    Mode {
                        cos: [0.0, 0.0, m.cos[0]],
                        sin: [0.0, 0.0, m.sin[0]],
                    },
                )
            })
            .collect();
        Ok(TrigField {
            arity: Arity::Vector,
            modes,
        })
    }

    /// `u·∇f`, expanded into sum and difference frequencies.
    pub fn advect(u: &TrigField, f: &TrigField) -> Result<TrigField> {
        expect_arity(u, Arity::Vector)?;
        let mut out = TrigField::zero(f.arity);
        for (m, um) in &u.modes {
            for (n, fm) in &f.modes {
                let alpha = n.dot(&um.cos);
                let beta = n.dot(&um.sin);
                if alpha == 0.0 && beta == 0.0 {
                    continue;
                }
                let (c, d) = (&fm.cos, &fm.sin);
                // (α cos m + β sin m)(d cos n - c sin n), product-to-sum.
                let plus_cos = lin2(alpha / 2.0, d, beta / 2.0, c);
                let plus_sin = lin2(-alpha / 2.0, c, beta / 2.0, d);
                let minus_cos = lin2(alpha / 2.0, d, -beta / 2.0, c);
                let minus_sin = lin2(alpha / 2.0, c, beta / 2.0, d);
                out.accumulate(*m + *n, plus_cos, plus_sin);
                out.accumulate(*m - *n, minus_cos, minus_sin);
            }
        }
        Ok(out)
    }

    /// `∇·(u ⊗ f)`, i.e. `∂_j(u_j f)`; equals `u·∇f` when `u` is divergence free.
    pub fn flux_divergence(u: &TrigField, f: &TrigField) -> Result<TrigField> {
        let mut out = TrigField::zero(f.arity);
        for term in flux_terms(u, f)? {
            out.accumulate(term.q, term.cos, term.sin);
        }
        Ok(out)
    }

    /// Per-axis `max |k_axis|` over modes with a nonzero coefficient.
    pub fn max_abs_axis(&self) -> [i128; 3] {
        let mut out = [0i128; 3];
        for (k, m) in &self.modes {
            if m.is_zero() {
                continue;
            }
            for a in 0..3 {
                out[a] = out[a].max(k.0[a].abs());
            }
        }
        out
    }

    /// Coefficient-sum bound on `sup_x |f(x)|`.
    pub fn linf_upper(&self) -> f64 {
        // Per mode |a cos θ + b sin θ| <= sqrt(|a|^2 + |b|^2).
        let modewise: f64 = self
            .modes
            .values()
            .map(|m| (dot3(&m.cos, &m.cos) + dot3(&m.sin, &m.sin)).sqrt())
            .sum();
        // Per component first, then the Euclidean combination.
        let mut per = [0.0; 3];
        for m in self.modes.values() {
            for c in 0..3 {
                per[c] += m.cos[c].hypot(m.sin[c]);
            }
        }
        modewise.min(norm3(&per))
    }

    /// Grid estimate of `sup_x |f(x)|` (Euclidean magnitude for vector fields).
    ///
    /// Each axis carrying a nonzero wavenumber is sampled at
    /// `max(16, 4·max|k_axis| + 1)` points, axes without one at a single point.
    /// When the value at the origin already meets the coefficient bound (to
    /// 1e-12 relative) the grid is skipped. The empty field has norm 0.
    pub fn linf_norm(&self) -> Result<LinfNorm> {
        linf_norm_joint(std::slice::from_ref(self))
    }

    /// Homogeneous Besov norm `sup_{t>0} t^{s/2} ||e^{tΔ} f||_∞` on a heat-time grid.
    pub fn besov_norm(&self, s: f64, grid: &TGridSpec) -> Result<BesovEstimate> {
        if !self.is_mean_zero() {
            return Err(Error::Precondition(
                "homogeneous Besov norm needs a mean-zero field".into(),
            ));
        }
        besov_sup(self, s, grid)
    }

    /// Inhomogeneous variant: the sup runs over heat times below 1 only.
    pub fn besov_norm_inhomogeneous(&self, s: f64, grid: &TGridSpec) -> Result<BesovEstimate> {
        let g = TGridSpec {
            t_max: grid.t_max.min(1.0),
            ..*grid
        };
        besov_sup(self, s, &g)
    }

    /// Random field with `n_modes` waves, each `|k| <= k_max`, coefficients in [-1, 1].
    pub fn random<R: Rng + ?Sized>(rng: &mut R, arity: Arity, n_modes: usize, k_max: i128) -> TrigField {
        let mut f = TrigField::zero(arity);
        let kmax_sq = k_max * k_max;
        let mut added = 0;
        while added < n_modes {
            let k = Frequency::new(
                rng.gen_range(-k_max..=k_max),
                rng.gen_range(-k_max..=k_max),
                rng.gen_range(-k_max..=k_max),
            );
            let nsq = k.0.iter().map(|c| c * c).sum::<i128>();
            if k.is_zero() || nsq > kmax_sq {
                continue;
            }
            let mut coeff = || {
                let mut v = [0.0; 3];
                for c in v.iter_mut().take(arity.components()) {
                    *c = rng.gen_range(-1.0..=1.0);
                }
                v
            };
            let (c, s) = (coeff(), coeff());
            f.accumulate(k, c, s);
            added += 1;
        }
        f
    }
}

/// Expands `∇·(u ⊗ f)` pair by pair, keeping each source decay rate.
pub(crate) fn flux_terms(u: &TrigField, f: &TrigField) -> Result<Vec<FluxTerm>> {
    expect_arity(u, Arity::Vector)?;
    let mut out = Vec::with_capacity(2 * u.len() * f.len());
    for (m, um) in &u.modes {
        for (n, fm) in &f.modes {
            let (a, b) = (&um.cos, &um.sin);
            let (c, d) = (&fm.cos, &fm.sin);
            let decay = m.norm_sq() + n.norm_sq();
            for (q, plus) in [(*m + *n, true), (*m - *n, false)] {
                if q.is_zero() {
                    continue;
                }
                let qa = q.dot(a);
                let qb = q.dot(b);
                // u_m ⊗ f_n = C cos(q·x) + S sin(q·x) on q = m ± n, then ∂_j.
                let (qc, qs) = if plus {
                    (lin2(qa / 2.0, c, -qb / 2.0, d), lin2(qb / 2.0, c, qa / 2.0, d))
                } else {
                    (lin2(qa / 2.0, c, qb / 2.0, d), lin2(qb / 2.0, c, -qa / 2.0, d))
                };
                out.push(FluxTerm {
                    q,
                    cos: qs,
                    sin: qc.map(|x| -x),
                    source_decay: decay,
                });
            }
        }
    }
    Ok(out)
}

/// Joint L∞ of several fields: `sup_x sqrt(Σ_f |f(x)|^2)`.
///
/// Used for gradients, where the three partials are evaluated together.
pub fn linf_norm_joint(fields: &[TrigField]) -> Result<LinfNorm> {
    let upper = norm_l2(fields.iter().map(TrigField::linf_upper));
    let origin = norm_l2(fields.iter().map(|f| norm3(&f.evaluate([0.0; 3]))));
    if upper == 0.0 {
        return Ok(LinfNorm {
            value: 0.0,
            upper: 0.0,
            grid: [1, 1, 1],
        });
    }
    if upper - origin <= 1e-12 * upper {
        return Ok(LinfNorm {
            value: origin,
            upper,
            grid: [1, 1, 1],
        });
    }
    let mut dims = [1usize; 3];
    for f in fields {
        let kmax = f.max_abs_axis();
        for a in 0..3 {
            if kmax[a] != 0 {
                let n = (4 * kmax[a] + 1).max(16);
                dims[a] = dims[a].max(usize::try_from(n).unwrap_or(usize::MAX));
            }
        }
    }
    let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    match total {
        Some(t) if t <= LINF_GRID_BUDGET => {}
        _ => {
            return Err(Error::Precondition(format!(
                "L∞ evaluation grid {dims:?} exceeds the budget of {LINF_GRID_BUDGET} points; prune the field first"
            )))
        }
    }
    let (on_grid, seeds) = grid_max(fields, dims);
    let value = on_grid.max(polish(fields, dims, &seeds)).max(origin).min(upper);
    Ok(LinfNorm {
        value,
        upper,
        grid: dims,
    })
}

struct GridMode {
    /// `a - i b` per output row, so that `Re(w e^{iθ}) = a cos θ + b sin θ`.
    w: Vec<Complex64>,
    k: [usize; 3],
}

fn grid_max(fields: &[TrigField], dims: [usize; 3]) -> (f64, Vec<[usize; 3]>) {
    let mut rows = 0usize;
    let mut modes = Vec::new();
    for f in fields {
        let ncomp = f.arity.components();
        for (k, m) in &f.modes {
            if m.is_zero() {
                continue;
            }
            let mut w = vec![Complex64::new(0.0, 0.0); rows];
            for c in 0..ncomp {
                w.push(Complex64::new(m.cos[c], -m.sin[c]));
            }
            let mut kk = [0usize; 3];
            for a in 0..3 {
                kk[a] = k.0[a].rem_euclid(dims[a] as i128) as usize;
            }
            modes.push(GridMode { w, k: kk });
        }
        rows += ncomp;
    }
    for gm in &mut modes {
        gm.w.resize(rows, Complex64::new(0.0, 0.0));
    }

    let roots: Vec<Vec<Complex64>> = dims
        .iter()
        .map(|&n| {
            (0..n)
                .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64))
                .collect()
        })
        .collect();

    let n3 = dims[2];
    let mut acc = vec![0.0f64; rows * n3];
    let mut wt = vec![Complex64::new(0.0, 0.0); rows];
    // Best few grid points, kept sorted by descending squared magnitude.
    let mut top: Vec<(f64, [usize; 3])> = Vec::with_capacity(POLISH_SEEDS + 1);
    for j1 in 0..dims[0] {
        for j2 in 0..dims[1] {
            acc.iter_mut().for_each(|x| *x = 0.0);
            for gm in &modes {
                let i1 = (gm.k[0] * j1) % dims[0];
                let i2 = (gm.k[1] * j2) % dims[1];
                let tr = roots[0][i1] * roots[1][i2];
                for (dst, w) in wt.iter_mut().zip(&gm.w) {
                    *dst = w * tr;
                }
                let step = gm.k[2];
                let mut idx = 0usize;
                for j3 in 0..n3 {
                    let e = roots[2][idx];
                    for (r, w) in wt.iter().enumerate() {
                        if w.re != 0.0 || w.im != 0.0 {
                            acc[r * n3 + j3] += w.re * e.re - w.im * e.im;
                        }
                    }
                    idx += step;
                    if idx >= n3 {
                        idx %= n3;
                    }
                }
            }
            for j3 in 0..n3 {
                let mut sq = 0.0;
                for r in 0..rows {
                    let v = acc[r * n3 + j3];
                    sq += v * v;
                }
                if top.len() < POLISH_SEEDS || sq > top[top.len() - 1].0 {
                    let pos = top.partition_point(|(v, _)| *v >= sq);
                    top.insert(pos, (sq, [j1, j2, j3]));
                    top.truncate(POLISH_SEEDS);
                }
            }
        }
    }
    (top.first().map_or(0.0, |t| t.0.sqrt()), top.into_iter().map(|t| t.1).collect())
}

/// Seeds taken from the grid for local polishing.
const POLISH_SEEDS: usize = 4;

/// Coordinate-wise golden-section ascent from the best grid points.
///
/// Every value returned is attained at an actual point, so the result stays a
/// lower bound on the supremum while removing most of the grid sampling error.
fn polish(fields: &[TrigField], dims: [usize; 3], seeds: &[[usize; 3]]) -> f64 {
    let magnitude = |x: &Vec3| norm_l2(fields.iter().map(|f| norm3(&f.evaluate(*x))));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = 0.0f64;
    for seed in seeds {
        let mut x: Vec3 = [0.0; 3];
        for a in 0..3 {
            x[a] = std::f64::consts::TAU * seed[a] as f64 / dims[a] as f64;
        }
        let mut fx = magnitude(&x);
        for sweep in 0..4 {
            for a in 0..3 {
                if dims[a] == 1 {
                    continue;
                }
                let h = std::f64::consts::TAU / dims[a] as f64 / (1 << sweep) as f64;
                let (mut lo, mut hi) = (x[a] - h, x[a] + h);
                let at = |v: f64| {
                    let mut y = x;
                    y[a] = v;
                    magnitude(&y)
                };
                let mut c = hi - inv_phi * (hi - lo);
                let mut d = lo + inv_phi * (hi - lo);
                let (mut fc, mut fd) = (at(c), at(d));
                for _ in 0..40 {
                    if fc > fd {
                        hi = d;
                        d = c;
                        fd = fc;
                        c = hi - inv_phi * (hi - lo);
                        fc = at(c);
                    } else {
                        lo = c;
                        c = d;
                        fc = fd;
                        d = lo + inv_phi * (hi - lo);
                        fd = at(d);
                    }
                }
                let (xm, fm) = if fc > fd { (c, fc) } else { (d, fd) };
                if fm > fx {
                    x[a] = xm;
                    fx = fm;
                }
            }
        }
        best = best.max(fx);
    }
    best
}

fn besov_sup(f: &TrigField, s: f64, grid: &TGridSpec) -> Result<BesovEstimate> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid("s", format!("norm order must be positive, got {s}")));
    }
    grid.validate()?;
    let scale = f.linf_upper();
    if scale == 0.0 {
        return Ok(BesovEstimate {
            value: 0.0,
            argmax_t: grid.t_min,
            s,
            at_endpoint: true,
        });
    }
    // Prune relative to the diffused field: at small t the undiffused sum can
    // exceed the surviving low modes by far more than 1/prune_rel.
    let diffused = |t: f64| -> Result<TrigField> {
        let h = f.heat(t)?;
        let threshold = grid.prune_rel * h.linf_upper();
        Ok(h.pruned(threshold))
    };
    let weighted = |t: f64| -> Result<f64> { Ok(t.powf(s / 2.0) * diffused(t)?.linf_norm()?.value) };

    let ts = grid.times();
    // Cheap bracket per grid time, then full evaluation only where the upper
    // bound can still beat the best certified value.
    let mut lower = Vec::with_capacity(ts.len());
    let mut upper = Vec::with_capacity(ts.len());
    for &t in &ts {
        let h = diffused(t)?;
        let w = t.powf(s / 2.0);
        lower.push(w * norm3(&h.evaluate([0.0; 3])));
        upper.push(w * h.linf_upper());
    }
    let mut value: Vec<Option<f64>> = vec![None; ts.len()];
    let mut best = lower.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..ts.len()).collect();
    order.sort_by(|&a, &b| upper[b].total_cmp(&upper[a]).then(a.cmp(&b)));
    for i in order {
        if upper[i] <= best && value.iter().any(Option::is_some) {
            break;
        }
        let v = weighted(ts[i])?;
        value[i] = Some(v);
        best = best.max(v);
    }
    let (mut arg, mut val) = (0usize, f64::NEG_INFINITY);
    for (i, v) in value.iter().enumerate() {
        if let Some(v) = *v {
            if v > val {
                val = v;
                arg = i;
            }
        }
    }
    let at_endpoint = arg == 0 || arg == ts.len() - 1;
    let mut argmax_t = ts[arg];

    if grid.refine_rounds > 0 && !at_endpoint {
        let (mut lo, mut hi) = (ts[arg - 1], ts[arg + 1]);
        for _ in 0..grid.refine_rounds {
            let local = log_space(lo, hi, 21);
            let mut local_best = (0usize, f64::NEG_INFINITY);
            for (i, &t) in local.iter().enumerate() {
                let v = weighted(t)?;
                if v > local_best.1 {
                    local_best = (i, v);
                }
            }
            let (i, v) = local_best;
            if v > val {
                val = v;
                argmax_t = local[i];
            }
            lo = local[i.saturating_sub(1)];
            hi = local[(i + 1).min(local.len() - 1)];
        }
    }

    Ok(BesovEstimate {
        value: val,
        argmax_t,
        s,
        at_endpoint,
    })
}

fn expect_arity(f: &TrigField, arity: Arity) -> Result<()> {
    if f.arity == arity {
        Ok(())
    } else {
        Err(Error::Arity {
            expected: arity.name(),
            found: f.arity.name(),
        })
    }
}

/// `v·k`, snapped to zero when it is rounding noise relative to `|v||k|`.
fn cancelled_dot(k: &Frequency, v: &Vec3) -> f64 {
    let d = k.dot(v);
    if d.abs() <= ROUNDOFF * norm3(v) * k.norm() {
        0.0
    } else {
        d
    }
}

fn lin2(a: f64, x: &Vec3, b: f64, y: &Vec3) -> Vec3 {
    [a * x[0] + b * y[0], a * x[1] + b * y[1], a * x[2] + b * y[2]]
}

fn scale3(v: &Vec3, c: f64) -> Vec3 {
    [v[0] * c, v[1] * c, v[2] * c]
}

pub(crate) fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(v: &Vec3) -> f64 {
    dot3(v, v).sqrt()
}

fn norm_l2(it: impl Iterator<Item = f64>) -> f64 {
    it.map(|x| x * x).sum::<f64>().sqrt()
}
