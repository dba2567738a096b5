//! Dense spectral fields on an `N³` grid.
//!
//! Convention: `f(x) = Σ_k F_k e^{ik·x}` with `x_j = 2πj/N`. Index `j` of an
//! axis holds wavenumber `j` for `j < N/2` and `j - N` otherwise.
//!
//! An axis along which a field is constant may be stored with a single point;
//! it then only holds wavenumber 0.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::trig_field::{Arity, Frequency, TrigField};

/// Spectral coefficients of a real scalar or 3-vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    n: usize,
    /// Points per axis, each `N` or 1.
    dims: [usize; 3],
    arity: Arity,
    /// One flat array per component, index `(i0·d1 + i1)·d2 + i2`.
    coeffs: Vec<Vec<Complex64>>,
}

pub(crate) fn wavenumber(j: usize, n: usize) -> i64 {
    if n == 1 {
        0
    } else if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn slot(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Largest wavenumber kept by the 2/3 rule.
pub fn dealias_limit(n: usize) -> i64 {
    (n / 3) as i64
}

impl GridField {
    pub fn zero(n: usize, arity: Arity) -> Self {
        Self::zero_dims(n, [n, n, n], arity)
    }

    pub fn zero_dims(n: usize, dims: [usize; 3], arity: Arity) -> Self {
        debug_assert!(dims.iter().all(|&d| d == n || d == 1));
        GridField {
            n,
            dims,
            arity,
            coeffs: vec![vec![Complex64::new(0.0, 0.0); dims[0] * dims[1] * dims[2]]; arity.components()],
        }
    }

    pub(crate) fn from_coeffs(n: usize, dims: [usize; 3], arity: Arity, coeffs: Vec<Vec<Complex64>>) -> Self {
        debug_assert_eq!(coeffs.len(), arity.components());
        GridField { n, dims, arity, coeffs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn coeffs(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.coeffs
    }

    pub fn index(&self, k: [i64; 3]) -> usize {
        let d = self.dims;
        (slot(k[0], d[0]) * d[1] + slot(k[1], d[1])) * d[2] + slot(k[2], d[2])
    }

    /// Coefficient `F_k` of component `c`.
    pub fn coeff(&self, c: usize, k: [i64; 3]) -> Complex64 {
        self.coeffs[c][self.index(k)]
    }

    pub fn wavenumbers(&self, idx: usize) -> [i64; 3] {
        let d = self.dims;
        [
            wavenumber(idx / (d[1] * d[2]), d[0]),
            wavenumber((idx / d[2]) % d[1], d[1]),
            wavenumber(idx % d[2], d[2]),
        ]
    }

    /// Embeds a trigonometric field; every mode must satisfy `|k_axis| <= N/3`.
    pub fn from_trig(f: &TrigField, n: usize) -> Result<Self> {
        let (g, dropped) = Self::embed(f, n, [n, n, n], true)?;
        debug_assert_eq!(dropped, 0.0);
        Ok(g)
    }

    /// As [`from_trig`](Self::from_trig) on a grid with some axes collapsed;
    /// modes varying along a collapsed axis are a resolution error.
    pub fn from_trig_dims(f: &TrigField, n: usize, dims: [usize; 3]) -> Result<Self> {
        Self::embed(f, n, dims, true).map(|(g, _)| g)
    }

    /// Embeds the resolvable modes and returns the coefficient sum of the rest.
    pub fn from_trig_truncated(f: &TrigField, n: usize, dims: [usize; 3]) -> Result<(Self, f64)> {
        Self::embed(f, n, dims, false)
    }

    fn embed(f: &TrigField, n: usize, dims: [usize; 3], strict: bool) -> Result<(Self, f64)> {
        check_grid_size(n)?;
        if dims.iter().any(|&d| d != n && d != 1) {
            return Err(Error::invalid("dims", format!("each axis must hold N={n} or 1 points, got {dims:?}")));
        }
        let limit = dealias_limit(n) as i128;
        let mut g = GridField::zero_dims(n, dims, f.arity());
        let mut dropped = 0.0;
        for (k, m) in f.modes() {
            let out_of_range = (0..3).any(|a| {
                let l = if dims[a] == 1 { 0 } else { limit };
                k.0[a].abs() > l
            });
            if out_of_range {
                if strict {
                    return Err(Error::Resolution { mode: *k, n, limit });
                }
                dropped += (0..3).map(|c| m.cos[c].hypot(m.sin[c])).sum::<f64>();
                continue;
            }
            let kk = [k.0[0] as i64, k.0[1] as i64, k.0[2] as i64];
            let neg = [-kk[0], -kk[1], -kk[2]];
            let (ip, im) = (g.index(kk), g.index(neg));
            for c in 0..f.arity().components() {
                if k.is_zero() {
                    g.coeffs[c][ip] += Complex64::new(m.cos[c], 0.0);
                } else {
                    // a cos θ + b sin θ = (a - ib)/2 e^{iθ} + (a + ib)/2 e^{-iθ}
                    g.coeffs[c][ip] += Complex64::new(m.cos[c], -m.sin[c]) * 0.5;
                    g.coeffs[c][im] += Complex64::new(m.cos[c], m.sin[c]) * 0.5;
                }
            }
        }
        Ok((g, dropped))
    }

    /// Physical values on the grid, one array per component.
    pub fn to_physical(&self, fft: &Fft3) -> Vec<Vec<f64>> {
        self.coeffs
            .iter()
            .map(|c| {
                let mut buf = c.clone();
                fft.inverse(&mut buf);
                buf.into_iter().map(|z| z.re).collect()
            })
            .collect()
    }

    /// Builds the spectral field of real physical samples.
    pub fn from_physical(values: &[Vec<f64>], fft: &Fft3) -> Self {
        let arity = if values.len() == 1 { Arity::Scalar } else { Arity::Vector };
        let coeffs = values
            .iter()
            .map(|v| {
                let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                fft.forward(&mut buf);
                buf
            })
            .collect();
        GridField {
            n: fft.n(),
            dims: fft.dims(),
            arity,
            coeffs,
        }
    }

    /// Largest Euclidean magnitude over the grid points.
    pub fn linf(&self, fft: &Fft3) -> f64 {
        let phys = self.to_physical(fft);
        let len = self.len();
        (0..len)
            .map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// `max_k |k·F_k|` of a vector field.
    pub fn divergence_max(&self) -> f64 {
        assert_eq!(self.arity, Arity::Vector);
        let len = self.len();
        (0..len)
            .map(|i| {
                let k = self.wavenumbers(i);
                (0..3).map(|c| self.coeffs[c][i] * k[c] as f64).sum::<Complex64>().norm()
            })
            .fold(0.0, f64::max)
    }

    /// Spatial mean of component `c`.
    pub fn mean(&self, c: usize) -> f64 {
        self.coeffs[c][0].re
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        if self.n != other.n || self.dims != other.dims || self.arity != other.arity {
            return Err(Error::invalid("other", "grid size or arity differ"));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(GridField {
            n: self.n,
            dims: self.dims,
            arity: self.arity,
            coeffs,
        })
    }

    /// Largest deviation from Hermitian symmetry `F_{-k} = conj(F_k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let len = self.len();
        let mut worst: f64 = 0.0;
        for c in &self.coeffs {
            for i in 0..len {
                let k = self.wavenumbers(i);
                let j = self.index([-k[0], -k[1], -k[2]]);
                worst = worst.max((c[i] - c[j].conj()).norm());
            }
        }
        worst
    }

    /// Nonzero coefficients as `(k, component, F_k)`, in index order.
    pub fn nonzero(&self) -> impl Iterator<Item = ([i64; 3], usize, Complex64)> + '_ {
        self.coeffs.iter().enumerate().flat_map(move |(c, arr)| {
            arr.iter()
                .enumerate()
                .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
                .map(move |(i, z)| (self.wavenumbers(i), c, *z))
        })
    }

    /// The field as a trigonometric polynomial, dropping coefficients at or
    /// below `threshold` in magnitude.
    pub fn to_trig(&self, threshold: f64) -> TrigField {
        let mut f = TrigField::zero(self.arity);
        for (k, c, z) in self.nonzero() {
            if z.norm() <= threshold {
                continue;
            }
            let freq = Frequency::new(k[0] as i128, k[1] as i128, k[2] as i128);
            let (rep, _) = freq.canonical();
            // Take each pair {k, -k} once, from the canonical side.
            if rep != freq {
                continue;
            }
            let mut cos = [0.0; 3];
            let mut sin = [0.0; 3];
            if freq.is_zero() {
                cos[c] = z.re;
            } else {
                cos[c] = 2.0 * z.re;
                sin[c] = -2.0 * z.im;
            }
            f.accumulate(freq, cos, sin);
        }
        f
    }
}

pub(crate) fn check_grid_size(n: usize) -> Result<()> {
    if n >= 4 && n.is_power_of_two() && n <= 1024 {
        Ok(())
    } else {
        Err(Error::invalid("N", format!("grid size must be a power of two in [4, 1024], got {n}")))
    }
}

/// Planned 3D transforms for one grid shape.
pub struct Fft3 {
    n: usize,
    dims: [usize; 3],
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        Self::with_dims(n, [n, n, n])
    }

    /// Transforms for a grid whose axes hold `N` or 1 points.
    pub fn with_dims(n: usize, dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            dims,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Physical samples to coefficients, normalised by the point count.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &*self.forward);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    /// Coefficients to physical samples.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &*self.inverse);
    }

    fn apply(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let [d0, d1, d2] = self.dims;
        assert_eq!(data.len(), d0 * d1 * d2);
        if d2 > 1 {
            fft.process(data);
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
        if d1 > 1 {
            // gather (i0, i2, i1)
            for i0 in 0..d0 {
                for i1 in 0..d1 {
                    for i2 in 0..d2 {
                        buf[(i0 * d2 + i2) * d1 + i1] = data[(i0 * d1 + i1) * d2 + i2];
                    }
                }
            }
            fft.process(&mut buf);
            for i0 in 0..d0 {
                for i1 in 0..d1 {
                    for i2 in 0..d2 {
                        data[(i0 * d1 + i1) * d2 + i2] = buf[(i0 * d2 + i2) * d1 + i1];
                    }
                }
            }
        }
        if d0 > 1 {
            // gather (i1, i2, i0)
            for i0 in 0..d0 {
                for i1 in 0..d1 {
                    for i2 in 0..d2 {
                        buf[(i1 * d2 + i2) * d0 + i0] = data[(i0 * d1 + i1) * d2 + i2];
                    }
                }
            }
            fft.process(&mut buf);
            for i0 in 0..d0 {
                for i1 in 0..d1 {
                    for i2 in 0..d2 {
                        data[(i0 * d1 + i1) * d2 + i2] = buf[(i1 * d2 + i2) * d0 + i0];
                    }
                }
            }
        }
    }
}

/// Embeds `f` on an `N³` grid (same as [`GridField::from_trig`]).
pub fn to_grid(f: &TrigField, n: usize) -> Result<GridField> {
    GridField::from_trig(f, n)
}
