//! Independent reference for the bilinear Duhamel terms.
//!
//! Fields are expanded in complex exponentials `Σ c(k) e^{ik·x}` over all of
//! ℤ³ (no canonical folding), products are plain convolutions, and the time
//! integral is a composite Simpson rule.

#![allow(dead_code)]

use std::collections::BTreeMap;

use norminflate::picard::BilinearKind;
use norminflate::{Arity, TrigField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Spectrum = BTreeMap<[i64; 3], [Complex64; 3]>;

pub fn spectrum(f: &TrigField) -> Spectrum {
    let mut out = Spectrum::new();
    let comps = f.arity().components();
    for (k, m) in f.modes() {
        let k = [k.0[0] as i64, k.0[1] as i64, k.0[2] as i64];
        let neg = [-k[0], -k[1], -k[2]];
        for c in 0..comps {
            let cos = m.cos[c];
            let sin = m.sin[c];
            if k == [0, 0, 0] {
                out.entry(k).or_insert([Complex64::default(); 3])[c] += cos;
                continue;
            }
            out.entry(k).or_insert([Complex64::default(); 3])[c] += Complex64::new(cos, -sin) / 2.0;
            out.entry(neg).or_insert([Complex64::default(); 3])[c] += Complex64::new(cos, sin) / 2.0;
        }
    }
    out
}

fn norm_sq(k: [i64; 3]) -> f64 {
    k.iter().map(|&c| (c * c) as f64).sum()
}

/// Composite Simpson on `[a, b]` with an even number of intervals.
pub fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, intervals: usize, f: F) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// `-∫_0^t (t-s)^p e^{(t-s)Δ} P[∇·(e^{sΔ}u ⊗ e^{sΔ}f)] ds` by quadrature.
///
/// B2 puts the scalar result on `e₃` before projecting; B3 skips the projection.
pub fn bilinear_quadrature(kind: BilinearKind, u: &TrigField, f: &TrigField, t: f64, intervals: usize) -> Spectrum {
    let su = spectrum(u);
    let sf = spectrum(f);
    let power = i32::from(kind == BilinearKind::B2);
    let mut out = Spectrum::new();
    for (m, a) in &su {
        for (n, b) in &sf {
            let q = [m[0] + n[0], m[1] + n[1], m[2] + n[2]];
            if q == [0, 0, 0] {
                continue;
            }
            // ∂_j(u_j f) at q: i (q·a) b.
            let qa: Complex64 = (0..3).map(|j| a[j] * q[j] as f64).sum();
            let coef = Complex64::i() * qa;
            let (big_m, big_a) = (norm_sq(q), norm_sq(*m) + norm_sq(*n));
            let kernel = simpson(0.0, t, intervals, |s| {
                -(t - s).powi(power) * (-big_m * (t - s)).exp() * (-big_a * s).exp()
            });
            let entry = out.entry(q).or_insert([Complex64::default(); 3]);
            for c in 0..3 {
                entry[c] += coef * b[c] * kernel;
            }
        }
    }
    for (q, v) in out.iter_mut() {
        let mut w = *v;
        if kind == BilinearKind::B2 {
            w = [Complex64::default(), Complex64::default(), w[0]];
        }
        if kind != BilinearKind::B3 {
            let qq = norm_sq(*q);
            let qw: Complex64 = (0..3).map(|j| w[j] * q[j] as f64).sum();
            for j in 0..3 {
                w[j] -= qw * (q[j] as f64 / qq);
            }
        }
        *v = w;
    }
    out
}

/// Largest per-mode mismatch, relative to the mode's magnitude.
///
/// Magnitudes are floored at `1e-10` of the largest reference mode: below that
/// a mode is roundoff (e.g. `e₃` projected along `q ∥ e₃`).
pub fn max_relative_error(closed: &Spectrum, reference: &Spectrum) -> f64 {
    let mag = |v: &[Complex64; 3]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = reference.values().map(mag).fold(0.0, f64::max);
    let floor = (1e-10 * scale).max(f64::MIN_POSITIVE);
    let zero = [Complex64::default(); 3];
    let mut worst: f64 = 0.0;
    for k in closed.keys().chain(reference.keys()) {
        let a = closed.get(k).unwrap_or(&zero);
        let b = reference.get(k).unwrap_or(&zero);
        let diff = (0..3).map(|c| (a[c] - b[c]).norm()).fold(0.0, f64::max);
        worst = worst.max(diff / mag(b).max(floor));
    }
    worst
}

/// Seeded case for the oracle comparison: vector `u`, matching `f`, time.
pub fn oracle_case(seed: u64, kind: BilinearKind) -> (TrigField, TrigField, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nu = rng.gen_range(1..=4);
    let nf = rng.gen_range(1..=4);
    let t = rng.gen_range(0.05..=1.0);
    let u = TrigField::random(&mut rng, Arity::Vector, nu, 8);
    let arity = if kind == BilinearKind::B1 { Arity::Vector } else { Arity::Scalar };
    let f = TrigField::random(&mut rng, arity, nf, 8);
    (u, f, t)
}

/// Worst oracle error over `cases` seeds and all three kinds.
pub fn oracle_sweep(cases: u64, intervals: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..cases {
        for kind in [BilinearKind::B1, BilinearKind::B2, BilinearKind::B3] {
            let (u, f, t) = oracle_case(seed, kind);
            let closed = norminflate::picard::bilinear(kind, &u, &f, t).expect("closed form");
            let reference = bilinear_quadrature(kind, &u, &f, t, intervals);
            worst = worst.max(max_relative_error(&spectrum(&closed), &reference));
        }
    }
    worst
}
