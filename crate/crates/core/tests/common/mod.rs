#![allow(dead_code)]

use mmp_core::diophantine::default_alpha;
use mmp_core::spectral::dealias;
use mmp_core::state::make_random_state;
use mmp_core::{GridSpec, InitSpec, PhysParams, State, SystemVariant};
use nalgebra::SMatrix;
use num_complex::Complex64;

pub fn grid(n: usize) -> GridSpec {
    GridSpec::new(n).unwrap()
}

/// Seeded random state with each field of `H^s` norm `eps`.
pub fn random_state(n: usize, seed: u64, eps: f64, s: f64) -> State {
    let g = grid(n);
    let init = InitSpec::with_defaults(g, eps, s, seed);
    make_random_state(g, &init, SystemVariant::Full).unwrap()
}

/// Same as [`random_state`] with the 2/3 truncation applied to every field.
pub fn dealiased_state(n: usize, seed: u64, eps: f64) -> State {
    let mut s = random_state(n, seed, eps, 0.0);
    for f in s.fields_mut() {
        *f = dealias(f);
    }
    s
}

pub fn max_abs_diff(a: &mmp_core::SpectralVectorField, b: &mmp_core::SpectralVectorField) -> f64 {
    let mut m: f64 = 0.0;
    for c in 0..3 {
        for (x, y) in a.component(c).coeffs().iter().zip(b.component(c).coeffs()) {
            m = m.max((x - y).norm());
        }
    }
    m
}

pub fn max_abs(a: &mmp_core::SpectralVectorField) -> f64 {
    let mut m: f64 = 0.0;
    for c in 0..3 {
        for x in a.component(c).coeffs() {
            m = m.max(x.norm());
        }
    }
    m
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub type M9 = SMatrix<Complex64, 9, 9>;

/// Coefficients exercising every linear coupling of the perturbation system.
pub fn oracle_params() -> PhysParams {
    PhysParams {
        chi: 1.0,
        kappa: 0.5,
        eta: 1.0,
        nu: 0.0,
        alpha: default_alpha(1.0),
        ..PhysParams::default()
    }
}

/// The linear operator on one mode, acting on `(u, ω, B)` stacked.
pub fn mode_matrix(k: [f64; 3], p: &PhysParams) -> M9 {
    let i = Complex64::i();
    let re = |x: f64| Complex64::new(x, 0.0);
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    let a = p.alpha[0] * k[0] + p.alpha[1] * k[1] + p.alpha[2] * k[2];
    // ik×
    let cross = [
        [0.0, -k[2], k[1]],
        [k[2], 0.0, -k[0]],
        [-k[1], k[0], 0.0],
    ];
    let mut m = M9::zeros();
    for r in 0..3 {
        m[(r, r)] = re(-(p.mu + p.chi) * k2);
        m[(3 + r, 3 + r)] = re(-(p.eta * k2 + 4.0 * p.chi));
        m[(6 + r, 6 + r)] = re(-p.nu * k2);
        m[(r, 6 + r)] = i * a;
        m[(6 + r, r)] = i * a;
        for c in 0..3 {
            m[(r, 3 + c)] += i * (2.0 * p.chi * cross[r][c]);
            m[(3 + r, c)] += i * (2.0 * p.chi * cross[r][c]);
            m[(3 + r, 3 + c)] -= re(p.kappa * k[r] * k[c]);
        }
    }
    m
}

/// `e^{Lt}` applied mode by mode.
pub fn exact(s: &State, p: &PhysParams, t: f64) -> State {
    let g = s.grid();
    let mut out = s.clone();
    for idx in 0..g.len() {
        let mode = g.mode(idx);
        if mode == [0, 0, 0] {
            continue;
        }
        let e = (mode_matrix(g.wavevector(idx), p) * Complex64::new(t, 0.0)).exp();
        let mut x = nalgebra::SVector::<Complex64, 9>::zeros();
        for (f, field) in s.fields().into_iter().enumerate() {
            let v = field.coeff(mode);
            for c in 0..3 {
                x[3 * f + c] = v[c];
            }
        }
        let y = e * x;
        for (f, field) in out.fields_mut().into_iter().enumerate() {
            for c in 0..3 {
                field.component_mut(c).set_coeff(mode, y[3 * f + c]).unwrap();
            }
        }
    }
    out.t = s.t + t;
    out
}

pub fn distance(a: &State, b: &State) -> f64 {
    let mut m: f64 = 0.0;
    for (x, y) in a.fields().into_iter().zip(b.fields()) {
        m = m.max(max_abs_diff(x, y));
    }
    m
}
