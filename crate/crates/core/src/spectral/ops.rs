//! Exact spectral differential operators, dealiasing and Leray projection.

use num_complex::Complex64;

use super::{Fft3, GridSpec, SpectralScalarField, SpectralVectorField};
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiffOp {
    Grad,
    Div,
    Curl,
    Laplacian,
    GradDiv,
    AlphaDotGrad([f64; 3]),
}

/// A scalar or vector spectral field, for rank-generic operator dispatch.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Scalar(SpectralScalarField),
    Vector(SpectralVectorField),
}

impl Field {
    fn rank(&self) -> &'static str {
        match self {
            Field::Scalar(_) => "scalar",
            Field::Vector(_) => "vector",
        }
    }
}

pub fn apply_diff_op(f: &Field, op: DiffOp) -> Result<Field> {
    let mismatch = || Error::Usage(format!("{op:?} is not defined for a {} field", f.rank()));
    Ok(match (f, op) {
        (Field::Scalar(s), DiffOp::Grad) => Field::Vector(grad(s)),
        (Field::Scalar(s), DiffOp::Laplacian) => Field::Scalar(laplacian_scalar(s)),
        (Field::Scalar(s), DiffOp::AlphaDotGrad(a)) => Field::Scalar(alpha_dot_grad_scalar(s, a)),
        (Field::Vector(v), DiffOp::Div) => Field::Scalar(divergence(v)),
        (Field::Vector(v), DiffOp::Curl) => Field::Vector(curl(v)),
        (Field::Vector(v), DiffOp::Laplacian) => Field::Vector(laplacian(v)),
        (Field::Vector(v), DiffOp::GradDiv) => Field::Vector(grad_div(v)),
        (Field::Vector(v), DiffOp::AlphaDotGrad(a)) => Field::Vector(alpha_dot_grad(v, a)),
        _ => return Err(mismatch()),
    })
}

fn map_vector(
    v: &SpectralVectorField,
    f: impl Fn([f64; 3], f64, [Complex64; 3]) -> [Complex64; 3],
) -> SpectralVectorField {
    let g = v.grid();
    let mut out = SpectralVectorField::zeros(g);
    for idx in 0..g.len() {
        let x = v.at(idx);
        if x.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            continue;
        }
        out.set_at(idx, f(g.deriv_wavevector(idx), g.k_squared(idx), x));
    }
    out
}

/// `∇f`: `ik f̂`.
pub fn grad(f: &SpectralScalarField) -> SpectralVectorField {
    let g = f.grid();
    let mut out = SpectralVectorField::zeros(g);
    for (idx, &z) in f.coeffs().iter().enumerate() {
        let k = g.deriv_wavevector(idx);
        let iz = I * z;
        out.set_at(idx, [iz * k[0], iz * k[1], iz * k[2]]);
    }
    out
}

/// `∇·v`: `ik·v̂`.
pub fn divergence(v: &SpectralVectorField) -> SpectralScalarField {
    let g = v.grid();
    let mut out = SpectralScalarField::zeros(g);
    for (idx, z) in out.coeffs_mut().iter_mut().enumerate() {
        let k = g.deriv_wavevector(idx);
        let x = v.at(idx);
        *z = I * (x[0] * k[0] + x[1] * k[1] + x[2] * k[2]);
    }
    out
}

/// `∇×v`: `ik×v̂`.
pub fn curl(v: &SpectralVectorField) -> SpectralVectorField {
    map_vector(v, |k, _, x| {
        [
            I * (x[2] * k[1] - x[1] * k[2]),
            I * (x[0] * k[2] - x[2] * k[0]),
            I * (x[1] * k[0] - x[0] * k[1]),
        ]
    })
}

/// `Δv`: `−|k|² v̂`, componentwise.
pub fn laplacian(v: &SpectralVectorField) -> SpectralVectorField {
    map_vector(v, |_, k2, x| [x[0] * -k2, x[1] * -k2, x[2] * -k2])
}

fn laplacian_scalar(f: &SpectralScalarField) -> SpectralScalarField {
    let g = f.grid();
    let mut out = f.clone();
    for (idx, z) in out.coeffs_mut().iter_mut().enumerate() {
        *z *= -g.k_squared(idx);
    }
    out
}

/// `∇∇·v`: `−k(k·v̂)`.
pub fn grad_div(v: &SpectralVectorField) -> SpectralVectorField {
    map_vector(v, |k, _, x| {
        let d = x[0] * k[0] + x[1] * k[1] + x[2] * k[2];
        [-d * k[0], -d * k[1], -d * k[2]]
    })
}

/// `(α·∇)v`: `i(α·k) v̂`.
pub fn alpha_dot_grad(v: &SpectralVectorField, alpha: [f64; 3]) -> SpectralVectorField {
    map_vector(v, |k, _, x| {
        let s = I * (alpha[0] * k[0] + alpha[1] * k[1] + alpha[2] * k[2]);
        [x[0] * s, x[1] * s, x[2] * s]
    })
}

fn alpha_dot_grad_scalar(f: &SpectralScalarField, alpha: [f64; 3]) -> SpectralScalarField {
    let g = f.grid();
    let mut out = f.clone();
    for (idx, z) in out.coeffs_mut().iter_mut().enumerate() {
        let k = g.deriv_wavevector(idx);
        *z *= I * (alpha[0] * k[0] + alpha[1] * k[1] + alpha[2] * k[2]);
    }
    out
}

/// Leray projection onto divergence-free fields; also removes the mean.
pub fn leray_project(v: &SpectralVectorField) -> SpectralVectorField {
    let mut out = v.clone();
    leray_project_in_place(&mut out);
    out
}

pub(crate) fn leray_project_in_place(v: &mut SpectralVectorField) {
    let g = v.grid();
    for idx in 0..g.len() {
        let k = g.deriv_wavevector(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            continue;
        }
        let x = v.at(idx);
        let d = (x[0] * k[0] + x[1] * k[1] + x[2] * k[2]) / k2;
        v.set_at(idx, [x[0] - d * k[0], x[1] - d * k[1], x[2] - d * k[2]]);
    }
    v.zero_mean();
}

/// 2/3-rule truncation: zero every mode with some `|kᵢ| > ⌊n/3⌋`.
pub fn dealias(f: &SpectralVectorField) -> SpectralVectorField {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

pub(crate) fn dealias_in_place(f: &mut SpectralVectorField) {
    let g = f.grid();
    for c in 0..3 {
        dealias_scalar_in_place(g, f.component_mut(c).coeffs_mut());
    }
}

pub(crate) fn dealias_scalar_in_place(g: GridSpec, coeffs: &mut [Complex64]) {
    let n = g.n();
    let kc = g.kmax_dealias();
    let keep: Vec<bool> = (0..n).map(|i| g.signed(i).abs() <= kc).collect();
    for (idx, z) in coeffs.iter_mut().enumerate() {
        if !(keep[idx / (n * n)] && keep[(idx / n) % n] && keep[idx % n]) {
            *z = Complex64::default();
        }
    }
}

/// Pseudo-spectral `(v·∇)f`, dealiased.
pub fn advect(v: &SpectralVectorField, f: &SpectralVectorField) -> Result<SpectralVectorField> {
    if v.grid() != f.grid() {
        return Err(Error::Usage(format!(
            "advect: grids differ ({} vs {})",
            v.grid().n(),
            f.grid().n()
        )));
    }
    let fft = Fft3::new(v.grid());
    Ok(advect_with(&fft, v, f))
}

/// [`advect`] with a caller-supplied transform plan.
pub fn advect_with(fft: &Fft3, v: &SpectralVectorField, f: &SpectralVectorField) -> SpectralVectorField {
    let vp = fft.vector_to_physical(v);
    advect_physical(fft, &vp, f)
}

/// `(v·∇)f` with `v` already in physical space.
pub(crate) fn advect_physical(
    fft: &Fft3,
    vp: &[Vec<f64>; 3],
    f: &SpectralVectorField,
) -> SpectralVectorField {
    let grads = gradient_tensor(f);
    let refs: Vec<&SpectralScalarField> = grads.iter().collect();
    let gp = fft.to_physical_many(&refs);
    let len = fft.grid().len();
    let mut prod = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    for (c, out) in prod.iter_mut().enumerate() {
        for (j, vj) in vp.iter().enumerate() {
            let gcj = &gp[3 * c + j];
            for ((o, a), b) in out.iter_mut().zip(vj).zip(gcj) {
                *o += a * b;
            }
        }
    }
    let mut out = fft.vector_to_spectral([&prod[0], &prod[1], &prod[2]]);
    dealias_in_place(&mut out);
    out
}

/// `∂_j f_c` for `c, j ∈ {0,1,2}`, ordered `3c + j`.
pub(crate) fn gradient_tensor(f: &SpectralVectorField) -> Vec<SpectralScalarField> {
    let mut out = Vec::with_capacity(9);
    for c in 0..3 {
        let g = grad(f.component(c));
        out.extend(g.into_components());
    }
    out
}
