//! Fourier representation of fields on the torus `[0, 2π)³`.
//!
//! A real field is stored by its full complex spectrum with the convention
//! `f(x) = Σ_k f̂(k) e^{ik·x}`, so that `‖f‖²_{L²} = (2π)³ Σ_k |f̂(k)|²`.
//! Coefficients are laid out row-major over `(k₁, k₂, k₃)` with each axis in
//! FFT order `0, 1, …, n/2−1, −n/2, …, −1`. Lookup by signed wavevector goes
//! through [`GridSpec::flat_index`].

pub(crate) mod ops;
mod transform;

pub use ops::{
    advect, apply_diff_op, curl, dealias, divergence, grad, grad_div, laplacian, leray_project,
    alpha_dot_grad, DiffOp, Field,
};
pub use transform::{forward_transform, inverse_transform, Fft3, PhysicalField};

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `(2π)³`, the volume of the periodic box.
pub const BOX_VOLUME: f64 = 8.0 * PI * PI * PI;

/// Cubic periodic grid with `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        Ok(GridSpec { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of grid points (and Fourier modes), `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest wavenumber per axis kept by the 2/3 rule.
    pub fn kmax_dealias(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Grid spacing `2π/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Signed wavenumber for an FFT-ordered index along one axis.
    #[inline]
    pub fn signed(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// FFT-ordered axis index for a signed wavenumber in `[-n/2, n/2)`.
    #[inline]
    pub fn axis_index(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    pub fn flat_index(&self, k: [i64; 3]) -> Option<usize> {
        let i1 = self.axis_index(k[0])?;
        let i2 = self.axis_index(k[1])?;
        let i3 = self.axis_index(k[2])?;
        Some((i1 * self.n + i2) * self.n + i3)
    }

    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        [self.signed(idx / (n * n)), self.signed((idx / n) % n), self.signed(idx % n)]
    }

    /// Flat index of `-k` (modulo the grid period).
    #[inline]
    pub fn conj_index(&self, idx: usize) -> usize {
        let n = self.n;
        let (i1, i2, i3) = (idx / (n * n), (idx / n) % n, idx % n);
        (((n - i1) % n) * n + (n - i2) % n) * n + (n - i3) % n
    }

    /// Wavevector used by odd-order derivatives: the Nyquist component
    /// `-n/2` has no Hermitian partner and is differentiated to zero.
    #[inline]
    pub fn deriv_wavevector(&self, idx: usize) -> [f64; 3] {
        let half = -((self.n / 2) as i64);
        let k = self.mode(idx);
        let f = |c: i64| if c == half { 0.0 } else { c as f64 };
        [f(k[0]), f(k[1]), f(k[2])]
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let k = self.mode(idx);
        [k[0] as f64, k[1] as f64, k[2] as f64]
    }

    #[inline]
    pub fn k_squared(&self, idx: usize) -> f64 {
        let k = self.mode(idx);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
    }

    /// Whether mode `idx` survives 2/3-rule truncation.
    #[inline]
    pub fn is_retained(&self, idx: usize) -> bool {
        let kc = self.kmax_dealias();
        self.mode(idx).iter().all(|c| c.abs() <= kc)
    }
}

/// Complex Fourier coefficients of a real scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalarField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        SpectralScalarField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(SpectralScalarField { grid, coeffs })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at signed wavevector `k`; zero outside the represented box.
    pub fn coeff(&self, k: [i64; 3]) -> Complex64 {
        self.grid
            .flat_index(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn set_coeff(&mut self, k: [i64; 3], value: Complex64) -> Result<()> {
        let i = self
            .grid
            .flat_index(k)
            .ok_or_else(|| Error::Usage(format!("wavevector {k:?} outside the grid")))?;
        self.coeffs[i] = value;
        Ok(())
    }

    /// Largest violation of `f̂(-k) = conj f̂(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| (self.coeffs[i] - self.coeffs[self.grid.conj_index(i)].conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Three scalar spectra on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVectorField {
    grid: GridSpec,
    components: [SpectralScalarField; 3],
}

impl SpectralVectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let z = SpectralScalarField::zeros(grid);
        SpectralVectorField {
            grid,
            components: [z.clone(), z.clone(), z],
        }
    }

    pub fn from_components(components: [SpectralScalarField; 3]) -> Result<Self> {
        let grid = components[0].grid;
        if components.iter().any(|c| c.grid != grid) {
            return Err(Error::Usage("vector components live on different grids".into()));
        }
        Ok(SpectralVectorField { grid, components })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn component(&self, i: usize) -> &SpectralScalarField {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut SpectralScalarField {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[SpectralScalarField; 3] {
        &self.components
    }

    pub fn into_components(self) -> [SpectralScalarField; 3] {
        self.components
    }

    /// Coefficient vector at signed wavevector `k`.
    pub fn coeff(&self, k: [i64; 3]) -> [Complex64; 3] {
        [
            self.components[0].coeff(k),
            self.components[1].coeff(k),
            self.components[2].coeff(k),
        ]
    }

    #[inline]
    pub(crate) fn at(&self, idx: usize) -> [Complex64; 3] {
        [
            self.components[0].coeffs[idx],
            self.components[1].coeffs[idx],
            self.components[2].coeffs[idx],
        ]
    }

    #[inline]
    pub(crate) fn set_at(&mut self, idx: usize, v: [Complex64; 3]) {
        for (c, x) in self.components.iter_mut().zip(v) {
            c.coeffs[idx] = x;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for c in &mut self.components {
            for z in &mut c.coeffs {
                *z *= factor;
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralVectorField) {
        debug_assert_eq!(self.grid, other.grid);
        for (c, o) in self.components.iter_mut().zip(&other.components) {
            for (z, w) in c.coeffs.iter_mut().zip(&o.coeffs) {
                *z += *w * a;
            }
        }
    }

    pub fn zero_mean(&mut self) {
        for c in &mut self.components {
            c.coeffs[0] = Complex64::new(0.0, 0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub fn is_zero(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.coeffs.iter().all(|z| z.re == 0.0 && z.im == 0.0))
    }

    /// `max_k |k·v̂(k)| / max_k |v̂(k)|`, zero for the zero field.
    pub fn divergence_residual(&self) -> f64 {
        let mut max_div: f64 = 0.0;
        let mut max_amp: f64 = 0.0;
        for idx in 0..self.grid.len() {
            let k = self.grid.deriv_wavevector(idx);
            let v = self.at(idx);
            let d = v[0] * k[0] + v[1] * k[1] + v[2] * k[2];
            max_div = max_div.max(d.norm());
            max_amp = max_amp.max((v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt());
        }
        if max_amp == 0.0 {
            0.0
        } else {
            max_div / max_amp
        }
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.hermitian_defect())
            .fold(0.0, f64::max)
    }
}

/// Real `L²` inner product `(2π)³ Σ_k Re(â(k)·conj b̂(k))`.
pub fn inner(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    weighted_inner(a, b, |_| 1.0)
}

/// Inner product with a per-mode weight `w(idx)` applied to every pairing.
pub fn weighted_inner(
    a: &SpectralVectorField,
    b: &SpectralVectorField,
    weight: impl Fn(usize) -> f64,
) -> f64 {
    debug_assert_eq!(a.grid, b.grid);
    let mut acc = 0.0;
    for idx in 0..a.grid.len() {
        let (x, y) = (a.at(idx), b.at(idx));
        let pair: f64 = (0..3).map(|c| (x[c] * y[c].conj()).re).sum();
        if pair != 0.0 {
            acc += weight(idx) * pair;
        }
    }
    BOX_VOLUME * acc
}

/// Scalar-field inner product `(2π)³ Σ_k Re(â conj b̂)`.
pub fn inner_scalar(a: &SpectralScalarField, b: &SpectralScalarField) -> f64 {
    let s: f64 = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| (x * y.conj()).re)
        .sum();
    BOX_VOLUME * s
}
