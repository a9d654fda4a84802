use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{GridSpec, SpectralScalarField, SpectralVectorField};
use crate::error::{Error, Result};

/// Real samples of a scalar field on the uniform grid, row-major over
/// `(x₁, x₂, x₃)` with `x_j = 2π i_j / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl PhysicalField {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.iter().product::<usize>() != data.len() {
            return Err(Error::Config(format!(
                "array of length {} does not match dimensions {dims:?}",
                data.len()
            )));
        }
        Ok(PhysicalField { dims, data })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let n = grid.n();
        let h = grid.spacing();
        let mut data = Vec::with_capacity(grid.len());
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    data.push(f([i1 as f64 * h, i2 as f64 * h, i3 as f64 * h]));
                }
            }
        }
        PhysicalField {
            dims: [n; 3],
            data,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Planned 3D complex FFT for one cubic grid.
///
/// The forward transform is normalized by `1/n³` so that it returns the
/// coefficients `f̂(k)`; the inverse is the plain synthesis sum.
#[derive(Clone)]
pub struct Fft3 {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("grid", &self.grid).finish()
    }
}

impl Fft3 {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    fn transform_3d(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.grid.n();
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut tmp = vec![Complex64::default(); buf.len()];

        // axis 3 is contiguous
        fft.process_with_scratch(buf, &mut scratch);

        // axis 2: transpose every (i2, i3) slab
        for slab in buf.chunks_exact_mut(n * n) {
            let t = &mut tmp[..n * n];
            transpose(slab, t, n, n);
            fft.process_with_scratch(t, &mut scratch);
            transpose(t, slab, n, n);
        }

        // axis 1: treat the array as n rows of n² entries
        transpose(buf, &mut tmp, n, n * n);
        fft.process_with_scratch(&mut tmp, &mut scratch);
        transpose(&tmp, buf, n * n, n);
    }

    /// In-place normalized forward transform of a full complex array.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.transform_3d(buf, self.forward.as_ref());
        let norm = 1.0 / self.grid.len() as f64;
        for z in buf.iter_mut() {
            *z *= norm;
        }
    }

    /// In-place synthesis `f(x) = Σ_k f̂(k) e^{ik·x}`.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.transform_3d(buf, self.inverse.as_ref());
    }

    pub fn to_spectral(&self, data: &[f64]) -> SpectralScalarField {
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_in_place(&mut buf);
        SpectralScalarField {
            grid: self.grid,
            coeffs: buf,
        }
    }

    pub fn to_physical(&self, f: &SpectralScalarField) -> Vec<f64> {
        let mut buf = f.coeffs.clone();
        self.inverse_in_place(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Forward transform of two real arrays with one complex FFT.
    pub fn to_spectral_pair(
        &self,
        a: &[f64],
        b: &[f64],
    ) -> (SpectralScalarField, SpectralScalarField) {
        let mut buf: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.forward_in_place(&mut buf);
        let len = self.grid.len();
        let mut fa = Vec::with_capacity(len);
        let mut fb = Vec::with_capacity(len);
        for idx in 0..len {
            let z = buf[idx];
            let zc = buf[self.grid.conj_index(idx)].conj();
            fa.push((z + zc) * 0.5);
            // (z - zc) / 2i
            let d = (z - zc) * 0.5;
            fb.push(Complex64::new(d.im, -d.re));
        }
        (
            SpectralScalarField {
                grid: self.grid,
                coeffs: fa,
            },
            SpectralScalarField {
                grid: self.grid,
                coeffs: fb,
            },
        )
    }

    /// Inverse transform of two Hermitian spectra with one complex FFT.
    pub fn to_physical_pair(
        &self,
        a: &SpectralScalarField,
        b: &SpectralScalarField,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| x + Complex64::i() * y)
            .collect();
        self.inverse_in_place(&mut buf);
        buf.into_iter().map(|z| (z.re, z.im)).unzip()
    }

    /// Physical samples of several spectra, pairing transforms where possible.
    pub fn to_physical_many(&self, fields: &[&SpectralScalarField]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(fields.len());
        let mut chunks = fields.chunks_exact(2);
        for pair in &mut chunks {
            let (x, y) = self.to_physical_pair(pair[0], pair[1]);
            out.push(x);
            out.push(y);
        }
        if let [last] = chunks.remainder() {
            out.push(self.to_physical(last));
        }
        out
    }

    /// Spectra of several real arrays, pairing transforms where possible.
    pub fn to_spectral_many(&self, arrays: &[&[f64]]) -> Vec<SpectralScalarField> {
        let mut out = Vec::with_capacity(arrays.len());
        let mut chunks = arrays.chunks_exact(2);
        for pair in &mut chunks {
            let (x, y) = self.to_spectral_pair(pair[0], pair[1]);
            out.push(x);
            out.push(y);
        }
        if let [last] = chunks.remainder() {
            out.push(self.to_spectral(last));
        }
        out
    }

    pub fn vector_to_physical(&self, v: &SpectralVectorField) -> [Vec<f64>; 3] {
        let c = v.components();
        let mut it = self.to_physical_many(&[&c[0], &c[1], &c[2]]).into_iter();
        [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
    }

    pub fn vector_to_spectral(&self, comps: [&[f64]; 3]) -> SpectralVectorField {
        let mut it = self.to_spectral_many(&comps).into_iter();
        SpectralVectorField {
            grid: self.grid,
            components: [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
        }
    }
}

/// `dst[c * rows + r] = src[r * cols + c]`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 16;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Spectrum of a real vector field sampled on `grid`.
pub fn forward_transform(
    physical: &[PhysicalField; 3],
    grid: GridSpec,
) -> Result<SpectralVectorField> {
    let n = grid.n();
    if let Some(bad) = physical.iter().find(|p| p.dims != [n; 3]) {
        return Err(Error::Config(format!(
            "physical array has dimensions {:?}, grid expects {:?}",
            bad.dims,
            [n; 3]
        )));
    }
    let fft = Fft3::new(grid);
    Ok(fft.vector_to_spectral([&physical[0].data, &physical[1].data, &physical[2].data]))
}

/// Real samples of a spectral vector field.
pub fn inverse_transform(field: &SpectralVectorField) -> [PhysicalField; 3] {
    let grid = field.grid();
    let fft = Fft3::new(grid);
    let [a, b, c] = fft.vector_to_physical(field);
    let dims = [grid.n(); 3];
    [
        PhysicalField { dims, data: a },
        PhysicalField { dims, data: b },
        PhysicalField { dims, data: c },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn random_real(g: GridSpec, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn cosine_has_two_half_modes() {
        let g = grid(8);
        let f = PhysicalField::from_fn(g, |x| x[0].cos());
        let fft = Fft3::new(g);
        let s = fft.to_spectral(f.data());
        for idx in 0..g.len() {
            let k = g.mode(idx);
            let expect = if k == [1, 0, 0] || k == [-1, 0, 0] { 0.5 } else { 0.0 };
            assert!((s.coeffs()[idx] - Complex64::new(expect, 0.0)).norm() < 1e-15, "{k:?}");
        }
    }

    #[test]
    fn constant_maps_to_zero_mode() {
        let g = grid(8);
        let fft = Fft3::new(g);
        let s = fft.to_spectral(&vec![1.0; g.len()]);
        assert!((s.coeff([0, 0, 0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let rest: f64 = s.coeffs()[1..].iter().map(|z| z.norm()).sum();
        assert!(rest < 1e-13);
    }

    #[test]
    fn round_trip_random() {
        let g = grid(16);
        let fft = Fft3::new(g);
        let data = random_real(g, 7);
        let back = fft.to_physical(&fft.to_spectral(&data));
        let err = data.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = data.iter().map(|a| a.abs()).fold(0.0, f64::max);
        assert!(err / scale < 1e-12, "{err}");
    }

    #[test]
    fn paired_transforms_match_single() {
        let g = grid(8);
        let fft = Fft3::new(g);
        let a = random_real(g, 1);
        let b = random_real(g, 2);
        let (sa, sb) = fft.to_spectral_pair(&a, &b);
        let ra = fft.to_spectral(&a);
        let rb = fft.to_spectral(&b);
        for i in 0..g.len() {
            assert!((sa.coeffs()[i] - ra.coeffs()[i]).norm() < 1e-14);
            assert!((sb.coeffs()[i] - rb.coeffs()[i]).norm() < 1e-14);
        }
        let (pa, pb) = fft.to_physical_pair(&ra, &rb);
        for i in 0..g.len() {
            assert!((pa[i] - a[i]).abs() < 1e-12);
            assert!((pb[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = grid(8);
        let bad = PhysicalField::new([8, 8, 4], vec![0.0; 256]).unwrap();
        let ok = PhysicalField::from_fn(g, |_| 0.0);
        let err = forward_transform(&[ok.clone(), bad, ok], g).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
