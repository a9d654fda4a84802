//! Diophantine condition checks for a background vector α and truncated-lattice
//! estimates of the constant in `‖f‖_{Hˢ} ≤ C ‖α·∇f‖_{H^{s+r}}`.

use log::warn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::norms::sobolev_norm_scalar;
use crate::spectral::{apply_diff_op, DiffOp, Field, GridSpec, SpectralScalarField};
use crate::state::is_half_lattice_rep;

/// `|α·k|` below this counts as an exact zero.
pub const DEGENERACY_THRESHOLD: f64 = 1e-14;
pub const MAX_SEARCH_RADIUS: i64 = 512;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiophantineReport {
    pub alpha: [f64; 3],
    pub r: f64,
    pub k_max: i64,
    /// `min |α·k| |k|^r` over `0 < |k|∞ ≤ k_max`; zero when degenerate.
    pub c_est: f64,
    pub argmin_k: [i64; 3],
    pub degenerate: bool,
}

/// Axis offsets in scan order `0, 1, −1, 2, −2, …`.
fn scan_order(k_max: i64) -> impl Iterator<Item = i64> + Clone {
    (0..=2 * k_max).map(|i| if i % 2 == 1 { (i + 1) / 2 } else { -(i / 2) })
}

/// The default badly-approximable background vector scaled to
/// `|α|² = 0.81 χ`: `0.9 √χ (1, √2, √3) / ‖(1, √2, √3)‖`.
pub fn default_alpha(chi: f64) -> [f64; 3] {
    let dir = [1.0, 2f64.sqrt(), 3f64.sqrt()];
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = 0.9 * chi.sqrt() / norm;
    dir.map(|x| x * scale)
}

/// Exhaustive scan of the half lattice `0 < |k|∞ ≤ k_max`.
///
/// Planes are visited `k₃ = 0, 1, −1, 2, …`, rows and entries likewise, and
/// only the representative of each `±k` pair (first nonzero component
/// positive) is evaluated. Ties keep the first vector met; a degenerate
/// vector stops the scan.
pub fn check_diophantine(alpha: [f64; 3], r: f64, k_max: i64) -> Result<DiophantineReport> {
    if !(1..=MAX_SEARCH_RADIUS).contains(&k_max) {
        return Err(Error::Usage(format!(
            "k_max must lie in [1, {MAX_SEARCH_RADIUS}], got {k_max}"
        )));
    }
    if alpha.iter().any(|a| !a.is_finite()) || !r.is_finite() {
        return Err(Error::Usage("alpha and r must be finite".into()));
    }
    if r <= 2.0 {
        warn!("Diophantine exponent r = {r} <= 2; the stability result assumes r > 2");
    }
    let mut report = DiophantineReport {
        alpha,
        r,
        k_max,
        c_est: f64::INFINITY,
        argmin_k: [1, 0, 0],
        degenerate: false,
    };
    if alpha.iter().all(|&a| a == 0.0) {
        report.c_est = 0.0;
        report.degenerate = true;
        return Ok(report);
    }
    let half_r = 0.5 * r;
    for k3 in scan_order(k_max) {
        for k2 in scan_order(k_max) {
            for k1 in scan_order(k_max) {
                let k = [k1, k2, k3];
                if !is_half_lattice_rep(k) {
                    continue;
                }
                let dot = (alpha[0] * k1 as f64 + alpha[1] * k2 as f64 + alpha[2] * k3 as f64).abs();
                if dot < DEGENERACY_THRESHOLD {
                    report.c_est = 0.0;
                    report.argmin_k = k;
                    report.degenerate = true;
                    return Ok(report);
                }
                let k2n = (k1 * k1 + k2 * k2 + k3 * k3) as f64;
                let value = dot * k2n.powf(half_r);
                if value < report.c_est {
                    report.c_est = value;
                    report.argmin_k = k;
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaReport {
    pub s: f64,
    pub r: f64,
    /// Radius of the retained lattice the estimate applies to.
    pub k_max: i64,
    pub trials: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// `max_k (1+|k|²)^{s/2} / (|α·k| (1+|k|²)^{(s+r)/2})` over retained modes.
    pub mode_bound: f64,
    pub mode_argmax: [i64; 3],
}

/// `‖f‖_{Hˢ} / ‖α·∇f‖_{H^{s+r}}`.
pub fn lifting_ratio(alpha: [f64; 3], f: &SpectralScalarField, s: f64, r: f64) -> Result<f64> {
    let num = sobolev_norm_scalar(f, s, false)?;
    let Field::Scalar(af) = apply_diff_op(&Field::Scalar(f.clone()), DiffOp::AlphaDotGrad(alpha))?
    else {
        unreachable!("alpha_dot_grad preserves rank")
    };
    let den = sobolev_norm_scalar(&af, s + r, false)?;
    Ok(num / den)
}

/// Sharp per-mode constant of the lifting inequality on the retained lattice.
pub fn mode_bound(alpha: [f64; 3], s: f64, r: f64, grid: GridSpec) -> (f64, [i64; 3]) {
    let mut best = (0.0, [0, 0, 0]);
    for idx in 0..grid.len() {
        let k = grid.mode(idx);
        if !grid.is_retained(idx) || !is_half_lattice_rep(k) {
            continue;
        }
        let k2 = grid.k_squared(idx);
        let dot = (alpha[0] * k[0] as f64 + alpha[1] * k[1] as f64 + alpha[2] * k[2] as f64).abs();
        let value = (1.0 + k2).powf(0.5 * s) / (dot * (1.0 + k2).powf(0.5 * (s + r)));
        if value > best.0 {
            best = (value, k);
        }
    }
    best
}

/// Random mean-zero band-limited real field: uniform amplitudes in `[0, 1)`
/// and uniform phases on the retained half lattice.
pub fn random_band_limited_scalar(grid: GridSpec, rng: &mut impl Rng) -> SpectralScalarField {
    let mut f = SpectralScalarField::zeros(grid);
    for idx in 0..grid.len() {
        if !grid.is_retained(idx) || !is_half_lattice_rep(grid.mode(idx)) {
            continue;
        }
        let amp: f64 = rng.random();
        let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let z = Complex64::from_polar(amp, phase);
        let c = f.coeffs_mut();
        c[idx] = z;
        c[grid.conj_index(idx)] = z.conj();
    }
    f
}

/// Empirical lifting ratios over `trials` random fields on `grid`, with the
/// closed-form per-mode maximum for comparison.
pub fn lemma_ratio(
    alpha: [f64; 3],
    s: f64,
    r: f64,
    grid: GridSpec,
    trials: usize,
    seed: u64,
) -> Result<LemmaReport> {
    if trials == 0 {
        return Err(Error::Usage("lemma_ratio needs at least one trial".into()));
    }
    let k_max = grid.kmax_dealias();
    let check = check_diophantine(alpha, r, k_max)?;
    if check.degenerate {
        let k = check.argmin_k;
        return Err(Error::Validation(format!(
            "alpha is degenerate on the retained lattice: null vector ({}, {}, {})",
            k[0], k[1], k[2]
        )));
    }
    let (bound, argmax) = mode_bound(alpha, s, r, grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut sum = 0.0;
    for _ in 0..trials {
        let f = random_band_limited_scalar(grid, &mut rng);
        let rho = lifting_ratio(alpha, &f, s, r)?;
        max_ratio = max_ratio.max(rho);
        sum += rho;
    }
    Ok(LemmaReport {
        s,
        r,
        k_max,
        trials,
        max_ratio,
        mean_ratio: sum / trials as f64,
        mode_bound: bound,
        mode_argmax: argmax,
    })
}
