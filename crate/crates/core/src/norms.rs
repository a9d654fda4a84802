//! Sobolev norms, the energy functionals monitored during a run, and decay fits.

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::spectral::{
    curl, GridSpec, SpectralScalarField, SpectralVectorField, BOX_VOLUME,
};
use crate::state::{State, SystemVariant};

/// Weight `(1+|k|²)^s`, or `|k|^{2s}` with `k = 0` dropped when homogeneous.
fn sobolev_weight_table(grid: GridSpec, s: f64, homogeneous: bool) -> Vec<f64> {
    let half = grid.n() / 2;
    let max_k2 = 3 * half * half;
    (0..=max_k2)
        .map(|k2| {
            let k2 = k2 as f64;
            if homogeneous {
                if k2 == 0.0 {
                    0.0
                } else {
                    k2.powf(s)
                }
            } else {
                (1.0 + k2).powf(s)
            }
        })
        .collect()
}

fn check_index(s: f64) -> Result<()> {
    if !(-10.0..=40.0).contains(&s) {
        return Err(Error::Usage(format!("Sobolev index {s} outside [-10, 40]")));
    }
    Ok(())
}

/// `‖f‖_{Hˢ}` with `‖f‖²_{Hˢ} = (2π)³ Σ_k (1+|k|²)ˢ |f̂(k)|²`; the homogeneous
/// variant uses `|k|^{2s}` and skips `k = 0`.
pub fn sobolev_norm(f: &SpectralVectorField, s: f64, homogeneous: bool) -> Result<f64> {
    check_index(s)?;
    if !f.is_finite() {
        return Err(Error::integrity("non-finite coefficients in Sobolev norm"));
    }
    let g = f.grid();
    let w = sobolev_weight_table(g, s, homogeneous);
    let mut acc = 0.0;
    for idx in 0..g.len() {
        let v = f.at(idx);
        let a = v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr();
        if a != 0.0 {
            acc += w[g.k_squared(idx) as usize] * a;
        }
    }
    Ok((BOX_VOLUME * acc).sqrt())
}

pub fn sobolev_norm_scalar(f: &SpectralScalarField, s: f64, homogeneous: bool) -> Result<f64> {
    check_index(s)?;
    let g = f.grid();
    let w = sobolev_weight_table(g, s, homogeneous);
    let mut acc = 0.0;
    for (idx, z) in f.coeffs().iter().enumerate() {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::integrity("non-finite coefficients in Sobolev norm"));
        }
        acc += w[g.k_squared(idx) as usize] * z.norm_sqr();
    }
    Ok((BOX_VOLUME * acc).sqrt())
}

/// `‖(f₁, f₂, f₃)‖_{Hˢ}`, the root of the summed squares.
pub fn sobolev_norm_triple(fields: [&SpectralVectorField; 3], s: f64, homogeneous: bool) -> Result<f64> {
    let mut acc = 0.0;
    for f in fields {
        let n = sobolev_norm(f, s, homogeneous)?;
        acc += n * n;
    }
    Ok(acc.sqrt())
}

/// `(2π)³ Σ_k w(|k|²) Re(â·conj b̂)` with `w` looked up by integer `|k|²`.
fn radial_inner(a: &SpectralVectorField, b: &SpectralVectorField, w: impl Fn(f64) -> f64) -> f64 {
    let g = a.grid();
    let half = g.n() / 2;
    let table: Vec<f64> = (0..=3 * half * half).map(|k2| w(k2 as f64)).collect();
    crate::spectral::weighted_inner(a, b, |idx| table[g.k_squared(idx) as usize])
}

/// `A‖(∇×u, ∇×ω, ∇×b)‖²_{Ḣ²} − ⟨∇²ω, ∇²(∇×u)⟩`.
pub fn functional_f(state: &State, a_weight: f64) -> Result<f64> {
    let (curl_energy, cross) = f_parts(state)?;
    Ok(a_weight * curl_energy - cross)
}

/// `(‖(∇×u, ∇×ω, ∇×b)‖²_{Ḣ²}, ⟨∇²ω, ∇²(∇×u)⟩)`.
pub fn f_parts(state: &State) -> Result<(f64, f64)> {
    let curl_u = curl(&state.u);
    let curl_energy = sobolev_norm_triple([&curl_u, &curl(&state.omega), &curl(&state.magnetic)], 2.0, true)?
        .powi(2);
    let cross = radial_inner(&state.omega, &curl_u, |k2| k2 * k2);
    Ok((curl_energy, cross))
}

/// Smallest `A` with `F ≥ ‖(∇×u, ∇×ω, ∇×b)‖²_{Ḣ²}` on every given state.
pub fn f_coercivity_threshold<'a>(states: impl IntoIterator<Item = &'a State>) -> Result<f64> {
    let mut a_star = f64::NEG_INFINITY;
    for s in states {
        let (energy, cross) = f_parts(s)?;
        if energy > 0.0 {
            a_star = a_star.max(1.0 + cross / energy);
        }
    }
    Ok(a_star)
}

/// Weights of the perturbation-run functionals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionalWeights {
    /// `A` in `F`.
    pub a: f64,
    /// `γ` in `E` and `D`.
    pub gamma: f64,
    /// `C₀` in `D`.
    pub c0: f64,
}

impl Default for FunctionalWeights {
    fn default() -> Self {
        FunctionalWeights {
            a: 10.0,
            gamma: 4.0,
            c0: 1.0,
        }
    }
}

/// `(E, D)` for the perturbation system.
///
/// The derivative sums run over integer orders `0..=⌊r⌋+4` and `0..=⌊r⌋+3`;
/// fractional `r` enters only through the `H^{r+5}` and `H^{r+3}` weights.
pub fn functional_e_d(model: &Model, state: &State, weights: FunctionalWeights) -> Result<(f64, f64)> {
    if model.variant() != SystemVariant::Perturbation {
        return Err(Error::Usage(format!(
            "E and D are defined for the perturbation system, not {}",
            model.variant()
        )));
    }
    let p = model.params();
    let gamma = weights.gamma;
    let s5 = p.r + 5.0;
    let s3 = p.r + 3.0;
    let top_w = p.r.floor() + 4.0;
    let top_b = p.r.floor() + 3.0;
    let deriv_sum = |k2: f64, top: f64| -> f64 {
        let mut acc = 0.0;
        let mut pow = 1.0;
        for _ in 0..=(top as usize) {
            acc += pow;
            pow *= k2;
        }
        acc
    };

    let main = sobolev_norm_triple(state.fields(), s5, false)?.powi(2);
    let curl_u = curl(&state.u);
    let cross_w = radial_inner(&state.omega, &curl_u, |k2| deriv_sum(k2, top_w));
    let alpha_b = crate::spectral::alpha_dot_grad(&state.magnetic, p.alpha);
    let cross_b = radial_inner(&state.u, &alpha_b, |k2| deriv_sum(k2, top_b));
    let e = gamma * main - cross_w - cross_b;

    let grad_w = radial_inner(&state.omega, &state.omega, |k2| k2 * (1.0 + k2).powf(s5));
    let u_norm = sobolev_norm(&state.u, s5, false)?.powi(2);
    let ab_norm = sobolev_norm(&alpha_b, s3, false)?.powi(2);
    let d = (gamma - 1.0) * p.eta * grad_w + 0.5 * weights.c0 * (u_norm + ab_norm);
    Ok((e, d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayModel {
    /// `y = C e^{−rate·t}`
    Exponential,
    /// `y = C (1+t)^{exponent}`
    Algebraic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    pub prefactor: f64,
    /// Decay rate for the exponential model, exponent for the algebraic one.
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares fit of `log y` against `t` or `log(1+t)` over samples with `t ≥ t_min`.
pub fn fit_decay(series: &[(f64, f64)], model: DecayModel, t_min: f64) -> Result<DecayFit> {
    let used: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= t_min).collect();
    if used.len() < MIN_FIT_SAMPLES {
        return Err(Error::Usage(format!(
            "decay fit needs at least {MIN_FIT_SAMPLES} samples with t >= {t_min}, got {}",
            used.len()
        )));
    }
    if let Some(&(t, y)) = used.iter().find(|&&(_, y)| !(y > 0.0 && y.is_finite())) {
        return Err(Error::Usage(format!(
            "decay fit requires positive finite samples, got y = {y} at t = {t}"
        )));
    }
    let xs: Vec<f64> = used
        .iter()
        .map(|&(t, _)| match model {
            DecayModel::Exponential => t,
            DecayModel::Algebraic => (1.0 + t).ln(),
        })
        .collect();
    let ys: Vec<f64> = used.iter().map(|&(_, y)| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Usage("decay fit needs distinct sample times".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(DecayFit {
        model,
        prefactor: intercept.exp(),
        rate: match model {
            DecayModel::Exponential => -slope,
            DecayModel::Algebraic => slope,
        },
        r_squared,
        samples: used.len(),
    })
}

/// One time sample of every monitored quantity. `None` marks quantities
/// that do not apply to the run's system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2_energy: f64,
    pub h3: f64,
    pub h_n: Option<f64>,
    pub h_r5: Option<f64>,
    pub f_func: Option<f64>,
    pub e_func: Option<f64>,
    pub d_func: Option<f64>,
    pub alpha_grad_b_hr3: Option<f64>,
    pub div_u_max: f64,
    pub div_b_max: f64,
    pub cancel_max: Option<f64>,
}

/// What to compute at each diagnostics sample.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsSettings {
    pub weights: FunctionalWeights,
    /// High Sobolev index `N` reported for perturbation runs.
    pub sobolev_n: f64,
    /// Run the energy audit (five extra advection products).
    pub audit: bool,
}

impl Default for DiagnosticsSettings {
    fn default() -> Self {
        DiagnosticsSettings {
            weights: FunctionalWeights::default(),
            sobolev_n: 21.0,
            audit: true,
        }
    }
}

pub fn sample_diagnostics(model: &Model, state: &State, settings: &DiagnosticsSettings) -> Result<DiagnosticsRecord> {
    if !state.is_finite() {
        return Err(Error::integrity("non-finite state in diagnostics"));
    }
    let l2 = sobolev_norm_triple(state.fields(), 0.0, false)?;
    let h3 = sobolev_norm_triple(state.fields(), 3.0, false)?;
    let perturbation = model.variant() == SystemVariant::Perturbation;
    let p = model.params();

    let (h_n, h_r5, e_func, d_func, alpha_grad_b_hr3) = if perturbation {
        let (e, d) = functional_e_d(model, state, settings.weights)?;
        let ab = crate::spectral::alpha_dot_grad(&state.magnetic, p.alpha);
        (
            Some(sobolev_norm_triple(state.fields(), settings.sobolev_n, false)?),
            Some(sobolev_norm_triple(state.fields(), p.r + 5.0, false)?),
            Some(e),
            Some(d),
            Some(sobolev_norm(&ab, p.r + 3.0, false)?),
        )
    } else {
        (None, None, None, None, None)
    };
    let cancel_max = if settings.audit {
        Some(model.energy_flux_audit(state)?.max_residual())
    } else {
        None
    };

    Ok(DiagnosticsRecord {
        t: state.t,
        l2_energy: 0.5 * l2 * l2,
        h3,
        h_n,
        h_r5,
        f_func: Some(functional_f(state, settings.weights.a)?),
        e_func,
        d_func,
        alpha_grad_b_hr3,
        div_u_max: state.u.divergence_residual(),
        div_b_max: state.magnetic.divergence_residual(),
        cancel_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{forward_transform, PhysicalField};
    use crate::state::{make_random_state, InitSpec, PhysParams};
    use std::f64::consts::PI;

    fn cos_field(g: GridSpec) -> SpectralVectorField {
        let p = [
            PhysicalField::from_fn(g, |x| x[0].cos()),
            PhysicalField::from_fn(g, |_| 0.0),
            PhysicalField::from_fn(g, |_| 0.0),
        ];
        forward_transform(&p, g).unwrap()
    }

    #[test]
    fn single_mode_norms() {
        let g = GridSpec::new(8).unwrap();
        let f = cos_field(g);
        let l2 = sobolev_norm(&f, 0.0, false).unwrap();
        assert!((l2 - 2.0 * PI.powf(1.5)).abs() < 1e-12);
        assert!((l2 - 11.13665).abs() < 1e-5);
        let h3 = sobolev_norm(&f, 3.0, false).unwrap();
        assert!((h3 - 4.0 * 2f64.sqrt() * PI.powf(1.5)).abs() < 1e-12);
        assert!((h3 - 31.49922).abs() < 1e-5);
    }

    #[test]
    fn index_window_enforced() {
        let g = GridSpec::new(8).unwrap();
        assert!(sobolev_norm(&SpectralVectorField::zeros(g), 41.0, false).is_err());
    }

    #[test]
    fn exponential_fit_exact() {
        let series: Vec<_> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.4;
                (t, 5.0 * (-0.3 * t).exp())
            })
            .collect();
        let fit = fit_decay(&series, DecayModel::Exponential, 0.0).unwrap();
        assert!((fit.rate - 0.3).abs() < 1e-6);
        assert!((fit.prefactor - 5.0).abs() < 1e-6);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn algebraic_fit_exact() {
        let series: Vec<_> = (0..50)
            .map(|i| {
                let t = i as f64;
                (t, 2.0 * (1.0 + t).powf(-1.5))
            })
            .collect();
        let fit = fit_decay(&series, DecayModel::Algebraic, 0.0).unwrap();
        assert!((fit.rate + 1.5).abs() < 1e-6);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn fit_rejects_bad_samples() {
        let few: Vec<_> = (0..9).map(|i| (i as f64, 1.0)).collect();
        assert!(fit_decay(&few, DecayModel::Exponential, 0.0).is_err());
        let mut bad: Vec<_> = (0..20).map(|i| (i as f64, 1.0)).collect();
        bad[15].1 = 0.0;
        assert!(fit_decay(&bad, DecayModel::Algebraic, 0.0).is_err());
        // the bad sample falls outside the window
        assert!(fit_decay(&bad[..15], DecayModel::Algebraic, 0.0).is_ok());
    }

    #[test]
    fn f_without_omega_is_curl_energy() {
        let g = GridSpec::new(16).unwrap();
        let init = InitSpec::with_defaults(g, 1.0, 0.0, 9);
        let mut s = make_random_state(g, &init, SystemVariant::ZeroKinematic).unwrap();
        s.omega = SpectralVectorField::zeros(g);
        let (energy, cross) = f_parts(&s).unwrap();
        assert_eq!(cross, 0.0);
        assert!((functional_f(&s, 10.0).unwrap() - 10.0 * energy).abs() <= 1e-12 * energy);
        assert_eq!(functional_f(&State::zeros(g), 10.0).unwrap(), 0.0);
    }

    #[test]
    fn e_d_require_perturbation() {
        let g = GridSpec::new(8).unwrap();
        let m = Model::new(g, PhysParams::default(), SystemVariant::ZeroKinematic).unwrap();
        assert!(matches!(
            functional_e_d(&m, &State::zeros(g), FunctionalWeights::default()),
            Err(Error::Usage(_))
        ));
    }
}
