//! Right-hand side of every system variant, split into the stiff
//! mode-diagonal part and the explicitly integrated remainder.
//!
//! Pressure never appears: the velocity and magnetic tendencies are
//! Leray-projected.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    self, curl, grad_div, inner, Fft3, GridSpec, SpectralVectorField,
};
use crate::spectral::ops::{
    advect_physical, dealias_in_place, gradient_tensor, leray_project_in_place,
};
use crate::state::{PhysParams, State, SystemVariant};

/// Time derivative of the three fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Tendency {
    pub u: SpectralVectorField,
    pub omega: SpectralVectorField,
    pub magnetic: SpectralVectorField,
}

impl Tendency {
    pub fn zeros(grid: GridSpec) -> Self {
        Tendency {
            u: SpectralVectorField::zeros(grid),
            omega: SpectralVectorField::zeros(grid),
            magnetic: SpectralVectorField::zeros(grid),
        }
    }

    pub fn fields(&self) -> [&SpectralVectorField; 3] {
        [&self.u, &self.omega, &self.magnetic]
    }

    pub(crate) fn fields_mut(&mut self) -> [&mut SpectralVectorField; 3] {
        [&mut self.u, &mut self.omega, &mut self.magnetic]
    }

    /// Componentwise sum `self + other`.
    pub fn sum(&self, other: &Tendency) -> Tendency {
        let mut out = self.clone();
        for (a, b) in out.fields_mut().into_iter().zip(other.fields()) {
            a.axpy(1.0, b);
        }
        out
    }
}

/// The RHS of the selected variant as `stiff + explicit`.
///
/// `stiff` holds `−Λ(k)` applied to the state: `(μ+χ)|k|²` on `u`,
/// `η|k|² + 4χ` plus the `κ∇∇·` part on `ω`, and `ν|k|²` on the magnetic
/// field. Everything else lives in `explicit`.
#[derive(Clone, Debug, PartialEq)]
pub struct RhsDecomposition {
    pub stiff: Tendency,
    pub explicit: Tendency,
}

impl RhsDecomposition {
    pub fn total(&self) -> Tendency {
        self.stiff.sum(&self.explicit)
    }
}

/// Discrete energy bookkeeping for one state.
///
/// The first six entries vanish for the continuous system; the pseudo-spectral
/// discretization must reproduce that to round-off.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyAudit {
    /// `⟨(u·∇)u, u⟩`
    pub advect_u: f64,
    /// `⟨(u·∇)ω, ω⟩`
    pub advect_omega: f64,
    /// `⟨(u·∇)B, B⟩`
    pub advect_magnetic: f64,
    /// `⟨(B·∇)B, u⟩` and `⟨(B·∇)u, B⟩`.
    pub lorentz_parts: [f64; 2],
    /// `⟨α·∇B, u⟩` and `⟨α·∇u, B⟩`.
    pub alpha_parts: [f64; 2],
    /// `⟨∇×(∇∇·ω), ∇×ω⟩`
    pub curl_grad_div: f64,
    /// `4χ⟨∇×u, ω⟩`
    pub coupling_transfer: f64,
    /// `(μ+χ)‖∇u‖² + 4χ‖ω‖² + κ‖∇·ω‖² + η‖∇ω‖² + ν‖∇B‖²`
    pub dissipation: f64,
    /// `‖(u, ω, B)‖²_{L²}`
    pub energy_scale: f64,
}

impl EnergyAudit {
    pub fn lorentz_sum(&self) -> f64 {
        self.lorentz_parts[0] + self.lorentz_parts[1]
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alpha_parts[0] + self.alpha_parts[1]
    }

    /// Worst required cancellation, relative to `‖state‖²_{L²}`.
    pub fn max_residual(&self) -> f64 {
        if self.energy_scale == 0.0 {
            return 0.0;
        }
        [
            self.advect_u,
            self.advect_omega,
            self.advect_magnetic,
            self.lorentz_sum(),
            self.alpha_sum(),
            self.curl_grad_div,
        ]
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
            / self.energy_scale
    }

    /// `d/dt ½‖(u, ω, B)‖²` predicted by the linear terms.
    pub fn energy_rate(&self) -> f64 {
        self.coupling_transfer - self.dissipation
    }

    pub fn has_defect(&self, tolerance: f64) -> bool {
        self.max_residual() > tolerance
    }
}

/// Per-mode stiff decay rates of the three fields.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StiffSymbols {
    pub u: f64,
    pub omega_perp: f64,
    pub omega_par: f64,
    pub magnetic: f64,
}

/// A system variant bound to a grid and coefficient set.
#[derive(Clone, Debug)]
pub struct Model {
    grid: GridSpec,
    fft: Fft3,
    params: PhysParams,
    variant: SystemVariant,
    nonlinear: bool,
}

impl Model {
    /// Fails if `params` sets a coefficient the variant does not carry.
    pub fn new(grid: GridSpec, params: PhysParams, variant: SystemVariant) -> Result<Self> {
        let forbidden = params.forbidden_for(variant);
        if let Some((name, value)) = forbidden.first() {
            return Err(Error::Validation(format!(
                "system {variant} requires {name} = 0, got {value}"
            )));
        }
        Ok(Model {
            grid,
            fft: Fft3::new(grid),
            params: params.restricted_to(variant),
            variant,
            nonlinear: true,
        })
    }

    /// Same model with every quadratic term removed.
    pub fn linearized(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn variant(&self) -> SystemVariant {
        self.variant
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }

    pub(crate) fn symbols(&self, k2: f64, kd2: f64) -> StiffSymbols {
        let p = &self.params;
        let omega_perp = p.eta * k2 + 4.0 * p.chi;
        StiffSymbols {
            u: (p.mu + p.chi) * k2,
            omega_perp,
            omega_par: omega_perp + p.kappa * kd2,
            magnetic: p.nu * k2,
        }
    }

    fn check_state(&self, state: &State) -> Result<()> {
        state.check_grids()?;
        if state.grid() != self.grid {
            return Err(Error::Usage(format!(
                "state grid n={} does not match model grid n={}",
                state.grid().n(),
                self.grid.n()
            )));
        }
        Ok(())
    }

    pub fn rhs(&self, state: &State) -> Result<RhsDecomposition> {
        self.check_state(state)?;
        Ok(RhsDecomposition {
            stiff: self.stiff_part(state),
            explicit: self.explicit_part(state),
        })
    }

    /// `−Λ(k)` applied to each field.
    pub fn stiff_part(&self, state: &State) -> Tendency {
        let g = self.grid;
        let mut out = Tendency::zeros(g);
        for idx in 0..g.len() {
            let k = g.deriv_wavevector(idx);
            let kd2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let sym = self.symbols(g.k_squared(idx), kd2);

            let u = state.u.at(idx);
            out.u.set_at(idx, u.map(|z| z * -sym.u));

            let b = state.magnetic.at(idx);
            out.magnetic.set_at(idx, b.map(|z| z * -sym.magnetic));

            let w = state.omega.at(idx);
            let d = w[0] * k[0] + w[1] * k[1] + w[2] * k[2];
            let mut o = w.map(|z| z * -sym.omega_perp);
            for c in 0..3 {
                o[c] -= d * (self.params.kappa * k[c]);
            }
            out.omega.set_at(idx, o);
        }
        out
    }

    /// Nonlinear terms, curl couplings and background transport; `u` and
    /// magnetic tendencies projected.
    pub fn explicit_part(&self, state: &State) -> Tendency {
        let g = self.grid;
        let mut out = if self.nonlinear {
            self.nonlinear_terms(state)
        } else {
            Tendency::zeros(g)
        };

        let two_chi = 2.0 * self.params.chi;
        let alpha = self.params.alpha;
        let with_alpha = alpha.iter().any(|&a| a != 0.0);
        let i = Complex64::i();
        for idx in 0..g.len() {
            let k = g.deriv_wavevector(idx);
            let (u, w, b) = (state.u.at(idx), state.omega.at(idx), state.magnetic.at(idx));
            let curl_w = cross_ik(k, w);
            let curl_u = cross_ik(k, u);
            let mut du = out.u.at(idx);
            let mut dw = out.omega.at(idx);
            let mut db = out.magnetic.at(idx);
            for c in 0..3 {
                du[c] += curl_w[c] * two_chi;
                dw[c] += curl_u[c] * two_chi;
            }
            if with_alpha {
                let s = i * (alpha[0] * k[0] + alpha[1] * k[1] + alpha[2] * k[2]);
                for c in 0..3 {
                    du[c] += s * b[c];
                    db[c] += s * u[c];
                }
            }
            out.u.set_at(idx, du);
            out.omega.set_at(idx, dw);
            out.magnetic.set_at(idx, db);
        }
        leray_project_in_place(&mut out.u);
        leray_project_in_place(&mut out.magnetic);
        out.omega.zero_mean();
        out
    }

    /// `−(u·∇)u + (B·∇)B`, `−(u·∇)ω`, `−(u·∇)B + (B·∇)u`, dealiased.
    fn nonlinear_terms(&self, state: &State) -> Tendency {
        let g = self.grid;
        let len = g.len();
        let u_zero = state.u.is_zero();
        let b_zero = state.magnetic.is_zero();
        if u_zero && b_zero {
            return Tendency::zeros(g);
        }

        // physical u, B and the gradients each product needs
        let mut spectra: Vec<&spectral::SpectralScalarField> = Vec::with_capacity(33);
        let grad_u = gradient_tensor(&state.u);
        let grad_w = gradient_tensor(&state.omega);
        let grad_b = gradient_tensor(&state.magnetic);
        spectra.extend(state.u.components());
        spectra.extend(state.magnetic.components());
        spectra.extend(&grad_u);
        spectra.extend(&grad_w);
        spectra.extend(&grad_b);
        let phys = self.fft.to_physical_many(&spectra);
        let (up, rest) = phys.split_at(3);
        let (bp, rest) = rest.split_at(3);
        let (gu, rest) = rest.split_at(9);
        let (gw, gb) = rest.split_at(9);

        let mut nu_ = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut nw = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut nb = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        for c in 0..3 {
            for j in 0..3 {
                let (uj, bj) = (&up[j], &bp[j]);
                let (gu_cj, gw_cj, gb_cj) = (&gu[3 * c + j], &gw[3 * c + j], &gb[3 * c + j]);
                for x in 0..len {
                    nu_[c][x] += bj[x] * gb_cj[x] - uj[x] * gu_cj[x];
                    nw[c][x] -= uj[x] * gw_cj[x];
                    nb[c][x] += bj[x] * gu_cj[x] - uj[x] * gb_cj[x];
                }
            }
        }
        let arrays: Vec<&[f64]> = nu_
            .iter()
            .chain(&nw)
            .chain(&nb)
            .map(|v| v.as_slice())
            .collect();
        let mut spec = self.fft.to_spectral_many(&arrays).into_iter();
        let mut next = || {
            let f = SpectralVectorField::from_components([
                spec.next().unwrap(),
                spec.next().unwrap(),
                spec.next().unwrap(),
            ])
            .unwrap();
            let mut f = f;
            dealias_in_place(&mut f);
            f
        };
        Tendency {
            u: next(),
            omega: next(),
            magnetic: next(),
        }
    }

    pub fn energy_flux_audit(&self, state: &State) -> Result<EnergyAudit> {
        self.check_state(state)?;
        let g = self.grid;
        let (u, w, b) = (&state.u, &state.omega, &state.magnetic);
        let energy_scale = inner(u, u) + inner(w, w) + inner(b, b);
        if energy_scale == 0.0 {
            return Ok(EnergyAudit::default());
        }
        let p = &self.params;

        let up = self.fft.vector_to_physical(u);
        let bp = self.fft.vector_to_physical(b);
        let advect_u = inner(&advect_physical(&self.fft, &up, u), u);
        let advect_omega = inner(&advect_physical(&self.fft, &up, w), w);
        let advect_magnetic = inner(&advect_physical(&self.fft, &up, b), b);
        let lorentz_parts = [
            inner(&advect_physical(&self.fft, &bp, b), u),
            inner(&advect_physical(&self.fft, &bp, u), b),
        ];
        let alpha_parts = [
            inner(&spectral::alpha_dot_grad(b, p.alpha), u),
            inner(&spectral::alpha_dot_grad(u, p.alpha), b),
        ];
        let curl_w = curl(w);
        let curl_grad_div = inner(&curl(&grad_div(w)), &curl_w);
        let curl_u = curl(u);
        let coupling_transfer = 4.0 * p.chi * inner(&curl_u, w);

        let grad_sq = |f: &SpectralVectorField| {
            spectral::weighted_inner(f, f, |idx| {
                let k = g.deriv_wavevector(idx);
                k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
            })
        };
        let div_w = spectral::divergence(w);
        let dissipation = (p.mu + p.chi) * grad_sq(u)
            + 4.0 * p.chi * inner(w, w)
            + p.kappa * spectral::inner_scalar(&div_w, &div_w)
            + p.eta * grad_sq(w)
            + p.nu * grad_sq(b);

        Ok(EnergyAudit {
            advect_u,
            advect_omega,
            advect_magnetic,
            lorentz_parts,
            alpha_parts,
            curl_grad_div,
            coupling_transfer,
            dissipation,
            energy_scale,
        })
    }
}

#[inline]
fn cross_ik(k: [f64; 3], x: [Complex64; 3]) -> [Complex64; 3] {
    let i = Complex64::i();
    [
        i * (x[2] * k[1] - x[1] * k[2]),
        i * (x[0] * k[2] - x[2] * k[0]),
        i * (x[1] * k[0] - x[0] * k[1]),
    ]
}

/// RHS of `variant` at `state`, split into stiff and explicit parts.
pub fn rhs(state: &State, p: &PhysParams, variant: SystemVariant) -> Result<RhsDecomposition> {
    Model::new(state.grid(), *p, variant)?.rhs(state)
}

/// Energy cancellation audit of `variant` at `state`.
pub fn energy_flux_audit(
    state: &State,
    p: &PhysParams,
    variant: SystemVariant,
) -> Result<EnergyAudit> {
    Model::new(state.grid(), p.restricted_to(variant), variant)?.energy_flux_audit(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{forward_transform, PhysicalField};
    use crate::state::{make_random_state, InitSpec};

    fn vec_field(g: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> SpectralVectorField {
        let p = [
            PhysicalField::from_fn(g, |x| f(x)[0]),
            PhysicalField::from_fn(g, |x| f(x)[1]),
            PhysicalField::from_fn(g, |x| f(x)[2]),
        ];
        forward_transform(&p, g).unwrap()
    }

    fn params() -> PhysParams {
        PhysParams {
            chi: 1.0,
            eta: 1.0,
            nu: 1.0,
            kappa: 0.5,
            ..PhysParams::default()
        }
    }

    #[test]
    fn zero_state_zero_rhs() {
        let g = GridSpec::new(8).unwrap();
        let r = rhs(&State::zeros(g), &params(), SystemVariant::ZeroKinematic).unwrap();
        assert!(r.total().fields().iter().all(|f| f.is_zero()));
    }

    #[test]
    fn omega_rhs_is_pure_coupling() {
        let g = GridSpec::new(8).unwrap();
        let mut s = State::zeros(g);
        s.u = vec_field(g, |x| [0.0, 0.0, x[0].sin()]);
        let p = params();
        let r = rhs(&s, &p, SystemVariant::ZeroKinematic).unwrap();
        let expect = curl(&s.u).scaled(2.0 * p.chi);
        let total = r.total();
        for idx in 0..g.len() {
            for c in 0..3 {
                assert!((total.omega.at(idx)[c] - expect.at(idx)[c]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn inconsistent_variant_rejected() {
        let g = GridSpec::new(8).unwrap();
        let p = PhysParams {
            chi: 0.0,
            nu: 0.3,
            ..PhysParams::default()
        };
        assert!(matches!(
            rhs(&State::zeros(g), &p, SystemVariant::IdealMHD),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn audit_zero_state() {
        let g = GridSpec::new(8).unwrap();
        let a = energy_flux_audit(&State::zeros(g), &params(), SystemVariant::ZeroKinematic).unwrap();
        assert_eq!(a, EnergyAudit::default());
    }

    #[test]
    fn audit_cancellations_random_state() {
        let g = GridSpec::new(16).unwrap();
        let init = InitSpec::with_defaults(g, 1.0, 0.0, 5);
        let s = make_random_state(g, &init, SystemVariant::Perturbation).unwrap();
        let p = PhysParams {
            nu: 0.0,
            alpha: [0.3, 0.4, 0.5],
            ..params()
        };
        let a = energy_flux_audit(&s, &p, SystemVariant::Perturbation).unwrap();
        assert!(a.lorentz_parts[0].abs() > 1e-6 * a.energy_scale);
        assert!(a.alpha_parts[0].abs() > 1e-6 * a.energy_scale);
        assert!(a.max_residual() < 1e-10, "{a:?}");
        assert!(a.energy_rate() <= 0.0);
    }
}
