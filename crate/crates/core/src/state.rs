//! Physical parameters, system variants, solution state and random initial data.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::norms::sobolev_norm;
use crate::spectral::{leray_project, GridSpec, SpectralVectorField};

/// Coefficients of the magneto-micropolar system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysParams {
    /// Kinematic viscosity μ.
    pub mu: f64,
    /// Micro-rotation viscosity χ.
    pub chi: f64,
    /// Angular viscosity κ (multiplies `∇∇·ω`).
    pub kappa: f64,
    /// Angular viscosity η (multiplies `Δω`).
    pub eta: f64,
    /// Magnetic diffusivity ν.
    pub nu: f64,
    /// Constant background magnetic field; only the perturbation system uses it.
    pub alpha: [f64; 3],
    /// Diophantine exponent of `alpha`.
    pub r: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams {
            mu: 0.0,
            chi: 1.0,
            kappa: 0.0,
            eta: 1.0,
            nu: 1.0,
            alpha: [0.0; 3],
            r: 2.5,
        }
    }
}

impl PhysParams {
    pub fn alpha_norm_sq(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum()
    }

    /// Copy with every coefficient the variant does not carry set to zero.
    pub fn restricted_to(&self, variant: SystemVariant) -> PhysParams {
        let mut p = *self;
        if !variant.has_kinematic_viscosity() {
            p.mu = 0.0;
        }
        if !variant.has_microrotation_coupling() {
            p.chi = 0.0;
        }
        if !variant.has_magnetic_diffusion() {
            p.nu = 0.0;
        }
        if !variant.has_background_field() {
            p.alpha = [0.0; 3];
        }
        p
    }

    /// Coefficients the variant forbids but `self` sets nonzero, as `(name, value)`.
    pub(crate) fn forbidden_for(&self, variant: SystemVariant) -> Vec<(&'static str, f64)> {
        let mut out = Vec::new();
        if !variant.has_kinematic_viscosity() && self.mu != 0.0 {
            out.push(("mu", self.mu));
        }
        if !variant.has_microrotation_coupling() && self.chi != 0.0 {
            out.push(("chi", self.chi));
        }
        if !variant.has_magnetic_diffusion() && self.nu != 0.0 {
            out.push(("nu", self.nu));
        }
        out
    }
}

/// Which equations evolve the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SystemVariant {
    /// All dissipation present.
    Full,
    /// μ = 0.
    ZeroKinematic,
    /// μ = 0, ν = 0, no background field.
    ZeroKinematicZeroDiffusion,
    /// μ = 0, ν = 0, perturbation `B = b − α` of a constant background field.
    Perturbation,
    /// χ = 0, μ = 0: velocity decouples from ω.
    InviscidResistiveMHD,
    /// χ = 0, μ = 0, ν = 0.
    IdealMHD,
}

impl SystemVariant {
    pub const ALL: [SystemVariant; 6] = [
        SystemVariant::Full,
        SystemVariant::ZeroKinematic,
        SystemVariant::ZeroKinematicZeroDiffusion,
        SystemVariant::Perturbation,
        SystemVariant::InviscidResistiveMHD,
        SystemVariant::IdealMHD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemVariant::Full => "full",
            SystemVariant::ZeroKinematic => "zero-kinematic",
            SystemVariant::ZeroKinematicZeroDiffusion => "zero-kinematic-zero-diffusion",
            SystemVariant::Perturbation => "perturbation",
            SystemVariant::InviscidResistiveMHD => "inviscid-resistive-mhd",
            SystemVariant::IdealMHD => "ideal-mhd",
        }
    }

    /// Stable numeric id used in checkpoints.
    pub fn id(self) -> u32 {
        match self {
            SystemVariant::Full => 0,
            SystemVariant::ZeroKinematic => 1,
            SystemVariant::ZeroKinematicZeroDiffusion => 2,
            SystemVariant::Perturbation => 3,
            SystemVariant::InviscidResistiveMHD => 4,
            SystemVariant::IdealMHD => 5,
        }
    }

    pub fn from_id(id: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.id() == id)
    }

    pub fn has_kinematic_viscosity(self) -> bool {
        self == SystemVariant::Full
    }

    pub fn has_microrotation_coupling(self) -> bool {
        !matches!(
            self,
            SystemVariant::InviscidResistiveMHD | SystemVariant::IdealMHD
        )
    }

    pub fn has_magnetic_diffusion(self) -> bool {
        matches!(
            self,
            SystemVariant::Full | SystemVariant::ZeroKinematic | SystemVariant::InviscidResistiveMHD
        )
    }

    pub fn has_background_field(self) -> bool {
        self == SystemVariant::Perturbation
    }
}

impl fmt::Display for SystemVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|v| v.name()).collect();
                Error::Config(format!("unknown system '{s}', expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<Vec<String>> {
        if self.errors.is_empty() {
            Ok(self.warnings)
        } else {
            Err(Error::Validation(self.errors.join("; ")))
        }
    }
}

pub const OPEN_REGIME_WARNING: &str = "open problem regime, no stability guarantee";

/// Checks `p` against the hypotheses of the stability result for `variant`.
///
/// In permissive mode every hypothesis violation becomes a warning; negative
/// or non-finite coefficients are rejected in both modes.
pub fn validate_params(p: &PhysParams, variant: SystemVariant, strict: bool) -> ValidationReport {
    let mut report = ValidationReport::default();
    let violation = |report: &mut ValidationReport, msg: String| {
        if strict {
            report.errors.push(msg);
        } else {
            report.warnings.push(msg);
        }
    };

    for (name, value) in [
        ("mu", p.mu),
        ("chi", p.chi),
        ("kappa", p.kappa),
        ("eta", p.eta),
        ("nu", p.nu),
    ] {
        if !value.is_finite() || value < 0.0 {
            report
                .errors
                .push(format!("{name} must be finite and non-negative, got {value}"));
        }
    }
    if p.alpha.iter().any(|a| !a.is_finite()) || !p.r.is_finite() {
        report.errors.push("alpha and r must be finite".into());
    }
    if !report.errors.is_empty() {
        return report;
    }

    for (name, value) in p.forbidden_for(variant) {
        violation(
            &mut report,
            format!("system {variant} requires {name} = 0, got {value}"),
        );
    }

    match variant {
        SystemVariant::ZeroKinematic => {
            for (name, value) in [("chi", p.chi), ("eta", p.eta), ("nu", p.nu)] {
                if value <= 0.0 {
                    violation(
                        &mut report,
                        format!("{name} > 0 required (chi>0, eta>0, nu>0), got {name} = {value}"),
                    );
                }
            }
        }
        SystemVariant::Perturbation => {
            let a2 = p.alpha_norm_sq();
            if a2 >= p.chi {
                violation(
                    &mut report,
                    format!("|α|² = {a2} ≥ χ = {} violates |α|²<χ<2", p.chi),
                );
            }
            if p.chi >= 2.0 {
                violation(&mut report, format!("χ = {} ≥ 2 violates |α|²<χ<2", p.chi));
            }
            if p.eta <= 0.0 {
                violation(&mut report, format!("eta > 0 required, got {}", p.eta));
            }
            if p.r <= 2.0 {
                violation(&mut report, format!("Diophantine exponent r > 2 required, got {}", p.r));
            }
        }
        SystemVariant::InviscidResistiveMHD | SystemVariant::IdealMHD => {
            report.warnings.push(OPEN_REGIME_WARNING.into());
        }
        SystemVariant::Full | SystemVariant::ZeroKinematicZeroDiffusion => {}
    }
    report
}

/// Velocity, micro-rotation and magnetic field at time `t`.
///
/// `magnetic` holds `b` for every variant except the perturbation system,
/// where it holds `B = b − α`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: SpectralVectorField,
    pub omega: SpectralVectorField,
    pub magnetic: SpectralVectorField,
    pub t: f64,
}

impl State {
    pub fn zeros(grid: GridSpec) -> Self {
        State {
            u: SpectralVectorField::zeros(grid),
            omega: SpectralVectorField::zeros(grid),
            magnetic: SpectralVectorField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.u.grid()
    }

    pub fn fields(&self) -> [&SpectralVectorField; 3] {
        [&self.u, &self.omega, &self.magnetic]
    }

    pub fn fields_mut(&mut self) -> [&mut SpectralVectorField; 3] {
        [&mut self.u, &mut self.omega, &mut self.magnetic]
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|f| f.is_finite())
    }

    pub(crate) fn check_grids(&self) -> Result<()> {
        let g = self.u.grid();
        if self.omega.grid() != g || self.magnetic.grid() != g {
            return Err(Error::Usage("state fields live on different grids".into()));
        }
        Ok(())
    }
}

/// Parameters of the random initial-data generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitSpec {
    /// Target `H^s` norm of each field.
    pub epsilon: f64,
    pub sobolev_index: f64,
    /// Power-law exponent `a` of the spectral envelope `|k|^{-a}`.
    pub spectrum_slope: f64,
    /// Gaussian cutoff scale of the envelope.
    pub k_peak: f64,
    pub seed: u64,
}

impl InitSpec {
    /// Defaults for `grid`: slope 2, `k_peak = n/6`.
    pub fn with_defaults(grid: GridSpec, epsilon: f64, sobolev_index: f64, seed: u64) -> Self {
        InitSpec {
            epsilon,
            sobolev_index,
            spectrum_slope: 2.0,
            k_peak: grid.n() as f64 / 6.0,
            seed,
        }
    }

    pub fn validate(&self, grid: GridSpec) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "init.epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.spectrum_slope.is_finite() && self.spectrum_slope >= 0.0) {
            return Err(Error::Config(format!(
                "init.spectrum_slope must be >= 0, got {}",
                self.spectrum_slope
            )));
        }
        if !(self.k_peak.is_finite() && self.k_peak > 0.0) {
            return Err(Error::Config(format!("init.k_peak must be > 0, got {}", self.k_peak)));
        }
        let cutoff = grid.kmax_dealias() as f64;
        if self.k_peak > cutoff {
            return Err(Error::Config(format!(
                "init.k_peak = {} exceeds the dealiasing cutoff {cutoff}",
                self.k_peak
            )));
        }
        if !(-10.0..=40.0).contains(&self.sobolev_index) {
            return Err(Error::Config(format!(
                "init.sobolev_index = {} outside [-10, 40]",
                self.sobolev_index
            )));
        }
        Ok(())
    }
}

/// True when `k` is the representative of `{k, −k}` (first nonzero component positive).
pub(crate) fn is_half_lattice_rep(k: [i64; 3]) -> bool {
    match k.iter().find(|&&c| c != 0) {
        Some(&c) => c > 0,
        None => false,
    }
}

/// Random Hermitian field with envelope `|k|^{-a} exp(−|k|²/k_peak²)` on the
/// retained modes, uniform phases and zero mean.
fn envelope_field(grid: GridSpec, init: &InitSpec, rng: &mut ChaCha8Rng) -> SpectralVectorField {
    let mut f = SpectralVectorField::zeros(grid);
    let kp2 = init.k_peak * init.k_peak;
    for idx in 0..grid.len() {
        let k = grid.mode(idx);
        if !grid.is_retained(idx) || !is_half_lattice_rep(k) {
            continue;
        }
        let k2 = grid.k_squared(idx);
        let amp = k2.powf(-0.5 * init.spectrum_slope) * (-k2 / kp2).exp();
        let mut v = [Complex64::default(); 3];
        for z in &mut v {
            let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            *z = Complex64::from_polar(amp, phase);
        }
        f.set_at(idx, v);
        f.set_at(grid.conj_index(idx), [v[0].conj(), v[1].conj(), v[2].conj()]);
    }
    f
}

/// Scales `f` so that `‖f‖_{Hˢ} = target`.
pub fn rescale_to_norm(f: &SpectralVectorField, s: f64, target: f64) -> Result<SpectralVectorField> {
    if !(target.is_finite() && target >= 0.0) {
        return Err(Error::Usage(format!("rescale target must be >= 0, got {target}")));
    }
    let current = sobolev_norm(f, s, false)?;
    if current == 0.0 {
        if target == 0.0 {
            return Ok(f.clone());
        }
        return Err(Error::Usage(
            "cannot rescale the zero field to a positive norm".into(),
        ));
    }
    if current == target {
        return Ok(f.clone());
    }
    Ok(f.scaled(target / current))
}

/// Builds a reproducible random initial state satisfying the solenoidal and
/// mean-zero constraints, with each field normalized to `init.epsilon` in
/// `H^{init.sobolev_index}`.
///
/// The generator is ChaCha8 seeded with `init.seed`; phases are drawn for
/// `u`, then `ω`, then the magnetic field, each over the half lattice in
/// flat-index order, three components per mode.
pub fn make_random_state(grid: GridSpec, init: &InitSpec, _variant: SystemVariant) -> Result<State> {
    init.validate(grid)?;
    let mut state = State::zeros(grid);
    if init.epsilon == 0.0 {
        return Ok(state);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
    let u = leray_project(&envelope_field(grid, init, &mut rng));
    let omega = envelope_field(grid, init, &mut rng);
    let magnetic = leray_project(&envelope_field(grid, init, &mut rng));
    state.u = rescale_to_norm(&u, init.sobolev_index, init.epsilon)?;
    state.omega = rescale_to_norm(&omega, init.sobolev_index, init.epsilon)?;
    state.magnetic = rescale_to_norm(&magnetic, init.sobolev_index, init.epsilon)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kinematic_hypotheses_accepted() {
        let p = PhysParams {
            chi: 1.0,
            eta: 1.0,
            nu: 1.0,
            ..PhysParams::default()
        };
        let r = validate_params(&p, SystemVariant::ZeroKinematic, true);
        assert!(r.is_accepted(), "{r:?}");
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn structure_condition_enforced() {
        let p = PhysParams {
            chi: 1.0,
            nu: 0.0,
            alpha: [1.0, 1.0, 1.0],
            ..PhysParams::default()
        };
        let r = validate_params(&p, SystemVariant::Perturbation, true);
        assert!(!r.is_accepted());
        assert!(r.errors[0].contains("|α|²<χ<2"), "{:?}", r.errors);
        assert!(r.errors[0].contains("|α|² = 3"));

        let permissive = validate_params(&p, SystemVariant::Perturbation, false);
        assert!(permissive.is_accepted());
        assert!(!permissive.warnings.is_empty());
    }

    #[test]
    fn mhd_regime_only_warns() {
        let p = PhysParams {
            chi: 0.0,
            ..PhysParams::default()
        };
        let r = validate_params(&p, SystemVariant::InviscidResistiveMHD, true);
        assert!(r.is_accepted());
        assert_eq!(r.warnings, vec![OPEN_REGIME_WARNING.to_string()]);
    }

    #[test]
    fn forbidden_coefficient_rejected_in_strict_mode() {
        let p = PhysParams {
            chi: 0.0,
            nu: 0.5,
            ..PhysParams::default()
        };
        let r = validate_params(&p, SystemVariant::IdealMHD, true);
        assert!(r.errors.iter().any(|e| e.contains("nu = 0")));
        assert!(validate_params(&p, SystemVariant::IdealMHD, false).is_accepted());
    }

    #[test]
    fn negative_coefficient_always_rejected() {
        let p = PhysParams {
            kappa: -1.0,
            ..PhysParams::default()
        };
        assert!(!validate_params(&p, SystemVariant::Full, false).is_accepted());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in SystemVariant::ALL {
            assert_eq!(v.name().parse::<SystemVariant>().unwrap(), v);
            assert_eq!(SystemVariant::from_id(v.id()), Some(v));
        }
        assert!("mhd".parse::<SystemVariant>().is_err());
    }

    #[test]
    fn zero_epsilon_gives_zero_state() {
        let g = GridSpec::new(8).unwrap();
        let init = InitSpec::with_defaults(g, 0.0, 3.0, 1);
        let s = make_random_state(g, &init, SystemVariant::ZeroKinematic).unwrap();
        assert!(s.fields().iter().all(|f| f.is_zero()));
    }

    #[test]
    fn k_peak_beyond_cutoff_rejected() {
        let g = GridSpec::new(16).unwrap();
        let mut init = InitSpec::with_defaults(g, 0.01, 3.0, 1);
        init.k_peak = 6.0;
        assert!(make_random_state(g, &init, SystemVariant::Full).is_err());
    }

    #[test]
    fn random_state_properties() {
        let g = GridSpec::new(16).unwrap();
        let init = InitSpec::with_defaults(g, 0.01, 3.0, 42);
        let a = make_random_state(g, &init, SystemVariant::ZeroKinematic).unwrap();
        let b = make_random_state(g, &init, SystemVariant::ZeroKinematic).unwrap();
        assert_eq!(a, b);
        for f in a.fields() {
            let h3 = sobolev_norm(f, 3.0, false).unwrap();
            assert!((h3 - 0.01).abs() / 0.01 < 1e-10);
            assert_eq!(f.coeff([0, 0, 0]), [Complex64::default(); 3]);
            assert!(f.hermitian_defect() == 0.0);
        }
        assert!(a.u.divergence_residual() <= 1e-12);
        assert!(a.magnetic.divergence_residual() <= 1e-12);
        assert!(a.omega.divergence_residual() > 1e-3);
    }

    #[test]
    fn rescale_examples() {
        let g = GridSpec::new(8).unwrap();
        let init = InitSpec::with_defaults(g, 2.0, 3.0, 3);
        let s = make_random_state(g, &init, SystemVariant::Full).unwrap();
        let half = rescale_to_norm(&s.u, 3.0, 1.0).unwrap();
        for idx in 0..g.len() {
            for c in 0..3 {
                let want = s.u.at(idx)[c] * 0.5;
                assert!((half.at(idx)[c] - want).norm() <= 1e-15 * want.norm().max(1e-300));
            }
        }
        let same = rescale_to_norm(&s.u, 3.0, 2.0).unwrap();
        let diff = (0..g.len())
            .flat_map(|i| (0..3).map(move |c| (i, c)))
            .map(|(i, c)| (same.at(i)[c] - s.u.at(i)[c]).norm())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-14);

        let scaled = rescale_to_norm(&s.omega, 4.5, 0.01).unwrap();
        assert!((sobolev_norm(&scaled, 4.5, false).unwrap() - 0.01).abs() <= 1e-12);

        let zero = SpectralVectorField::zeros(g);
        assert!(rescale_to_norm(&zero, 3.0, 1.0).is_err());
        assert!(rescale_to_norm(&zero, 3.0, 0.0).unwrap().is_zero());
    }
}
