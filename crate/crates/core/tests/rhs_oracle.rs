mod common;

use common::{dealiased_state, max_abs, max_abs_diff, random_state};
use mmp_core::diophantine::default_alpha;
use mmp_core::spectral::{
    advect, alpha_dot_grad, curl, grad_div, laplacian, leray_project, SpectralVectorField,
};
use mmp_core::{Model, PhysParams, State, SystemVariant, Tendency};

fn sum(terms: &[(f64, &SpectralVectorField)]) -> SpectralVectorField {
    let mut out = SpectralVectorField::zeros(terms[0].1.grid());
    for (a, f) in terms {
        out.axpy(*a, f);
    }
    out
}

/// The right-hand side assembled term by term from the public operators.
fn monolithic(s: &State, p: &PhysParams) -> Tendency {
    let (u, w, b) = (&s.u, &s.omega, &s.magnetic);
    let adv_uu = advect(u, u).unwrap();
    let adv_bb = advect(b, b).unwrap();
    let adv_uw = advect(u, w).unwrap();
    let adv_ub = advect(u, b).unwrap();
    let adv_bu = advect(b, u).unwrap();
    let (curl_u, curl_w) = (curl(u), curl(w));
    let (ab, au) = (alpha_dot_grad(b, p.alpha), alpha_dot_grad(u, p.alpha));

    let du = sum(&[
        (1.0, &leray_project(&sum(&[(-1.0, &adv_uu), (1.0, &adv_bb), (2.0 * p.chi, &curl_w), (1.0, &ab)]))),
        (p.mu + p.chi, &laplacian(u)),
    ]);
    let mut coupling = sum(&[(-1.0, &adv_uw), (2.0 * p.chi, &curl_u)]);
    coupling.zero_mean();
    let dw = sum(&[
        (1.0, &coupling),
        (-4.0 * p.chi, w),
        (p.kappa, &grad_div(w)),
        (p.eta, &laplacian(w)),
    ]);
    let db = sum(&[
        (1.0, &leray_project(&sum(&[(-1.0, &adv_ub), (1.0, &adv_bu), (1.0, &au)]))),
        (p.nu, &laplacian(b)),
    ]);
    Tendency { u: du, omega: dw, magnetic: db }
}

fn compare(s: &State, p: PhysParams, v: SystemVariant) {
    let model = Model::new(s.grid(), p, v).unwrap();
    let got = model.rhs(s).unwrap().total();
    let want = monolithic(s, model.params());
    for (name, a, b) in [
        ("u", &got.u, &want.u),
        ("omega", &got.omega, &want.omega),
        ("magnetic", &got.magnetic, &want.magnetic),
    ] {
        let err = max_abs_diff(a, b) / max_abs(b).max(1e-300);
        assert!(err <= 1e-13, "{v} {name}: relative error {err:e}");
    }
}

#[test]
fn full_system_matches_monolithic_rhs() {
    let p = PhysParams { mu: 0.7, chi: 1.3, kappa: 0.4, eta: 0.9, nu: 1.1, ..PhysParams::default() };
    compare(&random_state(16, 1, 1.0, 0.0), p, SystemVariant::Full);
}

#[test]
fn every_variant_matches_monolithic_rhs() {
    let s = random_state(16, 2, 1.0, 0.0);
    for v in SystemVariant::ALL {
        let mut p = PhysParams {
            mu: 0.5,
            chi: 1.0,
            kappa: 0.3,
            eta: 0.8,
            nu: 0.6,
            alpha: default_alpha(1.0),
            r: 2.5,
        };
        p = p.restricted_to(v);
        compare(&s, p, v);
    }
}

#[test]
fn stiff_plus_explicit_is_linear_when_linearized() {
    let s = random_state(8, 9, 1.0, 0.0);
    let p = PhysParams { chi: 1.0, kappa: 0.5, nu: 0.0, alpha: default_alpha(1.0), ..PhysParams::default() };
    let model = Model::new(s.grid(), p, SystemVariant::Perturbation).unwrap().linearized();
    let once = model.rhs(&s).unwrap().total();
    let mut doubled = s.clone();
    for f in doubled.fields_mut() {
        f.scale(2.0);
    }
    let twice = model.rhs(&doubled).unwrap().total();
    assert!(max_abs_diff(&twice.u, &once.u.scaled(2.0)) <= 1e-14 * max_abs(&twice.u));
    assert!(max_abs_diff(&twice.omega, &once.omega.scaled(2.0)) <= 1e-14 * max_abs(&twice.omega));
}

#[test]
fn energy_audit_cancellations() {
    let s = dealiased_state(32, 4, 1.0);
    let p = PhysParams { chi: 1.0, kappa: 0.5, nu: 0.0, alpha: default_alpha(1.0), ..PhysParams::default() };
    let audit = Model::new(s.grid(), p, SystemVariant::Perturbation)
        .unwrap()
        .energy_flux_audit(&s)
        .unwrap();
    assert!(audit.max_residual() <= 1e-10, "{audit:?}");
    assert!(audit.lorentz_parts[0].abs() > 1e-6 * audit.energy_scale);
}
