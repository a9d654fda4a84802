mod common;

use common::{dealiased_state, grid, max_abs, max_abs_diff, random_state};
use mmp_core::norms::sobolev_norm;
use mmp_core::spectral::{
    advect, curl, dealias, divergence, grad, inner, leray_project, Fft3, GridSpec,
    SpectralScalarField, SpectralVectorField,
};
use num_complex::Complex64;
use proptest::prelude::*;

/// Multiplies every coefficient by `e^{−ik·h}` with `h` a whole number of grid cells.
fn shift(f: &SpectralVectorField, cells: [i64; 3]) -> SpectralVectorField {
    let g = f.grid();
    let h = g.spacing();
    let mut out = f.clone();
    for c in 0..3 {
        for (idx, z) in out.component_mut(c).coeffs_mut().iter_mut().enumerate() {
            let k = g.mode(idx);
            let phase = -h * (k[0] * cells[0] + k[1] * cells[1] + k[2] * cells[2]) as f64;
            *z *= Complex64::from_polar(1.0, phase);
        }
    }
    out
}

/// Direct convolution `Σ_{p+q=k} v̂_j(p) i q_j f̂_c(q)`, kept on the retained modes.
fn advect_by_convolution(v: &SpectralVectorField, f: &SpectralVectorField) -> SpectralVectorField {
    let g = v.grid();
    let kc = g.kmax_dealias();
    let mut out = SpectralVectorField::zeros(g);
    let retained: Vec<[i64; 3]> = (0..g.len())
        .map(|i| g.mode(i))
        .filter(|k| k.iter().all(|x| x.abs() <= kc))
        .collect();
    for &p in &retained {
        let vp = v.coeff(p);
        for &q in &retained {
            let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
            if k.iter().any(|x| x.abs() > kc) {
                continue;
            }
            let fq = f.coeff(q);
            let vq: Complex64 = (0..3).map(|j| vp[j] * Complex64::new(0.0, q[j] as f64)).sum();
            for (c, &fc) in fq.iter().enumerate() {
                let z = out.component(c).coeff(k) + vq * fc;
                out.component_mut(c).set_coeff(k, z).unwrap();
            }
        }
    }
    out
}

#[test]
fn advect_matches_direct_convolution() {
    let a = dealiased_state(8, 3, 1.0);
    let fast = advect(&a.u, &a.omega).unwrap();
    let slow = advect_by_convolution(&a.u, &a.omega);
    let err = max_abs_diff(&fast, &slow) / max_abs(&slow);
    assert!(err < 1e-13, "relative error {err:e}");
}

#[test]
fn transform_round_trip_and_parseval() {
    let g = grid(16);
    let fft = Fft3::new(g);
    let s = random_state(16, 21, 1.0, 0.0);
    let phys = fft.vector_to_physical(&s.omega);
    let back = fft.vector_to_spectral([&phys[0], &phys[1], &phys[2]]);
    assert!(max_abs_diff(&back, &s.omega) <= 1e-12 * max_abs(&s.omega));
    let quad: f64 = phys.iter().flatten().map(|x| x * x).sum::<f64>() * g.spacing().powi(3);
    let l2 = sobolev_norm(&s.omega, 0.0, false).unwrap().powi(2);
    assert!((quad - l2).abs() <= 1e-12 * l2);
}

#[test]
fn vector_calculus_identities() {
    let s = random_state(16, 5, 1.0, 0.0);
    let scale = max_abs(&s.omega) * 64.0;
    assert!(max_abs(&curl(&grad(s.omega.component(1)))) <= 1e-12 * scale);
    let dc = divergence(&curl(&s.omega));
    let m = dc.coeffs().iter().fold(0.0f64, |m, z| m.max(z.norm()));
    assert!(m <= 1e-12 * scale);
    let p = leray_project(&s.omega);
    assert!(max_abs_diff(&leray_project(&p), &p) <= 1e-15 * max_abs(&p));
    assert!(p.divergence_residual() <= 1e-13);
}

fn coeffs_strategy(g: GridSpec) -> impl Strategy<Value = SpectralVectorField> {
    (any::<u64>(), 0.01f64..10.0).prop_map(move |(seed, eps)| {
        let init = mmp_core::InitSpec::with_defaults(g, eps, 1.0, seed);
        mmp_core::state::make_random_state(g, &init, mmp_core::SystemVariant::Full)
            .unwrap()
            .omega
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval_holds(f in coeffs_strategy(GridSpec::new(8).unwrap())) {
        let g = f.grid();
        let fft = Fft3::new(g);
        let phys = fft.vector_to_physical(&f);
        let quad: f64 = phys.iter().flatten().map(|x| x * x).sum::<f64>() * g.spacing().powi(3);
        let l2 = inner(&f, &f);
        prop_assert!((quad - l2).abs() <= 1e-12 * l2);
    }

    #[test]
    fn advect_is_translation_equivariant(
        seed in any::<u64>(),
        cells in prop::array::uniform3(-7i64..8),
    ) {
        let s = dealiased_state(8, seed, 1.0);
        let lhs = advect(&shift(&s.u, cells), &shift(&s.magnetic, cells)).unwrap();
        let rhs = shift(&advect(&s.u, &s.magnetic).unwrap(), cells);
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-13 * max_abs(&rhs).max(1e-300));
    }

    #[test]
    fn norm_homogeneity_and_triangle(
        a in coeffs_strategy(GridSpec::new(8).unwrap()),
        b in coeffs_strategy(GridSpec::new(8).unwrap()),
        lambda in -5.0f64..5.0,
        s in -2.0f64..6.0,
    ) {
        let na = sobolev_norm(&a, s, false).unwrap();
        let nb = sobolev_norm(&b, s, false).unwrap();
        let scaled = sobolev_norm(&a.scaled(lambda), s, false).unwrap();
        prop_assert!((scaled - lambda.abs() * na).abs() <= 1e-12 * na);
        let mut sum = a.clone();
        sum.axpy(1.0, &b);
        prop_assert!(sobolev_norm(&sum, s, false).unwrap() <= (na + nb) * (1.0 + 1e-14));
    }

    #[test]
    fn dealias_is_idempotent_projection(f in coeffs_strategy(GridSpec::new(8).unwrap())) {
        let d = dealias(&f);
        prop_assert_eq!(dealias(&d), d.clone());
        prop_assert!(inner(&d, &d) <= inner(&f, &f) * (1.0 + 1e-14));
    }
}

#[test]
fn scalar_field_shape_checked() {
    let g = grid(8);
    assert!(SpectralScalarField::from_coeffs(g, vec![Complex64::default(); 7]).is_err());
}
