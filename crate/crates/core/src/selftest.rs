//! Fast internal consistency checks, run by the `selftest` subcommand.

use std::time::Instant;

use crate::checkpoint::{self, Checkpoint};
use crate::diophantine::{check_diophantine, default_alpha};
use crate::dynamics::Model;
use crate::error::Result;
use crate::norms::sobolev_norm;
use crate::spectral::{curl, divergence, grad, leray_project, Fft3, GridSpec, SpectralScalarField};
use crate::state::{make_random_state, InitSpec, PhysParams, State, SystemVariant};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, tol: f64) -> CheckResult {
    CheckResult {
        name,
        passed: value.is_finite() && value <= tol,
        detail: format!("{value:.3e} (tol {tol:.0e})"),
    }
}

fn random_state(grid: GridSpec, seed: u64) -> Result<State> {
    let init = InitSpec::with_defaults(grid, 1.0, 0.0, seed);
    make_random_state(grid, &init, SystemVariant::Full)
}

pub fn run_all() -> Result<Vec<CheckResult>> {
    let grid = GridSpec::new(16)?;
    let fft = Fft3::new(grid);
    let s = random_state(grid, 7)?;
    let mut out = Vec::new();

    // transform round trip
    let phys = fft.to_physical(s.u.component(0));
    let back = fft.to_spectral(&phys);
    let err = back
        .coeffs()
        .iter()
        .zip(s.u.component(0).coeffs())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    out.push(check("fft-round-trip", err, 1e-12));

    // Parseval: (2π)³ Σ|f̂|² against the grid quadrature
    let l2 = sobolev_norm(&s.u, 0.0, false)?;
    let phys_u = fft.vector_to_physical(&s.u);
    let quad: f64 = phys_u.iter().flatten().map(|x| x * x).sum::<f64>() * grid.spacing().powi(3);
    out.push(check("parseval", (l2 * l2 - quad).abs() / quad, 1e-12));

    let phi = SpectralScalarField::from_coeffs(grid, s.omega.component(0).coeffs().to_vec())?;
    let cg = curl(&grad(&phi));
    out.push(check("curl-grad", sobolev_norm(&cg, 0.0, false)?, 1e-12));
    let dc = divergence(&curl(&s.omega));
    let dc_max = dc.coeffs().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    out.push(check("div-curl", dc_max, 1e-12));
    out.push(check(
        "leray-projection",
        leray_project(&s.omega).divergence_residual(),
        1e-13,
    ));

    // the linear part alone decays the energy
    let model = Model::new(grid, PhysParams::default(), SystemVariant::ZeroKinematic)?.linearized();
    let next = model.step(&s, 0.01)?;
    let e0 = sobolev_norm(&s.u, 0.0, false)?;
    let e1 = sobolev_norm(&next.u, 0.0, false)?;
    out.push(CheckResult {
        name: "linear-decay",
        passed: e1 < e0,
        detail: format!("{e0:.6e} -> {e1:.6e}"),
    });

    let rep = check_diophantine([1.0, 1.0, 0.0], 2.5, 4)?;
    out.push(CheckResult {
        name: "diophantine-degenerate",
        passed: rep.degenerate && rep.argmin_k == [1, -1, 0],
        detail: format!("argmin {:?}", rep.argmin_k),
    });
    let rep = check_diophantine(default_alpha(1.0), 2.5, 8)?;
    out.push(CheckResult {
        name: "diophantine-default-alpha",
        passed: !rep.degenerate && rep.c_est > 0.0,
        detail: format!("c_est {:.4e}", rep.c_est),
    });

    let ckpt = Checkpoint {
        variant: SystemVariant::Full,
        params: PhysParams::default(),
        step: 3,
        seed: 7,
        state: s.clone(),
    };
    let decoded = checkpoint::decode(&checkpoint::encode(&ckpt))?;
    out.push(CheckResult {
        name: "checkpoint-round-trip",
        passed: decoded == ckpt,
        detail: String::new(),
    });

    // rhs is deterministic and finite
    let started = Instant::now();
    let full = Model::new(grid, PhysParams { mu: 1.0, ..PhysParams::default() }, SystemVariant::Full)?;
    let a = full.rhs(&s)?.total();
    let b = full.rhs(&s)?.total();
    let same = a.u == b.u && a.omega == b.omega && a.magnetic == b.magnetic;
    let finite = a.u.is_finite() && a.omega.is_finite() && a.magnetic.is_finite();
    out.push(CheckResult {
        name: "rhs-deterministic",
        passed: same && finite,
        detail: format!("{:.1} ms", started.elapsed().as_secs_f64() * 1e3),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all().unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
