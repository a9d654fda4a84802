//! Integrating-factor fourth-order Runge–Kutta time stepping.
//!
//! The mode-diagonal stiff symbols are propagated exactly with
//! `exp(−Λ(k)δ)`; ω is split into its components along and across `k`, which
//! see different decay rates when `κ > 0`. Everything else is advanced by
//! the classical RK4 stages.

use log::warn;
use crate::dynamics::{Model, Tendency};
use crate::error::{Error, Result};
use crate::norms::{sample_diagnostics, DiagnosticsRecord, DiagnosticsSettings};
use crate::spectral::ops::leray_project_in_place;
use crate::spectral::{GridSpec, SpectralVectorField};
use crate::state::{PhysParams, State, SystemVariant};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub max_steps: u64,
    pub record_interval: f64,
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("time.dt must be > 0, got {}", self.dt)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("time.cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("time.t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.record_interval > 0.0 && self.record_interval.is_finite()) {
            return Err(Error::Config(format!(
                "time.record_interval must be > 0, got {}",
                self.record_interval
            )));
        }
        Ok(())
    }
}

/// Individual step-size limits; `f64::INFINITY` where a limit does not bind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtBounds {
    pub base: f64,
    pub advective: f64,
    pub coupling: f64,
    pub background: f64,
}

impl DtBounds {
    pub fn min(&self) -> f64 {
        self.base
            .min(self.advective)
            .min(self.coupling)
            .min(self.background)
    }
}

fn max_abs_physical(model: &Model, f: &SpectralVectorField) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let [a, b, c] = model.fft().vector_to_physical(f);
    a.iter()
        .zip(&b)
        .zip(&c)
        .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
        .fold(0.0, f64::max)
}

pub fn dt_bounds(state: &State, p: &PhysParams, grid: GridSpec, cfg: &StepperConfig) -> Result<DtBounds> {
    if !state.is_finite() {
        return Err(Error::integrity("non-finite values in state"));
    }
    let model = Model::new(grid, p.restricted_to(SystemVariant::Full), SystemVariant::Full)?;
    Ok(bounds_with(&model, state, p, cfg))
}

fn bounds_with(model: &Model, state: &State, p: &PhysParams, cfg: &StepperConfig) -> DtBounds {
    let h = model.grid().spacing();
    let umax = max_abs_physical(model, &state.u);
    let alpha = p.alpha_norm_sq().sqrt();
    DtBounds {
        base: cfg.dt,
        advective: if umax > 0.0 { cfg.cfl * h / umax } else { f64::INFINITY },
        coupling: cfg.cfl / (2.0 * p.chi * 3.0 + 1.0),
        background: if alpha > 0.0 { cfg.cfl * h / alpha } else { f64::INFINITY },
    }
}

fn floor_dt(dt: f64, cfg: &StepperConfig) -> f64 {
    let floor = cfg.dt * 1e-6;
    if dt < floor {
        warn!("stable time step {dt:e} below floor, using {floor:e}");
        floor
    } else {
        dt
    }
}

/// Largest admissible step: the minimum of the base step, the advective CFL
/// bound, the coupling bound and the background-transport bound.
pub fn stable_dt(state: &State, p: &PhysParams, grid: GridSpec, cfg: &StepperConfig) -> Result<f64> {
    Ok(floor_dt(dt_bounds(state, p, grid, cfg)?.min(), cfg))
}

/// Exact propagator `exp(−Λ(k)δ)` of the stiff symbols for one `δ`.
struct Propagator {
    grid: GridSpec,
    eta: f64,
    chi: f64,
    kappa: f64,
    delta: f64,
    /// Indexed by integer `|k|²`: factors for u, ω⊥, ω∥ and the magnetic field.
    table: Vec<[f64; 4]>,
}

impl Propagator {
    fn new(model: &Model, delta: f64) -> Self {
        let g = model.grid();
        let half = g.n() / 2;
        let table = (0..=3 * half * half)
            .map(|k2| {
                let k2 = k2 as f64;
                let s = model.symbols(k2, k2);
                [
                    (-s.u * delta).exp(),
                    (-s.omega_perp * delta).exp(),
                    (-s.omega_par * delta).exp(),
                    (-s.magnetic * delta).exp(),
                ]
            })
            .collect();
        let p = model.params();
        Propagator {
            grid: g,
            eta: p.eta,
            chi: p.chi,
            kappa: p.kappa,
            delta,
            table,
        }
    }

    fn factors(&self, idx: usize, kd2: f64) -> [f64; 4] {
        let k2 = self.grid.k_squared(idx);
        let mut f = self.table[k2 as usize];
        if kd2 != k2 {
            // modes with a Nyquist component differentiate with a truncated k
            f[2] = (-(self.eta * k2 + 4.0 * self.chi + self.kappa * kd2) * self.delta).exp();
        }
        f
    }

    fn apply(&self, fields: [&mut SpectralVectorField; 3]) {
        let [u, w, b] = fields;
        for idx in 0..self.grid.len() {
            let k = self.grid.deriv_wavevector(idx);
            let kd2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let [fu, fperp, fpar, fb] = self.factors(idx, kd2);
            u.set_at(idx, u.at(idx).map(|z| z * fu));
            b.set_at(idx, b.at(idx).map(|z| z * fb));
            let x = w.at(idx);
            if kd2 > 0.0 && fpar != fperp && self.kappa != 0.0 {
                let d = (x[0] * k[0] + x[1] * k[1] + x[2] * k[2]) / kd2;
                let extra = fpar - fperp;
                let mut o = x.map(|z| z * fperp);
                for c in 0..3 {
                    o[c] += d * (k[c] * extra);
                }
                w.set_at(idx, o);
            } else {
                w.set_at(idx, x.map(|z| z * fperp));
            }
        }
    }

    fn apply_state(&self, s: &State) -> State {
        let mut out = s.clone();
        self.apply(out.fields_mut());
        out
    }

    fn apply_tendency(&self, t: &Tendency) -> Tendency {
        let mut out = t.clone();
        self.apply(out.fields_mut());
        out
    }
}

/// `base + h * dir`, fieldwise.
fn offset(base: &State, h: f64, dir: &Tendency) -> State {
    let mut out = base.clone();
    for (f, d) in out.fields_mut().into_iter().zip(dir.fields()) {
        f.axpy(h, d);
    }
    out
}

impl Model {
    /// One integrating-factor RK4 step of size `dt`.
    pub fn step(&self, state: &State, dt: f64) -> Result<State> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Usage(format!("step size must be > 0, got {dt}")));
        }
        let half = Propagator::new(self, 0.5 * dt);
        let full = Propagator::new(self, dt);

        let k1 = self.explicit_part(state);
        let k2 = self.explicit_part(&half.apply_state(&offset(state, 0.5 * dt, &k1)));
        let e_half = half.apply_state(state);
        let k3 = self.explicit_part(&offset(&e_half, 0.5 * dt, &k2));
        let e_full = full.apply_state(state);
        let k4 = self.explicit_part(&offset(&e_full, dt, &half.apply_tendency(&k3)));

        let mut mid = k2;
        for (a, b) in mid.fields_mut().into_iter().zip(k3.fields()) {
            a.axpy(1.0, b);
        }
        let mid = half.apply_tendency(&mid);
        let k1 = full.apply_tendency(&k1);

        let mut out = e_full;
        let h6 = dt / 6.0;
        for (((f, a), b), c) in out
            .fields_mut()
            .into_iter()
            .zip(k1.fields())
            .zip(mid.fields())
            .zip(k4.fields())
        {
            f.axpy(h6, a);
            f.axpy(2.0 * h6, b);
            f.axpy(h6, c);
        }
        leray_project_in_place(&mut out.u);
        leray_project_in_place(&mut out.magnetic);
        out.omega.zero_mean();
        out.t = state.t + dt;
        if !out.is_finite() {
            return Err(Error::integrity("non-finite values after step (blow-up)"));
        }
        Ok(out)
    }

    pub fn stable_dt(&self, state: &State, cfg: &StepperConfig) -> Result<f64> {
        if !state.is_finite() {
            return Err(Error::integrity("non-finite values in state"));
        }
        Ok(floor_dt(bounds_with(self, state, self.params(), cfg).min(), cfg))
    }
}

/// Advances `state` by one step of `variant`.
pub fn step(state: &State, p: &PhysParams, variant: SystemVariant, dt: f64) -> Result<State> {
    Model::new(state.grid(), *p, variant)?.step(state, dt)
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    StepCap,
    BlowUp { step: u64, message: String },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::StepCap => "step_cap",
            RunStatus::BlowUp { .. } => "blow_up",
        }
    }
}

/// Receives diagnostics records and periodic states during a run.
pub trait RunSink {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()>;

    /// Called at every diagnostics sample together with the sampled state.
    fn observe(&mut self, record: &DiagnosticsRecord, _state: &State) -> Result<()> {
        self.record(record)
    }

    /// Called after every step with the global step count.
    fn after_step(&mut self, _state: &State, _step: u64) -> Result<()> {
        Ok(())
    }
}

/// Collects records in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub records: Vec<DiagnosticsRecord>,
}

impl RunSink for MemorySink {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        self.records.push(*record);
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub state: State,
    pub records: Vec<DiagnosticsRecord>,
    pub status: RunStatus,
    /// Global step count reached (including steps before a resume).
    pub steps: u64,
}

/// A run stopped by a sink failure; `partial` holds everything computed so far.
#[derive(Debug)]
pub struct RunAbort {
    pub partial: Box<RunReport>,
    pub error: Error,
}

impl std::fmt::Display for RunAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted at step {}: {}", self.partial.steps, self.error)
    }
}

impl std::error::Error for RunAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Smallest multiple of `interval` strictly after `t`.
fn next_record_time(t: f64, interval: f64) -> f64 {
    let m = (t / interval + 1e-9).floor() + 1.0;
    m * interval
}

/// Fixed-cadence driver around [`Model::step`].
#[derive(Clone, Debug)]
pub struct Runner {
    pub model: Model,
    pub stepper: StepperConfig,
    pub diagnostics: DiagnosticsSettings,
}

impl Runner {
    pub fn new(model: Model, stepper: StepperConfig, diagnostics: DiagnosticsSettings) -> Result<Self> {
        stepper.validate()?;
        Ok(Runner {
            model,
            stepper,
            diagnostics,
        })
    }

    /// Runs from a fresh start: records the initial state, then steps.
    pub fn run(&self, state: State, sinks: &mut [&mut dyn RunSink]) -> Result<RunReport, RunAbort> {
        self.run_from(state, 0, sinks)
    }

    /// Continues from `state` after `start_step` steps. The initial state is
    /// recorded only when `start_step == 0`, so a resumed run's records
    /// extend those written before the interruption.
    pub fn run_from(
        &self,
        state: State,
        start_step: u64,
        sinks: &mut [&mut dyn RunSink],
    ) -> Result<RunReport, RunAbort> {
        let cfg = &self.stepper;
        let mut report = RunReport {
            state,
            records: Vec::new(),
            status: RunStatus::Completed,
            steps: start_step,
        };

        macro_rules! emit {
            ($report:ident) => {{
                let rec = match sample_diagnostics(&self.model, &$report.state, &self.diagnostics) {
                    Ok(r) => r,
                    Err(e) => {
                        $report.status = RunStatus::BlowUp {
                            step: $report.steps,
                            message: e.to_string(),
                        };
                        return Ok($report);
                    }
                };
                $report.records.push(rec);
                for s in sinks.iter_mut() {
                    if let Err(error) = s.observe(&rec, &$report.state) {
                        return Err(RunAbort {
                            partial: Box::new($report),
                            error,
                        });
                    }
                }
            }};
        }

        if start_step == 0 {
            emit!(report);
        }
        let t_end = cfg.t_end;
        let tol = 1e-12 * t_end.abs().max(1.0);
        let mut last_recorded_t = report.state.t;
        loop {
            if report.state.t >= t_end - tol {
                if report.state.t != last_recorded_t {
                    emit!(report);
                }
                report.status = RunStatus::Completed;
                return Ok(report);
            }
            if report.steps >= cfg.max_steps {
                report.status = RunStatus::StepCap;
                return Ok(report);
            }
            let t = report.state.t;
            let record_t = next_record_time(t, cfg.record_interval);
            let target = record_t.min(t_end);
            let step_index = report.steps + 1;
            let attempt = self
                .model
                .stable_dt(&report.state, cfg)
                .and_then(|dt| {
                    let dt = dt.min(target - t);
                    self.model.step(&report.state, dt)
                });
            let mut next = match attempt {
                Ok(s) => s,
                Err(e) => {
                    report.status = RunStatus::BlowUp {
                        step: step_index,
                        message: e.to_string(),
                    };
                    return Ok(report);
                }
            };
            let landed = (target - next.t).abs() <= tol;
            if landed {
                next.t = target;
            }
            report.state = next;
            report.steps = step_index;
            for s in sinks.iter_mut() {
                if let Err(error) = s.after_step(&report.state, report.steps) {
                    return Err(RunAbort {
                        partial: Box::new(report),
                        error,
                    });
                }
            }
            if landed && target == record_t {
                emit!(report);
                last_recorded_t = report.state.t;
            }
        }
    }
}

/// Runs `variant` from `state0` with default diagnostics.
pub fn run(
    state0: State,
    p: &PhysParams,
    variant: SystemVariant,
    cfg: &StepperConfig,
    sinks: &mut [&mut dyn RunSink],
) -> Result<RunReport> {
    let model = Model::new(state0.grid(), *p, variant)?;
    let settings = DiagnosticsSettings {
        sobolev_n: (4.0 * p.r + 11.0).ceil(),
        ..DiagnosticsSettings::default()
    };
    let runner = Runner::new(model, *cfg, settings)?;
    runner.run(state0, sinks).map_err(|a| a.error)
}
