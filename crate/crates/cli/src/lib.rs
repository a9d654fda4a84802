//! The `mmp` command-line driver.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 integrity error
//! (blow-up, non-finite values, failed self-test), 3 I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use mmp_core::checkpoint::{self, Checkpoint};
use mmp_core::config::{parse_alpha, parse_config, RunConfig};
use mmp_core::csv::{read_column, CsvSink};
use mmp_core::diophantine::{check_diophantine, lemma_ratio};
use mmp_core::integrator::{RunSink, Runner};
use mmp_core::norms::{fit_decay, sobolev_norm_triple};
use mmp_core::state::make_random_state;
use mmp_core::{DecayModel, DiagnosticsRecord, Error, GridSpec, Model, Result, RunStatus, State};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INTEGRITY: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const NORMS_FILE: &str = "norms.csv";
pub const FINAL_CHECKPOINT: &str = "final.bin";

#[derive(Debug, Parser)]
#[command(name = "mmp", version, about = "Magneto-micropolar pseudo-spectral solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitModel {
    Exp,
    Alg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Scan the lattice for the Diophantine constant of a vector.
    CheckDiophantine {
        #[arg(long, value_parser = alpha_arg, allow_hyphen_values = true)]
        alpha: [f64; 3],
        #[arg(long)]
        r: f64,
        #[arg(long)]
        kmax: i64,
    },
    /// Estimate the norm-lifting constant on random band-limited fields.
    VerifyLemma {
        #[arg(long, value_parser = alpha_arg, allow_hyphen_values = true)]
        alpha: [f64; 3],
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit an exponential or algebraic decay law to one CSV column.
    FitDecay {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, value_enum)]
        model: FitModel,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        tmin: f64,
    },
    /// Run the internal invariant checks.
    Selftest,
}

fn alpha_arg(s: &str) -> std::result::Result<[f64; 3], String> {
    parse_alpha(s).ok_or_else(|| format!("expected three comma-separated reals, got '{s}'"))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Usage(_) | Error::Validation(_) => EXIT_VALIDATION,
        Error::Integrity { .. } => EXIT_INTEGRITY,
        Error::Io { .. } => EXIT_IO,
    }
}

/// Entry point shared by the binary and the tests; `args` includes the program name.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { config, resume } => cmd_run(&config, resume.as_deref(), out),
        Command::CheckDiophantine { alpha, r, kmax } => cmd_check_diophantine(alpha, r, kmax, out),
        Command::VerifyLemma {
            alpha,
            s,
            r,
            n,
            trials,
            seed,
        } => cmd_verify_lemma(alpha, s, r, n, trials, seed, out),
        Command::FitDecay {
            csv,
            column,
            model,
            tmin,
        } => cmd_fit_decay(&csv, &column, model, tmin, out),
        Command::Selftest => cmd_selftest(out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Error::io("<stdout>", e))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { emit($out, format_args!($($arg)*)) };
}

fn fmt_vec(v: [f64; 3]) -> String {
    format!("{:.17e}, {:.17e}, {:.17e}", v[0], v[1], v[2])
}

fn cmd_check_diophantine(alpha: [f64; 3], r: f64, kmax: i64, out: &mut dyn Write) -> Result<i32> {
    if r <= 2.0 {
        warn!("r = {r} is at most 2; decay results need r > 2");
    }
    let rep = check_diophantine(alpha, r, kmax)?;
    let k = rep.argmin_k;
    say!(out, "alpha = {}", fmt_vec(rep.alpha))?;
    say!(out, "r = {}", rep.r)?;
    say!(out, "k_max = {}", rep.k_max)?;
    say!(out, "c_est = {:.17e}", rep.c_est)?;
    say!(out, "argmin_k = ({}, {}, {})", k[0], k[1], k[2])?;
    say!(out, "degenerate = {}", rep.degenerate)?;
    Ok(EXIT_OK)
}

fn cmd_verify_lemma(
    alpha: [f64; 3],
    s: f64,
    r: f64,
    n: usize,
    trials: usize,
    seed: u64,
    out: &mut dyn Write,
) -> Result<i32> {
    let grid = GridSpec::new(n)?;
    let rep = lemma_ratio(alpha, s, r, grid, trials, seed)?;
    let k = rep.mode_argmax;
    say!(out, "alpha = {}", fmt_vec(alpha))?;
    say!(out, "s = {}", rep.s)?;
    say!(out, "r = {}", rep.r)?;
    say!(out, "k_max = {}", rep.k_max)?;
    say!(out, "trials = {}", rep.trials)?;
    say!(out, "max_ratio = {:.17e}", rep.max_ratio)?;
    say!(out, "mean_ratio = {:.17e}", rep.mean_ratio)?;
    say!(out, "mode_bound = {:.17e}", rep.mode_bound)?;
    say!(out, "mode_argmax = ({}, {}, {})", k[0], k[1], k[2])?;
    say!(out, "within_bound = {}", rep.max_ratio <= rep.mode_bound * (1.0 + 1e-10))?;
    Ok(EXIT_OK)
}

fn cmd_fit_decay(csv: &Path, column: &str, model: FitModel, tmin: f64, out: &mut dyn Write) -> Result<i32> {
    let series = read_column(csv, column)?;
    let model = match model {
        FitModel::Exp => DecayModel::Exponential,
        FitModel::Alg => DecayModel::Algebraic,
    };
    let fit = fit_decay(&series, model, tmin)?;
    let name = match fit.model {
        DecayModel::Exponential => "exp",
        DecayModel::Algebraic => "alg",
    };
    say!(out, "model = {name}")?;
    say!(out, "prefactor = {:.17e}", fit.prefactor)?;
    say!(out, "rate = {}", fit.rate)?;
    say!(out, "r_squared = {}", fit.r_squared)?;
    say!(out, "samples = {}", fit.samples)?;
    Ok(EXIT_OK)
}

fn cmd_selftest(out: &mut dyn Write) -> Result<i32> {
    let results = mmp_core::selftest::run_all()?;
    let mut failed = 0;
    for c in &results {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        say!(out, "{tag} {} {}", c.name, c.detail)?;
        if !c.passed {
            failed += 1;
        }
    }
    say!(out, "{} passed, {failed} failed", results.len() - failed)?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_INTEGRITY })
}

/// Writes `ckpt_<step>.bin` every `interval` steps.
struct CheckpointSink<'a> {
    dir: &'a Path,
    interval: u64,
    cfg: &'a RunConfig,
}

pub fn checkpoint_name(step: u64) -> String {
    format!("ckpt_{step:08}.bin")
}

impl RunSink for CheckpointSink<'_> {
    fn record(&mut self, _record: &DiagnosticsRecord) -> Result<()> {
        Ok(())
    }

    fn after_step(&mut self, state: &State, step: u64) -> Result<()> {
        if self.interval == 0 || !step.is_multiple_of(self.interval) {
            return Ok(());
        }
        save_checkpoint(&self.dir.join(checkpoint_name(step)), self.cfg, state, step)
    }
}

fn save_checkpoint(path: &Path, cfg: &RunConfig, state: &State, step: u64) -> Result<()> {
    let ckpt = Checkpoint {
        variant: cfg.system,
        params: cfg.params.restricted_to(cfg.system),
        step,
        seed: cfg.init.seed,
        state: state.clone(),
    };
    checkpoint::save(path, &ckpt)
}

/// Writes `t` and the requested Sobolev norms of the state triple.
struct NormsSink {
    path: PathBuf,
    indices: Vec<f64>,
    file: fs::File,
}

fn norms_header(indices: &[f64]) -> String {
    let mut h = String::from("t");
    for s in indices {
        h.push_str(&format!(",h_{s}"));
    }
    h
}

impl NormsSink {
    fn open(path: &Path, indices: &[f64], append: bool) -> Result<Self> {
        let exists = path.exists();
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(append)
            .write(true)
            .truncate(!append)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        if !append || !exists {
            writeln!(file, "{}", norms_header(indices)).map_err(|e| Error::io(path, e))?;
        }
        Ok(NormsSink {
            path: path.to_path_buf(),
            indices: indices.to_vec(),
            file,
        })
    }
}

impl RunSink for NormsSink {
    fn record(&mut self, _record: &DiagnosticsRecord) -> Result<()> {
        Ok(())
    }

    fn observe(&mut self, _record: &DiagnosticsRecord, state: &State) -> Result<()> {
        let mut line = format!("{:.16e}", state.t);
        for &s in &self.indices {
            line.push_str(&format!(",{:.16e}", sobolev_norm_triple(state.fields(), s, false)?));
        }
        writeln!(self.file, "{line}").map_err(|e| Error::io(&self.path, e))
    }
}

/// Drops rows recorded after `t_keep`, so a resumed run does not duplicate
/// samples written past the checkpoint before the interruption.
fn truncate_after(path: &Path, t_keep: f64) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let tol = 1e-12 * t_keep.abs().max(1.0);
    let mut kept = String::new();
    for (i, line) in text.lines().enumerate() {
        let keep = i == 0
            || line
                .split(',')
                .next()
                .and_then(|c| c.trim().parse::<f64>().ok())
                .is_some_and(|t| t <= t_keep + tol);
        if keep {
            kept.push_str(line);
            kept.push('\n');
        }
    }
    fs::write(path, kept).map_err(|e| Error::io(path, e))
}

fn resume_state(cfg: &RunConfig, path: &Path) -> Result<(State, u64)> {
    let ck = checkpoint::load(path)?;
    let params = cfg.params.restricted_to(cfg.system);
    if ck.state.grid() != cfg.grid {
        return Err(Error::Validation(format!(
            "checkpoint grid n = {} does not match config grid.n = {}",
            ck.state.grid().n(),
            cfg.grid.n()
        )));
    }
    if ck.variant != cfg.system {
        return Err(Error::Validation(format!(
            "checkpoint system '{}' does not match config system '{}'",
            ck.variant, cfg.system
        )));
    }
    if ck.params != params {
        return Err(Error::Validation(
            "checkpoint parameters differ from the config".into(),
        ));
    }
    Ok((ck.state, ck.step))
}

fn cmd_run(config_path: &Path, resume: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let text = fs::read_to_string(config_path).map_err(|e| Error::io(config_path, e))?;
    let cfg = parse_config(&text)?;
    for w in &cfg.warnings {
        warn!("{w}");
    }
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let model = Model::new(cfg.grid, cfg.params.restricted_to(cfg.system), cfg.system)?;
    let runner = Runner::new(model, cfg.time, cfg.diagnostics.clone())?;

    let diag_path = dir.join(DIAGNOSTICS_FILE);
    let norms_path = dir.join(NORMS_FILE);
    let (state, start_step, mut csv) = match resume {
        None => {
            let state = make_random_state(cfg.grid, &cfg.init, cfg.system)?;
            (state, 0, CsvSink::create(&diag_path)?)
        }
        Some(p) => {
            let (state, step) = resume_state(&cfg, p)?;
            info!("resuming from {} at step {step}, t = {}", p.display(), state.t);
            let sink = if diag_path.exists() {
                truncate_after(&diag_path, state.t)?;
                CsvSink::append(&diag_path)?
            } else {
                CsvSink::create(&diag_path)?
            };
            if norms_path.exists() {
                truncate_after(&norms_path, state.t)?;
            }
            (state, step, sink)
        }
    };

    let mut ckpt_sink = CheckpointSink {
        dir: &dir,
        interval: cfg.output.checkpoint_interval,
        cfg: &cfg,
    };
    let mut norms_sink = if cfg.output.norms.is_empty() {
        None
    } else {
        Some(NormsSink::open(&norms_path, &cfg.output.norms, resume.is_some())?)
    };
    let mut sinks: Vec<&mut dyn RunSink> = vec![&mut csv, &mut ckpt_sink];
    if let Some(n) = norms_sink.as_mut() {
        sinks.push(n);
    }

    let report = match runner.run_from(state, start_step, &mut sinks) {
        Ok(r) => r,
        Err(abort) => {
            let _ = save_checkpoint(&dir.join(FINAL_CHECKPOINT), &cfg, &abort.partial.state, abort.partial.steps);
            return Err(abort.error);
        }
    };
    save_checkpoint(&dir.join(FINAL_CHECKPOINT), &cfg, &report.state, report.steps)?;

    say!(out, "status = {}", report.status.label())?;
    say!(out, "steps = {}", report.steps)?;
    say!(out, "t = {}", report.state.t)?;
    say!(out, "records = {}", report.records.len())?;
    if let Some(last) = report.records.last() {
        say!(out, "l2_energy = {:.17e}", last.l2_energy)?;
        say!(out, "h3 = {:.17e}", last.h3)?;
    }
    say!(out, "output = {}", dir.display())?;
    match report.status {
        RunStatus::Completed => Ok(EXIT_OK),
        RunStatus::StepCap => {
            warn!("step cap {} reached before t_end", cfg.time.max_steps);
            Ok(EXIT_OK)
        }
        RunStatus::BlowUp { step, message } => {
            eprintln!("error: blow-up at step {step}: {message}");
            Ok(EXIT_INTEGRITY)
        }
    }
}
