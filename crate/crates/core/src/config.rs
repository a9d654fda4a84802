//! Line-oriented run configuration.
//!
//! Each non-blank line is `key = value`; `#` starts a comment. Keys:
//!
//! | key | default |
//! |-----|---------|
//! | `grid.n` | 32 |
//! | `system` | required |
//! | `params.mu` | 1 for `full`, else 0 |
//! | `params.chi` | 1, or 0 for the MHD systems |
//! | `params.kappa` | 0 |
//! | `params.eta` | 1 |
//! | `params.nu` | 1 where the system has magnetic diffusion, else 0 |
//! | `alpha` | `0.9√χ (1,√2,√3)/‖·‖` for `perturbation`, else `0,0,0` |
//! | `diophantine.r` | 2.5 |
//! | `init.epsilon` | 0.01 |
//! | `init.sobolev_index` | ⌈4r+11⌉ for `perturbation`, else 3 |
//! | `init.spectrum_slope` | 2 |
//! | `init.k_peak` | n/6 |
//! | `init.seed` | 0 |
//! | `time.dt` | 0.05 |
//! | `time.cfl` | 0.5 |
//! | `time.t_end` | required |
//! | `time.max_steps` | 1000000 |
//! | `time.record_interval` | 0.1 |
//! | `output.dir` | `out` |
//! | `output.norms` | empty (comma-separated extra Sobolev indices) |
//! | `output.checkpoint_interval` | 0 (steps between checkpoints; 0 disables) |
//! | `validate` | `strict` |
//! | `deterministic` | `true` |
//! | `diagnostics.a` | 10 |
//! | `diagnostics.gamma` | 4 |
//! | `diagnostics.c0` | 1 |
//! | `diagnostics.audit` | `true` |

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use crate::diophantine::default_alpha;
use crate::error::Error;
use crate::integrator::StepperConfig;
use crate::norms::{DiagnosticsSettings, FunctionalWeights};
use crate::spectral::GridSpec;
use crate::state::{validate_params, InitSpec, PhysParams, SystemVariant};

const KEYS: &[&str] = &[
    "grid.n",
    "system",
    "params.mu",
    "params.chi",
    "params.kappa",
    "params.eta",
    "params.nu",
    "alpha",
    "diophantine.r",
    "init.epsilon",
    "init.sobolev_index",
    "init.spectrum_slope",
    "init.k_peak",
    "init.seed",
    "time.dt",
    "time.cfl",
    "time.t_end",
    "time.max_steps",
    "time.record_interval",
    "output.dir",
    "output.norms",
    "output.checkpoint_interval",
    "validate",
    "deterministic",
    "diagnostics.a",
    "diagnostics.gamma",
    "diagnostics.c0",
    "diagnostics.audit",
];

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Extra Sobolev indices written to `norms.csv`.
    pub norms: Vec<f64>,
    /// Steps between checkpoints; zero disables periodic checkpoints.
    pub checkpoint_interval: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub system: SystemVariant,
    pub params: PhysParams,
    pub init: InitSpec,
    pub time: StepperConfig,
    pub output: OutputConfig,
    pub strict: bool,
    pub deterministic: bool,
    pub diagnostics: DiagnosticsSettings,
    /// Hypothesis violations downgraded in permissive mode, and regime notes.
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found in a configuration text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("\n"))
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigErrors> for Error {
    fn from(e: ConfigErrors) -> Self {
        Error::Config(e.to_string())
    }
}

struct Entries {
    values: HashMap<&'static str, (usize, String)>,
    issues: Vec<ConfigIssue>,
}

impl Entries {
    fn issue(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            message: message.into(),
        });
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.values.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn parsed<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Option<T> {
        let (line, raw) = self.raw(key)?;
        let raw = raw.to_string();
        match parse(&raw) {
            Some(v) => Some(v),
            None => {
                self.issue(Some(line), format!("{key}: expected {what}, got '{raw}'"));
                None
            }
        }
    }

    fn real(&mut self, key: &str, default: f64) -> f64 {
        self.parsed(key, "a real number", |s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
            .unwrap_or(default)
    }

    fn uint(&mut self, key: &str, default: u64) -> u64 {
        self.parsed(key, "a non-negative integer", |s| s.parse::<u64>().ok())
            .unwrap_or(default)
    }

    fn flag(&mut self, key: &str, default: bool) -> bool {
        self.parsed(key, "true or false", |s| match s {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        })
        .unwrap_or(default)
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.values.get(key).map(|(l, _)| *l)
    }
}

fn parse_real_list(s: &str) -> Option<Vec<f64>> {
    let s = s.trim();
    let s = s
        .strip_prefix('(')
        .and_then(|x| x.strip_suffix(')'))
        .unwrap_or(s);
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect()
}

pub fn parse_alpha(s: &str) -> Option<[f64; 3]> {
    parse_real_list(s)?.try_into().ok()
}

/// Parses and validates a configuration; on failure returns every issue found.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut entries = Entries {
        values: HashMap::new(),
        issues: Vec::new(),
    };

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            entries.issue(Some(line_no), format!("expected 'key = value', got '{line}'"));
            continue;
        };
        let key = key.trim();
        let value = value.trim().to_string();
        let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
            entries.issue(Some(line_no), format!("unknown key '{key}'"));
            continue;
        };
        if let Some((first, _)) = entries.values.get(known) {
            let first = *first;
            entries.issue(
                Some(line_no),
                format!("duplicate key '{key}' (lines {first} and {line_no})"),
            );
            continue;
        }
        entries.values.insert(known, (line_no, value));
    }

    let system = match entries.raw("system") {
        None => {
            entries.issue(None, "missing required key 'system'");
            None
        }
        Some((line, s)) => match s.parse::<SystemVariant>() {
            Ok(v) => Some(v),
            Err(e) => {
                let msg = e.to_string();
                entries.issue(Some(line), msg);
                None
            }
        },
    };
    let variant = system.unwrap_or(SystemVariant::Full);

    let n = entries.uint("grid.n", 32) as usize;
    let grid = match GridSpec::new(n) {
        Ok(g) => g,
        Err(e) => {
            let line = entries.line_of("grid.n");
            entries.issue(line, e.to_string());
            GridSpec::new(32).unwrap()
        }
    };

    let chi = entries.real(
        "params.chi",
        if variant.has_microrotation_coupling() { 1.0 } else { 0.0 },
    );
    let mut params = PhysParams {
        mu: entries.real("params.mu", if variant.has_kinematic_viscosity() { 1.0 } else { 0.0 }),
        chi,
        kappa: entries.real("params.kappa", 0.0),
        eta: entries.real("params.eta", 1.0),
        nu: entries.real("params.nu", if variant.has_magnetic_diffusion() { 1.0 } else { 0.0 }),
        alpha: if variant.has_background_field() {
            default_alpha(chi.max(0.0))
        } else {
            [0.0; 3]
        },
        r: entries.real("diophantine.r", 2.5),
    };
    if let Some(a) = entries.parsed("alpha", "three comma-separated reals", parse_alpha) {
        params.alpha = a;
    }

    let default_index = if variant.has_background_field() {
        (4.0 * params.r + 11.0).ceil()
    } else {
        3.0
    };
    let init = InitSpec {
        epsilon: entries.real("init.epsilon", 0.01),
        sobolev_index: entries.real("init.sobolev_index", default_index),
        spectrum_slope: entries.real("init.spectrum_slope", 2.0),
        k_peak: entries.real("init.k_peak", grid.n() as f64 / 6.0),
        seed: entries.uint("init.seed", 0),
    };

    if entries.raw("time.t_end").is_none() {
        entries.issue(None, "missing required key 'time.t_end'");
    }
    let time = StepperConfig {
        dt: entries.real("time.dt", 0.05),
        cfl: entries.real("time.cfl", 0.5),
        t_end: entries.real("time.t_end", 0.0),
        max_steps: entries.uint("time.max_steps", 1_000_000),
        record_interval: entries.real("time.record_interval", 0.1),
    };

    let output = OutputConfig {
        dir: entries
            .raw("output.dir")
            .map(|(_, s)| PathBuf::from(s))
            .unwrap_or_else(|| PathBuf::from("out")),
        norms: entries
            .parsed("output.norms", "comma-separated reals", parse_real_list)
            .unwrap_or_default(),
        checkpoint_interval: entries.uint("output.checkpoint_interval", 0),
    };

    let strict = entries
        .parsed("validate", "strict or permissive", |s| match s {
            "strict" => Some(true),
            "permissive" => Some(false),
            _ => None,
        })
        .unwrap_or(true);
    let deterministic = entries.flag("deterministic", true);

    let weights = FunctionalWeights {
        a: entries.real("diagnostics.a", 10.0),
        gamma: entries.real("diagnostics.gamma", 4.0),
        c0: entries.real("diagnostics.c0", 1.0),
    };
    let diagnostics = DiagnosticsSettings {
        weights,
        sobolev_n: (4.0 * params.r + 11.0).ceil(),
        audit: entries.flag("diagnostics.audit", true),
    };

    // semantic checks once every value is known
    if weights.a < 1.0 {
        let l = entries.line_of("diagnostics.a");
        entries.issue(l, format!("diagnostics.a must be >= 1, got {}", weights.a));
    }
    if weights.gamma <= 1.0 {
        let l = entries.line_of("diagnostics.gamma");
        entries.issue(l, format!("diagnostics.gamma must be > 1, got {}", weights.gamma));
    }
    if let Err(e) = init.validate(grid) {
        entries.issue(None, e.to_string());
    }
    if let Err(e) = time.validate() {
        entries.issue(None, e.to_string());
    }
    if output.norms.iter().any(|s| !(-10.0..=40.0).contains(s)) {
        let l = entries.line_of("output.norms");
        entries.issue(l, "output.norms entries must lie in [-10, 40]");
    }

    let mut warnings = Vec::new();
    if system.is_some() {
        let report = validate_params(&params, variant, strict);
        for e in report.errors {
            entries.issue(None, e);
        }
        warnings.extend(report.warnings);
        if variant == SystemVariant::Perturbation {
            let needed = 4.0 * params.r + 11.0;
            if init.sobolev_index < needed {
                let msg = format!(
                    "init.sobolev_index = {} below N >= 4r+11 = {needed}",
                    init.sobolev_index
                );
                if strict {
                    let l = entries.line_of("init.sobolev_index");
                    entries.issue(l, msg);
                } else {
                    warnings.push(msg);
                }
            }
        }
    }

    if !entries.issues.is_empty() {
        entries.issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        return Err(ConfigErrors(entries.issues));
    }
    Ok(RunConfig {
        grid,
        system: variant,
        params,
        init,
        time,
        output,
        strict,
        deterministic,
        diagnostics,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
grid.n = 32
system = zero-kinematic
params.chi = 1
params.eta = 1
params.nu = 1
init.epsilon = 0.01
time.t_end = 20
";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.n(), 32);
        assert_eq!(c.system, SystemVariant::ZeroKinematic);
        assert_eq!(c.params.mu, 0.0);
        assert_eq!(c.params.kappa, 0.0);
        assert_eq!(c.init.sobolev_index, 3.0);
        assert!((c.init.k_peak - 32.0 / 6.0).abs() < 1e-15);
        assert_eq!(c.time.t_end, 20.0);
        assert_eq!(c.time.cfl, 0.5);
        assert!(c.strict && c.deterministic);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn structure_condition_rejected() {
        let text = "system = perturbation\nalpha = (1,1,1)\nparams.chi = 1\ntime.t_end = 1\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("|α|²<χ<2"), "{err}");
    }

    #[test]
    fn perturbation_defaults() {
        let c = parse_config("system = perturbation\ntime.t_end = 1\n").unwrap();
        assert_eq!(c.params.nu, 0.0);
        assert_eq!(c.init.sobolev_index, 21.0);
        assert!((c.params.alpha_norm_sq() - 0.81).abs() < 1e-14);
    }

    #[test]
    fn duplicate_key_reports_both_lines() {
        let text = "system = full\ntime.t_end = 1\n# c\nsystem = full\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].line, Some(4));
        assert!(err.0[0].message.contains("lines 1 and 4"));
    }

    #[test]
    fn unknown_key_and_type_errors_collected() {
        let text = "system = full\ntime.t_end = soon\nparams.zeta = 1\nbogus line\n";
        let err = parse_config(text).unwrap_err();
        let lines: Vec<_> = err.0.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![Some(2), Some(3), Some(4)]);
    }

    #[test]
    fn permissive_downgrades_hypotheses() {
        let text = "system = perturbation\nalpha = 1,1,1\nvalidate = permissive\ntime.t_end = 1\n";
        let c = parse_config(text).unwrap();
        assert!(!c.strict);
        assert!(c.warnings.iter().any(|w| w.contains("|α|²<χ<2")));
    }

    #[test]
    fn missing_required_keys() {
        let err = parse_config("").unwrap_err();
        assert!(err.to_string().contains("'system'"));
        assert!(err.to_string().contains("'time.t_end'"));
    }
}
