//! Run configuration: a flat TOML document, command-line overrides and
//! validation that points at the line or flag each bad value came from.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use pulsed_squeezing::grid::CavityParams;
use pulsed_squeezing::lo_shaping::LoBandwidth;
use pulsed_squeezing::sweep::Spacing;
use pulsed_squeezing::threshold::PowerDefinition;
use serde::Deserialize;
use toml::Spanned;

use crate::Command;

/// Keys accepted in a config file or through `--set`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gamma_i: Option<Spanned<f64>>,
    pub gamma_c: Option<Spanned<f64>>,
    pub gamma_p: Option<Spanned<f64>>,
    pub gamma_pc: Option<Spanned<f64>>,
    pub kappa: Option<Spanned<f64>>,
    pub delta: Option<Spanned<f64>>,
    pub power_fraction: Option<Spanned<f64>>,
    pub grid_points: Option<Spanned<i64>>,
    pub grid_span: Option<Spanned<f64>>,
    pub power_def: Option<Spanned<String>>,
    pub lo_bandwidth: Option<Spanned<String>>,
    pub delta_lo: Option<Spanned<f64>>,
    pub gamma_f: Option<Spanned<f64>>,
    pub modes: Option<Spanned<i64>>,
    pub sweep_variable: Option<Spanned<String>>,
    pub sweep_min: Option<Spanned<f64>>,
    pub sweep_max: Option<Spanned<f64>>,
    pub sweep_count: Option<Spanned<i64>>,
    pub sweep_spacing: Option<Spanned<String>>,
    pub out: Option<Spanned<String>>,
}

/// Where a value came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Default,
    File { path: PathBuf, line: usize },
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => f.write_str("default"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Origin,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}: {}", self.origin, self.message)
        } else {
            write!(f, "{}: {}: {}", self.origin, self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

#[derive(Debug)]
enum Source {
    File { path: PathBuf, text: String },
    Flag(String),
}

/// One configuration source; later layers override earlier ones.
#[derive(Debug)]
pub struct Layer {
    cfg: FileConfig,
    source: Source,
}

impl Layer {
    pub fn from_file(path: &Path) -> Result<Layer, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: Origin::Flag("--config".into()),
            key: String::new(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_text(path, text)
    }

    pub fn from_text(path: &Path, text: String) -> Result<Layer, ConfigError> {
        let cfg = toml::from_str::<FileConfig>(&text).map_err(|e| {
            let line = e.span().map(|s| line_of(&text, s.start)).unwrap_or(1);
            ConfigError {
                origin: Origin::File { path: path.to_path_buf(), line },
                key: String::new(),
                message: e.message().trim().to_string(),
            }
        })?;
        Ok(Layer {
            cfg,
            source: Source::File { path: path.to_path_buf(), text },
        })
    }

    /// `key=value` from `--set`; bare words are read as strings.
    pub fn from_assignment(assignment: &str) -> Result<Layer, ConfigError> {
        let flag = format!("--set {assignment}");
        let err = |message: String| ConfigError {
            origin: Origin::Flag(flag.clone()),
            key: String::new(),
            message,
        };
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| err("expected KEY=VALUE".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let parsed = toml::from_str::<FileConfig>(&format!("{key} = {value}"))
            .or_else(|_| toml::from_str::<FileConfig>(&format!("{key} = {:?}", value)))
            .map_err(|e| err(e.message().trim().to_string()))?;
        Ok(Layer {
            cfg: parsed,
            source: Source::Flag(flag),
        })
    }

    /// A single value given by a dedicated flag.
    pub fn from_flag(flag: &str, fill: impl FnOnce(&mut FileConfig)) -> Layer {
        let mut cfg = FileConfig::default();
        fill(&mut cfg);
        Layer {
            cfg,
            source: Source::Flag(flag.to_string()),
        }
    }

    fn origin(&self, span: Range<usize>) -> Origin {
        match &self.source {
            Source::File { path, text } => Origin::File {
                path: path.clone(),
                line: line_of(text, span.start),
            },
            Source::Flag(name) => Origin::Flag(name.clone()),
        }
    }
}

/// Wraps a flag value for [`Layer::from_flag`].
pub fn spanned<T>(value: T) -> Option<Spanned<T>> {
    Some(Spanned::new(0..0, value))
}

/// Quantity swept along a table's rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Delta,
    Power,
    GammaP,
    Mode,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::Delta => "delta",
            Variable::Power => "power_fraction",
            Variable::GammaP => "gamma_p",
            Variable::Mode => "mode",
        }
    }

    fn parse(s: &str) -> Option<Variable> {
        match s.trim().to_ascii_lowercase().as_str() {
            "delta" => Some(Variable::Delta),
            "power" | "power_fraction" => Some(Variable::Power),
            "gamma_p" => Some(Variable::GammaP),
            "mode" => Some(Variable::Mode),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: Variable,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

/// Which threshold power definitions to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerChoice {
    One(PowerDefinition),
    Both,
}

impl PowerChoice {
    pub fn definitions(self) -> Vec<PowerDefinition> {
        match self {
            PowerChoice::One(d) => vec![d],
            PowerChoice::Both => vec![PowerDefinition::TemporalPeak, PowerDefinition::PulseEnergy],
        }
    }
}

impl fmt::Display for PowerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerChoice::One(d) => d.fmt(f),
            PowerChoice::Both => f.write_str("both"),
        }
    }
}

/// Fully resolved and validated configuration for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: CavityParams,
    pub delta: f64,
    pub power_fraction: f64,
    pub grid_points: usize,
    /// `None`: chosen per operating point.
    pub grid_span: Option<f64>,
    pub power_def: PowerChoice,
    pub lo_bandwidth: LoBandwidth,
    pub delta_lo: Option<f64>,
    /// `None`: optimized.
    pub gamma_f: Option<f64>,
    pub modes: usize,
    /// `None` for single-point commands.
    pub sweep: Option<SweepSpec>,
    pub out: Option<PathBuf>,
}

const DEFAULT_GRID_POINTS: usize = pulsed_squeezing::pipeline::DEFAULT_POINTS;

fn default_sweep(cmd: Command, variable: Option<Variable>) -> Option<SweepSpec> {
    let s = |variable, min, max, count, spacing| {
        Some(SweepSpec {
            variable,
            min,
            max,
            count,
            spacing,
        })
    };
    match (cmd, variable) {
        (Command::Threshold, _) => s(Variable::Delta, 0.1, 1000.0, 24, Spacing::Log),
        (Command::Squeeze, Some(Variable::Mode)) => s(Variable::Mode, 1.0, 10.0, 10, Spacing::Linear),
        (Command::Squeeze, _) => s(Variable::Power, 0.05, 0.99, 20, Spacing::Linear),
        (Command::ModeNumber, Some(Variable::Delta)) => s(Variable::Delta, 0.25, 16.0, 7, Spacing::Log),
        (Command::ModeNumber, Some(Variable::GammaP)) => s(Variable::GammaP, 0.5, 8.0, 5, Spacing::Log),
        (Command::ModeNumber, _) => s(Variable::Power, 0.1, 0.99, 10, Spacing::Linear),
        (Command::Lo, _) => s(Variable::Delta, 0.1, 32.0, 10, Spacing::Log),
        (Command::Modes, _) | (Command::Convergence, _) => None,
    }
}

fn allowed_variables(cmd: Command) -> &'static [Variable] {
    match cmd {
        Command::Threshold | Command::Lo => &[Variable::Delta],
        Command::Squeeze => &[Variable::Power, Variable::Mode],
        Command::ModeNumber => &[Variable::Power, Variable::Delta, Variable::GammaP],
        Command::Modes | Command::Convergence => &[],
    }
}

struct Resolver<'a> {
    layers: &'a [Layer],
    origins: BTreeMap<&'static str, Origin>,
}

impl<'a> Resolver<'a> {
    fn pick<T: Clone>(&mut self, key: &'static str, get: impl Fn(&FileConfig) -> &Option<Spanned<T>>) -> Option<T> {
        for layer in self.layers.iter().rev() {
            if let Some(v) = get(&layer.cfg) {
                self.origins.insert(key, layer.origin(v.span()));
                return Some(v.get_ref().clone());
            }
        }
        self.origins.insert(key, Origin::Default);
        None
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            origin: self.origins.get(key).cloned().unwrap_or(Origin::Default),
            key: key.to_string(),
            message: message.into(),
        }
    }
}

fn check(ok: bool, r: &Resolver, key: &str, message: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(r.error(key, message()))
    }
}

impl RunConfig {
    /// Merges `layers` (lowest priority first) over the defaults and
    /// validates everything the command will use.
    pub fn resolve(cmd: Command, layers: &[Layer]) -> Result<RunConfig, ConfigError> {
        let mut r = Resolver {
            layers,
            origins: BTreeMap::new(),
        };
        macro_rules! pick {
            ($key:ident) => {
                r.pick(stringify!($key), |c| &c.$key)
            };
        }
        let gamma_i = pick!(gamma_i).unwrap_or(0.125);
        let gamma_c = pick!(gamma_c).unwrap_or(0.875);
        let gamma_p = pick!(gamma_p).unwrap_or(2.0);
        let gamma_pc = pick!(gamma_pc).unwrap_or(gamma_p / 2.0);
        let kappa = pick!(kappa).unwrap_or(1.0);
        let delta = pick!(delta).unwrap_or(2.0 * gamma_p);
        let power_fraction = pick!(power_fraction).unwrap_or(0.99);
        let grid_points = pick!(grid_points).unwrap_or(DEFAULT_GRID_POINTS as i64);
        let grid_span = pick!(grid_span);
        let power_def = pick!(power_def);
        let lo_bandwidth = pick!(lo_bandwidth);
        let delta_lo = pick!(delta_lo);
        let gamma_f = pick!(gamma_f);
        let modes = pick!(modes).unwrap_or(3);
        let sweep_variable = pick!(sweep_variable);
        let sweep_min = pick!(sweep_min);
        let sweep_max = pick!(sweep_max);
        let sweep_count = pick!(sweep_count);
        let sweep_spacing = pick!(sweep_spacing);
        let out = pick!(out);

        let finite = |v: f64| v.is_finite();
        check(finite(gamma_i) && gamma_i >= 0.0, &r, "gamma_i", || format!("must be >= 0, got {gamma_i}"))?;
        check(finite(gamma_c) && gamma_c > 0.0, &r, "gamma_c", || format!("must be > 0, got {gamma_c}"))?;
        check(finite(gamma_p) && gamma_p > 0.0, &r, "gamma_p", || format!("must be > 0, got {gamma_p}"))?;
        check(gamma_pc > 0.0 && gamma_pc <= gamma_p, &r, "gamma_pc", || {
            format!("must lie in (0, gamma_p = {gamma_p}], got {gamma_pc}")
        })?;
        check(finite(kappa) && kappa > 0.0, &r, "kappa", || format!("must be > 0, got {kappa}"))?;
        let params = CavityParams::new(gamma_i, gamma_c, gamma_p, gamma_pc, kappa)
            .map_err(|e| r.error("gamma_i", e.to_string()))?;
        check(finite(delta) && delta > 0.0, &r, "delta", || format!("must be > 0, got {delta}"))?;
        check((0.0..1.0).contains(&power_fraction), &r, "power_fraction", || {
            format!("must lie in [0, 1) so the device stays below threshold, got {power_fraction}")
        })?;
        check(grid_points >= 2, &r, "grid_points", || format!("must be >= 2, got {grid_points}"))?;
        if let Some(span) = grid_span {
            check(finite(span) && span > 0.0, &r, "grid_span", || format!("must be > 0, got {span}"))?;
        }
        let power_def = match power_def {
            None => PowerChoice::One(PowerDefinition::default()),
            Some(s) if s.trim().eq_ignore_ascii_case("both") => PowerChoice::Both,
            Some(s) => PowerChoice::One(s.parse().map_err(|_| {
                r.error("power_def", format!("expected peak, energy or both, got '{s}'"))
            })?),
        };
        let lo_bandwidth = match lo_bandwidth {
            None => LoBandwidth::default(),
            Some(s) => s.parse().map_err(|_| {
                r.error("lo_bandwidth", format!("expected fundamental or pump, got '{s}'"))
            })?,
        };
        if let Some(v) = delta_lo {
            check(finite(v) && v > 0.0, &r, "delta_lo", || format!("must be > 0, got {v}"))?;
        }
        if let Some(v) = gamma_f {
            check(v > 0.0, &r, "gamma_f", || format!("must be > 0, got {v}"))?;
        }
        check(modes >= 1, &r, "modes", || format!("must be >= 1, got {modes}"))?;

        let allowed = allowed_variables(cmd);
        let variable = match &sweep_variable {
            None => None,
            Some(s) => {
                let v = Variable::parse(s).filter(|v| allowed.contains(v));
                let names: Vec<&str> = allowed.iter().map(|v| v.name()).collect();
                Some(v.ok_or_else(|| {
                    if names.is_empty() {
                        r.error("sweep_variable", "this command does not sweep")
                    } else {
                        r.error("sweep_variable", format!("'{s}' not available here (expected {})", names.join(", ")))
                    }
                })?)
            }
        };
        let sweep = match default_sweep(cmd, variable) {
            None => None,
            Some(d) => {
                let min = sweep_min.unwrap_or(d.min);
                let max = sweep_max.unwrap_or(d.max);
                let count = sweep_count.unwrap_or(d.count as i64);
                let spacing = match sweep_spacing {
                    None => d.spacing,
                    Some(s) => s.parse().map_err(|_| {
                        r.error("sweep_spacing", format!("expected linear or log, got '{s}'"))
                    })?,
                };
                check(count >= 1, &r, "sweep_count", || format!("must be >= 1, got {count}"))?;
                check(min.is_finite() && min <= max, &r, "sweep_min", || {
                    format!("must be finite and <= sweep_max = {max}, got {min}")
                })?;
                check(max.is_finite(), &r, "sweep_max", || format!("must be finite, got {max}"))?;
                if spacing == Spacing::Log {
                    check(min > 0.0, &r, "sweep_min", || format!("log spacing needs a positive minimum, got {min}"))?;
                }
                match d.variable {
                    Variable::Power => {
                        check(min >= 0.0, &r, "sweep_min", || format!("power fraction must be >= 0, got {min}"))?;
                        check(max < 1.0, &r, "sweep_max", || {
                            format!("power fraction must stay below threshold (< 1), got {max}")
                        })?;
                    }
                    Variable::Delta | Variable::GammaP => {
                        check(min > 0.0, &r, "sweep_min", || format!("must be > 0, got {min}"))?;
                    }
                    Variable::Mode => {
                        check(min >= 1.0 && min.fract() == 0.0, &r, "sweep_min", || {
                            format!("mode index must be a positive integer, got {min}")
                        })?;
                        check(max.fract() == 0.0 && max <= grid_points as f64, &r, "sweep_max", || {
                            format!("mode index must be an integer <= grid_points, got {max}")
                        })?;
                    }
                }
                Some(SweepSpec {
                    variable: d.variable,
                    min,
                    max,
                    count: count as usize,
                    spacing,
                })
            }
        };
        Ok(RunConfig {
            params,
            delta,
            power_fraction,
            grid_points: grid_points as usize,
            grid_span,
            power_def,
            lo_bandwidth,
            delta_lo,
            gamma_f,
            modes: modes as usize,
            sweep,
            out: out.map(PathBuf::from),
        })
    }

    /// Resolved values as `key = value` lines, readable back as a config.
    pub fn entries(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let num = |v: f64| format!("{v:?}");
        let mut e = vec![
            ("gamma_i".into(), num(p.gamma_i())),
            ("gamma_c".into(), num(p.gamma_c())),
            ("gamma_p".into(), num(p.gamma_p())),
            ("gamma_pc".into(), num(p.gamma_pc())),
            ("kappa".into(), num(p.kappa())),
            ("delta".into(), num(self.delta)),
            ("power_fraction".into(), num(self.power_fraction)),
            ("grid_points".into(), self.grid_points.to_string()),
        ];
        if let Some(span) = self.grid_span {
            e.push(("grid_span".into(), num(span)));
        }
        e.push(("power_def".into(), format!("{:?}", self.power_def.to_string())));
        e.push(("lo_bandwidth".into(), format!("{:?}", self.lo_bandwidth.to_string())));
        if let Some(v) = self.delta_lo {
            e.push(("delta_lo".into(), num(v)));
        }
        if let Some(v) = self.gamma_f {
            e.push(("gamma_f".into(), num(v)));
        }
        e.push(("modes".into(), self.modes.to_string()));
        if let Some(s) = &self.sweep {
            e.push(("sweep_variable".into(), format!("{:?}", s.variable.name())));
            e.push(("sweep_min".into(), num(s.min)));
            e.push(("sweep_max".into(), num(s.max)));
            e.push(("sweep_count".into(), s.count.to_string()));
            e.push(("sweep_spacing".into(), format!("{:?}", s.spacing.to_string())));
        }
        if let Some(out) = &self.out {
            e.push(("out".into(), format!("{:?}", out.display().to_string())));
        }
        e
    }

    pub fn to_toml(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
