//! Run configuration: flat `key=value` files layered under command-line flags.
//!
//! Keys are the long flag names without the leading dashes. Later layers
//! only fill what earlier ones left open, so resolution is
//! flags > config file > built-in defaults. `eps`/`sqrt-eps` and the strike
//! keys (`k` versus `lmmr-*`) are resolved as groups: the first layer that
//! mentions any key of a group decides the whole group.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use lvsmile_core::black_scholes::MAX_SIGMA_ORDER;
use lvsmile_core::mc::{McConfig, DEFAULT_SEED};
use lvsmile_core::transforms::ContourSpec;
use lvsmile_core::ModelParams;

use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Highest series order accepted for prices and densities.
pub const MAX_PRICE_ORDER: usize = 40;

/// Every key a config file may carry.
pub const KEYS: &[&str] = &[
    "command",
    "tool_version",
    "a",
    "eps",
    "sqrt-eps",
    "beta",
    "y",
    "t",
    "order",
    "k",
    "lmmr-min",
    "lmmr-max",
    "lmmr-count",
    "contour-offset",
    "rel-tol",
    "half-width",
    "paths",
    "dt",
    "seed",
    "antithetic",
    "reference",
    "y-min",
    "y-max",
    "y-step",
];

const LMMR_KEYS: [&str; 3] = ["lmmr-min", "lmmr-max", "lmmr-count"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Price,
    Smile,
    Density,
    Mc,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Price => "price",
            Command::Smile => "smile",
            Command::Density => "density",
            Command::Mc => "mc",
            Command::Check => "check",
        }
    }
}

/// One source of settings, e.g. the flags or a config file.
#[derive(Debug, Clone, Default)]
pub struct Layer {
    source: String,
    values: BTreeMap<String, String>,
}

impl Layer {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            values: BTreeMap::new(),
        }
    }

    /// Parses `key=value` lines. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str, source: impl Into<String>) -> Result<Self, CliError> {
        let mut layer = Layer::new(source);
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    layer.source,
                    no + 1
                )));
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!(
                    "{}:{}: unknown key {key:?}",
                    layer.source,
                    no + 1
                )));
            }
            if layer.values.contains_key(key) {
                return Err(CliError::Config(format!(
                    "{}:{}: duplicate key {key:?}",
                    layer.source,
                    no + 1
                )));
            }
            layer
                .values
                .insert(key.to_string(), value.trim().to_string());
        }
        Ok(layer)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key), "unknown key {key}");
        self.values.insert(key.to_string(), value.into());
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn has_any(&self, keys: &[&str]) -> bool {
        keys.iter().any(|k| self.values.contains_key(*k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrikeSpec {
    /// Explicit log-strikes.
    List(Vec<f64>),
    /// `count` LMMR values evenly spaced on `[min, max]`; `k = y + t * lmmr`.
    Lmmr { min: f64, max: f64, count: usize },
}

impl StrikeSpec {
    pub fn log_strikes(&self, y: f64, t: f64) -> Vec<f64> {
        match self {
            StrikeSpec::List(ks) => ks.clone(),
            StrikeSpec::Lmmr { min, max, count } => lmmr_values(*min, *max, *count)
                .into_iter()
                .map(|l| y + t * l)
                .collect(),
        }
    }
}

pub fn lmmr_values(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    let step = (max - min) / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                max
            } else {
                min + step * i as f64
            }
        })
        .collect()
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    pub t: f64,
    pub order: usize,
    pub strikes: StrikeSpec,
    pub contour_offset: Option<f64>,
    pub rel_tol: f64,
    pub half_width: Option<f64>,
    pub mc: McConfig,
    pub reference: bool,
    pub y_min: f64,
    pub y_max: f64,
    pub y_step: f64,
}

struct Lookup<'a> {
    layers: &'a [Layer],
}

impl<'a> Lookup<'a> {
    fn raw(&self, key: &str) -> Option<(&'a str, &'a str)> {
        self.layers
            .iter()
            .find_map(|l| l.get(key).map(|v| (v, l.source.as_str())))
    }

    fn parse<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, src)) => parse_value(key, v, src),
        }
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|(v, src)| parse_value(key, v, src))
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(false),
            Some(("true", _)) => Ok(true),
            Some(("false", _)) => Ok(false),
            Some((v, src)) => Err(CliError::Config(format!(
                "{src}: {key} must be true or false, got {v:?}"
            ))),
        }
    }

    /// The first layer that sets any of `keys`.
    fn owner(&self, keys: &[&str]) -> Option<&'a Layer> {
        self.layers.iter().find(|l| l.has_any(keys))
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, source: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{source}: cannot parse {key}={value:?}")))
}

fn parse_f64(key: &str, value: &str, source: &str) -> Result<f64, CliError> {
    let v: f64 = parse_value(key, value, source)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{source}: {key} must be finite")))
    }
}

impl RunConfig {
    /// Resolves `layers` (highest precedence first) over the defaults.
    pub fn resolve(command: Command, layers: &[Layer]) -> Result<Self, CliError> {
        let look = Lookup { layers };
        let cfg_err = |msg: String| CliError::Config(msg);

        if let Some((named, src)) = look.raw("command") {
            if named != command.name() {
                return Err(cfg_err(format!(
                    "{src}: written for command {named:?}, not {:?}",
                    command.name()
                )));
            }
        }

        let a = look.parse("a", 0.25)?;
        let beta = look.parse("beta", -0.75)?;
        let y = look.parse("y", 0.0)?;
        let t: f64 = look.parse("t", 1.0)?;
        let eps = match look.owner(&["eps", "sqrt-eps"]) {
            None => 0.15 * 0.15,
            Some(layer) => match (layer.get("eps"), layer.get("sqrt-eps")) {
                (Some(_), Some(_)) => {
                    return Err(cfg_err(format!(
                        "{}: give exactly one of eps and sqrt-eps",
                        layer.source
                    )));
                }
                (Some(e), None) => parse_f64("eps", e, &layer.source)?,
                (None, Some(s)) => {
                    let s = parse_f64("sqrt-eps", s, &layer.source)?;
                    if s < 0.0 {
                        return Err(cfg_err(format!(
                            "{}: sqrt-eps must be non-negative",
                            layer.source
                        )));
                    }
                    s * s
                }
                (None, None) => unreachable!("owner sets one of the keys"),
            },
        };
        let params = ModelParams::new(a, eps, beta, y).map_err(|e| cfg_err(e.to_string()))?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(cfg_err("maturity t must be positive".into()));
        }

        // smiles stop at the highest order with hand-checked coefficients
        let (default_order, cap) = if command == Command::Smile {
            (MAX_SIGMA_ORDER, MAX_SIGMA_ORDER)
        } else {
            (10, MAX_PRICE_ORDER)
        };
        let order: usize = look.parse("order", default_order)?;
        if order > cap {
            return Err(cfg_err(format!(
                "order {order} exceeds the maximum {cap} for {}",
                command.name()
            )));
        }

        let strikes = resolve_strikes(&look)?;

        let contour_offset = look.optional::<f64>("contour-offset")?;
        let rel_tol = look.parse("rel-tol", ContourSpec::call().rel_tol)?;
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(cfg_err("rel-tol must lie in (0, 1)".into()));
        }
        let half_width = look.optional::<f64>("half-width")?;
        if let Some(w) = half_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(cfg_err("half-width must be positive".into()));
            }
        }

        let defaults = McConfig::default();
        let mc = McConfig {
            n_paths: look.parse("paths", defaults.n_paths)?,
            dt: look.parse("dt", defaults.dt)?,
            seed: look.parse("seed", DEFAULT_SEED)?,
            antithetic: look.flag("antithetic")?,
        };
        if command == Command::Mc {
            mc.validate(t).map_err(|e| cfg_err(e.to_string()))?;
        }
        let reference = look.flag("reference")?;

        let y_min = look.parse("y-min", -2.5)?;
        let y_max = look.parse("y-max", 2.5)?;
        let y_step: f64 = look.parse("y-step", 0.01)?;
        if !(y_step > 0.0 && y_min < y_max) {
            return Err(cfg_err(
                "density grid needs y-min < y-max and y-step > 0".into(),
            ));
        }

        let cfg = RunConfig {
            command,
            params,
            t,
            order,
            strikes,
            contour_offset,
            rel_tol,
            half_width,
            mc,
            reference,
            y_min,
            y_max,
            y_step,
        };
        cfg.contour()
            .validate(&cfg.sample_payoff())
            .map_err(|e| cfg_err(e.to_string()))?;
        Ok(cfg)
    }

    fn sample_payoff(&self) -> lvsmile_core::transforms::Payoff {
        use lvsmile_core::transforms::Payoff;
        match self.command {
            Command::Density => Payoff::Dirac { y_target: 0.0 },
            _ => Payoff::Call { k: 0.0 },
        }
    }

    /// Contour for the command's payoff with the quadrature overrides applied.
    pub fn contour(&self) -> ContourSpec {
        let base = match self.command {
            Command::Density => ContourSpec::density(),
            _ => ContourSpec::call(),
        };
        let base = ContourSpec {
            rel_tol: self.rel_tol,
            half_width: self.half_width,
            ..base
        };
        match self.contour_offset {
            Some(c) => base.with_offset(c),
            None => base,
        }
    }

    pub fn log_strikes(&self) -> Vec<f64> {
        self.strikes.log_strikes(self.params.y(), self.t)
    }

    pub fn y_grid(&self) -> Vec<f64> {
        let n = ((self.y_max - self.y_min) / self.y_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| self.y_min + self.y_step * i as f64)
            .collect()
    }

    /// Every resolved value as a config file; feeding it back with
    /// `--config` reproduces the run.
    pub fn manifest(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        line("tool_version", TOOL_VERSION.to_string());
        line("command", self.command.name().to_string());
        line("a", format!("{:?}", p.a()));
        line("eps", format!("{:?}", p.eps()));
        line("beta", format!("{:?}", p.beta()));
        line("y", format!("{:?}", p.y()));
        line("t", format!("{:?}", self.t));
        line("order", self.order.to_string());
        match &self.strikes {
            StrikeSpec::List(ks) => {
                line(
                    "k",
                    ks.iter()
                        .map(|k| format!("{k:?}"))
                        .collect::<Vec<_>>()
                        .join(","),
                );
            }
            StrikeSpec::Lmmr { min, max, count } => {
                line("lmmr-min", format!("{min:?}"));
                line("lmmr-max", format!("{max:?}"));
                line("lmmr-count", count.to_string());
            }
        }
        if let Some(c) = self.contour_offset {
            line("contour-offset", format!("{c:?}"));
        }
        line("rel-tol", format!("{:?}", self.rel_tol));
        if let Some(w) = self.half_width {
            line("half-width", format!("{w:?}"));
        }
        line("paths", self.mc.n_paths.to_string());
        line("dt", format!("{:?}", self.mc.dt));
        line("seed", self.mc.seed.to_string());
        line("antithetic", self.mc.antithetic.to_string());
        line("reference", self.reference.to_string());
        line("y-min", format!("{:?}", self.y_min));
        line("y-max", format!("{:?}", self.y_max));
        line("y-step", format!("{:?}", self.y_step));
        s
    }
}

fn resolve_strikes(look: &Lookup<'_>) -> Result<StrikeSpec, CliError> {
    let Some(layer) = look.owner(&["k", "lmmr-min", "lmmr-max", "lmmr-count"]) else {
        return Ok(StrikeSpec::Lmmr {
            min: -1.0,
            max: 1.0,
            count: 21,
        });
    };
    let src = layer.source.as_str();
    if let Some(list) = layer.get("k") {
        if layer.has_any(&LMMR_KEYS) {
            return Err(CliError::Config(format!(
                "{src}: give either k or an lmmr range, not both"
            )));
        }
        let ks = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_f64("k", s, src))
            .collect::<Result<Vec<f64>, _>>()?;
        if ks.is_empty() {
            return Err(CliError::Config(format!("{src}: strike list is empty")));
        }
        return Ok(StrikeSpec::List(ks));
    }
    let min = layer
        .get("lmmr-min")
        .map_or(Ok(-1.0), |v| parse_f64("lmmr-min", v, src))?;
    let max = layer
        .get("lmmr-max")
        .map_or(Ok(1.0), |v| parse_f64("lmmr-max", v, src))?;
    let count = layer
        .get("lmmr-count")
        .map_or(Ok(21), |v| parse_value::<usize>("lmmr-count", v, src))?;
    if count == 0 {
        return Err(CliError::Config(format!(
            "{src}: lmmr-count must be at least 1"
        )));
    }
    if min > max || (count == 1 && min != max) {
        return Err(CliError::Config(format!(
            "{src}: lmmr range needs min <= max (and min = max for a single point)"
        )));
    }
    Ok(StrikeSpec::Lmmr { min, max, count })
}
