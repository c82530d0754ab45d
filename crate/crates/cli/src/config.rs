//! Experiment configuration files.
//!
//! A config is a TOML document with `[domain]`, `[potential]`, `[schedule]`
//! and `[losses]` sections plus top-level run settings. An optional `[sweep]`
//! table maps dotted keys to lists of values; the cross product of those
//! lists expands one file into several runs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use dualavg_core::{
    Error as CoreError, GridDomain, LossFamily, LossSpec, Potential, Schedule, Shape,
};
use serde::Deserialize;
use toml::{Table, Value};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_OUTPUT: &str = "out";

const SHAPES: [&str; 6] = ["interval", "box", "ball", "union", "mask", "cells"];

/// A configuration problem, reported with the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    horizon: usize,
    tolerance: Option<f64>,
    output: Option<String>,
    fit_window: Option<[f64; 2]>,
    sample_seed: Option<u64>,
    domain: Table,
    potential: Table,
    schedule: Table,
    losses: Table,
    bound: Option<Table>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialSection {
    kind: String,
    p: Option<f64>,
    omega: Option<f64>,
    growth_eps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleSection {
    kind: String,
    theta: Option<f64>,
    alpha: Option<f64>,
    nu_log: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossesSection {
    family: String,
    lipschitz: f64,
    bound: f64,
    #[serde(default)]
    seed: u64,
    path: Option<Vec<Vec<f64>>>,
    dwell: Option<usize>,
    center: Option<Vec<f64>>,
    k: Option<usize>,
}

/// Constants pinned for bound evaluation instead of the measured ones.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub lipschitz: Option<f64>,
    pub dual_bound: Option<f64>,
}

/// One fully validated run.
#[derive(Debug, Clone)]
pub struct Experiment {
    /// Sweep assignments that produced this run, as `key=value` strings.
    pub label: Vec<String>,
    pub domain: Arc<GridDomain>,
    pub potential: Potential,
    pub schedule: Schedule,
    pub losses: LossSpec,
    pub horizon: usize,
    pub tolerance: f64,
    pub output: PathBuf,
    pub fit_window: (f64, f64),
    pub sample_seed: Option<u64>,
    pub pins: Option<BoundSection>,
    /// The run's own config, without the sweep table.
    pub echo: String,
}

impl Experiment {
    /// Directory name for this run inside a sweep.
    pub fn run_id(&self) -> String {
        if self.label.is_empty() {
            return "run".to_string();
        }
        self.label
            .iter()
            .map(|s| {
                s.chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
                    .collect::<String>()
            })
            .collect::<Vec<_>>()
            .join("__")
    }
}

/// Reads and expands a config file.
pub fn load(path: &Path) -> anyhow::Result<Vec<Experiment>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    Ok(parse(&text)?)
}

/// Parses a config document into its runs.
pub fn parse(text: &str) -> Result<Vec<Experiment>> {
    let mut doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::new(error_key(&e), e.message().trim().to_string()))?;
    let sweep = match doc.remove("sweep") {
        None => Vec::new(),
        Some(Value::Table(t)) => sweep_axes(t)?,
        Some(_) => return Err(ConfigError::new("sweep", "must be a table of key = [values]")),
    };

    let mut runs = Vec::new();
    for assignment in cross_product(&sweep) {
        let mut variant = doc.clone();
        let mut label = Vec::new();
        for (key, value) in &assignment {
            set_dotted(&mut variant, key, value.clone())?;
            label.push(format!("{key}={}", render_value(value)));
        }
        runs.push(build(variant, label)?);
    }
    Ok(runs)
}

fn sweep_axes(table: Table) -> Result<Vec<(String, Vec<Value>)>> {
    table
        .into_iter()
        .map(|(key, value)| match value {
            Value::Array(values) if !values.is_empty() => Ok((key, values)),
            _ => Err(ConfigError::new(
                format!("sweep.{key}"),
                "must be a nonempty list of values",
            )),
        })
        .collect()
}

fn cross_product(axes: &[(String, Vec<Value>)]) -> Vec<Vec<(String, Value)>> {
    let mut out: Vec<Vec<(String, Value)>> = vec![Vec::new()];
    for (key, values) in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((key.clone(), v.clone()));
                    next
                })
            })
            .collect();
    }
    out
}

fn set_dotted(doc: &mut Table, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, sections) = parts.split_last().expect("split yields one part");
    let mut table = doc;
    for part in sections {
        table = match table.get_mut(*part) {
            Some(Value::Table(t)) => t,
            _ => {
                return Err(ConfigError::new(
                    format!("sweep.{key}"),
                    format!("`{part}` is not a section of the config"),
                ))
            }
        };
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Best-effort key for a deserialization error.
fn error_key(e: &toml::de::Error) -> String {
    let msg = e.message();
    for marker in ["unknown field `", "missing field `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    "<document>".to_string()
}

fn section<T: for<'de> Deserialize<'de>>(value: Value, name: &str) -> Result<T> {
    T::deserialize(value).map_err(|e| {
        let key = error_key(&e);
        let key = if key == "<document>" { name.to_string() } else { format!("{name}.{key}") };
        ConfigError::new(key, e.message().trim().to_string())
    })
}

fn core_error(section: &str, e: CoreError) -> ConfigError {
    match e {
        CoreError::Parameter { name, reason } => ConfigError::new(format!("{section}.{name}"), reason),
        other => ConfigError::new(section, other.to_string()),
    }
}

fn build(doc: Table, label: Vec<String>) -> Result<Experiment> {
    let echo = toml::to_string(&doc).map_err(|e| ConfigError::new("<document>", e.to_string()))?;
    let raw: RawConfig = section(Value::Table(doc), "config").map_err(|mut e| {
        e.key = e.key.trim_start_matches("config.").to_string();
        e
    })?;

    if raw.horizon == 0 {
        return Err(ConfigError::new("horizon", "must be at least 1"));
    }
    let tolerance = raw.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(ConfigError::new("tolerance", format!("{tolerance} is outside (0, 1)")));
    }

    let domain = build_domain(raw.domain)?;
    let potential = build_potential(&section(Value::Table(raw.potential), "potential")?)?;
    let schedule = build_schedule(&section(Value::Table(raw.schedule), "schedule")?)?;
    let losses = build_losses(&section(Value::Table(raw.losses), "losses")?)?;
    let pins: Option<BoundSection> = raw
        .bound
        .map(|t| section(Value::Table(t), "bound"))
        .transpose()?;
    losses
        .validate(domain.dimension())
        .map_err(|e| core_error("losses", e))?;

    let fit_window = match raw.fit_window {
        Some([lo, hi]) => {
            if !(lo >= 1.0 && hi > lo) {
                return Err(ConfigError::new("fit_window", format!("[{lo}, {hi}] is not an increasing range in t >= 1")));
            }
            (lo, hi)
        }
        None => ((raw.horizon as f64 / 100.0).max(1.0), raw.horizon as f64),
    };
    if let Some(pins) = pins {
        for (key, v) in [("bound.lipschitz", pins.lipschitz), ("bound.dual_bound", pins.dual_bound)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ConfigError::new(key, format!("{v} must be positive")));
                }
            }
        }
    }

    Ok(Experiment {
        label,
        domain: Arc::new(domain),
        potential,
        schedule,
        losses,
        horizon: raw.horizon,
        tolerance,
        output: PathBuf::from(raw.output.unwrap_or_else(|| DEFAULT_OUTPUT.to_string())),
        fit_window,
        sample_seed: raw.sample_seed,
        pins,
        echo,
    })
}

fn build_domain(mut table: Table) -> Result<GridDomain> {
    let resolution = match table.remove("resolution") {
        None => 0,
        Some(Value::Integer(r)) if r >= 0 => r as usize,
        Some(_) => return Err(ConfigError::new("domain.resolution", "must be a nonnegative integer")),
    };
    let fatness = match table.remove("fatness") {
        None => None,
        Some(Value::Float(v)) => Some(v),
        Some(Value::Integer(v)) => Some(v as f64),
        Some(_) => return Err(ConfigError::new("domain.fatness", "must be a number")),
    };
    match table.get("shape") {
        Some(Value::String(s)) if SHAPES.contains(&s.as_str()) => {}
        Some(Value::String(s)) => {
            return Err(ConfigError::new(
                "domain.shape",
                format!("unknown shape `{s}`, expected one of {}", SHAPES.join(", ")),
            ))
        }
        _ => return Err(ConfigError::new("domain.shape", "missing or not a string")),
    }
    let shape: Shape = section(Value::Table(table), "domain")?;
    if !matches!(shape, Shape::Cells { .. }) && resolution == 0 {
        return Err(ConfigError::new("domain.resolution", "required for this shape"));
    }
    let mut domain = GridDomain::build(shape, resolution).map_err(|e| core_error("domain", e))?;
    if let Some(v) = fatness {
        domain = domain.with_fatness(v).map_err(|e| core_error("domain", e))?;
    }
    Ok(domain)
}

fn require<T: Copy>(v: Option<T>, key: &str, why: &str) -> Result<T> {
    v.ok_or_else(|| ConfigError::new(key, format!("required {why}")))
}

fn build_potential(s: &PotentialSection) -> Result<Potential> {
    let pot = match s.kind.as_str() {
        "identity" => Potential::identity(),
        "pnorm" | "p_norm" => {
            Potential::p_norm(require(s.p, "potential.p", "for kind = \"pnorm\"")?)
                .map_err(|e| core_error("potential", e))?
        }
        "entropy" => {
            let omega = s.omega.unwrap_or(0.0);
            match s.growth_eps {
                Some(eps) => Potential::entropy_with_growth(omega, eps),
                None => Potential::entropy(omega),
            }
            .map_err(|e| core_error("potential", e))?
        }
        other => {
            return Err(ConfigError::new(
                "potential.kind",
                format!("unknown kind `{other}`, expected identity, pnorm or entropy"),
            ))
        }
    };
    Ok(pot)
}

fn build_schedule(s: &ScheduleSection) -> Result<Schedule> {
    let theta = s.theta.unwrap_or(1.0);
    let why = format!("for kind = \"{}\"", s.kind);
    let schedule = match s.kind.as_str() {
        "power" => Schedule::power(theta, require(s.alpha, "schedule.alpha", &why)?),
        "log_power" => Schedule::log_power(
            theta,
            require(s.alpha, "schedule.alpha", &why)?,
            require(s.nu_log, "schedule.nu_log", &why)?,
        ),
        "shifted_log_power" => Schedule::shifted_log_power(
            theta,
            require(s.alpha, "schedule.alpha", &why)?,
            require(s.nu_log, "schedule.nu_log", &why)?,
        ),
        "constant" => Schedule::constant(theta),
        other => {
            return Err(ConfigError::new(
                "schedule.kind",
                format!("unknown kind `{other}`, expected power, log_power, shifted_log_power or constant"),
            ))
        }
    };
    schedule.map_err(|e| core_error("schedule", e))
}

fn build_losses(s: &LossesSection) -> Result<LossSpec> {
    let family = match s.family.as_str() {
        "moving_cone" => LossFamily::MovingCone {
            path: s
                .path
                .clone()
                .ok_or_else(|| ConfigError::new("losses.path", "required for moving_cone"))?,
            dwell: s.dwell.unwrap_or(1),
        },
        "fixed_cone" => LossFamily::FixedCone {
            center: s
                .center
                .clone()
                .ok_or_else(|| ConfigError::new("losses.center", "required for fixed_cone"))?,
        },
        "random_cone_mix" => LossFamily::RandomConeMix {
            k: require(s.k, "losses.k", "for random_cone_mix")?,
        },
        "adaptive_adversary" => LossFamily::AdaptiveAdversary,
        other => {
            return Err(ConfigError::new(
                "losses.family",
                format!("unknown family `{other}`, expected moving_cone, fixed_cone, random_cone_mix or adaptive_adversary"),
            ))
        }
    };
    Ok(LossSpec {
        family,
        lipschitz: s.lipschitz,
        bound: s.bound,
        seed: s.seed,
    })
}
