//! Experiment configuration files.
//!
//! The format is a flat list of `key = value` lines with dotted section keys
//! (a subset of TOML), for example `process.covariance = "ar1"`. Unknown keys
//! are rejected so that typos never silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::Error;
use crate::models::{
    CovarianceSpec, EvalGrid, LambdaLaw, Marginal, Mixing, PerturbationMode, ProcessSpec, SelectionScheme,
    SelectionSpec,
};

/// A configuration problem, tagged with the offending key when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: Some(field.into()),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        ConfigError {
            field: None,
            message: message.into(),
        }
    }

    /// Converts a model validation error, qualifying its field with `section`.
    pub fn from_model(section: &str, err: Error) -> Self {
        match err {
            Error::InvalidParameter { field, reason } => ConfigError::new(format!("{section}.{field}"), reason),
            Error::UnknownMarginal(name) => {
                ConfigError::new(format!("{section}.marginal"), format!("unknown marginal `{name}`"))
            }
            other => ConfigError::new(section, other.to_string()),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "config error in `{field}`: {}", self.message),
            None => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type ConfigResult<T> = Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormingChoice {
    Auto,
    Quantile,
    Explicit { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DPrimeConfig {
    pub ks: Vec<usize>,
    pub x_level: f64,
    pub replications: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub description: String,
    pub process: ProcessSpec,
    pub selection: SelectionSpec,
    pub mode: PerturbationMode,
    pub n: usize,
    pub replications: u64,
    pub grid: EvalGrid,
    pub seed: Option<u64>,
    pub norming: NormingChoice,
    pub output_dir: Option<PathBuf>,
    pub dprime: Option<DPrimeConfig>,
    pub mixing: Mixing,
}

/// Flattened `dotted.key -> value` view of a parsed document.
struct Fields {
    map: BTreeMap<String, toml::Value>,
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other);
            }
        }
    }
}

impl Fields {
    fn parse(text: &str) -> ConfigResult<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::general(format!("cannot parse config: {}", e.message())))?;
        let mut map = BTreeMap::new();
        flatten("", table, &mut map);
        Ok(Fields { map })
    }

    fn string(&mut self, key: &str) -> ConfigResult<Option<String>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(ConfigError::new(key, format!("expected a string, got {}", other.type_str()))),
        }
    }

    fn float(&mut self, key: &str) -> ConfigResult<Option<f64>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => as_float(key, &v).map(Some),
        }
    }

    fn integer(&mut self, key: &str) -> ConfigResult<Option<u64>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(toml::Value::Integer(i)) => Err(ConfigError::new(key, format!("must be nonnegative, got {i}"))),
            // Allow 4e4-style counts as long as they are whole numbers.
            Some(toml::Value::Float(f)) if f >= 0.0 && f.fract() == 0.0 && f < 9.0e15 => Ok(Some(f as u64)),
            Some(other) => Err(ConfigError::new(key, format!("expected a nonnegative integer, got {other}"))),
        }
    }

    fn float_list(&mut self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => items.iter().map(|v| as_float(key, v)).collect::<ConfigResult<_>>().map(Some),
            Some(other) => Err(ConfigError::new(key, format!("expected an array, got {}", other.type_str()))),
        }
    }

    fn int_list(&mut self, key: &str) -> ConfigResult<Option<Vec<u64>>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                    other => Err(ConfigError::new(key, format!("expected nonnegative integers, got {other}"))),
                })
                .collect::<ConfigResult<_>>()
                .map(Some),
            Some(other) => Err(ConfigError::new(key, format!("expected an array, got {}", other.type_str()))),
        }
    }

    fn finish(self) -> ConfigResult<()> {
        match self.map.keys().next() {
            Some(key) => Err(ConfigError::new(key.clone(), "unknown key")),
            None => Ok(()),
        }
    }
}

fn as_float(key: &str, v: &toml::Value) -> ConfigResult<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(ConfigError::new(key, format!("expected a number, got {other}"))),
    }
}

fn required<T>(key: &str, v: Option<T>) -> ConfigResult<T> {
    v.ok_or_else(|| ConfigError::new(key, "missing required key"))
}

fn parse_covariance(f: &mut Fields) -> ConfigResult<CovarianceSpec> {
    let kind = f.string("process.covariance")?.unwrap_or_else(|| "iid".into());
    Ok(match kind.as_str() {
        "iid" => CovarianceSpec::Iid,
        "ar1" => CovarianceSpec::Ar1 {
            rho: required("process.rho", f.float("process.rho")?)?,
        },
        "power" => CovarianceSpec::PowerDecay {
            gamma: required("process.gamma", f.float("process.gamma")?)?,
            scale: required("process.scale", f.float("process.scale")?)?,
        },
        "mdependent" => {
            let weights = required("process.weights", f.float_list("process.weights")?)?;
            let m = f.integer("process.m")?.map(|m| m as usize).unwrap_or(weights.len().saturating_sub(1));
            CovarianceSpec::MDependent { m, weights }
        }
        "explicit" => CovarianceSpec::Explicit {
            r: required("process.acf", f.float_list("process.acf")?)?,
        },
        other => return Err(ConfigError::new("process.covariance", format!("unknown covariance `{other}`"))),
    })
}

fn parse_process(f: &mut Fields) -> ConfigResult<ProcessSpec> {
    let family = required("process.family", f.string("process.family")?)?;
    let dim = |f: &mut Fields, key: &str| -> ConfigResult<usize> { Ok(required(key, f.integer(key)?)? as usize) };
    Ok(match family.as_str() {
        "gaussian" => ProcessSpec::Gaussian { cov: parse_covariance(f)? },
        "chi" => ProcessSpec::Chi {
            d: dim(f, "process.d")?,
            cov: parse_covariance(f)?,
        },
        "orderstat" => ProcessSpec::OrderStat {
            d: dim(f, "process.d")?,
            r: dim(f, "process.r")?,
            cov: parse_covariance(f)?,
        },
        "iid" => {
            let name = required("process.marginal", f.string("process.marginal")?)?;
            let alpha = f.float("process.alpha")?;
            let support = f.float_list("process.support")?;
            let probs = f.float_list("process.probs")?;
            ProcessSpec::GenericIid {
                marginal: Marginal::from_name(&name, alpha, support, probs).map_err(|e| ConfigError::from_model("process", e))?,
            }
        }
        other => return Err(ConfigError::new("process.family", format!("unknown family `{other}`"))),
    })
}

fn parse_selection(f: &mut Fields) -> ConfigResult<SelectionSpec> {
    let scheme = f.string("selection.scheme")?.unwrap_or_else(|| "iid".into());
    let scheme = match scheme.as_str() {
        "iid" => SelectionScheme::ConditionallyIid,
        "periodic" => {
            let bits = required("selection.pattern", f.int_list("selection.pattern")?)?;
            if bits.iter().any(|b| *b > 1) {
                return Err(ConfigError::new("selection.pattern", "pattern entries must be 0 or 1"));
            }
            SelectionScheme::PeriodicPattern {
                bits: bits.into_iter().map(|b| b == 1).collect(),
            }
        }
        other => return Err(ConfigError::new("selection.scheme", format!("unknown scheme `{other}`"))),
    };
    let law = match f.string("selection.lambda")? {
        Some(kind) => match kind.as_str() {
            "point" => LambdaLaw::PointMass {
                p: required("selection.p", f.float("selection.p")?)?,
            },
            "uniform" => LambdaLaw::Uniform01,
            "beta" => LambdaLaw::Beta {
                alpha: required("selection.alpha", f.float("selection.alpha")?)?,
                beta: required("selection.beta", f.float("selection.beta")?)?,
            },
            "discrete" => LambdaLaw::Discrete {
                values: required("selection.values", f.float_list("selection.values")?)?,
                probs: required("selection.probs", f.float_list("selection.probs")?)?,
            },
            other => return Err(ConfigError::new("selection.lambda", format!("unknown lambda law `{other}`"))),
        },
        // A periodic pattern fixes the rate itself.
        None => match &scheme {
            SelectionScheme::PeriodicPattern { bits } => SelectionSpec::pattern(bits).lambda_law,
            SelectionScheme::ConditionallyIid => return Err(ConfigError::new("selection.lambda", "missing required key")),
        },
    };
    let spec = SelectionSpec { lambda_law: law, scheme };
    spec.validate().map_err(|e| ConfigError::from_model("selection", e))?;
    Ok(spec)
}

fn parse_grid(f: &mut Fields) -> ConfigResult<EvalGrid> {
    let xs = f.float_list("grid.xs")?;
    let ys = f.float_list("grid.ys")?;
    let start = f.float("grid.start")?;
    let stop = f.float("grid.stop")?;
    let step = f.float("grid.step")?;
    let to_cfg = |e| ConfigError::from_model("grid", e);
    match (xs, ys) {
        (Some(xs), Some(ys)) => EvalGrid::new(xs, ys).map_err(to_cfg),
        (Some(axis), None) | (None, Some(axis)) => EvalGrid::new(axis.clone(), axis).map_err(to_cfg),
        (None, None) => EvalGrid::square(start.unwrap_or(-2.0), stop.unwrap_or(3.0), step.unwrap_or(0.5)).map_err(to_cfg),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> ConfigResult<Self> {
        let mut f = Fields::parse(text)?;
        let name = f.string("name")?.unwrap_or_else(|| "experiment".into());
        let description = f.string("description")?.unwrap_or_default();
        let seed = f.integer("seed")?;
        let n = required("n", f.integer("n")?)? as usize;
        if n == 0 {
            return Err(ConfigError::new("n", "must be positive"));
        }
        let replications = required("replications", f.integer("replications")?)?;
        if replications == 0 {
            return Err(ConfigError::new("replications", "must be at least 1"));
        }
        let mode = match f.string("mode")?.as_deref().unwrap_or("replacing") {
            "replacing" => PerturbationMode::Replacing,
            "missing" => PerturbationMode::Missing,
            other => return Err(ConfigError::new("mode", format!("expected `replacing` or `missing`, got `{other}`"))),
        };
        let process = parse_process(&mut f)?;
        let mixing = process.validate(n).map_err(|e| ConfigError::from_model("process", e))?;
        let selection = parse_selection(&mut f)?;
        let grid = parse_grid(&mut f)?;

        let norming = match f.string("norming.kind")?.as_deref().unwrap_or("auto") {
            "auto" => NormingChoice::Auto,
            "quantile" => NormingChoice::Quantile,
            "explicit" => NormingChoice::Explicit {
                a: required("norming.a", f.float("norming.a")?)?,
                b: required("norming.b", f.float("norming.b")?)?,
            },
            other => return Err(ConfigError::new("norming.kind", format!("unknown norming `{other}`"))),
        };
        let output_dir = f.string("output.dir")?.map(PathBuf::from);

        let ks = f.int_list("dprime.ks")?;
        let x_level = f.float("dprime.x_level")?;
        let dprime_reps = f.integer("dprime.replications")?;
        let dprime = match ks {
            Some(ks) => {
                if ks.iter().any(|k| *k < 2) {
                    return Err(ConfigError::new("dprime.ks", "block counts must be at least 2"));
                }
                Some(DPrimeConfig {
                    ks: ks.into_iter().map(|k| k as usize).collect(),
                    x_level: x_level.unwrap_or(0.0),
                    replications: dprime_reps.unwrap_or(replications).max(1),
                })
            }
            None if x_level.is_some() || dprime_reps.is_some() => {
                return Err(ConfigError::new("dprime.ks", "required when other dprime keys are set"))
            }
            None => None,
        };
        f.finish()?;

        Ok(ExperimentConfig {
            name,
            description,
            process,
            selection,
            mode,
            n,
            replications,
            grid,
            seed,
            norming,
            output_dir,
            dprime,
            mixing,
        })
    }
}
