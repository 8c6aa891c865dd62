use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::MeasureMode;
use crate::params::{parse_rational, ModelParams};
use crate::symcore::GaussRat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("line {0}: expected key=value")]
    Syntax(usize),
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("cannot read config file: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Geometry,
    Algebra,
    Operators,
    Spectrum,
    Gram,
    Adjoint,
    Hproj,
}

impl Suite {
    /// Dependency order.
    pub const ALL: [Suite; 7] =
        [Suite::Geometry, Suite::Algebra, Suite::Operators, Suite::Spectrum, Suite::Gram, Suite::Adjoint, Suite::Hproj];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Algebra => "algebra",
            Suite::Operators => "operators",
            Suite::Spectrum => "spectrum",
            Suite::Gram => "gram",
            Suite::Adjoint => "adjoint",
            Suite::Hproj => "hproj",
        }
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL.into_iter().find(|x| x.name() == s.trim()).ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" | "txt" => Ok(Format::Text),
            o => Err(format!("unknown format `{o}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum HprojAction {
    Flatness,
    Residual,
    Classify,
    Curve,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: Arc<ModelParams>,
    pub cutoff: usize,
    pub measure: MeasureMode,
    pub tol: f64,
    pub quad_rel_tol: f64,
    pub seed: u64,
    pub samples: usize,
    pub suites: Vec<Suite>,
    pub hproj_actions: Vec<HprojAction>,
    pub point: Option<Vec<GaussRat>>,
    pub curve_input: Option<PathBuf>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub timing: bool,
}

pub const KEYS: [&str; 16] = [
    "n", "k", "hbar", "cutoff", "measure", "tol", "quad_tol", "seed", "samples", "suites", "hproj", "point", "input",
    "format", "out", "timing",
];

/// `key=value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
        let k = k.trim().trim_start_matches("--").replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey(k));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn invalid(key: &str, msg: impl ToString) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), msg: msg.to_string() }
}

fn get<T: FromStr>(m: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, ConfigError>
where
    T::Err: ToString,
{
    match m.get(key) {
        Some(v) => v.parse().map_err(|e: T::Err| invalid(key, e)),
        None => Ok(default),
    }
}

pub fn parse_point(s: &str) -> Result<Vec<GaussRat>, ConfigError> {
    s.split(',').map(|t| t.trim().parse::<GaussRat>().map_err(|e| invalid("point", e))).collect()
}

impl RunConfig {
    /// Validates every field before anything runs.
    pub fn from_map(m: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        for k in m.keys() {
            if !KEYS.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
        }
        let n: usize = get(m, "n", 1)?;
        let k = parse_rational(m.get("k").map_or("-4", String::as_str)).map_err(|e| invalid("k", e))?;
        let hbar = parse_rational(m.get("hbar").map_or("1", String::as_str)).map_err(|e| invalid("hbar", e))?;
        let params = ModelParams::new(n, k, hbar).map_err(|e| invalid("n/k/hbar", e))?.shared();
        let cutoff: usize = get(m, "cutoff", 5)?;
        let measure = match m.get("measure") {
            Some(v) => v.parse::<MeasureMode>().map_err(|e| invalid("measure", e))?,
            None => MeasureMode::AdjointCorrected,
        };
        let tol: f64 = get(m, "tol", 1e-6)?;
        let quad_rel_tol: f64 = get(m, "quad_tol", 1e-10)?;
        if [tol, quad_rel_tol].iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(invalid("tol", "tolerances must be positive"));
        }
        let seed: u64 = get(m, "seed", 0)?;
        let samples: usize = get(m, "samples", 8)?;
        let mut suites: Vec<Suite> = match m.get("suites").map(|s| s.trim()) {
            None | Some("") | Some("none") => Vec::new(),
            Some("all") => Suite::ALL.to_vec(),
            Some(list) => list.split(',').map(|s| s.parse::<Suite>().map_err(|e| invalid("suites", e))).collect::<Result<_, _>>()?,
        };
        suites.sort();
        suites.dedup();
        let point = m.get("point").map(|s| parse_point(s)).transpose()?;
        if let Some(p) = &point {
            if p.len() != n {
                return Err(invalid("point", format!("expected {n} coordinates")));
            }
        }
        let curve_input = m.get("input").map(PathBuf::from);
        let mut hproj_actions: Vec<HprojAction> = match m.get("hproj").map(|s| s.trim()) {
            None | Some("all") => {
                let mut v = vec![HprojAction::Flatness, HprojAction::Residual];
                if n == 2 {
                    v.push(HprojAction::Classify);
                }
                if curve_input.is_some() {
                    v.push(HprojAction::Curve);
                }
                v
            }
            Some("flatness") => vec![HprojAction::Flatness],
            Some("residual") => vec![HprojAction::Residual],
            Some("classify") => vec![HprojAction::Classify],
            Some("curve") => vec![HprojAction::Curve],
            Some(o) => return Err(invalid("hproj", format!("unknown action `{o}`"))),
        };
        hproj_actions.sort();
        if hproj_actions.contains(&HprojAction::Classify) && n != 2 && suites.contains(&Suite::Hproj) {
            return Err(invalid("hproj", "classify needs n = 2"));
        }
        if hproj_actions.contains(&HprojAction::Curve) && curve_input.is_none() {
            return Err(invalid("input", "curve needs an input file"));
        }
        let format: Format = get(m, "format", Format::Json)?;
        let out = m.get("out").map(PathBuf::from);
        let timing: bool = get(m, "timing", false)?;
        Ok(RunConfig {
            params,
            cutoff,
            measure,
            tol,
            quad_rel_tol,
            seed,
            samples,
            suites,
            hproj_actions,
            point,
            curve_input,
            format,
            out,
            timing,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_and_validation() {
        let m = parse_config_text("# run\nn = 2\nk=-1/2\nsuites=algebra,spectrum\n").unwrap();
        let c = RunConfig::from_map(&m).unwrap();
        assert_eq!(c.params.n(), 2);
        assert_eq!(c.suites, vec![Suite::Algebra, Suite::Spectrum]);
        assert!(parse_config_text("bogus=1").is_err());
        assert!(parse_config_text("n").is_err());
        let mut bad = m.clone();
        bad.insert("hbar".into(), "-1".into());
        assert!(RunConfig::from_map(&bad).is_err());
        bad.insert("hbar".into(), "1".into());
        bad.insert("point".into(), "1/2".into());
        assert!(RunConfig::from_map(&bad).is_err());
    }
}
