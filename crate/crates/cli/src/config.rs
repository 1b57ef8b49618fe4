//! Flat `key=value` configuration files; command-line flags take precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value, got {line:?}", n + 1)))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Flag value, else config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: Option<T>) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(s) = self.values.get(key) {
            return s
                .parse()
                .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {s:?}")));
        }
        default.ok_or_else(|| CliError::Usage(format!("missing required value for {key}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
    Ppm,
    Svg,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "ppm" => Ok(Format::Ppm),
            "svg" => Ok(Format::Svg),
            _ => Err(format!("unknown format {s:?} (csv, json, ppm, svg)")),
        }
    }
}

/// Comma-separated list of formats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formats(pub Vec<Format>);

impl FromStr for Formats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = s.split(',').filter(|x| !x.trim().is_empty()).map(|x| x.trim().parse()).collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err("empty format list".into());
        }
        Ok(Formats(v))
    }
}

impl Formats {
    pub fn has(&self, f: Format) -> bool {
        self.0.contains(&f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(rename = "B_min")]
    pub b_min: f64,
    #[serde(rename = "B_max")]
    pub b_max: f64,
    #[serde(rename = "A_min")]
    pub a_min: f64,
    #[serde(rename = "A_max")]
    pub a_max: f64,
    #[serde(rename = "nB")]
    pub nb: usize,
    #[serde(rename = "nA")]
    pub na: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub omega: f64,
    pub tol: f64,
    pub tol_boundary: f64,
    pub grid: GridConfig,
    pub method: String,
    pub threads: usize,
    pub cache_dir: Option<PathBuf>,
    pub output: PathBuf,
    pub format: Formats,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(CliError::Usage(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.tol > 0.0) || !(self.tol_boundary > 0.0) {
            return Err(CliError::Usage("tolerances must be positive".into()));
        }
        if self.grid.nb < 2 || self.grid.na < 2 {
            return Err(CliError::Usage(format!("grid needs nB, nA >= 2, got {} x {}", self.grid.nb, self.grid.na)));
        }
        if !(self.grid.b_max > self.grid.b_min && self.grid.a_max > self.grid.a_min) {
            return Err(CliError::Usage("empty grid range".into()));
        }
        if !matches!(self.method.as_str(), "mobius" | "direct") {
            return Err(CliError::Usage(format!("unknown method {:?} (mobius, direct)", self.method)));
        }
        Ok(())
    }
}
