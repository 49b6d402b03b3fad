//! Run configuration: a JSON file, then command-line flags on top.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoName {
    Borel,
    Hierarchical,
    Misfit,
    TransdimUniform,
    TransdimGaussian,
    Fig7,
    Units,
}

impl DemoName {
    pub const ALL: [DemoName; 7] = [
        DemoName::Borel,
        DemoName::Hierarchical,
        DemoName::Misfit,
        DemoName::TransdimUniform,
        DemoName::TransdimGaussian,
        DemoName::Fig7,
        DemoName::Units,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DemoName::Borel => "borel",
            DemoName::Hierarchical => "hierarchical",
            DemoName::Misfit => "misfit",
            DemoName::TransdimUniform => "transdim-uniform",
            DemoName::TransdimGaussian => "transdim-gaussian",
            DemoName::Fig7 => "fig7",
            DemoName::Units => "units",
        }
    }
}

impl fmt::Display for DemoName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DemoName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|d| d.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|d| d.as_str()).collect();
            CliError::Config(format!("unknown demo '{s}' (expected one of: {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::Config(format!(
                "unknown format '{other}' (expected json or csv)"
            ))),
        }
    }
}

pub fn parse_formats(s: &str) -> Result<Vec<Format>> {
    let mut out: Vec<Format> = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let f = part.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("empty --format list".into()));
    }
    Ok(out)
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub demo: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Vec<Format>>,
    pub params: Value,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CliError::MalformedJson {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub demo: DemoName,
    /// Demo parameters from the config file; flags are applied later.
    pub params: Value,
    pub out: PathBuf,
    pub seed: u64,
    pub formats: Vec<Format>,
}

/// Values given on the command line, which win over the file.
#[derive(Debug, Clone, Default)]
pub struct CommonFlags {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<String>,
}

impl RunConfig {
    pub fn resolve(demo: DemoName, flags: &CommonFlags) -> Result<Self> {
        let file = FileConfig::load_optional(flags.config.as_deref())?;
        if let Some(name) = &file.demo {
            let from_file: DemoName = name.parse()?;
            if from_file != demo {
                return Err(CliError::Config(format!(
                    "config file is for demo '{from_file}' but '{demo}' was requested"
                )));
            }
        }
        let formats = match &flags.format {
            Some(s) => parse_formats(s)?,
            None => file.format.clone().unwrap_or_else(|| vec![Format::Json, Format::Csv]),
        };
        if formats.is_empty() {
            return Err(CliError::Config("empty format list".into()));
        }
        Ok(Self {
            demo,
            params: file.params,
            out: flags
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| Path::new("bpl-out").join(demo.as_str())),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            formats,
        })
    }
}

/// Deserialize demo parameters, treating an absent block as all defaults.
pub fn typed_params<T: for<'de> Deserialize<'de> + Default>(v: &Value) -> Result<T> {
    if v.is_null() {
        return Ok(T::default());
    }
    T::deserialize(v).map_err(CliError::Params)
}

/// Evenly spaced grid written as `min:max:n` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max && self.n >= 2) {
            return Err(CliError::Config(format!(
                "{name}: need min < max and n >= 2, got {}:{}:{}",
                self.min, self.max, self.n
            )));
        }
        Ok(())
    }
}

impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::Config(format!("grid '{s}' is not of the form min:max:n"));
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(bad());
        };
        Ok(Self {
            min: a.trim().parse().map_err(|_| bad())?,
            max: b.trim().parse().map_err(|_| bad())?,
            n: n.trim().parse().map_err(|_| bad())?,
        })
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("'{p}' is not a number")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_names_round_trip() {
        for d in DemoName::ALL {
            assert_eq!(d.as_str().parse::<DemoName>().unwrap(), d);
            assert_eq!(serde_json::to_value(d).unwrap(), Value::String(d.as_str().into()));
        }
        let err = "fig8".parse::<DemoName>().unwrap_err().to_string();
        assert!(err.contains("unknown demo") && err.contains("transdim-uniform"));
    }

    #[test]
    fn formats() {
        assert_eq!(parse_formats("json,csv").unwrap(), vec![Format::Json, Format::Csv]);
        assert_eq!(parse_formats("csv,csv").unwrap(), vec![Format::Csv]);
        assert!(parse_formats("xml").is_err());
        assert!(parse_formats("").is_err());
    }

    #[test]
    fn grids() {
        let g: GridSpec = "0.1:3:60".parse().unwrap();
        assert_eq!(
            g,
            GridSpec {
                min: 0.1,
                max: 3.0,
                n: 60
            }
        );
        assert!("0.1:3".parse::<GridSpec>().is_err());
        assert!(GridSpec {
            min: 1.0,
            max: 0.0,
            n: 3
        }
        .validate("g")
        .is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("2, 5,8").unwrap(), vec![2.0, 5.0, 8.0]);
        assert!(parse_list("2,x").is_err());
    }

    #[test]
    fn null_params_are_defaults() {
        #[derive(Deserialize, Default, PartialEq, Debug)]
        #[serde(default)]
        struct P {
            a: u32,
        }
        assert_eq!(typed_params::<P>(&Value::Null).unwrap(), P::default());
        assert_eq!(typed_params::<P>(&serde_json::json!({"a": 3})).unwrap(), P { a: 3 });
    }
}
