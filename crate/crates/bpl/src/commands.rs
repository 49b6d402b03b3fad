//! The two subcommands, independent of argument parsing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use bpl_core::verify::{run_suite, Level, VerifyOptions};

use crate::config::{parse_formats, typed_params, CommonFlags, DemoName, FileConfig, Format, RunConfig, DEFAULT_SEED};
use crate::demos::{run_demo, DemoOutput, Overrides};
use crate::error::{CliError, Result};
use crate::output::{unix_seconds, write_outputs, Report, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNVERIFIED: i32 = 2;

/// What a finished command hands back to `main`.
#[derive(Debug)]
pub struct Outcome {
    pub verified: bool,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.verified {
            EXIT_OK
        } else {
            EXIT_UNVERIFIED
        }
    }
}

pub fn demo(name: &str, flags: &CommonFlags, overrides: &Overrides) -> Result<Outcome> {
    let demo: DemoName = name.parse()?;
    let started = unix_seconds();
    let cfg = RunConfig::resolve(demo, flags)?;
    let DemoOutput {
        config,
        result,
        formulas,
        failures,
        tables,
        notes,
    } = run_demo(&cfg, overrides)?;
    let report = Report {
        demo: demo.as_str().into(),
        seed: cfg.seed,
        config,
        formulas,
        verified: failures.is_empty(),
        failures: failures.clone(),
        result,
    };
    let files = write_outputs(&cfg.out, &cfg.formats, &report, &tables, started)?;
    Ok(Outcome {
        verified: report.verified,
        failures,
        notes,
        files,
    })
}

/// `params` block accepted by `verify --config`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub mc_points: Option<usize>,
    pub chain_steps: Option<usize>,
}

pub fn verify(level: Level, flags: &CommonFlags, corrupt_constant: Option<f64>) -> Result<Outcome> {
    let started = unix_seconds();
    let file = FileConfig::load_optional(flags.config.as_deref())?;
    if let Some(d) = &file.demo {
        return Err(CliError::Config(format!(
            "config names demo '{d}' but the verify command was run"
        )));
    }
    let p: VerifyParams = typed_params(&file.params)?;
    let mut opts = VerifyOptions::new(level);
    opts.seed = flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    if let Some(n) = p.mc_points {
        opts.mc_points = n;
    }
    if let Some(n) = p.chain_steps {
        opts.chain_steps = n;
    }
    opts.corrupt_constant = corrupt_constant;
    let formats = match &flags.format {
        Some(s) => parse_formats(s)?,
        None => file.format.clone().unwrap_or_else(|| vec![Format::Json, Format::Csv]),
    };
    let out = flags
        .out
        .clone()
        .or(file.out)
        .unwrap_or_else(|| Path::new("bpl-out").join("verify"));

    let suite = run_suite(&opts)?;
    let failures: Vec<String> = suite
        .failures()
        .map(|c| {
            format!(
                "{} ({}): computed {} vs reference {} (tolerance {:e})",
                c.name, c.route, c.computed, c.reference, c.tolerance
            )
        })
        .collect();
    let mut table = Table::new(
        "checks",
        &[
            "name",
            "route",
            "reference",
            "computed",
            "tolerance",
            "spread",
            "passed",
        ],
    );
    for c in &suite.checks {
        table.push(vec![
            c.name.as_str().into(),
            c.route.as_str().into(),
            c.reference.into(),
            c.computed.into(),
            c.tolerance.into(),
            c.spread.into(),
            c.passed.into(),
        ]);
    }
    let report = Report {
        demo: "verify".into(),
        seed: opts.seed,
        config: serde_json::to_value(opts).expect("options serialize"),
        formulas: Vec::new(),
        verified: suite.passed,
        failures: failures.clone(),
        result: json!({ "checks": suite.checks, "passed": suite.passed }),
    };
    let files = write_outputs(&out, &formats, &report, &[table], started)?;
    let notes = vec![format!(
        "{} of {} checks passed",
        suite.checks.iter().filter(|c| c.passed).count(),
        suite.checks.len()
    )];
    Ok(Outcome {
        verified: suite.passed,
        failures,
        notes,
        files,
    })
}

/// Size of the global worker pool from `BPL_THREADS`, if set.
pub fn threads_from_env(value: Option<&str>) -> Result<Option<usize>> {
    match value {
        None => Ok(None),
        Some(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "BPL_THREADS must be a positive integer, got '{s}'"
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_counts() {
        assert_eq!(threads_from_env(None).unwrap(), None);
        assert_eq!(threads_from_env(Some("4")).unwrap(), Some(4));
        assert!(threads_from_env(Some("0")).is_err());
        assert!(threads_from_env(Some("many")).is_err());
    }

    #[test]
    fn demo_writes_deterministic_report() {
        let dir = tempfile::tempdir().unwrap();
        let flags = |sub: &str| CommonFlags {
            out: Some(dir.path().join(sub)),
            ..CommonFlags::default()
        };
        let ov = Overrides {
            sigma_d_grid: Some("0.5:2:12".into()),
            sigma_s_grid: Some("0.5:2:12".into()),
            ..Overrides::default()
        };
        let a = demo("fig7", &flags("a"), &ov).unwrap();
        demo("fig7", &flags("b"), &ov).unwrap();
        assert!(a.verified);
        let read = |sub: &str| std::fs::read(dir.path().join(sub).join("report.json")).unwrap();
        assert_eq!(read("a"), read("b"));
        assert!(dir.path().join("a/region.csv").exists());
        assert!(dir.path().join("a/meta.json").exists());
    }

    #[test]
    fn foreign_override_is_rejected() {
        let ov = Overrides {
            scale: Some(10.0),
            ..Overrides::default()
        };
        let err = demo("borel", &CommonFlags::default(), &ov).unwrap_err().to_string();
        assert!(err.contains("--scale"), "{err}");
    }
}
