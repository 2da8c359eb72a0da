//! Run configuration: defaults, a flat `key = value` file, and command-line
//! overrides, in that order of precedence.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cbsfs::mc::Execution;
use cbsfs::ModelParams;
use clap::ValueEnum;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Values any layer may set; `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub beta: Option<f64>,
    pub theta: Option<f64>,
    pub mu: Option<f64>,
    pub n: Option<usize>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub z0: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
}

impl Overrides {
    /// Fields of `other` that are set replace ours.
    pub fn merge(mut self, other: &Overrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$(if other.$f.is_some() { self.$f = other.$f.clone(); })*};
        }
        take!(beta, theta, mu, n, reps, seed, z0, out, format, workers);
        self
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::parse(&text).map_err(|msg| CliError::Usage(format!("{}: {msg}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut o = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn fmt::Display| format!("line {}: {key}: {e}", lineno + 1);
            fn num<T: FromStr>(v: &str) -> Result<T, String>
            where
                T::Err: fmt::Display,
            {
                v.parse().map_err(|e: T::Err| e.to_string())
            }
            match key {
                "beta" => o.beta = Some(num(value).map_err(|e| bad(&e))?),
                "theta" => o.theta = Some(num(value).map_err(|e| bad(&e))?),
                "mu" => o.mu = Some(num(value).map_err(|e| bad(&e))?),
                "n" => o.n = Some(num(value).map_err(|e| bad(&e))?),
                "reps" => o.reps = Some(num(value).map_err(|e| bad(&e))?),
                "seed" => o.seed = Some(num(value).map_err(|e| bad(&e))?),
                "z0" => o.z0 = if value == "none" { None } else { Some(num(value).map_err(|e| bad(&e))?) },
                "out" => o.out = Some(PathBuf::from(value)),
                "format" => o.format = Some(value.parse().map_err(|e: String| bad(&e))?),
                "workers" => o.workers = Some(num(value).map_err(|e| bad(&e))?),
                _ => return Err(format!("line {}: unknown key {key:?}", lineno + 1)),
            }
        }
        Ok(o)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub seed: u64,
    /// `None` lets each command pick its own replicate count.
    pub reps: Option<u64>,
    pub n: usize,
    pub z0: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub workers: usize,
    pub exec: Execution,
}

impl RunConfig {
    pub fn resolve(o: &Overrides, exec: Execution) -> Result<Self, CliError> {
        let d = ModelParams::default();
        let params = ModelParams::new(o.beta.unwrap_or(d.beta), o.theta.unwrap_or(d.theta), o.mu.unwrap_or(d.mu))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let n = o.n.unwrap_or(10);
        if n == 0 {
            return Err(CliError::Usage("n must be at least 1".into()));
        }
        if o.reps == Some(0) {
            return Err(CliError::Usage("reps must be at least 1".into()));
        }
        if let Some(z) = o.z0 {
            if !(z > 0.0 && z.is_finite()) {
                return Err(CliError::Usage(format!("z0 must be positive, got {z}")));
            }
        }
        if let Some(p) = &o.out {
            if p.as_os_str().is_empty() {
                return Err(CliError::Usage("empty output path".into()));
            }
        }
        Ok(Self {
            params,
            seed: o.seed.unwrap_or(1),
            reps: o.reps,
            n,
            z0: o.z0,
            out: o.out.clone(),
            format: o.format.unwrap_or_default(),
            workers: o.workers.unwrap_or(0),
            exec,
        })
    }

    pub fn reps_or(&self, default: u64) -> u64 {
        self.reps.unwrap_or(default)
    }

    /// The settings that determine the numbers in an output file, as
    /// `key=value` pairs. Output path, worker count and executor are left out
    /// because they never change the data.
    pub fn echo(&self, reps: Option<u64>) -> Vec<(String, String)> {
        let mut v = vec![
            ("beta".to_string(), self.params.beta.to_string()),
            ("theta".into(), self.params.theta.to_string()),
            ("mu".into(), self.params.mu.to_string()),
            ("n".into(), self.n.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("z0".into(), self.z0.map_or("none".into(), |z| z.to_string())),
        ];
        if let Some(r) = reps {
            v.push(("reps".into(), r.to_string()));
        }
        v
    }
}
