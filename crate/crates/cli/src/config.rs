//! Run configuration: a flat `key = value` file, overridden by flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use kclg::frame::DEFAULT_BUDGET;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Msd,
    Varbound,
    Frameability,
    Percolation,
    PathCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Msd => "msd",
            Command::Varbound => "varbound",
            Command::Frameability => "frameability",
            Command::Percolation => "percolation",
            Command::PathCheck => "path-check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Joint,
    Recentered,
}

/// Everything a run depends on. Written back as `config.cfg` next to the
/// outputs, so the same binary rerun on that file reproduces the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub d: usize,
    pub s: usize,
    /// One density, or a sweep for `varbound`, `frameability` and
    /// `percolation`.
    pub rho: Vec<f64>,
    pub dims: Vec<usize>,
    /// Block scale `L`; a list sweeps it where the command allows.
    pub l: Vec<usize>,
    pub t_max: f64,
    pub n_times: usize,
    pub n_replicas: usize,
    pub n_samples: usize,
    pub budget: usize,
    pub seed: u64,
    /// Half-side of the variational window.
    pub window: usize,
    pub axis: usize,
    /// Renormalised cells per side of the percolation field.
    pub cells: usize,
    pub method: Method,
    pub out: PathBuf,
}

pub const KEYS: [&str; 16] = [
    "d",
    "s",
    "rho",
    "dims",
    "l",
    "t_max",
    "n_times",
    "n_replicas",
    "n_samples",
    "budget",
    "seed",
    "window",
    "axis",
    "cells",
    "method",
    "out",
];

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        ExperimentConfig {
            command,
            d: 2,
            s: 2,
            rho: vec![0.4],
            dims: vec![32, 32],
            l: vec![3],
            t_max: 100.0,
            n_times: 20,
            n_replicas: 32,
            n_samples: 100,
            budget: DEFAULT_BUDGET,
            seed: 1,
            window: 1,
            axis: 0,
            cells: 4,
            method: Method::Recentered,
            out: PathBuf::from("out"),
        }
    }

    /// Defaults, then the file (if any), then the flag overrides.
    pub fn load(
        command: Command,
        file: Option<&Path>,
        flags: &Overrides,
    ) -> Result<Self, CliError> {
        let mut c = Self::defaults(command);
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            for (k, v) in parse_pairs(&text)? {
                c.set(&k, &v)?;
            }
        }
        for (k, v) in flags.pairs() {
            c.set(k, &v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.replace('-', "_").to_ascii_lowercase();
        let bad = |what: &str| CliError::Validation(format!("{key} = {value:?}: expected {what}"));
        let v = value.trim();
        match key.as_str() {
            "command" => {
                self.command = Command::from_str(v, true).map_err(|_| bad("a subcommand name"))?;
            }
            "d" => self.d = v.parse().map_err(|_| bad("an integer"))?,
            "s" => self.s = v.parse().map_err(|_| bad("an integer"))?,
            "rho" => {
                self.rho = parse_list(v).map_err(|_| bad("a comma-separated list of numbers"))?
            }
            "dims" => {
                self.dims =
                    parse_list(&v.replace('x', ",")).map_err(|_| bad("sides such as 32x32"))?;
            }
            "l" => self.l = parse_list(v).map_err(|_| bad("a comma-separated list of integers"))?,
            "t_max" => self.t_max = v.parse().map_err(|_| bad("a number"))?,
            "n_times" => self.n_times = v.parse().map_err(|_| bad("an integer"))?,
            "n_replicas" => self.n_replicas = v.parse().map_err(|_| bad("an integer"))?,
            "n_samples" => self.n_samples = v.parse().map_err(|_| bad("an integer"))?,
            "budget" => {
                self.budget = parse_count(v).ok_or_else(|| bad("an integer such as 1e7"))?
            }
            "seed" => self.seed = v.parse().map_err(|_| bad("an unsigned integer"))?,
            "window" => self.window = v.parse().map_err(|_| bad("an integer"))?,
            "axis" => self.axis = v.parse().map_err(|_| bad("an integer"))?,
            "cells" => self.cells = v.parse().map_err(|_| bad("an integer"))?,
            "method" => {
                self.method = match v {
                    "joint" => Method::Joint,
                    "recentered" => Method::Recentered,
                    _ => return Err(bad("joint or recentered")),
                }
            }
            "out" => self.out = PathBuf::from(v),
            _ => return Err(CliError::Validation(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Validation(m));
        if self.d == 0 {
            return fail("d must be >= 1".into());
        }
        if self.s == 0 || self.s > 2 * self.d {
            return fail(format!(
                "s must lie in 1..={} for d = {}",
                2 * self.d,
                self.d
            ));
        }
        if self.rho.is_empty() || self.rho.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return fail("every rho must lie in [0, 1]".into());
        }
        if self.l.is_empty() || self.l.iter().any(|&l| l < 2) {
            return fail("every L must be >= 2".into());
        }
        if self.axis >= self.d {
            return fail(format!(
                "axis {} out of range for d = {}",
                self.axis, self.d
            ));
        }
        if self.budget == 0 {
            return fail("budget must be positive".into());
        }
        let single = matches!(
            self.command,
            Command::Simulate | Command::Msd | Command::PathCheck
        );
        if single && (self.rho.len() > 1 || self.l.len() > 1) {
            return fail(format!("{} takes a single rho and L", self.command.name()));
        }
        match self.command {
            Command::Simulate | Command::Msd => {
                if self.dims.len() != self.d {
                    return fail(format!(
                        "dims has {} sides, d = {}",
                        self.dims.len(),
                        self.d
                    ));
                }
                if self.dims.iter().any(|&w| w < 3) {
                    return fail("every side of dims must be >= 3".into());
                }
                if !(self.t_max > 0.0 && self.t_max.is_finite()) {
                    return fail("t_max must be positive".into());
                }
            }
            _ => {}
        }
        match self.command {
            Command::Msd => {
                if !(self.rho[0] > 0.0 && self.rho[0] < 1.0) {
                    return fail("msd needs 0 < rho < 1".into());
                }
                if self.n_times < 4 {
                    return fail("n_times must be >= 4".into());
                }
            }
            Command::PathCheck => {
                if self.d != 2 || self.s > 2 {
                    return fail("path-check supports d = 2 with s <= 2".into());
                }
                if self.rho[0] >= 1.0 {
                    return fail("path-check needs rho < 1".into());
                }
            }
            Command::Percolation => {
                if self.d == 2 && self.cells < 4 {
                    return fail("cells must be >= 4".into());
                }
            }
            _ => {}
        }
        if matches!(
            self.command,
            Command::Frameability | Command::Percolation | Command::PathCheck
        ) && self.n_samples == 0
        {
            return fail("n_samples must be positive".into());
        }
        Ok(())
    }

    /// The `key = value` form read by [`ExperimentConfig::load`].
    pub fn to_file_string(&self) -> String {
        let join = |xs: Vec<String>| xs.join(",");
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("command", self.command.name().into());
        put("d", self.d.to_string());
        put("s", self.s.to_string());
        put(
            "rho",
            join(self.rho.iter().map(|r| r.to_string()).collect()),
        );
        put(
            "dims",
            join(self.dims.iter().map(|r| r.to_string()).collect()),
        );
        put("l", join(self.l.iter().map(|r| r.to_string()).collect()));
        put("t_max", self.t_max.to_string());
        put("n_times", self.n_times.to_string());
        put("n_replicas", self.n_replicas.to_string());
        put("n_samples", self.n_samples.to_string());
        put("budget", self.budget.to_string());
        put("seed", self.seed.to_string());
        put("window", self.window.to_string());
        put("axis", self.axis.to_string());
        put("cells", self.cells.to_string());
        put(
            "method",
            match self.method {
                Method::Joint => "joint",
                Method::Recentered => "recentered",
            }
            .into(),
        );
        put("out", self.out.display().to_string());
        s
    }
}

/// Lines of `key = value`; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("line {}: expected key = value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, T::Err> {
    v.split(',').map(|x| x.trim().parse()).collect()
}

/// Integers, also in `1e7` notation.
fn parse_count(v: &str) -> Option<usize> {
    v.parse().ok().or_else(|| {
        let f: f64 = v.parse().ok()?;
        (f >= 0.0 && f.fract() == 0.0 && f < 1e18).then_some(f as usize)
    })
}

/// Command-line mirrors of the file keys. Values are parsed by
/// [`ExperimentConfig::set`] so both sources share one validator.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub s: Option<String>,
    /// Density, or a comma-separated sweep.
    #[arg(long)]
    pub rho: Option<String>,
    /// Torus sides, e.g. 32x32.
    #[arg(long)]
    pub dims: Option<String>,
    /// Block scale, or a comma-separated sweep.
    #[arg(long, short = 'L')]
    pub l: Option<String>,
    #[arg(long)]
    pub t_max: Option<String>,
    #[arg(long)]
    pub n_times: Option<String>,
    #[arg(long)]
    pub n_replicas: Option<String>,
    #[arg(long)]
    pub n_samples: Option<String>,
    #[arg(long)]
    pub budget: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long)]
    pub cells: Option<String>,
    /// joint or recentered.
    #[arg(long)]
    pub method: Option<String>,
    /// Output directory.
    #[arg(long, short = 'o')]
    pub out: Option<String>,
}

impl Overrides {
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let vals = [
            &self.d,
            &self.s,
            &self.rho,
            &self.dims,
            &self.l,
            &self.t_max,
            &self.n_times,
            &self.n_replicas,
            &self.n_samples,
            &self.budget,
            &self.seed,
            &self.window,
            &self.axis,
            &self.cells,
            &self.method,
            &self.out,
        ];
        KEYS.iter()
            .zip(vals)
            .filter_map(|(k, v)| v.as_ref().map(|v| (*k, v.clone())))
            .collect()
    }
}
