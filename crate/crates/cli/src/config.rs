//! Flat `key = value` run configuration.

use std::path::{Path, PathBuf};

use heatdg::adapt::AdaptConfig;

/// Slope of the hp degree rule used by `--hp` when no slope is given.
pub const DEFAULT_SIGMA: f64 = 0.47;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("bad value for `{key}`: `{value}`")]
    Value { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Everything a run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub adapt: AdaptConfig<f64>,
    pub out: PathBuf,
    /// Write a snapshot every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Sample points per element in field snapshots.
    pub snapshot_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "quadratic_gaussian".into(),
            adapt: AdaptConfig::default(),
            out: PathBuf::from("out"),
            snapshot_every: 0,
            snapshot_points: 8,
        }
    }
}

const KEYS: [&str; 19] = [
    "problem",
    "ttol",
    "stol",
    "stol_plus",
    "stol_minus",
    "p",
    "r0",
    "k0",
    "sigma",
    "hp",
    "max_steps",
    "t_final",
    "c_inf",
    "n_root",
    "picard_tol",
    "picard_max_iters",
    "out",
    "snapshot_every",
    "snapshot_points",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value { key: key.into(), value: value.into() })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::Value { key: key.into(), value: value.into() }),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_text(&text)
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { line: i + 1, key: key.into() });
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let a = &mut self.adapt;
        match key {
            "problem" => self.problem = value.into(),
            "ttol" => a.ttol = parse(key, value)?,
            "stol" | "stol_plus" => a.stol_plus = parse(key, value)?,
            "stol_minus" => a.stol_minus = Some(parse(key, value)?),
            "p" => a.p = parse(key, value)?,
            "r0" => a.r0 = parse(key, value)?,
            "k0" => a.k0 = parse(key, value)?,
            "sigma" => a.sigma = Some(parse(key, value)?),
            "hp" => {
                if parse_bool(key, value)? {
                    a.sigma.get_or_insert(DEFAULT_SIGMA);
                } else {
                    a.sigma = None;
                }
            }
            "max_steps" => a.max_steps = parse(key, value)?,
            "t_final" => a.t_final = Some(parse(key, value)?),
            "c_inf" => a.c_inf = parse(key, value)?,
            "n_root" => a.n_root = parse(key, value)?,
            "picard_tol" => a.picard.tol = parse(key, value)?,
            "picard_max_iters" => a.picard.max_iters = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "snapshot_every" => self.snapshot_every = parse(key, value)?,
            "snapshot_points" => self.snapshot_points = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey { line: 0, key: key.into() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        heatdg::problems::preset::<f64>(&self.problem).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.adapt.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.snapshot_points == 0 {
            return Err(ConfigError::Invalid("snapshot_points must be positive".into()));
        }
        Ok(())
    }

    /// The configuration as `key = value` lines, readable by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        let a = &self.adapt;
        let mut s = format!(
            "problem = {}\nttol = {:?}\nstol = {:?}\nstol_minus = {:?}\np = {}\nr0 = {}\nk0 = {:?}\n",
            self.problem,
            a.ttol,
            a.stol_plus,
            a.stol_minus(),
            a.p,
            a.r0,
            a.k0
        );
        if let Some(sigma) = a.sigma {
            s += &format!("sigma = {sigma:?}\n");
        }
        s += &format!("max_steps = {}\n", a.max_steps);
        if let Some(t) = a.t_final {
            s += &format!("t_final = {t:?}\n");
        }
        s += &format!(
            "c_inf = {:?}\nn_root = {}\npicard_tol = {:?}\npicard_max_iters = {}\nout = {}\nsnapshot_every = {}\nsnapshot_points = {}\n",
            a.c_inf,
            a.n_root,
            a.picard.tol,
            a.picard.max_iters,
            self.out.display(),
            self.snapshot_every,
            self.snapshot_points
        );
        s
    }
}
