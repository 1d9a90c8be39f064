//! Optional TOML defaults for the command line. Keys use the long flag
//! names with underscores; flags win on conflict.
//!
//! ```toml
//! lambda = 80          # a list such as [80, 100, 120] is accepted for sweeps
//! mu = 1
//! theta = 1
//! p = [0.1, 0.5]
//! gamma = 0.5
//! epsilon = [0.01, 0.05]
//! customers = 100000
//! reps = 10
//! seed = 42
//! jobs = 4
//! ```

use std::path::Path;

use serde::Deserialize;

use super::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub lambda: Option<OneOrMany>,
    pub mu: Option<OneOrMany>,
    pub theta: Option<OneOrMany>,
    pub p: Option<OneOrMany>,
    pub gamma: Option<OneOrMany>,
    pub c: Option<f64>,
    pub epsilon: Option<OneOrMany>,
    pub customers: Option<u64>,
    pub horizon: Option<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub warmup: Option<f64>,
    pub jobs: Option<usize>,
    pub grid_dt: Option<f64>,
    pub max_rows: Option<usize>,
    pub max_evaluations: Option<u32>,
    pub step: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Flag value, else config scalar, else `None`. A config list is only
/// accepted when it holds exactly one value.
pub fn scalar(flag: Option<f64>, config: &Option<OneOrMany>, name: &str) -> Result<Option<f64>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match config {
        None => Ok(None),
        Some(v) => match v.values().as_slice() {
            [x] => Ok(Some(*x)),
            _ => Err(CliError::Usage(format!("config key `{name}` must be a single number here"))),
        },
    }
}

/// Flag list if non-empty, else config list.
pub fn list(flag: &[f64], config: &Option<OneOrMany>) -> Vec<f64> {
    if !flag.is_empty() {
        flag.to_vec()
    } else {
        config.as_ref().map(OneOrMany::values).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalars_and_lists() {
        let c = ConfigFile::parse("lambda = 80\np = [0.1, 0.5]\nseed = 3\n").unwrap();
        assert_eq!(c.lambda, Some(OneOrMany::One(80.0)));
        assert_eq!(c.p.as_ref().unwrap().values(), vec![0.1, 0.5]);
        assert_eq!(c.seed, Some(3));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ConfigFile::parse("lamda = 80").is_err());
    }

    #[test]
    fn flags_win() {
        let c = ConfigFile::parse("lambda = 80").unwrap();
        assert_eq!(scalar(Some(5.0), &c.lambda, "lambda").unwrap(), Some(5.0));
        assert_eq!(scalar(None, &c.lambda, "lambda").unwrap(), Some(80.0));
        assert_eq!(list(&[1.0, 2.0], &c.lambda), vec![1.0, 2.0]);
        assert_eq!(list(&[], &c.lambda), vec![80.0]);
        let many = ConfigFile::parse("lambda = [1, 2]").unwrap();
        assert!(scalar(None, &many.lambda, "lambda").is_err());
    }
}
