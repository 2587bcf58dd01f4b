//! Tool defaults read from a `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. Missing keys keep their
//! defaults; unknown keys are rejected.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolConfig {
    /// Extra quadrature degree for the load vector and error norms.
    pub quad_bump: usize,
    /// Residual tolerance of the saddle-point solve.
    pub tol_residual: f64,
    /// Tolerance of the identity checks.
    pub tol_identity: f64,
    pub seed: u64,
    /// Worker threads; 0 lets the thread pool decide.
    pub threads: usize,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            quad_bump: 6,
            tol_residual: 1e-10,
            tol_identity: 1e-12,
            seed: 42,
            threads: 0,
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| ConfigError::Parse {
        line,
        msg: format!("bad value for `{key}`: {e}"),
    })
}

fn positive(line: usize, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::Parse {
            line,
            msg: format!("`{key}` must be positive, got {v}"),
        })
    }
}

impl ToolConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let (key, value) = s.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, got `{s}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "quad_bump" => cfg.quad_bump = parse_value(line, key, value)?,
                "tol_residual" => cfg.tol_residual = positive(line, key, parse_value(line, key, value)?)?,
                "tol_identity" => cfg.tol_identity = positive(line, key, parse_value(line, key, value)?)?,
                "seed" => cfg.seed = parse_value(line, key, value)?,
                "threads" => cfg.threads = parse_value(line, key, value)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Text form accepted by [`ToolConfig::parse`]; floats use the shortest exact
    /// representation.
    pub fn emit(&self) -> String {
        format!(
            "quad_bump = {}\ntol_residual = {:?}\ntol_identity = {:?}\nseed = {}\nthreads = {}\n",
            self.quad_bump, self.tol_residual, self.tol_identity, self.seed, self.threads
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gives_defaults() {
        assert_eq!(ToolConfig::parse("").unwrap(), ToolConfig::default());
        assert_eq!(
            ToolConfig::parse("# only a comment\n\n").unwrap(),
            ToolConfig::default()
        );
    }

    #[test]
    fn seed_only() {
        let c = ToolConfig::parse("seed = 42").unwrap();
        assert_eq!(c.seed, 42);
        let c = ToolConfig::parse("seed=7\n").unwrap();
        assert_eq!(
            c,
            ToolConfig {
                seed: 7,
                ..Default::default()
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ToolConfig::parse("tol_residual = -1"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ToolConfig::parse("\nseed = x"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ToolConfig::parse("seed 4"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ToolConfig::parse("colour = red"),
            Err(ConfigError::UnknownKey { line: 1, ref key }) if key == "colour"
        ));
    }

    #[test]
    fn round_trip() {
        let c = ToolConfig {
            quad_bump: 3,
            tol_residual: 1.5e-9,
            tol_identity: 0.1 + 0.2,
            seed: 9,
            threads: 4,
        };
        let again = ToolConfig::parse(&c.emit()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.emit(), c.emit());
    }
}
