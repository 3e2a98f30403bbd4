//! Run-configuration files: flat `key = value` lines grouped into sections.
//!
//! The format is deliberately minimal so that configs diff cleanly in golden
//! tests:
//!
//! ```text
//! [algo]
//! name = pfbs
//! tau = 0.5
//!
//! [problem]
//! kind = lasso
//! seed = 7
//! n = 20
//! m = 50
//!
//! [run]
//! iters = 1000
//! tol = 1e-9
//! out = traces
//!
//! [checks]
//! check = fejer
//! check = residual_monotone
//! ```
//!
//! `#` starts a comment. Parse errors carry the 1-based line and column of
//! the offending token. Parameters omitted from `[algo]` fall back to the
//! fitting's conservative defaults for the generated instance.

use crate::bench::{Dims, ProblemKind};
use crate::zoo::{FittingName, FittingParams};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// A parse failure with its position in the config text.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "config error at line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, column: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        column,
        message: message.into(),
    }
}

/// Everything a command needs to assemble and drive one solver run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub algo: FittingName,
    /// Parameters given explicitly in `[algo]`; the rest use defaults.
    pub explicit_params: BTreeMap<String, f64>,
    pub kind: ProblemKind,
    pub seed: u64,
    pub dims: Dims,
    pub iters: usize,
    pub tol: f64,
    pub out_dir: Option<PathBuf>,
    pub checks: Vec<String>,
}

impl RunConfig {
    /// Merge the explicit `[algo]` parameters over the given defaults.
    pub fn params_over(&self, defaults: FittingParams) -> FittingParams {
        let mut p = defaults;
        for (key, value) in &self.explicit_params {
            match key.as_str() {
                "tau" => p.tau = *value,
                "sigma" => p.sigma = *value,
                "rho" => p.rho = *value,
                "gamma" => p.gamma = *value,
                "mu" => p.mu = *value,
                _ => unreachable!("validated during parsing"),
            }
        }
        p
    }

    /// Parse a config from its text form.
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Section {
            None,
            Algo,
            Problem,
            Run,
            Checks,
        }

        let mut section = Section::None;
        let mut algo: Option<FittingName> = None;
        let mut explicit_params = BTreeMap::new();
        let mut kind: Option<ProblemKind> = None;
        let mut seed = 0u64;
        let mut n: Option<usize> = None;
        let mut m = 0usize;
        let mut iters = 1000usize;
        let mut tol = 1e-9f64;
        let mut out_dir = None;
        let mut checks = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw.find('#') {
                Some(at) => &raw[..at],
                None => raw,
            };
            if line.trim().is_empty() {
                continue;
            }
            let col_of = |needle: &str| raw.find(needle).map_or(1, |at| at + 1);

            let trimmed = line.trim();
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    err(lineno, raw.len(), "section header missing closing `]`")
                })?;
                section = match name {
                    "algo" => Section::Algo,
                    "problem" => Section::Problem,
                    "run" => Section::Run,
                    "checks" => Section::Checks,
                    other => {
                        return Err(err(
                            lineno,
                            col_of(other),
                            format!("unknown section `[{other}]` (expected algo, problem, run, or checks)"),
                        ))
                    }
                };
                continue;
            }

            let eq = line.find('=').ok_or_else(|| {
                err(lineno, col_of(trimmed), "expected `key = value` or a `[section]` header")
            })?;
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            if key.is_empty() {
                return Err(err(lineno, 1, "missing key before `=`"));
            }
            if value.is_empty() {
                return Err(err(lineno, eq + 2, format!("missing value for `{key}`")));
            }
            let key_col = col_of(key);
            let value_col = raw[eq..].find(value).map_or(eq + 2, |at| eq + at + 1);

            let parse_f64 = |v: &str| -> Result<f64, ConfigError> {
                v.parse::<f64>()
                    .map_err(|_| err(lineno, value_col, format!("`{v}` is not a real number")))
            };
            let parse_usize = |v: &str| -> Result<usize, ConfigError> {
                v.parse::<usize>()
                    .map_err(|_| err(lineno, value_col, format!("`{v}` is not a non-negative integer")))
            };

            match section {
                Section::None => {
                    return Err(err(
                        lineno,
                        key_col,
                        format!("key `{key}` appears before any `[section]` header"),
                    ));
                }
                Section::Algo => match key {
                    "name" => {
                        algo = Some(value.parse::<FittingName>().map_err(|e| {
                            err(lineno, value_col, e.to_string())
                        })?);
                    }
                    "tau" | "sigma" | "rho" | "gamma" | "mu" => {
                        explicit_params.insert(key.to_string(), parse_f64(value)?);
                    }
                    other => {
                        return Err(err(
                            lineno,
                            key_col,
                            format!("unknown `[algo]` key `{other}` (expected name, tau, sigma, rho, gamma, or mu)"),
                        ))
                    }
                },
                Section::Problem => match key {
                    "kind" => {
                        kind = Some(
                            value
                                .parse::<ProblemKind>()
                                .map_err(|e| err(lineno, value_col, e))?,
                        );
                    }
                    "seed" => {
                        seed = value.parse::<u64>().map_err(|_| {
                            err(lineno, value_col, format!("`{value}` is not a u64 seed"))
                        })?;
                    }
                    "n" => n = Some(parse_usize(value)?),
                    "m" => m = parse_usize(value)?,
                    other => {
                        return Err(err(
                            lineno,
                            key_col,
                            format!("unknown `[problem]` key `{other}` (expected kind, seed, n, or m)"),
                        ))
                    }
                },
                Section::Run => match key {
                    "iters" => iters = parse_usize(value)?,
                    "tol" => tol = parse_f64(value)?,
                    "out" => out_dir = Some(PathBuf::from(value)),
                    other => {
                        return Err(err(
                            lineno,
                            key_col,
                            format!("unknown `[run]` key `{other}` (expected iters, tol, or out)"),
                        ))
                    }
                },
                Section::Checks => match key {
                    "check" => checks.push(value.to_string()),
                    other => {
                        return Err(err(
                            lineno,
                            key_col,
                            format!("unknown `[checks]` key `{other}` (expected check)"),
                        ))
                    }
                },
            }
        }

        let algo = algo.ok_or_else(|| err(1, 1, "missing required key `name` in `[algo]`"))?;
        let kind = kind.ok_or_else(|| err(1, 1, "missing required key `kind` in `[problem]`"))?;
        let n = n.ok_or_else(|| err(1, 1, "missing required key `n` in `[problem]`"))?;
        Ok(RunConfig {
            algo,
            explicit_params,
            kind,
            seed,
            dims: Dims { n, m },
            iters,
            tol,
            out_dir,
            checks,
        })
    }

    /// Read and parse a config file.
    pub fn load(path: &std::path::Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
