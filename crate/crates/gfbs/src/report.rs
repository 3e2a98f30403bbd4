//! Pass/fail reports for certificate checks.
//!
//! Every inequality the crate verifies is reported as a named check with its
//! *worst slack*: the smallest value of `lhs − rhs` (oriented so that
//! nonnegative means the inequality holds) over all iterations or samples
//! inspected. The slack is reported even on pass so near-misses are visible.

use std::fmt;

/// One verified (or falsified) inequality.
#[derive(Clone, Debug)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    /// Worst (most negative) slack observed; `+inf` for vacuous checks.
    pub worst_slack: f64,
    /// Iteration index or sample id where the worst slack occurred.
    pub location: Option<String>,
    /// True for report-only values (never gates `all_pass`).
    pub informational: bool,
}

impl CheckItem {
    /// A check gated on `worst_slack ≥ −tol`.
    pub fn from_slack(name: impl Into<String>, worst_slack: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            pass: worst_slack >= -tol,
            worst_slack,
            location: None,
            informational: false,
        }
    }

    /// A reported value that never gates the overall verdict.
    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            pass: true,
            worst_slack: value,
            location: None,
            informational: true,
        }
    }

    pub fn at(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }
}

/// A bundle of named checks.
#[derive(Clone, Debug, Default)]
pub struct CertificateReport {
    pub checks: Vec<CheckItem>,
}

impl CertificateReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, item: CheckItem) {
        self.checks.push(item);
    }

    pub fn extend(&mut self, other: CertificateReport) {
        self.checks.extend(other.checks);
    }

    /// True iff every non-informational check passed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.informational || c.pass)
    }

    pub fn find(&self, name: &str) -> Option<&CheckItem> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for CertificateReport {
    /// One check per line: `name PASS|FAIL|INFO worst_slack [location]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let verdict = if c.informational {
                "INFO"
            } else if c.pass {
                "PASS"
            } else {
                "FAIL"
            };
            write!(f, "{} {} {:.6e}", c.name, verdict, c.worst_slack)?;
            if let Some(loc) = &c.location {
                write!(f, " {loc}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
