//! Independent oracles and the identity suite.
//!
//! Every check evaluates both sides of one identity (or a formula against a
//! brute-force oracle) over a parameter grid and condenses the residuals into
//! a [`VerificationReport`]. Checks of printed formulas that are known not to
//! hold in general are report-only: their residuals are recorded but never
//! fail the suite.

mod checks;
pub mod oracles;
mod suite;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combinatorics::Sides;
use crate::error::{Error, Result};
use crate::real::Real;

pub use checks::{classical_limit_check, conditional_decomposition_check};
pub use oracles::{
    classical_multinomial_pmf, enumerate_first_kind_exact, enumerate_second_kind_exact,
    gaussian_multinomial,
};
pub use suite::{
    identities, run_suite, run_suite_with, suite_failed, to_json_lines, CheckConfig, IdentityInfo,
    SuiteConfig, CLASSICAL_LIMIT_TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    ReportOnly,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::ReportOnly => "report-only",
        })
    }
}

/// Whether an identity can fail the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityClass {
    Asserted,
    ReportOnly,
}

/// Which residual the tolerance applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Absolute,
    Relative,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" | "abs" => Ok(Metric::Absolute),
            "relative" | "rel" => Ok(Metric::Relative),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// Outcome of one identity on one algebra over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub identity: String,
    pub preset: String,
    /// Algebra parameters and grid description.
    pub params: String,
    /// Grid points evaluated.
    pub points: usize,
    /// Grid points whose parameters were outside the domain.
    pub skipped: usize,
    /// `None` when nothing was evaluated.
    pub max_abs_residual: Option<f64>,
    pub max_rel_residual: Option<f64>,
    pub worst_point: Option<String>,
    pub metric: Metric,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl VerificationReport {
    /// The residual the verdict is based on.
    pub fn residual(&self) -> Option<f64> {
        match self.metric {
            Metric::Absolute => self.max_abs_residual,
            Metric::Relative => self.max_rel_residual,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// Residual accumulator for one report.
pub(crate) struct Acc {
    metric: Metric,
    strict: bool,
    points: usize,
    skipped: usize,
    max_abs: f64,
    max_rel: f64,
    worst: Option<(f64, String)>,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Acc {
    pub(crate) fn new(metric: Metric, strict: bool) -> Self {
        Acc {
            metric,
            strict,
            points: 0,
            skipped: 0,
            max_abs: 0.0,
            max_rel: 0.0,
            worst: None,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Unwraps a construction result. Outside the domain, grid points are
    /// skipped and explicit cases propagate the error.
    pub(crate) fn setup<X>(&mut self, r: Result<X>) -> Result<Option<X>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e) if self.strict => Err(e),
            Err(_) => {
                self.skipped += 1;
                Ok(None)
            }
        }
    }

    pub(crate) fn record(&mut self, abs: f64, rel: f64, point: impl FnOnce() -> String) {
        self.points += 1;
        let (abs, rel) = (nan_to_inf(abs), nan_to_inf(rel));
        self.max_abs = self.max_abs.max(abs);
        self.max_rel = self.max_rel.max(rel);
        let key = match self.metric {
            Metric::Absolute => abs,
            Metric::Relative => rel,
        };
        if self.worst.as_ref().is_none_or(|(w, _)| key > *w) {
            self.worst = Some((key, point()));
        }
    }

    /// A property violation that fails the report regardless of residuals.
    pub(crate) fn fail(&mut self, what: String) {
        self.failures.push(what);
    }

    pub(crate) fn note(&mut self, what: String) {
        self.notes.push(what);
    }

    pub(crate) fn into_report(
        self,
        identity: &str,
        preset: &str,
        params: String,
        class: IdentityClass,
        tolerance: f64,
    ) -> VerificationReport {
        let measured = self.points > 0;
        let residual = match self.metric {
            Metric::Absolute => self.max_abs,
            Metric::Relative => self.max_rel,
        };
        let ok = residual <= tolerance && self.failures.is_empty();
        let verdict = match class {
            IdentityClass::ReportOnly => Verdict::ReportOnly,
            IdentityClass::Asserted if ok => Verdict::Pass,
            IdentityClass::Asserted => Verdict::Fail,
        };
        let mut msgs = self.failures;
        if !measured && self.skipped > 0 {
            msgs.push("no grid point inside the domain".into());
        }
        msgs.extend(self.notes);
        VerificationReport {
            identity: identity.to_string(),
            preset: preset.to_string(),
            params,
            points: self.points,
            skipped: self.skipped,
            max_abs_residual: measured.then_some(self.max_abs),
            max_rel_residual: measured.then_some(self.max_rel),
            worst_point: self.worst.map(|(_, p)| p),
            metric: self.metric,
            tolerance,
            verdict,
            message: (!msgs.is_empty()).then(|| msgs.join("; ")),
        }
    }
}

fn nan_to_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

/// `|a - b|` and the same relative to `max(|a|, |b|)`.
pub(crate) fn residuals<T: Real>(a: &T, b: &T) -> (f64, f64) {
    let sides = Sides::of(a.clone(), b.clone());
    (sides.abs_residual(), sides.rel_residual())
}
