//! R(p,q)-deformed numbers, multinomial coefficients, multinomial identities
//! and the deformed multinomial probability distributions built on them.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: deformation algebras, deformed numbers, factorials,
//!   parameter inversion and deformed exponentials.
//! * [`combinatorics`]: shifted factorials, binomial and multinomial
//!   coefficients, recurrences and both sides of the multinomial theorems.
//! * [`distributions`]: trial model, probability tables, recursions,
//!   limit families and seeded samplers.
//! * [`verification`]: brute-force oracles and the grid-driven identity suite.
//!
//! All numeric code is generic over [`Real`], implemented for `f64` and for
//! the 192-bit [`Extended`] type.

// `!(a < b)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod combinatorics;
pub mod distributions;
pub mod error;
pub mod real;
pub mod verification;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use algebra::{
    make_custom_algebra, make_custom_algebra_xy, make_preset_algebra, DeformationAlgebra, Preset,
};
pub use combinatorics::{MultiIndex, Shift};
pub use error::{Error, Result};
pub use real::{CompensatedSum, Extended, PrecisionMode, Real};

/// Selects between a formula exactly as printed and its corrected form.
///
/// Several printed identities only hold when `tau1 = 1`; the corrected form
/// holds for every algebra satisfying the splitting identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaMode {
    PaperLiteral,
    #[default]
    Corrected,
}

impl fmt::Display for FormulaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormulaMode::PaperLiteral => "paper-literal",
            FormulaMode::Corrected => "corrected",
        })
    }
}

impl FromStr for FormulaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-literal" | "literal" => Ok(FormulaMode::PaperLiteral),
            "corrected" | "derived-ratio" => Ok(FormulaMode::Corrected),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}
