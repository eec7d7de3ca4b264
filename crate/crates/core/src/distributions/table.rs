use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DistributionSpec, Kind, Truncation};
use crate::algebra::DeformationAlgebra;
use crate::combinatorics::{compositions, shell_indices, MultiIndex};
use crate::error::{Error, Result};
use crate::real::{CompensatedSum, Real};
use crate::FormulaMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableStatus {
    /// Full finite support, or an infinite support enumerated until the tail
    /// condition held.
    Complete,
    /// The enumeration cap was reached before the tail condition.
    Truncated,
    /// The probabilities decay but add up to visibly less than one: the
    /// family is defective for these parameters.
    SubStochastic,
}

/// Enumerated support with probabilities, in lexicographic order.
#[derive(Debug, Clone)]
pub struct PmfTable<T: Real = f64> {
    spec: DistributionSpec<T>,
    entries: BTreeMap<MultiIndex, T>,
    total: T,
    normalization_defect: f64,
    status: TableStatus,
    underflow: bool,
}

impl<T: Real> PmfTable<T> {
    pub fn spec(&self) -> &DistributionSpec<T> {
        &self.spec
    }
    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.entries.iter()
    }
    pub fn get(&self, idx: &MultiIndex) -> Option<&T> {
        self.entries.get(idx)
    }
    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
    /// Sum of all entries, accumulated in lexicographic order.
    pub fn total_mass(&self) -> &T {
        &self.total
    }
    /// `|sum - 1|`.
    pub fn normalization_defect(&self) -> f64 {
        self.normalization_defect
    }
    pub fn status(&self) -> TableStatus {
        self.status
    }
    pub fn truncated(&self) -> bool {
        self.status == TableStatus::Truncated
    }
    /// Some nonzero probability was too small for the scalar type.
    pub fn underflow(&self) -> bool {
        self.underflow
    }
}

/// Enumerates the support of `spec`.
///
/// Finite kinds list every index with `s_k <= n`. Infinite kinds are listed
/// shell by shell in increasing `s_k` until the mass reaches
/// `1 - eps_tail` with a last shell below `eps_tail / 10`; if the shells
/// decay geometrically while the mass stays short of one, the table is
/// marked [`TableStatus::SubStochastic`].
pub fn pmf_table<T: Real>(spec: &DistributionSpec<T>) -> Result<PmfTable<T>> {
    let k = spec.k();
    let mut entries = BTreeMap::new();
    let mut underflow = false;
    let strict = spec.mode() == FormulaMode::Corrected;
    let mut push = |idx: MultiIndex, entries: &mut BTreeMap<MultiIndex, T>| -> Result<T> {
        let w = spec.pmf_wide(&idx)?;
        let v = w.value();
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{} at {idx}", spec.kind())));
        }
        if strict && v < T::zero() {
            return Err(Error::Domain(format!(
                "{} gives negative probability {} at {idx}",
                spec.kind(),
                v.to_f64()
            )));
        }
        if v.is_zero() && !w.is_zero() {
            underflow = true;
        }
        entries.insert(idx, v.clone());
        Ok(v)
    };

    let status = if spec.kind().is_finite() {
        for idx in compositions(spec.n(), k) {
            push(idx, &mut entries)?;
        }
        TableStatus::Complete
    } else {
        let Truncation {
            eps_tail,
            max_index,
        } = spec.truncation();
        let mut cum = CompensatedSum::new();
        let mut prev_shell = f64::INFINITY;
        let mut status = TableStatus::Truncated;
        for s in 0..=max_index {
            let mut shell = CompensatedSum::new();
            for idx in shell_indices(s, k) {
                shell.add(push(idx, &mut entries)?);
            }
            let shell = shell.value();
            cum.add(shell.clone());
            let mass = cum.value().to_f64();
            let shell = shell.to_f64().abs();
            if mass >= 1.0 - eps_tail && shell < eps_tail / 10.0 {
                status = TableStatus::Complete;
                break;
            }
            if s >= 2 && shell < prev_shell {
                let r = shell / prev_shell;
                let tail = if r < 1.0 {
                    shell * r / (1.0 - r)
                } else {
                    f64::INFINITY
                };
                if tail < eps_tail / 10.0 && mass < 1.0 - eps_tail {
                    status = TableStatus::SubStochastic;
                    break;
                }
            }
            prev_shell = shell;
        }
        status
    };

    let total: T = entries
        .values()
        .cloned()
        .collect::<CompensatedSum<T>>()
        .value();
    let normalization_defect = (total.clone() - T::one()).abs().to_f64();
    Ok(PmfTable {
        spec: spec.clone(),
        entries,
        total,
        normalization_defect,
        status,
        underflow,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitFamily {
    /// First kind against the multiple Heine family.
    Heine,
    /// Second kind against the multiple Euler family.
    Euler,
}

impl std::str::FromStr for LimitFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heine" => Ok(LimitFamily::Heine),
            "euler" => Ok(LimitFamily::Euler),
            other => Err(Error::InvalidArgument(format!(
                "unknown limit family `{other}`"
            ))),
        }
    }
}

/// Largest pointwise gap between the finite-`n` distribution and its limit
/// family over the union of both supports.
pub fn limit_distance<T: Real>(
    alg: &DeformationAlgebra<T>,
    theta: &[T],
    n: u32,
    family: LimitFamily,
) -> Result<f64> {
    limit_distance_with_mode(alg, theta, n, family, FormulaMode::Corrected)
}

pub fn limit_distance_with_mode<T: Real>(
    alg: &DeformationAlgebra<T>,
    theta: &[T],
    n: u32,
    family: LimitFamily,
    mode: FormulaMode,
) -> Result<f64> {
    let (finite_kind, limit_kind) = match family {
        LimitFamily::Heine => (Kind::FirstKind, Kind::MultipleHeine),
        LimitFamily::Euler => (Kind::SecondKind, Kind::MultipleEuler),
    };
    let finite = DistributionSpec::builder(finite_kind, alg.clone())
        .n(n)
        .theta(theta.to_vec())
        .mode(mode)
        .build()?;
    let limit = DistributionSpec::builder(limit_kind, alg.clone())
        .theta(theta.to_vec())
        .mode(mode)
        .truncation(Truncation {
            eps_tail: 1e-15,
            max_index: 500,
        })
        .build()?;
    let finite_table = pmf_table(&finite)?;
    let limit_table = pmf_table(&limit)?;
    let mut worst = 0.0f64;
    for (idx, p) in finite_table.entries() {
        let l = match limit_table.get(idx) {
            Some(v) => v.clone(),
            None => limit.pmf(idx)?,
        };
        worst = worst.max((p.clone() - l).abs().to_f64());
    }
    for (idx, l) in limit_table.entries() {
        if finite_table.get(idx).is_none() {
            worst = worst.max(l.abs().to_f64());
        }
    }
    Ok(worst)
}
