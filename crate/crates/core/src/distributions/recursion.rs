use serde::{Deserialize, Serialize};

use super::{DistributionSpec, Factors, Kind};
use crate::combinatorics::MultiIndex;
use crate::error::{Error, Result};
use crate::real::{Real, Wide};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecursionMode {
    /// The printed recursion, applied verbatim.
    PaperLiteral,
    /// Closed-form ratio of neighbouring probabilities.
    DerivedRatio,
}

/// Which neighbour the recursion moves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    /// Every coordinate incremented by one.
    All,
    /// Coordinate `j` (1-based) incremented by one.
    Coordinate(usize),
}

fn step_index(idx: &MultiIndex, step: Step) -> Result<MultiIndex> {
    match step {
        Step::All => Ok(MultiIndex::new(
            idx.entries().iter().map(|v| v + 1).collect(),
        )?),
        Step::Coordinate(j) if j >= 1 && j <= idx.k() => {
            Ok(idx.with_entry(j, idx.entries()[j - 1] + 1))
        }
        Step::Coordinate(j) => Err(Error::InvalidArgument(format!(
            "coordinate {j} outside 1..={}",
            idx.k()
        ))),
    }
}

/// Probability at the neighbour of `index` given the probability there.
pub fn recursion_next<T: Real>(
    spec: &DistributionSpec<T>,
    index: &MultiIndex,
    p_current: &T,
    mode: RecursionMode,
    step: Step,
) -> Result<T> {
    let target = step_index(index, step)?;
    if index.k() != spec.k() {
        return Err(Error::InvalidArgument(format!(
            "index {index} does not match k = {}",
            spec.k()
        )));
    }
    if !spec.in_support(index) || !spec.in_support(&target) {
        return Err(Error::InvalidArgument(format!(
            "{index} -> {target} leaves the support s_k <= {}",
            spec.n()
        )));
    }
    let ratio = match mode {
        RecursionMode::DerivedRatio => {
            if spec.pmf_wide(index)?.is_zero() {
                return Err(Error::UndefinedRatio(format!(
                    "probability at {index} is zero"
                )));
            }
            Factors::ratio(&spec.factors(&target), &spec.factors(index), spec)?
        }
        RecursionMode::PaperLiteral => literal_ratio(spec, index, step)?,
    };
    if p_current.is_zero() && !ratio.is_zero() {
        return Err(Error::UndefinedRatio(format!(
            "probability at {index} is zero"
        )));
    }
    let v = ratio.mul_value(p_current.clone()).value();
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("recursion at {index}")));
    }
    Ok(v)
}

/// The printed recursions move every coordinate at once:
/// `P_{y+1} = [n - s_k]_k prod_j w_j(y_j) P_y`.
fn literal_ratio<T: Real>(
    spec: &DistributionSpec<T>,
    idx: &MultiIndex,
    step: Step,
) -> Result<Wide<T>> {
    if step != Step::All {
        return Err(Error::Unsupported(
            "printed recursions only increment all coordinates".into(),
        ));
    }
    let alg = spec.algebra();
    let n = spec.n() as i64;
    let k = idx.k() as i64;
    let one = T::one();
    let (t1, t2) = (alg.tau1().clone(), alg.tau2().clone());
    let mut acc = alg.ordered_factorial_wide(n - idx.total(), k)?;
    for j in 1..=idx.k() {
        let y = idx.r(j);
        let th = spec.theta()[j - 1].clone();
        let next = alg.number(y + 1)?;
        acc = match spec.kind() {
            Kind::FirstKind | Kind::NegativeFirstKind => {
                // the first-kind recursion divides by (1 ⊕ θ)^1, the negative one by (1 ⊖ θ)^1
                let shift = if spec.kind() == Kind::FirstKind {
                    one.clone() + th.clone()
                } else {
                    one.clone() - th.clone()
                };
                acc.mul_value(th)
                    .mul_pow(&t1, n - y)
                    .mul_pow(&t2, y)
                    .div_value(next * shift)
            }
            Kind::SecondKind | Kind::NegativeSecondKind => acc
                .mul_value(th.clone() * (one.clone() - th))
                .div_value(next),
            other => {
                return Err(Error::Unsupported(format!(
                    "no printed recursion for {other}"
                )));
            }
        };
    }
    Ok(acc)
}

/// The q-standard specialisation of the printed second-kind recursion,
/// written with `[m]_q = (1 - q^m) / (1 - q)`.
pub fn q_second_kind_recursion_next(
    q: f64,
    n: u32,
    theta: &[f64],
    x: &MultiIndex,
    p_current: f64,
) -> f64 {
    let qn = |m: i64| (1.0 - q.powi(m as i32)) / (1.0 - q);
    let top = n as i64 - x.total();
    let mut acc = 1.0;
    for i in 0..theta.len() as i64 {
        acc *= qn(top - i);
    }
    for (j, th) in theta.iter().enumerate() {
        let xj = x.entries()[j] as i32;
        acc *= th * (1.0 - th) * (1.0 - q) / (1.0 - q.powi(xj + 1));
    }
    acc * p_current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_preset_algebra, Preset};
    use crate::FormulaMode;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn second_kind_ratio_example() {
        let a = make_preset_algebra(Preset::QStandard, 0.9, 0.5).unwrap();
        let spec = DistributionSpec::new(Kind::SecondKind, a, 2, vec![0.4]).unwrap();
        let p = recursion_next(
            &spec,
            &mi(&[0]),
            &0.48,
            RecursionMode::DerivedRatio,
            Step::All,
        )
        .unwrap();
        assert!((p - 0.36).abs() < 1e-15);
        assert!(recursion_next(
            &spec,
            &mi(&[2]),
            &0.16,
            RecursionMode::DerivedRatio,
            Step::All
        )
        .is_err());
    }

    #[test]
    fn first_kind_both_modes_on_q_standard() {
        let a = make_preset_algebra(Preset::QStandard, 0.9, 0.5).unwrap();
        let spec = DistributionSpec::new(Kind::FirstKind, a, 2, vec![0.3]).unwrap();
        let p0 = spec.p_zero().unwrap();
        let want = 0.45 / 1.495;
        let d = recursion_next(
            &spec,
            &mi(&[0]),
            &p0,
            RecursionMode::DerivedRatio,
            Step::All,
        )
        .unwrap();
        assert!((d - want).abs() < 1e-15);
        let l = recursion_next(
            &spec,
            &mi(&[0]),
            &p0,
            RecursionMode::PaperLiteral,
            Step::All,
        )
        .unwrap();
        // printed: [2] θ τ1^2 / ([1] (1 + θ)) P_0 = 1.5 · 0.3 / 1.3 · P_0
        assert!((l - 1.5 * 0.3 / 1.3 * p0).abs() < 1e-15);
    }

    #[test]
    fn q_specialisation_matches_general_printed_form() {
        let a = make_preset_algebra(Preset::QStandard, 0.9, 0.5).unwrap();
        let spec = DistributionSpec::builder(Kind::SecondKind, a)
            .n(6)
            .theta(vec![0.4, 0.3])
            .mode(FormulaMode::PaperLiteral)
            .build()
            .unwrap();
        let x = mi(&[1, 2]);
        let general =
            recursion_next(&spec, &x, &0.1, RecursionMode::PaperLiteral, Step::All).unwrap();
        let special = q_second_kind_recursion_next(0.5, 6, &[0.4, 0.3], &x, 0.1);
        assert!((general - special).abs() < 1e-15);
    }
}
