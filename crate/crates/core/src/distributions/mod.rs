//! Deformed multinomial distributions: trial model, probability functions,
//! tables, recursions, limit families and samplers.

mod factors;
use factors::Factors;
mod recursion;
mod sampler;
mod table;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::algebra::DeformationAlgebra;
use crate::combinatorics::MultiIndex;
use crate::error::{Error, Result};
use crate::real::{Real, Wide};
use crate::FormulaMode;

pub use recursion::{q_second_kind_recursion_next, recursion_next, RecursionMode, Step};
pub use sampler::{sample, Sampler};
pub use table::{
    limit_distance, limit_distance_with_mode, pmf_table, LimitFamily, PmfTable, TableStatus,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    FirstKind,
    NegativeFirstKind,
    NegativeFirstKindFailures,
    SecondKind,
    SecondKindSuccesses,
    NegativeSecondKind,
    MultipleHeine,
    MultipleEuler,
    AbsorptionSecondKind,
    AbsorptionSuccesses,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::FirstKind,
        Kind::NegativeFirstKind,
        Kind::NegativeFirstKindFailures,
        Kind::SecondKind,
        Kind::SecondKindSuccesses,
        Kind::NegativeSecondKind,
        Kind::MultipleHeine,
        Kind::MultipleEuler,
        Kind::AbsorptionSecondKind,
        Kind::AbsorptionSuccesses,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Kind::FirstKind => "first-kind",
            Kind::NegativeFirstKind => "negative-first-kind",
            Kind::NegativeFirstKindFailures => "negative-first-kind-failures",
            Kind::SecondKind => "second-kind",
            Kind::SecondKindSuccesses => "second-kind-successes",
            Kind::NegativeSecondKind => "negative-second-kind",
            Kind::MultipleHeine => "multiple-heine",
            Kind::MultipleEuler => "multiple-euler",
            Kind::AbsorptionSecondKind => "absorption-second-kind",
            Kind::AbsorptionSuccesses => "absorption-successes",
        }
    }

    /// Support is `{s_k <= n}`.
    pub fn is_finite(self) -> bool {
        matches!(
            self,
            Kind::FirstKind
                | Kind::SecondKind
                | Kind::SecondKindSuccesses
                | Kind::AbsorptionSecondKind
                | Kind::AbsorptionSuccesses
        )
    }

    pub fn is_absorption(self) -> bool {
        matches!(self, Kind::AbsorptionSecondKind | Kind::AbsorptionSuccesses)
    }

    pub fn is_limit(self) -> bool {
        matches!(self, Kind::MultipleHeine | Kind::MultipleEuler)
    }

    /// Families driven by the success-count conditioned trial model.
    pub fn is_second_kind_family(self) -> bool {
        matches!(
            self,
            Kind::SecondKind
                | Kind::SecondKindSuccesses
                | Kind::NegativeSecondKind
                | Kind::AbsorptionSecondKind
                | Kind::AbsorptionSuccesses
        )
    }

    /// Negative families: the coefficient top is `n + s_k - 1` and the
    /// conditional chain runs from the last coordinate backwards.
    pub fn is_negative(self) -> bool {
        matches!(
            self,
            Kind::NegativeFirstKind | Kind::NegativeFirstKindFailures | Kind::NegativeSecondKind
        )
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .iter()
            .copied()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown distribution kind `{s}`")))
    }
}

/// Enumeration policy for infinite supports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub eps_tail: f64,
    /// Largest total `s_k` enumerated before the table is declared truncated.
    pub max_index: u32,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            eps_tail: 1e-12,
            max_index: 500,
        }
    }
}

/// Probabilities of one trial of the first-kind model: odds
/// `theta (tau2/tau1)^(i-1)`.
pub fn trial_probabilities<T: Real>(alg: &DeformationAlgebra<T>, theta: &T, i: u32) -> (T, T) {
    let e = i.saturating_sub(1) as i64;
    let a = alg.tau1().powi(e);
    let b = theta.clone() * alg.tau2().powi(e);
    let d = a.clone() + b.clone();
    (b / d.clone(), a / d)
}

/// Success probability of the second-kind model after `c` earlier successes.
pub fn second_kind_success<T: Real>(alg: &DeformationAlgebra<T>, theta: &T, c: u32) -> T {
    T::one() - theta.clone() * alg.ratio().powi(c as i64)
}

/// Sequences of partial products used by the probability functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Seq {
    /// `(1 ⊕ theta_j)^l`
    Plus(usize),
    /// `(1 ⊖ theta_j)^l`
    Minus(usize),
    /// `(1 ⊖ Q^{m_j})^l` under the inverted algebra, factor by factor
    /// `tau1'^{i-1} (1 - Q^{m_j - i + 1})`.
    Absorb(usize),
    /// `[m_j]_l` with real `m_j`.
    MOrdered(usize),
}

/// One named distribution with validated parameters.
pub struct DistributionSpec<T: Real = f64> {
    kind: Kind,
    n: u32,
    theta: Vec<T>,
    absorption: Option<Vec<f64>>,
    algebra: DeformationAlgebra<T>,
    formula_alg: DeformationAlgebra<T>,
    truncation: Truncation,
    mode: FormulaMode,
    allow_large_theta: bool,
    mu: Vec<T>,
    limit_constant: Wide<T>,
    seq_cache: RwLock<HashMap<Seq, Vec<Wide<T>>>>,
}

impl<T: Real> Clone for DistributionSpec<T> {
    fn clone(&self) -> Self {
        DistributionSpec {
            kind: self.kind,
            n: self.n,
            theta: self.theta.clone(),
            absorption: self.absorption.clone(),
            algebra: self.algebra.clone(),
            formula_alg: self.formula_alg.clone(),
            truncation: self.truncation,
            mode: self.mode,
            allow_large_theta: self.allow_large_theta,
            mu: self.mu.clone(),
            limit_constant: self.limit_constant.clone(),
            seq_cache: RwLock::new(HashMap::new()),
        }
    }
}

impl<T: Real> fmt::Debug for DistributionSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistributionSpec")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("theta", &self.theta)
            .field("absorption", &self.absorption)
            .field("algebra", &self.algebra)
            .field("mode", &self.mode)
            .finish()
    }
}

/// Builder for [`DistributionSpec`].
pub struct SpecBuilder<T: Real> {
    kind: Kind,
    algebra: DeformationAlgebra<T>,
    n: u32,
    theta: Vec<T>,
    absorption: Option<Vec<f64>>,
    truncation: Truncation,
    mode: FormulaMode,
    allow_large_theta: bool,
}

impl<T: Real> SpecBuilder<T> {
    pub fn n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }
    pub fn theta(mut self, theta: Vec<T>) -> Self {
        self.theta = theta;
        self
    }
    /// Absorption parameters `m_j > 0`; `theta_j` becomes `(tau2/tau1)^{m_j}`.
    pub fn absorption(mut self, m: Vec<f64>) -> Self {
        self.absorption = Some(m);
        self
    }
    pub fn truncation(mut self, t: Truncation) -> Self {
        self.truncation = t;
        self
    }
    pub fn mode(mut self, mode: FormulaMode) -> Self {
        self.mode = mode;
        self
    }
    /// Accept `theta_j >= 1` where the trial model still makes sense.
    pub fn allow_large_theta(mut self, yes: bool) -> Self {
        self.allow_large_theta = yes;
        self
    }

    pub fn build(self) -> Result<DistributionSpec<T>> {
        DistributionSpec::validate_and_build(self)
    }
}

impl<T: Real> DistributionSpec<T> {
    pub fn builder(kind: Kind, algebra: DeformationAlgebra<T>) -> SpecBuilder<T> {
        SpecBuilder {
            kind,
            algebra,
            n: 0,
            theta: Vec::new(),
            absorption: None,
            truncation: Truncation::default(),
            mode: FormulaMode::Corrected,
            allow_large_theta: false,
        }
    }

    /// Shorthand for the common case.
    pub fn new(kind: Kind, algebra: DeformationAlgebra<T>, n: u32, theta: Vec<T>) -> Result<Self> {
        Self::builder(kind, algebra).n(n).theta(theta).build()
    }

    fn validate_and_build(b: SpecBuilder<T>) -> Result<Self> {
        let kind = b.kind;
        let alg = b.algebra;
        let q = alg.ratio();
        let theta: Vec<T> = if kind.is_absorption() {
            let m = b.absorption.as_ref().ok_or_else(|| {
                Error::InvalidArgument(format!("{kind} needs absorption parameters m"))
            })?;
            if m.is_empty() {
                return Err(Error::InvalidArgument(
                    "need k >= 1 absorption parameters".into(),
                ));
            }
            for &mj in m {
                if !(mj > 0.0 && mj.is_finite()) {
                    return Err(Error::Domain(format!(
                        "absorption parameter m = {mj} must be > 0"
                    )));
                }
            }
            m.iter().map(|&mj| q.powf(mj)).collect()
        } else {
            b.theta.clone()
        };
        if theta.is_empty() {
            return Err(Error::InvalidArgument(
                "need k >= 1 parameters theta".into(),
            ));
        }
        for (j, t) in theta.iter().enumerate() {
            if !(t.is_finite() && *t > T::zero()) {
                return Err(Error::Domain(format!(
                    "theta_{} = {} must be > 0",
                    j + 1,
                    t.to_f64()
                )));
            }
            if !kind.is_absorption() && !b.allow_large_theta && !(*t < T::one()) {
                return Err(Error::Domain(format!(
                    "theta_{} = {} must be < 1 (override available)",
                    j + 1,
                    t.to_f64()
                )));
            }
        }
        if kind.is_negative() && b.n == 0 {
            return Err(Error::InvalidArgument(format!("{kind} needs n >= 1")));
        }

        // success probabilities of the second-kind model along the support
        if kind.is_second_kind_family() {
            let trials = if kind == Kind::NegativeSecondKind {
                if q > T::one() {
                    return Err(Error::Domain(format!(
                        "{kind}: tau2/tau1 = {} > 1 drives success probabilities below 0",
                        q.to_f64()
                    )));
                }
                // later trials only move the probability toward 1
                1
            } else {
                b.n
            };
            for (j, t) in theta.iter().enumerate() {
                for c in 0..trials {
                    let p = if kind.is_absorption() {
                        let mj = b.absorption.as_ref().expect("checked")[j];
                        T::one() - q.powf(mj - c as f64)
                    } else {
                        T::one() - t.clone() * q.powi(c as i64)
                    };
                    if p.is_zero() && kind.is_absorption() {
                        break;
                    }
                    if p < T::zero() || p > T::one() {
                        return Err(Error::Domain(format!(
                            "{kind}: success probability {} of kind j = {} at trial i = {} outside [0, 1]",
                            p.to_f64(),
                            j + 1,
                            c + 1
                        )));
                    }
                }
            }
        }

        let formula_alg = if kind.is_absorption() && b.mode == FormulaMode::Corrected {
            alg.invert_parameters()?
        } else {
            alg.clone()
        };

        let (mu, limit_constant) = if kind.is_limit() {
            let (t1, t2) = (alg.tau1().clone(), alg.tau2().clone());
            if !(t1 > t2) {
                return Err(Error::Domain(format!(
                    "{kind} needs tau1 > tau2, got tau1 = {}, tau2 = {}",
                    t1.to_f64(),
                    t2.to_f64()
                )));
            }
            let diff = t1.clone() - t2;
            let mu: Vec<T> = theta
                .iter()
                .map(|th| match b.mode {
                    FormulaMode::PaperLiteral => th.clone() / diff.clone(),
                    FormulaMode::Corrected => {
                        th.clone() * alg.number(1).unwrap_or_else(|_| T::one()) * t1.clone()
                            / diff.clone()
                    }
                })
                .collect();
            let mut c = Wide::one();
            for m in &mu {
                let z = -m.clone();
                let v = if kind == Kind::MultipleHeine {
                    alg.exp_small(&z, T::EPSILON)?
                } else {
                    alg.exp_big(&z, T::EPSILON)?
                };
                if !(v > T::zero()) {
                    return Err(Error::Domain(format!(
                        "{kind}: normalising exponential {} is not positive",
                        v.to_f64()
                    )));
                }
                c = c.mul_value(v);
            }
            (mu, c)
        } else {
            (Vec::new(), Wide::one())
        };

        Ok(DistributionSpec {
            kind,
            n: b.n,
            theta,
            absorption: b.absorption,
            algebra: alg,
            formula_alg,
            truncation: b.truncation,
            mode: b.mode,
            allow_large_theta: b.allow_large_theta,
            mu,
            limit_constant,
            seq_cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn k(&self) -> usize {
        self.theta.len()
    }
    /// Effective `theta_j` (for absorption kinds, `(tau2/tau1)^{m_j}`).
    pub fn theta(&self) -> &[T] {
        &self.theta
    }
    pub fn absorption(&self) -> Option<&[f64]> {
        self.absorption.as_deref()
    }
    pub fn algebra(&self) -> &DeformationAlgebra<T> {
        &self.algebra
    }
    pub fn truncation(&self) -> Truncation {
        self.truncation
    }
    pub fn mode(&self) -> FormulaMode {
        self.mode
    }
    pub fn allows_large_theta(&self) -> bool {
        self.allow_large_theta
    }
    /// Limit-family means `mu_j`; empty for other kinds.
    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    /// Copy with `k = 1` and parameter `j` (1-based), used by the
    /// conditional chain.
    pub(crate) fn univariate(&self, j: usize, n: u32) -> Result<DistributionSpec<T>> {
        let mut b = Self::builder(self.kind, self.algebra.clone())
            .n(n)
            .theta(vec![self.theta[j - 1].clone()])
            .truncation(self.truncation)
            .mode(self.mode)
            .allow_large_theta(self.allow_large_theta);
        if let Some(m) = &self.absorption {
            b = b.absorption(vec![m[j - 1]]);
        }
        b.build()
    }

    pub(crate) fn in_support(&self, idx: &MultiIndex) -> bool {
        !self.kind.is_finite() || idx.total() <= self.n as i64
    }

    fn check_index(&self, idx: &MultiIndex) -> Result<()> {
        if idx.k() != self.k() {
            return Err(Error::InvalidArgument(format!(
                "index {idx} has {} entries, distribution has k = {}",
                idx.k(),
                self.k()
            )));
        }
        Ok(())
    }

    /// Factor `i` (1-based) of a sequence.
    pub(crate) fn seq_factor(&self, seq: Seq, i: i64) -> Result<Wide<T>> {
        let alg = &self.formula_alg;
        let one = T::one();
        let e = i - 1;
        Ok(match seq {
            Seq::Plus(j) | Seq::Minus(j) => {
                let th = &self.theta[j - 1];
                let (t1, t2) = (alg.tau1().clone(), alg.tau2().clone());
                let plus = matches!(seq, Seq::Plus(_));
                let combine = |a: T, b: T| if plus { a + b } else { a - b };
                if t1 >= t2 {
                    let r = (t2 / t1.clone()).powi(e);
                    Wide::pow(&t1, e).mul_value(combine(one, th.clone() * r))
                } else {
                    let r = (t1 / t2.clone()).powi(e);
                    Wide::pow(&t2, e).mul_value(combine(r, th.clone()))
                }
            }
            Seq::Absorb(j) => {
                let m = self.absorption.as_ref().expect("absorption kind")[j - 1];
                let q = self.algebra.ratio();
                Wide::pow(alg.tau1(), e).mul_value(one - q.powf(m - e as f64))
            }
            Seq::MOrdered(j) => {
                let m = self.absorption.as_ref().expect("absorption kind")[j - 1];
                Wide::from_value(alg.number_real(m - e as f64)?)
            }
        })
    }

    /// `prod_{i=1..len}` of the sequence factors, memoised.
    pub(crate) fn seq_product(&self, seq: Seq, len: i64) -> Result<Wide<T>> {
        if len < 0 {
            return Err(Error::InvalidArgument(format!("sequence length {len}")));
        }
        let len = len as usize;
        {
            let cache = self.seq_cache.read().expect("sequence cache poisoned");
            if let Some(v) = cache.get(&seq).and_then(|v| v.get(len)) {
                return Ok(v.clone());
            }
        }
        let mut cache = self.seq_cache.write().expect("sequence cache poisoned");
        let v = cache.entry(seq).or_insert_with(|| vec![Wide::one()]);
        while v.len() <= len {
            let i = v.len() as i64;
            let next = v[v.len() - 1].clone().mul(&self.seq_factor(seq, i)?);
            v.push(next);
        }
        Ok(v[len].clone())
    }

    pub(crate) fn factors(&self, idx: &MultiIndex) -> Factors {
        Factors::of(self, idx)
    }

    pub(crate) fn pmf_wide(&self, idx: &MultiIndex) -> Result<Wide<T>> {
        self.check_index(idx)?;
        if !self.in_support(idx) {
            return Ok(Wide::zero());
        }
        self.factors(idx).eval(self)
    }

    /// Probability of `idx`; 0 outside the support.
    pub fn pmf(&self, idx: &MultiIndex) -> Result<T> {
        let v = self.pmf_wide(idx)?.value();
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{} at {idx}", self.kind)));
        }
        Ok(v)
    }

    /// Probability of the zero index.
    pub fn p_zero(&self) -> Result<T> {
        self.pmf(&MultiIndex::zeros(self.k()))
    }

    pub(crate) fn limit_constant(&self) -> &Wide<T> {
        &self.limit_constant
    }
    pub(crate) fn formula_alg(&self) -> &DeformationAlgebra<T> {
        &self.formula_alg
    }
}

/// Probability of `index` under `spec`.
pub fn pmf<T: Real>(spec: &DistributionSpec<T>, index: &MultiIndex) -> Result<T> {
    spec.pmf(index)
}

/// Probability of the zero index.
pub fn p_zero<T: Real>(spec: &DistributionSpec<T>) -> Result<T> {
    spec.p_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_preset_algebra, Preset};

    fn qstd() -> DeformationAlgebra {
        make_preset_algebra(Preset::QStandard, 0.9, 0.5).unwrap()
    }
    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn trial_probability_examples() {
        let (s, f) = trial_probabilities(&qstd(), &0.3, 1);
        assert!((s - 0.3 / 1.3).abs() < 1e-16 && (f - 1.0 / 1.3).abs() < 1e-16);
        let (s, f) = trial_probabilities(&qstd(), &0.3, 2);
        assert!((s - 0.15 / 1.15).abs() < 1e-16 && (f - 1.0 / 1.15).abs() < 1e-16);
        assert!((s + f - 1.0).abs() < 1e-16);
    }

    #[test]
    fn pmf_examples() {
        let first = DistributionSpec::new(Kind::FirstKind, qstd(), 2, vec![0.3]).unwrap();
        assert!((first.pmf(&mi(&[1])).unwrap() - 0.45 / 1.495).abs() < 1e-15);
        assert_eq!(first.pmf(&mi(&[3])).unwrap(), 0.0);
        assert!((first.p_zero().unwrap() - 1.0 / 1.495).abs() < 1e-15);
        let second = DistributionSpec::new(Kind::SecondKind, qstd(), 2, vec![0.4]).unwrap();
        assert!((second.pmf(&mi(&[1])).unwrap() - 0.36).abs() < 1e-15);
        assert!((second.p_zero().unwrap() - 0.48).abs() < 1e-15);
        let heine = DistributionSpec::new(Kind::MultipleHeine, qstd(), 0, vec![0.3]).unwrap();
        assert!((heine.mu()[0] - 0.6).abs() < 1e-15);
        let e = qstd().exp_small(&-0.6, 1e-17).unwrap();
        assert!((heine.pmf(&mi(&[0])).unwrap() - e).abs() < 1e-15);
    }

    #[test]
    fn domain_validation() {
        assert!(DistributionSpec::new(Kind::FirstKind, qstd(), 2, vec![1.3]).is_err());
        assert!(DistributionSpec::builder(Kind::FirstKind, qstd())
            .n(2)
            .theta(vec![1.3])
            .allow_large_theta(true)
            .build()
            .is_ok());
        let bm = make_preset_algebra(Preset::BiedenharnMacfarlane, 0.9, 0.5).unwrap();
        let err = DistributionSpec::new(Kind::SecondKind, bm.clone(), 8, vec![0.4]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(DistributionSpec::new(Kind::MultipleHeine, bm, 0, vec![0.3]).is_err());
        assert!(DistributionSpec::new(Kind::NegativeFirstKind, qstd(), 0, vec![0.3]).is_err());
        assert!("poisson".parse::<Kind>().is_err());
    }
}
