//! Every probability function is a product of a multinomial coefficient,
//! integer powers of a few bases and partial products of shifted sequences.
//! Keeping that structure explicit lets the same description drive both the
//! direct evaluation and the closed-form ratio between neighbouring indices.

use super::{DistributionSpec, Kind, Seq};
use crate::algebra::DeformationAlgebra;
use crate::combinatorics::{coeff_wide, MultiIndex};
use crate::error::{Error, Result};
use crate::real::{choose2, Real, Wide};
use crate::FormulaMode;

#[derive(Debug, Clone, PartialEq)]
pub struct Factors {
    /// `[top; lower_1, ..., lower_k]`
    coeff: Option<(i64, Vec<i64>)>,
    /// `1 / prod_j [v_j]!`
    inv_factorials: Vec<i64>,
    theta_exp: Vec<i64>,
    mu_exp: Vec<i64>,
    tau1_exp: i64,
    tau2_exp: i64,
    /// `(tau1 tau2)^e`, real because absorption parameters are real.
    tau12_exp: f64,
    /// `(tau1 - tau2)^e`
    diff_exp: i64,
    /// `(sequence, length, +1 numerator / -1 denominator)`
    seqs: Vec<(Seq, i64, i32)>,
    limit_constant: bool,
}

impl Factors {
    fn empty(k: usize) -> Self {
        Factors {
            coeff: None,
            inv_factorials: Vec::new(),
            theta_exp: vec![0; k],
            mu_exp: vec![0; k],
            tau1_exp: 0,
            tau2_exp: 0,
            tau12_exp: 0.0,
            diff_exp: 0,
            seqs: Vec::new(),
            limit_constant: false,
        }
    }

    pub(crate) fn of<T: Real>(spec: &DistributionSpec<T>, idx: &MultiIndex) -> Self {
        let k = idx.k();
        let n = spec.n() as i64;
        let s = idx.total();
        let lit = spec.mode() == FormulaMode::PaperLiteral;
        let v: Vec<i64> = idx.entries().iter().map(|&e| e as i64).collect();
        let mut f = Factors::empty(k);
        match spec.kind() {
            Kind::FirstKind => {
                f.coeff = Some((n, v.clone()));
                for j in 1..=k {
                    let y = idx.r(j);
                    f.theta_exp[j - 1] = y;
                    f.tau1_exp += if lit {
                        choose2(n - y)
                    } else {
                        choose2(n - idx.s(j))
                    };
                    f.tau2_exp += choose2(y);
                    f.seqs.push((Seq::Plus(j), n - idx.s(j - 1), -1));
                }
            }
            Kind::NegativeFirstKind => {
                f.coeff = Some((n + s - 1, v.clone()));
                for j in 1..=k {
                    let t = idx.r(j);
                    f.theta_exp[j - 1] = t;
                    f.tau1_exp += if lit {
                        choose2(n - t)
                    } else {
                        choose2(n + s - idx.s(j)) + t
                    };
                    f.tau2_exp += choose2(t);
                    f.seqs.push((Seq::Plus(j), n + s - idx.s(j - 1), -1));
                }
            }
            Kind::NegativeFirstKindFailures => {
                f.coeff = Some((n + s - 1, v.clone()));
                for j in 1..=k {
                    let vj = idx.r(j);
                    let before = n + s - idx.s(j - 1);
                    let stage = if lit { before } else { n + s - idx.s(j) };
                    f.theta_exp[j - 1] = stage;
                    f.tau1_exp += choose2(vj);
                    f.tau2_exp += choose2(stage) + vj;
                    f.seqs.push((Seq::Plus(j), before, -1));
                }
            }
            Kind::SecondKind | Kind::AbsorptionSecondKind
                if !(lit && spec.kind().is_absorption()) =>
            {
                f.coeff = Some((n, v.clone()));
                let absorb = spec.kind().is_absorption();
                for j in 1..=k {
                    let x = idx.r(j);
                    f.theta_exp[j - 1] = x;
                    let seq = if absorb {
                        Seq::Absorb(j)
                    } else {
                        Seq::Minus(j)
                    };
                    f.seqs.push((seq, n - idx.s(j), 1));
                    if !lit {
                        f.tau1_exp += choose2(x) - choose2(n - idx.s(j - 1));
                    }
                }
            }
            Kind::SecondKindSuccesses | Kind::AbsorptionSuccesses
                if !(lit && spec.kind().is_absorption()) =>
            {
                f.coeff = Some((n, v.clone()));
                let absorb = spec.kind().is_absorption();
                for j in 1..=k {
                    f.theta_exp[j - 1] = n - idx.s(j);
                    let seq = if absorb {
                        Seq::Absorb(j)
                    } else {
                        Seq::Minus(j)
                    };
                    f.seqs.push((seq, idx.r(j), 1));
                }
                if !lit {
                    f.tau1_exp += choose2(n - s) - choose2(n);
                }
            }
            Kind::AbsorptionSecondKind => {
                let m = spec.absorption().expect("absorption kind");
                f.coeff = Some((n, v.clone()));
                for j in 1..=k {
                    let x = idx.r(j) as f64;
                    let rest = n - idx.s(j);
                    f.tau12_exp -= x * (m[j - 1] - n as f64 + idx.s(j) as f64);
                    f.diff_exp += rest;
                    f.seqs.push((Seq::MOrdered(j), rest, 1));
                }
            }
            Kind::AbsorptionSuccesses => {
                let m = spec.absorption().expect("absorption kind");
                f.coeff = Some((n, v.clone()));
                for j in 1..=k {
                    let y = idx.r(j);
                    f.tau12_exp -= (m[j - 1] - y as f64) * (n - idx.s(j)) as f64;
                    f.diff_exp += y;
                    f.seqs.push((Seq::MOrdered(j), y, 1));
                }
            }
            Kind::NegativeSecondKind => {
                f.coeff = Some((n + s - 1, v.clone()));
                for j in 1..=k {
                    let w = idx.r(j);
                    let stage = n + s - idx.s(j);
                    f.theta_exp[j - 1] = w;
                    f.seqs.push((Seq::Minus(j), stage, 1));
                    if !lit {
                        f.tau1_exp += -w * (stage - 1) - choose2(stage);
                    }
                }
            }
            Kind::MultipleHeine => {
                f.inv_factorials = v.clone();
                f.limit_constant = true;
                for j in 1..=k {
                    let y = idx.r(j);
                    f.mu_exp[j - 1] = y;
                    f.tau2_exp += choose2(y);
                }
            }
            Kind::MultipleEuler => {
                f.inv_factorials = v.clone();
                f.limit_constant = true;
                for j in 1..=k {
                    let x = idx.r(j);
                    f.mu_exp[j - 1] = x;
                    if !lit {
                        f.tau1_exp += choose2(x);
                    }
                }
            }
            Kind::SecondKind | Kind::SecondKindSuccesses => unreachable!("handled above"),
        }
        f
    }

    fn coeff_is_zero(&self) -> bool {
        match &self.coeff {
            Some((top, lower)) => {
                let s: i64 = lower.iter().sum();
                lower.iter().any(|&l| l < 0) || (*top >= 0 && *top < s)
            }
            None => false,
        }
    }

    fn real_pow<T: Real>(base: &T, e: f64) -> Wide<T> {
        if e == e.trunc() && e.abs() < 9e15 {
            Wide::pow(base, e as i64)
        } else {
            Wide::from_value(base.powf(e))
        }
    }

    fn bases<T: Real>(alg: &DeformationAlgebra<T>) -> (T, T, T, T) {
        let (t1, t2) = (alg.tau1().clone(), alg.tau2().clone());
        (t1.clone(), t2.clone(), t1.clone() * t2.clone(), t1 - t2)
    }

    pub(crate) fn eval<T: Real>(&self, spec: &DistributionSpec<T>) -> Result<Wide<T>> {
        let alg = spec.formula_alg();
        let mut acc = match &self.coeff {
            Some((top, lower)) => coeff_wide(alg, *top, lower)?,
            None => Wide::one(),
        };
        if acc.is_zero() {
            return Ok(acc);
        }
        for &y in &self.inv_factorials {
            acc = acc.div(&alg.factorial_wide(y)?);
        }
        for (j, &e) in self.theta_exp.iter().enumerate() {
            acc = acc.mul_pow(&spec.theta()[j], e);
        }
        for (j, &e) in self.mu_exp.iter().enumerate() {
            if e != 0 {
                acc = acc.mul_pow(&spec.mu()[j], e);
            }
        }
        let (t1, t2, t12, diff) = Self::bases(alg);
        acc = acc.mul_pow(&t1, self.tau1_exp).mul_pow(&t2, self.tau2_exp);
        if self.tau12_exp != 0.0 {
            acc = acc.mul(&Self::real_pow(&t12, self.tau12_exp));
        }
        acc = acc.mul_pow(&diff, self.diff_exp);
        for &(seq, len, power) in &self.seqs {
            let p = spec.seq_product(seq, len)?;
            acc = if power > 0 { acc.mul(&p) } else { acc.div(&p) };
        }
        if self.limit_constant {
            acc = acc.mul(spec.limit_constant());
        }
        Ok(acc)
    }

    /// `[a]! / [b]!` as a product over the interval between them.
    fn factorial_quotient<T: Real>(alg: &DeformationAlgebra<T>, a: i64, b: i64) -> Result<Wide<T>> {
        let mut acc = Wide::one();
        if a >= b {
            for i in b + 1..=a {
                acc = acc.mul_value(alg.number(i)?);
            }
        } else {
            for i in a + 1..=b {
                acc = acc.div_value(alg.number(i)?);
            }
        }
        Ok(acc)
    }

    /// `eval(new) / eval(old)` without evaluating either side in full.
    pub(crate) fn ratio<T: Real>(
        new: &Factors,
        old: &Factors,
        spec: &DistributionSpec<T>,
    ) -> Result<Wide<T>> {
        let alg = spec.formula_alg();
        if old.coeff_is_zero() {
            return Err(Error::UndefinedRatio("current coefficient vanishes".into()));
        }
        if new.coeff_is_zero() {
            return Ok(Wide::zero());
        }
        let mut acc = Wide::one();
        if let (Some((top1, low1)), Some((top0, low0))) = (&new.coeff, &old.coeff) {
            let s1: i64 = low1.iter().sum();
            let s0: i64 = low0.iter().sum();
            acc = acc
                .mul(&Self::factorial_quotient(alg, *top1, *top0)?)
                .mul(&Self::factorial_quotient(alg, top0 - s0, top1 - s1)?);
            for (a, b) in low0.iter().zip(low1) {
                acc = acc.mul(&Self::factorial_quotient(alg, *a, *b)?);
            }
        }
        for (a, b) in old.inv_factorials.iter().zip(&new.inv_factorials) {
            acc = acc.mul(&Self::factorial_quotient(alg, *a, *b)?);
        }
        for j in 0..new.theta_exp.len() {
            acc = acc.mul_pow(&spec.theta()[j], new.theta_exp[j] - old.theta_exp[j]);
            let de = new.mu_exp[j] - old.mu_exp[j];
            if de != 0 {
                acc = acc.mul_pow(&spec.mu()[j], de);
            }
        }
        let (t1, t2, t12, diff) = Self::bases(alg);
        acc = acc
            .mul_pow(&t1, new.tau1_exp - old.tau1_exp)
            .mul_pow(&t2, new.tau2_exp - old.tau2_exp)
            .mul_pow(&diff, new.diff_exp - old.diff_exp);
        let d12 = new.tau12_exp - old.tau12_exp;
        if d12 != 0.0 {
            acc = acc.mul(&Self::real_pow(&t12, d12));
        }
        for (&(seq, len1, power), &(seq0, len0, _)) in new.seqs.iter().zip(&old.seqs) {
            debug_assert_eq!(seq, seq0);
            let (lo, hi) = (len0.min(len1), len0.max(len1));
            let mut part = Wide::one();
            for i in lo + 1..=hi {
                part = part.mul(&spec.seq_factor(seq, i)?);
            }
            let grows = len1 > len0;
            acc = if (power > 0) == grows {
                acc.mul(&part)
            } else {
                acc.div(&part)
            };
        }
        Ok(acc)
    }
}
