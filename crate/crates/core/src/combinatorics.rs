//! Shifted factorials, deformed binomial and multinomial coefficients,
//! coefficient recurrences and both sides of the multinomial theorems.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::DeformationAlgebra;
use crate::error::{Error, Result};
use crate::real::{choose2, CompensatedSum, Real, Wide};
use crate::FormulaMode;

/// A tuple `(r_1, ..., r_k)` of non-negative integers, ordered
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(r: Vec<u32>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::InvalidArgument(
                "multi-index needs k >= 1 entries".into(),
            ));
        }
        Ok(MultiIndex(r))
    }

    pub fn zeros(k: usize) -> Self {
        MultiIndex(vec![0; k.max(1)])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// `r_j`, 1-based.
    pub fn r(&self, j: usize) -> i64 {
        self.0[j - 1] as i64
    }

    /// Partial sum `s_j = r_1 + ... + r_j`, with `s_0 = 0`.
    pub fn s(&self, j: usize) -> i64 {
        self.0[..j].iter().map(|&v| v as i64).sum()
    }

    /// Tail sum `m_j = r_j + ... + r_k`, with `m_{k+1} = 0`.
    pub fn m(&self, j: usize) -> i64 {
        self.0[j - 1..].iter().map(|&v| v as i64).sum()
    }

    pub fn total(&self) -> i64 {
        self.s(self.k())
    }

    fn as_i64(&self) -> Vec<i64> {
        self.0.iter().map(|&v| v as i64).collect()
    }

    pub(crate) fn with_entry(&self, j: usize, value: u32) -> MultiIndex {
        let mut v = self.0.clone();
        v[j - 1] = value;
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let r = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidArgument(format!("bad index entry `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        MultiIndex::new(r)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(if v.is_empty() { vec![0] } else { v })
    }
}

/// All `k`-indices with `s_k <= n`, in lexicographic order.
pub fn compositions(n: u32, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; k];
    fn rec(j: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if j == cur.len() {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for v in 0..=left {
            cur[j] = v;
            rec(j + 1, left - v, cur, out);
        }
        cur[j] = 0;
    }
    rec(0, n, &mut cur, &mut out);
    out
}

/// All `k`-indices with `s_k == s`, in lexicographic order.
pub fn shell_indices(s: u32, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; k];
    fn rec(j: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if j + 1 == cur.len() {
            cur[j] = left;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for v in 0..=left {
            cur[j] = v;
            rec(j + 1, left - v, cur, out);
        }
    }
    rec(0, s, &mut cur, &mut out);
    out
}

/// All `k`-indices with every entry in `0..=trunc`, in lexicographic order.
pub fn box_indices(trunc: u32, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; k];
    loop {
        out.push(MultiIndex(cur.clone()));
        let mut j = k;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if cur[j] < trunc {
                cur[j] += 1;
                for v in cur.iter_mut().skip(j + 1) {
                    *v = 0;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shift {
    Plus,
    Minus,
}

/// Prefix products `(a ± b)^i`, `i = 0..=m`, where
/// `(a ± b)^i = prod_{l=1..i} (a tau1^(l-1) ± b tau2^(l-1))`.
///
/// The larger structure function is factored out of every term so long
/// products lose neither range nor the small summand.
pub(crate) fn shifted_prefix<T: Real>(
    alg: &DeformationAlgebra<T>,
    a: &T,
    b: &T,
    sign: Shift,
    m: usize,
) -> Vec<Wide<T>> {
    let t1 = alg.tau1().clone();
    let t2 = alg.tau2().clone();
    let tau1_big = t1 >= t2;
    let (big, ratio) = if tau1_big {
        (t1.clone(), t2 / t1)
    } else {
        (t2.clone(), t1 / t2)
    };
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = Wide::one();
    out.push(acc.clone());
    let mut ratio_pow = T::one();
    for l in 1..=m {
        let (ca, cb) = if tau1_big {
            (a.clone(), b.clone() * ratio_pow.clone())
        } else {
            (a.clone() * ratio_pow.clone(), b.clone())
        };
        let factor = match sign {
            Shift::Plus => ca + cb,
            Shift::Minus => ca - cb,
        };
        acc = acc.mul_value(factor).mul_pow(&big, (l - 1) as i64);
        out.push(acc.clone());
        ratio_pow = ratio_pow * ratio.clone();
    }
    out
}

pub(crate) fn shifted_factorial_wide<T: Real>(
    alg: &DeformationAlgebra<T>,
    a: &T,
    b: &T,
    n: usize,
    sign: Shift,
) -> Wide<T> {
    shifted_prefix(alg, a, b, sign, n)
        .pop()
        .expect("prefix has n+1 entries")
}

fn finite<T: Real>(v: T, what: impl FnOnce() -> String) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what()))
    }
}

/// `(a ⊕ b)^n` or `(a ⊖ b)^n`.
pub fn shifted_factorial<T: Real>(
    alg: &DeformationAlgebra<T>,
    a: &T,
    b: &T,
    n: i64,
    sign: Shift,
) -> Result<T> {
    if n < 0 {
        return Err(Error::InvalidArgument(format!(
            "shifted factorial of order {n}"
        )));
    }
    finite(
        shifted_factorial_wide(alg, a, b, n as usize, sign).value(),
        || format!("shifted factorial of order {n}"),
    )
}

/// Multinomial coefficient with signed lower entries; any negative entry
/// gives 0.
pub(crate) fn coeff_wide<T: Real>(
    alg: &DeformationAlgebra<T>,
    x: i64,
    r: &[i64],
) -> Result<Wide<T>> {
    if r.iter().any(|&v| v < 0) {
        return Ok(Wide::zero());
    }
    let s: i64 = r.iter().sum();
    let mut acc = alg.ordered_factorial_wide(x, s)?;
    if acc.is_zero() {
        return Ok(acc);
    }
    for &v in r {
        acc = acc.div(&alg.factorial_wide(v)?);
    }
    Ok(acc)
}

/// `[m]! / ([n]! [m-n]!)`.
pub fn binomial<T: Real>(alg: &DeformationAlgebra<T>, m: i64, n: i64) -> Result<T> {
    if n < 0 || n > m {
        return Err(Error::InvalidArgument(format!(
            "binomial({m}, {n}) needs 0 <= n <= m"
        )));
    }
    let v = alg
        .factorial_wide(m)?
        .div(&alg.factorial_wide(n)?)
        .div(&alg.factorial_wide(m - n)?);
    finite(v.value(), || format!("binomial({m}, {n})"))
}

/// `[x]_{s_k} / prod_j [r_j]!`; zero when `x < s_k`.
pub fn multinomial<T: Real>(alg: &DeformationAlgebra<T>, x: i64, r: &MultiIndex) -> Result<T> {
    if x < 0 {
        return Err(Error::InvalidArgument(format!(
            "multinomial upper index {x} < 0"
        )));
    }
    finite(coeff_wide(alg, x, &r.as_i64())?.value(), || {
        format!("multinomial({x}; {r})")
    })
}

/// `prod_j binomial(n - s_{j-1}, r_j)`.
pub fn multinomial_product_form<T: Real>(
    alg: &DeformationAlgebra<T>,
    n: i64,
    r: &MultiIndex,
) -> Result<T> {
    if r.total() > n {
        return Err(Error::InvalidArgument(format!(
            "s_k = {} exceeds n = {n}",
            r.total()
        )));
    }
    let mut acc = Wide::one();
    for j in 1..=r.k() {
        let top = n - r.s(j - 1);
        let rj = r.r(j);
        acc = acc
            .mul(&alg.factorial_wide(top)?)
            .div(&alg.factorial_wide(rj)?)
            .div(&alg.factorial_wide(top - rj)?);
    }
    finite(acc.value(), || format!("product form ({n}; {r})"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InverseConvention {
    /// Exponent written with tail sums `m_j`.
    TailSums,
    /// Exponent written with partial sums `s_j`.
    PartialSums,
}

/// Multinomial coefficient of the inverted algebra obtained by rescaling the
/// coefficient of `alg`.
pub fn multinomial_inverse_params<T: Real>(
    alg: &DeformationAlgebra<T>,
    x: i64,
    r: &MultiIndex,
    convention: InverseConvention,
) -> Result<T> {
    if r.total() > x {
        return Err(Error::InvalidArgument(format!(
            "s_k = {} exceeds x = {x}",
            r.total()
        )));
    }
    let exponent: i64 = (1..=r.k())
        .map(|j| {
            let w = match convention {
                InverseConvention::TailSums => r.m(j),
                InverseConvention::PartialSums => r.s(j),
            };
            -r.r(j) * (x - w)
        })
        .sum();
    let t = alg.tau1().clone() * alg.tau2().clone();
    let v = coeff_wide(alg, x, &r.as_i64())?.mul_pow(&t, exponent);
    finite(v.value(), || {
        format!("inverse-parameter multinomial({x}; {r})")
    })
}

/// The four recurrences expressing a coefficient with upper index `x` through
/// coefficients with upper index `x - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recurrence {
    /// Leading term `tau1^{s_k}`, weights in tail sums.
    Tau1Tail,
    /// Leading term `tau2^{s_k}`, weights in partial sums.
    Tau2Partial,
    /// Leading term `tau2^{s_k}`, weights in tail sums.
    Tau2Tail,
    /// Leading term `tau1^{s_k}`, weights in partial sums.
    Tau1Partial,
}

impl Recurrence {
    pub const ALL: [Recurrence; 4] = [
        Recurrence::Tau1Tail,
        Recurrence::Tau2Partial,
        Recurrence::Tau2Tail,
        Recurrence::Tau1Partial,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Recurrence::Tau1Tail => "tau1-tail",
            Recurrence::Tau2Partial => "tau2-partial",
            Recurrence::Tau2Tail => "tau2-tail",
            Recurrence::Tau1Partial => "tau1-partial",
        }
    }
}

impl FromStr for Recurrence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Recurrence::ALL
            .iter()
            .copied()
            .find(|v| v.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown recurrence `{s}`")))
    }
}

/// Right-hand side of a coefficient recurrence.
///
/// `PaperLiteral` uses the weights as printed, which reproduce the
/// coefficient only when `tau1 = 1`.
pub fn recurrence_rhs<T: Real>(
    alg: &DeformationAlgebra<T>,
    x: i64,
    r: &MultiIndex,
    variant: Recurrence,
    mode: FormulaMode,
) -> Result<T> {
    if x < 1 {
        return Err(Error::InvalidArgument(format!(
            "recurrence needs x >= 1, got {x}"
        )));
    }
    let k = r.k();
    let rv = r.as_i64();
    let (t1, t2) = (alg.tau1().clone(), alg.tau2().clone());
    let sk = r.total();
    let literal = mode == FormulaMode::PaperLiteral;

    let (lead1, lead2) = match (variant, literal) {
        (Recurrence::Tau1Tail, _) | (Recurrence::Tau1Partial, false) => (sk, 0),
        (Recurrence::Tau2Partial, _) | (Recurrence::Tau2Tail, _) => (0, sk),
        (Recurrence::Tau1Partial, true) => (x, 0),
    };
    let mut sum = CompensatedSum::new();
    let base = coeff_wide(alg, x - 1, &rv)?
        .mul_pow(&t1, lead1)
        .mul_pow(&t2, lead2);
    sum.add(base.value());

    for j in 1..=k {
        let mut lowered = rv.clone();
        lowered[j - 1] -= 1;
        let c = coeff_wide(alg, x - 1, &lowered)?;
        if c.is_zero() {
            continue;
        }
        let m_next = if j == k { 0 } else { r.m(j + 1) };
        let (e1, e2) = match (variant, literal) {
            (Recurrence::Tau1Tail, false) => (m_next, x - r.m(j)),
            (Recurrence::Tau1Tail, true) => (0, x - r.m(j)),
            (Recurrence::Tau2Partial, false) => (x - r.s(j), r.s(j - 1)),
            (Recurrence::Tau2Partial, true) => (x - r.m(j), r.s(j - 1)),
            (Recurrence::Tau2Tail, false) => (x - r.m(j), m_next),
            (Recurrence::Tau2Tail, true) => {
                if j < k {
                    (0, m_next)
                } else {
                    (x, 0)
                }
            }
            (Recurrence::Tau1Partial, false) => (r.s(j - 1), x - r.s(j)),
            (Recurrence::Tau1Partial, true) => (0, x - r.s(j)),
        };
        sum.add(c.mul_pow(&t1, e1).mul_pow(&t2, e2).value());
    }
    finite(sum.value(), || {
        format!("recurrence {} at ({x}; {r})", variant.id())
    })
}

/// Both sides of an identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Sides<T> {
    pub sum: T,
    pub target: T,
    /// Sum of the absolute values of the terms; the scale of rounding error
    /// in `sum` when terms cancel.
    pub magnitude: T,
}

impl<T: Real> Sides<T> {
    /// Sides of a comparison between two plain values.
    pub fn of(sum: T, target: T) -> Self {
        let magnitude = sum.abs();
        Sides {
            sum,
            target,
            magnitude,
        }
    }

    pub fn abs_residual(&self) -> f64 {
        (self.sum.clone() - self.target.clone()).abs().to_f64()
    }

    /// Residual relative to the largest of `|target|`, `|sum|` and the term
    /// magnitude; absolute when all vanish.
    pub fn rel_residual(&self) -> f64 {
        let scale = T::max_of(
            T::max_of(self.target.abs(), self.sum.abs()),
            self.magnitude.abs(),
        );
        if scale.is_zero() {
            0.0
        } else {
            ((self.sum.clone() - self.target.clone()).abs() / scale).to_f64()
        }
    }
}

/// Compensated sum of identity terms that also tracks their magnitude.
struct Terms<T> {
    sum: CompensatedSum<T>,
    magnitude: CompensatedSum<T>,
}

impl<T: Real> Terms<T> {
    fn new() -> Self {
        Terms {
            sum: CompensatedSum::new(),
            magnitude: CompensatedSum::new(),
        }
    }

    fn add(&mut self, v: T) {
        self.magnitude.add(v.abs());
        self.sum.add(v);
    }

    fn sides(self, target: T, what: &str) -> Result<Sides<T>> {
        Ok(Sides {
            sum: finite(self.sum.value(), || what.to_string())?,
            target,
            magnitude: self.magnitude.value(),
        })
    }
}

fn tau_powers<T: Real>(base: Wide<T>, t1: &T, e1: i64, t2: &T, e2: i64) -> Wide<T> {
    base.mul_pow(t1, e1).mul_pow(t2, e2)
}

fn product_plus<T: Real>(alg: &DeformationAlgebra<T>, xs: &[T], n: usize) -> Result<T> {
    let mut acc = Wide::one();
    for x in xs {
        acc = acc.mul(&shifted_factorial_wide(alg, &T::one(), x, n, Shift::Plus));
    }
    finite(acc.value(), || "product of shifted factorials".into())
}

/// Multinomial theorem: the sum over `s_k <= n` against
/// `prod_j (1 ⊕ x_j)^n`.
pub fn multinomial_theorem_sum<T: Real>(
    alg: &DeformationAlgebra<T>,
    xs: &[T],
    n: u32,
    mode: FormulaMode,
) -> Result<Sides<T>> {
    let k = xs.len();
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one variable".into()));
    }
    let ni = n as i64;
    let (t1, t2) = (alg.tau1().clone(), alg.tau2().clone());
    // (tau1^m ⊕ x tau2^m)^l for m = n - l
    let mut sum = Terms::new();
    for r in compositions(n, k) {
        let mut term = coeff_wide(alg, ni, &r.as_i64())?;
        for j in 1..=k {
            let rj = r.r(j);
            let prev = r.s(j - 1);
            let e1 = match mode {
                FormulaMode::PaperLiteral => choose2(ni - rj),
                FormulaMode::Corrected => choose2(ni - r.s(j)),
            };
            let m = ni - prev;
            let a = t1.powi(m);
            let b = xs[j - 1].clone() * t2.powi(m);
            term = tau_powers(term, &t1, e1, &t2, choose2(rj))
                .mul(&Wide::pow(&xs[j - 1], rj))
                .mul(&shifted_factorial_wide(
                    alg,
                    &a,
                    &b,
                    prev as usize,
                    Shift::Plus,
                ));
        }
        sum.add(term.value());
    }
    sum.sides(
        product_plus(alg, xs, n as usize)?,
        "multinomial theorem sum",
    )
}

/// Truncated negative multinomial theorem with a tail diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSides<T> {
    pub sides: Sides<T>,
    /// Largest term with some entry equal to the truncation bound.
    pub boundary_term: f64,
    pub converged: bool,
}

/// Negative multinomial theorem: the series over `r_j in 0..=trunc`
/// against `prod_j (1 ⊕ x_j)^n`.
pub fn negative_multinomial_theorem_sum<T: Real>(
    alg: &DeformationAlgebra<T>,
    xs: &[T],
    n: u32,
    trunc: u32,
    mode: FormulaMode,
    eps: f64,
) -> Result<SeriesSides<T>> {
    let k = xs.len();
    if k == 0 || n == 0 {
        return Err(Error::InvalidArgument("need k >= 1 and n >= 1".into()));
    }
    let ni = n as i64;
    let (t1, t2) = (alg.tau1().clone(), alg.tau2().clone());
    let a = t1.powi(ni);
    let max_len = k * trunc as usize;
    let prefixes: Vec<Vec<Wide<T>>> = xs
        .iter()
        .map(|x| shifted_prefix(alg, &a, &(x.clone() * t2.powi(ni)), Shift::Plus, max_len))
        .collect();
    let mut sum = Terms::new();
    let mut boundary = 0.0f64;
    for r in box_indices(trunc, k) {
        let s = r.total();
        let mut term = coeff_wide(alg, ni + s - 1, &r.as_i64())?;
        for j in 1..=k {
            let rj = r.r(j);
            let e1 = match mode {
                FormulaMode::PaperLiteral => choose2(ni - rj),
                FormulaMode::Corrected => choose2(ni + s - r.s(j)) + rj,
            };
            term = tau_powers(term, &t1, e1, &t2, choose2(rj))
                .mul(&Wide::pow(&xs[j - 1], rj))
                .div(&prefixes[j - 1][(s - r.s(j - 1)) as usize]);
        }
        let v = term.value();
        if r.entries().contains(&trunc) {
            boundary = boundary.max(v.abs().to_f64());
        }
        sum.add(v);
    }
    let target = product_plus(alg, xs, n as usize)?;
    let converged = boundary <= eps * target.abs().to_f64().max(f64::MIN_POSITIVE);
    Ok(SeriesSides {
        sides: sum.sides(target, "negative multinomial theorem sum")?,
        boundary_term: boundary,
        converged,
    })
}

/// Alternative multinomial theorem with `k + 1` variables: the sum against
/// `(1 ⊖ x_1 ... x_{k+1})^n`.
pub fn alternative_multinomial_sum<T: Real>(
    alg: &DeformationAlgebra<T>,
    xs: &[T],
    n: u32,
) -> Result<Sides<T>> {
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("need k + 1 >= 2 variables".into()));
    }
    let k = xs.len() - 1;
    let ni = n as i64;
    let one = T::one();
    let prefixes: Vec<Vec<Wide<T>>> = xs
        .iter()
        .map(|x| shifted_prefix(alg, &one, x, Shift::Minus, n as usize))
        .collect();
    let mut sum = Terms::new();
    for r in compositions(n, k) {
        let mut term = coeff_wide(alg, ni, &r.as_i64())?;
        for j in 1..=k {
            term = term
                .mul(&Wide::pow(&xs[j - 1], ni - r.s(j)))
                .mul(&prefixes[j - 1][r.r(j) as usize]);
        }
        term = term.mul(&prefixes[k][(ni - r.total()) as usize]);
        sum.add(term.value());
    }
    let lambda = xs.iter().cloned().fold(T::one(), |a, b| a * b);
    sum.sides(
        shifted_factorial(alg, &one, &lambda, ni, Shift::Minus)?,
        "alternative multinomial sum",
    )
}

/// Which of the two zero-variable specialisations of the alternative theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorollaryForm {
    /// Terms `x_j^{n - s_j} (1 ⊖ x_j)^{r_j}`.
    ComplementPowers,
    /// Terms `x_j^{r_j} (1 ⊖ x_j)^{n - s_j}`.
    DirectPowers,
}

/// Both corollary sums of the alternative theorem at `x_{k+1} = 0`.
///
/// Corrected mode weights each term so the sum equals a closed form:
/// `tau1^{C(n - s_k, 2)}` against `tau1^{C(n,2)}` for complement powers, and
/// `prod_j tau1^{C(r_j,2) - C(n - s_{j-1}, 2)}` against 1 for direct powers.
/// `PaperLiteral` mode divides each term by the printed right-hand side
/// `tau1^{s_k (1 + s_k - 2n) / 2}` and compares with 1.
pub fn corollary_sum<T: Real>(
    alg: &DeformationAlgebra<T>,
    xs: &[T],
    n: u32,
    form: CorollaryForm,
    mode: FormulaMode,
) -> Result<Sides<T>> {
    let k = xs.len();
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one variable".into()));
    }
    let ni = n as i64;
    let one = T::one();
    let t1 = alg.tau1().clone();
    let prefixes: Vec<Vec<Wide<T>>> = xs
        .iter()
        .map(|x| shifted_prefix(alg, &one, x, Shift::Minus, n as usize))
        .collect();
    let mut sum = Terms::new();
    for r in compositions(n, k) {
        let sk = r.total();
        let mut term = coeff_wide(alg, ni, &r.as_i64())?;
        for j in 1..=k {
            let (xp, sp) = match form {
                CorollaryForm::ComplementPowers => (ni - r.s(j), r.r(j)),
                CorollaryForm::DirectPowers => (r.r(j), ni - r.s(j)),
            };
            term = term
                .mul(&Wide::pow(&xs[j - 1], xp))
                .mul(&prefixes[j - 1][sp as usize]);
        }
        let weight = match (mode, form) {
            (FormulaMode::PaperLiteral, _) => -(sk * (1 + sk - 2 * ni) / 2),
            (FormulaMode::Corrected, CorollaryForm::ComplementPowers) => choose2(ni - sk),
            (FormulaMode::Corrected, CorollaryForm::DirectPowers) => (1..=k)
                .map(|j| choose2(r.r(j)) - choose2(ni - r.s(j - 1)))
                .sum(),
        };
        sum.add(term.mul_pow(&t1, weight).value());
    }
    let target = match (mode, form) {
        (FormulaMode::Corrected, CorollaryForm::ComplementPowers) => {
            finite(Wide::pow(&t1, choose2(ni)).value(), || "tau1^C(n,2)".into())?
        }
        _ => T::one(),
    };
    sum.sides(target, "corollary sum")
}

/// The Gasper-Rahman style expansion, evaluated as printed with a caller
/// supplied `x_0`: `sum [n; r] prod_j x_j^{s_j} (1 ⊖ x_{j-1})^n (1 ⊖ x_k)^{n - s_k}`
/// against `(1 ⊖ x_1 ... x_k)^n`. Report-only: it is not an identity.
pub fn gasper_rahman_sum<T: Real>(
    alg: &DeformationAlgebra<T>,
    xs: &[T],
    n: u32,
    x0: &T,
) -> Result<Sides<T>> {
    let k = xs.len();
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one variable".into()));
    }
    let ni = n as i64;
    let one = T::one();
    let mut prev: Vec<T> = vec![x0.clone()];
    prev.extend(xs[..k - 1].iter().cloned());
    let full: Vec<Wide<T>> = prev
        .iter()
        .map(|x| shifted_factorial_wide(alg, &one, x, n as usize, Shift::Minus))
        .collect();
    let last = shifted_prefix(alg, &one, &xs[k - 1], Shift::Minus, n as usize);
    let mut sum = Terms::new();
    for r in compositions(n, k) {
        let mut term = coeff_wide(alg, ni, &r.as_i64())?;
        for j in 1..=k {
            term = term.mul(&Wide::pow(&xs[j - 1], r.s(j))).mul(&full[j - 1]);
        }
        term = term.mul(&last[(ni - r.total()) as usize]);
        sum.add(term.value());
    }
    let lambda = xs.iter().cloned().fold(T::one(), |a, b| a * b);
    sum.sides(
        shifted_factorial(alg, &one, &lambda, ni, Shift::Minus)?,
        "Gasper-Rahman sum",
    )
}
