//! Deformation algebras and their scalar building blocks.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{choose2, PrecisionMode, Real, Wide};

/// Largest index used by the construction-time self checks.
pub const N_MAX_CHECK: i64 = 20;

const SPLIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    QStandard,
    BiedenharnMacfarlane,
    JagannathanSrinivasa,
    ChakrabartyJagannathan,
    Quesne,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::QStandard,
        Preset::BiedenharnMacfarlane,
        Preset::JagannathanSrinivasa,
        Preset::ChakrabartyJagannathan,
        Preset::Quesne,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Preset::QStandard => "q-standard",
            Preset::BiedenharnMacfarlane => "biedenharn-macfarlane",
            Preset::JagannathanSrinivasa => "jagannathan-srinivasa",
            Preset::ChakrabartyJagannathan => "chakrabarty-jagannathan",
            Preset::Quesne => "quesne",
        }
    }

    /// Whether the closed form depends on `p` at all.
    pub fn uses_p(self) -> bool {
        !matches!(self, Preset::QStandard | Preset::BiedenharnMacfarlane)
    }

    pub fn check_domain(self, p: f64, q: f64) -> Result<()> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!(
                "{}: need 0 < q < 1, got q = {q}",
                self.id()
            )));
        }
        if self.uses_p() && !(q < p && p < 1.0) {
            return Err(Error::Domain(format!(
                "{}: need 0 < q < p < 1, got p = {p}, q = {q}",
                self.id()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.id() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// User supplied structure function, called as `R(x, y, p, q)` where `(p, q)`
/// are the algebra's current parameters.
pub type CustomFn<T> = Arc<dyn Fn(&T, &T, &T, &T) -> T + Send + Sync>;

#[derive(Clone)]
enum Structure<T> {
    Preset(Preset),
    Custom(CustomFn<T>),
}

/// An `(R, tau1, tau2, p, q)` bundle. Immutable after construction; clones
/// share the factorial memo.
#[derive(Clone)]
pub struct DeformationAlgebra<T: Real = f64> {
    name: String,
    structure: Structure<T>,
    p: T,
    q: T,
    tau1: T,
    tau2: T,
    inverted: bool,
    factorials: Arc<RwLock<Vec<Wide<T>>>>,
}

impl<T: Real> fmt::Debug for DeformationAlgebra<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeformationAlgebra")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("tau1", &self.tau1)
            .field("tau2", &self.tau2)
            .field("inverted", &self.inverted)
            .finish()
    }
}

fn preset_taus<T: Real>(preset: Preset, p: &T, q: &T) -> (T, T) {
    match preset {
        Preset::QStandard => (T::one(), q.clone()),
        Preset::BiedenharnMacfarlane => (q.clone(), T::one() / q.clone()),
        Preset::JagannathanSrinivasa => (p.clone(), q.clone()),
        Preset::ChakrabartyJagannathan => (T::one() / p.clone(), q.clone()),
        Preset::Quesne => (p.clone(), T::one() / q.clone()),
    }
}

fn preset_r<T: Real>(preset: Preset, x: &T, y: &T, p: &T, q: &T) -> T {
    let one = T::one();
    match preset {
        Preset::QStandard => (one.clone() - y.clone()) / (one - q.clone()),
        Preset::BiedenharnMacfarlane => {
            (y.clone() - one.clone() / y.clone()) / (q.clone() - one / q.clone())
        }
        Preset::JagannathanSrinivasa => (x.clone() - y.clone()) / (p.clone() - q.clone()),
        Preset::ChakrabartyJagannathan => {
            (one.clone() - x.clone() * y.clone()) / ((one / p.clone() - q.clone()) * x.clone())
        }
        Preset::Quesne => {
            (x.clone() * y.clone() - one.clone()) / ((q.clone() - one / p.clone()) * y.clone())
        }
    }
}

pub fn make_preset_algebra<T: Real>(preset: Preset, p: T, q: T) -> Result<DeformationAlgebra<T>> {
    preset.check_domain(p.to_f64(), q.to_f64())?;
    let p = if preset.uses_p() { p } else { T::one() };
    let alg = DeformationAlgebra::from_preset(preset, p, q, false);
    alg.check_positivity()?;
    if let Some((x, s, residual)) = alg.worst_splitting(N_MAX_CHECK) {
        if residual > SPLIT_TOL {
            return Err(Error::Splitting { x, s, residual });
        }
    }
    Ok(alg)
}

/// Builds an algebra from a user supplied structure function.
///
/// `R(1, 1)` must vanish and `[n]` must be positive for `1 <= n <= 20`; the
/// splitting identity is left to [`DeformationAlgebra::worst_splitting`].
pub fn make_custom_algebra<T, F>(
    r: F,
    tau1: T,
    tau2: T,
    p: T,
    q: T,
) -> Result<DeformationAlgebra<T>>
where
    T: Real,
    F: Fn(&T, &T, &T, &T) -> T + Send + Sync + 'static,
{
    if !(tau1 > T::zero() && tau2 > T::zero()) {
        return Err(Error::Domain("structure functions must be positive".into()));
    }
    let r: CustomFn<T> = Arc::new(r);
    let at_one = r(&T::one(), &T::one(), &p, &q);
    let unit = r(&p, &q, &p, &q);
    let scale = f64::max(1.0, unit.to_f64().abs());
    if !at_one.is_finite() || at_one.to_f64().abs() > 1e-12 * scale {
        return Err(Error::Domain(format!(
            "R(1,1) must vanish, got {}",
            at_one.to_f64()
        )));
    }
    let alg = DeformationAlgebra {
        name: "custom".into(),
        structure: Structure::Custom(r),
        p,
        q,
        tau1,
        tau2,
        inverted: false,
        factorials: Arc::new(RwLock::new(vec![Wide::one()])),
    };
    alg.check_positivity()?;
    Ok(alg)
}

/// Same as [`make_custom_algebra`] for a structure function of `(x, y)` only.
pub fn make_custom_algebra_xy<T, F>(
    r: F,
    tau1: T,
    tau2: T,
    p: T,
    q: T,
) -> Result<DeformationAlgebra<T>>
where
    T: Real,
    F: Fn(&T, &T) -> T + Send + Sync + 'static,
{
    make_custom_algebra(move |x: &T, y: &T, _: &T, _: &T| r(x, y), tau1, tau2, p, q)
}

impl<T: Real> DeformationAlgebra<T> {
    fn from_preset(preset: Preset, p: T, q: T, inverted: bool) -> Self {
        let (tau1, tau2) = preset_taus(preset, &p, &q);
        DeformationAlgebra {
            name: preset.id().to_string(),
            structure: Structure::Preset(preset),
            p,
            q,
            tau1,
            tau2,
            inverted,
            factorials: Arc::new(RwLock::new(vec![Wide::one()])),
        }
    }

    fn check_positivity(&self) -> Result<()> {
        for n in 1..=N_MAX_CHECK {
            let v = self.number(n)?;
            if !(v > T::zero()) {
                return Err(Error::Domain(format!(
                    "{}: deformed number [{n}] = {} is not positive",
                    self.name,
                    v.to_f64()
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn preset(&self) -> Option<Preset> {
        match &self.structure {
            Structure::Preset(p) => Some(*p),
            Structure::Custom(_) => None,
        }
    }
    pub fn p(&self) -> &T {
        &self.p
    }
    pub fn q(&self) -> &T {
        &self.q
    }
    pub fn tau1(&self) -> &T {
        &self.tau1
    }
    pub fn tau2(&self) -> &T {
        &self.tau2
    }
    /// `tau2 / tau1`.
    pub fn ratio(&self) -> T {
        self.tau2.clone() / self.tau1.clone()
    }
    pub fn is_inverted(&self) -> bool {
        self.inverted
    }
    pub fn precision_mode(&self) -> PrecisionMode {
        T::MODE
    }

    /// Raw structure function evaluation.
    pub fn eval_r(&self, x: &T, y: &T) -> T {
        match &self.structure {
            Structure::Preset(pr) => preset_r(*pr, x, y, &self.p, &self.q),
            Structure::Custom(f) => f(x, y, &self.p, &self.q),
        }
    }

    fn checked(&self, v: T, what: impl FnOnce() -> String) -> Result<T> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(what()))
        }
    }

    /// `[n] = R(p^n, q^n)`; negative `n` allowed.
    pub fn number(&self, n: i64) -> Result<T> {
        if n == 0 {
            return Ok(T::zero());
        }
        let v = self.eval_r(&self.p.powi(n), &self.q.powi(n));
        self.checked(v, || format!("{}: [{n}]", self.name))
    }

    /// `R(p^a, q^a)` at a real argument.
    pub fn number_real(&self, a: f64) -> Result<T> {
        if a == a.trunc() && a.abs() < 1e15 {
            return self.number(a as i64);
        }
        let v = self.eval_r(&self.p.powf(a), &self.q.powf(a));
        self.checked(v, || format!("{}: [{a}]", self.name))
    }

    pub(crate) fn factorial_wide(&self, n: i64) -> Result<Wide<T>> {
        if n < 0 {
            return Err(Error::InvalidArgument(format!("factorial of negative {n}")));
        }
        let n = n as usize;
        {
            let memo = self.factorials.read().expect("factorial memo poisoned");
            if let Some(v) = memo.get(n) {
                return Ok(v.clone());
            }
        }
        let mut memo = self.factorials.write().expect("factorial memo poisoned");
        while memo.len() <= n {
            let i = memo.len() as i64;
            let next = memo[memo.len() - 1].clone().mul_value(self.number(i)?);
            if !next.is_finite() {
                return Err(Error::NonFinite(format!("{}: [{i}]!", self.name)));
            }
            memo.push(next);
        }
        Ok(memo[n].clone())
    }

    pub fn factorial(&self, n: i64) -> Result<T> {
        let v = self.factorial_wide(n)?.value();
        self.checked(v, || format!("{}: [{n}]! out of range", self.name))
    }

    pub(crate) fn ordered_factorial_wide(&self, a: i64, r: i64) -> Result<Wide<T>> {
        if r < 0 {
            return Err(Error::InvalidArgument(format!(
                "order {r} of ordered factorial"
            )));
        }
        if a >= 0 && a < r {
            return Ok(Wide::zero());
        }
        if a >= 0 {
            return Ok(self.factorial_wide(a)?.div(&self.factorial_wide(a - r)?));
        }
        let mut acc = Wide::one();
        for i in 1..=r {
            acc = acc.mul_value(self.number(a - i + 1)?);
        }
        Ok(acc)
    }

    /// `[a]_r = [a][a-1]...[a-r+1]`.
    pub fn ordered_factorial(&self, a: i64, r: i64) -> Result<T> {
        let v = self.ordered_factorial_wide(a, r)?.value();
        self.checked(v, || format!("{}: [{a}]_{r} out of range", self.name))
    }

    /// The algebra at `(1/p, 1/q)`; structure functions invert with it.
    pub fn invert_parameters(&self) -> Result<DeformationAlgebra<T>> {
        let p = T::one() / self.p.clone();
        let q = T::one() / self.q.clone();
        let alg = match &self.structure {
            Structure::Preset(pr) => DeformationAlgebra::from_preset(*pr, p, q, !self.inverted),
            Structure::Custom(f) => DeformationAlgebra {
                name: self.name.clone(),
                structure: Structure::Custom(f.clone()),
                p,
                q,
                tau1: T::one() / self.tau1.clone(),
                tau2: T::one() / self.tau2.clone(),
                inverted: !self.inverted,
                factorials: Arc::new(RwLock::new(vec![Wide::one()])),
            },
        };
        for n in 1..=N_MAX_CHECK {
            alg.number(n)?;
        }
        Ok(alg)
    }

    /// Largest relative residual of `[x] = tau1^s [x-s] + tau2^(x-s) [s]`
    /// over `0 <= s <= x <= n_max`, with the offending `(x, s)`.
    pub fn worst_splitting(&self, n_max: i64) -> Option<(i64, i64, f64)> {
        let mut worst: Option<(i64, i64, f64)> = None;
        for x in 0..=n_max {
            for s in 0..=x {
                let lhs = match self.number(x) {
                    Ok(v) => v,
                    Err(_) => return Some((x, s, f64::INFINITY)),
                };
                let (a, b) = match (self.number(x - s), self.number(s)) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => return Some((x, s, f64::INFINITY)),
                };
                let t1 = self.tau1.powi(s) * a;
                let t2 = self.tau2.powi(x - s) * b;
                let scale = T::max_of(lhs.abs(), t1.abs() + t2.abs());
                let diff = (lhs - t1 - t2).abs();
                let res = if scale.is_zero() {
                    0.0
                } else {
                    (diff / scale).to_f64()
                };
                let res = if res.is_finite() { res } else { f64::INFINITY };
                if worst.is_none_or(|w| res > w.2) {
                    worst = Some((x, s, res));
                }
            }
        }
        worst
    }

    /// `sum_n tau1^C(n,2) z^n / [n]!`.
    pub fn exp_small(&self, z: &T, eps: f64) -> Result<T> {
        self.deformed_exp(z, eps, &self.tau1, "e")
    }

    /// `sum_n tau2^C(n,2) z^n / [n]!`.
    pub fn exp_big(&self, z: &T, eps: f64) -> Result<T> {
        self.deformed_exp(z, eps, &self.tau2, "E")
    }

    fn deformed_exp(&self, z: &T, eps: f64, tau: &T, label: &str) -> Result<T> {
        const CAP: usize = 10_000;
        let mut sum = crate::real::CompensatedSum::new();
        let mut term = T::one();
        sum.add(term.clone());
        let mut tau_pow = T::one(); // tau^(n-1)
        let mut small_run = 0;
        for n in 1..=CAP as i64 {
            term = term * tau_pow.clone() * z.clone() / self.number(n)?;
            tau_pow = tau_pow * tau.clone();
            if !term.is_finite() {
                break;
            }
            sum.add(term.clone());
            let total = sum.value();
            if term.abs().to_f64() <= eps * total.abs().to_f64() || term.is_zero() {
                small_run += 1;
                if small_run >= 3 {
                    return Ok(total);
                }
            } else {
                small_run = 0;
            }
        }
        Err(Error::Divergence {
            what: format!("{label}_{}({})", self.name, z.to_f64()),
            terms: CAP,
        })
    }
}

/// `C(n, 2)` re-exported for formula code.
pub fn c2(n: i64) -> i64 {
    choose2(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn js() -> DeformationAlgebra {
        make_preset_algebra(Preset::JagannathanSrinivasa, 0.9, 0.5).unwrap()
    }

    fn qstd() -> DeformationAlgebra {
        make_preset_algebra(Preset::QStandard, 0.9, 0.5).unwrap()
    }

    #[test]
    fn preset_numbers() {
        assert!((js().number(2).unwrap() - 1.4).abs() < 1e-15);
        assert!((js().number(3).unwrap() - 1.51).abs() < 1e-15);
        assert!((qstd().number(3).unwrap() - 1.75).abs() < 1e-15);
        assert!((qstd().number(2).unwrap() - 1.5).abs() < 1e-15);
        for pr in Preset::ALL {
            let a = make_preset_algebra(pr, 0.9, 0.5).unwrap();
            assert_eq!(a.number(0).unwrap(), 0.0);
            assert!((a.number(1).unwrap() - a.eval_r(&0.9, &0.5)).abs() < 1e-15 || !pr.uses_p());
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            make_preset_algebra(Preset::JagannathanSrinivasa, 0.5, 0.9),
            Err(Error::Domain(_))
        ));
        assert!(make_preset_algebra(Preset::QStandard, 7.0, 0.5).is_ok());
        assert!(make_preset_algebra(Preset::QStandard, 0.9, 1.5).is_err());
        assert!("heisenberg".parse::<Preset>().is_err());
    }

    #[test]
    fn factorials() {
        assert!((qstd().factorial(3).unwrap() - 2.625).abs() < 1e-15);
        assert_eq!(qstd().factorial(0).unwrap(), 1.0);
        assert!((js().factorial(2).unwrap() - 1.4).abs() < 1e-15);
        assert!(qstd().factorial(-1).is_err());
        assert!((qstd().ordered_factorial(3, 2).unwrap() - 2.625).abs() < 1e-15);
        assert_eq!(qstd().ordered_factorial(2, 3).unwrap(), 0.0);
        assert_eq!(js().ordered_factorial(5, 0).unwrap(), 1.0);
    }

    #[test]
    fn custom_algebras() {
        let c =
            make_custom_algebra_xy(|x: &f64, y: &f64| (x - y) / 0.4, 0.9, 0.5, 0.9, 0.5).unwrap();
        for n in 0..=10 {
            assert!((c.number(n).unwrap() - js().number(n).unwrap()).abs() < 1e-13);
        }
        assert!(make_custom_algebra_xy(|x: &f64, y: &f64| x - y, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(make_custom_algebra_xy(|x: &f64, y: &f64| x + y, 1.0, 1.0, 0.9, 0.5).is_err());
    }

    #[test]
    fn inversion_is_an_involution() {
        for pr in Preset::ALL {
            let a = make_preset_algebra(pr, 0.9, 0.5).unwrap();
            let b = a.invert_parameters().unwrap().invert_parameters().unwrap();
            for n in 0..=10 {
                let (x, y) = (a.number(n).unwrap(), b.number(n).unwrap());
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{pr} {n}");
            }
        }
    }

    #[test]
    fn exponentials_at_zero() {
        assert_eq!(js().exp_small(&0.0, 1e-16).unwrap(), 1.0);
        assert_eq!(js().exp_big(&0.0, 1e-16).unwrap(), 1.0);
    }

    #[test]
    fn big_exponential_diverges_past_radius() {
        // term ratio tends to z (1 - q^2)
        let bm = make_preset_algebra(Preset::BiedenharnMacfarlane, 0.9, 0.5).unwrap();
        assert!(bm.exp_big(&0.5, 1e-16).is_ok());
        assert!(matches!(
            bm.exp_big(&3.0, 1e-16),
            Err(Error::Divergence { .. })
        ));
    }
}
