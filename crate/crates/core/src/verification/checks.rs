use super::oracles::{
    classical_multinomial_pmf, enumerate_first_kind_exact, enumerate_second_kind_exact,
    gaussian_multinomial,
};
use super::{residuals, Acc, IdentityClass, Metric, VerificationReport};
use crate::algebra::{make_preset_algebra, DeformationAlgebra, Preset};
use crate::combinatorics::{
    alternative_multinomial_sum, binomial, compositions, corollary_sum, gasper_rahman_sum,
    multinomial, multinomial_inverse_params, multinomial_product_form, multinomial_theorem_sum,
    negative_multinomial_theorem_sum, recurrence_rhs, CorollaryForm, InverseConvention, MultiIndex,
    Recurrence,
};
use crate::distributions::{
    limit_distance, pmf_table, q_second_kind_recursion_next, recursion_next, trial_probabilities,
    DistributionSpec, Kind, LimitFamily, RecursionMode, Step, TableStatus,
};
use crate::error::{Error, Result};
use crate::real::{choose2, Real, Wide};
use crate::FormulaMode;

/// Grid a check sweeps on one algebra.
#[derive(Debug, Clone)]
pub(crate) struct Scope {
    pub n: Vec<u32>,
    pub k: Vec<usize>,
    /// Values combined into parameter vectors (theta, x or z).
    pub values: Vec<f64>,
    /// Explicit parameter vectors; replace the products of `values`.
    pub vectors: Vec<Vec<f64>>,
    pub kinds: Vec<Kind>,
    /// Values combined into absorption parameter vectors.
    pub absorption: Vec<f64>,
    pub trunc: u32,
    pub x0: f64,
}

impl Scope {
    /// Parameter vectors of length `len`.
    fn vectors_of_len(&self, len: usize) -> Vec<Vec<f64>> {
        if !self.vectors.is_empty() {
            return self
                .vectors
                .iter()
                .filter(|v| v.len() == len)
                .cloned()
                .collect();
        }
        power(&self.values, len)
    }

    /// Parameter vectors for every `k` in scope.
    fn vectors(&self) -> Vec<Vec<f64>> {
        if !self.vectors.is_empty() {
            return self.vectors.clone();
        }
        self.k
            .iter()
            .flat_map(|&k| power(&self.values, k))
            .collect()
    }

    fn absorption_vectors(&self) -> Vec<Vec<f64>> {
        if !self.vectors.is_empty() {
            return self.vectors.clone();
        }
        self.k
            .iter()
            .flat_map(|&k| power(&self.absorption, k))
            .collect()
    }

    fn n_max(&self) -> u32 {
        self.n.iter().copied().max().unwrap_or(0)
    }
}

/// All vectors of length `k` with entries from `values`, lexicographic.
fn power(values: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| {
                values.iter().map(move |&x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    if k == 0 {
        Vec::new()
    } else {
        out
    }
}

fn lift<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::from_f64(x)).collect()
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

fn coefficient_points(scope: &Scope, x_min: u32) -> Vec<(u32, MultiIndex)> {
    let mut out = Vec::new();
    for &x in &scope.n {
        if x < x_min {
            continue;
        }
        for &k in &scope.k {
            for s in 0..=x {
                for r in compositions(s, k)
                    .into_iter()
                    .filter(|r| r.total() == s as i64)
                {
                    out.push((x, r));
                }
            }
        }
    }
    out
}

fn build_spec<T: Real>(
    alg: &DeformationAlgebra<T>,
    kind: Kind,
    n: u32,
    params: &[f64],
    mode: FormulaMode,
) -> Result<DistributionSpec<T>> {
    let b = DistributionSpec::builder(kind, alg.clone()).n(n).mode(mode);
    if kind.is_absorption() {
        b.absorption(params.to_vec()).build()
    } else {
        b.theta(lift(params)).build()
    }
}

fn kind_vectors(scope: &Scope, kind: Kind) -> Vec<Vec<f64>> {
    if kind.is_absorption() {
        scope.absorption_vectors()
    } else {
        scope.vectors()
    }
}

/// Runs identity `id` on one algebra.
pub(crate) fn run_identity<T: Real>(
    id: &str,
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    match id {
        "number-basics" => number_basics(alg, scope, acc),
        "closed-form-numbers" => closed_form_numbers(alg, scope, acc),
        "splitting" => splitting(alg, scope, acc),
        "inverse-number" => inverse_number(alg, scope, acc, FormulaMode::Corrected),
        "inverse-number-printed" => inverse_number(alg, scope, acc, FormulaMode::PaperLiteral),
        "inverse-factorial" => inverse_factorial(alg, scope, acc, FormulaMode::Corrected),
        "inverse-factorial-printed" => {
            inverse_factorial(alg, scope, acc, FormulaMode::PaperLiteral)
        }
        "inverse-ordered-factorial" => {
            inverse_ordered_factorial(alg, scope, acc, FormulaMode::Corrected)
        }
        "inverse-ordered-factorial-printed" => {
            inverse_ordered_factorial(alg, scope, acc, FormulaMode::PaperLiteral)
        }
        "inversion-involution" => involution(alg, scope, acc),
        "exponential-duality" => exponential_duality(alg, scope, acc),
        "binomial-reduction" => binomial_reduction(alg, scope, acc),
        "multinomial-product-form" => product_form(alg, scope, acc),
        "gaussian-multinomial" => gaussian(alg, scope, acc),
        "inverse-multinomial-tail-sums" => {
            inverse_multinomial(alg, scope, acc, InverseConvention::TailSums)
        }
        "inverse-multinomial-partial-sums" => {
            inverse_multinomial(alg, scope, acc, InverseConvention::PartialSums)
        }
        "multinomial-theorem" => multinomial_theorem(alg, scope, acc, FormulaMode::Corrected),
        "multinomial-theorem-printed" => {
            multinomial_theorem(alg, scope, acc, FormulaMode::PaperLiteral)
        }
        "negative-multinomial-theorem" => negative_theorem(alg, scope, acc, FormulaMode::Corrected),
        "negative-multinomial-theorem-printed" => {
            negative_theorem(alg, scope, acc, FormulaMode::PaperLiteral)
        }
        "alternative-multinomial-theorem" => alternative_theorem(alg, scope, acc),
        "corollary-complement-powers" => corollary(
            alg,
            scope,
            acc,
            &[CorollaryForm::ComplementPowers],
            FormulaMode::Corrected,
        ),
        "corollary-direct-powers" => corollary(
            alg,
            scope,
            acc,
            &[CorollaryForm::DirectPowers],
            FormulaMode::Corrected,
        ),
        "corollary-printed" => corollary(
            alg,
            scope,
            acc,
            &[CorollaryForm::ComplementPowers, CorollaryForm::DirectPowers],
            FormulaMode::PaperLiteral,
        ),
        "gasper-rahman" => gasper_rahman(alg, scope, acc),
        "trial-probabilities" => trial_model(alg, scope, acc),
        "normalization" => normalization(alg, scope, acc),
        "infinite-normalization" => infinite_normalization(alg, scope, acc),
        "recursion-derived-ratio" => recursion_paths(alg, scope, acc),
        "recursion-printed" => recursion_printed(alg, scope, acc),
        "q-recursion-specialization" => q_recursion(alg, scope, acc),
        "first-kind-enumeration" => first_kind_enumeration(alg, scope, acc),
        "second-kind-markov-chain" => second_kind_chain(alg, scope, acc),
        "conditional-decomposition" => decomposition(alg, scope, acc),
        "heine-limit" => limit_convergence(alg, scope, acc, LimitFamily::Heine),
        "euler-limit" => limit_convergence(alg, scope, acc, LimitFamily::Euler),
        "classical-limit" => classical_limit(alg, scope, acc),
        other => {
            let (base, mode) = match other.strip_suffix("-printed") {
                Some(b) => (b, FormulaMode::PaperLiteral),
                None => (other, FormulaMode::Corrected),
            };
            match base
                .strip_prefix("recurrence-")
                .map(str::parse::<Recurrence>)
            {
                Some(Ok(variant)) => recurrence(alg, scope, acc, variant, mode),
                _ => Err(Error::Config(format!(
                    "identity `{id}` has no algebra-level check"
                ))),
            }
        }
    }
}

fn number_basics<T: Real>(alg: &DeformationAlgebra<T>, scope: &Scope, acc: &mut Acc) -> Result<()> {
    let zero = alg.number(0)?;
    acc.record(zero.abs().to_f64(), zero.abs().to_f64(), || "[0]".into());
    let one = alg.number(1)?;
    let (a, r) = residuals(&one, &alg.eval_r(alg.p(), alg.q()));
    acc.record(a, r, || "[1]".into());
    for n in 1..=scope.n_max() as i64 {
        let v = alg.number(n)?;
        if !(v > T::zero()) {
            acc.fail(format!("[{n}] = {} is not positive", v.to_f64()));
        }
    }
    Ok(())
}

/// `[n]` from the closed form of each preset written in terms of the
/// structure functions, bypassing `R`.
fn closed_form_numbers<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    let Some(preset) = acc.setup(
        alg.preset()
            .ok_or_else(|| Error::InvalidArgument("closed forms exist for presets only".into())),
    )?
    else {
        return Ok(());
    };
    let (p, q) = (alg.p().clone(), alg.q().clone());
    let one = T::one();
    for n in 0..=scope.n_max() as i64 {
        let want = match preset {
            Preset::QStandard => (one.clone() - q.powi(n)) / (one.clone() - q.clone()),
            Preset::BiedenharnMacfarlane => {
                (q.powi(n) - q.powi(-n)) / (q.clone() - one.clone() / q.clone())
            }
            Preset::JagannathanSrinivasa => (p.powi(n) - q.powi(n)) / (p.clone() - q.clone()),
            Preset::ChakrabartyJagannathan => {
                (p.powi(-n) - q.powi(n)) / (one.clone() / p.clone() - q.clone())
            }
            Preset::Quesne => (p.powi(n) - q.powi(-n)) / (q.clone() - one.clone() / p.clone()),
        };
        let (a, r) = residuals(&alg.number(n)?, &want);
        acc.record(a, r, || format!("n={n}"));
    }
    Ok(())
}

fn splitting<T: Real>(alg: &DeformationAlgebra<T>, scope: &Scope, acc: &mut Acc) -> Result<()> {
    let (t1, t2) = (alg.tau1().clone(), alg.tau2().clone());
    for x in 0..=scope.n_max() as i64 {
        let lhs = alg.number(x)?;
        for s in 0..=x {
            let rhs = t1.powi(s) * alg.number(x - s)? + t2.powi(x - s) * alg.number(s)?;
            let (a, r) = residuals(&lhs, &rhs);
            acc.record(a, r, || format!("x={x} s={s}"));
        }
    }
    Ok(())
}

fn tau12<T: Real>(alg: &DeformationAlgebra<T>) -> T {
    alg.tau1().clone() * alg.tau2().clone()
}

/// `([1]' / [1])^count`: the inversion laws as printed assume `[1] = 1` on
/// both sides and hold up to this factor otherwise.
fn unit_ratio<T: Real>(
    alg: &DeformationAlgebra<T>,
    inv: &DeformationAlgebra<T>,
    mode: FormulaMode,
    count: i64,
) -> Result<Wide<T>> {
    Ok(match mode {
        FormulaMode::PaperLiteral => Wide::one(),
        FormulaMode::Corrected => Wide::pow(&(inv.number(1)? / alg.number(1)?), count),
    })
}

fn inverse_number<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
    mode: FormulaMode,
) -> Result<()> {
    let inv = alg.invert_parameters()?;
    let t = tau12(alg);
    for a in 1..=scope.n_max() as i64 {
        let want = Wide::pow(&t, 1 - a)
            .mul_value(alg.number(a)?)
            .mul(&unit_ratio(alg, &inv, mode, 1)?)
            .value();
        let (x, r) = residuals(&inv.number(a)?, &want);
        acc.record(x, r, || format!("a={a}"));
    }
    Ok(())
}

fn inverse_factorial<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
    mode: FormulaMode,
) -> Result<()> {
    let inv = alg.invert_parameters()?;
    let t = tau12(alg);
    for a in 0..=scope.n_max() as i64 {
        let want = alg
            .factorial_wide(a)?
            .mul_pow(&t, -choose2(a))
            .mul(&unit_ratio(alg, &inv, mode, a)?)
            .value();
        let (x, r) = residuals(&inv.factorial(a)?, &want);
        acc.record(x, r, || format!("a={a}"));
    }
    Ok(())
}

fn inverse_ordered_factorial<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
    mode: FormulaMode,
) -> Result<()> {
    let inv = alg.invert_parameters()?;
    let t = tau12(alg);
    for a in 0..=scope.n_max() as i64 {
        for r in 0..=a {
            let want = alg
                .ordered_factorial_wide(a, r)?
                .mul_pow(&t, -a * r + choose2(r + 1))
                .mul(&unit_ratio(alg, &inv, mode, r)?)
                .value();
            let (x, rel) = residuals(&inv.ordered_factorial(a, r)?, &want);
            acc.record(x, rel, || format!("a={a} r={r}"));
        }
    }
    Ok(())
}

fn involution<T: Real>(alg: &DeformationAlgebra<T>, scope: &Scope, acc: &mut Acc) -> Result<()> {
    let back = alg.invert_parameters()?.invert_parameters()?;
    for n in 0..=scope.n_max() as i64 {
        let (a, r) = residuals(&back.number(n)?, &alg.number(n)?);
        acc.record(a, r, || format!("n={n}"));
    }
    Ok(())
}

fn exponential_duality<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    for &z in &scope.values {
        let zt = T::from_f64(z);
        let Some(small) = acc.setup(alg.exp_small(&zt, T::EPSILON))? else {
            continue;
        };
        let Some(big) = acc.setup(alg.exp_big(&-zt, T::EPSILON))? else {
            continue;
        };
        let (a, r) = residuals(&(small * big), &T::one());
        acc.record(a, r, || format!("z={z}"));
    }
    Ok(())
}

fn binomial_reduction<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    for x in 0..=scope.n_max() {
        for r in 0..=x {
            let m = multinomial(alg, x as i64, &MultiIndex::new(vec![r])?)?;
            let (a, rel) = residuals(&m, &binomial(alg, x as i64, r as i64)?);
            acc.record(a, rel, || format!("x={x} r={r}"));
        }
    }
    Ok(())
}

fn product_form<T: Real>(alg: &DeformationAlgebra<T>, scope: &Scope, acc: &mut Acc) -> Result<()> {
    for (x, r) in coefficient_points(scope, 0) {
        let lhs = multinomial(alg, x as i64, &r)?;
        let (a, rel) = residuals(&lhs, &multinomial_product_form(alg, x as i64, &r)?);
        acc.record(a, rel, || format!("x={x} r={r}"));
    }
    Ok(())
}

fn gaussian<T: Real>(alg: &DeformationAlgebra<T>, scope: &Scope, acc: &mut Acc) -> Result<()> {
    if acc
        .setup(match alg.preset() {
            Some(Preset::QStandard) => Ok(()),
            _ => Err(Error::InvalidArgument(
                "Gaussian multinomials need the q-standard algebra".into(),
            )),
        })?
        .is_none()
    {
        return Ok(());
    }
    let q = alg.q().to_f64();
    for (x, r) in coefficient_points(scope, 0) {
        let lhs = multinomial(alg, x as i64, &r)?;
        let (a, rel) = residuals(&lhs, &T::from_f64(gaussian_multinomial(q, x, r.entries())));
        acc.record(a, rel, || format!("x={x} r={r}"));
    }
    Ok(())
}

fn inverse_multinomial<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
    conv: InverseConvention,
) -> Result<()> {
    let inv = alg.invert_parameters()?;
    for (x, r) in coefficient_points(scope, 0) {
        let direct = multinomial(&inv, x as i64, &r)?;
        let (a, rel) = residuals(
            &multinomial_inverse_params(alg, x as i64, &r, conv)?,
            &direct,
        );
        acc.record(a, rel, || format!("x={x} r={r}"));
    }
    Ok(())
}

fn recurrence<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
    variant: Recurrence,
    mode: FormulaMode,
) -> Result<()> {
    for (x, r) in coefficient_points(scope, 1) {
        let lhs = multinomial(alg, x as i64, &r)?;
        let (a, rel) = residuals(&recurrence_rhs(alg, x as i64, &r, variant, mode)?, &lhs);
        acc.record(a, rel, || format!("x={x} r={r}"));
    }
    Ok(())
}

fn multinomial_theorem<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
    mode: FormulaMode,
) -> Result<()> {
    for xs in scope.vectors() {
        for &n in &scope.n {
            let sides = multinomial_theorem_sum(alg, &lift::<T>(&xs), n, mode)?;
            acc.record(sides.abs_residual(), sides.rel_residual(), || {
                format!("n={n} x={}", fmt_vec(&xs))
            });
        }
    }
    Ok(())
}

fn negative_theorem<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
    mode: FormulaMode,
) -> Result<()> {
    const TAIL: f64 = 1e-12;
    // with tau2 > tau1 the series converges to less than the product: it is
    // the total mass of the defective negative first-kind family
    if mode == FormulaMode::Corrected
        && acc
            .setup(if alg.tau2() < alg.tau1() {
                Ok(())
            } else {
                Err(Error::Domain(
                    "the negative multinomial theorem needs tau2 < tau1".into(),
                ))
            })?
            .is_none()
    {
        return Ok(());
    }
    let mut worst_boundary = 0.0f64;
    for xs in scope.vectors() {
        for &n in scope.n.iter().filter(|&&n| n >= 1) {
            let s =
                negative_multinomial_theorem_sum(alg, &lift::<T>(&xs), n, scope.trunc, mode, TAIL)?;
            acc.record(s.sides.abs_residual(), s.sides.rel_residual(), || {
                format!("n={n} x={}", fmt_vec(&xs))
            });
            worst_boundary = worst_boundary.max(s.boundary_term);
            if !s.converged && mode == FormulaMode::Corrected {
                acc.fail(format!(
                    "series not converged at n={n} x={} (boundary term {:e})",
                    fmt_vec(&xs),
                    s.boundary_term
                ));
            }
        }
    }
    acc.note(format!(
        "largest boundary term {worst_boundary:e} at truncation {}",
        scope.trunc
    ));
    Ok(())
}

fn alternative_theorem<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    for &k in &scope.k {
        for xs in scope.vectors_of_len(k + 1) {
            for &n in &scope.n {
                let sides = alternative_multinomial_sum(alg, &lift::<T>(&xs), n)?;
                acc.record(sides.abs_residual(), sides.rel_residual(), || {
                    format!("n={n} x={}", fmt_vec(&xs))
                });
            }
        }
    }
    Ok(())
}

fn corollary<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
    forms: &[CorollaryForm],
    mode: FormulaMode,
) -> Result<()> {
    for &form in forms {
        for xs in scope.vectors() {
            for &n in &scope.n {
                let sides = corollary_sum(alg, &lift::<T>(&xs), n, form, mode)?;
                acc.record(sides.abs_residual(), sides.rel_residual(), || {
                    format!("{form:?} n={n} x={}", fmt_vec(&xs))
                });
            }
        }
    }
    Ok(())
}

fn gasper_rahman<T: Real>(alg: &DeformationAlgebra<T>, scope: &Scope, acc: &mut Acc) -> Result<()> {
    let x0 = T::from_f64(scope.x0);
    for xs in scope.vectors() {
        for &n in &scope.n {
            let sides = gasper_rahman_sum(alg, &lift::<T>(&xs), n, &x0)?;
            acc.record(sides.abs_residual(), sides.rel_residual(), || {
                format!("n={n} x={} x0={}", fmt_vec(&xs), scope.x0)
            });
        }
    }
    Ok(())
}

fn trial_model<T: Real>(alg: &DeformationAlgebra<T>, scope: &Scope, acc: &mut Acc) -> Result<()> {
    let decreasing = alg.tau2() < alg.tau1();
    for &th in &scope.values {
        let t = T::from_f64(th);
        let mut prev: Option<T> = None;
        for i in 1..=scope.n_max().max(1) {
            let (s, f) = trial_probabilities(alg, &t, i);
            let (a, r) = residuals(&(s.clone() + f.clone()), &T::one());
            acc.record(a, r, || format!("theta={th} i={i}"));
            // saturates to 1 in floating point when tau2 > tau1
            if s < T::zero() || s > T::one() {
                acc.fail(format!(
                    "success probability {} at theta={th} i={i}",
                    s.to_f64()
                ));
            }
            if decreasing {
                if let Some(p) = &prev {
                    if !(s < *p) {
                        acc.fail(format!(
                            "success probability not decreasing at theta={th} i={i}"
                        ));
                    }
                }
            }
            prev = Some(s);
        }
    }
    Ok(())
}

fn normalization<T: Real>(alg: &DeformationAlgebra<T>, scope: &Scope, acc: &mut Acc) -> Result<()> {
    for &kind in scope.kinds.iter().filter(|k| k.is_finite()) {
        for v in kind_vectors(scope, kind) {
            for &n in &scope.n {
                let Some(spec) = acc.setup(build_spec(alg, kind, n, &v, FormulaMode::Corrected))?
                else {
                    continue;
                };
                let table = pmf_table(&spec)?;
                let d = table.normalization_defect();
                acc.record(d, d, || format!("{kind} n={n} params={}", fmt_vec(&v)));
            }
        }
    }
    Ok(())
}

fn infinite_normalization<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    let mut defective = 0usize;
    for &kind in scope.kinds.iter().filter(|k| !k.is_finite()) {
        let ns: Vec<u32> = if kind.is_limit() {
            vec![0]
        } else {
            scope.n.iter().copied().filter(|&n| n >= 1).collect()
        };
        for v in scope.vectors() {
            for &n in &ns {
                let Some(spec) = acc.setup(build_spec(alg, kind, n, &v, FormulaMode::Corrected))?
                else {
                    continue;
                };
                let table = pmf_table(&spec)?;
                match table.status() {
                    TableStatus::Complete => {
                        let d = table.normalization_defect();
                        acc.record(d, d, || format!("{kind} n={n} theta={}", fmt_vec(&v)));
                    }
                    TableStatus::SubStochastic => defective += 1,
                    TableStatus::Truncated => acc.fail(format!(
                        "{kind} n={n} theta={} hit the enumeration cap",
                        fmt_vec(&v)
                    )),
                }
            }
        }
    }
    if defective > 0 {
        acc.note(format!(
            "{defective} defective parameter points (mass < 1) excluded"
        ));
    }
    Ok(())
}

fn path_check<T: Real>(
    spec: &DistributionSpec<T>,
    path: &[Step],
    mode: RecursionMode,
    acc: &mut Acc,
    label: &str,
) -> Result<()> {
    let mut idx = MultiIndex::zeros(spec.k());
    let mut p = spec.p_zero()?;
    for &step in path {
        if p.is_zero() {
            break;
        }
        let next = match step {
            Step::All => MultiIndex::new(idx.entries().iter().map(|v| v + 1).collect())?,
            Step::Coordinate(j) => {
                let mut e = idx.entries().to_vec();
                e[j - 1] += 1;
                MultiIndex::new(e)?
            }
        };
        if spec.kind().is_finite() && next.total() > spec.n() as i64 {
            break;
        }
        p = recursion_next(spec, &idx, &p, mode, step)?;
        idx = next;
        let direct = spec.pmf(&idx)?;
        if direct.is_zero() && p.is_zero() {
            continue;
        }
        let (a, r) = residuals(&p, &direct);
        acc.record(a, r, || format!("{label} at {idx}"));
    }
    Ok(())
}

/// Steps of the monotone paths followed from the zero index: the diagonal,
/// each coordinate axis and a round-robin staircase.
fn paths(k: usize, len: usize) -> Vec<(String, Vec<Step>)> {
    let mut out = vec![("diagonal".to_string(), vec![Step::All; len])];
    for j in 1..=k {
        out.push((format!("axis {j}"), vec![Step::Coordinate(j); len]));
    }
    if k > 1 {
        out.push((
            "staircase".to_string(),
            (0..len * k).map(|i| Step::Coordinate(i % k + 1)).collect(),
        ));
    }
    out
}

const INFINITE_PATH_LEN: usize = 12;

fn recursion_paths<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    for &kind in &scope.kinds {
        for v in kind_vectors(scope, kind) {
            for &n in &scope.n {
                let Some(spec) = acc.setup(build_spec(alg, kind, n, &v, FormulaMode::Corrected))?
                else {
                    continue;
                };
                let len = if kind.is_finite() {
                    n as usize
                } else {
                    INFINITE_PATH_LEN
                };
                for (name, path) in paths(spec.k(), len) {
                    let label = format!("{kind} n={n} params={} {name}", fmt_vec(&v));
                    path_check(&spec, &path, RecursionMode::DerivedRatio, acc, &label)?;
                }
            }
        }
    }
    Ok(())
}

const PRINTED_RECURSION_KINDS: [Kind; 4] = [
    Kind::FirstKind,
    Kind::NegativeFirstKind,
    Kind::SecondKind,
    Kind::NegativeSecondKind,
];

fn recursion_printed<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    for &kind in scope
        .kinds
        .iter()
        .filter(|k| PRINTED_RECURSION_KINDS.contains(k))
    {
        for v in scope.vectors() {
            for &n in &scope.n {
                let Some(spec) =
                    acc.setup(build_spec(alg, kind, n, &v, FormulaMode::PaperLiteral))?
                else {
                    continue;
                };
                let len = if kind.is_finite() {
                    n as usize
                } else {
                    INFINITE_PATH_LEN
                };
                let label = format!("{kind} n={n} theta={} diagonal", fmt_vec(&v));
                path_check(
                    &spec,
                    &vec![Step::All; len],
                    RecursionMode::PaperLiteral,
                    acc,
                    &label,
                )?;
            }
        }
    }
    Ok(())
}

/// The general printed second-kind recursion against its separately coded
/// q-standard form, one step at a time from the direct probability.
fn q_recursion<T: Real>(alg: &DeformationAlgebra<T>, scope: &Scope, acc: &mut Acc) -> Result<()> {
    if acc
        .setup(match alg.preset() {
            Some(Preset::QStandard) => Ok(()),
            _ => Err(Error::InvalidArgument(
                "the q recursion needs the q-standard algebra".into(),
            )),
        })?
        .is_none()
    {
        return Ok(());
    }
    let q = alg.q().to_f64();
    for v in scope.vectors() {
        for &n in &scope.n {
            let Some(spec) = acc.setup(build_spec(
                alg,
                Kind::SecondKind,
                n,
                &v,
                FormulaMode::PaperLiteral,
            ))?
            else {
                continue;
            };
            let k = v.len();
            for x in compositions(n, k) {
                if x.total() + k as i64 > n as i64 {
                    continue;
                }
                let p = spec.pmf(&x)?;
                let general =
                    recursion_next(&spec, &x, &p, RecursionMode::PaperLiteral, Step::All)?;
                let special = q_second_kind_recursion_next(q, n, &v, &x, p.to_f64());
                let (a, r) = residuals(&general.to_f64(), &special);
                acc.record(a, r, || format!("n={n} theta={} x={x}", fmt_vec(&v)));
            }
        }
    }
    Ok(())
}

fn first_kind_enumeration<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    for &th in &scope.values {
        for &n in &scope.n {
            let Some(spec) = acc.setup(build_spec(
                alg,
                Kind::FirstKind,
                n,
                &[th],
                FormulaMode::Corrected,
            ))?
            else {
                continue;
            };
            let exact = enumerate_first_kind_exact(alg, &T::from_f64(th), n)?;
            let mass: T = exact
                .iter()
                .cloned()
                .collect::<crate::real::CompensatedSum<T>>()
                .value();
            if (mass.clone() - T::one()).abs().to_f64() > 1e-14 {
                acc.fail(format!(
                    "enumeration mass {} at n={n} theta={th}",
                    mass.to_f64()
                ));
            }
            for (y, e) in exact.iter().enumerate() {
                let p = spec.pmf(&MultiIndex::new(vec![y as u32])?)?;
                let (a, r) = residuals(&p, e);
                acc.record(a, r, || format!("n={n} theta={th} y={y}"));
            }
        }
    }
    Ok(())
}

fn second_kind_chain<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    for &th in &scope.values {
        for &n in &scope.n {
            let Some(spec) = acc.setup(build_spec(
                alg,
                Kind::SecondKind,
                n,
                &[th],
                FormulaMode::Corrected,
            ))?
            else {
                continue;
            };
            let exact = enumerate_second_kind_exact(alg, &T::from_f64(th), n)?;
            for (x, e) in exact.iter().enumerate() {
                let p = spec.pmf(&MultiIndex::new(vec![x as u32])?)?;
                let (a, r) = residuals(&p, e);
                acc.record(a, r, || format!("n={n} theta={th} x={x}"));
            }
        }
    }
    Ok(())
}

/// Product of univariate probabilities along the conditional chain: forwards
/// with `n - s_{j-1}` trials for finite kinds, backwards with
/// `n + s_k - s_j` for negative kinds, independent for limit kinds.
pub(crate) fn chain_probability<T: Real>(
    spec: &DistributionSpec<T>,
    idx: &MultiIndex,
) -> Result<T> {
    let k = spec.k();
    let n = spec.n() as i64;
    let mut acc = Wide::one();
    for j in 1..=k {
        let trials = if spec.kind().is_limit() {
            0
        } else if spec.kind().is_negative() {
            n + idx.total() - idx.s(j)
        } else {
            n - idx.s(j - 1)
        };
        if trials < 0 {
            return Ok(T::zero());
        }
        let uni = spec.univariate(j, trials as u32)?;
        acc = acc.mul(&uni.pmf_wide(&MultiIndex::new(vec![idx.entries()[j - 1]])?)?);
    }
    Ok(acc.value())
}

fn decomposition_into<T: Real>(
    spec: &DistributionSpec<T>,
    acc: &mut Acc,
    label: &str,
) -> Result<()> {
    let indices: Vec<MultiIndex> = if spec.kind().is_finite() {
        compositions(spec.n(), spec.k())
    } else {
        crate::combinatorics::box_indices(4, spec.k())
    };
    for idx in indices {
        let joint = spec.pmf(&idx)?;
        let chain = chain_probability(spec, &idx)?;
        let (a, r) = residuals(&joint, &chain);
        acc.record(a, r, || format!("{label} at {idx}"));
    }
    Ok(())
}

fn decomposition<T: Real>(alg: &DeformationAlgebra<T>, scope: &Scope, acc: &mut Acc) -> Result<()> {
    for &kind in &scope.kinds {
        for v in kind_vectors(scope, kind) {
            for &n in &scope.n {
                let Some(spec) = acc.setup(build_spec(alg, kind, n, &v, FormulaMode::Corrected))?
                else {
                    continue;
                };
                let label = format!("{kind} n={n} params={}", fmt_vec(&v));
                decomposition_into(&spec, acc, &label)?;
            }
        }
    }
    Ok(())
}

/// Joint probability against the product of conditional univariate
/// probabilities over the support (a `[0, 4]^k` box for infinite kinds).
pub fn conditional_decomposition_check<T: Real>(
    spec: &DistributionSpec<T>,
    tolerance: f64,
) -> Result<VerificationReport> {
    let mut acc = Acc::new(Metric::Absolute, true);
    decomposition_into(spec, &mut acc, spec.kind().id())?;
    Ok(acc.into_report(
        "conditional-decomposition",
        spec.algebra().name(),
        format!(
            "p={} q={} n={} theta={}",
            spec.algebra().p().to_f64(),
            spec.algebra().q().to_f64(),
            spec.n(),
            fmt_vec(&spec.theta().iter().map(|t| t.to_f64()).collect::<Vec<_>>())
        ),
        IdentityClass::Asserted,
        tolerance,
    ))
}

/// Sup distance to the limit family over `scope.n`, which must shrink
/// strictly; the residual is the distance at the largest `n`.
fn limit_convergence<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
    family: LimitFamily,
) -> Result<()> {
    let mut ns = scope.n.clone();
    ns.sort_unstable();
    for v in scope.vectors() {
        let theta = lift::<T>(&v);
        let finite_kind = match family {
            LimitFamily::Heine => Kind::FirstKind,
            LimitFamily::Euler => Kind::SecondKind,
        };
        let probe = ns.last().copied().unwrap_or(0);
        if acc
            .setup(build_spec(
                alg,
                finite_kind,
                probe,
                &v,
                FormulaMode::Corrected,
            ))?
            .is_none()
        {
            continue;
        }
        let limit_kind = match family {
            LimitFamily::Heine => Kind::MultipleHeine,
            LimitFamily::Euler => Kind::MultipleEuler,
        };
        if acc
            .setup(build_spec(alg, limit_kind, 0, &v, FormulaMode::Corrected))?
            .is_none()
        {
            continue;
        }
        let mut prev: Option<f64> = None;
        let mut distances = Vec::new();
        for &n in &ns {
            let d = limit_distance(alg, &theta, n, family)?;
            distances.push(format!("{n}:{d:e}"));
            if let Some(p) = prev {
                if !(d < p) {
                    acc.fail(format!(
                        "distance not decreasing at n={n} theta={}",
                        fmt_vec(&v)
                    ));
                }
            }
            prev = Some(d);
        }
        if let Some(d) = prev {
            acc.record(d, d, || format!("n={probe} theta={}", fmt_vec(&v)));
        }
        acc.note(format!(
            "theta={} distances {}",
            fmt_vec(&v),
            distances.join(" ")
        ));
    }
    Ok(())
}

/// Sup distance between a deformed table and its classical counterpart.
fn classical_distance<T: Real>(
    alg: &DeformationAlgebra<T>,
    kind: Kind,
    n: u32,
    theta: &[f64],
) -> Result<f64> {
    let spec = build_spec(alg, kind, n, theta, FormulaMode::Corrected)?;
    let table = pmf_table(&spec)?;
    let mut worst = 0.0f64;
    for (idx, p) in table.entries() {
        let c = classical_multinomial_pmf(kind, n, theta, idx)?;
        worst = worst.max((p.to_f64() - c).abs());
    }
    Ok(worst)
}

fn classical_limit<T: Real>(
    alg: &DeformationAlgebra<T>,
    scope: &Scope,
    acc: &mut Acc,
) -> Result<()> {
    for &kind in &scope.kinds {
        for v in scope.vectors() {
            for &n in &scope.n {
                if acc
                    .setup(build_spec(alg, kind, n, &v, FormulaMode::Corrected))?
                    .is_none()
                {
                    continue;
                }
                let d = classical_distance(alg, kind, n, &v)?;
                acc.record(d, d, || format!("{kind} n={n} theta={}", fmt_vec(&v)));
            }
        }
    }
    Ok(())
}

/// Distances to the classical distribution along a sequence `q0 -> 1` with
/// `p0 = (1 + q0) / 2`; they must shrink strictly. Runs on its own
/// Jagannathan-Srinivasa algebras.
pub(crate) fn classical_limit_monotone(scope: &Scope, acc: &mut Acc) -> Result<()> {
    let mut q0s = scope.values.clone();
    q0s.sort_by(f64::total_cmp);
    for &kind in &scope.kinds {
        for v in &scope.vectors {
            for &n in &scope.n {
                let mut prev: Option<f64> = None;
                let mut trail = Vec::new();
                for &q0 in &q0s {
                    let alg =
                        make_preset_algebra(Preset::JagannathanSrinivasa, (1.0 + q0) / 2.0, q0)?;
                    let d = classical_distance(&alg, kind, n, v)?;
                    trail.push(format!("{q0}:{d:e}"));
                    if let Some(p) = prev {
                        if !(d < p) {
                            acc.fail(format!("{kind} n={n}: distance not decreasing at q0={q0}"));
                        }
                    }
                    prev = Some(d);
                }
                if let Some(d) = prev {
                    acc.record(d, d, || format!("{kind} n={n} theta={}", fmt_vec(v)));
                }
                acc.note(format!("{kind} n={n} distances {}", trail.join(" ")));
            }
        }
    }
    Ok(())
}

/// Deformed distribution on the Jagannathan-Srinivasa algebra at `(p0, q0)`
/// against the classical multinomial with the limiting trial probabilities.
pub fn classical_limit_check(
    kind: Kind,
    n: u32,
    theta: &[f64],
    p0: f64,
    q0: f64,
    tolerance: f64,
) -> Result<VerificationReport> {
    let alg = make_preset_algebra(Preset::JagannathanSrinivasa, p0, q0)?;
    let mut acc = Acc::new(Metric::Absolute, true);
    let d = classical_distance(&alg, kind, n, theta)?;
    acc.record(d, d, || format!("{kind} n={n} theta={}", fmt_vec(theta)));
    Ok(acc.into_report(
        "classical-limit",
        alg.name(),
        format!("p={p0} q={q0}"),
        IdentityClass::Asserted,
        tolerance,
    ))
}
