use serde::{Deserialize, Serialize};

use super::checks::{classical_limit_monotone, run_identity, Scope};
use super::{Acc, IdentityClass, Metric, Verdict, VerificationReport};
use crate::algebra::{make_preset_algebra, Preset};
use crate::combinatorics::Recurrence;
use crate::distributions::Kind;
use crate::error::{Error, Result};
use crate::real::Real;

/// Largest sup distance accepted between the deformed tables on the
/// Jagannathan-Srinivasa algebra at `p = 0.999, q = 0.998` and the classical
/// multinomial tables. Calibrated once at those parameters: the largest
/// measured distance over the first kind, the second kind and its successes
/// variant with `n <= 10` is `1.06e-3`, so the bound is frozen at twice that.
pub const CLASSICAL_LIMIT_TOLERANCE: f64 = 2e-3;

/// Registry entry of one identity.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityInfo {
    pub id: String,
    pub class: IdentityClass,
    pub metric: Metric,
    pub tolerance: f64,
    pub description: &'static str,
}

struct Entry {
    id: String,
    class: IdentityClass,
    metric: Metric,
    tolerance: f64,
    description: &'static str,
    presets: Vec<Preset>,
    p: Vec<f64>,
    q: Vec<f64>,
    scope: Scope,
}

fn range(a: u32, b: u32) -> Vec<u32> {
    (a..=b).collect()
}

fn base_scope() -> Scope {
    Scope {
        n: Vec::new(),
        k: vec![1],
        values: Vec::new(),
        vectors: Vec::new(),
        kinds: Vec::new(),
        absorption: Vec::new(),
        trunc: 0,
        x0: 1.0,
    }
}

const FINITE_KINDS: [Kind; 5] = [
    Kind::FirstKind,
    Kind::SecondKind,
    Kind::SecondKindSuccesses,
    Kind::AbsorptionSecondKind,
    Kind::AbsorptionSuccesses,
];

const INFINITE_KINDS: [Kind; 5] = [
    Kind::NegativeFirstKind,
    Kind::NegativeFirstKindFailures,
    Kind::NegativeSecondKind,
    Kind::MultipleHeine,
    Kind::MultipleEuler,
];

fn registry() -> Vec<Entry> {
    use IdentityClass::{Asserted, ReportOnly};
    use Metric::{Absolute, Relative};
    let all = Preset::ALL.to_vec();
    let q_grid = vec![0.3, 0.5, 0.7];
    let entry = |id: &str, class, metric, tolerance, description, scope: Scope| Entry {
        id: id.to_string(),
        class,
        metric,
        tolerance,
        description,
        presets: all.clone(),
        p: vec![0.9],
        q: q_grid.clone(),
        scope,
    };
    let with_n = |n: Vec<u32>| Scope { n, ..base_scope() };
    let coeff = || Scope {
        n: range(0, 10),
        k: vec![1, 2, 3],
        ..base_scope()
    };
    let theorem = || Scope {
        n: range(0, 6),
        k: vec![1, 2, 3],
        values: vec![0.1, 0.4, 0.7],
        ..base_scope()
    };
    let z_grid: Vec<f64> = (-8..=8).map(|i| i as f64 / 10.0).collect();

    let mut out = vec![
        entry(
            "number-basics",
            Asserted,
            Absolute,
            1e-15,
            "[0] = 0, [1] = R(p,q) and [n] > 0",
            with_n(range(0, 20)),
        ),
        entry(
            "closed-form-numbers",
            Asserted,
            Relative,
            1e-13,
            "[n] against the closed form of each preset",
            with_n(range(0, 20)),
        ),
        entry(
            "splitting",
            Asserted,
            Relative,
            1e-12,
            "[x] = tau1^s [x-s] + tau2^(x-s) [s]",
            with_n(range(0, 20)),
        ),
        entry(
            "inverse-number",
            Asserted,
            Relative,
            1e-12,
            "inverted [a] / [1] = (tau1 tau2)^(1-a) [a] / [1]",
            with_n(range(1, 15)),
        ),
        entry(
            "inverse-number-printed",
            ReportOnly,
            Relative,
            1e-12,
            "inverted [a] = (tau1 tau2)^(1-a) [a] as printed",
            with_n(range(1, 15)),
        ),
        entry(
            "inverse-factorial",
            Asserted,
            Relative,
            1e-12,
            "inverted [a]! / [1]^a = (tau1 tau2)^(-C(a,2)) [a]! / [1]^a",
            with_n(range(0, 15)),
        ),
        entry(
            "inverse-factorial-printed",
            ReportOnly,
            Relative,
            1e-12,
            "inverted [a]! = (tau1 tau2)^(-C(a,2)) [a]! as printed",
            with_n(range(0, 15)),
        ),
        entry(
            "inverse-ordered-factorial",
            Asserted,
            Relative,
            1e-12,
            "inverted [a]_r / [1]^r = (tau1 tau2)^(-ar + C(r+1,2)) [a]_r / [1]^r",
            with_n(range(0, 12)),
        ),
        entry(
            "inverse-ordered-factorial-printed",
            ReportOnly,
            Relative,
            1e-12,
            "inverted [a]_r = (tau1 tau2)^(-ar + C(r+1,2)) [a]_r as printed",
            with_n(range(0, 12)),
        ),
        entry(
            "inversion-involution",
            Asserted,
            Relative,
            1e-13,
            "inverting twice restores [n]",
            with_n(range(0, 10)),
        ),
        entry(
            "exponential-duality",
            Asserted,
            Absolute,
            1e-9,
            "e(z) E(-z) = 1",
            Scope {
                values: z_grid,
                ..base_scope()
            },
        ),
        entry(
            "binomial-reduction",
            Asserted,
            Relative,
            1e-13,
            "k = 1 multinomial equals the binomial coefficient",
            with_n(range(0, 10)),
        ),
        entry(
            "multinomial-product-form",
            Asserted,
            Relative,
            1e-12,
            "multinomial = product of conditional binomials",
            coeff(),
        ),
        Entry {
            presets: vec![Preset::QStandard],
            ..entry(
                "gaussian-multinomial",
                Asserted,
                Relative,
                1e-13,
                "q-standard multinomial against (q;q)_n quotients",
                coeff(),
            )
        },
        entry(
            "inverse-multinomial-tail-sums",
            Asserted,
            Relative,
            1e-11,
            "inverted multinomial by rescaling, tail-sum exponent",
            coeff(),
        ),
        entry(
            "inverse-multinomial-partial-sums",
            Asserted,
            Relative,
            1e-11,
            "inverted multinomial by rescaling, partial-sum exponent",
            coeff(),
        ),
    ];
    for v in Recurrence::ALL {
        out.push(entry(
            &format!("recurrence-{}", v.id()),
            Asserted,
            Relative,
            1e-11,
            "coefficient recurrence, corrected weights",
            coeff(),
        ));
        out.push(entry(
            &format!("recurrence-{}-printed", v.id()),
            ReportOnly,
            Relative,
            1e-11,
            "coefficient recurrence, printed weights",
            coeff(),
        ));
    }
    out.extend([
        entry(
            "multinomial-theorem",
            Asserted,
            Relative,
            1e-10,
            "multinomial theorem, corrected tau1 exponent",
            theorem(),
        ),
        entry(
            "multinomial-theorem-printed",
            ReportOnly,
            Relative,
            1e-10,
            "multinomial theorem, printed tau1 exponent",
            theorem(),
        ),
        Entry {
            presets: vec![
                Preset::QStandard,
                Preset::JagannathanSrinivasa,
                Preset::ChakrabartyJagannathan,
            ],
            ..entry(
                "negative-multinomial-theorem",
                Asserted,
                Relative,
                1e-8,
                "truncated negative multinomial theorem, corrected tau1 exponent",
                Scope {
                    n: range(1, 3),
                    k: vec![1, 2],
                    values: vec![0.1, 0.4, 0.7],
                    trunc: 60,
                    ..base_scope()
                },
            )
        },
        entry(
            "negative-multinomial-theorem-printed",
            ReportOnly,
            Relative,
            1e-8,
            "truncated negative multinomial theorem, printed tau1 exponent",
            Scope {
                n: range(1, 3),
                k: vec![1, 2],
                values: vec![0.1, 0.4],
                trunc: 60,
                ..base_scope()
            },
        ),
        entry(
            "alternative-multinomial-theorem",
            Asserted,
            Relative,
            1e-10,
            "alternative multinomial theorem with k + 1 variables",
            Scope {
                k: vec![1, 2],
                ..theorem()
            },
        ),
        entry(
            "corollary-complement-powers",
            Asserted,
            Relative,
            1e-11,
            "alternative theorem at x_(k+1) = 0, weight tau1^C(n-s_k,2)",
            theorem(),
        ),
        entry(
            "corollary-direct-powers",
            Asserted,
            Relative,
            1e-11,
            "second corollary sum with per-coordinate tau1 weights",
            theorem(),
        ),
        entry(
            "corollary-printed",
            ReportOnly,
            Relative,
            1e-11,
            "corollary sums with the printed right-hand side",
            theorem(),
        ),
        entry(
            "gasper-rahman",
            ReportOnly,
            Relative,
            1e-10,
            "Gasper-Rahman style expansion with x0 = 1",
            theorem(),
        ),
        entry(
            "trial-probabilities",
            Asserted,
            Absolute,
            1e-15,
            "success + failure = 1, success decreasing when tau2 < tau1",
            Scope {
                n: vec![20],
                values: vec![0.2, 0.3, 0.4, 0.9],
                ..base_scope()
            },
        ),
        entry(
            "normalization",
            Asserted,
            Absolute,
            1e-10,
            "finite-support tables sum to 1",
            Scope {
                n: range(0, 8),
                k: vec![1, 2, 3],
                values: vec![0.2, 0.3, 0.4],
                kinds: FINITE_KINDS.to_vec(),
                absorption: vec![0.5, 1.5, 3.0],
                ..base_scope()
            },
        ),
        entry(
            "infinite-normalization",
            Asserted,
            Absolute,
            1e-9,
            "infinite-support tables reach mass 1 - eps_tail",
            Scope {
                n: range(1, 4),
                k: vec![1, 2],
                values: vec![0.2, 0.3, 0.4],
                kinds: INFINITE_KINDS.to_vec(),
                ..base_scope()
            },
        ),
        entry(
            "recursion-derived-ratio",
            Asserted,
            Relative,
            1e-10,
            "chained probability ratios reproduce direct probabilities",
            Scope {
                n: range(0, 6),
                k: vec![1, 2],
                values: vec![0.2, 0.4],
                kinds: Kind::ALL.to_vec(),
                absorption: vec![1.5, 3.0],
                ..base_scope()
            },
        ),
        entry(
            "recursion-printed",
            ReportOnly,
            Relative,
            1e-10,
            "printed recursions chained along the diagonal",
            Scope {
                n: range(0, 6),
                k: vec![1, 2],
                values: vec![0.2, 0.4],
                kinds: Kind::ALL.to_vec(),
                ..base_scope()
            },
        ),
        Entry {
            presets: vec![Preset::QStandard],
            ..entry(
                "q-recursion-specialization",
                Asserted,
                Relative,
                1e-13,
                "printed second-kind recursion against its q-standard form",
                Scope {
                    n: range(0, 6),
                    k: vec![1, 2],
                    values: vec![0.2, 0.4],
                    ..base_scope()
                },
            )
        },
        entry(
            "first-kind-enumeration",
            Asserted,
            Absolute,
            1e-12,
            "k = 1 first kind against all 2^n trial sequences",
            Scope {
                n: range(0, 12),
                values: vec![0.2, 0.3, 0.4],
                ..base_scope()
            },
        ),
        entry(
            "second-kind-markov-chain",
            Asserted,
            Absolute,
            1e-12,
            "k = 1 second kind against the success-count chain",
            Scope {
                n: range(0, 12),
                values: vec![0.2, 0.3, 0.4],
                ..base_scope()
            },
        ),
        entry(
            "conditional-decomposition",
            Asserted,
            Absolute,
            1e-11,
            "joint probability = product of conditional univariate probabilities",
            Scope {
                n: range(0, 6),
                k: vec![1, 2, 3],
                values: vec![0.2, 0.3],
                kinds: Kind::ALL.to_vec(),
                absorption: vec![1.5, 3.0],
                ..base_scope()
            },
        ),
    ]);
    let limit_scope = || Scope {
        n: vec![5, 10, 20, 40],
        values: vec![0.3],
        ..base_scope()
    };
    for (id, description) in [
        (
            "heine-limit",
            "first kind approaches the multiple Heine family",
        ),
        (
            "euler-limit",
            "second kind approaches the multiple Euler family",
        ),
    ] {
        out.push(Entry {
            presets: vec![Preset::QStandard],
            q: vec![0.5],
            ..entry(id, Asserted, Absolute, 1e-3, description, limit_scope())
        });
    }
    out.push(Entry {
        presets: vec![Preset::JagannathanSrinivasa],
        p: vec![0.999],
        q: vec![0.998],
        ..entry(
            "classical-limit",
            Asserted,
            Absolute,
            CLASSICAL_LIMIT_TOLERANCE,
            "deformed tables near p = q = 1 against classical multinomials",
            Scope {
                n: vec![0, 4],
                vectors: vec![vec![0.3, 0.2]],
                kinds: vec![Kind::FirstKind, Kind::SecondKind, Kind::SecondKindSuccesses],
                ..base_scope()
            },
        )
    });
    out.push(Entry {
        presets: vec![Preset::JagannathanSrinivasa],
        p: Vec::new(),
        q: Vec::new(),
        ..entry(
            "classical-limit-monotone",
            Asserted,
            Absolute,
            CLASSICAL_LIMIT_TOLERANCE,
            "classical distance shrinks along q0 -> 1 with p0 = (1 + q0) / 2",
            Scope {
                n: vec![3],
                vectors: vec![vec![0.3]],
                values: vec![0.99, 0.999],
                kinds: vec![Kind::FirstKind, Kind::SecondKind],
                ..base_scope()
            },
        )
    });
    out
}

/// Every registered identity with its class and default tolerance.
pub fn identities() -> Vec<IdentityInfo> {
    registry()
        .into_iter()
        .map(|e| IdentityInfo {
            id: e.id,
            class: e.class,
            metric: e.metric,
            tolerance: e.tolerance,
            description: e.description,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// One `[[check]]` (grid sweep) or `[[case]]` (explicit point) of a suite
/// file. Omitted fields take the identity's defaults.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub identity: String,
    #[serde(default, alias = "preset")]
    presets: Option<OneOrMany<String>>,
    #[serde(default)]
    p: Option<OneOrMany<f64>>,
    #[serde(default)]
    q: Option<OneOrMany<f64>>,
    #[serde(default)]
    n: Option<OneOrMany<u32>>,
    #[serde(default)]
    n_max: Option<u32>,
    #[serde(default)]
    k: Option<OneOrMany<usize>>,
    #[serde(default)]
    k_max: Option<usize>,
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default)]
    theta: Option<OneOrMany<Vec<f64>>>,
    #[serde(default, alias = "kind")]
    kinds: Option<OneOrMany<String>>,
    #[serde(default)]
    absorption: Option<Vec<f64>>,
    #[serde(default)]
    trunc: Option<u32>,
    #[serde(default)]
    x0: Option<f64>,
    #[serde(default)]
    tolerance: Option<f64>,
}

impl CheckConfig {
    /// A sweep of `identity` with all defaults.
    pub fn identity(id: &str) -> Self {
        CheckConfig {
            identity: id.to_string(),
            presets: None,
            p: None,
            q: None,
            n: None,
            n_max: None,
            k: None,
            k_max: None,
            values: None,
            theta: None,
            kinds: None,
            absorption: None,
            trunc: None,
            x0: None,
            tolerance: None,
        }
    }
}

/// A suite description: grid sweeps, explicit cases, and optionally the
/// whole default registry.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub include_default: bool,
    #[serde(default, rename = "check")]
    pub checks: Vec<CheckConfig>,
    #[serde(default, rename = "case")]
    pub cases: Vec<CheckConfig>,
}

impl SuiteConfig {
    /// Every registered identity on its default grid.
    pub fn default_suite() -> Self {
        SuiteConfig {
            include_default: true,
            checks: Vec::new(),
            cases: Vec::new(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

fn parse_all<X: std::str::FromStr<Err = Error>>(v: &[String]) -> Result<Vec<X>> {
    v.iter().map(|s| s.parse::<X>()).collect()
}

/// Registry defaults overridden by the fields of `c`.
fn resolve(c: &CheckConfig, base: &Entry) -> Result<Entry> {
    let mut scope = base.scope.clone();
    if let Some(n) = &c.n {
        scope.n = n.to_vec();
    }
    if let Some(m) = c.n_max {
        scope.n = range(
            if base.scope.n.first() == Some(&1) {
                1
            } else {
                0
            },
            m,
        );
    }
    if let Some(k) = &c.k {
        scope.k = k.to_vec();
    }
    if let Some(m) = c.k_max {
        scope.k = (1..=m).collect();
    }
    if let Some(v) = &c.values {
        scope.values = v.clone();
    }
    if let Some(t) = &c.theta {
        scope.vectors = t.to_vec();
    }
    if let Some(kinds) = &c.kinds {
        scope.kinds = parse_all::<Kind>(&kinds.to_vec())?;
    }
    if let Some(a) = &c.absorption {
        scope.absorption = a.clone();
    }
    if let Some(t) = c.trunc {
        scope.trunc = t;
    }
    if let Some(x) = c.x0 {
        scope.x0 = x;
    }
    Ok(Entry {
        id: base.id.clone(),
        class: base.class,
        metric: base.metric,
        tolerance: c.tolerance.unwrap_or(base.tolerance),
        description: base.description,
        presets: match &c.presets {
            Some(p) => parse_all::<Preset>(&p.to_vec())?,
            None => base.presets.clone(),
        },
        p: c.p.as_ref().map_or_else(|| base.p.clone(), |v| v.to_vec()),
        q: c.q.as_ref().map_or_else(|| base.q.clone(), |v| v.to_vec()),
        scope,
    })
}

fn describe(scope: &Scope) -> String {
    let mut parts = Vec::new();
    let list = |v: &[u32]| {
        let contiguous = v.windows(2).all(|w| w[1] == w[0] + 1);
        match (v.first(), v.last()) {
            (Some(a), Some(b)) if contiguous && v.len() > 2 => format!("{a}..={b}"),
            _ => format!("{v:?}"),
        }
    };
    if !scope.n.is_empty() {
        parts.push(format!("n={}", list(&scope.n)));
    }
    if !scope.kinds.is_empty() {
        let ids: Vec<&str> = scope.kinds.iter().map(|k| k.id()).collect();
        parts.push(format!("kinds=[{}]", ids.join(",")));
    }
    if !scope.vectors.is_empty() {
        parts.push(format!("vectors={:?}", scope.vectors));
    } else if !scope.values.is_empty() {
        parts.push(format!("k={:?} values={:?}", scope.k, scope.values));
    } else {
        parts.push(format!("k={:?}", scope.k));
    }
    if !scope.absorption.is_empty() {
        parts.push(format!("m={:?}", scope.absorption));
    }
    if scope.trunc > 0 {
        parts.push(format!("trunc={}", scope.trunc));
    }
    parts.join(" ")
}

fn error_report(e: &Entry, preset: &str, params: String, err: &Error) -> VerificationReport {
    let mut acc = Acc::new(e.metric, true);
    acc.fail(err.to_string());
    let mut r = acc.into_report(&e.id, preset, params, e.class, e.tolerance);
    if e.class == IdentityClass::Asserted {
        r.verdict = Verdict::Fail;
    }
    r
}

fn run_entry<T: Real>(e: &Entry, strict: bool, out: &mut Vec<VerificationReport>) {
    let desc = describe(&e.scope);
    if e.id == "classical-limit-monotone" {
        let mut acc = Acc::new(e.metric, strict);
        let params = format!("q0={:?} {desc}", e.scope.values);
        match classical_limit_monotone(&e.scope, &mut acc) {
            Ok(()) => out.push(acc.into_report(
                &e.id,
                Preset::JagannathanSrinivasa.id(),
                params,
                e.class,
                e.tolerance,
            )),
            Err(err) => out.push(error_report(
                e,
                Preset::JagannathanSrinivasa.id(),
                params,
                &err,
            )),
        }
        return;
    }
    let mut seen: Vec<(Preset, u64, u64)> = Vec::new();
    for &preset in &e.presets {
        for &p in &e.p {
            for &q in &e.q {
                let p_eff = if preset.uses_p() { p } else { 1.0 };
                let key = (preset, p_eff.to_bits(), q.to_bits());
                if seen.contains(&key) {
                    continue;
                }
                seen.push(key);
                let params = if preset.uses_p() {
                    format!("p={p} q={q} {desc}")
                } else {
                    format!("q={q} {desc}")
                };
                let alg = match make_preset_algebra(preset, T::from_f64(p), T::from_f64(q)) {
                    Ok(a) => a,
                    Err(err) if strict => {
                        out.push(error_report(e, preset.id(), params, &err));
                        continue;
                    }
                    Err(_) => continue,
                };
                let mut acc = Acc::new(e.metric, strict);
                match run_identity(&e.id, &alg, &e.scope, &mut acc) {
                    Ok(()) => {
                        out.push(acc.into_report(&e.id, preset.id(), params, e.class, e.tolerance))
                    }
                    Err(err) => out.push(error_report(e, preset.id(), params, &err)),
                }
            }
        }
    }
}

/// Runs a suite in standard precision.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    run_suite_with::<f64>(config)
}

/// Runs a suite with scalar type `T`. Reports are sorted by identity,
/// preset and parameters.
pub fn run_suite_with<T: Real>(config: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let registry = registry();
    let lookup = |id: &str| {
        registry
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::Config(format!("unknown identity `{id}`")))
    };
    let mut jobs: Vec<(Entry, bool)> = Vec::new();
    if config.include_default {
        for e in &registry {
            jobs.push((resolve(&CheckConfig::identity(&e.id), e)?, false));
        }
    }
    for c in &config.checks {
        jobs.push((resolve(c, lookup(&c.identity)?)?, false));
    }
    for c in &config.cases {
        jobs.push((resolve(c, lookup(&c.identity)?)?, true));
    }
    let mut out = Vec::new();
    for (entry, strict) in &jobs {
        run_entry::<T>(entry, *strict, &mut out);
    }
    out.sort_by(|a, b| {
        (a.identity.as_str(), a.preset.as_str(), a.params.as_str()).cmp(&(
            b.identity.as_str(),
            b.preset.as_str(),
            b.params.as_str(),
        ))
    });
    Ok(out)
}

/// Whether any asserted identity failed.
pub fn suite_failed(reports: &[VerificationReport]) -> bool {
    reports.iter().any(|r| r.verdict == Verdict::Fail)
}

/// One JSON object per line.
pub fn to_json_lines(reports: &[VerificationReport]) -> String {
    let mut s = String::new();
    for r in reports {
        s.push_str(&serde_json::to_string(r).expect("reports serialise"));
        s.push('\n');
    }
    s
}
