//! Acceptance run: one pass/fail line per criterion, non-zero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rpq_cli::format::read_table_json;
use rpq_cli::run_cli;
use rpq_core::combinatorics::{compositions, multinomial, Recurrence};
use rpq_core::distributions::{
    limit_distance, pmf_table, sample, DistributionSpec, Kind, LimitFamily,
};
use rpq_core::verification::{
    classical_limit_check, conditional_decomposition_check, enumerate_first_kind_exact,
    enumerate_second_kind_exact, gaussian_multinomial, run_suite, SuiteConfig, Verdict,
    VerificationReport, CLASSICAL_LIMIT_TOLERANCE,
};
use rpq_core::{make_preset_algebra, DeformationAlgebra, MultiIndex, Preset};

const P: f64 = 0.9;
const QS: [f64; 3] = [0.3, 0.5, 0.7];
const THETAS: [f64; 3] = [0.2, 0.3, 0.4];
/// Absorption parameters `m_j`.
const MS: [f64; 3] = [0.5, 1.5, 3.0];

struct Outcome {
    ok: bool,
    detail: String,
}

fn algebras() -> Vec<DeformationAlgebra> {
    let mut out = Vec::new();
    for preset in Preset::ALL {
        for q in QS {
            out.push(make_preset_algebra(preset, P, q).expect("grid parameters are valid"));
        }
    }
    out
}

/// Every vector of length `k` over `values`.
fn vectors(values: &'static [f64], k: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| {
                values.iter().map(move |&t| {
                    let mut w = v.clone();
                    w.push(t);
                    w
                })
            })
            .collect();
    }
    out
}

fn suite(ids: &[&str]) -> Vec<VerificationReport> {
    let mut toml = String::new();
    for id in ids {
        toml.push_str(&format!("[[check]]\nidentity = \"{id}\"\n"));
    }
    run_suite(&SuiteConfig::from_toml_str(&toml).expect("suite file parses")).expect("suite runs")
}

/// Largest residual over `reports`, all of which must pass and stay below
/// `tol`.
fn suite_bound(reports: &[VerificationReport], tol: f64) -> (bool, f64, usize) {
    let mut worst = 0.0f64;
    let mut points = 0;
    let mut ok = !reports.is_empty();
    for r in reports {
        points += r.points;
        let res = r.residual().unwrap_or(0.0);
        worst = worst.max(res);
        ok &= r.verdict == Verdict::Pass && res <= tol;
    }
    (ok, worst, points)
}

fn normalization() -> Outcome {
    let kinds = [
        Kind::FirstKind,
        Kind::SecondKind,
        Kind::SecondKindSuccesses,
        Kind::AbsorptionSecondKind,
        Kind::AbsorptionSuccesses,
    ];
    let (mut worst, mut tables, mut skipped) = (0.0f64, 0, 0);
    for alg in algebras() {
        for kind in kinds {
            for k in 1..=3 {
                for n in 0..=8 {
                    let grid = if kind.is_absorption() { &MS } else { &THETAS };
                    for v in vectors(grid, k) {
                        let b = DistributionSpec::builder(kind, alg.clone()).n(n);
                        let b = if kind.is_absorption() {
                            b.absorption(v)
                        } else {
                            b.theta(v)
                        };
                        match b.build() {
                            Ok(spec) => {
                                let t = pmf_table(&spec).expect("finite table");
                                worst = worst.max(t.normalization_defect());
                                tables += 1;
                            }
                            Err(_) => skipped += 1,
                        }
                    }
                }
            }
        }
    }
    Outcome {
        ok: worst <= 1e-10 && tables > 0,
        detail: format!("max |sum - 1| = {worst:e} over {tables} tables ({skipped} points outside the domain), tol 1e-10"),
    }
}

fn coefficients() -> Outcome {
    let mut ids = vec![
        "multinomial-product-form".to_string(),
        "inverse-multinomial-tail-sums".to_string(),
        "inverse-multinomial-partial-sums".to_string(),
    ];
    ids.extend(
        Recurrence::ALL
            .iter()
            .map(|v| format!("recurrence-{}", v.id())),
    );
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let (ok, worst, points) = suite_bound(&suite(&refs), 1e-11);
    let printed: Vec<String> = Recurrence::ALL
        .iter()
        .map(|v| format!("recurrence-{}-printed", v.id()))
        .collect();
    let refs: Vec<&str> = printed.iter().map(String::as_str).collect();
    let printed_worst = suite(&refs)
        .iter()
        .filter_map(|r| r.residual())
        .fold(0.0f64, f64::max);
    Outcome {
        ok,
        detail: format!(
            "max rel residual {worst:e} over {points} points, tol 1e-11; printed recurrences (report-only) reach {printed_worst:e}"
        ),
    }
}

fn theorems() -> Outcome {
    let parts = [
        ("multinomial-theorem", 1e-10),
        ("alternative-multinomial-theorem", 1e-10),
        ("negative-multinomial-theorem", 1e-8),
        ("corollary-complement-powers", 1e-11),
        ("corollary-direct-powers", 1e-11),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (id, tol) in parts {
        let (pass, worst, points) = suite_bound(&suite(&[id]), tol);
        ok &= pass;
        detail.push(format!("{id} {worst:.1e}/{tol:.0e} ({points} pts)"));
    }
    Outcome {
        ok,
        detail: detail.join(", "),
    }
}

fn oracles() -> Outcome {
    let (mut first, mut second, mut skipped) = (0.0f64, 0.0f64, 0);
    for alg in algebras() {
        for theta in THETAS {
            for n in 0..=12 {
                let enumerated = enumerate_first_kind_exact(&alg, &theta, n).expect("n <= 12");
                let spec = DistributionSpec::new(Kind::FirstKind, alg.clone(), n, vec![theta])
                    .expect("first kind");
                let t = pmf_table(&spec).expect("table");
                for (y, e) in enumerated.iter().enumerate() {
                    let p = t
                        .get(&MultiIndex::new(vec![y as u32]).unwrap())
                        .copied()
                        .unwrap_or(0.0);
                    first = first.max((p - e).abs());
                }
                let (Ok(spec), Ok(chain)) = (
                    DistributionSpec::new(Kind::SecondKind, alg.clone(), n, vec![theta]),
                    enumerate_second_kind_exact(&alg, &theta, n),
                ) else {
                    skipped += 1;
                    continue;
                };
                let t = pmf_table(&spec).expect("table");
                for (x, e) in chain.iter().enumerate() {
                    let p = t
                        .get(&MultiIndex::new(vec![x as u32]).unwrap())
                        .copied()
                        .unwrap_or(0.0);
                    second = second.max((p - e).abs());
                }
            }
        }
    }
    let mut chain = 0.0f64;
    let mut chain_ok = true;
    for alg in algebras() {
        for kind in [Kind::FirstKind, Kind::SecondKind, Kind::SecondKindSuccesses] {
            for k in 1..=3 {
                for n in 0..=6 {
                    for theta in vectors(&THETAS, k) {
                        let Ok(spec) = DistributionSpec::new(kind, alg.clone(), n, theta) else {
                            continue;
                        };
                        let r =
                            conditional_decomposition_check(&spec, 1e-11).expect("decomposition");
                        chain = chain.max(r.residual().unwrap_or(0.0));
                        chain_ok &= r.verdict == Verdict::Pass;
                    }
                }
            }
        }
    }
    Outcome {
        ok: first <= 1e-12 && second <= 1e-12 && chain <= 1e-11 && chain_ok,
        detail: format!(
            "first kind vs 2^n enumeration {first:e} (tol 1e-12), second kind vs chain {second:e} (tol 1e-12, {skipped} points outside the domain), joint vs conditional chain {chain:e} (tol 1e-11)"
        ),
    }
}

fn limits() -> Outcome {
    let alg = make_preset_algebra(Preset::QStandard, P, 0.5).unwrap();
    let ns = [5, 10, 20, 40];
    let mut ok = true;
    let mut detail = Vec::new();
    for family in [LimitFamily::Heine, LimitFamily::Euler] {
        let d: Vec<f64> = ns
            .iter()
            .map(|&n| limit_distance(&alg, &[0.3], n, family).expect("limit distance"))
            .collect();
        let decreasing = d.windows(2).all(|w| w[1] < w[0]);
        ok &= decreasing && d[3] <= 1e-3;
        detail.push(format!(
            "{family:?} d(40) = {:e}, decreasing {decreasing}",
            d[3]
        ));
    }
    let mut duality = 0.0f64;
    for alg in algebras() {
        for i in -8..=8 {
            let z = i as f64 / 10.0;
            let prod = alg.exp_small(&z, 1e-17).unwrap() * alg.exp_big(&-z, 1e-17).unwrap();
            duality = duality.max((prod - 1.0).abs());
        }
    }
    ok &= duality <= 1e-9;
    detail.push(format!("exponential duality {duality:e} (tol 1e-9)"));
    Outcome {
        ok,
        detail: detail.join(", "),
    }
}

fn specialization() -> Outcome {
    let mut worst = 0.0f64;
    for q in QS {
        let alg = make_preset_algebra(Preset::QStandard, P, q).unwrap();
        for k in 1..=3 {
            for x in 0..=10u32 {
                for s in 0..=x {
                    for r in compositions(s, k) {
                        let got = multinomial(&alg, x as i64, &r).unwrap();
                        let want = gaussian_multinomial(q, x, r.entries());
                        worst = worst.max((got - want).abs() / want.abs());
                    }
                }
            }
        }
    }
    let mut classical = 0.0f64;
    let mut classical_ok = true;
    for kind in [Kind::FirstKind, Kind::SecondKind, Kind::SecondKindSuccesses] {
        for n in 0..=4 {
            let r = classical_limit_check(
                kind,
                n,
                &[0.3, 0.2],
                0.999,
                0.998,
                CLASSICAL_LIMIT_TOLERANCE,
            )
            .expect("classical check");
            classical = classical.max(r.residual().unwrap_or(0.0));
            classical_ok &= r.verdict == Verdict::Pass;
        }
    }
    Outcome {
        ok: worst <= 1e-13 && classical_ok,
        detail: format!(
            "Gaussian multinomial rel {worst:e} (tol 1e-13), classical distance {classical:e} (frozen tol {CLASSICAL_LIMIT_TOLERANCE:e})"
        ),
    }
}

fn sampler() -> Outcome {
    let alg = make_preset_algebra(Preset::QStandard, P, 0.5).unwrap();
    let specs = [
        DistributionSpec::new(Kind::FirstKind, alg.clone(), 2, vec![0.3]).unwrap(),
        DistributionSpec::new(Kind::SecondKind, alg, 2, vec![0.4, 0.3]).unwrap(),
    ];
    let draws = 200_000;
    let mut ok = true;
    let mut worst_z = 0.0f64;
    for (seed, spec) in specs.iter().enumerate() {
        let table = pmf_table(spec).unwrap();
        let got = sample(spec, seed as u64 + 1, draws).unwrap();
        for (idx, p) in table.entries() {
            let hits = got.iter().filter(|d| *d == idx).count() as f64;
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            let z = (hits - draws as f64 * p).abs() / sd.max(f64::MIN_POSITIVE);
            worst_z = worst_z.max(z);
            ok &= z <= 3.0;
        }
        ok &= got == sample(spec, seed as u64 + 1, draws).unwrap();
    }
    Outcome {
        ok,
        detail: format!("{draws} draws per table, largest |z| = {worst_z:.2} (bound 3), same seed reproduces the draws"),
    }
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(
        std::iter::once("rpq").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, String::from_utf8(out).expect("utf-8 output"))
}

fn determinism_and_roundtrip() -> Outcome {
    let (c1, first) = cli(&["verify", "--suite", "default"]);
    let (c2, second) = cli(&["verify", "--suite", "default"]);
    let identical = first == second;
    let reports = first.lines().count();
    let (code, json) = cli(&[
        "table",
        "--kind",
        "second-kind",
        "--algebra",
        "jagannathan-srinivasa",
        "--p",
        "0.9",
        "--q",
        "0.5",
        "--n",
        "8",
        "--theta",
        "0.3,0.2,0.4",
        "--format",
        "json",
    ]);
    let back = read_table_json(&json)
        .and_then(|d| d.values::<f64>())
        .expect("table re-reads");
    let alg = make_preset_algebra(Preset::JagannathanSrinivasa, 0.9, 0.5).unwrap();
    let table =
        pmf_table(&DistributionSpec::new(Kind::SecondKind, alg, 8, vec![0.3, 0.2, 0.4]).unwrap())
            .unwrap();
    let exact = back.len() == table.len()
        && back
            .iter()
            .zip(table.entries())
            .all(|((i, p), (j, q))| i == j && p.to_bits() == q.to_bits());
    Outcome {
        ok: c1 == 0 && c2 == 0 && identical && code == 0 && exact,
        detail: format!(
            "default suite exit codes {c1}/{c2}, {reports} reports, runs identical {identical}; JSON table round-trip exact {exact}"
        ),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("normalization", normalization),
        ("coefficient identities", coefficients),
        ("multinomial theorems", theorems),
        ("oracle equivalence", oracles),
        ("limits and duality", limits),
        ("specialization", specialization),
        ("sampler", sampler),
        ("determinism and round-trip", determinism_and_roundtrip),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        failed += usize::from(!o.ok);
        println!(
            "criterion {} {name}: {} ({}; {:.1}s)",
            i + 1,
            if o.ok { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    let total = start.elapsed().as_secs_f64();
    let in_time = total <= 300.0;
    println!(
        "runtime: {} ({total:.1}s, limit 300s)",
        if in_time { "PASS" } else { "FAIL" }
    );
    if failed > 0 || !in_time {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
