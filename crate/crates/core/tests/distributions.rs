use rpq_core::distributions::{
    limit_distance, p_zero, pmf, pmf_table, recursion_next, sample, trial_probabilities,
    DistributionSpec, Kind, LimitFamily, RecursionMode, Step, TableStatus, Truncation,
};
use rpq_core::{make_preset_algebra, DeformationAlgebra, MultiIndex, Preset};

fn qstd() -> DeformationAlgebra {
    make_preset_algebra(Preset::QStandard, 0.9, 0.5).unwrap()
}

fn idx(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec()).unwrap()
}

#[test]
fn trial_model() {
    let (s, f) = trial_probabilities(&qstd(), &0.3, 1);
    assert!((s - 0.3 / 1.3).abs() < 1e-16 && (f - 1.0 / 1.3).abs() < 1e-16);
    let (s, f) = trial_probabilities(&qstd(), &0.3, 2);
    assert!((s - 0.15 / 1.15).abs() < 1e-16 && (f - 1.0 / 1.15).abs() < 1e-16);
}

#[test]
fn point_probabilities() {
    let first = DistributionSpec::new(Kind::FirstKind, qstd(), 2, vec![0.3]).unwrap();
    assert!((pmf(&first, &idx(&[1])).unwrap() - 0.45 / 1.495).abs() < 1e-15);
    assert_eq!(pmf(&first, &idx(&[3])).unwrap(), 0.0);
    assert!((p_zero(&first).unwrap() - 1.0 / 1.495).abs() < 1e-15);
    let second = DistributionSpec::new(Kind::SecondKind, qstd(), 2, vec![0.4]).unwrap();
    assert!((pmf(&second, &idx(&[1])).unwrap() - 0.36).abs() < 1e-15);
    assert!((p_zero(&second).unwrap() - 0.48).abs() < 1e-15);
    let empty = DistributionSpec::new(Kind::SecondKind, qstd(), 0, vec![0.4]).unwrap();
    assert_eq!(p_zero(&empty).unwrap(), 1.0);
    // mu = theta/(tau1 - tau2) = 0.6
    let heine = DistributionSpec::new(Kind::MultipleHeine, qstd(), 0, vec![0.3]).unwrap();
    let want = qstd().exp_small(&-0.6, 1e-17).unwrap();
    assert!((pmf(&heine, &idx(&[0])).unwrap() - want).abs() < 1e-15);
}

#[test]
fn finite_tables() {
    let t =
        pmf_table(&DistributionSpec::new(Kind::FirstKind, qstd(), 2, vec![0.3]).unwrap()).unwrap();
    let want = [1.0 / 1.495, 0.45 / 1.495, 0.045 / 1.495];
    let got: Vec<f64> = t.entries().map(|(_, p)| *p).collect();
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-15);
    }
    assert!(t.normalization_defect() <= 1e-15);
    assert_eq!(t.status(), TableStatus::Complete);
    let t = pmf_table(&DistributionSpec::new(Kind::SecondKind, qstd(), 0, vec![0.4, 0.2]).unwrap())
        .unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t.get(&idx(&[0, 0])), Some(&1.0));
}

#[test]
fn infinite_tables_reach_the_tail_or_report() {
    let spec = DistributionSpec::builder(Kind::NegativeSecondKind, qstd())
        .n(2)
        .theta(vec![0.3, 0.2])
        .build()
        .unwrap();
    let t = pmf_table(&spec).unwrap();
    assert_eq!(t.status(), TableStatus::Complete);
    assert!(*t.total_mass() >= 1.0 - spec.truncation().eps_tail);
    let capped = DistributionSpec::builder(Kind::NegativeFirstKind, qstd())
        .n(2)
        .theta(vec![0.3])
        .truncation(Truncation {
            eps_tail: 1e-12,
            max_index: 3,
        })
        .build()
        .unwrap();
    assert!(pmf_table(&capped).unwrap().truncated());
}

#[test]
fn derived_ratio_recursion() {
    let second = DistributionSpec::new(Kind::SecondKind, qstd(), 2, vec![0.4]).unwrap();
    let next = recursion_next(
        &second,
        &idx(&[0]),
        &0.48,
        RecursionMode::DerivedRatio,
        Step::All,
    )
    .unwrap();
    assert!((next - 0.36).abs() < 1e-15);
    assert!(recursion_next(
        &second,
        &idx(&[2]),
        &0.16,
        RecursionMode::DerivedRatio,
        Step::All
    )
    .is_err());
    let first = DistributionSpec::new(Kind::FirstKind, qstd(), 2, vec![0.3]).unwrap();
    let next = recursion_next(
        &first,
        &idx(&[0]),
        &(1.0 / 1.495),
        RecursionMode::DerivedRatio,
        Step::All,
    )
    .unwrap();
    assert!((next - 0.45 / 1.495).abs() < 1e-15);
}

#[test]
fn limit_distances_shrink() {
    let d5 = limit_distance(&qstd(), &[0.3], 5, LimitFamily::Heine).unwrap();
    let d40 = limit_distance(&qstd(), &[0.3], 40, LimitFamily::Heine).unwrap();
    assert!(d40 <= 1e-3 && d5 > d40);
    let e5 = limit_distance(&qstd(), &[0.3], 5, LimitFamily::Euler).unwrap();
    let e40 = limit_distance(&qstd(), &[0.3], 40, LimitFamily::Euler).unwrap();
    assert!(e40 <= 1e-3 && e5 > e40);
}

fn within_three_sigma(spec: &DistributionSpec, seed: u64, draws: usize) {
    let table = pmf_table(spec).unwrap();
    let got = sample(spec, seed, draws).unwrap();
    for (i, p) in table.entries() {
        let hits = got.iter().filter(|d| *d == i).count() as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (hits - draws as f64 * p).abs() <= 3.0 * sd + 1e-9,
            "{i}: {hits} vs {}",
            draws as f64 * p
        );
    }
}

#[test]
fn sampler_frequencies() {
    let first = DistributionSpec::new(Kind::FirstKind, qstd(), 2, vec![0.3]).unwrap();
    within_three_sigma(&first, 11, 200_000);
    let second = DistributionSpec::new(Kind::SecondKind, qstd(), 2, vec![0.4, 0.3]).unwrap();
    within_three_sigma(&second, 12, 200_000);
}

#[test]
fn sampler_is_deterministic() {
    let spec = DistributionSpec::new(Kind::NegativeSecondKind, qstd(), 2, vec![0.3, 0.2]).unwrap();
    assert_eq!(
        sample(&spec, 5, 500).unwrap(),
        sample(&spec, 5, 500).unwrap()
    );
    assert_ne!(
        sample(&spec, 5, 500).unwrap(),
        sample(&spec, 6, 500).unwrap()
    );
}
