use rpq_core::combinatorics::{
    alternative_multinomial_sum, binomial, corollary_sum, gasper_rahman_sum, multinomial,
    multinomial_inverse_params, multinomial_product_form, multinomial_theorem_sum,
    negative_multinomial_theorem_sum, recurrence_rhs, shifted_factorial, CorollaryForm,
    InverseConvention, Recurrence,
};
use rpq_core::verification::gaussian_multinomial;
use rpq_core::{make_preset_algebra, DeformationAlgebra, FormulaMode, MultiIndex, Preset, Shift};

fn js() -> DeformationAlgebra {
    make_preset_algebra(Preset::JagannathanSrinivasa, 0.9, 0.5).unwrap()
}

fn qstd() -> DeformationAlgebra {
    make_preset_algebra(Preset::QStandard, 0.9, 0.5).unwrap()
}

fn idx(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn shifted_factorials() {
    let a = qstd();
    assert!(
        rel(
            shifted_factorial(&a, &1.0, &0.3, 2, Shift::Plus).unwrap(),
            1.495
        ) < 1e-15
    );
    assert!(
        rel(
            shifted_factorial(&a, &1.0, &0.4, 2, Shift::Minus).unwrap(),
            0.48
        ) < 1e-15
    );
    assert_eq!(
        shifted_factorial(&js(), &0.7, &0.2, 0, Shift::Minus).unwrap(),
        1.0
    );
}

#[test]
fn coefficient_values() {
    assert!(rel(binomial(&qstd(), 2, 1).unwrap(), 1.5) < 1e-15);
    assert!(rel(binomial(&js(), 3, 1).unwrap(), 1.51) < 1e-15);
    assert_eq!(binomial(&js(), 7, 0).unwrap(), 1.0);
    assert!(rel(multinomial(&qstd(), 3, &idx(&[1, 1])).unwrap(), 2.625) < 1e-15);
    assert_eq!(multinomial(&js(), 5, &idx(&[0, 0, 0])).unwrap(), 1.0);
    assert_eq!(multinomial(&js(), 2, &idx(&[2, 1])).unwrap(), 0.0);
}

#[test]
fn product_form_matches_direct_coefficient() {
    assert!(
        rel(
            multinomial_product_form(&qstd(), 3, &idx(&[1, 1])).unwrap(),
            2.625
        ) < 1e-15
    );
    let a = js();
    let r = idx(&[1, 2]);
    assert!(
        rel(
            multinomial_product_form(&a, 4, &r).unwrap(),
            multinomial(&a, 4, &r).unwrap()
        ) <= 1e-13
    );
}

#[test]
fn inverse_parameter_coefficients() {
    let a = js();
    let inv = a.invert_parameters().unwrap();
    let r = idx(&[1, 1]);
    let direct = multinomial(&inv, 4, &r).unwrap();
    for c in [InverseConvention::TailSums, InverseConvention::PartialSums] {
        assert!(rel(multinomial_inverse_params(&a, 4, &r, c).unwrap(), direct) <= 1e-11);
    }
    let z = idx(&[0, 0]);
    let v = multinomial_inverse_params(&a, 4, &z, InverseConvention::TailSums).unwrap();
    assert!(rel(v, multinomial(&a, 4, &z).unwrap()) < 1e-15);
}

#[test]
fn recurrences_reproduce_the_coefficient() {
    let want = multinomial(&qstd(), 3, &idx(&[1, 1])).unwrap();
    let v = recurrence_rhs(
        &qstd(),
        3,
        &idx(&[1, 1]),
        Recurrence::Tau1Tail,
        FormulaMode::Corrected,
    )
    .unwrap();
    assert!(rel(v, want) < 1e-14);
    let a = js();
    let r = idx(&[2, 1, 1]);
    let want = multinomial(&a, 5, &r).unwrap();
    for v in [
        Recurrence::Tau1Tail,
        Recurrence::Tau2Partial,
        Recurrence::Tau2Tail,
        Recurrence::Tau1Partial,
    ] {
        let got = recurrence_rhs(&a, 5, &r, v, FormulaMode::Corrected).unwrap();
        assert!(rel(got, want) <= 1e-12, "{}", v.id());
    }
}

#[test]
fn gaussian_specialisation() {
    let a = qstd();
    for x in 0..=10u32 {
        for r1 in 0..=x {
            for r2 in 0..=(x - r1) {
                let got = multinomial(&a, x as i64, &idx(&[r1, r2])).unwrap();
                assert!(rel(got, gaussian_multinomial(0.5, x, &[r1, r2])) <= 1e-13);
            }
        }
    }
}

#[test]
fn multinomial_theorem_examples() {
    let s = multinomial_theorem_sum(&qstd(), &[0.3], 2, FormulaMode::Corrected).unwrap();
    assert!(rel(s.sum, 1.495) < 1e-15 && rel(s.target, 1.495) < 1e-15);
    let s = multinomial_theorem_sum(&js(), &[0.2, 0.4], 3, FormulaMode::Corrected).unwrap();
    assert!(s.rel_residual() <= 1e-11);
    // only r = 0 survives: tau1^{k C(n,2)}
    let s = multinomial_theorem_sum(&js(), &[0.0, 0.0], 3, FormulaMode::Corrected).unwrap();
    assert!(rel(s.sum, 0.9f64.powi(6)) < 1e-15);
}

#[test]
fn negative_multinomial_theorem_examples() {
    let s = negative_multinomial_theorem_sum(&qstd(), &[0.3], 2, 60, FormulaMode::Corrected, 1e-12)
        .unwrap();
    assert!(s.converged && (s.sides.sum - 1.495).abs() <= 1e-9);
    let s =
        negative_multinomial_theorem_sum(&js(), &[0.2, 0.3], 2, 80, FormulaMode::Corrected, 1e-12)
            .unwrap();
    assert!(s.converged && s.sides.rel_residual() <= 1e-8);
    let s = negative_multinomial_theorem_sum(&js(), &[0.0], 3, 10, FormulaMode::Corrected, 1e-12)
        .unwrap();
    assert_eq!(s.sides.sum, s.sides.target);
}

#[test]
fn alternative_theorem_and_corollary() {
    let s = alternative_multinomial_sum(&qstd(), &[0.4, 0.0], 2).unwrap();
    assert!((s.sum - 1.0).abs() < 1e-15 && (s.target - 1.0).abs() < 1e-15);
    let s = alternative_multinomial_sum(&js(), &[0.3, 0.2, 0.5], 0).unwrap();
    assert_eq!((s.sum, s.target), (1.0, 1.0));
    let s = corollary_sum(
        &qstd(),
        &[0.4],
        2,
        CorollaryForm::ComplementPowers,
        FormulaMode::Corrected,
    )
    .unwrap();
    assert!(s.abs_residual() < 1e-15);
    for form in [CorollaryForm::ComplementPowers, CorollaryForm::DirectPowers] {
        let s = corollary_sum(&js(), &[0.3, 0.2], 3, form, FormulaMode::Corrected).unwrap();
        assert!(s.rel_residual() <= 1e-11);
    }
}

#[test]
fn gasper_rahman_is_evaluated() {
    let s = gasper_rahman_sum(&qstd(), &[0.4], 2, &1.0).unwrap();
    assert!(s.sum.is_finite() && s.target.is_finite());
    let s = gasper_rahman_sum(&qstd(), &[0.4, 0.2], 0, &1.0).unwrap();
    assert_eq!((s.sum, s.target), (1.0, 1.0));
}
