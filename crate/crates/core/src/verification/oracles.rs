//! Brute-force references that share no code path with the closed forms.

use crate::algebra::DeformationAlgebra;
use crate::combinatorics::MultiIndex;
use crate::distributions::{trial_probabilities, Kind};
use crate::error::{Error, Result};
use crate::real::{CompensatedSum, Real};

/// Largest `n` accepted by [`enumerate_first_kind_exact`].
pub const FIRST_KIND_ENUMERATION_MAX: u32 = 14;
/// Largest `n` accepted by [`enumerate_second_kind_exact`].
pub const SECOND_KIND_DP_MAX: u32 = 2000;

/// Distribution of the success count of `n` first-kind trials, obtained by
/// walking all `2^n` outcome sequences.
///
/// Trial `i` succeeds with the probability returned by
/// [`trial_probabilities`] at position `i`.
pub fn enumerate_first_kind_exact<T: Real>(
    alg: &DeformationAlgebra<T>,
    theta: &T,
    n: u32,
) -> Result<Vec<T>> {
    if n > FIRST_KIND_ENUMERATION_MAX {
        return Err(Error::InvalidArgument(format!(
            "exact enumeration needs n <= {FIRST_KIND_ENUMERATION_MAX}, got {n}"
        )));
    }
    let probs: Vec<(T, T)> = (1..=n)
        .map(|i| trial_probabilities(alg, theta, i))
        .collect();
    let mut by_count: Vec<CompensatedSum<T>> = (0..=n).map(|_| CompensatedSum::new()).collect();
    for mask in 0u32..(1u32 << n) {
        let mut p = T::one();
        for (i, (s, f)) in probs.iter().enumerate() {
            p = p * if mask >> i & 1 == 1 {
                s.clone()
            } else {
                f.clone()
            };
        }
        by_count[mask.count_ones() as usize].add(p);
    }
    Ok(by_count.into_iter().map(|s| s.value()).collect())
}

/// Distribution of the failure count of `n` second-kind trials.
///
/// Forward dynamic program over the number of earlier successes `c`; a trial
/// succeeds with probability `1 - theta (tau2/tau1)^c`. Each row is checked
/// for mass conservation within `1e-14`.
pub fn enumerate_second_kind_exact<T: Real>(
    alg: &DeformationAlgebra<T>,
    theta: &T,
    n: u32,
) -> Result<Vec<T>> {
    if n > SECOND_KIND_DP_MAX {
        return Err(Error::InvalidArgument(format!(
            "dynamic program needs n <= {SECOND_KIND_DP_MAX}, got {n}"
        )));
    }
    let ratio = alg.ratio();
    let n = n as usize;
    // row[c] = probability of c successes so far
    let mut row: Vec<T> = vec![T::zero(); n + 1];
    row[0] = T::one();
    for t in 0..n {
        let mut next: Vec<T> = vec![T::zero(); n + 1];
        for c in 0..=t {
            if row[c].is_zero() {
                continue;
            }
            let success = T::one() - theta.clone() * ratio.powi(c as i64);
            if success < T::zero() || success > T::one() {
                return Err(Error::Domain(format!(
                    "success probability {} after {c} successes",
                    success.to_f64()
                )));
            }
            let failure = T::one() - success.clone();
            next[c + 1] = next[c + 1].clone() + row[c].clone() * success;
            next[c] = next[c].clone() + row[c].clone() * failure;
        }
        let mass: T = next.iter().cloned().collect::<CompensatedSum<T>>().value();
        if (mass.clone() - T::one()).abs().to_f64() > 1e-14 {
            return Err(Error::NonFinite(format!(
                "dynamic program lost mass at trial {}: {}",
                t + 1,
                mass.to_f64()
            )));
        }
        row = next;
    }
    // failures = n - successes
    Ok((0..=n).map(|x| row[n - x].clone()).collect())
}

/// `(q; q)_n = prod_{i=1..n} (1 - q^i)`.
fn q_pochhammer(q: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    let mut qi = 1.0;
    for _ in 0..n {
        qi *= q;
        acc *= 1.0 - qi;
    }
    acc
}

/// Classical Gaussian multinomial
/// `(q;q)_x / ((q;q)_{x - s_k} prod_j (q;q)_{r_j})`; 0 when `s_k > x`.
pub fn gaussian_multinomial(q: f64, x: u32, r: &[u32]) -> f64 {
    let s: u32 = r.iter().sum();
    if s > x {
        return 0.0;
    }
    let mut v = q_pochhammer(q, x) / q_pochhammer(q, x - s);
    for &rj in r {
        v /= q_pochhammer(q, rj);
    }
    v
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Classical probability of `idx` for the undeformed analogue of `kind`.
///
/// Stage `j` is a binomial with `n - s_{j-1}` trials and per-trial success
/// probability `theta_j / (1 + theta_j)` (first kind), failure probability
/// `theta_j` (second kind) or success probability `1 - theta_j` (successes
/// variant).
pub fn classical_multinomial_pmf(
    kind: Kind,
    n: u32,
    theta: &[f64],
    idx: &MultiIndex,
) -> Result<f64> {
    if idx.k() != theta.len() {
        return Err(Error::InvalidArgument(
            "index and theta lengths differ".into(),
        ));
    }
    if idx.total() > n as i64 {
        return Ok(0.0);
    }
    let mut remaining = n;
    let mut p = 1.0;
    for (j, &th) in theta.iter().enumerate() {
        let y = idx.entries()[j];
        let hit = match kind {
            Kind::FirstKind => th / (1.0 + th),
            Kind::SecondKind => th,
            Kind::SecondKindSuccesses => 1.0 - th,
            other => {
                return Err(Error::Unsupported(format!(
                    "no classical reference for {other}"
                )));
            }
        };
        p *= binomial_f64(remaining, y)
            * hit.powi(y as i32)
            * (1.0 - hit).powi((remaining - y) as i32);
        remaining -= y;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_preset_algebra, Preset};

    #[test]
    fn first_kind_two_trials() {
        let a = make_preset_algebra(Preset::QStandard, 0.9, 0.5).unwrap();
        let d = enumerate_first_kind_exact(&a, &0.3, 2).unwrap();
        assert!((d[0] - 1.0 / 1.495).abs() < 1e-16);
        assert_eq!(enumerate_first_kind_exact(&a, &0.3, 0).unwrap(), vec![1.0]);
        assert!(enumerate_first_kind_exact(&a, &0.3, 15).is_err());
    }

    #[test]
    fn second_kind_two_trials() {
        let a = make_preset_algebra(Preset::QStandard, 0.9, 0.5).unwrap();
        let d = enumerate_second_kind_exact(&a, &0.4, 2).unwrap();
        assert!((d[0] - 0.48).abs() < 1e-16);
        assert!((d[1] - 0.36).abs() < 1e-16);
        assert!((d[2] - 0.16).abs() < 1e-16);
        assert_eq!(enumerate_second_kind_exact(&a, &0.4, 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn second_kind_rejects_negative_probability() {
        let bm = make_preset_algebra(Preset::BiedenharnMacfarlane, 0.9, 0.5).unwrap();
        assert!(enumerate_second_kind_exact(&bm, &0.4, 4).is_err());
    }

    #[test]
    fn gaussian_values() {
        // [3][2] at q = 1/2
        assert!((gaussian_multinomial(0.5, 3, &[1, 1]) - 2.625).abs() < 1e-15);
        assert_eq!(gaussian_multinomial(0.5, 2, &[2, 1]), 0.0);
        assert_eq!(gaussian_multinomial(0.5, 5, &[0, 0, 0]), 1.0);
    }

    #[test]
    fn classical_chain() {
        let idx = MultiIndex::new(vec![1, 1]).unwrap();
        let p = classical_multinomial_pmf(Kind::SecondKind, 2, &[0.4, 0.3], &idx).unwrap();
        // 2 * 0.4 * 0.6 then 1 * 0.3
        assert!((p - 0.48 * 0.3).abs() < 1e-16);
    }
}
