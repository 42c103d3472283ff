//! Pearson correlation and Welch's two-sample t-test.

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("input series is constant")]
    ConstantInput,
    #[error("sample has zero variance")]
    DegenerateSample,
    #[error("non-finite value in input")]
    NonFinite,
}

/// A statistic with its two-sided p-value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom of the reference t distribution.
    pub df: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (`n − 1` denominator); zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Two-sided tail probability of a t statistic.
fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Sample correlation coefficient and its p-value via `t = r·sqrt((n−2)/(1−r²))`.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<TestResult, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(StatsError::TooFew {
            needed: 3,
            got: xs.len(),
        });
    }
    check_finite(xs)?;
    check_finite(ys)?;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (xs.len() - 2) as f64;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        two_sided_p(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(TestResult {
        statistic: r,
        p_value,
        df,
    })
}

/// Welch's t statistic (`a` minus `b`) with Welch–Satterthwaite degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFew {
                needed: 2,
                got: s.len(),
            });
        }
        check_finite(s)?;
    }
    let (va, vb) = (sample_variance(a), sample_variance(b));
    if va == 0.0 || vb == 0.0 {
        return Err(StatsError::DegenerateSample);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (qa, qb) = (va / na, vb / nb);
    let t = (mean(a) - mean(b)) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    Ok(TestResult {
        statistic: t,
        p_value: two_sided_p(t, df),
        df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    #[test]
    fn welch_hand_sized() {
        let r = welch_t(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        // means 2 and 3, both variances 1: t = -1/sqrt(2/3), df = 4
        assert!((r.statistic - -(1.5f64).sqrt()).abs() < 1e-12);
        assert!((r.df - 4.0).abs() < 1e-12);
        // scipy.stats.ttest_ind(..., equal_var=False)
        assert!((r.p_value - 0.287_864_134_726_690_8).abs() < 1e-9, "{}", r.p_value);
    }

    #[test]
    fn welch_unequal_sizes_against_reference() {
        let a = [12.1, 9.8, 11.4, 13.0, 10.2, 12.7];
        let b = [8.9, 10.1, 9.4, 8.2];
        let r = welch_t(&a, &b).unwrap();
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        assert!((r.statistic - 3.558_359_102_823_094_3).abs() < 1e-9, "{}", r.statistic);
        assert!((r.df - 7.990_733_631_897_924).abs() < 1e-9, "{}", r.df);
        assert!((r.p_value - 0.007_432_464_296_297_18).abs() < 1e-9, "{}", r.p_value);
    }

    #[test]
    fn welch_identical_samples() {
        let a = [3.0, 5.0, 9.0];
        let r = welch_t(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn welch_rejects_degenerate() {
        assert_eq!(welch_t(&[1.0, 1.0], &[1.0, 2.0]), Err(StatsError::DegenerateSample));
        assert!(matches!(welch_t(&[1.0], &[1.0, 2.0]), Err(StatsError::TooFew { .. })));
    }

    #[test]
    fn pearson_exact_lines() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let down: Vec<f64> = xs.iter().map(|x| 7.0 - 2.0 * x).collect();
        let r = pearson_r(&xs, &down).unwrap();
        assert!((r.statistic + 1.0).abs() < 1e-12);
        assert!(r.p_value < 1e-10);
        let up: Vec<f64> = xs.iter().map(|x| 0.5 * x + 1.0).collect();
        assert!((pearson_r(&xs, &up).unwrap().statistic - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_against_reference() {
        let x = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
        let y = [1.0, 0.93, 0.88, 0.91, 0.8, 0.77, 0.62, 0.7, 0.66, 0.69];
        let r = pearson_r(&x, &y).unwrap();
        // scipy.stats.pearsonr(x, y)
        assert!((r.statistic - -0.920_291_155_989_256_4).abs() < 1e-9, "{}", r.statistic);
        assert!((r.p_value - 0.000_160_267_672_902_388_58).abs() < 1e-9, "{}", r.p_value);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(pearson_r(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), Err(StatsError::ConstantInput));
        assert!(matches!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFew { .. })));
        assert_eq!(pearson_r(&[1.0, 2.0, 3.0], &[1.0]), Err(StatsError::LengthMismatch(3, 1)));
    }

    /// Textbook formula with explicit sums.
    fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    #[test]
    fn pearson_matches_textbook_formula() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..200 {
            let n = 3 + (rng.next_u64() % 30) as usize;
            let x: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let r = pearson_r(&x, &y).unwrap().statistic;
            assert!((r - pearson_oracle(&x, &y)).abs() < 1e-12);
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            assert!((pearson_r(&x, &neg).unwrap().statistic + r).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn pearson_affine_is_unit(
            xs in proptest::collection::vec(-1e3..1e3f64, 3..40),
            a in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64],
            b in -100.0..100.0f64,
        ) {
            let spread = xs.iter().cloned().fold(f64::MIN, f64::max)
                - xs.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1e-3);
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let r = pearson_r(&xs, &ys).unwrap().statistic;
            prop_assert!((r.abs() - 1.0).abs() < 1e-12);
            prop_assert_eq!(r.signum(), a.signum());
        }

        #[test]
        fn welch_is_antisymmetric(
            a in proptest::collection::vec(-10.0..10.0f64, 2..20),
            b in proptest::collection::vec(-10.0..10.0f64, 2..20),
        ) {
            prop_assume!(sample_variance(&a) > 1e-9 && sample_variance(&b) > 1e-9);
            let ab = welch_t(&a, &b).unwrap();
            let ba = welch_t(&b, &a).unwrap();
            prop_assert!((ab.statistic + ba.statistic).abs() < 1e-9);
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }
    }
}
