//! Two-sample statistics behind the experiment reports: mean with
//! standard error, and the unequal-variance two-sample t-test.
//!
//! The t-distribution tail is evaluated through the regularized
//! incomplete beta function (continued fraction per modified Lentz, log
//! gamma per Lanczos), so no statistics dependency is needed. Tests pin
//! the results against an independent numerical integration of the t
//! density.

use crate::error::{Error, Result};

/// Which two-sample test to run. Welch is the default everywhere; the
/// pooled-variance variant exists for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TTestKind {
    #[default]
    Welch,
    Pooled,
}

/// A two-sided test result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub degrees_of_freedom: f64,
}

/// Mean and unbiased sample variance (n-1 denominator).
fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, variance)
}

/// Mean and standard error (sample standard deviation over sqrt n).
pub fn summarize(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::NotEnoughSamples {
            needed: 2,
            got: values.len(),
        });
    }
    let (mean, variance) = mean_var(values);
    Ok((mean, (variance / values.len() as f64).sqrt()))
}

/// Welch's unequal-variance two-sample t-test, two-sided.
pub fn two_sample_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    two_sample_t_test_with(a, b, TTestKind::Welch)
}

/// Two-sample t-test of the chosen kind, two-sided.
///
/// When both samples have zero variance the statistic degenerates: equal
/// means report p = 1 (no evidence of difference), unequal means report
/// p = 0 with an infinite t (the limit as variance vanishes).
pub fn two_sample_t_test_with(a: &[f64], b: &[f64], kind: TTestKind) -> Result<TTest> {
    for sample in [a, b] {
        if sample.len() < 2 {
            return Err(Error::NotEnoughSamples {
                needed: 2,
                got: sample.len(),
            });
        }
    }
    let (mean_a, var_a) = mean_var(a);
    let (mean_b, var_b) = mean_var(b);
    let (n_a, n_b) = (a.len() as f64, b.len() as f64);

    let (t, df) = match kind {
        TTestKind::Welch => {
            let sq_a = var_a / n_a;
            let sq_b = var_b / n_b;
            let denom_sq = sq_a + sq_b;
            if denom_sq == 0.0 {
                return Ok(degenerate(mean_a, mean_b));
            }
            let t = (mean_a - mean_b) / denom_sq.sqrt();
            let df = denom_sq.powi(2)
                / (sq_a * sq_a / (n_a - 1.0) + sq_b * sq_b / (n_b - 1.0));
            (t, df)
        }
        TTestKind::Pooled => {
            let pooled =
                ((n_a - 1.0) * var_a + (n_b - 1.0) * var_b) / (n_a + n_b - 2.0);
            if pooled == 0.0 {
                return Ok(degenerate(mean_a, mean_b));
            }
            let t = (mean_a - mean_b) / (pooled * (1.0 / n_a + 1.0 / n_b)).sqrt();
            (t, n_a + n_b - 2.0)
        }
    };
    Ok(TTest {
        t,
        p: student_t_two_sided_p(t, df),
        degrees_of_freedom: df,
    })
}

fn degenerate(mean_a: f64, mean_b: f64) -> TTest {
    if mean_a == mean_b {
        TTest {
            t: 0.0,
            p: 1.0,
            degrees_of_freedom: f64::INFINITY,
        }
    } else {
        TTest {
            t: if mean_a > mean_b {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            p: 0.0,
            degrees_of_freedom: f64::INFINITY,
        }
    }
}

/// Two-sided tail probability of Student's t at |t| with the given
/// (possibly fractional) degrees of freedom, via the identity with the
/// regularized incomplete beta function.
fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-13 over the
/// positive reals, with the reflection formula below 0.5.
pub(crate) fn ln_gamma(z: f64) -> f64 {
    const COEFFICIENTS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    const G: f64 = 7.0;
    use std::f64::consts::PI;
    if z < 0.5 {
        (PI / (PI * z).sin()).ln() - ln_gamma(1.0 - z)
    } else {
        let z = z - 1.0;
        let mut x = COEFFICIENTS[0];
        for (i, &c) in COEFFICIENTS.iter().enumerate().skip(1) {
            x += c / (z + i as f64);
        }
        let t = z + G + 0.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
    }
}

/// Continued fraction for the incomplete beta function, modified Lentz
/// method. Converges quickly for x < (a+1)/(a+b+2); the caller routes
/// the other half through the symmetry relation.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITERATIONS: usize = 300;
    const EPS: f64 = 1e-14;
    const FPMIN: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITERATIONS {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and
/// x in [0, 1].
pub(crate) fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}
