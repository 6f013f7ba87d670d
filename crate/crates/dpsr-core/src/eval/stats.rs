//! Paired t-test on per-seed metric differences.
//!
//! The two-sided p-value comes from the Student-t survival function,
//! evaluated through the regularized incomplete beta function:
//! `P(|T| > t) = I_{v / (v + t^2)}(v / 2, 1 / 2)` for `v` degrees of
//! freedom. Gamma and beta pieces follow the classic Lanczos and Lentz
//! continued-fraction recipes.

use crate::error::{Error, Result};

/// Paired t-test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t_stat: f64,
    pub p_value: f64,
    pub dof: usize,
}

fn ln_gamma(z: f64) -> f64 {
    // Lanczos approximation, g = 5, n = 6.
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut sum = 1.000000000190015;
    for (i, c) in COEFFS.iter().enumerate() {
        sum += c / (z + i as f64 + 1.0);
    }
    let tmp = z + 5.5;
    (z + 0.5) * tmp.ln() - tmp + (2.5066282746310005 * sum / z).ln()
}

/// Regularized incomplete beta function I_x(a, b) via Lentz's modified
/// continued fraction.
pub(crate) fn regularized_inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // Use the symmetry relation where the fraction converges fastest.
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - regularized_inc_beta(1.0 - x, b, a);
    }

    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_gamma(a) - ln_gamma(b) + ln_gamma(a + b);
    let front = ln_front.exp();

    const TINY: f64 = 1e-300;
    let mut f = 1.0f64;
    let mut c = 1.0f64;
    let mut d = 0.0f64;
    for i in 0..=200 {
        let m = i / 2;
        let numerator = if i == 0 {
            1.0
        } else if i % 2 == 0 {
            let m = m as f64;
            m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m))
        } else {
            let m = m as f64;
            -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0))
        };
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    front * (f - 1.0) / a
}

/// Two-sided tail probability of the Student-t distribution.
pub fn student_t_two_sided_p(t: f64, dof: usize) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let v = dof as f64;
    regularized_inc_beta(v / (v + t * t), v / 2.0, 0.5)
}

/// Paired t-test of `a` against `b`: differences `a_i - b_i`, statistic
/// `mean / (sd / sqrt(n))` with the sample (n-1) standard deviation. A zero
/// sd degenerates to (t=0, p=1) when the mean is zero too, and to a signed
/// infinite t with p=0 otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::Stats(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Stats(
            "paired t-test needs at least 2 pairs".to_string(),
        ));
    }
    let n = a.len();
    let dof = n - 1;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
    let sd = (ss / dof as f64).sqrt();

    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            TTestResult {
                t_stat: 0.0,
                p_value: 1.0,
                dof,
            }
        } else {
            TTestResult {
                t_stat: mean.signum() * f64::INFINITY,
                p_value: 0.0,
                dof,
            }
        });
    }

    let t = mean / (sd / (n as f64).sqrt());
    Ok(TTestResult {
        t_stat: t,
        p_value: student_t_two_sided_p(t, dof),
        dof,
    })
}
