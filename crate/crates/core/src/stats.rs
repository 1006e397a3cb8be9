//! Descriptive statistics and the Student-t / Beta special functions the
//! tests and acquisition rules are built on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean and spread of a set of per-run estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (N−1 denominator). `None` when `n == 1`.
    pub sample_std: Option<f64>,
    /// Population variance (N denominator).
    pub pop_var: f64,
}

impl SampleStats {
    /// Builds stats from already-aggregated moments (mean and sample std).
    pub fn from_moments(n: usize, mean: f64, sample_std: Option<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if !mean.is_finite() {
            return Err(Error::invalid("mean must be finite"));
        }
        let pop_var = match (n, sample_std) {
            (1, _) => 0.0,
            (_, Some(s)) if s >= 0.0 && s.is_finite() => s * s * (n - 1) as f64 / n as f64,
            (_, Some(_)) => return Err(Error::invalid("sample std must be finite and non-negative")),
            (_, None) => return Err(Error::invalid("sample std is required for n >= 2")),
        };
        Ok(Self {
            n,
            mean,
            sample_std: if n == 1 { None } else { sample_std },
            pop_var,
        })
    }

    /// The sample std, or [`Error::TestUndefined`] for single-run samples.
    pub fn require_std(&self) -> Result<f64> {
        match self.sample_std {
            Some(s) if self.n >= 2 => Ok(s),
            _ => Err(Error::TestUndefined),
        }
    }

    /// Standard error of the mean, s/√N.
    pub fn std_error(&self) -> Result<f64> {
        Ok(self.require_std()? / (self.n as f64).sqrt())
    }
}

/// Two-pass mean and variance of `estimates`.
pub fn summarize(estimates: &[f64]) -> Result<SampleStats> {
    if estimates.is_empty() {
        return Err(Error::EmptySample);
    }
    if estimates.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("estimates must be finite"));
    }
    let n = estimates.len();
    let nf = n as f64;
    let mean = estimates.iter().sum::<f64>() / nf;
    // compensated second pass: the correction term removes the rounding
    // error left in `mean`
    let (ss, comp) = estimates.iter().fold((0.0, 0.0), |(ss, c), &x| {
        let d = x - mean;
        (ss + d * d, c + d)
    });
    let ss = (ss - comp * comp / nf).max(0.0);
    let mean = mean + comp / nf;
    let pop_var = ss / nf;
    let sample_std = (n >= 2).then(|| (ss / (nf - 1.0)).sqrt());
    Ok(SampleStats {
        n,
        mean,
        sample_std,
        pop_var,
    })
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const CF_MAX_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// Regularized incomplete beta I_x(a, b).
///
/// `y` must equal `1 − x`; passing it separately avoids cancellation when
/// the caller can form it exactly.
pub fn reg_inc_beta(a: f64, b: f64, x: f64, y: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let v = if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - inc_beta_cf(b, a, y, x)
    } else {
        inc_beta_cf(a, b, x, y)
    };
    v.clamp(0.0, 1.0)
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction,
/// valid when x < (a+1)/(a+b+2).
fn inc_beta_cf(a: f64, b: f64, x: f64, y: f64) -> f64 {
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    let front = ln_front.exp() / a;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    front * h
}

fn check_df(df: f64) -> Result<()> {
    if !df.is_finite() || df < 1.0 {
        return Err(Error::invalid(format!("degrees of freedom must be >= 1, got {df}")));
    }
    Ok(())
}

/// Upper tail P(T_df > t) of Student's t distribution.
pub fn t_survival(t: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if t.is_nan() {
        return Err(Error::invalid("t statistic is NaN"));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    let t2 = t * t;
    // P(|T| > |t|) / 2
    let tail = if t2.is_infinite() {
        0.0
    } else {
        let denom = df + t2;
        0.5 * reg_inc_beta(0.5 * df, 0.5, df / denom, t2 / denom)
    };
    let p = if t > 0.0 { tail } else { 1.0 - tail };
    Ok(p.clamp(0.0, 1.0))
}

/// Critical value t such that P(T_df > t) = `alpha`.
pub fn t_critical(alpha: f64, df: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    check_df(df)?;
    if alpha == 0.5 {
        return Ok(0.0);
    }
    if alpha > 0.5 {
        return Ok(-t_critical(1.0 - alpha, df)?);
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while t_survival(hi, df)? > alpha {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::invalid("critical value out of range"));
        }
    }
    // bisect down to adjacent floats
    for _ in 0..2_000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if t_survival(mid, df)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mean and variance of Beta(`alpha_param`, `beta_param`).
pub fn beta_moments(alpha_param: f64, beta_param: f64) -> Result<(f64, f64)> {
    if !(alpha_param > 0.0 && beta_param > 0.0) || !alpha_param.is_finite() || !beta_param.is_finite() {
        return Err(Error::invalid(format!(
            "beta parameters must be positive, got ({alpha_param}, {beta_param})"
        )));
    }
    Ok(beta_moments_unchecked(alpha_param, beta_param))
}

#[inline]
pub(crate) fn beta_moments_unchecked(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (a / s, a * b / (s * s * (s + 1.0)))
}
