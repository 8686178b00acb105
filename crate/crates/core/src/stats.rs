//! Sample moments and the two-sample Kolmogorov–Smirnov test.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Mean, unbiased variance and their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    /// Delta-method standard error `sqrt((m4 - m2^2) / n)`.
    pub se_variance: f64,
}

impl Moments {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptySample("moment report"));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m4) = (0.0, 0.0);
        for &x in xs {
            let d = (x - mean) * (x - mean);
            m2 += d;
            m4 += d * d;
        }
        let variance = if xs.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
        let (m2, m4) = (m2 / n, m4 / n);
        Ok(Self {
            n: xs.len(),
            mean,
            variance,
            se_mean: libm::sqrt(variance / n),
            se_variance: libm::sqrt((m4 - m2 * m2).max(0.0) / n),
        })
    }
}

/// Shorthand for [`Moments::from_samples`].
pub fn moment_report(xs: &[f64]) -> Result<Moments> {
    Moments::from_samples(xs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KsTest {
    pub distance: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov distance with the asymptotic p-value
/// `Q_KS((sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D)`, `ne = n m / (n + m)`.
/// Ties are handled by stepping both empirical CDFs past equal values.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample("Kolmogorov-Smirnov test"));
    }
    let sort = |xs: &[f64]| {
        let mut v: Vec<f64> = xs.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let (a, b) = (sort(a), sort(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut distance: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        distance = distance.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = libm::sqrt(na * nb / (na + nb));
    let p_value = ks_survival((ne + 0.12 + 0.11 / ne) * distance);
    Ok(KsTest { distance, p_value })
}

/// Kolmogorov survival function `2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2)`.
pub fn ks_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = libm::exp(-2.0 * jf * jf * x * x);
        sum += sign * term;
        if term < 1e-17 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Median, averaging the two central order statistics for even sizes.
pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample("median"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}
