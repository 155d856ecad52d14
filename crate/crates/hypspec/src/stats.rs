//! Summation and sample statistics shared by the Monte Carlo modules.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Neumaier compensated sum.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in it {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Estimate { value, se }
    }
    /// |value − target| ≤ k·se
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }
}

/// Sample moments with delta-method standard errors.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: Estimate,
    pub variance: Estimate,
    pub skewness: Estimate,
    pub excess_kurtosis: Estimate,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len();
    if n < 2 {
        return Moments { n, ..Default::default() };
    }
    let nf = n as f64;
    let mean = kahan_sum(xs.iter().copied()) / nf;
    let c = |p: i32| kahan_sum(xs.iter().map(|x| (x - mean).powi(p))) / nf;
    let (m2, m3, m4) = (c(2), c(3), c(4));
    let var = m2 * nf / (nf - 1.0);
    let var_se = ((m4 - m2 * m2) / nf).max(0.0).sqrt();
    let skew = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    let kurt = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 };
    // delta method through empirical influence functions
    let (skew_se, kurt_se) = if m2 > 0.0 {
        let (mut a, mut b) = (0.0, 0.0);
        for x in xs {
            let d = x - mean;
            let phi2 = d * d - m2;
            let phi3 = d * d * d - m3 - 3.0 * m2 * d;
            let phi4 = d * d * d * d - m4 - 4.0 * m3 * d;
            let is = phi3 / m2.powf(1.5) - 1.5 * m3 / m2.powf(2.5) * phi2;
            let ik = phi4 / (m2 * m2) - 2.0 * m4 / (m2 * m2 * m2) * phi2;
            a += is * is;
            b += ik * ik;
        }
        ((a / nf / nf).sqrt(), (b / nf / nf).sqrt())
    } else {
        (0.0, 0.0)
    };
    Moments {
        n,
        mean: Estimate::new(mean, (var / nf).sqrt()),
        variance: Estimate::new(var, var_se),
        skewness: Estimate::new(skew, skew_se),
        excess_kurtosis: Estimate::new(kurt, kurt_se),
    }
}

/// Kolmogorov–Smirnov distance to N(0,1) and its asymptotic p-value.
pub fn ks_normal(xs: &[f64]) -> (f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let nd = Normal::standard();
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = nd.cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    (d, ks_pvalue(d, n))
}

fn ks_pvalue(d: f64, n: f64) -> f64 {
    let t = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    if t < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * t * t).exp();
        p += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Ordinary least-squares slope of y on x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let v: Vec<f64> = std::iter::once(1e16).chain(std::iter::repeat(1.0).take(1000)).chain([-1e16]).collect();
        assert_eq!(kahan_sum(v), 1000.0);
    }

    #[test]
    fn moments_of_symmetric_sample() {
        let xs: Vec<f64> = (-500..=500).map(|i| i as f64).collect();
        let m = moments(&xs);
        assert!(m.mean.value.abs() < 1e-12);
        assert!(m.skewness.value.abs() < 1e-12);
        // uniform: excess kurtosis −1.2
        assert!((m.excess_kurtosis.value + 1.2).abs() < 0.01);
    }

    #[test]
    fn ks_of_quantiles_is_small() {
        let nd = Normal::standard();
        let xs: Vec<f64> = (0..1000).map(|i| nd.inverse_cdf((i as f64 + 0.5) / 1000.0)).collect();
        let (d, p) = ks_normal(&xs);
        assert!(d < 0.001);
        assert!(p > 0.99);
    }
}
