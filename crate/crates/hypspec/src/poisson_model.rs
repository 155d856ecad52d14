//! The n → ∞ surrogate: independent Poisson cycle counts Z_{γ,d} ~ Poisson(1/d)
//! and the limiting fluctuation Ñ_∞ = (2/L) Σ_γ Σ_d d·S_d·(Z_{γ,d} − 1/d),
//! with S_d = Σ_j A(γ, dj).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characters::Character;
use crate::error::{Error, Result};
use crate::fuchsian::LengthSpectrum;
use crate::rng::{stream, tags};
use crate::stats::{kahan_sum, ks_normal, moments, ols_slope, Estimate, Moments};
use crate::trace_stats::{default_points, CoefficientTable};
use crate::windows::Window;

/// Poisson variate by inversion; exact and cheap for mean ≤ 1.
pub fn poisson_inversion<R: Rng>(mean: f64, rng: &mut R) -> u32 {
    let u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u32;
    while u > cdf && p > 0.0 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Group {
    d: usize,
    /// S_d split by frequency: (k = d·j, amplitude A without the cosine).
    parts: Vec<(usize, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonSurrogate {
    pub table: CoefficientTable,
    pub lambda: f64,
    pub l: f64,
    pub seed: u64,
    /// Time reversal broken by the character; selects the GUE target.
    pub breaks_time_reversal: bool,
    groups: Vec<Vec<Group>>,
}

impl PoissonSurrogate {
    pub fn new(spec: &LengthSpectrum, chi: &Character, w: &Window, lambda: f64, l: f64, seed: u64) -> Result<Self> {
        let table = CoefficientTable::build(spec, chi, w, lambda, l)?;
        let groups = table
            .classes
            .iter()
            .map(|c| {
                let kmax = c.terms.iter().map(|t| t.k).max().unwrap_or(1);
                (1..=kmax)
                    .map(|d| Group {
                        d,
                        parts: c.terms.iter().filter(|t| t.k % d == 0).map(|t| (t.k, t.freq, t.amp)).collect(),
                    })
                    .collect()
            })
            .collect();
        Ok(PoissonSurrogate { table, lambda, l, seed, breaks_time_reversal: chi.breaks_time_reversal(), groups })
    }

    fn s_d(g: &Group, mu: f64) -> f64 {
        g.parts.iter().map(|(_, f, a)| a * (mu * f).cos()).sum()
    }

    /// One draw of Z_{γ,d}, in table order.
    pub fn draw_z(&self, draw: u64) -> Vec<Vec<u32>> {
        let mut rng = stream(self.seed, tags::POISSON, draw);
        self.groups
            .iter()
            .map(|gs| gs.iter().map(|g| poisson_inversion(1.0 / g.d as f64, &mut rng)).collect())
            .collect()
    }

    pub fn n_tilde_from(&self, z: &[Vec<u32>], mu: f64) -> f64 {
        let s = kahan_sum(self.groups.iter().zip(z).flat_map(|(gs, zs)| {
            gs.iter().zip(zs).map(move |(g, &zd)| {
                let d = g.d as f64;
                (d * zd as f64 - 1.0) * Self::s_d(g, mu)
            })
        }));
        2.0 / self.l * s
    }

    pub fn sample_n_infty(&self, draw: u64) -> f64 {
        self.n_tilde_from(&self.draw_z(draw), self.lambda)
    }

    /// Ñ_∞(μ) = Σ_t w_t cos(μ f_t) for a fixed draw, as (f_t, w_t) pairs.
    pub fn energy_terms(&self, z: &[Vec<u32>]) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (gs, zs) in self.groups.iter().zip(z) {
            let kmax = gs.len();
            for k in 1..=kmax {
                // F(γ^k) − d(k) = Σ_{d|k} (d·Z_d − 1)
                let centred: f64 = (1..=k).filter(|d| k % d == 0).map(|d| d as f64 * zs[d - 1] as f64 - 1.0).sum();
                if let Some(&(_, f, a)) = gs[0].parts.iter().find(|p| p.0 == k) {
                    out.push((f, 2.0 / self.l * a * centred));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantReport {
    pub lambda: f64,
    pub l: f64,
    /// (m, κ_m) for m = 2..=mmax
    pub kappa: Vec<(usize, f64)>,
    /// κ_m·L^m, the constant in the O(L^{−m}) decay.
    pub scaled: Vec<(usize, f64)>,
    pub sigma2_limit: f64,
    pub kappa2_rel_err: f64,
    pub kappa2_identity: bool,
}

/// κ_m = 2^m L^{−m} Σ_γ Σ_d d^{m−1} S_d^m
pub fn exact_cumulants(s: &PoissonSurrogate, mmax: usize) -> Result<CumulantReport> {
    if mmax < 2 {
        return Err(Error::InvalidParameters("mmax must be >= 2".into()));
    }
    let sd: Vec<(f64, f64)> = s
        .groups
        .iter()
        .flat_map(|gs| gs.iter().map(|g| (g.d as f64, PoissonSurrogate::s_d(g, s.lambda))))
        .collect();
    let kappa: Vec<(usize, f64)> = (2..=mmax)
        .map(|m| {
            let c = (2.0 / s.l).powi(m as i32);
            (m, c * kahan_sum(sd.iter().map(|(d, x)| d.powi(m as i32 - 1) * x.powi(m as i32))))
        })
        .collect();
    let scaled = kappa.iter().map(|&(m, k)| (m, k * s.l.powi(m as i32))).collect();
    let sigma2 = s.table.sigma2_at(s.lambda);
    let k2 = kappa[0].1;
    let rel = if sigma2 == 0.0 { k2.abs() } else { ((k2 - sigma2) / sigma2).abs() };
    Ok(CumulantReport {
        lambda: s.lambda,
        l: s.l,
        kappa,
        scaled,
        sigma2_limit: sigma2,
        kappa2_rel_err: rel,
        kappa2_identity: rel <= 1e-9,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub ls: Vec<f64>,
    /// (m, |κ_m| at each L, fitted log-log slope)
    pub fits: Vec<(usize, Vec<f64>, f64)>,
}

/// log|κ_m| against log L for each m.
pub fn cumulant_decay(reports: &[CumulantReport]) -> DecayFit {
    let ls: Vec<f64> = reports.iter().map(|r| r.l).collect();
    let x: Vec<f64> = ls.iter().map(|l| l.ln()).collect();
    let ms: Vec<usize> = reports.first().map_or(vec![], |r| r.kappa.iter().map(|k| k.0).collect());
    let fits = ms
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            let v: Vec<f64> = reports.iter().map(|r| r.kappa[i].1.abs()).collect();
            let y: Vec<f64> = v.iter().map(|k| k.ln()).collect();
            (m, v, ols_slope(&x, &y))
        })
        .collect();
    DecayFit { ls, fits }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub draws: usize,
    pub lambda: f64,
    pub l: f64,
    pub sigma2: f64,
    pub moments: Moments,
    pub skewness_target: f64,
    pub kurtosis_target: f64,
    pub ks_distance: f64,
    pub ks_p_value: f64,
    pub skewness_pass: bool,
    pub kurtosis_pass: bool,
}

pub fn clt_margin(l: f64) -> f64 {
    10.0 / (l * l)
}

pub fn clt_test(s: &PoissonSurrogate, draws: usize) -> Result<CltReport> {
    let cum = exact_cumulants(s, 4)?;
    let sigma2 = cum.kappa[0].1;
    let margin = clt_margin(s.l);
    if !(sigma2 >= margin) {
        return Err(Error::VarianceTooSmall { sigma2, margin });
    }
    if draws < 10 {
        return Err(Error::InvalidParameters("need at least 10 draws".into()));
    }
    let sd = sigma2.sqrt();
    let x: Vec<f64> = (0..draws as u64).into_par_iter().map(|i| s.sample_n_infty(i) / sd).collect();
    let m = moments(&x);
    let (d, p) = ks_normal(&x);
    let skewness_target = cum.kappa[1].1 / sigma2.powf(1.5);
    let kurtosis_target = cum.kappa[2].1 / (sigma2 * sigma2);
    Ok(CltReport {
        draws,
        lambda: s.lambda,
        l: s.l,
        sigma2,
        skewness_pass: m.skewness.within(skewness_target, 3.0),
        kurtosis_pass: m.excess_kurtosis.within(kurtosis_target, 3.0),
        moments: m,
        skewness_target,
        kurtosis_target,
        ks_distance: d,
        ks_p_value: p,
    })
}

pub fn ergodicity_min_epsilon(l: f64, big_lambda: f64) -> f64 {
    (10.0 * (1.0 / l + 1.0 / big_lambda)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub lambda: f64,
    pub big_lambda: f64,
    pub l: f64,
    pub epsilon: f64,
    pub target: f64,
    pub draws: usize,
    pub points: usize,
    pub violation_fraction: Estimate,
    pub mean_abs_deviation: Estimate,
}

/// Energy average of Ñ_∞(μ)² over [λ, λ+Λ] for one fixed draw.
fn energy_mean_square(terms: &[(f64, f64)], lambda: f64, big_lambda: f64, points: usize, lmax: f64) -> Result<f64> {
    let n = points.max(3) | 1;
    let h = big_lambda / (n - 1) as f64;
    let limit = std::f64::consts::PI / (2.0 * lmax);
    if h > limit {
        return Err(Error::UnderResolved { step: h, limit });
    }
    // cos(μ f) by rotation, restarted every 512 steps
    let mut vals = vec![0.0; n];
    let mut c = vec![0.0; terms.len()];
    let mut s = vec![0.0; terms.len()];
    let rot: Vec<(f64, f64)> = terms.iter().map(|(f, _)| ((h * f).cos(), (h * f).sin())).collect();
    for (i, v) in vals.iter_mut().enumerate() {
        if i % 512 == 0 {
            let mu = lambda + i as f64 * h;
            for (j, (f, _)) in terms.iter().enumerate() {
                c[j] = (mu * f).cos();
                s[j] = (mu * f).sin();
            }
        }
        let mut acc = 0.0;
        for j in 0..terms.len() {
            acc += terms[j].1 * c[j];
            let (rc, rs) = rot[j];
            let cn = c[j] * rc - s[j] * rs;
            s[j] = s[j] * rc + c[j] * rs;
            c[j] = cn;
        }
        *v = acc * acc;
    }
    let sum = kahan_sum(vals.iter().enumerate().map(|(i, v)| {
        let w = if i == 0 || i == n - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        w * v
    }));
    Ok(sum * h / 3.0 / big_lambda)
}

/// Fraction of draws whose energy-averaged Ñ_∞² misses the ensemble constant by more than ε.
pub fn ergodicity_experiment(
    s: &PoissonSurrogate,
    big_lambda: f64,
    points: Option<usize>,
    draws: usize,
    epsilon: f64,
    target: f64,
) -> Result<ErgodicityReport> {
    let need = ergodicity_min_epsilon(s.l, big_lambda);
    if epsilon < need * (1.0 - 1e-12) {
        return Err(Error::InvalidParameters(format!("epsilon {epsilon} below the tolerance regime {need}")));
    }
    if draws < 2 {
        return Err(Error::InvalidParameters("need at least 2 draws".into()));
    }
    let points = points.unwrap_or_else(|| default_points(big_lambda, s.l));
    let devs: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let terms = s.energy_terms(&s.draw_z(i));
            energy_mean_square(&terms, s.lambda, big_lambda, points, s.l).map(|v| (v - target).abs())
        })
        .collect::<Result<_>>()?;
    let n = draws as f64;
    let frac = devs.iter().filter(|d| **d > epsilon).count() as f64 / n;
    let mad = moments(&devs).mean;
    Ok(ErgodicityReport {
        lambda: s.lambda,
        big_lambda,
        l: s.l,
        epsilon,
        target,
        draws,
        points,
        violation_fraction: Estimate::new(frac, (frac * (1.0 - frac) / n).sqrt()),
        mean_abs_deviation: mad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{build_spectrum, FuchsianGroup};

    fn surrogate(l: f64, lambda: f64) -> PoissonSurrogate {
        let g = FuchsianGroup::schottky_pants(2.0, 2.0, 2.0).unwrap();
        let spec = build_spectrum(&g, l, true).unwrap();
        PoissonSurrogate::new(&spec, &Character::Trivial, &Window::triangle(), lambda, l, 11).unwrap()
    }

    #[test]
    fn inversion_mean() {
        let mut rng = stream(1, 999, 0);
        let n = 200_000;
        let mean = (0..n).map(|_| poisson_inversion(0.5, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * (0.5f64 / n as f64).sqrt());
    }

    #[test]
    fn kappa2_identity_and_energy_terms() {
        let s = surrogate(9.0, 321.0);
        let c = exact_cumulants(&s, 4).unwrap();
        assert!(c.kappa2_identity, "rel err {}", c.kappa2_rel_err);
        let z = s.draw_z(3);
        let terms = s.energy_terms(&z);
        let direct = s.n_tilde_from(&z, 400.5);
        let via: f64 = terms.iter().map(|(f, w)| w * (400.5 * f).cos()).sum();
        assert!((direct - via).abs() < 1e-10);
    }

    #[test]
    fn large_epsilon_never_violates() {
        let s = surrogate(6.0, 100.0);
        let r = ergodicity_experiment(&s, 10.0, None, 20, 1e6, 1.0 / 3.0).unwrap();
        assert_eq!(r.violation_fraction.value, 0.0);
    }
}
