//! Random degree-n covers of free-group presets: uniform permutation
//! representations, fixed-point and cycle statistics, and the empirical
//! ensemble variance of the smoothed counting function.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characters::Character;
use crate::error::{Error, Result};
use crate::fuchsian::LengthSpectrum;
use crate::rng::{stream, tags};
use crate::stats::{kahan_sum, Estimate};
use crate::trace_stats::{divisor_count, gcd_weight, CoefficientTable};
use crate::windows::Window;
use crate::words::{GroupPreset, Word};

pub const COVER_NOTE: &str = "random covers sampled on a free-group preset (uniform Hom(F_r, S_n))";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationRep {
    pub n: usize,
    /// images[g][x] is x·φ(g), 0-based.
    pub images: Vec<Vec<u32>>,
    pub inverses: Vec<Vec<u32>>,
    pub seed: u64,
    pub sample: u64,
}

fn invert(p: &[u32]) -> Vec<u32> {
    let mut q = vec![0u32; p.len()];
    for (i, &x) in p.iter().enumerate() {
        q[x as usize] = i as u32;
    }
    q
}

impl PermutationRep {
    pub fn from_images(images: Vec<Vec<u32>>) -> Result<Self> {
        let n = images.first().map_or(0, |p| p.len());
        for p in &images {
            let mut seen = vec![false; n];
            if p.len() != n || p.iter().any(|&x| (x as usize) >= n || std::mem::replace(&mut seen[x as usize], true)) {
                return Err(Error::InvalidParameters("image is not a permutation".into()));
            }
        }
        let inverses = images.iter().map(|p| invert(p)).collect();
        Ok(PermutationRep { n, images, inverses, seed: 0, sample: 0 })
    }
}

fn cover_stream(seed: u64, sample: u64, gen: usize) -> rand_chacha::ChaCha8Rng {
    stream(seed, tags::COVER, (sample << 8) | gen as u64)
}

/// Uniform element of Hom(F_r, S_n); generator g of sample s uses its own stream.
pub fn sample_rep(rank: usize, n: usize, seed: u64, sample: u64) -> Result<PermutationRep> {
    if n == 0 || rank == 0 || rank > 255 {
        return Err(Error::InvalidParameters("need n >= 1 and 1 <= rank <= 255".into()));
    }
    let images: Vec<Vec<u32>> = (0..rank)
        .map(|g| {
            let mut p: Vec<u32> = (0..n as u32).collect();
            p.shuffle(&mut cover_stream(seed, sample, g));
            p
        })
        .collect();
    let inverses = images.iter().map(|p| invert(p)).collect();
    Ok(PermutationRep { n, images, inverses, seed, sample })
}

/// Image of a word, composed left to right.
pub fn eval_perm(rep: &PermutationRep, w: &Word) -> Vec<u32> {
    let mut p: Vec<u32> = (0..rep.n as u32).collect();
    for &x in &w.0 {
        let g = if x > 0 { &rep.images[x as usize - 1] } else { &rep.inverses[(-x) as usize - 1] };
        for v in p.iter_mut() {
            *v = g[*v as usize];
        }
    }
    p
}

pub fn perm_fixed_points(p: &[u32]) -> usize {
    p.iter().enumerate().filter(|(i, &x)| *i == x as usize).count()
}

/// counts[d−1] = number of d-cycles, d ≤ dmax.
pub fn perm_cycle_counts(p: &[u32], dmax: usize) -> Vec<usize> {
    let mut counts = vec![0; dmax];
    let mut seen = vec![false; p.len()];
    for s in 0..p.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            x = p[x] as usize;
            len += 1;
        }
        if len <= dmax {
            counts[len - 1] += 1;
        }
    }
    counts
}

pub fn fixed_points(rep: &PermutationRep, w: &Word) -> usize {
    perm_fixed_points(&eval_perm(rep, w))
}

pub fn cycle_counts(rep: &PermutationRep, w: &Word, dmax: usize) -> Vec<usize> {
    perm_cycle_counts(&eval_perm(rep, w), dmax)
}

/// F(γ^k) for k = 1..=kmax from the cycle type of φ(γ).
pub fn power_fixed_points(counts: &[usize], kmax: usize) -> Vec<usize> {
    (1..=kmax).map(|k| (1..=k).filter(|d| k % d == 0).map(|d| d * counts[d - 1]).sum()).collect()
}

fn require_free(preset: &GroupPreset) -> Result<()> {
    if preset.is_surface() {
        return Err(Error::InvalidParameters(
            "random covers are sampled on free-group presets only (no exact sampler for surface groups)".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub estimate: Estimate,
    pub target: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: String, estimate: Estimate, target: f64) -> Self {
        let pass = estimate.within(target, 3.0);
        Check { name, estimate, target, pass }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverStatistics {
    pub note: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub classes: Vec<String>,
    pub kmax: usize,
    /// f[class][k−1][sample] = F_n(γ^k)
    #[serde(skip)]
    pub f: Vec<Vec<Vec<f64>>>,
    /// Samples on which F(γ^k) = Σ_{d|k} d·C(γ,d) failed (always 0).
    pub identity_failures: usize,
    pub checks: Vec<Check>,
}

fn mean_se(x: &[f64]) -> Estimate {
    let n = x.len() as f64;
    let m = kahan_sum(x.iter().copied()) / n;
    let v = kahan_sum(x.iter().map(|y| (y - m).powi(2))) / (n - 1.0);
    Estimate::new(m, (v / n).sqrt())
}

/// Sample covariance with a standard error from the spread of the centered products.
pub fn covariance(x: &[f64], y: &[f64]) -> Estimate {
    let mx = mean_se(x).value;
    let my = mean_se(y).value;
    let prod: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let n = x.len() as f64;
    let e = mean_se(&prod);
    Estimate::new(e.value * n / (n - 1.0), e.se)
}

/// Fixed-point moments for the given primitive classes.
pub fn moment_experiment(
    preset: &GroupPreset,
    classes: &[Word],
    kmax: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<CoverStatistics> {
    require_free(preset)?;
    if classes.is_empty() || kmax == 0 || samples < 2 {
        return Err(Error::InvalidParameters("need classes, kmax >= 1 and samples >= 2".into()));
    }
    let rows: Vec<(Vec<Vec<usize>>, usize)> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let rep = sample_rep(preset.ngens, n, seed, s).expect("validated");
            let mut bad = 0;
            let per: Vec<Vec<usize>> = classes
                .iter()
                .map(|w| {
                    let p = eval_perm(&rep, w);
                    let f = power_fixed_points(&perm_cycle_counts(&p, kmax), kmax);
                    // direct check on the explicit power
                    for k in 1..=kmax {
                        let mut q: Vec<u32> = (0..n as u32).collect();
                        for _ in 0..k {
                            for v in q.iter_mut() {
                                *v = p[*v as usize];
                            }
                        }
                        if perm_fixed_points(&q) != f[k - 1] {
                            bad += 1;
                        }
                    }
                    f
                })
                .collect();
            (per, bad)
        })
        .collect();
    let identity_failures = rows.iter().map(|r| r.1).sum();
    assert_eq!(identity_failures, 0, "fixed-point/cycle identity violated");
    let f: Vec<Vec<Vec<f64>>> = (0..classes.len())
        .map(|c| (0..kmax).map(|k| rows.iter().map(|r| r.0[c][k] as f64).collect()).collect())
        .collect();
    let names: Vec<String> = classes.iter().map(|w| preset.format_word(w)).collect();
    let mut checks = Vec::new();
    for (c, name) in names.iter().enumerate() {
        for k in 1..=kmax {
            checks.push(Check::new(format!("mean F({name}^{k})"), mean_se(&f[c][k - 1]), divisor_count(k) as f64));
        }
        for k1 in 1..=kmax {
            for k2 in k1..=kmax {
                checks.push(Check::new(
                    format!("cov F({name}^{k1}) F({name}^{k2})"),
                    covariance(&f[c][k1 - 1], &f[c][k2 - 1]),
                    gcd_weight(k1, k2) as f64,
                ));
            }
        }
    }
    for (i, j) in (0..classes.len()).tuple_combinations() {
        checks.push(Check::new(
            format!("cov F({}) F({})", names[i], names[j]),
            covariance(&f[i][0], &f[j][0]),
            0.0,
        ));
    }
    Ok(CoverStatistics {
        note: COVER_NOTE.into(),
        n,
        samples,
        seed,
        classes: names,
        kmax,
        f,
        identity_failures,
        checks,
    })
}

/// Exact E[F_n(γ^k)], k = 1..=kmax, over all of Hom(F_r, S_n) (n ≤ 4, r ≤ 3).
pub fn exhaustive_mean_fixed_points(preset: &GroupPreset, w: &Word, n: usize, kmax: usize) -> Result<Vec<f64>> {
    require_free(preset)?;
    if n == 0 || n > 4 || preset.ngens > 3 {
        return Err(Error::InvalidParameters("exhaustive enumeration needs n <= 4 and rank <= 3".into()));
    }
    let perms: Vec<Vec<u32>> = (0..n as u32).permutations(n).collect();
    let mut sums = vec![0usize; kmax];
    let mut count = 0usize;
    for images in std::iter::repeat(perms.iter()).take(preset.ngens).multi_cartesian_product() {
        let rep = PermutationRep::from_images(images.into_iter().cloned().collect())?;
        let f = power_fixed_points(&cycle_counts(&rep, w, kmax), kmax);
        for (s, v) in sums.iter_mut().zip(f) {
            *s += v;
        }
        count += 1;
    }
    Ok(sums.into_iter().map(|s| s as f64 / count as f64).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Centering {
    BatchMean,
    DivisorCount,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverVarianceReport {
    pub note: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub lambda: f64,
    pub l: f64,
    pub centering: Centering,
    pub variance: Estimate,
    pub sigma2_limit: f64,
    pub pass: bool,
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Empirical E[Ñ_n²] over sampled covers, with a bootstrap standard error.
#[allow(clippy::too_many_arguments)]
pub fn empirical_cover_variance(
    spec: &LengthSpectrum,
    chi: &Character,
    w: &Window,
    lambda: f64,
    l: f64,
    n: usize,
    samples: usize,
    seed: u64,
    centering: Centering,
) -> Result<CoverVarianceReport> {
    require_free(&spec.preset)?;
    if samples < 2 {
        return Err(Error::InvalidParameters("need at least 2 samples".into()));
    }
    let table = CoefficientTable::build(spec, chi, w, lambda, l)?;
    let sigma2_limit = table.sigma2();
    let p0: Vec<Word> = {
        let by_id: std::collections::HashMap<&str, &Word> =
            spec.p0().into_iter().map(|r| (r.class_id.as_str(), &r.word.canonical)).collect();
        table.classes.iter().map(|c| by_id[c.class_id.as_str()].clone()).collect()
    };
    let coeffs: Vec<Vec<(usize, f64)>> = table
        .classes
        .iter()
        .map(|c| c.terms.iter().map(|t| (t.k, t.amp * (lambda * t.freq).cos())).collect())
        .collect();
    let y: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let rep = sample_rep(spec.preset.ngens, n, seed, s).expect("validated");
            kahan_sum(p0.iter().zip(&coeffs).flat_map(|(word, cs)| {
                let kmax = cs.iter().map(|c| c.0).max().unwrap_or(1);
                let f = power_fixed_points(&cycle_counts(&rep, word, kmax), kmax);
                cs.iter()
                    .map(move |&(k, a)| {
                        let centre = match centering {
                            Centering::BatchMean => 0.0,
                            Centering::DivisorCount => divisor_count(k) as f64,
                        };
                        (f[k - 1] as f64 - centre) * a
                    })
                    .collect::<Vec<_>>()
            }))
        })
        .collect();
    let scale = 4.0 / (l * l);
    let stat = |v: &[f64]| -> f64 {
        let m = v.len() as f64;
        match centering {
            Centering::BatchMean => {
                let mean = kahan_sum(v.iter().copied()) / m;
                scale * kahan_sum(v.iter().map(|x| (x - mean).powi(2))) / (m - 1.0)
            }
            Centering::DivisorCount => scale * kahan_sum(v.iter().map(|x| x * x)) / m,
        }
    };
    let value = stat(&y);
    let boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, tags::BOOTSTRAP, b);
            let v: Vec<f64> = (0..y.len()).map(|_| y[rng.random_range(0..y.len())]).collect();
            stat(&v)
        })
        .collect();
    let bm = kahan_sum(boots.iter().copied()) / boots.len() as f64;
    let se = (kahan_sum(boots.iter().map(|b| (b - bm).powi(2))) / (boots.len() as f64 - 1.0)).sqrt();
    let variance = Estimate::new(value, se);
    Ok(CoverVarianceReport {
        note: COVER_NOTE.into(),
        n,
        samples,
        seed,
        lambda,
        l,
        centering,
        variance,
        sigma2_limit,
        pass: variance.within(sigma2_limit, 3.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_cycle_example() {
        let rep = PermutationRep::from_images(vec![vec![1, 2, 0], vec![0, 1, 2]]).unwrap();
        let a = Word(vec![1]);
        assert_eq!(fixed_points(&rep, &a), 0);
        assert_eq!(fixed_points(&rep, &a.pow(3)), 3);
        let c = cycle_counts(&rep, &a, 3);
        assert_eq!(c, vec![0, 0, 1]);
        assert_eq!(power_fixed_points(&c, 3)[2], 3);
        assert_eq!(fixed_points(&rep, &Word::empty()), 3);
    }

    #[test]
    fn degree_one_is_trivial() {
        let rep = sample_rep(2, 1, 5, 0).unwrap();
        assert_eq!(rep.images, vec![vec![0], vec![0]]);
    }

    #[test]
    fn word_order_composition() {
        let rep = sample_rep(2, 7, 3, 1).unwrap();
        let ab = eval_perm(&rep, &Word(vec![1, 2]));
        let a = eval_perm(&rep, &Word(vec![1]));
        let b = eval_perm(&rep, &Word(vec![2]));
        for x in 0..7 {
            assert_eq!(ab[x], b[a[x] as usize]);
        }
        let id = eval_perm(&rep, &Word(vec![1, 2, -2, -1]));
        assert!(id.iter().enumerate().all(|(i, &x)| i == x as usize));
    }

    #[test]
    fn exhaustive_small() {
        let f2 = GroupPreset::free(2);
        let e = exhaustive_mean_fixed_points(&f2, &Word(vec![1]), 3, 6).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 2.0).abs() < 1e-12);
        assert!((e[5] - 3.0).abs() < 1e-12);
    }
}
