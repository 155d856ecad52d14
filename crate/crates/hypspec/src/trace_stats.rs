//! Trace-formula coefficients A(γ,k), the limiting ensemble variance Σ²(λ,L)
//! and its averages over energy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characters::Character;
use crate::error::{Error, Result};
use crate::fuchsian::{GeodesicRecord, LengthSpectrum};
use crate::stats::kahan_sum;
use crate::windows::Window;

/// |I − P_{γ^k}|^{1/2} for primitive length ℓ♯.
pub fn sqrt_det(ell_sharp: f64, k: usize) -> f64 {
    2.0 * (k as f64 * ell_sharp / 2.0).sinh()
}

/// A(γ,k) for a primitive record.
pub fn coeff_a(rec: &GeodesicRecord, k: usize, chi: &Character, w: &Window, lambda: f64, l: f64) -> f64 {
    debug_assert!(rec.k == 1);
    let f = k as f64 * rec.ell_sharp;
    let psi = w.psi_hat(f / l);
    if psi == 0.0 {
        return 0.0;
    }
    let c = chi.eval_power(&rec.word.canonical, &rec.homology, k);
    2.0 * c.re * (lambda * f).cos() * psi * rec.ell_sharp / sqrt_det(rec.ell_sharp, k)
}

pub fn divisor_count(k: usize) -> usize {
    assert!(k >= 1);
    (1..=k).filter(|d| k % d == 0).count()
}

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// V(k₁,k₂) = Σ_{d | gcd(k₁,k₂)} d
pub fn gcd_weight(k1: usize, k2: usize) -> usize {
    let g = gcd(k1, k2);
    (1..=g).filter(|d| g % d == 0).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub k: usize,
    /// k·ℓ♯
    pub freq: f64,
    /// A(γ,k) without the cos(λ k ℓ♯) factor.
    pub amp: f64,
    /// Record-wise bound on |A(γ,k)|.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCoeffs {
    pub class_id: String,
    pub ell_sharp: f64,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub lambda: f64,
    pub l: f64,
    pub window: String,
    pub character: String,
    pub kmax: usize,
    pub classes: Vec<ClassCoeffs>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub lambda: f64,
    pub l: f64,
    pub sigma2: f64,
    pub smooth_part: f64,
    pub osc_part: f64,
    pub nonprimitive_tail: f64,
    pub classes: usize,
    pub kmax: usize,
    pub spectrum_lmax: f64,
}

impl CoefficientTable {
    pub fn build(spec: &LengthSpectrum, chi: &Character, w: &Window, lambda: f64, l: f64) -> Result<Self> {
        if !(l > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameters(format!("need L > 0 and finite lambda (L = {l})")));
        }
        spec.require(l)?;
        let p0 = spec.p0();
        let n = chi.dim() as f64;
        let classes: Vec<ClassCoeffs> = p0
            .par_iter()
            .filter(|r| r.ell_sharp < l)
            .map(|r| {
                let kmax = (l / r.ell_sharp).floor() as usize;
                let terms = (1..=kmax)
                    .map(|k| {
                        let freq = k as f64 * r.ell_sharp;
                        let sd = sqrt_det(r.ell_sharp, k);
                        Term {
                            k,
                            freq,
                            amp: coeff_a(r, k, chi, w, 0.0, l),
                            bound: 2.0 * n * r.ell_sharp * w.max_abs() / sd,
                        }
                    })
                    .filter(|t| t.amp != 0.0 || t.k == 1)
                    .collect();
                ClassCoeffs { class_id: r.class_id.clone(), ell_sharp: r.ell_sharp, terms }
            })
            .collect();
        let kmax = classes.iter().flat_map(|c| c.terms.iter().map(|t| t.k)).max().unwrap_or(0);
        Ok(CoefficientTable {
            lambda,
            l,
            window: w.name().to_string(),
            character: chi.label(),
            kmax,
            classes,
        })
    }

    pub fn coeff(&self, class: usize, k: usize, mu: f64) -> f64 {
        self.classes[class]
            .terms
            .iter()
            .find(|t| t.k == k)
            .map_or(0.0, |t| t.amp * (mu * t.freq).cos())
    }

    fn class_sigma2(c: &ClassCoeffs, mu: f64) -> f64 {
        let a: Vec<(usize, f64)> = c.terms.iter().map(|t| (t.k, t.amp * (mu * t.freq).cos())).collect();
        let mut s = 0.0;
        for &(k1, a1) in &a {
            for &(k2, a2) in &a {
                s += gcd_weight(k1, k2) as f64 * a1 * a2;
            }
        }
        s
    }

    /// Σ²(μ, L) by the full double sum over k₁, k₂.
    pub fn sigma2_at(&self, mu: f64) -> f64 {
        4.0 / (self.l * self.l) * kahan_sum(self.classes.iter().map(|c| Self::class_sigma2(c, mu)))
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2_at(self.lambda)
    }

    /// Σ̄², independent of λ.
    pub fn smooth_part(&self) -> f64 {
        2.0 / (self.l * self.l)
            * kahan_sum(self.classes.iter().map(|c| {
                let a = c.terms[0].amp;
                a * a
            }))
    }

    pub fn osc_part_at(&self, mu: f64) -> f64 {
        2.0 / (self.l * self.l)
            * kahan_sum(self.classes.iter().map(|c| {
                let t = &c.terms[0];
                t.amp * t.amp * (2.0 * mu * t.freq).cos()
            }))
    }

    pub fn report_at(&self, mu: f64, spectrum_lmax: f64) -> VarianceReport {
        let sigma2 = self.sigma2_at(mu);
        let smooth = self.smooth_part();
        let osc = self.osc_part_at(mu);
        VarianceReport {
            lambda: mu,
            l: self.l,
            sigma2,
            smooth_part: smooth,
            osc_part: osc,
            nonprimitive_tail: sigma2 - smooth - osc,
            classes: self.classes.len(),
            kmax: self.kmax,
            spectrum_lmax,
        }
    }

    /// Upper bound on |tail| from the record-wise coefficient bounds.
    pub fn tail_bound(&self) -> f64 {
        4.0 / (self.l * self.l)
            * kahan_sum(self.classes.iter().map(|c| {
                let mut s = 0.0;
                for t1 in &c.terms {
                    for t2 in &c.terms {
                        if t1.k + t2.k >= 3 {
                            s += gcd_weight(t1.k, t2.k) as f64 * t1.bound * t2.bound;
                        }
                    }
                }
                s
            }))
    }

    /// Fastest oscillation scale in μ: cos(2μ·maxfreq) appears in Σ².
    pub fn max_freq(&self) -> f64 {
        self.classes
            .iter()
            .flat_map(|c| c.terms.iter().map(|t| t.freq))
            .fold(0.0, f64::max)
    }
}

pub fn sigma2_limit(spec: &LengthSpectrum, chi: &Character, w: &Window, lambda: f64, l: f64) -> Result<VarianceReport> {
    let t = CoefficientTable::build(spec, chi, w, lambda, l)?;
    Ok(t.report_at(lambda, spec.lmax))
}

/// Quadrature step resolving cos(2μ·lmax) with 32 points per period.
pub fn default_step(lmax: f64) -> f64 {
    std::f64::consts::PI / (32.0 * lmax)
}

/// Number of Simpson nodes (odd) giving a step no larger than `default_step`.
pub fn default_points(width: f64, lmax: f64) -> usize {
    let n = (width / default_step(lmax)).ceil() as usize;
    let n = n.max(2);
    n + (n % 2) + 1
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: usize, lmax: f64) -> Result<f64> {
    if points < 3 {
        return Err(Error::InvalidParameters("quadrature needs at least 3 points".into()));
    }
    let n = if (points - 1) % 2 == 0 { points - 1 } else { points };
    let h = (b - a) / n as f64;
    let limit = std::f64::consts::PI / (2.0 * lmax);
    if h > limit {
        return Err(Error::UnderResolved { step: h, limit });
    }
    let s = kahan_sum((0..=n).map(|i| {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        w * f(a + i as f64 * h)
    }));
    Ok(s * h / 3.0)
}

/// (1/δ)∫_λ^{λ+δ} f(μ) dμ
pub fn energy_average<F: Fn(f64) -> f64>(f: F, lambda: f64, delta: f64, points: usize, lmax: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameters("delta must be positive".into()));
    }
    Ok(simpson(f, lambda, lambda + delta, points, lmax)? / delta)
}

/// (1/Λ)∫_λ^{λ+Λ} |f(μ) − target|² dμ
pub fn quadratic_average<F: Fn(f64) -> f64>(
    f: F,
    lambda: f64,
    big_lambda: f64,
    target: f64,
    points: usize,
    lmax: f64,
) -> Result<f64> {
    if !(big_lambda > 0.0) {
        return Err(Error::InvalidParameters("Lambda must be positive".into()));
    }
    Ok(simpson(|m| (f(m) - target).powi(2), lambda, lambda + big_lambda, points, lmax)? / big_lambda)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    /// |e^{iλr} − 1| ≤ 1/Y
    Plus,
    /// |cos(λr)| ≤ 1/Y
    Dual,
}

pub fn distinct_lengths(lengths: &[f64], rel: f64) -> Vec<f64> {
    let mut v: Vec<f64> = lengths.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= rel * b.abs());
    v
}

pub fn lambda_satisfies(lambda: f64, lengths: &[f64], y: f64, mode: SearchMode) -> bool {
    lengths.iter().all(|&r| match mode {
        SearchMode::Plus => 2.0 * (lambda * r / 2.0).sin().abs() <= 1.0 / y,
        SearchMode::Dual => (lambda * r).cos().abs() <= 1.0 / y,
    })
}

/// Grid search on [M, min(λmax, M·Y^N)] with step 1/(Y·max r), half the
/// width of the narrowest acceptance window, so no window is stepped over.
pub fn dirichlet_lambda_search(lengths: &[f64], y: f64, m: f64, lambda_max: f64, mode: SearchMode) -> Result<f64> {
    if !(y > 1.0) || lengths.is_empty() || lengths.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameters("need Y > 1 and positive lengths".into()));
    }
    let r = distinct_lengths(lengths, 1e-12);
    let rmax = *r.last().unwrap();
    let step = 1.0 / (y * rmax);
    let upper = lambda_max.min(m * y.powi(r.len() as i32));
    let n = ((upper - m) / step).floor().max(0.0) as u64;
    for i in 0..=n {
        let lam = m + i as f64 * step;
        if lambda_satisfies(lam, &r, y, mode) {
            return Ok(lam);
        }
    }
    Err(Error::NotFound(upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::FluxCharacter;
    use crate::fuchsian::{build_spectrum, FuchsianGroup};

    fn schottky(l: f64) -> LengthSpectrum {
        let g = FuchsianGroup::schottky_pants(2.0, 2.0, 2.0).unwrap();
        build_spectrum(&g, l, true).unwrap()
    }

    #[test]
    fn divisors() {
        assert_eq!(divisor_count(1), 1);
        assert_eq!(divisor_count(6), 4);
        assert_eq!(gcd_weight(4, 6), 3);
        for k in 1..30 {
            let sigma: usize = (1..=k).filter(|d| k % d == 0).sum();
            assert_eq!(gcd_weight(k, k), sigma);
        }
    }

    #[test]
    fn coefficient_examples() {
        let s = schottky(6.0);
        let r = s.primitives().next().unwrap();
        let w = Window::triangle();
        let l = 6.0;
        let lam = 2.0 * std::f64::consts::PI * 37.0 / r.ell_sharp;
        let a = coeff_a(r, 1, &Character::Trivial, &w, lam, l);
        let expect = 2.0 * w.psi_hat(r.ell_sharp / l) * r.ell_sharp / (2.0 * (r.ell / 2.0).sinh());
        assert!((a - expect).abs() < 1e-9 * expect.abs());
        assert_eq!(coeff_a(r, 4, &Character::Trivial, &w, lam, l), 0.0);
        let mut flux = vec![0.0; s.preset.ngens];
        let j = r.homology.iter().position(|h| *h != 0).unwrap();
        flux[j] = std::f64::consts::PI / r.homology[j] as f64;
        let chi = Character::Flux(FluxCharacter::new(flux, 1.0));
        let b = coeff_a(r, 1, &chi, &w, lam, l);
        assert!((a + b).abs() < 1e-9 * a.abs());
    }

    #[test]
    fn empty_and_single_class() {
        let s = schottky(6.0);
        let mut empty = s.clone();
        empty.records.clear();
        let w = Window::triangle();
        let rep = sigma2_limit(&empty, &Character::Trivial, &w, 10.0, 6.0).unwrap();
        assert_eq!(rep.sigma2, 0.0);
        let mut one = s.truncated(6.0);
        let first = one.p0()[0].clone();
        one.records.retain(|r| r.class_id == first.class_id);
        let l = 6.0;
        let rep = sigma2_limit(&one, &Character::Trivial, &w, 100.0, l).unwrap();
        let a1 = coeff_a(&first, 1, &Character::Trivial, &w, 100.0, l);
        assert!((rep.sigma2 - rep.nonprimitive_tail - 4.0 / (l * l) * a1 * a1).abs() < 1e-12);
    }

    #[test]
    fn split_and_order_invariance() {
        let s = schottky(9.0);
        let w = Window::bump();
        let t = CoefficientTable::build(&s, &Character::Trivial, &w, 1234.5, 9.0).unwrap();
        let rep = t.report_at(1234.5, s.lmax);
        assert!(rep.osc_part.abs() <= rep.smooth_part);
        assert!(rep.nonprimitive_tail.abs() <= t.tail_bound());
        assert!((t.smooth_part() - CoefficientTable::build(&s, &Character::Trivial, &w, 7.0, 9.0).unwrap().smooth_part()).abs() < 1e-15);
        let mut rev = s.clone();
        rev.records.reverse();
        let r2 = sigma2_limit(&rev, &Character::Trivial, &w, 1234.5, 9.0).unwrap();
        assert!((r2.sigma2 - rep.sigma2).abs() <= 1e-9 * rep.sigma2.abs());
    }

    #[test]
    fn averages() {
        let c = energy_average(|_| 2.5, 10.0, 1.0, default_points(1.0, 5.0), 5.0).unwrap();
        assert!((c - 2.5).abs() < 1e-12);
        let l = 3.0;
        let d = 4.0;
        let v = energy_average(|m| (2.0 * m * l).cos(), 100.0, d, default_points(d, l), l).unwrap();
        assert!(v.abs() <= 1.0 / (d * l));
        assert!(matches!(energy_average(|m| m, 0.0, 1.0, 3, 50.0), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn dirichlet_examples() {
        let r = 1.7;
        let lam = dirichlet_lambda_search(&[r], 8.0, 50.0, 1e4, SearchMode::Plus).unwrap();
        assert!(lambda_satisfies(lam, &[r], 8.0, SearchMode::Plus));
        let lam = dirichlet_lambda_search(&[1.0, 1.5], 8.0, 10.0, 1e4, SearchMode::Plus).unwrap();
        assert!(lambda_satisfies(lam, &[1.0, 1.5], 8.0, SearchMode::Plus));
        assert!(matches!(
            dirichlet_lambda_search(&[1.0, 2.0_f64.sqrt()], 1e6, 10.0, 11.0, SearchMode::Plus),
            Err(Error::NotFound(_))
        ));
    }
}
