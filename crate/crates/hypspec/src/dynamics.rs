//! Periodic-orbit sums: the equidistribution sum rule, cluster sums, the
//! orbit CLT for flux observables, the flux-variance estimator and the
//! GOE → GUE transition.

use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characters::{Character, FluxCharacter};
use crate::error::{Error, Result};
use crate::fuchsian::{GeodesicRecord, LengthSpectrum};
use crate::rng::{stream, tags};
use crate::stats::{kahan_sum, moments, Moments};
use crate::trace_stats::{default_points, energy_average, CoefficientTable};
use crate::windows::{integrate, Window};

/// exp(1 − 1/(1 − x²)) on (−1, 1).
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Smooth compactly supported test function with a support and a total mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFn {
    pub center: f64,
    pub radius: f64,
    pub mass: f64,
}

impl BumpFn {
    /// Unit-mass bump on [−1, 1], the default cluster weight ω.
    pub fn unit() -> Self {
        BumpFn { center: 0.0, radius: 1.0, mass: 1.0 }
    }

    /// Bump on (0, 1): vanishes at 0, so the sum rule remainder is O(L^{−2}).
    pub fn sum_rule_default() -> Self {
        BumpFn { center: 0.5, radius: 0.5, mass: 1.0 }
    }

    fn norm(&self) -> f64 {
        self.radius * integrate(bump, -1.0, 1.0, 1e-13)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.mass / self.norm() * bump((x - self.center) / self.radius)
    }

    pub fn integral(&self) -> f64 {
        self.mass
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }

    /// Precomputed evaluator (avoids re-integrating the normalization).
    pub fn evaluator(&self) -> impl Fn(f64) -> f64 + Sync + '_ {
        let c = self.mass / self.norm();
        move |x| c * bump((x - self.center) / self.radius)
    }
}

/// ℓ♯/|I − P_γ| with |I − P| from its stored logarithm.
fn weight(r: &GeodesicRecord) -> f64 {
    r.ell_sharp * (-r.log_det_iminus_p).exp()
}

/// Every oriented closed geodesic as (record, multiplicity): unoriented
/// spectra stand for both orientations.
fn oriented(spec: &LengthSpectrum) -> impl Iterator<Item = (&GeodesicRecord, f64)> {
    let m = if spec.oriented { 1.0 } else { 2.0 };
    spec.records.iter().map(move |r| (r, m))
}

/// Real part of χ summed over the orientations a record stands for.
fn char_weight(spec: &LengthSpectrum, chi: &Character, r: &GeodesicRecord) -> f64 {
    let prim = crate::words::Word(r.word.canonical.0.clone());
    let c = match chi {
        Character::Matrix(m) => m.char_trace(&prim),
        _ => chi.eval_power(&prim, &r.homology, 1),
    };
    if spec.oriented {
        c.re
    } else {
        2.0 * c.re
    }
}

pub fn d_trivial(chi: &Character) -> Result<usize> {
    chi.trivial_multiplicity()
        .ok_or_else(|| Error::InvalidParameters("invariant dimension is only known for Abelian characters".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumRuleReport {
    pub l: f64,
    pub value: f64,
    pub target: f64,
    pub gap: f64,
    pub warning: Option<String>,
}

/// (1/L) Σ_{γ∈G} χ(γ) ℓ♯ φ(ℓ/L)/|I − P_γ| against d_trivial·∫φ.
pub fn sum_rule_check(spec: &LengthSpectrum, phi: &BumpFn, l: f64, chi: &Character) -> Result<SumRuleReport> {
    let warning = if spec.preset_name.contains("punctured") {
        Some(Error::NonCompactPreset(spec.preset_name.clone()).to_string())
    } else {
        None
    };
    let (lo, hi) = phi.support();
    if lo < 0.0 {
        return Err(Error::InvalidParameters("phi must be supported in [0, inf)".into()));
    }
    spec.require(l * hi)?;
    let f = phi.evaluator();
    let value = kahan_sum(spec.records.iter().map(|r| char_weight(spec, chi, r) * weight(r) * f(r.ell / l))) / l;
    let target = d_trivial(chi)? as f64 * phi.integral();
    Ok(SumRuleReport { l, value, target, gap: (value - target).abs(), warning })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub t: f64,
    pub value: f64,
    pub integral: f64,
    /// Σ over T−1 ≤ ℓ ≤ T+1 of ℓ♯/|I − P|
    pub unit_window: f64,
}

pub fn cluster_sum(spec: &LengthSpectrum, omega: &BumpFn, t: f64) -> Result<ClusterReport> {
    let (_, hi) = omega.support();
    spec.require(t + hi.max(1.0))?;
    let f = omega.evaluator();
    let value = kahan_sum(oriented(spec).map(|(r, m)| m * weight(r) * f(r.ell - t)));
    let unit_window =
        kahan_sum(oriented(spec).filter(|(r, _)| (r.ell - t).abs() <= 1.0).map(|(r, m)| m * weight(r)));
    Ok(ClusterReport { t, value, integral: omega.integral(), unit_window })
}

fn require_oriented(spec: &LengthSpectrum) -> Result<()> {
    if !spec.oriented {
        return Err(Error::InvalidParameters("flux observables need an oriented spectrum".into()));
    }
    Ok(())
}

fn pairing(flux: &[f64], h: &[i64]) -> f64 {
    flux.iter().zip(h).map(|(f, &x)| f * x as f64).sum()
}

#[derive(Clone, Debug)]
pub struct OrbitEnsemble<'a> {
    pub t: f64,
    pub omega: BumpFn,
    pub members: Vec<&'a GeodesicRecord>,
    /// Normalized P_T(γ).
    pub weights: Vec<f64>,
}

impl<'a> OrbitEnsemble<'a> {
    pub fn new(spec: &'a LengthSpectrum, omega: BumpFn, t: f64) -> Result<Self> {
        require_oriented(spec)?;
        let (lo, hi) = omega.support();
        spec.require(t + hi)?;
        let f = omega.evaluator();
        let mut members = Vec::new();
        let mut raw = Vec::new();
        for r in spec.records.iter().filter(|r| r.ell > t + lo && r.ell < t + hi) {
            let w = weight(r) * f(r.ell - t);
            if w > 0.0 {
                members.push(r);
                raw.push(w);
            }
        }
        if members.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let total = kahan_sum(raw.iter().copied());
        Ok(OrbitEnsemble { t, omega, members, weights: raw.into_iter().map(|w| w / total).collect() })
    }

    pub fn observable(&self, flux: &[f64], i: usize) -> f64 {
        pairing(flux, &self.members[i].homology) / self.t.sqrt()
    }

    /// Exact mean and variance of X_T under P_T.
    pub fn exact_moments(&self, flux: &[f64]) -> (f64, f64) {
        let m = kahan_sum(self.weights.iter().enumerate().map(|(i, w)| w * self.observable(flux, i)));
        let v = kahan_sum(self.weights.iter().enumerate().map(|(i, w)| w * (self.observable(flux, i) - m).powi(2)));
        (m, v)
    }

    /// Indices drawn by the alias method, 4096 draws per random stream.
    pub fn sample_indices(&self, draws: usize, seed: u64) -> Result<Vec<usize>> {
        let alias =
            WeightedAliasIndex::new(self.weights.clone()).map_err(|e| Error::InvalidParameters(e.to_string()))?;
        const CHUNK: usize = 4096;
        let out: Vec<Vec<usize>> = (0..draws.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = stream(seed, tags::ORBIT, c as u64);
                let n = CHUNK.min(draws - c * CHUNK);
                (0..n).map(|_| alias.sample(&mut rng)).collect()
            })
            .collect();
        Ok(out.concat())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub t: f64,
    pub epsilon: f64,
    pub value: f64,
    /// Spread of the summands, as a standard error.
    pub se: f64,
    pub terms: usize,
}

/// ε^{−1} Σ_{ℓ∈[T,T+ε]} (ℓ♯/|I − P|)·(⟨Φ,h⟩/√T)²
pub fn variance_estimator(spec: &LengthSpectrum, flux: &[f64], t: f64, epsilon: f64) -> Result<VarianceEstimate> {
    require_oriented(spec)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) || !(t > 0.0) {
        return Err(Error::InvalidParameters("need T > 0 and epsilon in (0, 1]".into()));
    }
    spec.require(t + epsilon)?;
    let items: Vec<(f64, f64)> = spec
        .records
        .iter()
        .filter(|r| r.ell >= t && r.ell <= t + epsilon)
        .map(|r| (weight(r), pairing(flux, &r.homology).powi(2) / t))
        .collect();
    let value = kahan_sum(items.iter().map(|(w, x)| w * x)) / epsilon;
    let wsum = kahan_sum(items.iter().map(|(w, _)| *w));
    let se = if wsum > 0.0 {
        let mean = kahan_sum(items.iter().map(|(w, x)| w * x)) / wsum;
        let var = kahan_sum(items.iter().map(|(w, x)| (w / wsum).powi(2) * (x - mean).powi(2)));
        var.sqrt() * wsum / epsilon
    } else {
        0.0
    };
    Ok(VarianceEstimate { t, epsilon, value, se, terms: items.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitCltReport {
    pub t: f64,
    pub draws: usize,
    pub members: usize,
    pub moments: Moments,
    pub ensemble_mean: f64,
    pub ensemble_variance: f64,
    pub estimator: VarianceEstimate,
    /// |sample variance − estimator| ≤ 3·sqrt(se₁² + se₂²)
    pub variance_match: bool,
}

pub fn orbit_clt_experiment(
    spec: &LengthSpectrum,
    flux: &[f64],
    t: f64,
    draws: usize,
    seed: u64,
) -> Result<OrbitCltReport> {
    let ens = OrbitEnsemble::new(spec, BumpFn::unit(), t)?;
    let idx = ens.sample_indices(draws, seed)?;
    let xs: Vec<f64> = idx.iter().map(|&i| ens.observable(flux, i)).collect();
    let m = moments(&xs);
    let (em, ev) = ens.exact_moments(flux);
    let est = variance_estimator(spec, flux, t, 1.0)?;
    let joint = (m.variance.se.powi(2) + est.se.powi(2)).sqrt();
    let variance_match = (m.variance.value - est.value).abs() <= 3.0 * joint;
    Ok(OrbitCltReport {
        t,
        draws,
        members: ens.members.len(),
        moments: m,
        ensemble_mean: em,
        ensemble_variance: ev,
        estimator: est,
        variance_match,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionCurve {
    pub variance: f64,
    pub s: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// 2·Var·s²
    pub damping: Vec<f64>,
}

/// Σ²(s) = 2∫₀^∞ (1 + e^{−2·Var·s²·t}) t ψ̂²(t) dt
pub fn transition_curve(w: &Window, variance: f64, s_grid: &[f64]) -> Result<TransitionCurve> {
    if !(variance >= 0.0) {
        return Err(Error::InvalidParameters("variance must be >= 0".into()));
    }
    let sigma2 = s_grid
        .iter()
        .map(|&s| {
            let rate = 2.0 * variance * s * s;
            2.0 * integrate(|t| (1.0 + (-rate * t).exp()) * t * w.psi_hat(t).powi(2), 0.0, 1.0, w.tol)
        })
        .collect();
    Ok(TransitionCurve {
        variance,
        s: s_grid.to_vec(),
        sigma2,
        damping: s_grid.iter().map(|s| 2.0 * variance * s * s).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionPoint {
    pub s: f64,
    pub alpha: f64,
    /// Curve prediction with the estimated variance.
    pub sigma2_pred: f64,
    /// Σ²_GUE + (2/L²) Σ_{γ∈P} ρ_α(γ)² ℓ♯ℓψ̂²(ℓ/L)/|I − P|
    pub sigma2_emp: f64,
    /// (1/δ)∫_λ^{λ+δ} Σ²(μ, L) with the flux character ρ_α.
    pub sigma2_avg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionComparison {
    pub l: f64,
    pub lambda: f64,
    pub delta: f64,
    pub variance: VarianceEstimate,
    pub goe: f64,
    pub gue: f64,
    pub points: Vec<TransitionPoint>,
}

#[allow(clippy::too_many_arguments)]
pub fn empirical_transition(
    spec: &LengthSpectrum,
    flux: &[f64],
    s_grid: &[f64],
    w: &Window,
    lambda: f64,
    l: f64,
    delta: f64,
    variance: VarianceEstimate,
) -> Result<TransitionComparison> {
    require_oriented(spec)?;
    spec.require(l)?;
    let curve = transition_curve(w, variance.value.max(0.0), s_grid)?;
    let gue = w.sigma2_gue();
    let prims: Vec<&GeodesicRecord> = spec.primitives().filter(|r| r.ell < l).collect();
    let points = s_grid
        .iter()
        .zip(&curve.sigma2)
        .map(|(&s, &pred)| {
            let alpha = s / l.sqrt();
            let sum = kahan_sum(prims.iter().map(|r| {
                let phase = 2.0 * alpha * pairing(flux, &r.homology);
                phase.cos() * r.ell_sharp * r.ell * w.psi_hat(r.ell / l).powi(2) * (-r.log_det_iminus_p).exp()
            }));
            let chi = Character::Flux(FluxCharacter::new(flux.to_vec(), alpha));
            let table = CoefficientTable::build(spec, &chi, w, lambda, l)?;
            let avg = energy_average(|m| table.sigma2_at(m), lambda, delta, default_points(delta, l), l)?;
            Ok(TransitionPoint { s, alpha, sigma2_pred: pred, sigma2_emp: gue + 2.0 / (l * l) * sum, sigma2_avg: avg })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionComparison { l, lambda, delta, variance, goe: w.sigma2_goe(), gue, points })
}

pub fn default_s_grid() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0, 4.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_mass() {
        let b = BumpFn::unit();
        assert!((integrate(b.evaluator(), -1.0, 1.0, 1e-12) - 1.0).abs() < 1e-10);
        let s = BumpFn::sum_rule_default();
        assert!((integrate(s.evaluator(), 0.0, 1.0, 1e-12) - 1.0).abs() < 1e-10);
        assert_eq!(s.eval(0.0), 0.0);
    }

    #[test]
    fn transition_endpoints() {
        let w = Window::triangle();
        let c = transition_curve(&w, 0.7, &[0.0, 1.0, 1e4]).unwrap();
        assert!((c.sigma2[0] - w.sigma2_goe()).abs() < 1e-10);
        assert!((c.sigma2[2] - w.sigma2_gue()).abs() < 1e-6);
        assert!(c.sigma2[1] < c.sigma2[0] && c.sigma2[1] > c.sigma2[2]);
        let flat = transition_curve(&w, 0.0, &[0.0, 3.0]).unwrap();
        assert!((flat.sigma2[1] - w.sigma2_goe()).abs() < 1e-12);
    }
}
