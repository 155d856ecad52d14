//! Python module `hypspec`.
//!
//! Characters are passed as an optional flux list plus `alpha`; `None` is the
//! trivial character. Heavy calls release the interpreter lock.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ::hypspec::characters::{haar_sigma_constant, Character, FluxCharacter, HaarGroup};
use ::hypspec::dynamics::{orbit_clt_experiment, sum_rule_check, transition_curve, variance_estimator, BumpFn};
use ::hypspec::fuchsian::{build_spectrum, read_spectrum_csv, write_spectrum_csv, FuchsianGroup, LengthSpectrum};
use ::hypspec::poisson_model::{clt_test, exact_cumulants, PoissonSurrogate};
use ::hypspec::rand_covers::{empirical_cover_variance, moment_experiment, Centering};
use ::hypspec::trace_stats::{default_points, energy_average, CoefficientTable};
use ::hypspec::windows::Window as CoreWindow;
use ::hypspec::words::{canonical_class, GroupPreset};

fn err(e: ::hypspec::Error) -> PyErr {
    match e {
        ::hypspec::Error::Io(m) => PyRuntimeError::new_err(m),
        ::hypspec::Error::NotFound(_) | ::hypspec::Error::IncompleteEnumeration { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn character(flux: Option<Vec<f64>>, alpha: f64, preset: &GroupPreset) -> PyResult<Character> {
    match flux {
        None => Ok(Character::Trivial),
        Some(f) if f.len() == preset.ngens => Ok(Character::Flux(FluxCharacter::new(f, alpha))),
        Some(f) => Err(PyValueError::new_err(format!("flux needs {} entries, got {}", preset.ngens, f.len()))),
    }
}

fn window(name: &str) -> PyResult<CoreWindow> {
    CoreWindow::parse(name).map_err(err)
}

/// Test window given by ψ̂ on [-1, 1].
#[pyclass(name = "Window", frozen)]
struct Window(CoreWindow);

#[pymethods]
impl Window {
    #[new]
    #[pyo3(signature = (kind = "bump"))]
    fn new(kind: &str) -> PyResult<Self> {
        Ok(Window(window(kind)?))
    }

    fn psi_hat(&self, t: f64) -> f64 {
        self.0.psi_hat(t)
    }

    fn sigma2_goe(&self) -> f64 {
        self.0.sigma2_goe()
    }

    fn sigma2_gue(&self) -> f64 {
        self.0.sigma2_gue()
    }

    fn sigma2_gse(&self) -> f64 {
        self.0.sigma2_gse()
    }

    fn __repr__(&self) -> String {
        format!("Window('{}')", self.0.name())
    }
}

/// Complete length spectrum of a preset up to `lmax`.
#[pyclass(name = "Spectrum", frozen)]
struct Spectrum(LengthSpectrum);

#[pymethods]
impl Spectrum {
    #[new]
    #[pyo3(signature = (preset, lmax, oriented = true))]
    fn new(py: Python<'_>, preset: &str, lmax: f64, oriented: bool) -> PyResult<Self> {
        let g = FuchsianGroup::preset(preset).map_err(err)?;
        py.detach(|| build_spectrum(&g, lmax, oriented)).map(Spectrum).map_err(err)
    }

    #[staticmethod]
    fn from_csv(path: &str) -> PyResult<Self> {
        let f = std::fs::File::open(path).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        read_spectrum_csv(f).map(Spectrum).map_err(err)
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        let f = std::fs::File::create(path).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        write_spectrum_csv(&self.0, std::io::BufWriter::new(f)).map_err(err)
    }

    #[getter]
    fn lmax(&self) -> f64 {
        self.0.lmax
    }

    #[getter]
    fn preset(&self) -> String {
        self.0.preset_name.clone()
    }

    #[getter]
    fn ngens(&self) -> usize {
        self.0.preset.ngens
    }

    fn __len__(&self) -> usize {
        self.0.records.len()
    }

    /// Primitive lengths in increasing order.
    fn primitive_lengths(&self) -> Vec<f64> {
        self.0.primitives().map(|r| r.ell).collect()
    }

    /// (class_id, ell, ell_sharp, k, log_det_iminus_p, homology) per record.
    fn records(&self) -> Vec<(String, f64, f64, usize, f64, Vec<i64>)> {
        self.0
            .records
            .iter()
            .map(|r| (r.class_id.clone(), r.ell, r.ell_sharp, r.k, r.log_det_iminus_p, r.homology.clone()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Spectrum('{}', lmax={}, records={})", self.0.preset_name, self.0.lmax, self.0.records.len())
    }
}

/// Canonical word of the conjugacy class of `word` (letters joined by dots).
#[pyfunction]
#[pyo3(signature = (word, rank = None, genus = None))]
fn canonical_word(word: &str, rank: Option<usize>, genus: Option<usize>) -> PyResult<String> {
    let p = match (rank, genus) {
        (Some(r), None) if (1..=60).contains(&r) => GroupPreset::free(r),
        (None, Some(g)) if (1..=30).contains(&g) => GroupPreset::surface(g),
        _ => return Err(PyValueError::new_err("give exactly one of rank (1..60) or genus (1..30)")),
    };
    let w = p.parse_word(word).map_err(err)?;
    let c = canonical_class(&w, &p).map_err(err)?;
    Ok(p.format_word(&c.canonical))
}

/// Σ²(λ, L) split into smooth, oscillating and non-primitive parts.
#[pyfunction]
#[pyo3(signature = (spectrum, lam, l, window_kind = "bump", flux = None, alpha = 1.0))]
fn sigma2(
    py: Python<'_>,
    spectrum: &Spectrum,
    lam: f64,
    l: f64,
    window_kind: &str,
    flux: Option<Vec<f64>>,
    alpha: f64,
) -> PyResult<BTreeMap<String, f64>> {
    let w = window(window_kind)?;
    let chi = character(flux, alpha, &spectrum.0.preset)?;
    let t = py.detach(|| CoefficientTable::build(&spectrum.0, &chi, &w, lam, l)).map_err(err)?;
    let r = t.report_at(lam, spectrum.0.lmax);
    Ok(BTreeMap::from([
        ("sigma2".to_string(), r.sigma2),
        ("smooth".to_string(), r.smooth_part),
        ("osc".to_string(), r.osc_part),
        ("tail".to_string(), r.nonprimitive_tail),
        ("tail_bound".to_string(), t.tail_bound()),
    ]))
}

/// (1/δ)∫ Σ²(μ, L) dμ over [λ, λ+δ].
#[pyfunction]
#[pyo3(signature = (spectrum, lam, l, delta, window_kind = "bump", flux = None, alpha = 1.0))]
fn energy_averaged_sigma2(
    py: Python<'_>,
    spectrum: &Spectrum,
    lam: f64,
    l: f64,
    delta: f64,
    window_kind: &str,
    flux: Option<Vec<f64>>,
    alpha: f64,
) -> PyResult<f64> {
    let w = window(window_kind)?;
    let chi = character(flux, alpha, &spectrum.0.preset)?;
    py.detach(|| {
        let t = CoefficientTable::build(&spectrum.0, &chi, &w, lam, l)?;
        energy_average(|m| t.sigma2_at(m), lam, delta, default_points(delta, l), l)
    })
    .map_err(err)
}

/// (value, se) of the Haar integral of (tr g + conj tr g)² for U1, SU2 or U<N>.
#[pyfunction]
#[pyo3(signature = (group, samples = 100_000, seed = 2024))]
fn haar_constant(py: Python<'_>, group: &str, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let g = HaarGroup::parse(group).map_err(err)?;
    let e = py.detach(|| haar_sigma_constant(g, samples, seed)).map_err(err)?;
    Ok((e.value, e.se))
}

/// Moment checks on random S_n covers: (name, value, se, target, pass) rows.
#[pyfunction]
#[pyo3(signature = (spectrum, n, samples, seed = 7, kmax = 6, classes = 2))]
fn cover_moments(
    py: Python<'_>,
    spectrum: &Spectrum,
    n: usize,
    samples: usize,
    seed: u64,
    kmax: usize,
    classes: usize,
) -> PyResult<Vec<(String, f64, f64, f64, bool)>> {
    let words: Vec<_> = spectrum.0.p0().iter().take(classes).map(|r| r.word.canonical.clone()).collect();
    let s = py.detach(|| moment_experiment(&spectrum.0.preset, &words, kmax, n, samples, seed)).map_err(err)?;
    Ok(s.checks.into_iter().map(|c| (c.name, c.estimate.value, c.estimate.se, c.target, c.pass)).collect())
}

/// (empirical value, bootstrap se, limiting Σ²) for random covers.
#[pyfunction]
#[pyo3(signature = (spectrum, lam, l, n, samples, seed = 7, window_kind = "bump", divisor_centering = false))]
#[allow(clippy::too_many_arguments)]
fn cover_variance(
    py: Python<'_>,
    spectrum: &Spectrum,
    lam: f64,
    l: f64,
    n: usize,
    samples: usize,
    seed: u64,
    window_kind: &str,
    divisor_centering: bool,
) -> PyResult<(f64, f64, f64)> {
    let w = window(window_kind)?;
    let c = if divisor_centering { Centering::DivisorCount } else { Centering::BatchMean };
    let r = py
        .detach(|| empirical_cover_variance(&spectrum.0, &Character::Trivial, &w, lam, l, n, samples, seed, c))
        .map_err(err)?;
    Ok((r.variance.value, r.variance.se, r.sigma2_limit))
}

/// Exact cumulants [(m, κ_m)] of the Poisson surrogate.
#[pyfunction]
#[pyo3(signature = (spectrum, lam, l, mmax = 4, window_kind = "bump", flux = None, alpha = 1.0))]
#[allow(clippy::too_many_arguments)]
fn poisson_cumulants(
    py: Python<'_>,
    spectrum: &Spectrum,
    lam: f64,
    l: f64,
    mmax: usize,
    window_kind: &str,
    flux: Option<Vec<f64>>,
    alpha: f64,
) -> PyResult<Vec<(usize, f64)>> {
    let w = window(window_kind)?;
    let chi = character(flux, alpha, &spectrum.0.preset)?;
    py.detach(|| {
        let s = PoissonSurrogate::new(&spectrum.0, &chi, &w, lam, l, 0)?;
        exact_cumulants(&s, mmax)
    })
    .map(|r| r.kappa)
    .map_err(err)
}

/// Surrogate CLT summary: sigma2, ks_distance, skewness, excess_kurtosis and their targets.
#[pyfunction]
#[pyo3(signature = (spectrum, lam, l, draws = 100_000, seed = 5, window_kind = "bump"))]
fn poisson_clt(
    py: Python<'_>,
    spectrum: &Spectrum,
    lam: f64,
    l: f64,
    draws: usize,
    seed: u64,
    window_kind: &str,
) -> PyResult<BTreeMap<String, f64>> {
    let w = window(window_kind)?;
    let r = py
        .detach(|| {
            let s = PoissonSurrogate::new(&spectrum.0, &Character::Trivial, &w, lam, l, seed)?;
            clt_test(&s, draws)
        })
        .map_err(err)?;
    Ok(BTreeMap::from([
        ("sigma2".to_string(), r.sigma2),
        ("ks_distance".to_string(), r.ks_distance),
        ("skewness".to_string(), r.moments.skewness.value),
        ("skewness_target".to_string(), r.skewness_target),
        ("excess_kurtosis".to_string(), r.moments.excess_kurtosis.value),
        ("kurtosis_target".to_string(), r.kurtosis_target),
    ]))
}

/// (value, target) of the periodic-orbit sum rule at scale L.
#[pyfunction]
fn sum_rule(spectrum: &Spectrum, l: f64) -> PyResult<(f64, f64)> {
    let r = sum_rule_check(&spectrum.0, &BumpFn::sum_rule_default(), l, &Character::Trivial).map_err(err)?;
    Ok((r.value, r.target))
}

/// Orbit CLT summary at length T for the given flux.
#[pyfunction]
#[pyo3(signature = (spectrum, flux, t, draws = 100_000, seed = 3))]
fn orbit_clt(
    py: Python<'_>,
    spectrum: &Spectrum,
    flux: Vec<f64>,
    t: f64,
    draws: usize,
    seed: u64,
) -> PyResult<BTreeMap<String, f64>> {
    if flux.len() != spectrum.0.preset.ngens {
        return Err(PyValueError::new_err("flux length must match the generator count"));
    }
    let r = py.detach(|| orbit_clt_experiment(&spectrum.0, &flux, t, draws, seed)).map_err(err)?;
    Ok(BTreeMap::from([
        ("variance".to_string(), r.moments.variance.value),
        ("estimator".to_string(), r.estimator.value),
        ("skewness".to_string(), r.moments.skewness.value),
        ("excess_kurtosis".to_string(), r.moments.excess_kurtosis.value),
        ("members".to_string(), r.members as f64),
    ]))
}

/// Geodesic-sum variance estimate (value, se) at length T.
#[pyfunction]
#[pyo3(signature = (spectrum, flux, t, epsilon = 1.0))]
fn flux_variance(spectrum: &Spectrum, flux: Vec<f64>, t: f64, epsilon: f64) -> PyResult<(f64, f64)> {
    let v = variance_estimator(&spectrum.0, &flux, t, epsilon).map_err(err)?;
    Ok((v.value, v.se))
}

/// GOE to GUE crossover Σ²(s) on `s_grid`.
#[pyfunction]
#[pyo3(signature = (variance, s_grid, window_kind = "bump"))]
fn crossover(variance: f64, s_grid: Vec<f64>, window_kind: &str) -> PyResult<Vec<f64>> {
    transition_curve(&window(window_kind)?, variance, &s_grid).map(|c| c.sigma2).map_err(err)
}

#[pymodule(name = "hypspec")]
fn hypspec_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Window>()?;
    m.add_class::<Spectrum>()?;
    m.add_function(wrap_pyfunction!(canonical_word, m)?)?;
    m.add_function(wrap_pyfunction!(sigma2, m)?)?;
    m.add_function(wrap_pyfunction!(energy_averaged_sigma2, m)?)?;
    m.add_function(wrap_pyfunction!(haar_constant, m)?)?;
    m.add_function(wrap_pyfunction!(cover_moments, m)?)?;
    m.add_function(wrap_pyfunction!(cover_variance, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_cumulants, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_clt, m)?)?;
    m.add_function(wrap_pyfunction!(sum_rule, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_clt, m)?)?;
    m.add_function(wrap_pyfunction!(flux_variance, m)?)?;
    m.add_function(wrap_pyfunction!(crossover, m)?)?;
    Ok(())
}
