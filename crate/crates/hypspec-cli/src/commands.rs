use serde::Deserialize;
use serde_json::{json, Value};

use hypspec::characters::{
    haar_sigma_constant, random_su2_free_rep, random_su2_surface_rep, Character, FluxCharacter, HaarGroup, MatrixRep,
};
use hypspec::dynamics::{
    cluster_sum, default_s_grid, empirical_transition, orbit_clt_experiment, sum_rule_check, variance_estimator,
    BumpFn,
};
use hypspec::fuchsian::{
    anosov_power_check, build_spectrum, read_spectrum_csv, write_spectrum_csv, FuchsianGroup, LengthSpectrum,
};
use hypspec::poisson_model::{clt_test, ergodicity_experiment, ergodicity_min_epsilon, exact_cumulants, PoissonSurrogate};
use hypspec::rand_covers::{empirical_cover_variance, moment_experiment, Centering, COVER_NOTE};
use hypspec::trace_stats::{
    default_points, dirichlet_lambda_search, distinct_lengths, energy_average, quadratic_average, CoefficientTable,
    SearchMode,
};
use hypspec::windows::Window;
use hypspec::words::GroupPreset;
use hypspec::Error;

use crate::output::{Check, Output};
use crate::{Cmd, Fail, Opts};

type Res<T> = Result<T, Fail>;

fn usage<T>(msg: impl Into<String>) -> Res<T> {
    Err(Fail::Usage(msg.into()))
}

fn positive(name: &str, v: f64) -> Res<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        usage(format!("--{name} must be positive and finite, got {v}"))
    }
}

fn at_least_one(name: &str, v: usize) -> Res<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        usage(format!("--{name} must be at least 1"))
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn num(x: f64) -> String {
    x.to_string()
}

/// Fill per-command defaults so the embedded config is complete.
fn resolve(cmd: Cmd, mut o: Opts) -> Opts {
    use Cmd::*;
    let free = matches!(cmd, Covers);
    if cmd != Haar {
        o.preset.get_or_insert_with(|| if free { "schottky_pants(2,2,2)" } else { "octagon_genus2" }.into());
    }
    if matches!(cmd, Variance | Average | Dirichlet | Covers | Poisson | Ergodicity | Transition) {
        o.window.get_or_insert_with(|| "bump".into());
    }
    if matches!(cmd, Variance | Average | Dirichlet | Covers | Poisson | Ergodicity | Sumrule) {
        o.character.get_or_insert_with(|| "trivial".into());
        o.alpha.get_or_insert(1.0);
    }
    if matches!(cmd, Variance | Average | Covers | Poisson | Ergodicity | Transition) {
        o.lambda.get_or_insert(1e4);
    }
    if matches!(cmd, Covers | Poisson | Ergodicity | OrbitClt | Haar) {
        o.seed.get_or_insert(match cmd {
            Haar => 2024,
            Poisson | Ergodicity => 5,
            OrbitClt => 3,
            _ => 7,
        });
    }
    let default_l = match cmd {
        Cmd::Dirichlet => 5.0,
        Cmd::Covers => 8.0,
        Cmd::Poisson | Cmd::Ergodicity | Cmd::Transition => 10.0,
        Cmd::Sumrule => 11.0,
        _ => 9.0,
    };
    match cmd {
        Cmd::Spectrum => {
            o.lmax.get_or_insert(10.0);
            o.oriented.get_or_insert(true);
        }
        Cmd::Variance => {
            o.l.get_or_insert(default_l);
            o.delta.get_or_insert(2.0);
        }
        Cmd::Average => {
            o.l_grid.get_or_insert_with(|| vec![7.0, 9.0, 11.0]);
            o.delta.get_or_insert(2.0);
        }
        Cmd::Dirichlet => {
            o.l.get_or_insert(default_l);
            o.y.get_or_insert(8.0);
            o.m.get_or_insert(100.0);
            o.mode.get_or_insert_with(|| "both".into());
        }
        Cmd::Covers => {
            o.l.get_or_insert(default_l);
            o.n.get_or_insert(300);
            o.samples.get_or_insert(20_000);
            o.kmax.get_or_insert(6);
            o.centering.get_or_insert_with(|| "batch".into());
        }
        Cmd::Poisson => {
            o.l.get_or_insert(default_l);
            o.draws.get_or_insert(100_000);
            o.mmax.get_or_insert(4);
            if o.big_lambda.is_some() {
                o.erg_draws.get_or_insert(1000);
            }
        }
        Cmd::Ergodicity => {
            o.l.get_or_insert(default_l);
            o.big_lambda.get_or_insert(50.0);
            o.draws.get_or_insert(1000);
        }
        Cmd::Sumrule => {
            o.l.get_or_insert(default_l);
            o.t.get_or_insert(9.0);
        }
        Cmd::OrbitClt => {
            o.t.get_or_insert(9.0);
            o.draws.get_or_insert(100_000);
        }
        Cmd::Transition => {
            o.l.get_or_insert(default_l);
            o.t.get_or_insert(9.0);
            o.delta.get_or_insert(2.0);
            o.epsilon.get_or_insert(1.0);
            o.s_grid.get_or_insert_with(default_s_grid);
        }
        Cmd::Haar => {
            o.group.get_or_insert_with(|| "U1".into());
            o.samples.get_or_insert(1_000_000);
        }
    }
    o.format.get_or_insert_with(|| match cmd {
        Cmd::Spectrum | Cmd::Transition => "csv".into(),
        _ => "json".into(),
    });
    o
}

fn config_json(o: &Opts) -> Value {
    let mut v = to_json(o);
    if let Value::Object(m) = &mut v {
        m.retain(|_, x| !x.is_null());
    }
    v
}

fn group(o: &Opts) -> Res<FuchsianGroup> {
    Ok(FuchsianGroup::preset(o.preset.as_deref().unwrap())?)
}

/// Spectrum from --spectrum-file, or enumerated up to max(--Lmax, need).
fn spectrum(o: &Opts, need: f64, notes: &mut Vec<String>) -> Res<LengthSpectrum> {
    let spec = if let Some(p) = &o.spectrum_file {
        let f = std::fs::File::open(p).map_err(|e| Fail::Usage(format!("--spectrum-file {}: {e}", p.display())))?;
        read_spectrum_csv(f)?
    } else {
        let g = group(o)?;
        if let Some(w) = &g.warning {
            notes.push(w.clone());
        }
        let lmax = o.lmax.unwrap_or(need);
        positive("Lmax", lmax)?;
        build_spectrum(&g, lmax, o.oriented.unwrap_or(true))?
    };
    spec.require(need)?;
    Ok(spec)
}

fn window(o: &Opts) -> Res<Window> {
    Ok(Window::parse(o.window.as_deref().unwrap())?)
}

fn flux(o: &Opts, preset: &GroupPreset) -> Res<Vec<f64>> {
    let f = match &o.flux {
        Some(f) => f.clone(),
        None => {
            let mut e = vec![0.0; preset.ngens];
            e[0] = 1.0;
            e
        }
    };
    if f.len() != preset.ngens || f.iter().any(|x| !x.is_finite()) {
        return usage(format!("--flux needs {} finite entries, got {:?}", preset.ngens, f));
    }
    Ok(f)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CharSpec {
    flux: Option<Vec<f64>>,
    alpha: Option<f64>,
    matrices: Option<Vec<Vec<Vec<(f64, f64)>>>>,
    su2_random: Option<u64>,
}

fn character(o: &Opts, preset: &GroupPreset) -> Res<Character> {
    let s = o.character.as_deref().unwrap().trim();
    let alpha = o.alpha.unwrap();
    match s {
        "trivial" => Ok(Character::Trivial),
        "flux" => Ok(Character::Flux(FluxCharacter::new(flux(o, preset)?, alpha))),
        _ if s.starts_with('{') => {
            let c: CharSpec =
                serde_json::from_str(s).map_err(|e| Fail::Usage(format!("--character JSON: {e}")))?;
            match (c.flux, c.matrices, c.su2_random) {
                (Some(f), None, None) => {
                    if f.len() != preset.ngens {
                        return usage(format!("flux needs {} entries", preset.ngens));
                    }
                    Ok(Character::Flux(FluxCharacter::new(f, c.alpha.unwrap_or(alpha))))
                }
                (None, Some(m), None) => Ok(Character::Matrix(MatrixRep::from_entries(&m, preset)?)),
                (None, None, Some(seed)) => Ok(Character::Matrix(if preset.is_surface() {
                    random_su2_surface_rep(preset, seed)?
                } else {
                    random_su2_free_rep(preset, seed)
                })),
                _ => usage("--character JSON needs exactly one of flux, matrices, su2_random"),
            }
        }
        _ => usage(format!("unknown character '{s}' (trivial | flux | JSON)")),
    }
}

/// (name, value) of the ensemble constant the averaged Σ² should approach.
fn ensemble_target(o: &Opts, w: &Window, chi: &Character) -> (String, f64) {
    if let Some(t) = o.target {
        return ("user".into(), t);
    }
    if chi.breaks_time_reversal() {
        ("GUE".into(), w.sigma2_gue())
    } else {
        ("GOE".into(), w.sigma2_goe())
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|p| p[1] < p[0])
}

pub fn run(cmd: Cmd, opts: Opts) -> Res<(Output, String)> {
    let o = resolve(cmd, opts);
    let fmt = o.format.clone().unwrap();
    if fmt != "json" && fmt != "csv" {
        return usage(format!("--format must be json or csv, got '{fmt}'"));
    }
    if let Some(n) = o.threads {
        if n > 4096 {
            return usage("--threads is unreasonably large");
        }
    }
    let out = match cmd {
        Cmd::Spectrum => spectrum_cmd(&o)?,
        Cmd::Variance => variance_cmd(&o)?,
        Cmd::Average => average_cmd(&o)?,
        Cmd::Dirichlet => dirichlet_cmd(&o)?,
        Cmd::Covers => covers_cmd(&o)?,
        Cmd::Poisson => poisson_cmd(&o)?,
        Cmd::Ergodicity => ergodicity_cmd(&o)?,
        Cmd::Sumrule => sumrule_cmd(&o)?,
        Cmd::OrbitClt => orbit_cmd(&o)?,
        Cmd::Transition => transition_cmd(&o)?,
        Cmd::Haar => haar_cmd(&o)?,
    };
    Ok((out, fmt))
}

fn spectrum_cmd(o: &Opts) -> Res<Output> {
    let mut notes = Vec::new();
    let lmax = positive("Lmax", o.lmax.unwrap())?;
    let spec = spectrum(o, lmax, &mut notes)?;
    let anosov = anosov_power_check(&spec);
    let det_err = spec
        .records
        .iter()
        .map(|r| {
            let e = 4.0 * (r.ell / 2.0).sinh().powi(2);
            ((r.det_iminus_p - e) / e).abs()
        })
        .fold(0.0, f64::max);
    let mut csv = Vec::new();
    write_spectrum_csv(&spec, &mut csv)?;
    let result = json!({
        "preset": spec.preset_name,
        "Lmax": spec.lmax,
        "oriented": spec.oriented,
        "records": spec.records.len(),
        "primitive": spec.primitives().count(),
        "certificate": spec.certificate,
        "collisions": spec.collisions,
        "multiplicity_groups": spec.multiplicities(1e-9).len(),
        "anosov": anosov,
        "max_det_rel_error": det_err,
    });
    let mut out = Output::new("spectrum", config_json(o), result);
    out.notes = notes;
    out.checks.push(Check::at_most("max_det_rel_error", det_err, 1e-10));
    out.checks.push(Check::at_most("anosov_failures", anosov.failures.len() as f64, 0.0));
    out.checks.push(Check::at_most("collisions", spec.collisions.len() as f64, 0.0));
    out.raw_csv = Some(csv);
    Ok(out)
}

fn variance_cmd(o: &Opts) -> Res<Output> {
    let mut notes = Vec::new();
    let l = positive("L", o.l.unwrap())?;
    let lambda = positive("lambda", o.lambda.unwrap())?;
    let delta = positive("delta", o.delta.unwrap())?;
    let w = window(o)?;
    let spec = spectrum(o, l, &mut notes)?;
    let chi = character(o, &spec.preset)?;
    if l > lambda.ln() {
        notes.push(format!("L = {l} exceeds log(lambda) = {:.3}; the large-lambda limit may not apply", lambda.ln()));
    }
    let table = CoefficientTable::build(&spec, &chi, &w, lambda, l)?;
    let points = o.points.unwrap_or_else(|| default_points(delta, l));
    let avg = energy_average(|m| table.sigma2_at(m), lambda, delta, points, l)?;
    let (tname, target) = ensemble_target(o, &w, &chi);
    let gap = (avg - target).abs();
    let quad = match o.big_lambda {
        Some(bl) => {
            positive("Lambda", bl)?;
            let p = o.points.unwrap_or_else(|| default_points(bl, l));
            Some(quadratic_average(|m| table.sigma2_at(m), lambda, bl, target, p, l)?)
        }
        None => None,
    };
    let rows: Vec<Vec<String>> = (0..points)
        .map(|i| {
            let mu = lambda + delta * i as f64 / (points - 1).max(1) as f64;
            vec![num(mu), num(table.sigma2_at(mu)), num(table.smooth_part()), num(table.osc_part_at(mu))]
        })
        .collect();
    let result = json!({
        "at_lambda": table.report_at(lambda, spec.lmax),
        "character": chi.label(),
        "points": points,
        "average": avg,
        "target_name": tname,
        "target": target,
        "gap": gap,
        "quadratic_deviation": quad,
    });
    let mut out = Output::new("variance", config_json(o), result);
    out.notes = notes;
    out.checks.push(Check::at_most("gap", gap, 0.25 * target));
    out.table = Some((["mu", "sigma2", "smooth", "osc"].map(String::from).to_vec(), rows));
    Ok(out)
}

fn average_cmd(o: &Opts) -> Res<Output> {
    let mut notes = Vec::new();
    let grid = o.l_grid.clone().unwrap();
    if grid.is_empty() {
        return usage("--L-grid is empty");
    }
    for &l in &grid {
        positive("L-grid", l)?;
    }
    let lambda = positive("lambda", o.lambda.unwrap())?;
    let delta = positive("delta", o.delta.unwrap())?;
    let w = window(o)?;
    let need = grid.iter().copied().fold(0.0, f64::max);
    let spec = spectrum(o, need, &mut notes)?;
    let chi = character(o, &spec.preset)?;
    let (tname, target) = ensemble_target(o, &w, &chi);
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for &l in &grid {
        let table = CoefficientTable::build(&spec, &chi, &w, lambda, l)?;
        let points = o.points.unwrap_or_else(|| default_points(delta, l));
        let avg = energy_average(|m| table.sigma2_at(m), lambda, delta, points, l)?;
        let gap = (avg - target).abs();
        gaps.push(gap);
        rows.push(vec![num(l), num(avg), num(target), num(gap)]);
    }
    let result = json!({
        "character": chi.label(),
        "target_name": tname,
        "target": target,
        "L": grid,
        "average": rows.iter().map(|r| r[1].parse::<f64>().unwrap()).collect::<Vec<_>>(),
        "gap": gaps,
    });
    let mut out = Output::new("average", config_json(o), result);
    out.notes = notes;
    out.checks.push(Check::flag("gap_decreasing", strictly_decreasing(&gaps)));
    out.checks.push(Check::at_most("final_gap", *gaps.last().unwrap(), 0.25 * target));
    out.table = Some((["L", "average", "target", "gap"].map(String::from).to_vec(), rows));
    Ok(out)
}

fn dirichlet_cmd(o: &Opts) -> Res<Output> {
    let mut notes = Vec::new();
    let l = positive("L", o.l.unwrap())?;
    let y = o.y.unwrap();
    if !(y > 1.0) {
        return usage("--Y must exceed 1");
    }
    let m = positive("M", o.m.unwrap())?;
    let lambda_max = o.lambda_max.map(|x| positive("lambda-max", x)).transpose()?.unwrap_or(f64::INFINITY);
    let modes: Vec<SearchMode> = match o.mode.as_deref().unwrap() {
        "plus" => vec![SearchMode::Plus],
        "dual" => vec![SearchMode::Dual],
        "both" => vec![SearchMode::Plus, SearchMode::Dual],
        other => return usage(format!("--mode must be plus, dual or both, got '{other}'")),
    };
    let w = window(o)?;
    let spec = spectrum(o, l, &mut notes)?;
    let chi = character(o, &spec.preset)?;
    let lens: Vec<f64> = spec.p0().iter().filter(|r| r.ell_sharp < l).map(|r| r.ell_sharp).collect();
    let lens = distinct_lengths(&lens, 1e-9);
    let table = CoefficientTable::build(&spec, &chi, &w, 0.0, l)?;
    let sbar = table.smooth_part();
    let slack = 3.0 / y * sbar;
    let mut out = Output::new("dirichlet", Value::Null, Value::Null);
    let mut found = Vec::new();
    for mode in modes {
        let (name, bound) = match mode {
            SearchMode::Plus => ("plus", 1.5 * sbar - slack),
            SearchMode::Dual => ("dual", 0.5 * sbar + slack),
        };
        match dirichlet_lambda_search(&lens, y, m, lambda_max, mode) {
            Ok(lam) => {
                let v = table.sigma2_at(lam);
                found.push(json!({"mode": name, "lambda": lam, "sigma2": v, "bound": bound, "searched_to": Value::Null}));
                out.checks.push(match mode {
                    SearchMode::Plus => Check::at_least("sigma2_plus", v, bound),
                    SearchMode::Dual => Check::at_most("sigma2_dual", v, bound),
                });
            }
            Err(Error::NotFound(upper)) => {
                found.push(json!({"mode": name, "lambda": Value::Null, "sigma2": Value::Null, "bound": bound, "searched_to": upper}));
                out.checks.push(Check::flag(&format!("{name}_found"), false));
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.config = config_json(o);
    out.result = json!({
        "lengths": lens,
        "smooth_part": sbar,
        "slack": slack,
        "searches": found,
    });
    out.notes = notes;
    Ok(out)
}

fn covers_cmd(o: &Opts) -> Res<Output> {
    let mut notes = vec![COVER_NOTE.to_string()];
    let l = positive("L", o.l.unwrap())?;
    let lambda = positive("lambda", o.lambda.unwrap())?;
    let n = at_least_one("n", o.n.unwrap())?;
    let samples = o.samples.unwrap();
    if samples < 2 {
        return usage("--samples must be at least 2");
    }
    let kmax = at_least_one("kmax", o.kmax.unwrap())?;
    let centering = match o.centering.as_deref().unwrap() {
        "batch" => Centering::BatchMean,
        "divisor" => Centering::DivisorCount,
        other => return usage(format!("--centering must be batch or divisor, got '{other}'")),
    };
    let w = window(o)?;
    let g = group(o)?;
    if g.preset.is_surface() {
        return usage(format!("covers needs a free (schottky_pants) preset, got {}", g.name));
    }
    let spec = spectrum(o, l, &mut notes)?;
    let chi = character(o, &spec.preset)?;
    let words = match &o.words {
        Some(ws) => ws.iter().map(|s| spec.preset.parse_word(s)).collect::<Result<Vec<_>, _>>()?,
        None => spec.p0().iter().take(2).map(|r| r.word.canonical.clone()).collect(),
    };
    if words.is_empty() {
        return usage("no classes to test");
    }
    let stats = moment_experiment(&spec.preset, &words, kmax, n, samples, o.seed.unwrap())?;
    let var = empirical_cover_variance(&spec, &chi, &w, lambda, l, n, samples, o.seed.unwrap(), centering)?;
    // The full grid of moment checks is reported; only the headline ones gate.
    let mut gated: Vec<String> = Vec::new();
    for c in &stats.classes {
        gated.push(format!("mean F({c}^1)"));
        gated.push(format!("mean F({c}^{kmax})"));
        gated.push(format!("cov F({c}^1) F({c}^1)"));
    }
    let mut out = Output::new("covers", config_json(o), json!({"moments": stats, "variance": var}));
    for c in stats.checks.iter().filter(|c| gated.contains(&c.name) || !c.name.contains('^')) {
        out.checks.push(Check {
            name: c.name.clone(),
            value: c.estimate.value,
            bound: c.target,
            pass: c.pass,
        });
    }
    out.checks.push(Check::at_most("identity_failures", stats.identity_failures as f64, 0.0));
    out.checks.push(Check { name: "variance".into(), value: var.variance.value, bound: var.sigma2_limit, pass: var.pass });
    out.notes = notes;
    Ok(out)
}

fn surrogate(o: &Opts, notes: &mut Vec<String>) -> Res<(PoissonSurrogate, Window, Character)> {
    let l = positive("L", o.l.unwrap())?;
    let lambda = positive("lambda", o.lambda.unwrap())?;
    let w = window(o)?;
    let spec = spectrum(o, l, notes)?;
    let chi = character(o, &spec.preset)?;
    let s = PoissonSurrogate::new(&spec, &chi, &w, lambda, l, o.seed.unwrap())?;
    Ok((s, w, chi))
}

fn poisson_cmd(o: &Opts) -> Res<Output> {
    let mut notes = Vec::new();
    let mmax = o.mmax.unwrap();
    if mmax < 2 {
        return usage("--mmax must be at least 2");
    }
    let draws = o.draws.unwrap();
    if draws < 10 {
        return usage("--draws must be at least 10");
    }
    let (s, w, chi) = surrogate(o, &mut notes)?;
    let cum = exact_cumulants(&s, mmax)?;
    let clt = clt_test(&s, draws)?;
    let erg = match o.big_lambda {
        Some(bl) => {
            positive("Lambda", bl)?;
            let eps = o.epsilon.unwrap_or_else(|| ergodicity_min_epsilon(s.l, bl));
            let (_, target) = ensemble_target(o, &w, &chi);
            Some(ergodicity_experiment(&s, bl, o.points, at_least_one("erg-draws", o.erg_draws.unwrap())?, eps, target)?)
        }
        None => None,
    };
    let mut out = Output::new("poisson", config_json(o), json!({"cumulants": cum, "clt": clt, "ergodicity": erg}));
    out.checks.push(Check::at_most("kappa2_rel_err", cum.kappa2_rel_err, 1e-9));
    out.checks.push(Check::at_most("ks_distance", clt.ks_distance, 0.02));
    out.checks.push(Check::flag("skewness", clt.skewness_pass));
    out.checks.push(Check::flag("kurtosis", clt.kurtosis_pass));
    if let Some(e) = &erg {
        out.checks.push(Check::at_most("violation_fraction", e.violation_fraction.value, 0.1));
    }
    out.notes = notes;
    Ok(out)
}

fn ergodicity_cmd(o: &Opts) -> Res<Output> {
    let mut notes = Vec::new();
    let bl = positive("Lambda", o.big_lambda.unwrap())?;
    let draws = at_least_one("draws", o.draws.unwrap())?;
    let (s, w, chi) = surrogate(o, &mut notes)?;
    let (tname, target) = ensemble_target(o, &w, &chi);
    let eps = o.epsilon.unwrap_or_else(|| ergodicity_min_epsilon(s.l, bl));
    let head = ergodicity_experiment(&s, bl, o.points, draws, eps, target)?;
    let mut trend = Vec::new();
    if let Some(grid) = &o.big_lambda_grid {
        for &g in grid {
            positive("Lambda-grid", g)?;
        }
        let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
        let eps_t = o.epsilon.unwrap_or_else(|| ergodicity_min_epsilon(s.l, lo));
        for &g in grid {
            trend.push(ergodicity_experiment(&s, g, o.points, draws, eps_t, target)?);
        }
    }
    let fr: Vec<f64> = trend.iter().map(|r| r.violation_fraction.value).collect();
    let mut out =
        Output::new("ergodicity", config_json(o), json!({"target_name": tname, "headline": head, "trend": trend}));
    out.checks.push(Check::at_most("violation_fraction", head.violation_fraction.value, 0.1));
    if fr.len() > 1 {
        out.checks.push(Check::flag("fraction_decreasing", strictly_decreasing(&fr)));
    }
    out.notes = notes;
    Ok(out)
}

fn sumrule_cmd(o: &Opts) -> Res<Output> {
    let mut notes = Vec::new();
    let l = positive("L", o.l.unwrap())?;
    let t = positive("T", o.t.unwrap())?;
    let grid = o.l_grid.clone().unwrap_or_else(|| vec![l]);
    for &x in &grid {
        positive("L-grid", x)?;
    }
    let phi = BumpFn::sum_rule_default();
    let omega = BumpFn::unit();
    let need = grid.iter().copied().fold(l, f64::max).max(t + 1.0);
    let spec = spectrum(o, need, &mut notes)?;
    let chi = character(o, &spec.preset)?;
    let main = sum_rule_check(&spec, &phi, l, &chi)?;
    let sweep = grid.iter().map(|&x| sum_rule_check(&spec, &phi, x, &chi)).collect::<Result<Vec<_>, _>>()?;
    let cl = cluster_sum(&spec, &omega, t)?;
    if let Some(wn) = &main.warning {
        notes.push(wn.clone());
    }
    let rows =
        sweep.iter().map(|r| vec![num(r.l), num(r.value), num(r.target), num(r.gap)]).collect::<Vec<_>>();
    let gaps: Vec<f64> = sweep.iter().map(|r| r.gap).collect();
    let mut out = Output::new("sumrule", config_json(o), json!({"sum_rule": main, "sweep": sweep, "cluster": cl}));
    out.checks.push(Check::at_most("sum_rule_gap", main.gap, 0.2 * main.target));
    if gaps.len() > 1 {
        out.checks.push(Check::flag("gap_decreasing", strictly_decreasing(&gaps)));
    }
    out.checks.push(Check::at_most("cluster_deviation", (cl.value - cl.integral).abs(), 0.25 * cl.integral));
    out.table = Some((["L", "value", "target", "gap"].map(String::from).to_vec(), rows));
    out.notes = notes;
    Ok(out)
}

fn orbit_cmd(o: &Opts) -> Res<Output> {
    let mut notes = Vec::new();
    let t = positive("T", o.t.unwrap())?;
    let draws = o.draws.unwrap();
    if draws < 10 {
        return usage("--draws must be at least 10");
    }
    let spec = spectrum(o, t + 1.0, &mut notes)?;
    let f = flux(o, &spec.preset)?;
    let r = orbit_clt_experiment(&spec, &f, t, draws, o.seed.unwrap())?;
    let mut out = Output::new("orbit-clt", config_json(o), to_json(&r));
    out.checks.push(Check::at_most("abs_skewness", r.moments.skewness.value.abs(), 0.15));
    out.checks.push(Check::at_most("abs_excess_kurtosis", r.moments.excess_kurtosis.value.abs(), 0.3));
    out.checks.push(Check::flag("variance_match", r.variance_match));
    out.notes = notes;
    Ok(out)
}

fn transition_cmd(o: &Opts) -> Res<Output> {
    let mut notes = Vec::new();
    let l = positive("L", o.l.unwrap())?;
    let t = positive("T", o.t.unwrap())?;
    let lambda = positive("lambda", o.lambda.unwrap())?;
    let delta = positive("delta", o.delta.unwrap())?;
    let eps = o.epsilon.unwrap();
    let grid = o.s_grid.clone().unwrap();
    if grid.is_empty() || grid.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return usage("--s-grid needs non-negative finite values");
    }
    let w = window(o)?;
    let spec = spectrum(o, l.max(t + eps), &mut notes)?;
    let f = flux(o, &spec.preset)?;
    let var = variance_estimator(&spec, &f, t, eps)?;
    let cmp = empirical_transition(&spec, &f, &grid, &w, lambda, l, delta, var)?;
    let band = 0.1 * cmp.goe;
    let emp: Vec<f64> = cmp.points.iter().map(|p| p.sigma2_emp).collect();
    let mono_excess = emp.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
    let above = emp.iter().map(|v| v - cmp.goe).fold(f64::NEG_INFINITY, f64::max);
    let below = emp.iter().map(|v| cmp.gue - v).fold(f64::NEG_INFINITY, f64::max);
    let rows = cmp
        .points
        .iter()
        .map(|p| vec![num(p.s), num(p.alpha), num(p.sigma2_pred), num(p.sigma2_emp), num(p.sigma2_avg)])
        .collect();
    let mut out = Output::new("transition", config_json(o), to_json(&cmp));
    out.notes.push("the empirical side uses character phase 2*alpha with alpha = s/sqrt(L)".into());
    out.notes.extend(notes);
    out.checks.push(Check::at_most("max_increase", mono_excess, band));
    out.checks.push(Check::at_most("above_goe", above, band));
    out.checks.push(Check::at_most("below_gue", below, band));
    out.table =
        Some((["s", "alpha", "sigma2_pred", "sigma2_emp", "sigma2_avg"].map(String::from).to_vec(), rows));
    Ok(out)
}

fn haar_cmd(o: &Opts) -> Res<Output> {
    let g = HaarGroup::parse(o.group.as_deref().unwrap())?;
    let samples = o.samples.unwrap();
    let e = haar_sigma_constant(g, samples, o.seed.unwrap())?;
    let target = if g == HaarGroup::SU2 { 4.0 } else { 2.0 };
    let mut out = Output::new("haar", config_json(o), json!({"group": g, "estimate": e, "target": target}));
    out.checks.push(Check::at_most("abs_error", (e.value - target).abs(), 3.0 * e.se));
    Ok(out)
}
