//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines always reach stdout. The exit status
//! is 0 either way; the summary line counts the passes.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use hypspec::characters::{haar_sigma_constant, Character, FluxCharacter, HaarGroup};
use hypspec::dynamics::{
    cluster_sum, default_s_grid, empirical_transition, orbit_clt_experiment, sum_rule_check, transition_curve,
    variance_estimator, BumpFn,
};
use hypspec::fuchsian::{anosov_power_check, build_spectrum, FuchsianGroup, LengthSpectrum};
use hypspec::poisson_model::{
    clt_margin, clt_test, cumulant_decay, ergodicity_experiment, ergodicity_min_epsilon, exact_cumulants,
    PoissonSurrogate,
};
use hypspec::rand_covers::{empirical_cover_variance, exhaustive_mean_fixed_points, moment_experiment, Centering};
use hypspec::trace_stats::{
    default_points, dirichlet_lambda_search, distinct_lengths, energy_average, CoefficientTable, SearchMode,
};
use hypspec::windows::Window;
use hypspec::words::Word;

const PRESETS: [&str; 3] = ["schottky_pants(2,2,2)", "octagon_genus2", "punctured_torus"];
const FREE: &str = "schottky_pants(2,2,2)";
const LAMBDA: f64 = 1e4;

struct Report {
    passed: usize,
    total: usize,
}

impl Report {
    fn line(&mut self, id: usize, title: &str, pass: bool, detail: String, t: Instant) {
        self.total += 1;
        self.passed += usize::from(pass);
        println!(
            "{} [{id:>2}] {title}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
}

fn spectrum(name: &str, l: f64) -> LengthSpectrum {
    build_spectrum(&FuchsianGroup::preset(name).unwrap(), l, true).unwrap()
}

fn flux_pi2() -> Character {
    Character::Flux(FluxCharacter::new(vec![FRAC_PI_2, 0.0, 0.0, 0.0], 1.0))
}

fn averaged_gap(spec: &LengthSpectrum, chi: &Character, w: &Window, l: f64, target: f64) -> f64 {
    let t = CoefficientTable::build(spec, chi, w, LAMBDA, l).unwrap();
    let avg = energy_average(|m| t.sigma2_at(m), LAMBDA, 2.0, default_points(2.0, l), l).unwrap();
    (avg - target).abs()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|p| p[1] < p[0])
}

fn main() {
    let mut rep = Report { passed: 0, total: 0 };
    let smooth = Window::bump();
    let spectra: Vec<(&str, LengthSpectrum)> = PRESETS.iter().map(|p| (*p, spectrum(p, 12.0))).collect();
    let octagon = &spectra[1].1;

    // 1
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut anosov_fail = 0;
    let mut count = 0;
    for (name, s) in &spectra {
        let g = FuchsianGroup::preset(name).unwrap();
        for r in &s.records {
            let tr = g.holonomy(&r.word.canonical).trace();
            let from_trace = tr * tr - 4.0;
            let expect = 4.0 * (r.ell / 2.0).sinh().powi(2);
            worst = worst
                .max(((from_trace - expect) / expect).abs())
                .max(((r.det_iminus_p - expect) / expect).abs())
                .max(((r.log_det_iminus_p.exp() - expect) / expect).abs());
            count += 1;
        }
        anosov_fail += anosov_power_check(s).failures.len();
    }
    rep.line(
        1,
        "hyperbolic identities",
        worst <= 1e-10 && anosov_fail == 0,
        format!("{count} records, worst relative det error {worst:.2e}, power-bound failures {anosov_fail}"),
        t,
    );

    // 2
    let t = Instant::now();
    let tri = Window::triangle();
    let (goe, gue, gse) = (tri.sigma2_goe(), tri.sigma2_gue(), tri.sigma2_gse());
    let ok = (goe - 1.0 / 3.0).abs() <= 1e-10 && (gue - 1.0 / 6.0).abs() <= 1e-10 && (gse - 1.0 / 12.0).abs() <= 1e-10;
    rep.line(2, "window constants", ok, format!("triangle GOE {goe:.12} GUE {gue:.12} GSE {gse:.12}"), t);

    // 3
    let t = Instant::now();
    let cases = [(HaarGroup::U1, 2.0, "U(1)"), (HaarGroup::SU2, 4.0, "SU(2)"), (HaarGroup::UN(5), 2.0, "U(5)")];
    let mut ok = true;
    let mut detail = Vec::new();
    for (g, target, name) in cases {
        let e = haar_sigma_constant(g, 1_000_000, 2024).unwrap();
        ok &= e.within(target, 3.0);
        detail.push(format!("{name} {:.4}±{:.4} (target {target})", e.value, e.se));
    }
    rep.line(3, "Haar constants", ok, detail.join(", "), t);

    // 4
    let t = Instant::now();
    let free = &spectra[0].1;
    let p0 = free.p0();
    let g1 = p0[0].word.canonical.clone();
    let g2 = p0[1].word.canonical.clone();
    let stats = moment_experiment(&free.preset, &[g1.clone(), g2.clone()], 6, 300, 20_000, 7).unwrap();
    let find = |name: &str| stats.checks.iter().find(|c| c.name == name).unwrap().clone();
    let n1 = &stats.classes[0];
    let n2 = &stats.classes[1];
    let picks = [
        find(&format!("mean F({n1}^1)")),
        find(&format!("mean F({n1}^6)")),
        find(&format!("cov F({n1}^1) F({n1}^1)")),
        find(&format!("cov F({n1}) F({n2})")),
    ];
    let mut ok = picks.iter().all(|c| c.pass) && stats.identity_failures == 0;
    let mut detail: Vec<String> =
        picks.iter().map(|c| format!("{} {:.4}±{:.4}", c.name, c.estimate.value, c.estimate.se)).collect();
    for n in [3usize, 4] {
        let exact = exhaustive_mean_fixed_points(&free.preset, &g1, n, 6).unwrap();
        let mc = moment_experiment(&free.preset, &[g1.clone()], 6, n, 20_000, 11).unwrap();
        for (k, e) in exact.iter().enumerate() {
            let c = mc.checks.iter().find(|c| c.name == format!("mean F({n1}^{})", k + 1)).unwrap();
            ok &= c.estimate.within(*e, 3.0);
        }
        detail.push(format!("exhaustive n={n} means {exact:?}"));
    }
    rep.line(4, "cover combinatorics", ok, detail.join(", "), t);

    // 5
    let t = Instant::now();
    let r = empirical_cover_variance(free, &Character::Trivial, &smooth, LAMBDA, 8.0, 300, 20_000, 7, Centering::BatchMean)
        .unwrap();
    rep.line(
        5,
        "ensemble-variance bridge",
        r.pass,
        format!("{FREE}: empirical {:.5}±{:.5}, limit {:.5}", r.variance.value, r.variance.se, r.sigma2_limit),
        t,
    );

    // 6
    let t = Instant::now();
    let mut identity = true;
    let mut slopes_ok = true;
    let mut detail = Vec::new();
    for (name, s) in &spectra {
        let reps: Vec<_> = [6.0, 8.0, 10.0, 12.0]
            .iter()
            .map(|&l| exact_cumulants(&PoissonSurrogate::new(s, &Character::Trivial, &smooth, LAMBDA, l, 1).unwrap(), 4).unwrap())
            .collect();
        let worst = reps.iter().map(|r| r.kappa2_rel_err).fold(0.0, f64::max);
        identity &= worst <= 1e-9;
        let fit = cumulant_decay(&reps);
        let s3 = fit.fits[1].2;
        let s4 = fit.fits[2].2;
        slopes_ok &= s3 <= -2.7 && s4 <= -3.7;
        detail.push(format!("{name}: k2 rel err {worst:.1e}, slopes k3 {s3:.2} k4 {s4:.2}"));
    }
    rep.line(6, "cumulant identity and decay", identity && slopes_ok, detail.join("; "), t);

    // 7
    let t = Instant::now();
    let gaps: Vec<f64> =
        [7.0, 9.0, 11.0].iter().map(|&l| averaged_gap(octagon, &Character::Trivial, &smooth, l, smooth.sigma2_goe())).collect();
    let goe = smooth.sigma2_goe();
    rep.line(
        7,
        "GOE on average",
        strictly_decreasing(&gaps) && gaps[2] <= 0.25 * goe,
        format!("gaps at L=7,9,11: {:.4} {:.4} {:.4}, bound {:.4}", gaps[0], gaps[1], gaps[2], 0.25 * goe),
        t,
    );

    // 8
    let t = Instant::now();
    let gue = smooth.sigma2_gue();
    let gaps: Vec<f64> = [7.0, 9.0, 11.0].iter().map(|&l| averaged_gap(octagon, &flux_pi2(), &smooth, l, gue)).collect();
    rep.line(
        8,
        "GUE under flux",
        gaps[2] <= 0.25 * gue,
        format!("gaps at L=7,9,11: {:.4} {:.4} {:.4}, bound {:.4}", gaps[0], gaps[1], gaps[2], 0.25 * gue),
        t,
    );

    // 9
    let t = Instant::now();
    let l = 5.0;
    let y = 8.0;
    let lens: Vec<f64> = octagon.p0().iter().filter(|r| r.ell_sharp < l).map(|r| r.ell_sharp).collect();
    let lens = distinct_lengths(&lens, 1e-9);
    let table = CoefficientTable::build(octagon, &Character::Trivial, &smooth, 0.0, l).unwrap();
    let sbar = table.smooth_part();
    let slack = 3.0 / y * sbar;
    let m = 100.0;
    let plus = dirichlet_lambda_search(&lens, y, m, f64::INFINITY, SearchMode::Plus);
    let dual = dirichlet_lambda_search(&lens, y, m, f64::INFINITY, SearchMode::Dual);
    let (plus_ok, plus_txt) = match plus {
        Ok(lam) => {
            let v = table.sigma2_at(lam);
            (v >= 1.5 * sbar - slack, format!("lambda+ {lam:.3}: {v:.4} vs >= {:.4}", 1.5 * sbar - slack))
        }
        Err(e) => (false, format!("lambda+: {e}")),
    };
    let (dual_ok, dual_txt) = match dual {
        Ok(lam) => {
            let v = table.sigma2_at(lam);
            (v <= 0.5 * sbar + slack, format!("lambda- {lam:.3}: {v:.4} vs <= {:.4}", 0.5 * sbar + slack))
        }
        Err(e) => (false, format!("lambda-: {e}")),
    };
    rep.line(
        9,
        "oscillation extremes",
        plus_ok && dual_ok,
        format!("{} distinct lengths {lens:.4?}; {plus_txt}; {dual_txt}", lens.len()),
        t,
    );

    // 10
    let t = Instant::now();
    let l = 10.0;
    let table = CoefficientTable::build(octagon, &Character::Trivial, &smooth, LAMBDA, l).unwrap();
    let mut lam = LAMBDA;
    while table.sigma2_at(lam) < clt_margin(l) {
        lam += 0.01;
    }
    let sur = PoissonSurrogate::new(octagon, &Character::Trivial, &smooth, lam, l, 5).unwrap();
    let c = clt_test(&sur, 100_000).unwrap();
    rep.line(
        10,
        "Poisson CLT",
        c.ks_distance <= 0.02 && c.skewness_pass && c.kurtosis_pass,
        format!(
            "lambda {lam:.2}, sigma2 {:.4}, KS {:.4}, skew {:.4}±{:.4} (target {:.4}), kurt {:.4}±{:.4} (target {:.4})",
            c.sigma2,
            c.ks_distance,
            c.moments.skewness.value,
            c.moments.skewness.se,
            c.skewness_target,
            c.moments.excess_kurtosis.value,
            c.moments.excess_kurtosis.se,
            c.kurtosis_target
        ),
        t,
    );

    // 11
    let t = Instant::now();
    let eps50 = ergodicity_min_epsilon(l, 50.0);
    let head = ergodicity_experiment(&sur, 50.0, None, 1000, eps50, goe).unwrap();
    let eps_fixed = ergodicity_min_epsilon(l, 25.0);
    let trend: Vec<f64> = [25.0, 50.0, 100.0]
        .iter()
        .map(|&bl| ergodicity_experiment(&sur, bl, None, 1000, eps_fixed, goe).unwrap().violation_fraction.value)
        .collect();
    rep.line(
        11,
        "ergodicity",
        head.violation_fraction.value <= 0.1 && strictly_decreasing(&trend),
        format!(
            "Lambda=50 eps {eps50:.3}: fraction {:.3}; eps {eps_fixed:.3} at Lambda=25,50,100: {:.3} {:.3} {:.3}",
            head.violation_fraction.value, trend[0], trend[1], trend[2]
        ),
        t,
    );

    // 12
    let t = Instant::now();
    let phi = BumpFn::sum_rule_default();
    let sr: Vec<_> =
        [8.0, 9.0, 10.0, 11.0].iter().map(|&l| sum_rule_check(octagon, &phi, l, &Character::Trivial).unwrap()).collect();
    let gaps: Vec<f64> = sr.iter().map(|r| r.gap).collect();
    let cl = cluster_sum(octagon, &BumpFn::unit(), 9.0).unwrap();
    let last = sr.last().unwrap();
    rep.line(
        12,
        "sum rule and clusters",
        last.gap <= 0.2 * last.target && strictly_decreasing(&gaps) && (cl.value - cl.integral).abs() <= 0.25 * cl.integral,
        format!("sum-rule gaps at L=8..11: {gaps:.4?} (target {:.1}); cluster at T=9: {:.4}", last.target, cl.value),
        t,
    );

    // 13
    let t = Instant::now();
    let e1 = [1.0, 0.0, 0.0, 0.0];
    let var = variance_estimator(octagon, &e1, 9.0, 1.0).unwrap();
    let ends = transition_curve(&smooth, var.value, &[0.0, 1e4]).unwrap();
    let ends_ok = (ends.sigma2[0] - goe).abs() <= 1e-10 && (ends.sigma2[1] - gue).abs() <= 1e-6;
    let cmp = empirical_transition(octagon, &e1, &default_s_grid(), &smooth, LAMBDA, 10.0, 2.0, var).unwrap();
    let band = 0.1 * goe;
    let emp: Vec<f64> = cmp.points.iter().map(|p| p.sigma2_emp).collect();
    let mono = emp.windows(2).all(|p| p[1] <= p[0] + band);
    let bracket = emp.iter().all(|v| *v >= gue - band && *v <= goe + band);
    rep.line(
        13,
        "GOE to GUE transition",
        ends_ok && mono && bracket,
        format!(
            "curve ends {:.6} {:.6}; empirical at s=0,0.5,1,2,4: {emp:.4?}; predicted {:.4?}",
            ends.sigma2[0],
            ends.sigma2[1],
            cmp.points.iter().map(|p| p.sigma2_pred).collect::<Vec<_>>()
        ),
        t,
    );

    // 14
    let t = Instant::now();
    let o = orbit_clt_experiment(octagon, &e1, 9.0, 100_000, 3).unwrap();
    rep.line(
        14,
        "orbit CLT",
        o.moments.skewness.value.abs() <= 0.15 && o.moments.excess_kurtosis.value.abs() <= 0.3 && o.variance_match,
        format!(
            "skew {:.4}, excess kurtosis {:.4}, variance {:.4}±{:.4} vs estimator {:.4}±{:.4}",
            o.moments.skewness.value,
            o.moments.excess_kurtosis.value,
            o.moments.variance.value,
            o.moments.variance.se,
            o.estimator.value,
            o.estimator.se
        ),
        t,
    );

    let _ = Word::empty();
    println!("acceptance: {}/{} PASS", rep.passed, rep.total);
}
