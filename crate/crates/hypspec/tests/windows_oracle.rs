use hypspec::windows::{integrate, Window};

// 20-point Gauss–Legendre on each of 64 panels, independent of the adaptive rule.
fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 10] = [
        0.0765265211334973,
        0.2277858511416451,
        0.3737060887154195,
        0.5108670019508271,
        0.6360536807265150,
        0.7463319064601508,
        0.8391169718222188,
        0.9122344282513259,
        0.9639719272779138,
        0.9931285991850949,
    ];
    const W: [f64; 10] = [
        0.1527533871307258,
        0.1491729864726037,
        0.1420961093183820,
        0.1316886384491766,
        0.1181945319615184,
        0.1019301198172404,
        0.0832767415767048,
        0.0626720483341091,
        0.0406014298003869,
        0.0176140071391521,
    ];
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let c = a + (p as f64 + 0.5) * h;
            X.iter().zip(W).map(|(x, w)| w * (f(c - 0.5 * h * x) + f(c + 0.5 * h * x))).sum::<f64>() * 0.5 * h
        })
        .sum()
}

#[test]
fn triangle_constants_are_exact() {
    let w = Window::triangle();
    assert!((w.sigma2_goe() - 1.0 / 3.0).abs() < 1e-12);
    assert!((w.sigma2_gue() - 1.0 / 6.0).abs() < 1e-12);
    assert!((w.sigma2_gse() - 1.0 / 12.0).abs() < 1e-12);
}

#[test]
fn bump_constant_matches_gauss_legendre() {
    let w = Window::bump();
    let oracle = 4.0 * gauss_legendre(|t| t * w.psi_hat(t).powi(2), 0.0, 1.0);
    assert!((w.sigma2_goe() - oracle).abs() < 1e-10, "{} vs {oracle}", w.sigma2_goe());
}

#[test]
fn scaling_is_quadratic() {
    let w = Window::bump();
    assert!((w.scaled(3.0).sigma2_goe() - 9.0 * w.sigma2_goe()).abs() < 1e-9);
}

#[test]
fn adaptive_rule_handles_polynomials() {
    assert!((integrate(|x| x.powi(5), 0.0, 2.0, 1e-12) - 64.0 / 6.0).abs() < 1e-10);
    assert!((integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12) - 2.0).abs() < 1e-10);
}

#[test]
fn unknown_window_is_rejected() {
    assert!(Window::parse("gaussian").is_err());
    assert_eq!(Window::parse("smooth_bump").unwrap().name(), "bump");
}
