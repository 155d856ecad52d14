use hypspec::fuchsian::{build_spectrum, octagon_base_point, read_spectrum_csv, write_spectrum_csv, FuchsianGroup};
use hypspec::hyperbolic::{orbit_point, Mat2};

fn lengths(g: &FuchsianGroup, l: f64) -> Vec<f64> {
    build_spectrum(g, l, true).unwrap().primitives().map(|r| r.ell).collect()
}

#[test]
fn octagon_lengths_do_not_depend_on_base_point() {
    let g = FuchsianGroup::octagon_genus2();
    let a = lengths(&g, 6.0);
    let other = orbit_point(&(Mat2::rot(1.9) * Mat2::lift(0.071)));
    assert_ne!(other, octagon_base_point());
    let b = lengths(&g.with_base_point(other).unwrap(), 6.0);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
}

#[test]
fn octagon_systole() {
    // Generators of the regular octagon: cosh(ℓ/2) = 1 + 1/√2.
    let s = build_spectrum(&FuchsianGroup::octagon_genus2(), 3.0, true).unwrap();
    let sys = s.primitives().map(|r| r.ell).fold(f64::INFINITY, f64::min);
    assert!((sys - 2.0 * (1.0 + 0.5f64.sqrt()).acosh()).abs() < 1e-10);
}

#[test]
fn prime_geodesic_count_grows_like_exp_over_l() {
    let s = build_spectrum(&FuchsianGroup::octagon_genus2(), 10.0, false).unwrap();
    let n = |l: f64| s.primitives().filter(|r| r.ell <= l).count() as f64;
    let li = |l: f64| l.exp() / l;
    let r8 = n(8.0) / li(8.0);
    let r10 = n(10.0) / li(10.0);
    assert!(r8 > 0.5 && r8 < 2.0, "{r8}");
    assert!(r10 > 0.5 && r10 < 2.0, "{r10}");
}

#[test]
fn schottky_boundary_lengths() {
    let s = build_spectrum(&FuchsianGroup::preset("schottky_pants(2,2,2)").unwrap(), 3.0, false).unwrap();
    let short: Vec<f64> = s.primitives().map(|r| r.ell).filter(|&l| l < 2.5).collect();
    assert_eq!(short.len(), 3);
    assert!(short.iter().all(|l| (l - 2.0).abs() < 1e-10));
}

#[test]
fn holonomy_traces_give_lengths() {
    for name in ["octagon_genus2", "punctured_torus", "schottky_pants(1,2,3)"] {
        let g = FuchsianGroup::preset(name).unwrap();
        let s = build_spectrum(&g, 7.0, true).unwrap();
        for r in &s.records {
            let tr = g.holonomy(&r.word.canonical).trace().abs();
            assert!(((tr / 2.0).acosh() * 2.0 - r.ell).abs() < 1e-9, "{name} {}", r.class_id);
        }
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let s = build_spectrum(&FuchsianGroup::punctured_torus(), 6.0, true).unwrap();
    let mut buf = Vec::new();
    write_spectrum_csv(&s, &mut buf).unwrap();
    let back = read_spectrum_csv(buf.as_slice()).unwrap();
    assert_eq!(s, back);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.csv");
    std::fs::write(&path, &buf).unwrap();
    let again = read_spectrum_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(again, s);
}

#[test]
fn too_short_spectrum_is_refused() {
    let s = build_spectrum(&FuchsianGroup::octagon_genus2(), 4.0, true).unwrap();
    assert!(s.require(5.0).is_err());
    assert!(build_spectrum(&FuchsianGroup::octagon_genus2(), -1.0, true).is_err());
}
