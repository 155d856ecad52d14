//! Presets, holonomy and complete length spectra.

mod dirichlet;
mod io;
mod pingpong;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{Mat2, Mink};
use crate::words::{abelianize, canonical_class, ConjugacyClass, GroupPreset, Letter, Word};

pub use dirichlet::DirichletDomain;
pub use io::{read_spectrum_csv, write_spectrum_csv};

#[derive(Clone, Debug)]
pub(crate) enum Geometry {
    /// Free group with ping-pong half-planes indexed by `letter_rank`.
    PingPong { normals: Vec<Mink>, base: Mink, core_radius: f64 },
    Surface { base: Mink },
}

#[derive(Clone, Debug)]
pub struct FuchsianGroup {
    pub name: String,
    pub preset: GroupPreset,
    pub generators: Vec<Mat2>,
    pub compact: bool,
    pub warning: Option<String>,
    pub(crate) geometry: Geometry,
}

/// Dirichlet base point for the octagon, away from every symmetry axis.
pub fn octagon_base_point() -> Mink {
    crate::hyperbolic::orbit_point(&(Mat2::rot(0.61) * Mat2::lift(0.137)))
}

impl FuchsianGroup {
    /// Parse `schottky_pants(l1,l2,l3)`, `octagon_genus2` or `punctured_torus`.
    pub fn preset(name: &str) -> Result<Self> {
        let s: String = name.chars().filter(|c| !c.is_whitespace()).collect();
        match s.as_str() {
            "octagon_genus2" | "octagon" => Ok(Self::octagon_genus2()),
            "punctured_torus" => Ok(Self::punctured_torus()),
            _ => {
                let inner = s
                    .strip_prefix("schottky_pants")
                    .map(|r| r.trim_start_matches('(').trim_end_matches(')'))
                    .ok_or_else(|| Error::InvalidParameters(format!("unknown preset '{name}'")))?;
                if inner.is_empty() {
                    return Self::schottky_pants(2.0, 2.0, 2.0);
                }
                let v: Vec<f64> = inner
                    .split(',')
                    .map(|x| x.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::InvalidParameters(format!("bad boundary lengths in '{name}'")))?;
                if v.len() != 3 {
                    return Err(Error::InvalidParameters("schottky_pants takes three lengths".into()));
                }
                Self::schottky_pants(v[0], v[1], v[2])
            }
        }
    }

    /// Pair of pants with boundary lengths (l1, l2, l3): the boundaries are A, B and A⁻¹B.
    pub fn schottky_pants(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        if !(l1 > 0.0 && l2 > 0.0 && l3 > 0.0) || ![l1, l2, l3].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "boundary lengths must be positive, got ({l1}, {l2}, {l3})"
            )));
        }
        // Three pairwise ultraparallel geodesics at distances l/2; the group is
        // the orientation-preserving half of their reflection group.
        let (d12, d23, d13) = (l1 / 2.0, l2 / 2.0, l3 / 2.0);
        let e = d12.exp();
        let r = (e * e - 1.0) / (2.0 * (d13.cosh() + e * d23.cosh()));
        let c = (1.0 + 2.0 * r * d13.cosh() + r * r).sqrt();
        let refl_circle = |c: f64, r: f64| Mat2::new(c / r, (r * r - c * c) / r, 1.0 / r, -c / r);
        let m1 = refl_circle(0.0, 1.0);
        let m2 = refl_circle(0.0, e);
        let m3 = refl_circle(c, r);
        let a = m2 * m1;
        let b = m2 * m3;

        let n1 = Mink::semicircle(0.0, 1.0);
        let n2 = Mink::semicircle(0.0, e);
        let n3 = Mink::semicircle(c, r);
        let reflect2 = |x: Mink| crate::hyperbolic::reflect(&x, &n2);
        // H_A = r2(inside G1), H_A⁻¹ = inside G1, H_B = r2(inside G3), H_B⁻¹ = inside G3
        let normals = vec![reflect2(-n1), -n1, reflect2(-n3), -n3];

        let foot = |na: &Mink, nb: &Mink| {
            let perp = na.cross(nb);
            na.cross(&perp).normalize_point()
        };
        let f12_2 = foot(&n2, &n1);
        let f23_2 = foot(&n2, &n3);
        let verts = [foot(&n1, &n2), f12_2, f23_2, foot(&n3, &n2), foot(&n1, &n3), foot(&n3, &n1)];
        let base = (f12_2 + f23_2).normalize_point();
        let core_radius = verts
            .iter()
            .map(|v| crate::hyperbolic::distance(&base, v))
            .fold(0.0, f64::max);

        Ok(FuchsianGroup {
            name: format!("schottky_pants({l1},{l2},{l3})"),
            preset: GroupPreset::free(2),
            generators: vec![a, b],
            compact: false,
            warning: None,
            geometry: Geometry::PingPong { normals, base, core_radius },
        })
    }

    /// Regular octagon with vertex angles π/4, sides paired by a1 b1 A1 B1 a2 b2 A2 B2.
    pub fn octagon_genus2() -> Self {
        let din = (1.0 + std::f64::consts::SQRT_2).acosh();
        let th = |j: usize| std::f64::consts::TAU * j as f64 / 8.0;
        let pairing = |i: usize, j: usize| {
            Mat2::rot(th(i)) * Mat2::lift(2.0 * din) * Mat2::rot(std::f64::consts::PI) * Mat2::rot(-th(j))
        };
        let generators = vec![pairing(0, 2), pairing(3, 1), pairing(4, 6), pairing(7, 5)];
        FuchsianGroup {
            name: "octagon_genus2".into(),
            preset: GroupPreset::surface(2),
            generators,
            compact: true,
            warning: None,
            geometry: Geometry::Surface { base: octagon_base_point() },
        }
    }

    /// Once-punctured torus with A = [[1,1],[1,2]], B = [[2,1],[1,1]].
    pub fn punctured_torus() -> Self {
        let a = Mat2::new(1.0, 1.0, 1.0, 2.0);
        let b = Mat2::new(2.0, 1.0, 1.0, 1.0);
        let normals = vec![
            -Mink::semicircle(0.5, 0.5),
            Mink::vertical(-1.0),
            -Mink::vertical(1.0),
            -Mink::semicircle(-0.5, 0.5),
        ];
        let base = Mink::from_upper(0.0, 0.75);
        // K lies in {|x| <= 1, 1/2 <= y <= 1}; distance is maximal at a corner
        let core_radius = [Mink::from_upper(1.0, 0.5), Mink::from_upper(1.0, 1.0)]
            .iter()
            .map(|v| crate::hyperbolic::distance(&base, v))
            .fold(0.0, f64::max);
        FuchsianGroup {
            name: "punctured_torus".into(),
            preset: GroupPreset::free(2),
            generators: vec![a, b],
            compact: false,
            warning: Some(
                "punctured_torus is not co-compact; sum-rule constants are not guaranteed".into(),
            ),
            geometry: Geometry::PingPong { normals, base, core_radius },
        }
    }

    pub fn is_surface(&self) -> bool {
        self.preset.is_surface()
    }

    /// Same group with a different Dirichlet base point (surface presets only).
    pub fn with_base_point(&self, base: Mink) -> Result<Self> {
        match self.geometry {
            Geometry::Surface { .. } => {
                Ok(FuchsianGroup { geometry: Geometry::Surface { base }, ..self.clone() })
            }
            Geometry::PingPong { .. } => {
                Err(Error::InvalidParameters("base point is fixed for free presets".into()))
            }
        }
    }

    pub fn generator(&self, x: Letter) -> Mat2 {
        let g = self.generators[x.unsigned_abs() as usize - 1];
        if x > 0 { g } else { g.inv() }
    }

    pub fn holonomy(&self, w: &Word) -> Mat2 {
        w.0.iter().fold(Mat2::I, |acc, &x| acc * self.generator(x))
    }

    /// Max deviation of the relator holonomy from ±I (0 for free presets).
    pub fn relator_defect(&self) -> f64 {
        if self.preset.relator.is_empty() {
            return 0.0;
        }
        let r = self.holonomy(&Word(self.preset.relator.clone()));
        r.max_abs_diff(&Mat2::I).min(r.max_abs_diff(&Mat2::I.scale(-1.0)))
    }
}

pub fn length_of(trace: f64) -> Result<f64> {
    let t = trace.abs();
    if !(t > 2.0) {
        return Err(Error::NonHyperbolicElement(t));
    }
    Ok(2.0 * (t / 2.0).acosh())
}

/// |det(I − P_γ)| = 4 sinh²(ℓ/2).
pub fn poincare_det(ell: f64) -> f64 {
    let s = (ell / 2.0).sinh();
    4.0 * s * s
}

/// log(4 sinh²(ℓ/2)) without overflow.
pub fn log_poincare_det(ell: f64) -> f64 {
    ell + 2.0 * (-(-ell).exp()).ln_1p()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeodesicRecord {
    pub class_id: String,
    pub word: ConjugacyClass,
    pub ell: f64,
    pub ell_sharp: f64,
    pub k: usize,
    pub det_iminus_p: f64,
    pub log_det_iminus_p: f64,
    pub homology: Vec<i64>,
}

impl GeodesicRecord {
    pub fn is_primitive(&self) -> bool {
        self.k == 1
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Certificate {
    pub method: String,
    /// Orbit radius explored around the base point.
    pub radius: f64,
    pub max_word_len: usize,
    /// Empirical bounds c1·|w| ≤ ℓ ≤ c2·|w| over the primitive classes found.
    pub c1: f64,
    pub c2: f64,
    pub nodes_visited: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LengthSpectrum {
    pub preset_name: String,
    pub preset: GroupPreset,
    pub records: Vec<GeodesicRecord>,
    pub lmax: f64,
    pub oriented: bool,
    pub certificate: Certificate,
    /// Distinct classes sharing a canonical word (should be empty).
    pub collisions: Vec<String>,
}

impl LengthSpectrum {
    pub fn primitives(&self) -> impl Iterator<Item = &GeodesicRecord> {
        self.records.iter().filter(|r| r.k == 1)
    }

    /// One primitive record per unoriented class.
    pub fn p0(&self) -> Vec<&GeodesicRecord> {
        self.primitives()
            .filter(|r| !self.oriented || r.word.canonical <= r.word.partner)
            .collect()
    }

    pub fn require(&self, l: f64) -> Result<()> {
        if self.lmax + 1e-12 < l {
            return Err(Error::SpectrumTooShort { have: self.lmax, need: l });
        }
        Ok(())
    }

    /// Restrict to ℓ ≤ l.
    pub fn truncated(&self, l: f64) -> LengthSpectrum {
        let mut s = self.clone();
        s.records.retain(|r| r.ell <= l);
        s.lmax = l.min(self.lmax);
        s
    }

    /// Groups of primitive records whose lengths agree within `tol`.
    pub fn multiplicities(&self, tol: f64) -> Vec<Vec<String>> {
        let prims: Vec<&GeodesicRecord> = self.primitives().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < prims.len() {
            let mut j = i + 1;
            while j < prims.len() && prims[j].ell - prims[j - 1].ell <= tol {
                j += 1;
            }
            if j - i > 1 {
                out.push(prims[i..j].iter().map(|r| r.class_id.clone()).collect());
            }
            i = j;
        }
        out
    }

    /// Σ ℓ^n e^{−sℓ}/|I−P| over all records.
    pub fn tail_sum(&self, n: i32, s: f64) -> f64 {
        crate::stats::kahan_sum(
            self.records
                .iter()
                .map(|r| (r.ell.powi(n).ln() - s * r.ell - r.log_det_iminus_p).exp()),
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnosovReport {
    pub checked: usize,
    pub failures: Vec<String>,
    /// min over power records of log|I−P_{γ^k}| − (k−1)ℓ♯ − log|I−P_γ|.
    pub min_margin: f64,
}

pub fn anosov_power_check(spec: &LengthSpectrum) -> AnosovReport {
    let mut failures = Vec::new();
    let mut min_margin = f64::INFINITY;
    for r in &spec.records {
        let base = log_poincare_det(r.ell_sharp);
        let margin = r.log_det_iminus_p - (r.k as f64 - 1.0) * r.ell_sharp - base;
        min_margin = min_margin.min(margin);
        let lhs = r.det_iminus_p;
        let rhs = ((r.k as f64 - 1.0) * r.ell_sharp).exp() * poincare_det(r.ell_sharp);
        if lhs < rhs * (1.0 - 1e-14) {
            failures.push(r.class_id.clone());
        }
    }
    AnosovReport { checked: spec.records.len(), failures, min_margin }
}

/// A primitive class found by a geometric enumerator.
pub(crate) struct FoundClass {
    pub word: Word,
    pub ell: f64,
    /// Geometric identity of the oriented class and of its inverse.
    pub key: Vec<i16>,
    pub partner_key: Vec<i16>,
}

pub(crate) struct EnumOutput {
    pub classes: Vec<FoundClass>,
    pub certificate: Certificate,
}

fn make_record(
    preset: &GroupPreset,
    word: &Word,
    ell_sharp: f64,
    k: usize,
    homology: &[i64],
) -> Result<GeodesicRecord> {
    let class = canonical_class(&word.pow(k), preset)?;
    let ell = k as f64 * ell_sharp;
    Ok(GeodesicRecord {
        class_id: preset.format_word(&class.canonical),
        word: class,
        ell,
        ell_sharp,
        k,
        det_iminus_p: poincare_det(ell),
        log_det_iminus_p: log_poincare_det(ell),
        homology: homology.iter().map(|h| h * k as i64).collect(),
    })
}

pub fn build_spectrum(g: &FuchsianGroup, lmax: f64, oriented: bool) -> Result<LengthSpectrum> {
    if !(lmax > 0.0) || !lmax.is_finite() {
        return Err(Error::InvalidParameters(format!("Lmax must be positive, got {lmax}")));
    }
    let out = match &g.geometry {
        Geometry::PingPong { normals, base, core_radius } => {
            pingpong::enumerate(g, normals, base, *core_radius, lmax)?
        }
        Geometry::Surface { base } => {
            let dom = DirichletDomain::new(g, *base)?;
            dirichlet::enumerate(g, &dom, lmax)?
        }
    };

    let mut all: BTreeMap<Vec<i16>, (Word, f64, Vec<i16>)> = BTreeMap::new();
    for f in out.classes {
        if f.ell <= lmax {
            all.entry(f.key).or_insert((f.word, f.ell, f.partner_key));
        }
    }

    let mut records = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut collisions = Vec::new();
    for (key, (word, ell, pkey)) in &all {
        if !oriented && pkey < key {
            continue;
        }
        let partner_word = &all
            .get(pkey)
            .ok_or_else(|| Error::IncompleteEnumeration {
                lmax,
                reason: "inverse class missing from enumeration".into(),
            })?
            .0;
        let h = abelianize(word, &g.preset);
        let mut k = 1;
        while k as f64 * ell <= lmax {
            let mut rec = make_record(&g.preset, word, *ell, k, &h)?;
            // the partner is the canonical word of the inverse record itself
            rec.word.partner = canonical_class(&partner_word.pow(k), &g.preset)?.canonical;
            if k == 1 {
                let n = seen.entry(rec.class_id.clone()).or_insert(0);
                *n += 1;
                if *n == 2 {
                    collisions.push(rec.class_id.clone());
                }
            }
            records.push(rec);
            k += 1;
        }
    }
    records.sort_by(|a, b| a.ell.total_cmp(&b.ell).then_with(|| a.class_id.cmp(&b.class_id)));

    Ok(LengthSpectrum {
        preset_name: g.name.clone(),
        preset: g.preset.clone(),
        records,
        lmax,
        oriented,
        certificate: out.certificate,
        collisions,
    })
}

pub(crate) fn word_ratio_bounds(classes: &[FoundClass]) -> (f64, f64, usize) {
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    let mut maxlen = 0;
    for c in classes {
        let n = c.word.len().max(1);
        maxlen = maxlen.max(n);
        c1 = c1.min(c.ell / n as f64);
        c2 = c2.max(c.ell / n as f64);
    }
    if classes.is_empty() {
        c1 = 0.0;
    }
    (c1, c2, maxlen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{reduce, GroupKind};

    #[test]
    fn length_and_det_examples() {
        assert!((length_of(2.5).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((length_of(-2.5).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!(matches!(length_of(2.0), Err(Error::NonHyperbolicElement(_))));
        assert!((length_of(2.0 * 3f64.cosh()).unwrap() - 6.0).abs() < 1e-12);
        assert!((poincare_det(2.0 * 2f64.ln()) - 2.25).abs() < 1e-12);
        assert!((poincare_det(2.0) - 5.524391382167263).abs() < 1e-12);
        assert!((poincare_det(1e-4) / 1e-8 - 1.0).abs() < 1e-6);
        for l in [0.1, 1.0, 7.0, 30.0] {
            assert!((log_poincare_det(l) - poincare_det(l).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn schottky_traces() {
        let g = FuchsianGroup::schottky_pants(2.0, 2.0, 2.0).unwrap();
        for m in &g.generators {
            assert!((m.det() - 1.0).abs() < 1e-12);
            assert!((m.trace().abs() - 2.0 * 1f64.cosh()).abs() < 1e-12);
        }
        let g = FuchsianGroup::schottky_pants(1.0, 2.5, 3.0).unwrap();
        let ab = g.holonomy(&Word(vec![-1, 2]));
        assert!((length_of(g.generators[0].trace()).unwrap() - 1.0).abs() < 1e-10);
        assert!((length_of(g.generators[1].trace()).unwrap() - 2.5).abs() < 1e-10);
        assert!((length_of(ab.trace()).unwrap() - 3.0).abs() < 1e-10);
        assert!(FuchsianGroup::schottky_pants(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn octagon_relator() {
        let g = FuchsianGroup::octagon_genus2();
        assert!(g.relator_defect() < 1e-10);
        for m in &g.generators {
            assert!((m.det() - 1.0).abs() < 1e-12);
        }
        assert_eq!(g.preset.kind, GroupKind::Surface { genus: 2 });
    }

    #[test]
    fn punctured_torus_commutator() {
        let g = FuchsianGroup::punctured_torus();
        let c = g.holonomy(&Word(vec![1, 2, -1, -2]));
        assert!((c.trace() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn pingpong_halfplanes_are_mapped() {
        for g in [FuchsianGroup::punctured_torus(), FuchsianGroup::schottky_pants(2.0, 2.0, 2.0).unwrap()] {
            let Geometry::PingPong { normals, base, .. } = &g.geometry else { panic!() };
            for n in normals {
                assert!((n.norm2() + 1.0).abs() < 1e-9);
                assert!(base.dot(n) < 0.0);
            }
            // x maps the complement of H_{x⁻¹} into H_x
            for x in [1i8, -1, 2, -2] {
                let nx = normals[crate::words::letter_rank(x) as usize];
                let ninv = normals[crate::words::letter_rank(-x) as usize];
                let m = g.generator(x);
                for i in 0..200 {
                    let t = i as f64 * 0.37;
                    let p = Mink::from_upper(3.0 * t.sin(), 0.05 + (t * 1.7).cos().abs() * 2.0);
                    if p.dot(&ninv) < -1e-9 {
                        assert!(crate::hyperbolic::act(&m, &p).dot(&nx) > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn holonomy_basics() {
        let g = FuchsianGroup::octagon_genus2();
        assert_eq!(g.holonomy(&Word::empty()), Mat2::I);
        let w = Word(vec![1, 2, -3, 4, 4]);
        let u = Word(vec![2, 3]);
        let p = g.holonomy(&w.concat(&w.inverse()));
        assert!(p.max_abs_diff(&Mat2::I) < 1e-10);
        let conj = reduce(&u.concat(&w).concat(&u.inverse()));
        assert!((g.holonomy(&conj).trace() - g.holonomy(&w).trace()).abs() < 1e-9);
    }

    #[test]
    fn anosov_examples() {
        let lhs = poincare_det(4.0) / poincare_det(2.0);
        assert!(lhs >= 2f64.exp());
    }

    #[test]
    fn preset_parsing() {
        assert!(FuchsianGroup::preset("schottky_pants(2, 2, 2)").is_ok());
        assert!(FuchsianGroup::preset("octagon_genus2").is_ok());
        assert!(FuchsianGroup::preset("punctured_torus").unwrap().warning.is_some());
        assert!(FuchsianGroup::preset("torus").is_err());
        assert!(FuchsianGroup::preset("schottky_pants(2,-1,2)").is_err());
    }
}
