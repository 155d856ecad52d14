//! Dirichlet domain of a surface group and certified enumeration over the
//! tile tree.
//!
//! Every tile cD ≠ D has a neighbour strictly closer to the base point, so
//! "parent = closest neighbour" makes the tiling a tree rooted at D. All tiles
//! within orbit distance ρ of the base point are visited. A class of length ℓ
//! has a representative whose axis meets D, and that representative moves the
//! base point by at most ℓ + 2R. Among those, exactly one has a cutting
//! sequence that is its own least rotation.

use rayon::prelude::*;

use super::{word_ratio_bounds, Certificate, EnumOutput, FoundClass, FuchsianGroup};
use crate::error::{Error, Result};
use crate::hyperbolic::{act, distance, halfplane_interval, translation_axis, Mat2, Mink, Ray};
use crate::words::{least_rotation, reduce, rotate, word_period, Letter, Word};

#[derive(Clone, Debug)]
pub struct Side {
    pub g: Mat2,
    pub word: Word,
    /// Inward unit normal of the bisector of p and g·p.
    pub normal: Mink,
    pub pair: usize,
    /// g·p
    pub y: Mink,
}

#[derive(Clone, Debug)]
pub struct DirichletDomain {
    pub base: Mink,
    pub sides: Vec<Side>,
    pub vertices: Vec<Mink>,
    pub radius: f64,
}

const CANDIDATE_DEPTH: usize = 4;

fn same_point(a: &Mink, b: &Mink) -> bool {
    let d = (a.t - b.t).abs().max((a.u - b.u).abs()).max((a.v - b.v).abs());
    d < 1e-8 * a.t.max(b.t)
}

impl DirichletDomain {
    pub fn new(group: &FuchsianGroup, base: Mink) -> Result<Self> {
        let m = group.preset.ngens as Letter;
        let letters: Vec<Letter> = (1..=m).flat_map(|i| [i, -i]).collect();

        // all reduced words up to CANDIDATE_DEPTH, deduplicated by orbit point
        let mut cands: Vec<(Word, Mat2, Mink)> = Vec::new();
        let mut layer: Vec<(Word, Mat2)> = vec![(Word::empty(), Mat2::I)];
        for _ in 0..CANDIDATE_DEPTH {
            let mut next = Vec::new();
            for (w, g) in &layer {
                for &x in &letters {
                    if w.0.last() == Some(&-x) {
                        continue;
                    }
                    let mut w2 = w.clone();
                    w2.0.push(x);
                    let g2 = *g * group.generator(x);
                    let y = act(&g2, &base);
                    if same_point(&y, &base) {
                        continue;
                    }
                    if !cands.iter().any(|(_, _, z)| same_point(z, &y)) {
                        cands.push((reduce(&w2), g2, y));
                    }
                    next.push((w2, g2));
                }
            }
            layer = next;
        }
        cands.sort_by(|a, b| a.2.dot(&base).total_cmp(&b.2.dot(&base)));

        // clip the Klein square by bisector half-planes
        let mut poly: Vec<((f64, f64), Option<usize>)> =
            vec![((-1.0, -1.0), None), ((1.0, -1.0), None), ((1.0, 1.0), None), ((-1.0, 1.0), None)];
        for (ci, (_, _, y)) in cands.iter().enumerate() {
            let n = *y - base;
            let f = |k: (f64, f64)| n.t - k.0 * n.u - k.1 * n.v;
            let len = poly.len();
            let mut out = Vec::with_capacity(len + 1);
            for i in 0..len {
                let (cur, lab) = poly[i];
                let nxt = poly[(i + 1) % len].0;
                let (fc, fn_) = (f(cur), f(nxt));
                let cross = |a: (f64, f64), fa: f64, b: (f64, f64), fb: f64| {
                    let tau = fa / (fa - fb);
                    (a.0 + tau * (b.0 - a.0), a.1 + tau * (b.1 - a.1))
                };
                match (fc >= 0.0, fn_ >= 0.0) {
                    (true, true) => out.push((cur, lab)),
                    (true, false) => {
                        out.push((cur, lab));
                        out.push((cross(cur, fc, nxt, fn_), Some(ci)));
                    }
                    (false, true) => out.push((cross(cur, fc, nxt, fn_), lab)),
                    (false, false) => {}
                }
            }
            // drop degenerate edges
            let mut cleaned: Vec<((f64, f64), Option<usize>)> = Vec::with_capacity(out.len());
            for v in out {
                if let Some(last) = cleaned.last() {
                    let d = (v.0 .0 - last.0 .0).hypot(v.0 .1 - last.0 .1);
                    if d < 1e-12 {
                        let l = cleaned.len();
                        cleaned[l - 1].1 = v.1;
                        continue;
                    }
                }
                cleaned.push(v);
            }
            poly = cleaned;
        }

        let mut sides = Vec::with_capacity(poly.len());
        let mut vertices = Vec::with_capacity(poly.len());
        for &((k1, k2), lab) in &poly {
            let r2 = k1 * k1 + k2 * k2;
            let ci = lab.ok_or_else(|| {
                Error::IncompleteEnumeration { lmax: 0.0, reason: "Dirichlet domain is not bounded by the candidate set".into() }
            })?;
            if r2 >= 1.0 - 1e-9 {
                return Err(Error::IncompleteEnumeration {
                    lmax: 0.0,
                    reason: "Dirichlet domain has an ideal vertex".into(),
                });
            }
            let s = 1.0 / (1.0 - r2).sqrt();
            vertices.push(Mink::new(s, s * k1, s * k2));
            let (w, g, y) = &cands[ci];
            sides.push(Side {
                g: *g,
                word: w.clone(),
                normal: (*y - base).normalize_normal(),
                pair: usize::MAX,
                y: *y,
            });
        }
        for i in 0..sides.len() {
            let gi = sides[i].g.inv();
            let yi = act(&gi, &base);
            let j = (0..sides.len())
                .find(|&j| same_point(&sides[j].y, &yi))
                .ok_or_else(|| Error::IncompleteEnumeration {
                    lmax: 0.0,
                    reason: "unpaired Dirichlet side".into(),
                })?;
            sides[i].pair = j;
        }
        let radius = vertices.iter().map(|v| distance(&base, v)).fold(0.0, f64::max);
        Ok(DirichletDomain { base, sides, vertices, radius })
    }

    /// Area from the angle sum (Gauss–Bonnet).
    pub fn area(&self) -> f64 {
        let n = self.sides.len();
        let mut angles = 0.0;
        for i in 0..n {
            // vertex i lies between side i-1 and side i
            let a = &self.sides[(i + n - 1) % n].normal;
            let b = &self.sides[i].normal;
            angles += std::f64::consts::PI - (-a.dot(b)).clamp(-1.0, 1.0).acos();
        }
        (n as f64 - 2.0) * std::f64::consts::PI - angles
    }

    /// Parameter interval of `ray` inside D, with the index of the exit side.
    fn clip(&self, ray: &Ray) -> (f64, f64, usize) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut exit = usize::MAX;
        for (i, s) in self.sides.iter().enumerate() {
            let (a, b) = halfplane_interval(ray, &s.normal);
            lo = lo.max(a);
            if b < hi {
                hi = b;
                exit = i;
            }
        }
        (lo, hi, exit)
    }

    /// Side sequence crossed by the axis from D to h·D, or None if the axis
    /// misses the interior of D or the walk fails.
    fn cutting_sequence(&self, h: &Mat2) -> Option<(Vec<u16>, f64)> {
        let (ray, ell) = translation_axis(h, &self.base);
        let (lo0, hi0, _) = self.clip(&ray);
        if !(hi0 - lo0 > 1e-9) {
            return None;
        }
        let target = lo0 + ell;
        let tol = 1e-8 * h.norm_inf().max(1.0);
        let mut r = ray;
        let mut off = 0.0;
        let mut seq = Vec::new();
        let mut prod = Mat2::I;
        loop {
            let (_, hi, exit) = self.clip(&r);
            if exit == usize::MAX || !hi.is_finite() {
                return None;
            }
            seq.push(exit as u16);
            prod = prod * self.sides[exit].g;
            // the tile entered next is h·D exactly when the product reaches h
            if prod.max_abs_diff(h).min(prod.max_abs_diff(&h.scale(-1.0))) <= tol {
                break;
            }
            if hi + off > target + 0.5 || seq.len() > 100_000 {
                return None;
            }
            r = r.shifted(hi).moved(&self.sides[exit].g.inv());
            off += hi;
        }
        Some((seq, ell))
    }
}

struct Walk<'a> {
    dom: &'a DirichletDomain,
    cosh_rho: f64,
    max_trace: f64,
}

#[derive(Default)]
struct Harvest {
    found: Vec<(Vec<u16>, Mat2)>,
    nodes: u64,
    failed_walks: u64,
}

impl Walk<'_> {
    /// Is h·g_s a tree child of h? Returns the child if so.
    fn child(&self, h: &Mat2, s: usize) -> Option<Mat2> {
        let side = &self.dom.sides[s];
        let c = *h * side.g;
        let z = act(&c.inv(), &self.dom.base);
        if z.dot(&self.dom.base) > self.cosh_rho {
            return None;
        }
        let back = side.pair;
        let vb = z.dot(&self.dom.sides[back].y);
        for (t, other) in self.dom.sides.iter().enumerate() {
            if t == back {
                continue;
            }
            let vt = z.dot(&other.y);
            let tol = 1e-12 * vb.abs().max(vt.abs());
            if vt < vb - tol || (vt <= vb + tol && t < back) {
                return None;
            }
        }
        Some(c)
    }

    fn visit(&self, h: &Mat2, out: &mut Harvest) {
        out.nodes += 1;
        let tr = h.trace().abs();
        if tr <= 2.0 + 1e-12 || tr > self.max_trace {
            return;
        }
        match self.dom.cutting_sequence(h) {
            None => {
                // axis misses D, or a failed walk; distinguish by re-checking
                let (ray, _) = translation_axis(h, &self.dom.base);
                let (lo, hi, _) = self.dom.clip(&ray);
                if hi - lo > 1e-9 {
                    out.failed_walks += 1;
                }
            }
            Some((seq, _)) => {
                if word_period(&seq) != seq.len() {
                    return;
                }
                if least_rotation(&seq) == 0 {
                    out.found.push((seq, *h));
                }
            }
        }
    }

    fn subtree(&self, root: Mat2, root_in: usize, out: &mut Harvest) {
        let mut stack = vec![(root, root_in)];
        while let Some((h, came)) = stack.pop() {
            self.visit(&h, out);
            for s in 0..self.dom.sides.len() {
                if s == self.dom.sides[came].pair {
                    continue;
                }
                if let Some(c) = self.child(&h, s) {
                    stack.push((c, s));
                }
            }
        }
    }
}

pub(crate) fn enumerate(group: &FuchsianGroup, dom: &DirichletDomain, lmax: f64) -> Result<EnumOutput> {
    let rho = lmax + 2.0 * dom.radius + 0.01;
    let walk = Walk { dom, cosh_rho: rho.cosh(), max_trace: 2.0 * (lmax / 2.0 + 1e-9).cosh() };

    // shallow levels sequentially, then subtrees in parallel
    let mut top = Harvest::default();
    walk.visit(&Mat2::I, &mut top);
    let mut frontier: Vec<(Mat2, usize)> = Vec::new();
    for s in 0..dom.sides.len() {
        if let Some(c) = walk.child(&Mat2::I, s) {
            frontier.push((c, s));
        }
    }
    for _ in 0..2 {
        let mut next = Vec::new();
        for (h, came) in &frontier {
            walk.visit(h, &mut top);
            for s in 0..dom.sides.len() {
                if s == dom.sides[*came].pair {
                    continue;
                }
                if let Some(c) = walk.child(h, s) {
                    next.push((c, s));
                }
            }
        }
        frontier = next;
    }
    let parts: Vec<Harvest> = frontier
        .par_iter()
        .map(|(h, came)| {
            let mut hv = Harvest::default();
            walk.subtree(*h, *came, &mut hv);
            hv
        })
        .collect();
    for p in parts {
        top.found.extend(p.found);
        top.nodes += p.nodes;
        top.failed_walks += p.failed_walks;
    }
    if top.failed_walks > 0 {
        return Err(Error::IncompleteEnumeration {
            lmax,
            reason: format!("{} cutting-sequence walks failed", top.failed_walks),
        });
    }

    let npairs = dom.sides.len();
    let classes: Vec<FoundClass> = top
        .found
        .into_iter()
        .map(|(seq, h)| {
            let ell = 2.0 * (h.trace().abs() / 2.0).acosh();
            let mut letters = Vec::new();
            for &s in &seq {
                letters.extend_from_slice(&dom.sides[s as usize].word.0);
            }
            let inv: Vec<u16> = seq.iter().rev().map(|&s| dom.sides[s as usize].pair as u16).collect();
            let inv = rotate(&inv, least_rotation(&inv));
            debug_assert!(npairs < i16::MAX as usize);
            FoundClass {
                word: reduce(&Word(letters)),
                ell,
                key: seq.iter().map(|&s| s as i16).collect(),
                partner_key: inv.iter().map(|&s| s as i16).collect(),
            }
        })
        .collect();
    let (c1, c2, max_word_len) = word_ratio_bounds(&classes);
    let _ = group;
    Ok(EnumOutput {
        classes,
        certificate: Certificate {
            method: "dirichlet_tile_tree".into(),
            radius: rho,
            max_word_len,
            c1,
            c2,
            nodes_visited: top.nodes,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::octagon_base_point;

    #[test]
    fn octagon_domain_has_area_4pi() {
        let g = FuchsianGroup::octagon_genus2();
        let d = DirichletDomain::new(&g, octagon_base_point()).unwrap();
        assert!(d.sides.len() % 2 == 0);
        for (i, s) in d.sides.iter().enumerate() {
            assert_eq!(d.sides[s.pair].pair, i);
            assert_ne!(s.pair, i);
        }
        assert!((d.area() - 4.0 * std::f64::consts::PI).abs() < 1e-8, "area {}", d.area());
    }
}
