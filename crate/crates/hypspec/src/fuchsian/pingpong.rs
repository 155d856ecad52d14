//! Certified enumeration for free presets with a ping-pong structure.
//!
//! Region(x1..xn) = x1..x(n-1)·H_xn contains the orbit of the fundamental
//! domain under every word extending x1..xn, and regions are nested along a
//! word. A class of length ℓ is represented by a cyclically reduced word whose
//! axis crosses the fundamental domain inside the compact core, so its region
//! lies within ℓ + R of the base point. Pruning regions farther than ρ from
//! the base point therefore loses nothing.

use std::collections::HashSet;

use rayon::prelude::*;

use super::{word_ratio_bounds, Certificate, EnumOutput, FoundClass, FuchsianGroup};
use crate::error::Result;
use crate::hyperbolic::{act, Mat2, Mink};
use crate::words::{least_rotation, letter_rank, rotate, word_period, Letter, Word};

struct Frame {
    g: Mat2,
    x: Letter,
    next: u8,
}

struct Search<'a> {
    group: &'a FuchsianGroup,
    normals: &'a [Mink],
    base: Mink,
    sinh_rho: f64,
    max_trace: f64,
    letters: Vec<Letter>,
}

#[derive(Default)]
struct Harvest {
    keys: HashSet<Vec<Letter>>,
    found: Vec<(Vec<Letter>, f64)>,
    nodes: u64,
    depth: usize,
}

impl Search<'_> {
    fn admissible(&self, prefix: &Mat2, y: Letter) -> bool {
        let region = act(prefix, &self.normals[letter_rank(y) as usize]);
        -region.dot(&self.base) <= self.sinh_rho
    }

    fn visit(&self, path: &[Letter], g: &Mat2, out: &mut Harvest) {
        out.nodes += 1;
        out.depth = out.depth.max(path.len());
        if path[0] == -path[path.len() - 1] {
            return;
        }
        let tr = g.trace().abs();
        if tr <= 2.0 + 1e-12 || tr > self.max_trace {
            return;
        }
        if word_period(path) != path.len() {
            return;
        }
        let ranks: Vec<u8> = path.iter().map(|&x| letter_rank(x)).collect();
        let key = rotate(path, least_rotation(&ranks));
        if out.keys.contains(&key) {
            return;
        }
        let ell = 2.0 * (tr / 2.0).acosh();
        out.keys.insert(key.clone());
        out.found.push((key, ell));
    }

    fn subtree(&self, prefix: &[Letter], g: Mat2, out: &mut Harvest) {
        let mut path: Vec<Letter> = prefix.to_vec();
        let mut frames = vec![Frame { g, x: *prefix.last().unwrap(), next: 0 }];
        self.visit(&path, &g, out);
        while let Some(top) = frames.last_mut() {
            if top.next as usize == self.letters.len() {
                frames.pop();
                path.pop();
                continue;
            }
            let y = self.letters[top.next as usize];
            top.next += 1;
            if y == -top.x || !self.admissible(&top.g, y) {
                continue;
            }
            let g2 = top.g * self.group.generator(y);
            path.push(y);
            self.visit(&path, &g2, out);
            frames.push(Frame { g: g2, x: y, next: 0 });
        }
    }
}

pub(crate) fn enumerate(
    group: &FuchsianGroup,
    normals: &[Mink],
    base: &Mink,
    core_radius: f64,
    lmax: f64,
) -> Result<EnumOutput> {
    let rho = lmax + core_radius + 0.01;
    let m = group.preset.ngens as Letter;
    let search = Search {
        group,
        normals,
        base: *base,
        sinh_rho: rho.sinh(),
        max_trace: 2.0 * (lmax / 2.0 + 1e-9).cosh(),
        letters: (1..=m).flat_map(|i| [i, -i]).collect(),
    };

    let mut roots: Vec<(Vec<Letter>, Mat2)> = Vec::new();
    for &x in &search.letters {
        if !search.admissible(&Mat2::I, x) {
            continue;
        }
        let gx = group.generator(x);
        for &y in &search.letters {
            if y != -x && search.admissible(&gx, y) {
                roots.push((vec![x, y], gx * group.generator(y)));
            }
        }
    }
    let mut parts: Vec<Harvest> = roots
        .par_iter()
        .map(|(p, g)| {
            let mut h = Harvest::default();
            search.subtree(p, *g, &mut h);
            h
        })
        .collect();
    // length-one words
    let mut first = Harvest::default();
    for &x in &search.letters {
        if search.admissible(&Mat2::I, x) {
            search.visit(&[x], &group.generator(x), &mut first);
        }
    }
    parts.insert(0, first);

    let mut keys: HashSet<Vec<Letter>> = HashSet::new();
    let mut classes = Vec::new();
    let mut nodes = 0;
    let mut depth = 0;
    for p in parts {
        nodes += p.nodes;
        depth = depth.max(p.depth);
        for (key, ell) in p.found {
            if keys.insert(key.clone()) {
                let w = Word(key.clone());
                let inv = w.inverse();
                let ranks: Vec<u8> = inv.0.iter().map(|&x| letter_rank(x)).collect();
                let partner = rotate(&inv.0, least_rotation(&ranks));
                classes.push(FoundClass {
                    word: w,
                    ell,
                    key: rank_key(&key),
                    partner_key: rank_key(&partner),
                });
            }
        }
    }
    let (c1, c2, _) = word_ratio_bounds(&classes);
    Ok(EnumOutput {
        classes,
        certificate: Certificate {
            method: "pingpong_region_dfs".into(),
            radius: rho,
            max_word_len: depth,
            c1,
            c2,
            nodes_visited: nodes,
        },
    })
}

/// Key ordered like `Word`: length first, then letter ranks.
fn rank_key(w: &[Letter]) -> Vec<i16> {
    let mut k = Vec::with_capacity(w.len() + 1);
    k.push(w.len() as i16);
    k.extend(w.iter().map(|&x| letter_rank(x) as i16));
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{build_spectrum, length_of};
    use crate::words::{enumerate_classes, GroupPreset};

    /// Brute force over all cyclically reduced words of length ≤ n.
    fn brute(g: &FuchsianGroup, n: usize, lmax: f64) -> Vec<f64> {
        let mut v: Vec<f64> = enumerate_classes(&GroupPreset::free(2), n)
            .iter()
            .filter(|c| crate::words::word_period(&c.canonical.0) == c.canonical.len())
            .filter_map(|c| length_of(g.holonomy(&c.canonical).trace()).ok())
            .filter(|&l| l <= lmax)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn schottky_matches_brute_force() {
        let g = FuchsianGroup::schottky_pants(2.0, 2.0, 2.0).unwrap();
        let s = build_spectrum(&g, 4.0, true).unwrap();
        let got: Vec<f64> = s.primitives().map(|r| r.ell).collect();
        // ℓ ≥ |w| here, so words of length ≤ 7 cover ℓ ≤ 4 with room to spare
        assert!(s.certificate.c1 > 0.99, "c1 = {}", s.certificate.c1);
        let want = brute(&g, 7, 4.0);
        assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn schottky_near_two_has_three_boundary_classes() {
        let g = FuchsianGroup::schottky_pants(2.0, 2.0, 2.0).unwrap();
        let s = build_spectrum(&g, 2.01, true).unwrap();
        assert_eq!(s.records.len(), 6);
        let u = build_spectrum(&g, 2.01, false).unwrap();
        assert_eq!(u.records.len(), 3);
    }

    #[test]
    fn punctured_torus_small() {
        let g = FuchsianGroup::punctured_torus();
        let s = build_spectrum(&g, 5.0, true).unwrap();
        let want = brute(&g, 6, 5.0);
        let got: Vec<f64> = s.primitives().map(|r| r.ell).collect();
        // brute force over short words is a subset
        for l in &want {
            assert!(got.iter().any(|x| (x - l).abs() < 1e-9));
        }
        // shortest: trace 3, ℓ = 2 arccosh(3/2)
        assert!((got[0] - 2.0 * 1.5f64.acosh()).abs() < 1e-12);
    }
}
