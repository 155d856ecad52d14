//! Unitary characters: Abelian flux characters, explicit matrix
//! representations and Haar-measure constants.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, tags};
use crate::stats::{kahan_sum, Estimate};
use crate::words::{abelianize, GroupPreset, Word};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxCharacter {
    pub flux: Vec<f64>,
    pub alpha: f64,
}

impl FluxCharacter {
    pub fn new(flux: Vec<f64>, alpha: f64) -> Self {
        FluxCharacter { flux, alpha }
    }

    pub fn pairing(&self, homology: &[i64]) -> f64 {
        self.flux.iter().zip(homology).map(|(f, &h)| f * h as f64).sum()
    }

    /// exp(−iα⟨Φ, h⟩)
    pub fn eval_homology(&self, homology: &[i64]) -> Complex64 {
        Complex64::from_polar(1.0, -self.alpha * self.pairing(homology))
    }

    pub fn eval(&self, w: &Word, preset: &GroupPreset) -> Complex64 {
        self.eval_homology(&abelianize(w, preset))
    }

    /// ρ² ≠ 1, i.e. some generator phase is not a multiple of π.
    pub fn breaks_time_reversal(&self) -> bool {
        self.flux.iter().any(|f| !near_multiple(self.alpha * f, std::f64::consts::PI))
    }

    /// ρ = 1 on every generator.
    pub fn is_trivial(&self) -> bool {
        self.flux.iter().all(|f| near_multiple(self.alpha * f, std::f64::consts::TAU))
    }
}

fn near_multiple(x: f64, p: f64) -> bool {
    let r = x / p;
    (r - r.round()).abs() * p <= 1e-12
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRep {
    pub dim: usize,
    pub images: Vec<DMatrix<Complex64>>,
}

impl MatrixRep {
    /// Validates unitarity (1e−10) and, for surface presets, the relator (1e−8).
    pub fn new(images: Vec<DMatrix<Complex64>>, preset: &GroupPreset) -> Result<Self> {
        if images.len() != preset.ngens {
            return Err(Error::InvalidParameters(format!(
                "need {} generator images, got {}",
                preset.ngens,
                images.len()
            )));
        }
        let dim = images[0].nrows();
        for m in &images {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidParameters("images must be square of equal size".into()));
            }
            let e = (m.adjoint() * m - DMatrix::identity(dim, dim)).camax();
            if e > 1e-10 {
                return Err(Error::InvalidParameters(format!("image not unitary (defect {e:e})")));
            }
        }
        let rep = MatrixRep { dim, images };
        if !preset.relator.is_empty() {
            let r = rep.image(&Word(preset.relator.clone()));
            let e = (r - DMatrix::identity(dim, dim)).camax();
            if e > 1e-8 {
                return Err(Error::InvalidParameters(format!("relator image is not the identity (defect {e:e})")));
            }
        }
        Ok(rep)
    }

    /// Images given row by row as (re, im) pairs.
    pub fn from_entries(images: &[Vec<Vec<(f64, f64)>>], preset: &GroupPreset) -> Result<Self> {
        let mats = images
            .iter()
            .map(|rows| {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidParameters("matrix images must be square and non-empty".into()));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j].0, rows[i][j].1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if mats.is_empty() {
            return Err(Error::InvalidParameters("no matrix images given".into()));
        }
        Self::new(mats, preset)
    }

    pub fn trivial(dim: usize, preset: &GroupPreset) -> Self {
        MatrixRep { dim, images: vec![DMatrix::identity(dim, dim); preset.ngens] }
    }

    pub fn image(&self, w: &Word) -> DMatrix<Complex64> {
        let mut m = DMatrix::identity(self.dim, self.dim);
        for &x in &w.0 {
            let g = &self.images[x.unsigned_abs() as usize - 1];
            m = if x > 0 { m * g } else { m * g.adjoint() };
        }
        m
    }

    pub fn char_trace(&self, w: &Word) -> Complex64 {
        self.image(w).trace()
    }
}

/// Character used as a weight in trace-formula sums.
#[derive(Clone, Debug, PartialEq)]
pub enum Character {
    Trivial,
    Flux(FluxCharacter),
    Matrix(MatrixRep),
}

impl Character {
    /// χ(γ^k) from the primitive word and homology of γ.
    pub fn eval_power(&self, w: &Word, homology: &[i64], k: usize) -> Complex64 {
        match self {
            Character::Trivial => Complex64::new(1.0, 0.0),
            Character::Flux(f) => {
                let h: Vec<i64> = homology.iter().map(|x| x * k as i64).collect();
                f.eval_homology(&h)
            }
            Character::Matrix(r) => r.image(w).pow(k as u32).trace(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Character::Matrix(r) => r.dim,
            _ => 1,
        }
    }

    /// Dimension of the invariant subspace, for Abelian characters.
    pub fn trivial_multiplicity(&self) -> Option<usize> {
        match self {
            Character::Trivial => Some(1),
            Character::Flux(f) => Some(usize::from(f.is_trivial())),
            Character::Matrix(_) => None,
        }
    }

    pub fn breaks_time_reversal(&self) -> bool {
        match self {
            Character::Trivial => false,
            Character::Flux(f) => f.breaks_time_reversal(),
            Character::Matrix(_) => false,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Character::Trivial => "trivial".into(),
            Character::Flux(f) => format!("flux(alpha={},phi={:?})", f.alpha, f.flux),
            Character::Matrix(r) => format!("matrix(dim={})", r.dim),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HaarGroup {
    U1,
    SU2,
    UN(usize),
}

impl HaarGroup {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.to_ascii_uppercase();
        match t.as_str() {
            "U1" | "U(1)" => Ok(HaarGroup::U1),
            "SU2" | "SU(2)" => Ok(HaarGroup::SU2),
            _ => {
                let n = t
                    .trim_start_matches('U')
                    .trim_start_matches('(')
                    .trim_end_matches(')')
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParameters(format!("unknown group '{s}' (U1|SU2|U<N>)")))?;
                if n == 0 {
                    return Err(Error::InvalidParameters("U(N) needs N >= 1".into()));
                }
                Ok(HaarGroup::UN(n))
            }
        }
    }
}

const HAAR_CHUNK: usize = 4096;

/// Haar-random element of U(N): QR of a complex Ginibre matrix with the
/// phases of R's diagonal moved into Q.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

fn haar_f<R: Rng>(g: HaarGroup, rng: &mut R) -> f64 {
    match g {
        HaarGroup::U1 => {
            let th: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let t = 2.0 * th.cos();
            t * t
        }
        HaarGroup::SU2 => {
            let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
            let n2: f64 = q.iter().map(|x| x * x).sum();
            // Tr = 2a for the unit quaternion a + bi + cj + dk
            16.0 * q[0] * q[0] / n2
        }
        HaarGroup::UN(n) => {
            let tr = haar_unitary(n, rng).trace();
            let t = 2.0 * tr.re;
            t * t
        }
    }
}

/// Monte Carlo ∫_G (Tr g + conj Tr g)² dg with its standard error.
pub fn haar_sigma_constant(g: HaarGroup, samples: usize, seed: u64) -> Result<Estimate> {
    if samples < 10_000 {
        return Err(Error::InvalidParameters("haar sampling needs at least 1e4 samples".into()));
    }
    let tag = match g {
        HaarGroup::U1 => tags::HAAR_U1,
        HaarGroup::SU2 => tags::HAAR_SU2,
        HaarGroup::UN(n) => tags::HAAR_UN + 1000 * n as u64,
    };
    let nchunks = samples.div_ceil(HAAR_CHUNK);
    let parts: Vec<(f64, f64)> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, tag, c as u64);
            let m = HAAR_CHUNK.min(samples - c * HAAR_CHUNK);
            let v: Vec<f64> = (0..m).map(|_| haar_f(g, &mut rng)).collect();
            (kahan_sum(v.iter().copied()), kahan_sum(v.iter().map(|x| x * x)))
        })
        .collect();
    let n = samples as f64;
    let s1 = kahan_sum(parts.iter().map(|p| p.0));
    let s2 = kahan_sum(parts.iter().map(|p| p.1));
    let mean = s1 / n;
    let var = (s2 / n - mean * mean) * n / (n - 1.0);
    Ok(Estimate::new(mean, (var / n).sqrt()))
}

/// Unit quaternion (w, x, y, z).
#[derive(Clone, Copy, Debug, PartialEq)]
struct Quat([f64; 4]);

impl Quat {
    fn mul(self, o: Quat) -> Quat {
        let [a0, a1, a2, a3] = self.0;
        let [b0, b1, b2, b3] = o.0;
        Quat([
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ])
    }
    fn inv(self) -> Quat {
        Quat([self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }
    fn normalized(self) -> Quat {
        let n = self.0.iter().map(|x| x * x).sum::<f64>().sqrt();
        Quat(self.0.map(|x| x / n))
    }
    fn vec(self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }
    fn random<R: Rng>(rng: &mut R) -> Quat {
        Quat(std::array::from_fn(|_| StandardNormal.sample(rng))).normalized()
    }
    fn matrix(self) -> DMatrix<Complex64> {
        let [a, b, c, d] = self.0;
        DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(a, b), Complex64::new(c, d), Complex64::new(-c, d), Complex64::new(a, -b)],
        )
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Quaternion q with q u q⁻¹ = v for unit 3-vectors u, v.
fn aligning(u: [f64; 3], v: [f64; 3]) -> Quat {
    let c = dot3(u, v);
    if c > -1.0 + 1e-12 {
        let w = cross3(u, v);
        return Quat([1.0 + c, w[0], w[1], w[2]]).normalized();
    }
    let e = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let p = cross3(u, e);
    Quat([0.0, p[0], p[1], p[2]]).normalized()
}

/// Random SU(2) representation of the genus-2 surface group.
///
/// a1, b1 and the axis of a2 are random; the rotation angle of a2 is solved
/// so that a2⁻¹c⁻¹ is conjugate to a2⁻¹ (c = [a1,b1]), and b2 is the
/// conjugator, giving [a1,b1][a2,b2] = 1.
pub fn random_su2_surface_rep(preset: &GroupPreset, seed: u64) -> Result<MatrixRep> {
    if preset.ngens != 4 || !preset.is_surface() {
        return Err(Error::InvalidParameters("SU(2) solver is for the genus-2 surface group".into()));
    }
    for attempt in 0..64u64 {
        let mut rng = stream(seed, tags::SU2_REP, attempt);
        let a1 = Quat::random(&mut rng);
        let b1 = Quat::random(&mut rng);
        let c = a1.mul(b1).mul(a1.inv()).mul(b1.inv());
        let ci = c.inv();
        let axis = Quat::random(&mut rng).vec();
        let na = dot3(axis, axis).sqrt();
        let n = axis.map(|x| x / na);
        let nc = dot3(n, ci.vec());
        if nc.abs() < 1e-3 || (1.0 - ci.0[0]).abs() < 1e-9 {
            continue;
        }
        let th = ((1.0 - ci.0[0]) / nc).atan();
        let a2 = Quat([th.cos(), th.sin() * n[0], th.sin() * n[1], th.sin() * n[2]]);
        let target = a2.inv().mul(ci);
        let u = a2.inv().vec();
        let v = target.vec();
        let (lu, lv) = (dot3(u, u).sqrt(), dot3(v, v).sqrt());
        if lu < 1e-6 || (lu - lv).abs() > 1e-9 {
            continue;
        }
        let b2 = aligning(u.map(|x| x / lu), v.map(|x| x / lv));
        let images = [a1, b1, a2, b2].iter().map(|q| q.matrix()).collect();
        if let Ok(rep) = MatrixRep::new(images, preset) {
            return Ok(rep);
        }
    }
    Err(Error::InvalidParameters("SU(2) relation solver did not converge".into()))
}

/// Random SU(2) images for a free preset (no relation to satisfy).
pub fn random_su2_free_rep(preset: &GroupPreset, seed: u64) -> MatrixRep {
    let mut rng = stream(seed, tags::SU2_REP, u64::MAX);
    let images = (0..preset.ngens).map(|_| Quat::random(&mut rng).matrix()).collect();
    MatrixRep { dim: 2, images }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_examples() {
        let f2 = GroupPreset::free(2);
        let c = FluxCharacter::new(vec![std::f64::consts::PI, 0.0], 1.0);
        assert!((c.eval(&Word(vec![1]), &f2) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        let comm = Word(vec![1, 2, -1, -2]);
        let c2 = FluxCharacter::new(vec![0.3, 1.1], 0.7);
        assert!((c2.eval(&comm, &f2) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let w = Word(vec![1, 1, -2]);
        assert!((c2.eval(&w, &f2) - c2.eval(&w.inverse(), &f2).conj()).norm() < 1e-15);
    }

    #[test]
    fn time_reversal_classification() {
        use std::f64::consts::PI;
        assert!(!FluxCharacter::new(vec![0.0, 0.0], 1.0).breaks_time_reversal());
        assert!(!FluxCharacter::new(vec![PI, 0.0], 1.0).breaks_time_reversal());
        assert!(FluxCharacter::new(vec![PI / 2.0, 0.0], 1.0).breaks_time_reversal());
        assert!(FluxCharacter::new(vec![2.0 * PI, 0.0], 1.0).is_trivial());
        assert!(!FluxCharacter::new(vec![PI, 0.0], 1.0).is_trivial());
    }

    #[test]
    fn squared_sum_expansion() {
        let c = FluxCharacter::new(vec![0.37, -1.2], 1.3);
        let h = [3i64, -2];
        let r = c.eval_homology(&h);
        let r2 = c.eval_homology(&[6, -4]);
        let lhs = (r + r.conj()).powi(2);
        let rhs = Complex64::new(2.0, 0.0) + r2 + r2.conj();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn matrix_rep_traces() {
        let f2 = GroupPreset::free(2);
        let t = MatrixRep::trivial(3, &f2);
        assert!((t.char_trace(&Word(vec![1, -2, 2])) - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        let r = random_su2_free_rep(&f2, 3);
        let w = Word(vec![1, 2, 2]);
        let u = Word(vec![-2, 1]);
        let conj = u.concat(&w).concat(&u.inverse());
        assert!((r.char_trace(&w) - r.char_trace(&conj)).norm() < 1e-12);
        assert!(r.char_trace(&w).norm() <= 2.0 + 1e-12);
    }

    #[test]
    fn su2_surface_rep_satisfies_relator() {
        let g = GroupPreset::surface(2);
        for seed in 0..5 {
            let r = random_su2_surface_rep(&g, seed).unwrap();
            let rel = r.image(&Word(g.relator.clone()));
            assert!((rel - DMatrix::identity(2, 2)).camax() < 1e-8);
        }
    }

    #[test]
    fn haar_u1_small() {
        let e = haar_sigma_constant(HaarGroup::U1, 20_000, 1).unwrap();
        assert!(e.within(2.0, 4.0));
        let e = haar_sigma_constant(HaarGroup::SU2, 20_000, 1).unwrap();
        assert!(e.within(4.0, 4.0));
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = stream(1, 99, 0);
        let q = haar_unitary(4, &mut rng);
        assert!((q.adjoint() * &q - DMatrix::identity(4, 4)).camax() < 1e-12);
    }
}
