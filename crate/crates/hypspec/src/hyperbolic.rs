//! SL(2,R) matrices and the hyperboloid model.
//!
//! A point z = x + iy of the upper half-plane is stored as the symmetric
//! matrix (1/y)[[x²+y², x], [x, 1]], written in Minkowski coordinates
//! (t, u, v) = ((p+r)/2, (p−r)/2, q) for [[p,q],[q,r]]. The Minkowski form
//! t t' − u u' − v v' is the polarized determinant, so cosh d(z,w) = ⟨Z,W⟩.
//! A geodesic is a spacelike unit normal N (⟨N,N⟩ = −1); g acts on both by
//! S ↦ g S gᵀ.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const I: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }
    pub fn trace(&self) -> f64 {
        self.a + self.d
    }
    /// Inverse of a determinant-one matrix.
    pub fn inv(&self) -> Mat2 {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }
    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2 { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s }
    }
    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        (self.a - o.a)
            .abs()
            .max((self.b - o.b).abs())
            .max((self.c - o.c).abs())
            .max((self.d - o.d).abs())
    }
    pub fn norm_inf(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }
    /// Rotation about i by angle θ (direction 0 points up the imaginary axis).
    pub fn rot(theta: f64) -> Mat2 {
        let (s, c) = (0.5 * theta).sin_cos();
        Mat2 { a: c, b: s, c: -s, d: c }
    }
    /// Translation by `t` along the imaginary axis.
    pub fn lift(t: f64) -> Mat2 {
        let e = (0.5 * t).exp();
        Mat2 { a: e, b: 0.0, c: 0.0, d: 1.0 / e }
    }
    pub fn pow(&self, k: usize) -> Mat2 {
        let mut r = Mat2::I;
        for _ in 0..k {
            r = r * *self;
        }
        r
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mink {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

impl Mink {
    pub const ORIGIN: Mink = Mink { t: 1.0, u: 0.0, v: 0.0 };

    pub fn new(t: f64, u: f64, v: f64) -> Self {
        Mink { t, u, v }
    }
    pub fn dot(&self, o: &Mink) -> f64 {
        self.t * o.t - self.u * o.u - self.v * o.v
    }
    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }
    /// Vector orthogonal to both arguments in the Minkowski form.
    pub fn cross(&self, o: &Mink) -> Mink {
        let e0 = self.u * o.v - self.v * o.u;
        let e1 = self.v * o.t - self.t * o.v;
        let e2 = self.t * o.u - self.u * o.t;
        Mink { t: e0, u: -e1, v: -e2 }
    }
    pub fn scale(&self, s: f64) -> Mink {
        Mink { t: self.t * s, u: self.u * s, v: self.v * s }
    }
    /// Rescale a timelike vector onto the upper sheet.
    pub fn normalize_point(&self) -> Mink {
        let n = self.norm2().sqrt();
        let s = if self.t < 0.0 { -1.0 / n } else { 1.0 / n };
        self.scale(s)
    }
    /// Rescale a spacelike vector to ⟨N,N⟩ = −1.
    pub fn normalize_normal(&self) -> Mink {
        self.scale(1.0 / (-self.norm2()).sqrt())
    }
    pub fn from_upper(x: f64, y: f64) -> Mink {
        let p = (x * x + y * y) / y;
        let r = 1.0 / y;
        Mink { t: 0.5 * (p + r), u: 0.5 * (p - r), v: x / y }
    }
    pub fn to_upper(&self) -> (f64, f64) {
        let r = self.t - self.u;
        (self.v / r, 1.0 / r)
    }
    /// Klein-disc coordinates of a point.
    pub fn klein(&self) -> (f64, f64) {
        (self.u / self.t, self.v / self.t)
    }
    /// Normal of the semicircle geodesic with centre c and radius r; the
    /// outside of the disc is the positive side.
    pub fn semicircle(c: f64, r: f64) -> Mink {
        let p = (c * c - r * r) / r;
        let rr = 1.0 / r;
        Mink { t: 0.5 * (p + rr), u: 0.5 * (p - rr), v: c / r }
    }
    /// Normal of the vertical geodesic Re z = c; the side Re z < c is positive.
    pub fn vertical(c: f64) -> Mink {
        Mink { t: c, u: c, v: 1.0 }
    }
}

impl Add for Mink {
    type Output = Mink;
    fn add(self, o: Mink) -> Mink {
        Mink { t: self.t + o.t, u: self.u + o.u, v: self.v + o.v }
    }
}

impl Sub for Mink {
    type Output = Mink;
    fn sub(self, o: Mink) -> Mink {
        Mink { t: self.t - o.t, u: self.u - o.u, v: self.v - o.v }
    }
}

impl Neg for Mink {
    type Output = Mink;
    fn neg(self) -> Mink {
        Mink { t: -self.t, u: -self.u, v: -self.v }
    }
}

/// g S gᵀ on the symmetric matrix represented by `m`.
pub fn act(g: &Mat2, m: &Mink) -> Mink {
    let p = m.t + m.u;
    let r = m.t - m.u;
    let q = m.v;
    // S gᵀ
    let s11 = p * g.a + q * g.b;
    let s12 = p * g.c + q * g.d;
    let s21 = q * g.a + r * g.b;
    let s22 = q * g.c + r * g.d;
    let np = g.a * s11 + g.b * s21;
    let nq = g.a * s12 + g.b * s22;
    let nr = g.c * s12 + g.d * s22;
    Mink { t: 0.5 * (np + nr), u: 0.5 * (np - nr), v: nq }
}

/// Orbit point g·i.
pub fn orbit_point(g: &Mat2) -> Mink {
    Mink {
        t: 0.5 * (g.a * g.a + g.b * g.b + g.c * g.c + g.d * g.d),
        u: 0.5 * (g.a * g.a + g.b * g.b - g.c * g.c - g.d * g.d),
        v: g.a * g.c + g.b * g.d,
    }
}

pub fn distance(x: &Mink, y: &Mink) -> f64 {
    x.dot(y).max(1.0).acosh()
}

/// Unit normal of the axis of a hyperbolic element.
pub fn axis_normal(g: &Mat2) -> Mink {
    // fixed points solve c x² + (d − a) x − b = 0
    let (np, nq, nr) = (-g.b, 0.5 * (g.a - g.d), g.c);
    Mink { t: 0.5 * (np + nr), u: 0.5 * (np - nr), v: nq }.normalize_normal()
}

/// Orthogonal projection of a point onto a geodesic.
pub fn project(x: &Mink, n: &Mink) -> Mink {
    (*x + n.scale(x.dot(n))).normalize_point()
}

/// A geodesic traversed at unit speed: X(s) = cosh s · P + sinh s · U.
#[derive(Clone, Copy, Debug)]
pub struct Ray {
    pub p: Mink,
    pub dir: Mink,
}

impl Ray {
    pub fn at(&self, s: f64) -> Mink {
        self.p.scale(s.cosh()) + self.dir.scale(s.sinh())
    }
    pub fn tangent_at(&self, s: f64) -> Mink {
        self.p.scale(s.sinh()) + self.dir.scale(s.cosh())
    }
    pub fn shifted(&self, s: f64) -> Ray {
        let p = self.at(s).normalize_point();
        let t = self.tangent_at(s);
        Ray { p, dir: (t - p.scale(t.dot(&p))).normalize_normal() }
    }
    pub fn moved(&self, g: &Mat2) -> Ray {
        Ray { p: act(g, &self.p), dir: act(g, &self.dir) }
    }
}

/// Axis of a hyperbolic element through the projection of `base`, oriented
/// in the direction of translation. Returns the ray and the translation length.
pub fn translation_axis(g: &Mat2, base: &Mink) -> (Ray, f64) {
    let n = axis_normal(g);
    let p = project(base, &n);
    let gp = act(g, &p);
    let c = p.dot(&gp).max(1.0);
    let ell = c.acosh();
    let dir = (gp - p.scale(c)).scale(1.0 / ell.sinh());
    (Ray { p, dir }, ell)
}

/// Parameter interval on which `ray` satisfies ⟨X(s), N⟩ ≥ 0.
/// Returns (lo, hi) with infinities for unbounded sides; lo > hi if empty.
pub fn halfplane_interval(ray: &Ray, n: &Mink) -> (f64, f64) {
    let alpha = ray.p.dot(n);
    let beta = ray.dir.dot(n);
    // sign of alpha cosh s + beta sinh s = sign of alpha + beta tanh s
    if beta.abs() <= alpha.abs() {
        if alpha >= 0.0 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (f64::INFINITY, f64::NEG_INFINITY)
        }
    } else {
        let s0 = (-alpha / beta).atanh();
        if beta > 0.0 {
            (s0, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, s0)
        }
    }
}

/// Reflection in the geodesic with normal `n`, as an orientation-reversing map on points.
pub fn reflect(x: &Mink, n: &Mink) -> Mink {
    *x + n.scale(2.0 * x.dot(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_roundtrip_and_distance() {
        let z = Mink::from_upper(0.3, 2.0);
        let (x, y) = z.to_upper();
        assert!((x - 0.3).abs() < 1e-14 && (y - 2.0).abs() < 1e-14);
        let a = Mink::from_upper(0.0, 1.0);
        let b = Mink::from_upper(0.0, 3.0_f64.exp());
        assert!((distance(&a, &b) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn action_matches_mobius() {
        let g = Mat2::new(2.0, 1.0, 3.0, 2.0);
        let (x, y) = (0.4, 0.7);
        let num_re = g.a * x + g.b;
        // (a z + b)/(c z + d) for z = x + iy
        let (nr, ni) = (num_re, g.a * y);
        let (dr, di) = (g.c * x + g.d, g.c * y);
        let den = dr * dr + di * di;
        let wx = (nr * dr + ni * di) / den;
        let wy = (ni * dr - nr * di) / den;
        let m = act(&g, &Mink::from_upper(x, y));
        let (mx, my) = m.to_upper();
        assert!((mx - wx).abs() < 1e-12 && (my - wy).abs() < 1e-12);
        let o = orbit_point(&g);
        let o2 = act(&g, &Mink::ORIGIN);
        assert!((o - o2).norm2().abs() < 1e-12);
    }

    #[test]
    fn normals_have_unit_norm_and_sign() {
        let n = Mink::semicircle(0.5, 0.5);
        assert!((n.norm2() + 1.0).abs() < 1e-14);
        assert!(Mink::from_upper(0.5, 2.0).dot(&n) > 0.0);
        assert!(Mink::from_upper(0.5, 0.2).dot(&n) < 0.0);
        let v = Mink::vertical(1.0);
        assert!((v.norm2() + 1.0).abs() < 1e-14);
        assert!(Mink::from_upper(0.0, 1.0).dot(&v) > 0.0);
        // sinh of distance to the geodesic
        let z = Mink::from_upper(0.5, 1.5);
        let d = (1.5f64 / 0.5).ln();
        assert!((z.dot(&n) - d.sinh()).abs() < 1e-12);
    }

    #[test]
    fn axis_translation_length() {
        let g = Mat2::rot(0.7) * Mat2::lift(1.3) * Mat2::rot(-0.7);
        let (ray, ell) = translation_axis(&g, &Mink::from_upper(0.2, 0.9));
        assert!((ell - 1.3).abs() < 1e-12);
        let moved = act(&g, &ray.p);
        assert!((moved - ray.at(ell)).norm2().abs() < 1e-10);
        assert!((2.0 * (0.5 * ell).cosh() - g.trace().abs()).abs() < 1e-12);
    }

    #[test]
    fn cross_is_orthogonal() {
        let a = Mink::new(1.3, 0.2, -0.5);
        let b = Mink::new(-0.1, 0.9, 0.4);
        let c = a.cross(&b);
        assert!(c.dot(&a).abs() < 1e-14 && c.dot(&b).abs() < 1e-14);
    }
}
