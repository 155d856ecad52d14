//! Test windows ψ given through ψ̂ on [−1, 1], and the Gaussian-ensemble constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowKind {
    Triangle,
    Bump,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub kind: WindowKind,
    /// Multiplies ψ̂; 1 gives ψ̂(0) = 1.
    pub scale: f64,
    pub tol: f64,
}

impl Window {
    pub fn triangle() -> Self {
        Window { kind: WindowKind::Triangle, scale: 1.0, tol: 1e-10 }
    }

    pub fn bump() -> Self {
        Window { kind: WindowKind::Bump, scale: 1.0, tol: 1e-10 }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "triangle" => Ok(Self::triangle()),
            "bump" | "smooth_bump" => Ok(Self::bump()),
            _ => Err(Error::InvalidParameters(format!("unknown window '{s}' (triangle|bump)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            WindowKind::Triangle => "triangle",
            WindowKind::Bump => "bump",
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Window { scale: self.scale * c, ..*self }
    }

    pub fn psi_hat(&self, t: f64) -> f64 {
        let a = t.abs();
        if a >= 1.0 {
            return 0.0;
        }
        self.scale
            * match self.kind {
                WindowKind::Triangle => 1.0 - a,
                WindowKind::Bump => (1.0 - 1.0 / (1.0 - a * a)).exp(),
            }
    }

    pub fn max_abs(&self) -> f64 {
        self.scale.abs()
    }

    /// 4∫₀¹ t ψ̂(t)² dt
    pub fn sigma2_goe(&self) -> f64 {
        4.0 * integrate(|t| t * self.psi_hat(t).powi(2), 0.0, 1.0, self.tol)
    }

    pub fn sigma2_gue(&self) -> f64 {
        self.sigma2_goe() / 2.0
    }

    pub fn sigma2_gse(&self) -> f64 {
        self.sigma2_goe() / 4.0
    }
}

// Gauss–Kronrod 7/15 nodes and weights on [−1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 || (b - a) < 1e-14 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, tol / 2.0, depth + 1) + rec(f, m, b, tol / 2.0, depth + 1)
    }
    rec(&f, a, b, tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_constants() {
        let w = Window::triangle();
        assert!((w.sigma2_goe() - 1.0 / 3.0).abs() < 1e-12);
        assert!((w.sigma2_gue() - 1.0 / 6.0).abs() < 1e-12);
        assert!((w.sigma2_gse() - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneity_and_support() {
        for w in [Window::triangle(), Window::bump()] {
            let c = 1.7;
            assert!((w.scaled(c).sigma2_goe() - c * c * w.sigma2_goe()).abs() < 1e-10);
            assert_eq!(w.psi_hat(1.0), 0.0);
            assert_eq!(w.psi_hat(-1.3), 0.0);
            assert!((w.psi_hat(0.0) - 1.0).abs() < 1e-15);
            assert_eq!(w.psi_hat(0.3), w.psi_hat(-0.3));
        }
    }

    #[test]
    fn refinement_is_stable() {
        let a = Window { tol: 1e-8, ..Window::bump() }.sigma2_goe();
        let b = Window { tol: 1e-13, ..Window::bump() }.sigma2_goe();
        assert!((a - b).abs() < 1e-8);
    }
}
