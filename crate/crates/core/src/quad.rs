//! Weighted quadrature over a body and its boundary.
//!
//! The interior uses the star-shaped chart `(s, θ) ↦ s x(θ)` with area element
//! `s h(θ) r(θ) ds dθ`: trapezoid in `θ`, Gauss–Legendre in `s ∈ [0, 1]`.

use std::f64::consts::TAU;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::body::{boundary_frame, Body2D, BoundaryFrame};
use crate::error::{Error, Result};
use crate::measure::{Point, Potential};

#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    m: usize,
    s: usize,
    radial_nodes: Vec<f64>,
    radial_weights: Vec<f64>,
}

impl PartialEq for QuadratureSpec {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.s == other.s
    }
}

impl QuadratureSpec {
    pub fn new(m: usize, s: usize) -> Result<Self> {
        if m < 16 || !m.is_multiple_of(2) {
            return Err(Error::Resolution(format!("M must be even and at least 16, got {m}")));
        }
        if s < 16 {
            return Err(Error::Resolution(format!("S must be at least 16, got {s}")));
        }
        let rule = GaussLegendre::new(NonZeroUsize::new(s).expect("s >= 16"));
        let radial_nodes = rule.nodes().map(|x| 0.5 * (x + 1.0)).collect();
        let radial_weights = rule.weights().map(|w| 0.5 * w).collect();
        Ok(QuadratureSpec {
            m,
            s,
            radial_nodes,
            radial_weights,
        })
    }

    /// Boundary node count.
    pub fn boundary_nodes(&self) -> usize {
        self.m
    }

    /// Radial node count.
    pub fn radial_nodes(&self) -> usize {
        self.s
    }

    /// The same rule with both node counts doubled.
    pub fn refined(&self) -> Result<Self> {
        QuadratureSpec::new(2 * self.m, 2 * self.s)
    }
}

/// `∫_K g dx` for `D` integrands evaluated together.
pub fn integrate_area<const D: usize>(k: &Body2D, spec: &QuadratureSpec, g: impl Fn(Point) -> [f64; D]) -> [f64; D] {
    let dtheta = TAU / spec.m as f64;
    let mut total = [0.0; D];
    for j in 0..spec.m {
        let theta = dtheta * j as f64;
        let jet = k.jet(theta);
        let x = k.point(theta);
        let jac = jet.h * jet.radius() * dtheta;
        let mut ring = [0.0; D];
        for (s, w) in spec.radial_nodes.iter().zip(&spec.radial_weights) {
            let vals = g(x * *s);
            for (acc, v) in ring.iter_mut().zip(vals) {
                *acc += w * s * v;
            }
        }
        for (t, r) in total.iter_mut().zip(ring) {
            *t += jac * r;
        }
    }
    total
}

/// `∫_K f dμ`.
pub fn interior_integral(m: &dyn Potential, k: &Body2D, f: impl Fn(Point) -> f64, spec: &QuadratureSpec) -> f64 {
    integrate_area(k, spec, |x| [f(x) * m.density(x)])[0]
}

/// `∫_K f dx`, with unit weight.
pub fn interior_integral_unweighted(k: &Body2D, f: impl Fn(Point) -> f64, spec: &QuadratureSpec) -> f64 {
    integrate_area(k, spec, |x| [f(x)])[0]
}

/// `μ(K)`.
pub fn mass(m: &dyn Potential, k: &Body2D, spec: &QuadratureSpec) -> f64 {
    interior_integral(m, k, |_| 1.0, spec)
}

/// `∫_{∂K} g dμ` by the trapezoid rule on the frame of resolution `M`.
pub fn boundary_integral(
    m: &dyn Potential,
    k: &Body2D,
    g: impl Fn(&BoundaryFrame, usize) -> f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let frame = boundary_frame(k, m, spec.m)?;
    Ok(frame.integrate(|j| g(&frame, j)))
}

/// The moment integrals shared by the inequality checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    /// `μ(K)`.
    pub mu_k: f64,
    /// `∫_K ⟨∇u, x⟩ dμ`.
    pub m1: f64,
    /// `∫_K ⟨∇u, x⟩² dμ`.
    pub m2: f64,
    /// `∫_K ⟨∇²u x, x⟩ dμ`.
    pub q: f64,
    /// `∫_{∂K} h_K(ν_K) dμ`.
    pub bh: f64,
    /// `∫_{∂K} dμ`.
    pub bp: f64,
}

impl MomentSet {
    pub fn mean_m1(&self) -> f64 {
        self.m1 / self.mu_k
    }
}

pub fn moments(m: &dyn Potential, k: &Body2D, spec: &QuadratureSpec) -> Result<MomentSet> {
    let frame = boundary_frame(k, m, spec.m)?;
    Ok(moments_with_frame(m, k, &frame, spec))
}

pub(crate) fn moments_with_frame(
    m: &dyn Potential,
    k: &Body2D,
    frame: &BoundaryFrame,
    spec: &QuadratureSpec,
) -> MomentSet {
    let [mu_k, m1, m2, q] = integrate_area(k, spec, |x| {
        let d = m.density(x);
        let gx = m.grad(x).dot(&x);
        let qx = x.dot(&(m.hess(x) * x));
        [d, gx * d, gx * gx * d, qx * d]
    });
    MomentSet {
        mu_k,
        m1,
        m2,
        q,
        bh: frame.integrate(|j| frame.h[j]),
        bp: frame.weighted_perimeter(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{make_disk, make_ellipse, make_fourier, Harmonic};
    use crate::measure::{make_gaussian, make_quadratic};
    use nalgebra::Matrix2;
    use std::f64::consts::PI;

    /// `∫_{|x|≤R} |x|^{2k} e^{-|x|²/2} dx = 2π 2^k k! (1 - e^{-a} Σ_{j≤k} a^j/j!)`, `a = R²/2`.
    fn gaussian_disk_moment(radius: f64, k: u32) -> f64 {
        let a = 0.5 * radius * radius;
        let mut term = 1.0;
        let mut partial = 1.0;
        let mut fact = 1.0;
        for j in 1..=k {
            term *= a / f64::from(j);
            partial += term;
            fact *= f64::from(j);
        }
        TAU * 2f64.powi(k as i32) * fact * (1.0 - (-a).exp() * partial)
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::new(256, 128).unwrap()
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(QuadratureSpec::new(15, 32).is_err());
        assert!(QuadratureSpec::new(17, 32).is_err());
        assert!(QuadratureSpec::new(32, 8).is_err());
    }

    #[test]
    fn unit_disk_gaussian_integrals() {
        let g = make_gaussian(1.0).unwrap();
        let d = make_disk(1.0).unwrap();
        let s = spec();
        let mu = mass(&g, &d, &s);
        assert!((mu - gaussian_disk_moment(1.0, 0)).abs() < 1e-13);
        assert!((mu - 2.472241).abs() < 1e-6);
        let m1 = interior_integral(&g, &d, |x| g.grad(x).dot(&x), &s);
        assert!((m1 - gaussian_disk_moment(1.0, 1)).abs() < 1e-13);
        // Quoted decimals are rounded; the closed form above is the oracle.
        assert!((m1 - 1.133536).abs() < 1e-5);
        assert!((m1 / mu - 0.458508).abs() < 1e-5);
        let area = interior_integral_unweighted(&d, |_| 1.0, &s);
        assert!((area - PI).abs() < 1e-13);
    }

    #[test]
    fn boundary_integrals_on_disks() {
        let g = make_gaussian(1.0).unwrap();
        let s = spec();
        let one = make_disk(1.0).unwrap();
        let bp = boundary_integral(&g, &one, |_, _| 1.0, &s).unwrap();
        assert!((bp - TAU * (-0.5f64).exp()).abs() < 1e-14);
        assert!((bp - 3.810945).abs() < 1e-6);
        let bh = boundary_integral(&g, &one, |f, j| f.h[j], &s).unwrap();
        assert_eq!(bh, bp);
        let two = make_disk(2.0).unwrap();
        let bh2 = boundary_integral(&g, &two, |f, j| f.h[j], &s).unwrap();
        assert!((bh2 - 2.0 * 4.0 * PI * (-2.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn moment_set_on_unit_disk() {
        let g = make_gaussian(1.0).unwrap();
        let ms = moments(&g, &make_disk(1.0).unwrap(), &spec()).unwrap();
        assert!((ms.mu_k - 2.472241).abs() < 1e-6);
        assert!((ms.mean_m1() - 0.458508).abs() < 1e-5);
        assert!((ms.bh - 3.810945).abs() < 1e-6);
        assert!((ms.bh / ms.mu_k - 1.541492).abs() < 1e-5);
        assert!((2.0 - ms.mean_m1() - 1.541492).abs() < 1e-5);
        assert!((ms.bh / ms.mu_k - (2.0 - ms.mean_m1())).abs() < 1e-13);
        assert!((ms.m2 - gaussian_disk_moment(1.0, 2)).abs() < 1e-13);
        assert!((ms.q - ms.m1).abs() < 1e-13);
    }

    #[test]
    fn boundary_interior_identity() {
        let s = spec();
        let bodies = [
            make_disk(0.5).unwrap(),
            make_ellipse(1.0, 3.0, 64).unwrap().body,
            make_fourier(1.0, &[Harmonic { k: 2, a: 0.1, b: 0.0 }], true).unwrap(),
            make_fourier(
                1.0,
                &[Harmonic { k: 1, a: 0.15, b: 0.0 }, Harmonic { k: 3, a: 0.02, b: 0.01 }],
                false,
            )
            .unwrap(),
        ];
        let measures = [
            make_gaussian(1.0).unwrap(),
            make_quadratic(Matrix2::new(1.0, 0.0, 0.0, 4.0)).unwrap(),
        ];
        for m in &measures {
            for k in &bodies {
                let ms = moments(m, k, &s).unwrap();
                let rel = (ms.bh - (2.0 * ms.mu_k - ms.m1)).abs() / ms.bh;
                assert!(rel < 1e-8, "{rel}");
                if k.is_symmetric() {
                    assert!(ms.m1 >= 0.0);
                }
            }
        }
    }
}
