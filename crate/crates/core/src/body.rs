//! Planar convex bodies given by trigonometric support functions.
//!
//! A body is parametrized by the angle `θ` of its outer normal, so that
//! `ν(θ) = (cos θ, sin θ)` and the boundary point with that normal is
//! `x(θ) = h ν + h' τ`, where `τ = (-sin θ, cos θ)`. The curvature radius
//! is `r = h + h''` and `x'(θ) = r τ`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measure::{Point, Potential};

/// One term `a cos kθ + b sin kθ` of a support function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(u32, f64, f64)", into = "(u32, f64, f64)")]
pub struct Harmonic {
    pub k: u32,
    pub a: f64,
    pub b: f64,
}

impl From<(u32, f64, f64)> for Harmonic {
    fn from((k, a, b): (u32, f64, f64)) -> Self {
        Harmonic { k, a, b }
    }
}

impl From<Harmonic> for (u32, f64, f64) {
    fn from(h: Harmonic) -> Self {
        (h.k, h.a, h.b)
    }
}

/// A validated convex body of class C²₊ containing the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Body2D {
    a0: f64,
    harmonics: Vec<Harmonic>,
    symmetric: bool,
}

/// `h`, `h'` and `h''` at one angle.
#[derive(Debug, Clone, Copy)]
pub struct SupportJet {
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
}

impl SupportJet {
    pub fn radius(&self) -> f64 {
        self.h + self.d2h
    }
}

impl Body2D {
    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Harmonics sorted by order, without zero terms.
    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn max_order(&self) -> u32 {
        self.harmonics.last().map_or(0, |h| h.k)
    }

    pub fn support(&self, theta: f64) -> f64 {
        self.jet(theta).h
    }

    pub fn jet(&self, theta: f64) -> SupportJet {
        let mut jet = SupportJet {
            h: self.a0,
            dh: 0.0,
            d2h: 0.0,
        };
        for hk in &self.harmonics {
            let k = f64::from(hk.k);
            let (s, c) = (k * theta).sin_cos();
            let v = hk.a * c + hk.b * s;
            jet.h += v;
            jet.dh += k * (hk.b * c - hk.a * s);
            jet.d2h -= k * k * v;
        }
        jet
    }

    pub fn curvature_radius(&self, theta: f64) -> f64 {
        self.jet(theta).radius()
    }

    /// Boundary point whose outer normal has angle `theta`.
    pub fn point(&self, theta: f64) -> Point {
        let jet = self.jet(theta);
        let (s, c) = theta.sin_cos();
        Point::new(jet.h * c - jet.dh * s, jet.h * s + jet.dh * c)
    }

    fn check_grid_size(&self) -> usize {
        4 * (4 * self.max_order() as usize).max(64)
    }

    fn validate(self) -> Result<Self> {
        if !self.a0.is_finite() || self.harmonics.iter().any(|h| !(h.a.is_finite() && h.b.is_finite())) {
            return Err(invalid("coefficients", "must be finite"));
        }
        let n = self.check_grid_size();
        let (mut r_min, mut r_theta) = (f64::INFINITY, 0.0);
        let (mut h_min, mut h_theta) = (f64::INFINITY, 0.0);
        for j in 0..n {
            let theta = TAU * j as f64 / n as f64;
            let jet = self.jet(theta);
            if jet.radius() < r_min {
                r_min = jet.radius();
                r_theta = theta;
            }
            if jet.h < h_min {
                h_min = jet.h;
                h_theta = theta;
            }
        }
        if r_min <= 0.0 {
            return Err(Error::NonPositiveCurvature {
                theta: r_theta,
                radius: r_min,
            });
        }
        if h_min <= 0.0 {
            return Err(Error::OriginNotInterior {
                theta: h_theta,
                value: h_min,
            });
        }
        Ok(self)
    }

    /// Smallest curvature radius on the validation grid.
    pub fn min_curvature_radius(&self) -> f64 {
        let n = self.check_grid_size();
        (0..n)
            .map(|j| self.curvature_radius(TAU * j as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

fn normalize(harmonics: &[Harmonic]) -> Result<Vec<Harmonic>> {
    let mut merged: Vec<Harmonic> = Vec::with_capacity(harmonics.len());
    let mut sorted = harmonics.to_vec();
    sorted.sort_by_key(|h| h.k);
    for h in sorted {
        if h.k == 0 {
            return Err(invalid("harmonics", "orders must be at least 1"));
        }
        match merged.last_mut() {
            Some(last) if last.k == h.k => {
                last.a += h.a;
                last.b += h.b;
            }
            _ => merged.push(h),
        }
    }
    merged.retain(|h| h.a != 0.0 || h.b != 0.0);
    Ok(merged)
}

pub fn make_disk(radius: f64) -> Result<Body2D> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("radius", format!("must be positive, got {radius}")));
    }
    Ok(Body2D {
        a0: radius,
        harmonics: Vec::new(),
        symmetric: true,
    })
}

/// Builds a body from its support-function coefficients.
pub fn make_fourier(a0: f64, harmonics: &[Harmonic], symmetric: bool) -> Result<Body2D> {
    let harmonics = normalize(harmonics)?;
    if symmetric {
        if let Some(h) = harmonics.iter().find(|h| h.k % 2 == 1) {
            return Err(Error::OddHarmonic { k: h.k });
        }
    }
    Body2D {
        a0,
        harmonics,
        symmetric,
    }
    .validate()
}

/// Ellipse support function projected onto even cosines.
#[derive(Debug, Clone)]
pub struct EllipseFit {
    pub body: Body2D,
    /// Max pointwise deviation from the exact ellipse support function.
    pub max_error: f64,
}

pub const ELLIPSE_PROJECTION_TOL: f64 = 1e-10;

impl EllipseFit {
    pub fn is_sufficient(&self) -> bool {
        self.max_error <= ELLIPSE_PROJECTION_TOL
    }
}

pub fn make_ellipse(a: f64, b: f64, degree: u32) -> Result<EllipseFit> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid("a", format!("must be positive, got {a}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid("b", format!("must be positive, got {b}")));
    }
    if degree < 8 {
        return Err(invalid("degree", format!("must be at least 8, got {degree}")));
    }
    let exact = |theta: f64| {
        let (s, c) = theta.sin_cos();
        (a * a * c * c + b * b * s * s).sqrt()
    };
    let q = (32 * degree as usize).max(4096);
    let samples: Vec<(f64, f64)> = (0..q)
        .map(|j| {
            let theta = TAU * j as f64 / q as f64;
            (theta, exact(theta))
        })
        .collect();
    let a0 = samples.iter().map(|s| s.1).sum::<f64>() / q as f64;
    let mut harmonics = Vec::new();
    for k in (2..=degree).step_by(2) {
        let kf = f64::from(k);
        let ak = 2.0 / q as f64 * samples.iter().map(|(t, h)| h * (kf * t).cos()).sum::<f64>();
        if ak.abs() > 1e-15 * a0 {
            harmonics.push(Harmonic { k, a: ak, b: 0.0 });
        }
    }
    let body = Body2D {
        a0,
        harmonics,
        symmetric: true,
    }
    .validate()?;
    let max_error = samples
        .iter()
        .map(|(t, h)| (body.support(*t) - h).abs())
        .fold(0.0, f64::max);
    Ok(EllipseFit { body, max_error })
}

/// Support function of `(1 - t) K + t L`.
pub fn minkowski_mix(k: &Body2D, l: &Body2D, t: f64) -> Result<Body2D> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid("t", format!("must lie in [0, 1], got {t}")));
    }
    let mut terms: Vec<Harmonic> = k
        .harmonics
        .iter()
        .map(|h| Harmonic {
            k: h.k,
            a: (1.0 - t) * h.a,
            b: (1.0 - t) * h.b,
        })
        .collect();
    terms.extend(l.harmonics.iter().map(|h| Harmonic {
        k: h.k,
        a: t * h.a,
        b: t * h.b,
    }));
    Body2D {
        a0: (1.0 - t) * k.a0 + t * l.a0,
        harmonics: normalize(&terms)?,
        symmetric: k.symmetric && l.symmetric,
    }
    .validate()
}

/// The dilate `s K`.
pub fn dilate(k: &Body2D, s: f64) -> Result<Body2D> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("must be positive, got {s}")));
    }
    Ok(Body2D {
        a0: s * k.a0,
        harmonics: k
            .harmonics
            .iter()
            .map(|h| Harmonic {
                k: h.k,
                a: s * h.a,
                b: s * h.b,
            })
            .collect(),
        symmetric: k.symmetric,
    })
}

/// Adds `t ρ` to the support function, where `ρ = c0 + Σ a_k cos kθ + b_k sin kθ`.
/// The symmetry flag is kept only when `ρ` has no odd terms.
pub fn perturb(k: &Body2D, c0: f64, rho: &[Harmonic], t: f64) -> Result<Body2D> {
    let mut terms = k.harmonics.clone();
    terms.extend(rho.iter().map(|h| Harmonic {
        k: h.k,
        a: t * h.a,
        b: t * h.b,
    }));
    let harmonics = normalize(&terms)?;
    let symmetric = k.symmetric && harmonics.iter().all(|h| h.k % 2 == 0);
    Body2D {
        a0: k.a0 + t * c0,
        harmonics,
        symmetric,
    }
    .validate()
}

/// JSON body descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyDescriptor {
    Disk {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default = "default_ellipse_degree")]
        degree: u32,
    },
    Fourier {
        a0: f64,
        #[serde(default)]
        harmonics: Vec<Harmonic>,
        #[serde(default)]
        symmetric: bool,
    },
}

fn default_ellipse_degree() -> u32 {
    64
}

impl BodyDescriptor {
    /// Builds the body; the second value carries a warning when the
    /// ellipse projection is under-resolved.
    pub fn build(&self) -> Result<(Body2D, Option<String>)> {
        match self {
            BodyDescriptor::Disk { radius } => Ok((make_disk(*radius)?, None)),
            BodyDescriptor::Ellipse { a, b, degree } => {
                let fit = make_ellipse(*a, *b, *degree)?;
                let warning = (!fit.is_sufficient()).then(|| {
                    format!(
                        "ellipse projection error {:.3e} exceeds {:.0e} at degree {degree}",
                        fit.max_error, ELLIPSE_PROJECTION_TOL
                    )
                });
                Ok((fit.body, warning))
            }
            BodyDescriptor::Fourier {
                a0,
                harmonics,
                symmetric,
            } => Ok((make_fourier(*a0, harmonics, *symmetric)?, None)),
        }
    }
}

/// Boundary geometry sampled on `θ_j = 2πj/M`.
#[derive(Debug, Clone)]
pub struct BoundaryFrame {
    pub theta: Vec<f64>,
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
    pub d2h: Vec<f64>,
    pub r: Vec<f64>,
    pub x: Vec<Point>,
    pub normal: Vec<Point>,
    pub tangent: Vec<Point>,
    pub grad_u: Vec<Point>,
    /// `e^{-u(x_j)}`.
    pub density: Vec<f64>,
    /// `1/r - ⟨∇u, ν⟩`.
    pub hmu: Vec<f64>,
    /// `e^{-u} r Δθ`.
    pub w: Vec<f64>,
    pub dtheta: f64,
}

pub fn boundary_frame(k: &Body2D, m: &dyn Potential, nodes: usize) -> Result<BoundaryFrame> {
    if nodes < 4 || !nodes.is_multiple_of(2) {
        return Err(Error::Resolution(format!(
            "node count must be even and at least 4, got {nodes}"
        )));
    }
    if nodes < 4 * k.max_order() as usize {
        return Err(Error::Resolution(format!(
            "node count {nodes} below 4 x max harmonic order {}",
            k.max_order()
        )));
    }
    let dtheta = TAU / nodes as f64;
    let mut f = BoundaryFrame {
        theta: Vec::with_capacity(nodes),
        h: Vec::with_capacity(nodes),
        dh: Vec::with_capacity(nodes),
        d2h: Vec::with_capacity(nodes),
        r: Vec::with_capacity(nodes),
        x: Vec::with_capacity(nodes),
        normal: Vec::with_capacity(nodes),
        tangent: Vec::with_capacity(nodes),
        grad_u: Vec::with_capacity(nodes),
        density: Vec::with_capacity(nodes),
        hmu: Vec::with_capacity(nodes),
        w: Vec::with_capacity(nodes),
        dtheta,
    };
    for j in 0..nodes {
        let theta = dtheta * j as f64;
        let jet = k.jet(theta);
        let r = jet.radius();
        if r <= 0.0 {
            return Err(Error::NonPositiveCurvature { theta, radius: r });
        }
        let (s, c) = theta.sin_cos();
        let nu = Point::new(c, s);
        let tau = Point::new(-s, c);
        let x = nu * jet.h + tau * jet.dh;
        let g = m.grad(x);
        let density = m.density(x);
        f.theta.push(theta);
        f.h.push(jet.h);
        f.dh.push(jet.dh);
        f.d2h.push(jet.d2h);
        f.r.push(r);
        f.x.push(x);
        f.normal.push(nu);
        f.tangent.push(tau);
        f.grad_u.push(g);
        f.density.push(density);
        f.hmu.push(1.0 / r - g.dot(&nu));
        f.w.push(density * r * dtheta);
    }
    Ok(f)
}

impl BoundaryFrame {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// `Σ g_j w_j`, the trapezoid rule for `∫_{∂K} g dμ`.
    pub fn integrate(&self, g: impl Fn(usize) -> f64) -> f64 {
        self.w.iter().enumerate().map(|(j, w)| g(j) * w).sum()
    }

    /// `∫_{∂K} dμ`.
    pub fn weighted_perimeter(&self) -> f64 {
        self.w.iter().sum()
    }

    /// CSV with header `theta,h,r,x1,x2,Hmu,w`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,h,r,x1,x2,Hmu,w\n");
        for j in 0..self.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.theta[j], self.h[j], self.r[j], self.x[j][0], self.x[j][1], self.hmu[j], self.w[j]
            );
        }
        out
    }
}
