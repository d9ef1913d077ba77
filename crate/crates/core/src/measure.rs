//! Even log-concave measures `dμ = e^{-u} dx` on the plane.
//!
//! Every built-in family carries closed-form first and second derivatives of
//! its potential. Finite differences appear only in [`validate_measure`].

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Point = Vector2<f64>;

/// A C² convex potential with analytic derivatives.
pub trait Potential: Send + Sync {
    fn u(&self, x: Point) -> f64;
    fn grad(&self, x: Point) -> Point;
    fn hess(&self, x: Point) -> Matrix2<f64>;
    /// Whether `u(x) = u(-x)` holds by construction.
    fn is_even(&self) -> bool;

    fn density(&self, x: Point) -> f64 {
        (-self.u(x)).exp()
    }
}

/// JSON descriptor of a measure, `{"kind": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum MeasureDescriptor {
    Gaussian {
        sigma: f64,
    },
    Quadratic {
        a: [[f64; 2]; 2],
    },
    Radial {
        coeffs: Vec<f64>,
    },
    /// `u = eps |x|²/2 + Σ |x_i|^p / p`, regularized so the Hessian stays
    /// positive definite on the axes.
    EvenPower {
        eps: f64,
        p: f64,
    },
}

impl MeasureDescriptor {
    pub fn build(&self) -> Result<MeasureModel> {
        match self {
            MeasureDescriptor::Gaussian { sigma } => make_gaussian(*sigma),
            MeasureDescriptor::Quadratic { a } => make_quadratic(Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1])),
            MeasureDescriptor::Radial { coeffs } => make_radial(coeffs),
            MeasureDescriptor::EvenPower { eps, p } => make_even_power(*eps, *p),
        }
    }
}

#[derive(Debug, Clone)]
enum Family {
    Quadratic(Matrix2<f64>),
    Radial(Vec<f64>),
    EvenPower { eps: f64, p: f64 },
}

/// An immutable measure model. All built-ins are even.
#[derive(Debug, Clone)]
pub struct MeasureModel {
    descriptor: MeasureDescriptor,
    family: Family,
}

impl MeasureModel {
    pub fn descriptor(&self) -> &MeasureDescriptor {
        &self.descriptor
    }
}

pub fn make_gaussian(sigma: f64) -> Result<MeasureModel> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    let s2 = sigma * sigma;
    Ok(MeasureModel {
        descriptor: MeasureDescriptor::Gaussian { sigma },
        family: Family::Quadratic(Matrix2::identity() / s2),
    })
}

pub fn make_quadratic(a: Matrix2<f64>) -> Result<MeasureModel> {
    if !a.iter().all(|v| v.is_finite()) {
        return Err(invalid("a", "entries must be finite"));
    }
    let scale = a.abs().max().max(1.0);
    if (a[(0, 1)] - a[(1, 0)]).abs() > 1e-12 * scale {
        return Err(invalid("a", "matrix must be symmetric"));
    }
    let lambda_min = min_eigenvalue(&a);
    if lambda_min <= 0.0 {
        return Err(Error::NotPositiveDefinite { eigenvalue: lambda_min });
    }
    Ok(MeasureModel {
        descriptor: MeasureDescriptor::Quadratic {
            a: [[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]],
        },
        family: Family::Quadratic(a),
    })
}

/// Rotationally invariant potential `u(x) = g(|x|²/2)` with
/// `g(t) = Σ c_k t^k`.
pub fn make_radial(coeffs: &[f64]) -> Result<MeasureModel> {
    if coeffs.len() < 2 {
        return Err(invalid("coeffs", "need at least c_0 and c_1"));
    }
    if let Some(c) = coeffs.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return Err(invalid("coeffs", format!("coefficients must be nonnegative, got {c}")));
    }
    if coeffs[1] <= 0.0 {
        return Err(invalid(
            "coeffs",
            "c_1 must be positive (Hessian degenerates at the origin)",
        ));
    }
    Ok(MeasureModel {
        descriptor: MeasureDescriptor::Radial {
            coeffs: coeffs.to_vec(),
        },
        family: Family::Radial(coeffs.to_vec()),
    })
}

pub fn make_even_power(eps: f64, p: f64) -> Result<MeasureModel> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    if !(p >= 2.0 && p.is_finite()) {
        return Err(invalid("p", format!("must be at least 2, got {p}")));
    }
    Ok(MeasureModel {
        descriptor: MeasureDescriptor::EvenPower { eps, p },
        family: Family::EvenPower { eps, p },
    })
}

/// Evaluates `g(t)`, `g'(t)`, `g''(t)` for a polynomial with coefficients
/// in increasing order.
fn poly_derivs(coeffs: &[f64], t: f64) -> (f64, f64, f64) {
    let (mut g, mut g1, mut g2) = (0.0, 0.0, 0.0);
    for c in coeffs.iter().rev() {
        g2 = g2 * t + 2.0 * g1;
        g1 = g1 * t + g;
        g = g * t + c;
    }
    (g, g1, g2)
}

impl Potential for MeasureModel {
    fn u(&self, x: Point) -> f64 {
        match &self.family {
            Family::Quadratic(a) => 0.5 * x.dot(&(a * x)),
            Family::Radial(c) => poly_derivs(c, 0.5 * x.norm_squared()).0,
            Family::EvenPower { eps, p } => {
                0.5 * eps * x.norm_squared() + (x[0].abs().powf(*p) + x[1].abs().powf(*p)) / p
            }
        }
    }

    fn grad(&self, x: Point) -> Point {
        match &self.family {
            Family::Quadratic(a) => a * x,
            Family::Radial(c) => x * poly_derivs(c, 0.5 * x.norm_squared()).1,
            Family::EvenPower { eps, p } => x.map(|xi| eps * xi + xi.signum() * xi.abs().powf(p - 1.0)),
        }
    }

    fn hess(&self, x: Point) -> Matrix2<f64> {
        match &self.family {
            Family::Quadratic(a) => *a,
            Family::Radial(c) => {
                let (_, g1, g2) = poly_derivs(c, 0.5 * x.norm_squared());
                Matrix2::identity() * g1 + x * x.transpose() * g2
            }
            Family::EvenPower { eps, p } => {
                let d = x.map(|xi| eps + (p - 1.0) * xi.abs().powf(p - 2.0));
                Matrix2::from_diagonal(&d)
            }
        }
    }

    fn is_even(&self) -> bool {
        true
    }
}

pub(crate) fn min_eigenvalue(a: &Matrix2<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Outcome of [`validate_measure`].
#[derive(Debug, Clone, Serialize)]
pub struct MeasureValidation {
    pub samples: usize,
    /// `max |u(x) - u(-x)|`.
    pub evenness_defect: f64,
    pub min_eigenvalue: f64,
    /// `max |FD(u) - grad_u|`, absolute.
    pub gradient_residual: f64,
    /// `max ‖FD(grad_u) - hess_u‖_F`, absolute.
    pub hessian_residual: f64,
    /// Derivative residuals relative to `1 + |value|`, worst case.
    pub relative_residual: f64,
    pub passed: bool,
}

pub const VALIDATION_RADIUS: f64 = 5.0;
const FD_STEP: f64 = 1e-4;
const FD_RELATIVE_TOL: f64 = 1e-6;

/// Checks evenness, Hessian definiteness and derivative consistency at
/// seeded random points in the disk of radius 5.
pub fn validate_measure(m: &dyn Potential, sample_count: usize, seed: u64) -> Result<MeasureValidation> {
    if sample_count == 0 {
        return Err(invalid("sample_count", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = MeasureValidation {
        samples: sample_count,
        evenness_defect: 0.0,
        min_eigenvalue: f64::INFINITY,
        gradient_residual: 0.0,
        hessian_residual: 0.0,
        relative_residual: 0.0,
        passed: false,
    };
    let e = [Point::new(FD_STEP, 0.0), Point::new(0.0, FD_STEP)];
    for _ in 0..sample_count {
        let radius = VALIDATION_RADIUS * rng.random::<f64>().sqrt();
        let angle = std::f64::consts::TAU * rng.random::<f64>();
        let x = Point::new(radius * angle.cos(), radius * angle.sin());

        out.evenness_defect = out.evenness_defect.max((m.u(x) - m.u(-x)).abs());
        let hess = m.hess(x);
        out.min_eigenvalue = out.min_eigenvalue.min(min_eigenvalue(&hess));

        let grad = m.grad(x);
        let fd_grad = Point::new(
            (m.u(x + e[0]) - m.u(x - e[0])) / (2.0 * FD_STEP),
            (m.u(x + e[1]) - m.u(x - e[1])) / (2.0 * FD_STEP),
        );
        let g_res = (fd_grad - grad).norm();
        let mut fd_hess = Matrix2::zeros();
        for (j, ej) in e.iter().enumerate() {
            let col = (m.grad(x + ej) - m.grad(x - ej)) / (2.0 * FD_STEP);
            fd_hess.set_column(j, &col);
        }
        let h_res = (fd_hess - hess).norm();
        out.gradient_residual = out.gradient_residual.max(g_res);
        out.hessian_residual = out.hessian_residual.max(h_res);
        out.relative_residual = out
            .relative_residual
            .max(g_res / (1.0 + grad.norm()))
            .max(h_res / (1.0 + hess.norm()));
    }
    let even_ok = !m.is_even() || out.evenness_defect <= 1e-12;
    out.passed = even_ok && out.min_eigenvalue > 0.0 && out.relative_residual <= FD_RELATIVE_TOL;
    Ok(out)
}
