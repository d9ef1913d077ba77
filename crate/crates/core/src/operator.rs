//! Trigonometric Galerkin discretization of the boundary operator
//!
//! ```text
//! E(ρ) = -∇·(II⁻¹ ∇ρ) + ⟨∇u, II⁻¹ ∇ρ⟩ - H_μ ρ + (1/μ(K)) ∫_{∂K} ρ dμ
//! ```
//!
//! and the concavity power `p(μ, K) = μ(K) / ∫_{∂K} ρ̄ dμ` where `E(ρ̄) = 1`.
//!
//! In the normal-angle chart `II⁻¹ = r` is scalar and `ds = r dθ`, so the
//! gradient term of the bilinear form is `∫ ρ_θ φ_θ e^{-u} dθ` and the strong
//! form is `E(ρ) = -ρ_θθ / r + ⟨∇u, τ⟩ ρ_θ - H_μ ρ + mean`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::body::{boundary_frame, Body2D, BoundaryFrame, Harmonic};
use crate::error::{invalid, Error, Result};
use crate::measure::Potential;
use crate::quad::{moments_with_frame, MomentSet, QuadratureSpec};
use crate::spectral;

pub const DEFAULT_DEGREE: usize = 32;

/// Value and derivative of basis function `index` at `theta`.
///
/// Ordering: `1, cos θ, sin θ, cos 2θ, sin 2θ, …`.
pub fn basis(index: usize, theta: f64) -> (f64, f64) {
    if index == 0 {
        return (1.0, 0.0);
    }
    let k = index.div_ceil(2) as f64;
    let (s, c) = (k * theta).sin_cos();
    if index % 2 == 1 {
        (c, -k * s)
    } else {
        (s, k * c)
    }
}

/// Harmonic order of basis function `index`.
pub fn basis_order(index: usize) -> usize {
    index.div_ceil(2)
}

/// Discrete bilinear form of `E` on trigonometric polynomials of degree `N`.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub degree: usize,
    pub b: DMatrix<f64>,
    /// `∫_{∂K} φ_j dμ`.
    pub lvec: DVector<f64>,
    pub mu_k: f64,
    pub moments: MomentSet,
    pub frame: BoundaryFrame,
    pub body: Body2D,
}

impl GalerkinSystem {
    pub fn dim(&self) -> usize {
        2 * self.degree + 1
    }

    /// Eigenvalues of `B`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.b.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `c_aᵀ B c_b`.
    pub fn form(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.b * b))
    }

    /// Nodal values on the frame grid of a coefficient vector.
    pub fn nodal(&self, coefficients: &DVector<f64>) -> Vec<f64> {
        self.frame
            .theta
            .iter()
            .map(|&t| (0..self.dim()).map(|i| coefficients[i] * basis(i, t).0).sum())
            .collect()
    }
}

pub fn assemble(m: &dyn Potential, k: &Body2D, degree: usize, spec: &QuadratureSpec) -> Result<GalerkinSystem> {
    if degree == 0 {
        return Err(invalid("N", "trigonometric degree must be at least 1"));
    }
    let nodes = spec.boundary_nodes();
    if nodes < 8 * degree {
        return Err(Error::Resolution(format!("M = {nodes} is below 8 N = {}", 8 * degree)));
    }
    let frame = boundary_frame(k, m, nodes)?;
    let moments = moments_with_frame(m, k, &frame, spec);
    let n = 2 * degree + 1;
    let mut phi = DMatrix::zeros(nodes, n);
    let mut dphi = DMatrix::zeros(nodes, n);
    for (j, &t) in frame.theta.iter().enumerate() {
        for i in 0..n {
            let (v, d) = basis(i, t);
            phi[(j, i)] = v;
            dphi[(j, i)] = d;
        }
    }
    let grad_weight = DVector::from_iterator(nodes, frame.density.iter().map(|d| d * frame.dtheta));
    let curv_weight = DVector::from_iterator(nodes, frame.hmu.iter().zip(&frame.w).map(|(h, w)| h * w));
    let weighted_dphi = DMatrix::from_fn(nodes, n, |j, i| dphi[(j, i)] * grad_weight[j]);
    let weighted_phi = DMatrix::from_fn(nodes, n, |j, i| phi[(j, i)] * curv_weight[j]);
    let lvec = phi.tr_mul(&DVector::from_column_slice(&frame.w));
    let mut b = dphi.tr_mul(&weighted_dphi) - phi.tr_mul(&weighted_phi);
    b += &lvec * lvec.transpose() / moments.mu_k;
    let b = (&b + b.transpose()) * 0.5;
    Ok(GalerkinSystem {
        degree,
        b,
        lvec,
        mu_k: moments.mu_k,
        moments,
        frame,
        body: k.clone(),
    })
}

/// Solution of `E(ρ̄) = 1` in the Galerkin space.
#[derive(Debug, Clone, Serialize)]
pub struct RhoBarSolution {
    pub coefficients: Vec<f64>,
    pub nodal: Vec<f64>,
    /// `∫_{∂K} ρ̄ dμ`.
    pub integral_rho: f64,
    pub p_value: f64,
    /// `‖B c - L‖ / ‖L‖`.
    pub weak_residual: f64,
    /// `max_j |E(ρ̄)_j - 1|`.
    pub strong_residual: f64,
    pub min_eigenvalue: f64,
    /// Spectral norm of `B`.
    pub b_norm: f64,
}

impl RhoBarSolution {
    /// `‖odd-order coefficients‖ / ‖coefficients‖`.
    pub fn odd_fraction(&self) -> f64 {
        let total: f64 = self.coefficients.iter().map(|c| c * c).sum();
        let odd: f64 = self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(i, _)| basis_order(*i) % 2 == 1)
            .map(|(_, c)| c * c)
            .sum();
        if total == 0.0 {
            0.0
        } else {
            (odd / total).sqrt()
        }
    }

    /// The solution as a constant term plus harmonics.
    pub fn as_harmonics(&self) -> (f64, Vec<Harmonic>) {
        let c = &self.coefficients;
        let harmonics = (1..=c.len() / 2)
            .map(|k| Harmonic {
                k: k as u32,
                a: c[2 * k - 1],
                b: c[2 * k],
            })
            .collect();
        (c[0], harmonics)
    }
}

pub fn solve_rho_bar(sys: &GalerkinSystem) -> Result<RhoBarSolution> {
    let ev = sys.eigenvalues();
    let min_eigenvalue = ev[0];
    let b_norm = ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if min_eigenvalue <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            eigenvalue: min_eigenvalue,
        });
    }
    let chol = Cholesky::new(sys.b.clone()).ok_or(Error::NotPositiveDefinite {
        eigenvalue: min_eigenvalue,
    })?;
    let c = chol.solve(&sys.lvec);
    let weak_residual = (&sys.b * &c - &sys.lvec).norm() / sys.lvec.norm();
    let nodal = sys.nodal(&c);
    let integral_rho = sys.frame.integrate(|j| nodal[j]);
    let e_rho = apply_on_frame(&sys.frame, sys.mu_k, &nodal);
    let strong_residual = e_rho.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    Ok(RhoBarSolution {
        coefficients: c.iter().copied().collect(),
        nodal,
        integral_rho,
        p_value: sys.mu_k / integral_rho,
        weak_residual,
        strong_residual,
        min_eigenvalue,
        b_norm,
    })
}

/// Strong form of `E` on nodal data, with derivatives taken spectrally.
pub fn apply_on_frame(frame: &BoundaryFrame, mu_k: f64, rho: &[f64]) -> Vec<f64> {
    let d1 = spectral::derivative(rho, 1);
    let d2 = spectral::derivative(rho, 2);
    let mean = frame.integrate(|j| rho[j]) / mu_k;
    (0..frame.len())
        .map(|j| -d2[j] / frame.r[j] + frame.grad_u[j].dot(&frame.tangent[j]) * d1[j] - frame.hmu[j] * rho[j] + mean)
        .collect()
}

/// Nodal values of `E(ρ)` on the frame of resolution `M`.
pub fn apply_operator_strong(
    m: &dyn Potential,
    k: &Body2D,
    rho_nodes: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    let frame = boundary_frame(k, m, spec.boundary_nodes())?;
    if rho_nodes.len() != frame.len() {
        return Err(Error::Resolution(format!(
            "{} nodal values for a frame of {} nodes",
            rho_nodes.len(),
            frame.len()
        )));
    }
    let moments = moments_with_frame(m, k, &frame, spec);
    Ok(apply_on_frame(&frame, moments.mu_k, rho_nodes))
}

#[derive(Debug, Clone)]
pub struct ConcavityPower {
    pub p_value: f64,
    pub solution: RhoBarSolution,
    pub system: GalerkinSystem,
}

pub fn concavity_power(m: &dyn Potential, k: &Body2D, degree: usize, spec: &QuadratureSpec) -> Result<ConcavityPower> {
    let system = assemble(m, k, degree, spec)?;
    let solution = solve_rho_bar(&system)?;
    Ok(ConcavityPower {
        p_value: solution.p_value,
        solution,
        system,
    })
}
