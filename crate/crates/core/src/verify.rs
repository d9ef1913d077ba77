//! Inequalities and integral identities around the concavity power, each
//! evaluated as a signed margin or a relative residual.
//!
//! Throughout, `η` is the normalized restriction `𝟙_K μ / μ(K)`.

use std::fmt;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::body::{boundary_frame, Body2D};
use crate::error::{invalid, Result};
use crate::measure::{Point, Potential};
use crate::operator::{apply_on_frame, RhoBarSolution};
use crate::quad::{integrate_area, moments_with_frame, QuadratureSpec};

pub const DEFAULT_TOLERANCE: f64 = 1e-7;
const DIM: f64 = 2.0;

/// Even test functions with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `ψ ≡ 1`.
    Psi0,
    /// `|x|²/2`.
    Psi1,
    /// `(x₁² + 3x₂²)/2`.
    Psi2,
    /// `|x|⁴/4`.
    Psi3,
    /// `x₁⁴/12 + x₂²/2`.
    Psi4,
}

impl TestFunction {
    pub const CATALOG: [TestFunction; 4] = [
        TestFunction::Psi1,
        TestFunction::Psi2,
        TestFunction::Psi3,
        TestFunction::Psi4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Psi0 => "psi0",
            TestFunction::Psi1 => "psi1",
            TestFunction::Psi2 => "psi2",
            TestFunction::Psi3 => "psi3",
            TestFunction::Psi4 => "psi4",
        }
    }

    pub fn value(self, x: Point) -> f64 {
        match self {
            TestFunction::Psi0 => 1.0,
            TestFunction::Psi1 => 0.5 * x.norm_squared(),
            TestFunction::Psi2 => 0.5 * (x[0] * x[0] + 3.0 * x[1] * x[1]),
            TestFunction::Psi3 => 0.25 * x.norm_squared().powi(2),
            TestFunction::Psi4 => x[0].powi(4) / 12.0 + 0.5 * x[1] * x[1],
        }
    }

    pub fn grad(self, x: Point) -> Point {
        match self {
            TestFunction::Psi0 => Point::zeros(),
            TestFunction::Psi1 => x,
            TestFunction::Psi2 => Point::new(x[0], 3.0 * x[1]),
            TestFunction::Psi3 => x * x.norm_squared(),
            TestFunction::Psi4 => Point::new(x[0].powi(3) / 3.0, x[1]),
        }
    }

    pub fn hess(self, x: Point) -> Matrix2<f64> {
        match self {
            TestFunction::Psi0 => Matrix2::zeros(),
            TestFunction::Psi1 => Matrix2::identity(),
            TestFunction::Psi2 => Matrix2::new(1.0, 0.0, 0.0, 3.0),
            TestFunction::Psi3 => Matrix2::identity() * x.norm_squared() + x * x.transpose() * 2.0,
            TestFunction::Psi4 => Matrix2::new(x[0] * x[0], 0.0, 0.0, 1.0),
        }
    }

    /// `L_μ ψ = Δψ - ⟨∇u, ∇ψ⟩`.
    pub fn weighted_laplacian(self, m: &dyn Potential, x: Point) -> f64 {
        self.hess(x).trace() - m.grad(x).dot(&self.grad(x))
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    fn severity(self) -> u8 {
        match self {
            Verdict::Holds => 0,
            Verdict::Inconclusive => 1,
            Verdict::Violated => 2,
        }
    }
}

/// The claimed relation between `lhs` and `rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    LessEq,
    #[serde(rename = ">=")]
    GreaterEq,
    #[serde(rename = "==")]
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Resolution {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "S")]
    pub s: usize,
}

impl Resolution {
    pub fn of(spec: &QuadratureSpec, degree: Option<usize>) -> Self {
        Resolution {
            n: degree,
            m: spec.boundary_nodes(),
            s: spec.radial_nodes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    /// Signed slack of the claimed inequality, or `rhs - lhs` for identities.
    pub margin: f64,
    /// `|lhs - rhs| / relative_scale`, identities only.
    pub residual: Option<f64>,
    pub relative_scale: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub resolution: Resolution,
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<CheckReport>,
}

fn default_scale(lhs: f64, rhs: f64) -> f64 {
    lhs.abs().max(rhs.abs()).max(1.0)
}

impl CheckReport {
    /// Claim `lhs <= rhs` (or `>=`), judged against `tolerance * scale`.
    pub fn inequality(
        name: impl Into<String>,
        lhs: f64,
        relation: Relation,
        rhs: f64,
        tolerance: f64,
        resolution: Resolution,
    ) -> Self {
        let margin = match relation {
            Relation::LessEq => rhs - lhs,
            Relation::GreaterEq => lhs - rhs,
            Relation::Equal => panic!("inequality with `==`"),
        };
        let relative_scale = default_scale(lhs, rhs);
        let verdict = if !margin.is_finite() {
            Verdict::Inconclusive
        } else if margin >= -tolerance * relative_scale {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        CheckReport {
            name: name.into(),
            relation,
            lhs,
            rhs,
            margin,
            residual: None,
            relative_scale,
            tolerance,
            verdict,
            resolution,
            flags: Vec::new(),
            parts: Vec::new(),
        }
    }

    /// Claim `lhs == rhs`; holds iff the relative residual is within tolerance.
    pub fn identity(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, resolution: Resolution) -> Self {
        Self::identity_scaled(name, lhs, rhs, default_scale(lhs, rhs), tolerance, resolution)
    }

    pub fn identity_scaled(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        relative_scale: f64,
        tolerance: f64,
        resolution: Resolution,
    ) -> Self {
        let residual = (lhs - rhs).abs() / relative_scale;
        let verdict = if !residual.is_finite() {
            Verdict::Inconclusive
        } else if residual <= tolerance {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        CheckReport {
            name: name.into(),
            relation: Relation::Equal,
            lhs,
            rhs,
            margin: rhs - lhs,
            residual: Some(residual),
            relative_scale,
            tolerance,
            verdict,
            resolution,
            flags: Vec::new(),
            parts: Vec::new(),
        }
    }

    /// Attaches sub-checks; the overall verdict becomes the worst one.
    pub fn with_parts(mut self, parts: Vec<CheckReport>) -> Self {
        for p in &parts {
            if p.verdict.severity() > self.verdict.severity() {
                self.verdict = p.verdict;
            }
        }
        self.parts = parts;
        self
    }

    pub fn with_flags(mut self, flags: &[String]) -> Self {
        self.flags.extend_from_slice(flags);
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn part(&self, name: &str) -> Option<&CheckReport> {
        self.parts.iter().find(|p| p.name == name)
    }
}

pub const HYPOTHESES_VIOLATED: &str = "hypotheses violated";

/// Flags for inputs outside the theorems' hypotheses.
pub fn hypothesis_flags(m: &dyn Potential, k: &Body2D) -> Vec<String> {
    let mut flags = Vec::new();
    if !k.is_symmetric() {
        flags.push(format!("{HYPOTHESES_VIOLATED}: body is not origin-symmetric"));
    }
    if !m.is_even() {
        flags.push(format!("{HYPOTHESES_VIOLATED}: measure is not even"));
    }
    if k.harmonics().iter().any(|h| h.k == 1) {
        flags.push("body has translation harmonics (k = 1)".to_string());
    }
    flags
}

/// `∫_{∂K} h dμ >= ∫_{∂K} ρ̄ dμ`, with the equivalent `p >= μ(K) / ∫ h dμ` as a part.
pub fn check_strong_dimbm(
    m: &dyn Potential,
    k: &Body2D,
    solution: &RhoBarSolution,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<CheckReport> {
    let frame = boundary_frame(k, m, spec.boundary_nodes())?;
    let ms = moments_with_frame(m, k, &frame, spec);
    let res = Resolution::of(spec, Some(solution.coefficients.len() / 2));
    let power_form = CheckReport::inequality(
        "power_form",
        solution.p_value,
        Relation::GreaterEq,
        ms.mu_k / ms.bh,
        tol,
        res,
    );
    Ok(CheckReport::inequality(
        "strong_dimbm",
        ms.bh,
        Relation::GreaterEq,
        solution.integral_rho,
        tol,
        res,
    )
    .with_parts(vec![power_form])
    .with_flags(&hypothesis_flags(m, k)))
}

/// `p >= 1/(n - m1/μ(K)) >= 1/n`. The first link is conditional on the
/// strong condition and is inconclusive when that fails.
pub fn check_chain(
    m: &dyn Potential,
    k: &Body2D,
    solution: &RhoBarSolution,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<CheckReport> {
    let frame = boundary_frame(k, m, spec.boundary_nodes())?;
    let ms = moments_with_frame(m, k, &frame, spec);
    let res = Resolution::of(spec, Some(solution.coefficients.len() / 2));
    let chain_value = 1.0 / (DIM - ms.mean_m1());
    let mut link = CheckReport::inequality(
        "power_bound",
        solution.p_value,
        Relation::GreaterEq,
        chain_value,
        tol,
        res,
    );
    let premise = ms.bh - solution.integral_rho >= -tol * default_scale(ms.bh, solution.integral_rho);
    if !premise {
        link.verdict = Verdict::Inconclusive;
        link.flags.push("strong condition fails; link not implied".to_string());
    }
    let lower = CheckReport::inequality(
        "dimensional_bound",
        chain_value,
        Relation::GreaterEq,
        1.0 / DIM,
        tol,
        res,
    );
    let m1_sign = CheckReport::inequality("m1_nonnegative", ms.mean_m1(), Relation::GreaterEq, 0.0, tol, res);
    let mut report = link.clone().with_parts(vec![lower, m1_sign]);
    report.name = "chain".to_string();
    report.flags = hypothesis_flags(m, k);
    report.parts.insert(0, link);
    Ok(report)
}

/// `Var_η⟨∇u, x⟩ <= E_η⟨∇²u x, x⟩ + E_η⟨∇u, x⟩`.
pub fn check_local_b(m: &dyn Potential, k: &Body2D, spec: &QuadratureSpec, tol: f64) -> Result<CheckReport> {
    let frame = boundary_frame(k, m, spec.boundary_nodes())?;
    let ms = moments_with_frame(m, k, &frame, spec);
    let mean = ms.mean_m1();
    let variance = ms.m2 / ms.mu_k - mean * mean;
    let bound = ms.q / ms.mu_k + mean;
    Ok(CheckReport::inequality(
        "local_b",
        variance,
        Relation::LessEq,
        bound,
        tol,
        Resolution::of(spec, None),
    )
    .with_flags(&hypothesis_flags(m, k)))
}

/// Nodal identity `E(h) = 1 + ⟨∇u, x⟩ - m1/μ(K)`, worst node reported.
pub fn check_action_support(m: &dyn Potential, k: &Body2D, spec: &QuadratureSpec, tol: f64) -> Result<CheckReport> {
    let frame = boundary_frame(k, m, spec.boundary_nodes())?;
    let ms = moments_with_frame(m, k, &frame, spec);
    let e_h = apply_on_frame(&frame, ms.mu_k, &frame.h);
    let mean = ms.mean_m1();
    let worst = (0..frame.len())
        .map(|j| (j, 1.0 + frame.grad_u[j].dot(&frame.x[j]) - mean))
        .max_by(|a, b| (e_h[a.0] - a.1).abs().total_cmp(&(e_h[b.0] - b.1).abs()))
        .expect("frame is not empty");
    Ok(CheckReport::identity_scaled(
        "action_support",
        e_h[worst.0],
        worst.1,
        1.0 + mean.abs(),
        tol,
        Resolution::of(spec, None),
    )
    .with_flags(&hypothesis_flags(m, k)))
}

/// Weighted Reilly formula for `ψ` with `ρ = ⟨∇ψ, ν⟩`.
pub fn check_reilly(
    m: &dyn Potential,
    k: &Body2D,
    psi: TestFunction,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<CheckReport> {
    let frame = boundary_frame(k, m, spec.boundary_nodes())?;
    let [lhs, bulk] = integrate_area(k, spec, |x| {
        let d = m.density(x);
        let lap = psi.weighted_laplacian(m, x);
        let g = psi.grad(x);
        let hs = psi.hess(x).norm_squared();
        [lap * lap * d, (hs + g.dot(&(m.hess(x) * g))) * d]
    });
    let boundary = frame.integrate(|j| {
        let x = frame.x[j];
        let (nu, tau) = (frame.normal[j], frame.tangent[j]);
        let g = psi.grad(x);
        let kappa = 1.0 / frame.r[j];
        let rho = g.dot(&nu);
        let psi_s = g.dot(&tau);
        let rho_s = (psi.hess(x) * tau).dot(&nu) + kappa * psi_s;
        frame.hmu[j] * rho * rho + kappa * psi_s * psi_s - 2.0 * psi_s * rho_s
    });
    Ok(CheckReport::identity(
        format!("reilly[{psi}]"),
        lhs,
        bulk + boundary,
        tol,
        Resolution::of(spec, None),
    )
    .with_flags(&hypothesis_flags(m, k)))
}

/// `∫_K φ L_μψ dμ + ∫_K ⟨∇φ, ∇ψ⟩ dμ = ∫_{∂K} φ ⟨∇ψ, ν⟩ dμ`.
pub fn check_integration_by_parts(
    m: &dyn Potential,
    k: &Body2D,
    phi: TestFunction,
    psi: TestFunction,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<CheckReport> {
    let frame = boundary_frame(k, m, spec.boundary_nodes())?;
    let [a, b] = integrate_area(k, spec, |x| {
        let d = m.density(x);
        [
            phi.value(x) * psi.weighted_laplacian(m, x) * d,
            phi.grad(x).dot(&psi.grad(x)) * d,
        ]
    });
    let c = frame.integrate(|j| phi.value(frame.x[j]) * psi.grad(frame.x[j]).dot(&frame.normal[j]));
    let scale = a.abs().max(b.abs()).max(c.abs()).max(1.0);
    Ok(CheckReport::identity_scaled(
        format!("integration_by_parts[{phi},{psi}]"),
        a + b,
        c,
        scale,
        tol,
        Resolution::of(spec, None),
    )
    .with_flags(&hypothesis_flags(m, k)))
}

/// Hereditary-convexity functional with the uniform measure `η` on `K`:
/// `∫ ‖∇²ψ‖² + ⟨∇²u ∇ψ, ∇ψ⟩ dη >= (∫ L_μψ dη)² / ∫ L_μ(|x|²/2) dη`.
pub fn check_hereditary_functional(
    m: &dyn Potential,
    k: &Body2D,
    psi: TestFunction,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<CheckReport> {
    let frame = boundary_frame(k, m, spec.boundary_nodes())?;
    let ms = moments_with_frame(m, k, &frame, spec);
    let [energy, lap, lap_quadratic] = integrate_area(k, spec, |x| {
        let d = m.density(x);
        let g = psi.grad(x);
        [
            (psi.hess(x).norm_squared() + g.dot(&(m.hess(x) * g))) * d,
            psi.weighted_laplacian(m, x) * d,
            TestFunction::Psi1.weighted_laplacian(m, x) * d,
        ]
    });
    let denominator = lap_quadratic / ms.mu_k;
    if denominator <= 0.0 {
        return Err(invalid(
            "measure",
            format!("∫ L_μ(|x|²/2) dη = {denominator:.6e} is not positive"),
        ));
    }
    let res = Resolution::of(spec, None);
    let ratio = (lap / ms.mu_k).powi(2) / denominator;
    let denominator_identity =
        CheckReport::identity("denominator_boundary_form", denominator, ms.bh / ms.mu_k, tol, res);
    Ok(CheckReport::inequality(
        format!("hereditary_functional[{psi}]"),
        energy / ms.mu_k,
        Relation::GreaterEq,
        ratio,
        tol,
        res,
    )
    .with_parts(vec![denominator_identity])
    .with_flags(&hypothesis_flags(m, k)))
}

/// Terms (A) and (B) of the decomposition of `∫_{∂K} (h - ρ̄) dη`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProofTerms {
    pub a: f64,
    pub b_boundary: f64,
    pub b_interior: f64,
    pub target: f64,
}

pub fn proof_terms(
    m: &dyn Potential,
    k: &Body2D,
    solution: &RhoBarSolution,
    spec: &QuadratureSpec,
) -> Result<ProofTerms> {
    let frame = boundary_frame(k, m, spec.boundary_nodes())?;
    if solution.nodal.len() != frame.len() {
        return Err(crate::Error::Resolution(format!(
            "solution has {} nodes, frame has {}",
            solution.nodal.len(),
            frame.len()
        )));
    }
    let ms = moments_with_frame(m, k, &frame, spec);
    let mean = ms.mean_m1();
    let eta = |g: &dyn Fn(usize) -> f64| frame.integrate(g) / ms.mu_k;
    let gx = |j: usize| frame.grad_u[j].dot(&frame.x[j]);
    let f = |j: usize| solution.nodal[j] - frame.h[j];
    let a = eta(&|j| f(j) * gx(j)) - eta(&f) * mean;
    let b_boundary = eta(&|j| frame.h[j] * gx(j)) - eta(&|j| frame.h[j]) * mean;
    let b_interior = ms.q / ms.mu_k + mean - ms.m2 / ms.mu_k + mean * mean;
    let target = eta(&|j| frame.h[j] - solution.nodal[j]);
    Ok(ProofTerms {
        a,
        b_boundary,
        b_interior,
        target,
    })
}

/// `(A) <= 0`, `(A) + (B) = ∫ (h - ρ̄) dη` and the interior form of `(B)`.
pub fn check_proof_decomposition(
    m: &dyn Potential,
    k: &Body2D,
    solution: &RhoBarSolution,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<CheckReport> {
    let t = proof_terms(m, k, solution, spec)?;
    let res = Resolution::of(spec, Some(solution.coefficients.len() / 2));
    let mut a_sign = CheckReport::inequality("a_nonpositive", t.a, Relation::LessEq, 0.0, tol, res);
    a_sign.relative_scale = default_scale(t.a, t.b_boundary);
    a_sign.verdict = if t.a <= tol * a_sign.relative_scale {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    let sum = CheckReport::identity("sum_consistency", t.a + t.b_boundary, t.target, tol, res);
    let b_form = CheckReport::identity("b_interior_form", t.b_boundary, t.b_interior, tol, res);
    let mut report = sum.clone().with_parts(vec![a_sign, sum, b_form]);
    report.name = "proof_decomposition".to_string();
    report.flags = hypothesis_flags(m, k);
    Ok(report)
}

/// `∫_{∂K} h dμ = n μ(K) - ∫_K ⟨∇u, x⟩ dμ`.
pub fn check_boundary_interior_identity(
    m: &dyn Potential,
    k: &Body2D,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<CheckReport> {
    let frame = boundary_frame(k, m, spec.boundary_nodes())?;
    let ms = moments_with_frame(m, k, &frame, spec);
    Ok(CheckReport::identity_scaled(
        "boundary_interior_identity",
        ms.bh,
        DIM * ms.mu_k - ms.m1,
        ms.bh.abs(),
        tol,
        Resolution::of(spec, None),
    )
    .with_flags(&hypothesis_flags(m, k)))
}

/// Runs every check; reports come back sorted by name. Integration by parts
/// is attached to each Reilly report.
pub fn verify_all(
    m: &dyn Potential,
    k: &Body2D,
    solution: &RhoBarSolution,
    psis: &[TestFunction],
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<Vec<CheckReport>> {
    let mut out = vec![
        check_strong_dimbm(m, k, solution, spec, tol)?,
        check_chain(m, k, solution, spec, tol)?,
        check_local_b(m, k, spec, tol)?,
        check_action_support(m, k, spec, tol)?,
        check_proof_decomposition(m, k, solution, spec, tol)?,
        check_boundary_interior_identity(m, k, spec, tol)?,
    ];
    for &psi in psis {
        let ibp = check_integration_by_parts(m, k, psi, psi, spec, tol)?;
        out.push(check_reilly(m, k, psi, spec, tol)?.with_parts(vec![ibp]));
        out.push(check_hereditary_functional(m, k, psi, spec, tol)?);
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}
