//! Independent checks of a claimed SDP solution.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{SdpProblem, SdpSolution};

/// Residuals recomputed from the problem data. A field is flagged when it
/// exceeds ten times the tolerance the solution was computed with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub min_eig_x: f64,
    pub min_eig_s: f64,
    pub flags: Vec<String>,
}

impl CertificateReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

pub fn validate_certificate(problem: &SdpProblem, sol: &SdpSolution) -> CertificateReport {
    let ax = problem.apply_constraints(&sol.x);
    let b_norm = problem.constraints.iter().map(|c| c.rhs * c.rhs).sum::<f64>().sqrt();
    let primal_residual = problem
        .constraints
        .iter()
        .zip(&ax)
        .map(|(c, a)| (c.rhs - a).powi(2))
        .sum::<f64>()
        .sqrt()
        / (1.0 + b_norm);
    let slack = problem.dual_slack(&sol.y);
    let c_norm = problem.objective.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
    let dual_residual = slack
        .iter()
        .zip(&sol.s)
        .map(|(a, s)| (a - s).norm_squared())
        .sum::<f64>()
        .sqrt()
        / (1.0 + c_norm);
    let pobj = problem.objective_value(&sol.x);
    let dobj: f64 = problem.constraints.iter().zip(&sol.y).map(|(c, y)| c.rhs * y).sum();
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    let min_eig_x = sol.x.iter().map(min_eig).fold(f64::INFINITY, f64::min);
    let min_eig_s = sol.s.iter().map(min_eig).fold(f64::INFINITY, f64::min);

    let opts = sol.options;
    let mut flags = Vec::new();
    if !(primal_residual <= 10.0 * opts.feas_tol) {
        flags.push(format!("primal residual {primal_residual:.3e}"));
    }
    if !(dual_residual <= 10.0 * opts.feas_tol) {
        flags.push(format!("dual residual {dual_residual:.3e}"));
    }
    if !(gap <= 10.0 * opts.gap_tol) {
        flags.push(format!("duality gap {gap:.3e}"));
    }
    let x_scale = sol.x.iter().map(|x| x.amax()).fold(1.0, f64::max);
    if !(min_eig_x >= -10.0 * opts.feas_tol * x_scale) {
        flags.push(format!("X not positive semidefinite ({min_eig_x:.3e})"));
    }
    let s_scale = sol.s.iter().map(|s| s.amax()).fold(1.0, f64::max);
    if !(min_eig_s >= -10.0 * opts.feas_tol * s_scale) {
        flags.push(format!("S not positive semidefinite ({min_eig_s:.3e})"));
    }
    CertificateReport { primal_residual, dual_residual, gap, min_eig_x, min_eig_s, flags }
}

/// Rigorous lower bound on the primal optimum from a dual vector `y`.
///
/// For any feasible `X`, `⟨C, X⟩ = bᵀy + Σ_b ⟨S_b, X_b⟩ ≥ bᵀy + Σ_b min(λ_min(S_b), 0) tr X_b`
/// with `S = C − Σ y_i A_i` recomputed here. Without trace bounds the bound
/// exists only if every `S_b` is positive semidefinite. A small margin covers
/// floating-point error in the eigenvalues and the inner product.
pub fn certified_dual_bound(problem: &SdpProblem, y: &[f64]) -> Option<f64> {
    if y.len() != problem.constraints.len() || y.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let slack = problem.dual_slack(y);
    let terms: Vec<f64> = problem.constraints.iter().zip(y).map(|(c, y)| c.rhs * y).collect();
    let by: f64 = terms.iter().sum();
    let margin = 8.0 * f64::EPSILON * terms.iter().map(|t| t.abs()).sum::<f64>();
    let mut bound = by;
    for (b, s) in slack.iter().enumerate() {
        let n = s.nrows() as f64;
        let lmin = min_eig(s);
        let eig_err = 8.0 * n * f64::EPSILON * s.norm();
        let lower = lmin - eig_err;
        match &problem.trace_bounds {
            Some(t) => bound += lower.min(0.0) * t[b],
            None if lower < 0.0 => return None,
            None => {}
        }
    }
    Some(bound - margin)
}
