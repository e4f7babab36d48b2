//! Anderson lower bound `A(m, D) = λ_min(h_m) / (m − 1)^D` and the width of
//! its guarantee interval.
//!
//! Tiling the lattice with `m^D` patches that overlap on their boundary
//! layers covers every bond exactly once per `(m − 1)^D` sites, which gives
//! the lower bound. Tiling with disjoint patches plus the leftover crossing
//! bonds gives the upper edge `A + ε` with
//! `ε = (D/m)‖h‖ − λ_min(h_m)[1/(m−1)^D − 1/m^D]`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caps;
use crate::eigen::{self, EigenMethod, LanczosOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_patch, operator_norm, ModelSpec, PatchSpec};

/// Qubit-equivalent cap for two-dimensional patches unless overridden by
/// [`caps::MAX_QUBITS_ENV`].
pub const MAX_2D_QUBITS: f64 = 16.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AndersonResult {
    pub m: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    /// Point estimate of λ_min(h_m).
    pub lambda_min_patch: f64,
    /// A(m, D) from the point estimate.
    pub bound: f64,
    pub guarantee_width: f64,
    /// A(m, D) from the certified lower edge of λ_min(h_m).
    pub certified_bound: f64,
    pub residual: f64,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct AndersonOptions {
    pub method: EigenMethod,
    pub lanczos: LanczosOptions,
}

impl Default for AndersonOptions {
    fn default() -> Self {
        Self { method: EigenMethod::Auto, lanczos: LanczosOptions::default() }
    }
}

impl AndersonOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { lanczos: LanczosOptions { tol, ..Default::default() }, ..Default::default() }
    }
}

/// `λ / (m − 1)^D`.
pub fn anderson_formula(lambda_min_patch: f64, m: usize, dim: usize) -> f64 {
    lambda_min_patch / ((m - 1) as f64).powi(dim as i32)
}

/// `(D/m)‖h‖ − λ[1/(m−1)^D − 1/m^D]`, applied verbatim for any sign of λ.
pub fn guarantee_formula(lambda_min_patch: f64, norm: f64, m: usize, dim: usize) -> f64 {
    let (mf, di) = (m as f64, dim as i32);
    dim as f64 / mf * norm - lambda_min_patch * (1.0 / (mf - 1.0).powi(di) - 1.0 / mf.powi(di))
}

fn check_patch(model: &ModelSpec, m: usize, dim: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::invalid(format!("patch size m = {m} must be ≥ 2")));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::Unsupported(format!(
            "patch diagonalization only for D ∈ {{1, 2}}, got D = {dim}"
        )));
    }
    if dim == 2 && std::env::var(caps::MAX_QUBITS_ENV).is_err() {
        caps::check_against(
            "two-dimensional patch",
            caps::qubit_equivalents(model.d, m * m),
            MAX_2D_QUBITS,
        )?;
    }
    Ok(())
}

pub fn anderson_bound(model: &ModelSpec, m: usize, dim: usize, opts: &AndersonOptions) -> Result<AndersonResult> {
    check_patch(model, m, dim)?;
    let start = Instant::now();
    let op = build_patch(model, &PatchSpec::open(m, dim))?;
    let eig = eigen::min_eig(&op, opts.method, &opts.lanczos)?;
    if !eig.converged {
        return Err(Error::NotConverged { iterations: eig.iterations, residual: eig.residual });
    }
    let norm = operator_norm(model);
    Ok(AndersonResult {
        m,
        dim,
        lambda_min_patch: eig.value,
        bound: anderson_formula(eig.value, m, dim),
        guarantee_width: guarantee_formula(eig.value, norm, m, dim),
        certified_bound: anderson_formula(eig.lower_edge(), m, dim),
        residual: eig.residual,
        iterations: eig.iterations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Width ε(m, D) of the guarantee interval `[A, A + ε]`.
pub fn anderson_guarantee(model: &ModelSpec, m: usize, dim: usize, opts: &AndersonOptions) -> Result<f64> {
    Ok(anderson_bound(model, m, dim, opts)?.guarantee_width)
}

/// One result per patch size, in increasing `m`. Points run in parallel on
/// the current rayon pool; a failed point does not stop the others.
pub fn anderson_sweep(
    model: &ModelSpec,
    ms: std::ops::RangeInclusive<usize>,
    dim: usize,
    opts: &AndersonOptions,
) -> Vec<(usize, Result<AndersonResult>)> {
    let ms: Vec<usize> = ms.collect();
    ms.into_par_iter()
        .map(|m| (m, anderson_bound(model, m, dim, opts)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::builtin_model;

    #[test]
    fn small_heisenberg_values() {
        let h = builtin_model("heisenberg", &[]).unwrap();
        let opts = AndersonOptions::default();
        let a2 = anderson_bound(&h, 2, 1, &opts).unwrap();
        assert!((a2.bound + 1.5).abs() < 1e-12);
        assert!((a2.guarantee_width - 1.5).abs() < 1e-12);
        let a3 = anderson_bound(&h, 3, 1, &opts).unwrap();
        assert!((a3.bound + 1.0).abs() < 1e-12);
        assert!((a3.guarantee_width - 5.0 / 6.0).abs() < 1e-12);
        assert!(a3.certified_bound <= a3.bound);
    }

    #[test]
    fn zero_model() {
        let z = ModelSpec::zero(2, 1);
        for m in 2..6 {
            let r = anderson_bound(&z, m, 1, &AndersonOptions::default()).unwrap();
            assert_eq!(r.bound, 0.0);
            assert_eq!(r.guarantee_width, 0.0);
        }
    }

    #[test]
    fn formula_accepts_symbolic_dimension() {
        // D = 3 is allowed in the formulas even though it is never diagonalized
        let e = guarantee_formula(-10.0, 1.0, 4, 3);
        assert!((e - (0.75 + 10.0 * (1.0 / 27.0 - 1.0 / 64.0))).abs() < 1e-14);
        let h = builtin_model("heisenberg", &[]).unwrap();
        assert!(matches!(
            anderson_bound(&h, 3, 3, &AndersonOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn two_dimensional_cap() {
        let h = builtin_model("heisenberg", &[]).unwrap();
        if std::env::var(caps::MAX_QUBITS_ENV).is_err() {
            assert!(matches!(
                anderson_bound(&h, 5, 2, &AndersonOptions::default()),
                Err(Error::CapExceeded { .. })
            ));
        }
    }

    #[test]
    fn sweep_of_one_equals_single_call() {
        let h = builtin_model("xxz", &[0.5]).unwrap();
        let opts = AndersonOptions::default();
        let sweep = anderson_sweep(&h, 4..=4, 1, &opts);
        let single = anderson_bound(&h, 4, 1, &opts).unwrap();
        assert_eq!(sweep.len(), 1);
        let row = sweep[0].1.as_ref().unwrap();
        assert_eq!(row.bound, single.bound);
        assert_eq!(row.certified_bound, single.certified_bound);
    }

    #[test]
    fn sweep_records_errors_per_point() {
        let h = builtin_model("heisenberg", &[]).unwrap();
        let rows = anderson_sweep(&h, 1..=3, 1, &AndersonOptions::default());
        assert!(rows[0].1.is_err());
        assert!(rows[1].1.is_ok() && rows[2].1.is_ok());
    }
}
