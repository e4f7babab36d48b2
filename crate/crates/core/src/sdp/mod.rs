//! Small dense semidefinite programs in standard primal form
//!
//! ```text
//! minimize    Σ_b ⟨C_b, X_b⟩
//! subject to  Σ_b ⟨A_ib, X_b⟩ = b_i      i = 1..m
//!             X_b ⪰ 0
//! ```
//!
//! with dual `maximize bᵀy  s.t.  S = C − Σ y_i A_i ⪰ 0`. All data are real;
//! complex Hermitian problems are embedded with [`real_embed`] first.

mod certificate;
mod sdpa;
mod solver;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::Complex64;

pub use certificate::{certified_dual_bound, validate_certificate, CertificateReport};
pub use sdpa::write_sdpa;
pub use solver::solve;

/// Upper-triangle triplets `(row, col, value)` with `row ≤ col` of a
/// symmetric matrix. Duplicates are summed on construction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SymSparse {
    entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accepts either triangle; `(c, r)` is folded onto `(r, c)`.
    pub fn from_triplets(triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .into_iter()
            .map(|(r, c, v)| if r <= c { (r, c, v) } else { (c, r, v) })
            .collect();
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        Self { entries: merged }
    }

    /// Upper triangle of a dense symmetric matrix, dropping `|v| ≤ drop_tol`.
    pub fn from_dense(m: &DMatrix<f64>, drop_tol: f64) -> Self {
        let n = m.nrows();
        let mut entries = Vec::new();
        for c in 0..n {
            for r in 0..=c {
                let v = m[(r, c)];
                if v.abs() > drop_tol {
                    entries.push((r, c, v));
                }
            }
        }
        Self { entries }
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: (0..n).map(|i| (i, i, 1.0)).collect() }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { entries: self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect() }
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
            if r != c {
                m[(c, r)] += v;
            }
        }
        m
    }

    /// `⟨A, X⟩ = tr(A X)`, reading both triangles of `X`.
    pub fn dot(&self, x: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| if r == c { v * x[(r, r)] } else { v * (x[(r, c)] + x[(c, r)]) })
            .sum()
    }

    /// Both triangles as triplets.
    pub(crate) fn full(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.entries.len());
        for &(r, c, v) in &self.entries {
            out.push((r, c, v));
            if r != c {
                out.push((c, r, v));
            }
        }
        out
    }

    fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.1).max()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    /// `(block index, matrix)` pairs; blocks not listed are zero.
    pub blocks: Vec<(usize, SymSparse)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(blocks: Vec<(usize, SymSparse)>, rhs: f64) -> Self {
        Self { blocks, rhs }
    }

    pub fn dot(&self, x: &[DMatrix<f64>]) -> f64 {
        self.blocks.iter().map(|(b, a)| a.dot(&x[*b])).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub objective: Vec<DMatrix<f64>>,
    pub constraints: Vec<Constraint>,
    /// Known upper bounds on `tr(X_b)` over the feasible set. When present,
    /// the certified dual bound tolerates small negative eigenvalues of `S`.
    pub trace_bounds: Option<Vec<f64>>,
}

impl SdpProblem {
    pub fn new(block_sizes: Vec<usize>, objective: Vec<DMatrix<f64>>, constraints: Vec<Constraint>) -> Self {
        Self { block_sizes, objective, constraints, trace_bounds: None }
    }

    pub fn with_trace_bounds(mut self, bounds: Vec<f64>) -> Self {
        self.trace_bounds = Some(bounds);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::invalid("SDP blocks must be non-empty with size ≥ 1"));
        }
        if self.objective.len() != self.block_sizes.len() {
            return Err(Error::invalid("one objective matrix per block required"));
        }
        for (b, (c, &n)) in self.objective.iter().zip(&self.block_sizes).enumerate() {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::invalid(format!("objective block {b} has wrong shape")));
            }
            let asym = (c - c.transpose()).amax();
            if asym > 1e-12 {
                return Err(Error::invalid(format!("objective block {b} not symmetric ({asym:.2e})")));
            }
        }
        if self.constraints.is_empty() {
            return Err(Error::invalid("an SDP needs at least one constraint"));
        }
        for (i, con) in self.constraints.iter().enumerate() {
            for (b, a) in &con.blocks {
                let n = *self
                    .block_sizes
                    .get(*b)
                    .ok_or_else(|| Error::invalid(format!("constraint {i} names block {b}")))?;
                if a.max_index().is_some_and(|k| k >= n) {
                    return Err(Error::invalid(format!("constraint {i} exceeds block {b}")));
                }
            }
            if !con.rhs.is_finite() {
                return Err(Error::invalid(format!("constraint {i} has non-finite rhs")));
            }
        }
        if let Some(t) = &self.trace_bounds {
            if t.len() != self.block_sizes.len() {
                return Err(Error::invalid("one trace bound per block required"));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[DMatrix<f64>]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c.dot(x)).sum()
    }

    /// `A(X)`.
    pub fn apply_constraints(&self, x: &[DMatrix<f64>]) -> Vec<f64> {
        self.constraints.iter().map(|c| c.dot(x)).collect()
    }

    /// `C − Σ y_i A_i`.
    pub fn dual_slack(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        let mut s = self.objective.clone();
        for (con, &yi) in self.constraints.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for (b, a) in &con.blocks {
                for &(r, c, v) in a.entries() {
                    s[*b][(r, c)] -= yi * v;
                    if r != c {
                        s[*b][(c, r)] -= yi * v;
                    }
                }
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub feas_primal: f64,
    pub feas_dual: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<DMatrix<f64>>,
    pub y: Vec<f64>,
    pub s: Vec<DMatrix<f64>>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Relative gap `|p − d| / (1 + |p| + |d|)`.
    pub gap: f64,
    /// Relative primal residual `‖b − A(X)‖ / (1 + ‖b‖)`.
    pub feas_primal: f64,
    /// Relative dual residual `‖C − Aᵀy − S‖ / (1 + ‖C‖)`.
    pub feas_dual: f64,
    pub iterations: usize,
    /// Constraints removed as linearly dependent before the solve.
    pub dropped_constraints: usize,
    pub history: Vec<IterationRecord>,
    pub message: String,
    pub options: SdpOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-9, feas_tol: 1e-9, max_iter: 100 }
    }
}

/// `[[Re H, −Im H], [Im H, Re H]]`. `H ⪰ 0` iff the embedding is, and the
/// embedding has trace `2 tr H`.
pub fn real_embed(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..h.ncols() {
            let v = h[(r, c)];
            out[(r, c)] = v.re;
            out[(r + n, c + n)] = v.re;
            out[(r, c + n)] = -v.im;
            out[(r + n, c)] = v.im;
        }
    }
    out
}

/// Inverse of [`real_embed`] on matrices with the embedding structure; for a
/// general symmetric `Y` this returns the Hermitian part it represents.
pub fn real_unembed(y: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = y.nrows() / 2;
    DMatrix::from_fn(n, n, |r, c| {
        let re = 0.5 * (y[(r, c)] + y[(r + n, c + n)]);
        let im = 0.5 * (y[(r + n, c)] - y[(r, c + n)]);
        Complex64::new(re, im)
    })
}

/// Real embedding of a sparse Hermitian matrix given as `(row, col, value)`
/// triplets covering both triangles.
pub fn real_embed_sparse(n: usize, triplets: &[(usize, usize, Complex64)]) -> SymSparse {
    let mut out = Vec::with_capacity(4 * triplets.len());
    for &(r, c, v) in triplets {
        // only the upper triangle of the embedding is kept
        if r <= c {
            if v.re != 0.0 {
                out.push((r, c, v.re));
                out.push((r + n, c + n, v.re));
            }
        }
        if v.im != 0.0 {
            // block (r+n, c) holds Im H; store at (c, r+n) when c < r+n
            out.push((c, r + n, v.im));
        }
    }
    SymSparse::from_triplets(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eigenvalues_dense;

    #[test]
    fn embed_real_is_block_duplicate() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -3.0]).map(|v| Complex64::new(v, 0.0));
        let e = real_embed(&h);
        assert_eq!(e[(0, 1)], 2.0);
        assert_eq!(e[(2, 3)], 2.0);
        assert_eq!(e[(0, 2)], 0.0);
        assert_eq!(e.trace(), 2.0 * h.trace().re);
    }

    #[test]
    fn embed_sigma_y() {
        let mut h = DMatrix::<Complex64>::zeros(2, 2);
        h[(0, 1)] = Complex64::new(0.0, -1.0);
        h[(1, 0)] = Complex64::new(0.0, 1.0);
        let ev = eigenvalues_dense(&real_embed(&h)).unwrap();
        let expect = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_embedding_matches_dense() {
        let mut h = DMatrix::<Complex64>::zeros(3, 3);
        h[(0, 0)] = Complex64::new(1.0, 0.0);
        h[(0, 2)] = Complex64::new(0.5, -0.25);
        h[(2, 0)] = Complex64::new(0.5, 0.25);
        h[(1, 2)] = Complex64::new(0.0, 2.0);
        h[(2, 1)] = Complex64::new(0.0, -2.0);
        let trip: Vec<_> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter(|&(r, c)| h[(r, c)] != Complex64::new(0.0, 0.0))
            .map(|(r, c)| (r, c, h[(r, c)]))
            .collect();
        let sparse = real_embed_sparse(3, &trip).to_dense(6);
        assert_eq!(sparse, real_embed(&h));
        let back = real_unembed(&sparse);
        assert_eq!(back, h);
    }

    #[test]
    fn symsparse_merges() {
        let s = SymSparse::from_triplets([(1, 0, 1.0), (0, 1, 2.0), (2, 2, 0.0)]);
        assert_eq!(s.entries(), &[(0, 1, 3.0)]);
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 5.0, 1.0]);
        assert_eq!(s.dot(&x), 30.0);
    }

    #[test]
    fn validation() {
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let p = SdpProblem::new(vec![2], vec![c], vec![Constraint::new(vec![(0, SymSparse::identity(2))], 1.0)]);
        assert!(p.validate().is_err());
        let p = SdpProblem::new(vec![2], vec![DMatrix::zeros(2, 2)], vec![]);
        assert!(p.validate().is_err());
        let p = SdpProblem::new(
            vec![2],
            vec![DMatrix::zeros(2, 2)],
            vec![Constraint::new(vec![(0, SymSparse::identity(3))], 1.0)],
        );
        assert!(p.validate().is_err());
    }
}
