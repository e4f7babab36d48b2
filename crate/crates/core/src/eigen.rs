//! Smallest eigenvalue of Hermitian operators.
//!
//! Dense diagonalization covers small dimensions and serves as the test
//! oracle; larger patches go through a matrix-free Lanczos iteration with
//! full reorthogonalization. Every result carries an explicit residual
//! `‖Hv − θv‖` computed from a final matvec, so that `[θ − r, θ]` brackets an
//! eigenvalue of the operator.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::caps;
use crate::error::{Error, Result};
use crate::operator::{Complex64, LinearOperator, Scalar, SparseOperator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigResult {
    /// Rayleigh quotient of the returned vector, an upper bound on λ_min.
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub orthogonality_loss: Option<f64>,
}

impl EigResult {
    /// `value − residual`: the lower edge of the certified interval.
    pub fn lower_edge(&self) -> f64 {
        self.value - self.residual
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
    /// Iterations between Ritz-value convergence checks.
    pub check_every: usize,
    /// Record `max |QᵀQ − I|` over the Krylov basis (costly; tests only).
    pub track_orthogonality: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-8, seed: 0, max_iter: 500, check_every: 5, track_orthogonality: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    /// Dense up to [`AUTO_DENSE_MAX_DIM`], Lanczos above.
    Auto,
    Dense,
    Lanczos,
}

pub const AUTO_DENSE_MAX_DIM: usize = 256;

impl FromStr for EigenMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "dense" => Ok(Self::Dense),
            "lanczos" => Ok(Self::Lanczos),
            other => Err(Error::invalid(format!("unknown eigensolver {other:?}"))),
        }
    }
}

fn check_dense_dim(n: usize) -> Result<()> {
    let cap = 1usize << (caps::DENSE_MAX_QUBITS as usize);
    if n > cap {
        return Err(Error::CapExceeded {
            what: "dense diagonalization".into(),
            needed: (n as f64).log2(),
            cap: caps::DENSE_MAX_QUBITS,
        });
    }
    if n == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    Ok(())
}

/// Smallest eigenvalue of a Hermitian matrix by full diagonalization.
pub fn min_eig_dense<T: Scalar>(m: &DMatrix<T>) -> Result<f64> {
    check_dense_dim(m.nrows())?;
    let ev = m.clone().symmetric_eigenvalues();
    Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
}

/// All eigenvalues, ascending.
pub fn eigenvalues_dense<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<f64>> {
    check_dense_dim(m.nrows())?;
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Ground state vector and an [`EigResult`] with explicit residual.
pub fn min_eigpair_dense<T: Scalar>(m: &DMatrix<T>) -> Result<(EigResult, DVector<T>)> {
    check_dense_dim(m.nrows())?;
    let eig = m.clone().symmetric_eigen();
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let v: DVector<T> = eig.eigenvectors.column(idx).into_owned();
    let mv = m * &v;
    let theta = v.dotc(&mv).real() / v.dotc(&v).real();
    let resid = (&mv - &v * T::from_real(theta)).norm();
    Ok((
        EigResult { value: theta, residual: resid, iterations: 0, converged: true, orthogonality_loss: None },
        v,
    ))
}

fn dotc<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.conjugate() * *y)
}

fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

fn random_start<T: Scalar>(dim: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<T> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            T::from_c64(Complex64::new(re, im))
        })
        .collect();
    let n = norm(&v);
    for x in v.iter_mut() {
        *x = x.unscale(n);
    }
    v
}

/// Lowest eigenpair of the tridiagonal matrix with diagonal `alpha` and
/// off-diagonal `beta`.
fn tridiag_min(alpha: &[f64], beta: &[f64]) -> (f64, DVector<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    (val, eig.eigenvectors.column(idx).into_owned())
}

/// Matrix-free Lanczos for the smallest eigenvalue of a Hermitian operator.
///
/// Deterministic for a fixed seed. Non-convergence within `max_iter` is
/// reported through `converged = false`, with the best Ritz pair found.
pub fn min_eig_lanczos<T, A>(op: &A, opts: &LanczosOptions) -> Result<EigResult>
where
    T: Scalar,
    A: LinearOperator<T> + ?Sized,
{
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("Lanczos tolerance must be positive"));
    }
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::invalid("empty operator"));
    }
    let max_basis = opts.max_iter.max(1).min(dim);
    let check_every = opts.check_every.max(1);

    let mut basis: Vec<Vec<T>> = Vec::with_capacity(max_basis.min(512));
    basis.push(random_start(dim, opts.seed));
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![T::zero(); dim];
    let mut best: Option<EigResult> = None;
    let mut scale = 0.0f64;

    for j in 0..max_basis {
        op.apply(&basis[j], &mut w);
        let a = dotc(&basis[j], &w).real();
        alpha.push(a);
        axpy(T::from_real(-a), &basis[j], &mut w);
        if j > 0 {
            axpy(T::from_real(-beta[j - 1]), &basis[j - 1], &mut w);
        }
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let c = dotc(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm(&w);
        scale = scale.max(a.abs()).max(b);
        let exhausted = b <= 1e-13 * scale.max(1.0) || j + 1 == dim;
        let last = j + 1 == max_basis;

        if exhausted || last || (j + 1) % check_every == 0 {
            let (theta, s) = tridiag_min(&alpha, &beta);
            let estimate = (b * s[j]).abs();
            if exhausted || last || estimate <= opts.tol {
                let result = ritz_result(op, &basis, &s, theta, j + 1)?;
                let good = result.residual <= opts.tol;
                let better = best.as_ref().map_or(true, |r| result.residual < r.residual);
                if better {
                    best = Some(result);
                }
                if good || exhausted {
                    let mut r = best.take().expect("just stored");
                    r.converged = r.residual <= opts.tol;
                    r.orthogonality_loss = opts.track_orthogonality.then(|| orthogonality_loss(&basis));
                    return Ok(r);
                }
            }
        }
        if last {
            break;
        }
        beta.push(b);
        let next: Vec<T> = w.iter().map(|x| x.unscale(b)).collect();
        basis.push(next);
    }
    let mut r = best.ok_or_else(|| Error::Solver("Lanczos produced no Ritz pair".into()))?;
    r.converged = r.residual <= opts.tol;
    r.orthogonality_loss = opts.track_orthogonality.then(|| orthogonality_loss(&basis));
    Ok(r)
}

fn ritz_result<T, A>(op: &A, basis: &[Vec<T>], s: &DVector<f64>, _theta: f64, k: usize) -> Result<EigResult>
where
    T: Scalar,
    A: LinearOperator<T> + ?Sized,
{
    let dim = op.dim();
    let mut x = vec![T::zero(); dim];
    for (i, q) in basis.iter().take(k).enumerate() {
        axpy(T::from_real(s[i]), q, &mut x);
    }
    let n = norm(&x);
    for v in x.iter_mut() {
        *v = v.unscale(n);
    }
    let mut y = vec![T::zero(); dim];
    op.apply(&x, &mut y);
    let value = dotc(&x, &y).real();
    axpy(T::from_real(-value), &x, &mut y);
    Ok(EigResult { value, residual: norm(&y), iterations: k, converged: false, orthogonality_loss: None })
}

fn orthogonality_loss<T: Scalar>(basis: &[Vec<T>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let g = dotc(a, b);
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g - target).modulus());
        }
    }
    worst
}

/// λ_min of a sparse Hermitian operator with the requested method; uses real
/// arithmetic when every matrix element is real.
pub fn min_eig(op: &SparseOperator, method: EigenMethod, opts: &LanczosOptions) -> Result<EigResult> {
    let dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
        EigenMethod::Auto => op.dim() <= AUTO_DENSE_MAX_DIM,
    };
    let real = op.is_real();
    if dense {
        let m = op.to_dense();
        return if real {
            Ok(min_eigpair_dense(&m.map(|v| v.re))?.0)
        } else {
            Ok(min_eigpair_dense(&m)?.0)
        };
    }
    if real {
        min_eig_lanczos::<f64, _>(op, opts)
    } else {
        min_eig_lanczos::<Complex64, _>(op, opts)
    }
}
