//! Hermitian operators on `d^n`-dimensional tensor-product spaces.
//!
//! Basis states are indexed with site 0 as the most significant base-`d`
//! digit, so `embed_on_sites(M, [0, 1], 2)` is `M` itself.

use nalgebra::{ComplexField, DMatrix};
use rayon::prelude::*;

use crate::caps;
use crate::error::{Error, Result};

pub type Complex64 = nalgebra::Complex<f64>;

const PARALLEL_MIN_DIM: usize = 1 << 13;

/// Field of the vectors an operator acts on (`f64` for real operators).
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {
    fn from_c64(c: Complex64) -> Self;
    fn to_c64(self) -> Complex64;
}

impl Scalar for f64 {
    fn from_c64(c: Complex64) -> Self {
        c.re
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn from_c64(c: Complex64) -> Self {
        c
    }
    fn to_c64(self) -> Complex64 {
        self
    }
}

/// Matrix-vector contract used by the eigensolvers. `apply` must be
/// reentrant: it may run inside a parallel loop.
pub trait LinearOperator<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    /// `y ← A x`.
    fn apply(&self, x: &[T], y: &mut [T]);
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn new(dim: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<Complex64>) -> Self {
        assert_eq!(indptr.len(), dim + 1);
        assert_eq!(indices.len(), values.len());
        Self { dim, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }
}

/// One local matrix on `k` sites, summed over a list of placements.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSum {
    d: usize,
    sites: usize,
    term: DMatrix<Complex64>,
    placements: Vec<Vec<usize>>,
}

impl LocalSum {
    pub fn new(
        d: usize,
        sites: usize,
        term: DMatrix<Complex64>,
        placements: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("local dimension {d} < 2")));
        }
        let k = placements.first().map_or(0, Vec::len);
        let local_dim = d.checked_pow(k as u32).ok_or_else(|| Error::invalid("local term too large"))?;
        if !placements.is_empty() && (term.nrows() != local_dim || term.ncols() != local_dim) {
            return Err(Error::invalid(format!(
                "term is {}x{}, expected {local_dim}x{local_dim}",
                term.nrows(),
                term.ncols()
            )));
        }
        for p in &placements {
            if p.len() != k {
                return Err(Error::invalid("placements of different arity"));
            }
            for (i, &s) in p.iter().enumerate() {
                if s >= sites {
                    return Err(Error::SupportOverflow(format!("site {s} >= {sites}")));
                }
                if p[..i].contains(&s) {
                    return Err(Error::invalid(format!("position {s} listed twice")));
                }
            }
        }
        caps::check_qubits("operator", caps::qubit_equivalents(d, sites))?;
        Ok(Self { d, sites, term, placements })
    }

    pub fn placements(&self) -> &[Vec<usize>] {
        &self.placements
    }

    fn dim(&self) -> usize {
        self.d.pow(self.sites as u32)
    }

    fn strides(&self) -> Vec<usize> {
        (0..self.sites).map(|s| self.d.pow((self.sites - 1 - s) as u32)).collect()
    }

    /// Calls `f(col, value)` for every nonzero `A[row, col]` contribution.
    fn for_row(&self, row: usize, strides: &[usize], mut f: impl FnMut(usize, Complex64)) {
        let d = self.d;
        for p in &self.placements {
            let mut local_row = 0;
            let mut base = row;
            for &s in p {
                let digit = (row / strides[s]) % d;
                local_row = local_row * d + digit;
                base -= digit * strides[s];
            }
            let ld = self.term.ncols();
            for local_col in 0..ld {
                let v = self.term[(local_row, local_col)];
                if v.re == 0.0 && v.im == 0.0 {
                    continue;
                }
                let mut col = base;
                let mut rem = local_col;
                for &s in p.iter().rev() {
                    col += (rem % d) * strides[s];
                    rem /= d;
                }
                f(col, v);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SparseOperator {
    Csr(CsrMatrix),
    /// Matrix-free sum of local terms.
    Local(LocalSum),
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        match self {
            SparseOperator::Csr(m) => m.dim,
            SparseOperator::Local(l) => l.dim(),
        }
    }

    /// True when every matrix element is real.
    pub fn is_real(&self) -> bool {
        match self {
            SparseOperator::Csr(m) => m.values.iter().all(|v| v.im == 0.0),
            SparseOperator::Local(l) => l.term.iter().all(|v| v.im == 0.0),
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        match self {
            SparseOperator::Csr(m) => m.clone(),
            SparseOperator::Local(l) => {
                let dim = l.dim();
                let strides = l.strides();
                let mut indptr = Vec::with_capacity(dim + 1);
                let mut indices = Vec::new();
                let mut values = Vec::new();
                indptr.push(0);
                let mut buf: Vec<(usize, Complex64)> = Vec::new();
                for r in 0..dim {
                    buf.clear();
                    l.for_row(r, &strides, |c, v| buf.push((c, v)));
                    buf.sort_by_key(|e| e.0);
                    let mut i = 0;
                    while i < buf.len() {
                        let c = buf[i].0;
                        let mut v = Complex64::new(0.0, 0.0);
                        while i < buf.len() && buf[i].0 == c {
                            v += buf[i].1;
                            i += 1;
                        }
                        if v.re != 0.0 || v.im != 0.0 {
                            indices.push(c);
                            values.push(v);
                        }
                    }
                    indptr.push(indices.len());
                }
                CsrMatrix::new(dim, indptr, indices, values)
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let csr = self.to_csr();
        let mut m = DMatrix::zeros(csr.dim, csr.dim);
        for r in 0..csr.dim {
            for (c, v) in csr.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn apply_into<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        match self {
            SparseOperator::Csr(m) => {
                let row = |(r, out): (usize, &mut T)| {
                    let mut acc = T::zero();
                    for (c, v) in m.row(r) {
                        acc += T::from_c64(v) * x[c];
                    }
                    *out = acc;
                };
                if m.dim >= PARALLEL_MIN_DIM {
                    y.par_iter_mut().enumerate().for_each(row);
                } else {
                    y.iter_mut().enumerate().for_each(row);
                }
            }
            SparseOperator::Local(l) => {
                let strides = l.strides();
                let row = |(r, out): (usize, &mut T)| {
                    let mut acc = T::zero();
                    l.for_row(r, &strides, |c, v| acc += T::from_c64(v) * x[c]);
                    *out = acc;
                };
                if l.dim() >= PARALLEL_MIN_DIM {
                    y.par_iter_mut().enumerate().for_each(row);
                } else {
                    y.iter_mut().enumerate().for_each(row);
                }
            }
        }
    }

    /// `⟨x| A |x⟩` for a (not necessarily normalized) vector.
    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply_into(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum()
    }
}

impl<T: Scalar> LinearOperator<T> for SparseOperator {
    fn dim(&self) -> usize {
        SparseOperator::dim(self)
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.apply_into(x, y)
    }
}

/// Dense matrices as operators (oracles and small problems).
pub struct DenseOperator<T: Scalar>(pub DMatrix<T>);

impl<T: Scalar> LinearOperator<T> for DenseOperator<T> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (c, xv) in x.iter().enumerate() {
                acc += self.0[(r, c)] * *xv;
            }
            *out = acc;
        }
    }
}

/// `M` acting on the listed tensor factors (in order), identity elsewhere.
pub fn embed_on_sites(
    m: &DMatrix<Complex64>,
    d: usize,
    positions: &[usize],
    total_sites: usize,
) -> Result<SparseOperator> {
    if positions.is_empty() {
        return Err(Error::invalid("no positions given"));
    }
    let k = positions.len();
    if positions.len() > total_sites {
        return Err(Error::SupportOverflow(format!(
            "{k} positions on {total_sites} sites"
        )));
    }
    Ok(SparseOperator::Local(LocalSum::new(
        d,
        total_sites,
        m.clone(),
        vec![positions.to_vec()],
    )?))
}

pub fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev = 0.0f64;
    for r in 0..n {
        for c in r..n {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.norm()))
}

/// Kronecker product with `a` as the more significant factor.
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// Swap of two `d`-dimensional factors.
pub fn swap_matrix(d: usize) -> DMatrix<Complex64> {
    let mut s = DMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            s[(b * d + a, a * d + b)] = Complex64::new(1.0, 0.0);
        }
    }
    s
}

pub fn to_real(m: &DMatrix<Complex64>) -> Option<DMatrix<f64>> {
    if m.iter().any(|v| v.im != 0.0) {
        return None;
    }
    Some(m.map(|v| v.re))
}

pub fn from_real(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn embed_single_site() {
        let z = PauliString::from_label("Z").unwrap().to_dense();
        let e = embed_on_sites(&z, 2, &[0], 2).unwrap().to_dense();
        let expect = PauliString::from_label("ZI").unwrap().to_dense();
        assert_eq!(e, expect);
    }

    #[test]
    fn embed_reversed_positions_is_swap_conjugation() {
        let h = PauliString::from_label("XZ").unwrap().to_dense()
            + PauliString::from_label("YI").unwrap().to_dense().map(|v| v * 0.3);
        let fwd = embed_on_sites(&h, 2, &[0, 1], 2).unwrap().to_dense();
        let rev = embed_on_sites(&h, 2, &[1, 0], 2).unwrap().to_dense();
        let s = swap_matrix(2);
        let expect = &s * &fwd * &s;
        assert!((rev - expect).iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn embed_trace_identity() {
        let mut m = DMatrix::<Complex64>::zeros(9, 9);
        for i in 0..9 {
            m[(i, i)] = c(i as f64 - 2.0);
        }
        m[(1, 4)] = Complex64::new(0.5, 0.25);
        m[(4, 1)] = Complex64::new(0.5, -0.25);
        let e = embed_on_sites(&m, 3, &[2, 0], 3).unwrap().to_dense();
        assert!((e.trace() - m.trace() * 3.0).norm() < 1e-12);
    }

    #[test]
    fn embed_rejects_clash_and_overflow() {
        let z = DMatrix::<Complex64>::identity(4, 4);
        assert!(embed_on_sites(&z, 2, &[1, 1], 3).is_err());
        assert!(embed_on_sites(&z, 2, &[1, 3], 3).is_err());
    }

    #[test]
    fn matrix_free_apply_matches_csr() {
        let h = PauliString::from_label("XY").unwrap().to_dense();
        let op = SparseOperator::Local(
            LocalSum::new(2, 4, h, vec![vec![0, 1], vec![1, 2], vec![3, 0]]).unwrap(),
        );
        let csr = SparseOperator::Csr(op.to_csr());
        let x: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let mut y1 = vec![Complex64::new(0.0, 0.0); 16];
        let mut y2 = y1.clone();
        op.apply_into(&x, &mut y1);
        csr.apply_into(&x, &mut y2);
        assert_eq!(y1, y2);
    }
}
