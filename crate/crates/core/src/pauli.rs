//! Symbolic algebra of multi-site Pauli operators for qubit chains.
//!
//! A [`PauliString`] stores `i^phase · X^x Z^z` with one bit per site in each
//! mask. A site with both bits set therefore carries `XZ = -i·Y`, and the
//! Hermitian string with a `Y` on that site has one extra factor of `i`.
//!
//! Site `0` is the first (most significant) tensor factor when a string is
//! turned into a matrix, which matches the ordering used by the dense
//! operators in [`crate::operator`].

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::caps;
use crate::error::{Error, Result};
use crate::operator::{Complex64, CsrMatrix, SparseOperator};

const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// `i^k` for `k` taken mod 4.
pub fn i_pow(k: u8) -> Complex64 {
    I_POW[(k & 3) as usize]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    width: usize,
    x_mask: u64,
    z_mask: u64,
    phase_exp: u8,
}

fn low_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl PauliString {
    pub const MAX_WIDTH: usize = 64;

    pub fn new(width: usize, x_mask: u64, z_mask: u64, phase_exp: u8) -> Result<Self> {
        if width == 0 || width > Self::MAX_WIDTH {
            return Err(Error::invalid(format!("Pauli width {width} outside 1..=64")));
        }
        let m = low_mask(width);
        if x_mask & !m != 0 || z_mask & !m != 0 {
            return Err(Error::SupportOverflow(format!(
                "masks use bits beyond width {width}"
            )));
        }
        Ok(Self { width, x_mask, z_mask, phase_exp: phase_exp & 3 })
    }

    pub fn identity(width: usize) -> Self {
        Self::new(width, 0, 0, 0).expect("valid identity width")
    }

    /// Hermitian string from a label such as `"XIZ"` (character `k` acts on site `k`).
    pub fn from_label(label: &str) -> Result<Self> {
        let width = label.chars().count();
        let mut x = 0u64;
        let mut z = 0u64;
        for (site, ch) in label.chars().enumerate() {
            let bit = 1u64 << site;
            match ch {
                'I' | 'i' => {}
                'X' | 'x' => x |= bit,
                'Z' | 'z' => z |= bit,
                'Y' | 'y' => {
                    x |= bit;
                    z |= bit;
                }
                other => return Err(Error::invalid(format!("bad Pauli character {other:?}"))),
            }
        }
        let y = (x & z).count_ones() as u8;
        Self::new(width, x, z, y)
    }

    /// Single-site Hermitian Pauli `kind` ∈ {'X','Y','Z'} at `site`.
    pub fn single(width: usize, site: usize, kind: char) -> Result<Self> {
        if site >= width {
            return Err(Error::SupportOverflow(format!("site {site} >= width {width}")));
        }
        let mut label = vec!['I'; width];
        label[site] = kind;
        Self::from_label(&label.into_iter().collect::<String>())
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }
    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }
    pub fn phase_exp(&self) -> u8 {
        self.phase_exp
    }
    pub fn support(&self) -> u64 {
        self.x_mask | self.z_mask
    }
    pub fn is_identity_up_to_phase(&self) -> bool {
        self.support() == 0
    }
    fn y_count(&self) -> u8 {
        ((self.x_mask & self.z_mask).count_ones() & 3) as u8
    }

    /// `P = P†` holds exactly when the phase exponent and the number of `Y`
    /// sites have equal parity.
    pub fn is_hermitian(&self) -> bool {
        (self.phase_exp & 1) == (self.y_count() & 1)
    }

    /// Same masks with phase chosen so that the string is the Hermitian
    /// Pauli product (`Y` on sites with both bits set).
    pub fn hermitian_form(&self) -> Self {
        Self { phase_exp: self.y_count(), ..*self }
    }

    /// Phase `k` such that `self = i^k · self.hermitian_form()`.
    pub fn phase_relative_to_hermitian(&self) -> u8 {
        (self.phase_exp + 4 - self.y_count()) & 3
    }

    pub fn with_phase(&self, phase_exp: u8) -> Self {
        Self { phase_exp: phase_exp & 3, ..*self }
    }

    pub fn label(&self) -> String {
        (0..self.width)
            .map(|s| {
                let b = 1u64 << s;
                match (self.x_mask & b != 0, self.z_mask & b != 0) {
                    (false, false) => 'I',
                    (true, false) => 'X',
                    (false, true) => 'Z',
                    (true, true) => 'Y',
                }
            })
            .collect()
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.width != other.width {
            return Err(Error::WidthMismatch { left: self.width, right: other.width });
        }
        // Z^{z1} X^{x2} = (-1)^{|z1 & x2|} X^{x2} Z^{z1}
        let swap = ((self.z_mask & other.x_mask).count_ones() & 1) as u8;
        Ok(Self {
            width: self.width,
            x_mask: self.x_mask ^ other.x_mask,
            z_mask: self.z_mask ^ other.z_mask,
            phase_exp: (self.phase_exp + other.phase_exp + 2 * swap) & 3,
        })
    }

    pub fn dagger(&self) -> Self {
        // (i^k X^x Z^z)† = i^{-k} Z^z X^x = i^{-k + 2y} X^x Z^z
        let k = (4 - self.phase_exp + 2 * self.y_count()) & 3;
        Self { phase_exp: k, ..*self }
    }

    /// Move the support by `shift` sites onto a window of `target_width`
    /// sites. Without `periodic`, any site leaving the window is an error.
    pub fn translate(&self, shift: isize, target_width: usize, periodic: bool) -> Result<Self> {
        if target_width == 0 || target_width > Self::MAX_WIDTH {
            return Err(Error::invalid(format!("target width {target_width} outside 1..=64")));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for site in 0..self.width {
            let b = 1u64 << site;
            if self.support() & b == 0 {
                continue;
            }
            let mut dest = site as isize + shift;
            if periodic {
                dest = dest.rem_euclid(target_width as isize);
            } else if dest < 0 || dest >= target_width as isize {
                return Err(Error::SupportOverflow(format!(
                    "site {site} shifted by {shift} leaves width {target_width}"
                )));
            }
            let db = 1u64 << dest;
            if self.x_mask & b != 0 {
                x |= db;
            }
            if self.z_mask & b != 0 {
                z |= db;
            }
        }
        Ok(Self { width: target_width, x_mask: x, z_mask: z, phase_exp: self.phase_exp })
    }

    /// Split into `(offset, canonical)` with the leftmost non-identity site of
    /// `canonical` at position 0. The phase stays on the string.
    pub fn canonicalize(&self) -> (usize, Self) {
        let sup = self.support();
        if sup == 0 {
            return (0, *self);
        }
        let off = sup.trailing_zeros() as usize;
        (
            off,
            Self {
                x_mask: self.x_mask >> off,
                z_mask: self.z_mask >> off,
                ..*self
            },
        )
    }

    /// Dense `2^width` matrix; meant for tests and small oracles.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.width;
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let (row, v) = self.apply_basis(col);
            m[(row, col)] = v;
        }
        m
    }

    /// Image of computational basis state `col`: `P|col⟩ = v |row⟩`.
    pub fn apply_basis(&self, col: usize) -> (usize, Complex64) {
        let (flip, zbits) = (self.matrix_mask(self.x_mask), self.matrix_mask(self.z_mask));
        let sign = ((zbits & col as u64).count_ones() & 1) as u8;
        (col ^ flip as usize, i_pow(self.phase_exp + 2 * sign))
    }

    // site s ↔ matrix-index bit (width - 1 - s)
    fn matrix_mask(&self, mask: u64) -> u64 {
        let mut out = 0u64;
        for s in 0..self.width {
            if mask & (1u64 << s) != 0 {
                out |= 1u64 << (self.width - 1 - s);
            }
        }
        out
    }

    /// Sparse matrix of this string embedded on the first `width` of `sites` qubits.
    pub fn to_sparse_matrix(&self, sites: usize) -> Result<SparseOperator> {
        let widened = self.widen(sites)?;
        caps::check_qubits("Pauli matrix", sites as f64)?;
        let dim = 1usize << sites;
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::with_capacity(dim);
        let mut values = Vec::with_capacity(dim);
        indptr.push(0);
        // P is unitary with a single entry per row: row r maps from column P(r).
        let pd = widened.dagger();
        for row in 0..dim {
            let (col, v) = pd.apply_basis(row);
            indices.push(col);
            values.push(v.conj());
            indptr.push(indices.len());
        }
        Ok(SparseOperator::Csr(CsrMatrix::new(dim, indptr, indices, values)))
    }

    fn widen(&self, sites: usize) -> Result<Self> {
        if sites < self.width {
            return Err(Error::SupportOverflow(format!(
                "width {} does not fit on {sites} sites",
                self.width
            )));
        }
        Self::new(sites, self.x_mask, self.z_mask, self.phase_exp)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase_relative_to_hermitian() {
            0 => "",
            1 => "i·",
            2 => "-",
            _ => "-i·",
        };
        write!(f, "{prefix}{}", self.label())
    }
}

/// Real linear combination of Hermitian Pauli strings of a common width.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    width: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    /// Merges duplicates, drops exact zeros, and brings every string to its
    /// Hermitian form (folding a `-1` into the coefficient when needed).
    pub fn from_terms(width: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        if width == 0 || width > PauliString::MAX_WIDTH {
            return Err(Error::invalid(format!("Pauli width {width} outside 1..=64")));
        }
        let mut acc: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for (c, p) in terms {
            if p.width() != width {
                return Err(Error::WidthMismatch { left: width, right: p.width() });
            }
            let sign = match p.phase_relative_to_hermitian() {
                0 => 1.0,
                2 => -1.0,
                _ => {
                    return Err(Error::NotHermitian(1.0));
                }
            };
            *acc.entry((p.x_mask(), p.z_mask())).or_insert(0.0) += sign * c;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|((x, z), c)| {
                let y = ((x & z).count_ones() & 3) as u8;
                (c, PauliString { width, x_mask: x, z_mask: z, phase_exp: y })
            })
            .collect();
        Ok(Self { width, terms })
    }

    pub fn from_labels(terms: &[(&str, f64)]) -> Result<Self> {
        let width = terms
            .first()
            .map(|(l, _)| l.chars().count())
            .ok_or_else(|| Error::invalid("empty Pauli sum needs an explicit width"))?;
        let parsed = terms
            .iter()
            .map(|(l, c)| PauliString::from_label(l).map(|p| (*c, p)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(width, parsed)
    }

    pub fn zero(width: usize) -> Self {
        Self { width, terms: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn coefficient(&self, label: &str) -> f64 {
        self.terms
            .iter()
            .find(|(_, p)| p.label() == label)
            .map_or(0.0, |(c, _)| *c)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.width;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, p) in &self.terms {
            for col in 0..dim {
                let (row, v) = p.apply_basis(col);
                m[(row, col)] += v * *c;
            }
        }
        m
    }

    pub fn to_sparse_matrix(&self, sites: usize) -> Result<SparseOperator> {
        if sites < self.width {
            return Err(Error::SupportOverflow(format!(
                "width {} does not fit on {sites} sites",
                self.width
            )));
        }
        caps::check_qubits("Pauli matrix", sites as f64)?;
        let dim = 1usize << sites;
        let widened: Vec<(f64, PauliString)> = self
            .terms
            .iter()
            .map(|(c, p)| p.widen(sites).map(|w| (*c, w.dagger())))
            .collect::<Result<_>>()?;
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let mut row_buf: Vec<(usize, Complex64)> = Vec::with_capacity(widened.len());
        for row in 0..dim {
            row_buf.clear();
            for (c, pd) in &widened {
                let (col, v) = pd.apply_basis(row);
                row_buf.push((col, v.conj() * *c));
            }
            row_buf.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < row_buf.len() {
                let col = row_buf[i].0;
                let mut v = Complex64::new(0.0, 0.0);
                while i < row_buf.len() && row_buf[i].0 == col {
                    v += row_buf[i].1;
                    i += 1;
                }
                if v != Complex64::new(0.0, 0.0) {
                    indices.push(col);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(SparseOperator::Csr(CsrMatrix::new(dim, indptr, indices, values)))
    }

    /// Pauli coefficients `c_P = tr(P M) / 2^k` of a Hermitian matrix on `k` qubits.
    pub fn decompose_hermitian(m: &DMatrix<Complex64>) -> Result<Self> {
        let dim = m.nrows();
        if dim != m.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::invalid(format!(
                "expected a 2^k x 2^k matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let dev = crate::operator::hermitian_deviation(m);
        if dev > 1e-12 {
            return Err(Error::NotHermitian(dev));
        }
        let k = dim.trailing_zeros() as usize;
        if k > 12 {
            return Err(Error::CapExceeded {
                what: "Pauli decomposition".into(),
                needed: k as f64,
                cap: 12.0,
            });
        }
        let mut terms = Vec::new();
        let full = low_mask(k);
        for x in 0..=full {
            for z in 0..=full {
                let y = ((x & z).count_ones() & 3) as u8;
                let p = PauliString { width: k, x_mask: x, z_mask: z, phase_exp: y };
                // tr(P M) = Σ_col ⟨col| P M |col⟩ = Σ_col Σ_r P[col, r] M[r, col]
                let mut tr = Complex64::new(0.0, 0.0);
                for r in 0..dim {
                    let (row, v) = p.apply_basis(r);
                    tr += v * m[(r, row)];
                }
                let c = tr.re / dim as f64;
                if c.abs() > 1e-14 {
                    terms.push((c, p));
                }
            }
        }
        Self::from_terms(k, terms)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, p)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}·{}", p.label())?;
        }
        Ok(())
    }
}

/// All `4^width` Hermitian strings in lexical order (`I < X < Y < Z`, site 0
/// most significant).
pub fn all_strings(width: usize) -> Vec<PauliString> {
    let count = 1usize << (2 * width);
    (0..count)
        .map(|code| {
            let mut x = 0u64;
            let mut z = 0u64;
            for site in 0..width {
                let digit = (code >> (2 * (width - 1 - site))) & 3;
                let b = 1u64 << site;
                match digit {
                    1 => x |= b,
                    2 => {
                        x |= b;
                        z |= b;
                    }
                    3 => z |= b,
                    _ => {}
                }
            }
            let y = ((x & z).count_ones() & 3) as u8;
            PauliString { width, x_mask: x, z_mask: z, phase_exp: y }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_close(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> bool {
        (a - b).iter().all(|v| v.norm() < 1e-12)
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        let x = PauliString::from_label("X").unwrap();
        let z = PauliString::from_label("Z").unwrap();
        let y = PauliString::from_label("Y").unwrap();
        let xz = x.multiply(&z).unwrap();
        assert_eq!(xz.label(), "Y");
        assert_eq!(xz.phase_relative_to_hermitian(), 3); // -i
        let minus_i_y = y.to_dense().map(|v| v * Complex64::new(0.0, -1.0));
        assert!(dense_close(&xz.to_dense(), &minus_i_y));
    }

    #[test]
    fn identity_is_neutral_and_involution() {
        let p = PauliString::from_label("XZ").unwrap();
        let id = PauliString::identity(2);
        assert_eq!(id.multiply(&p).unwrap(), p);
        let sq = p.multiply(&p).unwrap();
        assert!(sq.is_identity_up_to_phase());
        assert_eq!(sq.phase_exp(), 0);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let a = PauliString::from_label("X").unwrap();
        let b = PauliString::from_label("XX").unwrap();
        assert!(matches!(a.multiply(&b), Err(Error::WidthMismatch { .. })));
    }

    #[test]
    fn dagger_cases() {
        let y = PauliString::from_label("Y").unwrap();
        assert_eq!(y.dagger(), y);
        assert!(y.is_hermitian());
        let ix = PauliString::from_label("X").unwrap().with_phase(1);
        assert!(!ix.is_hermitian());
        assert_eq!(ix.dagger().phase_exp(), 3);
    }

    #[test]
    fn translate_cases() {
        let x0 = PauliString::single(4, 0, 'X').unwrap();
        assert_eq!(x0.translate(2, 4, false).unwrap(), PauliString::single(4, 2, 'X').unwrap());
        assert_eq!(x0.translate(0, 4, false).unwrap(), x0);
        let z3 = PauliString::single(4, 3, 'Z').unwrap();
        assert_eq!(z3.translate(1, 4, true).unwrap(), PauliString::single(4, 0, 'Z').unwrap());
        assert!(matches!(z3.translate(1, 4, false), Err(Error::SupportOverflow(_))));
    }

    #[test]
    fn canonicalize_cases() {
        let z3 = PauliString::single(5, 3, 'Z').unwrap();
        let (off, c) = z3.canonicalize();
        assert_eq!(off, 3);
        assert_eq!(c, PauliString::single(5, 0, 'Z').unwrap());
        let id = PauliString::identity(5);
        assert_eq!(id.canonicalize(), (0, id));
        let xy = PauliString::from_label("IIXYI").unwrap();
        let (off, c) = xy.canonicalize();
        assert_eq!(off, 2);
        assert_eq!(c.label(), "XYIII");
        assert_eq!(c.translate(off as isize, 5, false).unwrap(), xy);
    }

    #[test]
    fn sparse_matrices_of_single_paulis() {
        let z = PauliString::from_label("Z").unwrap().to_sparse_matrix(1).unwrap().to_dense();
        assert_eq!(z[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], Complex64::new(-1.0, 0.0));
        let x = PauliString::from_label("X").unwrap().to_sparse_matrix(1).unwrap().to_dense();
        assert_eq!(x[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(x[(1, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(x[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn y_matrix_matches_convention() {
        let y = PauliString::from_label("Y").unwrap().to_dense();
        assert_eq!(y[(0, 1)], Complex64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn heisenberg_decomposition() {
        let h = PauliSum::from_labels(&[("XX", 0.5), ("YY", 0.5), ("ZZ", 0.5)]).unwrap();
        let back = PauliSum::decompose_hermitian(&h.to_dense()).unwrap();
        assert_eq!(back.terms().len(), 3);
        for l in ["XX", "YY", "ZZ"] {
            assert!((back.coefficient(l) - 0.5).abs() < 1e-14);
        }
        let eye = DMatrix::<Complex64>::identity(4, 4);
        let d = PauliSum::decompose_hermitian(&eye).unwrap();
        assert_eq!(d.terms().len(), 1);
        assert!((d.coefficient("II") - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decompose_rejects_non_hermitian() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(PauliSum::decompose_hermitian(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn sum_merges_and_drops() {
        let s = PauliSum::from_labels(&[("XZ", 1.0), ("XZ", -1.0), ("ZZ", 2.0), ("ZZ", 0.5)]).unwrap();
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.coefficient("ZZ"), 2.5);
    }

    #[test]
    fn sparse_sum_matches_dense() {
        let s = PauliSum::from_labels(&[("XY", 0.3), ("ZI", -1.2), ("YY", 0.7)]).unwrap();
        let sp = s.to_sparse_matrix(2).unwrap().to_dense();
        assert!(dense_close(&sp, &s.to_dense()));
        let wide = s.to_sparse_matrix(3).unwrap().to_dense();
        assert_eq!(wide.nrows(), 8);
    }

    #[test]
    fn lexical_basis() {
        let b = all_strings(2);
        assert_eq!(b.len(), 16);
        assert_eq!(b[0].label(), "II");
        assert_eq!(b[1].label(), "IX");
        assert_eq!(b[4].label(), "XI");
        assert_eq!(b[15].label(), "ZZ");
        assert!(b.iter().all(|p| p.is_hermitian()));
    }
}
