//! Models (a two-site interaction term plus a lattice dimension) and the
//! patch and ring Hamiltonians built from them.
//!
//! One-site fields are not a separate input. They are folded into the
//! two-site term, split evenly over the `2D` bonds touching each site, so a
//! field `g·A` per site becomes `(g / 2D)(A⊗I + I⊗A)` per bond. In one
//! dimension this is `(g/2)(A⊗I + I⊗A)`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::caps;
use crate::eigen;
use crate::error::{Error, Result};
use crate::operator::{self, Complex64, LocalSum, SparseOperator};
use crate::pauli::{PauliString, PauliSum};

pub const BUILTIN_MODELS: &[(&str, &str)] = &[
    ("heisenberg", "(XX + YY + ZZ)/2, no parameters"),
    ("xxz", "(XX + YY + Δ·ZZ)/2, parameter Δ"),
    ("tfim", "−ZZ − g·X per site folded onto bonds, parameter g"),
    ("random_twosite", "seeded random Hermitian 4x4 term, parameter seed"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    /// Local dimension.
    pub d: usize,
    /// Lattice dimension.
    pub dim: usize,
    term: DMatrix<Complex64>,
    pauli: Option<PauliSum>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, d: usize, dim: usize, term: DMatrix<Complex64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("local dimension d = {d} must be ≥ 2")));
        }
        if dim < 1 {
            return Err(Error::invalid("lattice dimension must be ≥ 1"));
        }
        if term.nrows() != d * d || term.ncols() != d * d {
            return Err(Error::invalid(format!(
                "two-site term is {}x{}, expected {}x{} for d = {d}",
                term.nrows(),
                term.ncols(),
                d * d,
                d * d
            )));
        }
        let dev = operator::hermitian_deviation(&term);
        if dev > 1e-12 {
            return Err(Error::NotHermitian(dev));
        }
        let term = (&term + term.adjoint()).map(|v| v * 0.5);
        let pauli = if d == 2 {
            let p = PauliSum::decompose_hermitian(&term)?;
            let err = operator::max_abs(&(p.to_dense() - &term));
            if err > 1e-10 {
                return Err(Error::invalid(format!("Pauli reconstruction error {err:.3e}")));
            }
            Some(p)
        } else {
            None
        };
        Ok(Self { name: name.into(), d, dim, term, pauli })
    }

    pub fn from_pauli_sum(name: impl Into<String>, dim: usize, sum: &PauliSum) -> Result<Self> {
        if sum.width() != 2 {
            return Err(Error::invalid(format!(
                "two-site term needs width-2 Pauli strings, got width {}",
                sum.width()
            )));
        }
        Self::new(name, 2, dim, sum.to_dense())
    }

    pub fn term(&self) -> &DMatrix<Complex64> {
        &self.term
    }

    pub fn pauli(&self) -> Option<&PauliSum> {
        self.pauli.as_ref()
    }

    pub fn is_real(&self) -> bool {
        self.term.iter().all(|v| v.im == 0.0)
    }

    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::invalid("lattice dimension must be ≥ 1"));
        }
        self.dim = dim;
        Ok(self)
    }

    /// `c · h`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.name.clone(), self.d, self.dim, self.term.map(|v| v * c))
    }

    /// `h + c · I⊗I`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        let n = self.term.nrows();
        Self::new(
            self.name.clone(),
            self.d,
            self.dim,
            &self.term + DMatrix::<Complex64>::identity(n, n).map(|v| v * c),
        )
    }

    pub fn zero(d: usize, dim: usize) -> Self {
        Self::new("zero", d, dim, DMatrix::zeros(d * d, d * d)).expect("zero term is valid")
    }

    /// λ_min of the bare two-site term.
    pub fn term_min_eig(&self) -> f64 {
        eigen::min_eig_dense(&self.term).expect("two-site term is small")
    }

    pub fn to_document(&self) -> ModelDocument {
        let term = match &self.pauli {
            Some(p) => TermDocument {
                pauli_sum: Some(
                    p.terms()
                        .iter()
                        .map(|(c, s)| PauliEntry { paulis: s.label(), coeff: *c })
                        .collect(),
                ),
                dense: None,
            },
            None => TermDocument {
                pauli_sum: None,
                dense: Some(DenseDocument::Flat(self.term.transpose().iter().map(|v| [v.re, v.im]).collect())),
            },
        };
        ModelDocument { name: self.name.clone(), d: self.d, dim: self.dim, term }
    }
}

/// Model file layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub name: String,
    pub d: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    pub term: TermDocument,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli_sum: Option<Vec<PauliEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<DenseDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliEntry {
    pub paulis: String,
    pub coeff: f64,
}

/// Row-major `[re, im]` pairs, either flat or as nested rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DenseDocument {
    Flat(Vec<[f64; 2]>),
    Rows(Vec<Vec<[f64; 2]>>),
}

pub fn parse_model(document: &str) -> Result<ModelSpec> {
    let doc: ModelDocument =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    model_from_document(&doc)
}

pub fn model_from_document(doc: &ModelDocument) -> Result<ModelSpec> {
    match (&doc.term.pauli_sum, &doc.term.dense) {
        (Some(_), Some(_)) | (None, None) => Err(Error::Schema(
            "term must contain exactly one of `pauli_sum` or `dense`".into(),
        )),
        (Some(entries), None) => {
            if doc.d != 2 {
                return Err(Error::Schema(format!("`pauli_sum` needs d = 2, got d = {}", doc.d)));
            }
            let mut terms = Vec::with_capacity(entries.len());
            for e in entries {
                if e.paulis.chars().count() != 2 {
                    return Err(Error::Schema(format!(
                        "Pauli label {:?} must act on exactly two sites",
                        e.paulis
                    )));
                }
                let p = PauliString::from_label(&e.paulis).map_err(|e| Error::Schema(e.to_string()))?;
                terms.push((e.coeff, p));
            }
            let sum = PauliSum::from_terms(2, terms)?;
            ModelSpec::from_pauli_sum(doc.name.clone(), doc.dim, &sum)
        }
        (None, Some(dense)) => {
            let n = doc.d * doc.d;
            let flat: Vec<[f64; 2]> = match dense {
                DenseDocument::Flat(v) => v.clone(),
                DenseDocument::Rows(rows) => {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(Error::Schema(format!("dense term must be {n}x{n}")));
                    }
                    rows.iter().flatten().copied().collect()
                }
            };
            if flat.len() != n * n {
                return Err(Error::Schema(format!(
                    "dense term has {} entries, d = {} needs {}",
                    flat.len(),
                    doc.d,
                    n * n
                )));
            }
            let m = DMatrix::from_row_iterator(n, n, flat.iter().map(|[re, im]| Complex64::new(*re, *im)));
            ModelSpec::new(doc.name.clone(), doc.d, doc.dim, m)
        }
    }
}

fn pauli2(label: &str) -> DMatrix<Complex64> {
    PauliString::from_label(label).expect("static label").to_dense()
}

/// `(g / 2D)(A⊗I + I⊗A)` for a one-site operator `A`.
pub fn fold_one_site(a: &DMatrix<Complex64>, g: f64, dim: usize) -> DMatrix<Complex64> {
    let d = a.nrows();
    let id = DMatrix::<Complex64>::identity(d, d);
    let w = g / (2.0 * dim as f64);
    (operator::kron(a, &id) + operator::kron(&id, a)).map(|v| v * w)
}

pub fn builtin_model(name: &str, params: &[f64]) -> Result<ModelSpec> {
    builtin_model_dim(name, params, 1)
}

pub fn builtin_model_dim(name: &str, params: &[f64], dim: usize) -> Result<ModelSpec> {
    let expect = |n: usize| -> Result<()> {
        if params.len() != n {
            return Err(Error::invalid(format!(
                "model {name:?} takes {n} parameter(s), got {}",
                params.len()
            )));
        }
        Ok(())
    };
    let half = |m: DMatrix<Complex64>| m.map(|v| v * 0.5);
    match name {
        "heisenberg" => {
            expect(0)?;
            ModelSpec::new(name, 2, dim, half(pauli2("XX") + pauli2("YY") + pauli2("ZZ")))
        }
        "xxz" => {
            expect(1)?;
            let delta = params[0];
            ModelSpec::new(
                name,
                2,
                dim,
                half(pauli2("XX") + pauli2("YY") + pauli2("ZZ").map(|v| v * delta)),
            )
        }
        "tfim" => {
            expect(1)?;
            let g = params[0];
            let x = pauli2("X");
            ModelSpec::new(name, 2, dim, -pauli2("ZZ") - fold_one_site(&x, g, dim))
        }
        "random_twosite" => {
            expect(1)?;
            let seed = params[0];
            if seed < 0.0 || seed.fract() != 0.0 {
                return Err(Error::invalid("random_twosite seed must be a non-negative integer"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let raw = DMatrix::<Complex64>::from_fn(4, 4, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            });
            ModelSpec::new(name, 2, dim, half(&raw + raw.adjoint()))
        }
        other => Err(Error::invalid(format!(
            "unknown model {other:?} (known: {})",
            BUILTIN_MODELS.iter().map(|m| m.0).collect::<Vec<_>>().join(", ")
        ))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchSpec {
    pub m: usize,
    pub dim: usize,
    pub boundary: Boundary,
}

impl PatchSpec {
    pub fn open(m: usize, dim: usize) -> Self {
        Self { m, dim, boundary: Boundary::Open }
    }
    pub fn periodic(m: usize, dim: usize) -> Self {
        Self { m, dim, boundary: Boundary::Periodic }
    }
    pub fn sites(&self) -> usize {
        self.m.pow(self.dim as u32)
    }
}

/// Nearest-neighbour bonds of an `m^D` patch. Sites are row-major; bonds go
/// to the right and downward neighbours (wrapping when periodic).
pub fn patch_bonds(patch: &PatchSpec) -> Result<Vec<(usize, usize)>> {
    let m = patch.m;
    let periodic = patch.boundary == Boundary::Periodic;
    match patch.dim {
        1 => {
            let mut b: Vec<(usize, usize)> = (0..m.saturating_sub(1)).map(|i| (i, i + 1)).collect();
            if periodic && m >= 2 {
                b.push((m - 1, 0));
            }
            Ok(b)
        }
        2 => {
            let idx = |r: usize, c: usize| r * m + c;
            let mut b = Vec::new();
            for r in 0..m {
                for c in 0..m {
                    if c + 1 < m {
                        b.push((idx(r, c), idx(r, c + 1)));
                    } else if periodic {
                        b.push((idx(r, c), idx(r, 0)));
                    }
                    if r + 1 < m {
                        b.push((idx(r, c), idx(r + 1, c)));
                    } else if periodic {
                        b.push((idx(r, c), idx(0, c)));
                    }
                }
            }
            Ok(b)
        }
        other => Err(Error::Unsupported(format!(
            "explicit patches only for D ∈ {{1, 2}}, got D = {other}"
        ))),
    }
}

/// Sum of the two-site term over every bond of the patch.
pub fn build_patch(model: &ModelSpec, patch: &PatchSpec) -> Result<SparseOperator> {
    if patch.m < 2 {
        return Err(Error::invalid(format!("patch size m = {} must be ≥ 2", patch.m)));
    }
    let bonds = patch_bonds(patch)?;
    let sites = patch.sites();
    caps::check_qubits(
        &format!("patch m = {}, D = {}", patch.m, patch.dim),
        caps::qubit_equivalents(model.d, sites),
    )?;
    let placements = bonds.into_iter().map(|(a, b)| vec![a, b]).collect();
    Ok(SparseOperator::Local(LocalSum::new(model.d, sites, model.term.clone(), placements)?))
}

/// Periodic chain of `n` sites (the ring reference Hamiltonian).
pub fn build_ring(model: &ModelSpec, n: usize) -> Result<SparseOperator> {
    build_patch(model, &PatchSpec::periodic(n, 1))
}

/// Open chain of `n` sites.
pub fn build_chain(model: &ModelSpec, n: usize) -> Result<SparseOperator> {
    build_patch(model, &PatchSpec::open(n, 1))
}

/// Largest absolute eigenvalue of the two-site term.
pub fn operator_norm(model: &ModelSpec) -> f64 {
    let ev = eigen::eigenvalues_dense(&model.term).expect("two-site term is small");
    ev.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub fn bond_count(patch: &PatchSpec) -> Result<usize> {
    Ok(patch_bonds(patch)?.len())
}
