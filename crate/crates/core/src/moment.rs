//! Translation-invariant moment-matrix relaxation for qubit chains.
//!
//! The operator set is every Pauli string on a window of `ℓ` sites. Entry
//! `(a, b)` of the moment matrix is `⟨O_a O_b⟩`; strings that are translates
//! of each other share one real variable, which encodes translation
//! invariance without explicit equality constraints. Minimizing the bond
//! energy over `X(y) ⪰ 0`, `y_I = 1` bounds the energy density from below.

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::ModelSpec;
use crate::operator::Complex64;
use crate::pauli::{all_strings, i_pow, PauliString};
use crate::sdp::{real_embed_sparse, solve, Constraint, SdpOptions, SdpProblem, SdpSolution, SdpStatus};

pub const MAX_BASIS_ELL: usize = 6;
/// Largest window solved by default; the embedded moment matrix at `ℓ = 4`
/// is already 512 × 512.
pub const MAX_SOLVE_ELL: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBasis {
    pub ell: usize,
    pub operators: Vec<PauliString>,
}

pub fn build_basis(ell: usize) -> Result<OperatorBasis> {
    if !(2..=MAX_BASIS_ELL).contains(&ell) {
        return Err(Error::invalid(format!("window length ℓ = {ell} outside 2..={MAX_BASIS_ELL}")));
    }
    Ok(OperatorBasis { ell, operators: all_strings(ell) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MomentEntry {
    /// `X_ab = i^phase · y_var`.
    pub phase: u8,
    pub var: usize,
}

#[derive(Clone, Debug)]
pub struct MomentStructure {
    pub ell: usize,
    /// Hermitian representative of each translation class; index 0 is the identity.
    pub classes: Vec<PauliString>,
    index: HashMap<(u64, u64), usize>,
    entries: Vec<MomentEntry>,
    size: usize,
}

/// Translation class of `p` and the phase `k` with `p = i^k · class`.
fn classify(p: &PauliString) -> (PauliString, u8) {
    let (_, canon) = p.canonicalize();
    (canon.hermitian_form(), canon.phase_relative_to_hermitian())
}

pub fn build_structure(basis: &OperatorBasis) -> MomentStructure {
    let n = basis.operators.len();
    let mut classes = vec![PauliString::identity(basis.ell)];
    let mut index = HashMap::from([((0u64, 0u64), 0usize)]);
    let mut entries = Vec::with_capacity(n * n);
    for a in &basis.operators {
        let adag = a.dagger();
        for b in &basis.operators {
            let prod = adag.multiply(b).expect("basis strings share the window width");
            let (class, phase) = classify(&prod);
            let key = (class.x_mask(), class.z_mask());
            let var = *index.entry(key).or_insert_with(|| {
                classes.push(class);
                classes.len() - 1
            });
            entries.push(MomentEntry { phase, var });
        }
    }
    MomentStructure { ell: basis.ell, classes, index, entries, size: n }
}

impl MomentStructure {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn variables(&self) -> usize {
        self.classes.len()
    }

    pub fn entry(&self, a: usize, b: usize) -> MomentEntry {
        self.entries[a * self.size + b]
    }

    /// Variable index of the translation class of `p`, if it occurs.
    pub fn class_of(&self, p: &PauliString) -> Option<(usize, u8)> {
        let (class, phase) = classify(p);
        self.index.get(&(class.x_mask(), class.z_mask())).map(|&v| (v, phase))
    }

    /// `X(y)`; `y[0]` multiplies the identity class.
    pub fn assemble(&self, y: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.size, self.size, |a, b| {
            let e = self.entry(a, b);
            i_pow(e.phase) * y[e.var]
        })
    }

    /// Bond energy as `constant + Σ coeffs[v] y_v` (with `coeffs[0] = 0`).
    pub fn objective(&self, model: &ModelSpec) -> Result<(f64, Vec<f64>)> {
        let sum = model
            .pauli()
            .ok_or_else(|| Error::Unsupported("moment relaxation needs a qubit model (d = 2)".into()))?;
        let mut coeffs = vec![0.0; self.variables()];
        let mut constant = 0.0;
        for (c, p) in sum.terms() {
            if p.width() > self.ell {
                return Err(Error::invalid(format!("term support {} exceeds ℓ = {}", p.width(), self.ell)));
            }
            let wide = p.translate(0, self.ell, false)?;
            let (var, phase) = self
                .class_of(&wide)
                .ok_or_else(|| Error::invalid(format!("term {p} has no class in the window")))?;
            let sign = i_pow(phase).re;
            if var == 0 {
                constant += c * sign;
            } else {
                coeffs[var] += c * sign;
            }
        }
        Ok((constant, coeffs))
    }

    /// Both-triangle triplets of the coefficient matrix of variable `v`.
    fn pattern(&self) -> Vec<Vec<(usize, usize, Complex64)>> {
        let mut out = vec![Vec::new(); self.variables()];
        for a in 0..self.size {
            for b in 0..self.size {
                let e = self.entry(a, b);
                out[e.var].push((a, b, i_pow(e.phase)));
            }
        }
        out
    }
}

/// The relaxation in standard primal form: `min tr Z` over `Z ⪰ 0` with
/// `⟨emb F_v, Z⟩ = c_v` for each non-identity class. Its dual is
/// `max -Σ c_v y_v` subject to `X(y) ⪰ 0`, so the bond-energy minimum is
/// `constant − optimum`.
pub fn build_moment_sdp(structure: &MomentStructure, model: &ModelSpec) -> Result<(SdpProblem, f64)> {
    let (constant, coeffs) = structure.objective(model)?;
    let n = structure.size;
    let patterns = structure.pattern();
    let constraints = patterns
        .iter()
        .enumerate()
        .skip(1)
        .map(|(v, trip)| Constraint::new(vec![(0, real_embed_sparse(n, trip))], coeffs[v]))
        .collect();
    let problem = SdpProblem::new(vec![2 * n], vec![DMatrix::identity(2 * n, 2 * n)], constraints);
    Ok((problem, constant))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentBoundResult {
    pub ell: usize,
    pub variables: usize,
    pub matrix_size: usize,
    /// Rigorous lower bound on the energy density.
    pub bound: f64,
    /// Relaxation value at the solver's moment point, `constant + Σ c y`.
    pub relaxation_value: f64,
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub seconds: f64,
}

/// Lower bound `constant − tr Z − Σ|r_v| + min(λ_min Z, 0) · 2n` valid for
/// every `y` with `X(y) ⪰ 0`, since then `|y_v| ≤ 1` and `tr emb X(y) = 2n`.
fn certified_moment_bound(problem: &SdpProblem, sol: &SdpSolution, constant: f64, n: usize) -> f64 {
    let z = &sol.x[0];
    let az = problem.apply_constraints(&sol.x);
    let residual: f64 = problem.constraints.iter().zip(&az).map(|(c, a)| (a - c.rhs).abs()).sum();
    let sym = (z + z.transpose()) * 0.5;
    let lmin = SymmetricEigen::new(sym).eigenvalues.min();
    let margin = 8.0 * (2 * n) as f64 * f64::EPSILON * (z.norm() + 1.0);
    constant - z.trace() - residual + (lmin - margin).min(0.0) * (2 * n) as f64 - margin
}

pub fn ti_moment_bound(model: &ModelSpec, ell: usize, opts: &SdpOptions) -> Result<MomentBoundResult> {
    if model.dim != 1 {
        return Err(Error::Unsupported("moment relaxation is implemented for chains (D = 1)".into()));
    }
    if model.d != 2 {
        return Err(Error::Unsupported("moment relaxation needs d = 2".into()));
    }
    let limit = if std::env::var(crate::caps::MAX_QUBITS_ENV).is_ok() { MAX_BASIS_ELL } else { MAX_SOLVE_ELL };
    if ell > limit {
        return Err(Error::CapExceeded { what: "moment window ℓ".into(), needed: ell as f64, cap: limit as f64 });
    }
    let start = Instant::now();
    let structure = build_structure(&build_basis(ell)?);
    let (problem, constant) = build_moment_sdp(&structure, model)?;
    let sol = solve(&problem, opts)?;
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::Solver(format!("moment SDP reported infeasible: {}", sol.message)));
    }
    let n = structure.size();
    Ok(MomentBoundResult {
        ell,
        variables: structure.variables() - 1,
        matrix_size: n,
        bound: certified_moment_bound(&problem, &sol, constant, n),
        relaxation_value: constant - sol.dual_obj,
        gap: sol.gap,
        status: sol.status,
        iterations: sol.iterations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Class values `y_v` of a ring state, averaged over all translations.
pub fn state_class_values(rho: &DMatrix<Complex64>, structure: &MomentStructure) -> Result<Vec<f64>> {
    let dim = rho.nrows();
    if dim < 2 || !dim.is_power_of_two() || rho.ncols() != dim {
        return Err(Error::invalid("state must be a square matrix of dimension 2^n"));
    }
    let n = dim.trailing_zeros() as usize;
    if n < 2 * structure.ell {
        return Err(Error::invalid(format!("ring of {n} sites is shorter than 2ℓ = {}", 2 * structure.ell)));
    }
    if crate::operator::hermitian_deviation(rho) > 1e-10 {
        return Err(Error::invalid("state is not Hermitian"));
    }
    if (rho.trace().re - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("state does not have unit trace"));
    }
    let lmin = SymmetricEigen::new(rho.clone()).eigenvalues.min();
    if lmin < -1e-10 {
        return Err(Error::invalid(format!("state has negative eigenvalue {lmin:.3e}")));
    }
    let mut y = vec![0.0; structure.variables()];
    y[0] = 1.0;
    for (v, class) in structure.classes.iter().enumerate().skip(1) {
        let mut acc = 0.0;
        for shift in 0..n {
            let p = class.translate(shift as isize, n, true)?;
            let mut e = Complex64::new(0.0, 0.0);
            for col in 0..dim {
                let (row, val) = p.apply_basis(col);
                e += val * rho[(col, row)];
            }
            acc += e.re;
        }
        y[v] = acc / n as f64;
    }
    Ok(y)
}

/// Moment matrix of an actual ring state with translation-averaged entries.
pub fn oracle_moment_matrix(rho: &DMatrix<Complex64>, structure: &MomentStructure) -> Result<DMatrix<Complex64>> {
    Ok(structure.assemble(&state_class_values(rho, structure)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{min_eig_dense, min_eigpair_dense};
    use crate::hamiltonian::{build_ring, builtin_model};
    use crate::pauli::PauliSum;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zz() -> ModelSpec {
        ModelSpec::from_pauli_sum("zz", 1, &PauliSum::from_labels(&[("ZZ", 1.0)]).unwrap()).unwrap()
    }

    #[test]
    fn basis_counts() {
        let b = build_basis(2).unwrap();
        assert_eq!(b.operators.len(), 16);
        let labels: Vec<String> = b.operators.iter().map(|p| p.label()).collect();
        for l in ["II", "XI", "IX", "XX", "YZ"] {
            assert!(labels.contains(&l.to_string()));
        }
        assert_eq!(labels[0], "II");
        assert!(b.operators.iter().all(|p| b.operators.contains(&p.dagger())));
        assert!(build_basis(1).is_err() && build_basis(7).is_err());
    }

    #[test]
    fn structure_examples() {
        let b = build_basis(2).unwrap();
        let s = build_structure(&b);
        let pos = |l: &str| b.operators.iter().position(|p| p.label() == l).unwrap();
        assert_eq!(s.entry(pos("XI"), pos("XI")), MomentEntry { phase: 0, var: 0 });
        assert_eq!(s.entry(pos("ZI"), pos("ZI")).var, 0);
        assert_eq!(s.entry(pos("IZ"), pos("IZ")).var, 0);
        assert_eq!(s.entry(pos("II"), pos("ZI")), s.entry(pos("II"), pos("IZ")));
        // X·Y = iZ
        let e = s.entry(pos("XI"), pos("YI"));
        assert_eq!(e.phase, 1);
        assert_eq!(s.classes[e.var].label(), "ZI");
        for a in 0..16 {
            assert_eq!(s.entry(a, a), MomentEntry { phase: 0, var: 0 });
            for c in 0..16 {
                let (x, y) = (s.entry(a, c), s.entry(c, a));
                assert_eq!(x.var, y.var);
                assert_eq!(i_pow(x.phase).conj(), i_pow(y.phase));
            }
        }
    }

    #[test]
    fn assembled_matrix_is_hermitian() {
        let s = build_structure(&build_basis(3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let y: Vec<f64> = (0..s.variables()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = s.assemble(&y);
            assert_eq!(x, x.adjoint());
        }
    }

    #[test]
    fn maximally_mixed_state() {
        let s = build_structure(&build_basis(2).unwrap());
        let rho = DMatrix::<Complex64>::identity(16, 16) / Complex64::new(16.0, 0.0);
        let x = oracle_moment_matrix(&rho, &s).unwrap();
        assert!((x - DMatrix::<Complex64>::identity(16, 16)).norm() < 1e-12);
    }

    #[test]
    fn bad_states_rejected() {
        let s = build_structure(&build_basis(2).unwrap());
        let mut rho = DMatrix::<Complex64>::identity(16, 16);
        assert!(oracle_moment_matrix(&rho, &s).is_err());
        rho /= Complex64::new(16.0, 0.0);
        rho[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(oracle_moment_matrix(&rho, &s).is_err());
        let small = DMatrix::<Complex64>::identity(8, 8) / Complex64::new(8.0, 0.0);
        assert!(oracle_moment_matrix(&small, &s).is_err());
    }

    #[test]
    fn random_product_state_is_psd() {
        let s = build_structure(&build_basis(2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut psi = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for _ in 0..4 {
            let q = DMatrix::from_fn(2, 1, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let q = &q / Complex64::new(q.norm(), 0.0);
            psi = psi.kronecker(&q);
        }
        let rho = &psi * psi.adjoint();
        let x = oracle_moment_matrix(&rho, &s).unwrap();
        assert!(min_eig_dense(&x).unwrap() > -1e-9);
    }

    #[test]
    fn objective_of_heisenberg() {
        let s = build_structure(&build_basis(2).unwrap());
        let (c, coeffs) = s.objective(&builtin_model("heisenberg", &[]).unwrap()).unwrap();
        assert_eq!(c, 0.0);
        let nz: Vec<String> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| s.classes[i].label())
            .collect();
        assert_eq!(nz.len(), 3);
        assert!(nz.contains(&"XX".to_string()));
    }

    #[test]
    fn ising_is_exact_at_ell_two() {
        let r = ti_moment_bound(&zz(), 2, &SdpOptions::default()).unwrap();
        assert!((r.bound + 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn heisenberg_ring_state_dominates() {
        let h = builtin_model("heisenberg", &[]).unwrap();
        let opts = SdpOptions::default();
        let r2 = ti_moment_bound(&h, 2, &opts).unwrap();
        assert!(r2.bound <= 0.5 - 2.0 * 2f64.ln() + 1e-7);
        assert!(r2.bound <= r2.relaxation_value + 1e-7);
        let ring = build_ring(&h, 8).unwrap().to_dense();
        let (eig, v) = min_eigpair_dense(&ring).unwrap();
        let rho = &v * v.adjoint();
        let s = build_structure(&build_basis(2).unwrap());
        let y = state_class_values(&rho, &s).unwrap();
        let x = s.assemble(&y);
        assert!(min_eig_dense(&x).unwrap() > -1e-9);
        let (c, coeffs) = s.objective(&h).unwrap();
        let energy = c + coeffs.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        assert!((energy - eig.value / 8.0).abs() < 1e-9);
        assert!(energy >= r2.bound - 1e-9);
    }

    #[test]
    fn rejects_unsupported() {
        let h = builtin_model("heisenberg", &[]).unwrap();
        let opts = SdpOptions::default();
        assert!(ti_moment_bound(&h.clone().with_dim(2).unwrap(), 2, &opts).is_err());
        if std::env::var(crate::caps::MAX_QUBITS_ENV).is_err() {
            assert!(matches!(ti_moment_bound(&h, 5, &opts), Err(Error::CapExceeded { .. })));
        }
    }
}
