//! Variational upper bounds from product states, and finite-ring reference
//! densities.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::caps;
use crate::eigen::{self, min_eigpair_dense, EigenMethod, LanczosOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_patch, ModelSpec, PatchSpec};
use crate::operator::Complex64;

/// Qubit-equivalent cap of the ring reference unless overridden.
pub const RING_MAX_QUBITS: f64 = 24.0;

const SWEEPS: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductStateResult {
    pub value: f64,
    pub restarts: usize,
    pub sweeps: usize,
}

/// `⟨u⊗v| h |u⊗v⟩`.
fn bond_energy(h: &DMatrix<Complex64>, u: &DVector<Complex64>, v: &DVector<Complex64>) -> f64 {
    let psi = u.kronecker(v);
    (psi.adjoint() * h * &psi)[(0, 0)].re
}

/// `⟨v|₂ h |v⟩₂` and `⟨v|₁ h |v⟩₁` as `d × d` operators on the other factor.
fn contract(h: &DMatrix<Complex64>, v: &DVector<Complex64>) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let d = v.len();
    let mut right = DMatrix::zeros(d, d);
    let mut left = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let (mut r, mut l) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for p in 0..d {
                for q in 0..d {
                    let w = v[p].conj() * v[q];
                    r += w * h[(a * d + p, b * d + q)];
                    l += w * h[(p * d + a, q * d + b)];
                }
            }
            right[(a, b)] = r;
            left[(a, b)] = l;
        }
    }
    (right, left)
}

fn random_unit(d: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    let v = DVector::from_fn(d, |_, _| {
        Complex64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Energy density of the state `…abab…` with sublattice states `u`, `v`:
/// `D (⟨uv|h|uv⟩ + ⟨vu|h|vu⟩) / 2`.
pub fn product_density(model: &ModelSpec, u: &DVector<Complex64>, v: &DVector<Complex64>) -> f64 {
    let h = model.term();
    model.dim as f64 * 0.5 * (bond_energy(h, u, v) + bond_energy(h, v, u))
}

/// Best two-sublattice product state found by alternating minimization from
/// `restarts` seeded random starts. Any product state's density is an upper
/// bound on the ground-state density; the checkerboard pattern is valid on
/// the chain and the square lattice alike.
pub fn product_state_upper(model: &ModelSpec, restarts: usize, seed: u64) -> Result<ProductStateResult> {
    if restarts == 0 {
        return Err(Error::invalid("need at least one restart"));
    }
    let d = model.d;
    let h = model.term();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut total_sweeps = 0;
    for _ in 0..restarts {
        let mut u = random_unit(d, &mut rng);
        let mut v = random_unit(d, &mut rng);
        let mut energy = product_density(model, &u, &v);
        for _ in 0..SWEEPS {
            total_sweeps += 1;
            // u sits on the left of bond (u, v) and the right of (v, u)
            let (rv, lv) = contract(h, &v);
            let (_, vec) = min_eigpair_dense(&(rv + lv))?;
            u = vec;
            let (ru, lu) = contract(h, &u);
            let (_, vec) = min_eigpair_dense(&(ru + lu))?;
            v = vec;
            let next = product_density(model, &u, &v);
            let done = energy - next <= 1e-14 * (1.0 + next.abs());
            energy = next;
            if done {
                break;
            }
        }
        best = best.min(energy);
    }
    Ok(ProductStateResult { value: best, restarts, sweeps: total_sweeps })
}

/// `λ_min` of the periodic patch of linear size `n` divided by its site
/// count. A display reference only: finite rings can lie on either side of
/// the infinite-lattice density.
pub fn ring_reference(model: &ModelSpec, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("ring reference needs n ≥ 2"));
    }
    let patch = PatchSpec::periodic(n, model.dim);
    let cap = if std::env::var(caps::MAX_QUBITS_ENV).is_ok() { caps::max_qubits() } else { RING_MAX_QUBITS };
    caps::check_against(
        &format!("ring reference n = {n}"),
        caps::qubit_equivalents(model.d, patch.sites()),
        cap,
    )?;
    let op = build_patch(model, &patch)?;
    let eig = eigen::min_eig(&op, EigenMethod::Auto, &LanczosOptions { tol: 1e-10, ..Default::default() })?;
    if !eig.converged {
        return Err(Error::NotConverged { iterations: eig.iterations, residual: eig.residual });
    }
    Ok(eig.value / patch.sites() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::builtin_model;
    use crate::pauli::PauliSum;

    fn zz() -> ModelSpec {
        ModelSpec::from_pauli_sum("zz", 1, &PauliSum::from_labels(&[("ZZ", 1.0)]).unwrap()).unwrap()
    }

    /// Grid over real Bloch-sphere angles for both sublattices.
    fn bloch_grid(model: &ModelSpec, steps: usize) -> f64 {
        let state = |t: f64, p: f64| {
            DVector::from_vec(vec![
                Complex64::new((t / 2.0).cos(), 0.0),
                Complex64::from_polar((t / 2.0).sin(), p),
            ])
        };
        let pi = std::f64::consts::PI;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..steps {
                let u = state(pi * i as f64 / steps as f64, 2.0 * pi * j as f64 / steps as f64);
                for k in 0..=steps {
                    for l in 0..steps {
                        let v = state(pi * k as f64 / steps as f64, 2.0 * pi * l as f64 / steps as f64);
                        best = best.min(product_density(model, &u, &v));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn ising_neel() {
        let r = product_state_upper(&zz(), 4, 0).unwrap();
        assert!((r.value + 1.0).abs() < 1e-10);
    }

    #[test]
    fn heisenberg_matches_grid() {
        let h = builtin_model("heisenberg", &[]).unwrap();
        let r = product_state_upper(&h, 4, 0).unwrap();
        let grid = bloch_grid(&h, 8);
        assert!((r.value + 0.5).abs() < 1e-10);
        assert!(r.value <= grid + 1e-12);
        assert!((grid + 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_model() {
        let r = product_state_upper(&ModelSpec::zero(3, 1), 2, 5).unwrap();
        assert!(r.value.abs() < 1e-15);
    }

    #[test]
    fn shift_covariance() {
        let h = builtin_model("tfim", &[0.8]).unwrap();
        let base = product_state_upper(&h, 6, 1).unwrap().value;
        let shifted = product_state_upper(&h.shifted(2.5).unwrap(), 6, 1).unwrap().value;
        assert!((shifted - 2.5 - base).abs() < 1e-10);
    }

    #[test]
    fn two_dimensional_scaling() {
        let h = builtin_model("heisenberg", &[]).unwrap().with_dim(2).unwrap();
        let r = product_state_upper(&h, 4, 0).unwrap();
        assert!((r.value + 1.0).abs() < 1e-10);
    }

    #[test]
    fn ring_values() {
        let h = builtin_model("heisenberg", &[]).unwrap();
        assert!((ring_reference(&h, 2).unwrap() + 1.5).abs() < 1e-10);
        assert!((ring_reference(&h, 4).unwrap() + 1.0).abs() < 1e-10);
        let r16 = ring_reference(&h, 16).unwrap();
        let exact = 0.5 - 2.0 * 2f64.ln();
        assert!(r16 < exact && r16 > exact - 0.01, "{r16}");
        assert!(ring_reference(&h, 1).is_err());
        if std::env::var(caps::MAX_QUBITS_ENV).is_err() {
            assert!(matches!(ring_reference(&h, 25), Err(Error::CapExceeded { .. })));
        }
    }
}
