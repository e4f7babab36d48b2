//! Improved Anderson bound: a patch state `ω` on `m` sites and a window
//! state `σ` on `2s` sites, tied together by marginal constraints, with
//! objective `tr(ω h_m) + tr(σ h_bond)`. The optimum `z` satisfies
//! `z/m ≤ e_min` whenever the true translation-invariant state is feasible.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::caps;
use crate::eigen::{self, EigenMethod, LanczosOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_chain, build_ring, ModelSpec};
use crate::operator::{embed_on_sites, Complex64};
use crate::sdp::{
    certified_dual_bound, real_embed_sparse, solve, Constraint, SdpOptions, SdpProblem, SdpSolution, SdpStatus,
    SymSparse,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalMode {
    /// σ equals the marginal of ω on the sites `m−s..m−1, 0..s−1`.
    Wrap,
    /// σ equals the marginal of ω on every window of `2s` consecutive sites.
    Consecutive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Bond term on σ's factors `(s−1, s)`.
    Middle,
    /// Bond term on σ's last two factors.
    LiteralLast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    /// Real when the model term is real, complex otherwise.
    Auto,
    Real,
    Complex,
}

macro_rules! str_enum {
    ($t:ty, $($v:ident => $s:literal),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),+ })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(Self::$v),)+
                    other => Err(Error::invalid(format!(
                        "unknown value {other:?} (expected one of: {})",
                        [$($s),+].join(", ")
                    ))),
                }
            }
        }
    };
}

str_enum!(MarginalMode, Wrap => "wrap", Consecutive => "consecutive");
str_enum!(Placement, Middle => "middle", LiteralLast => "literal_last");
str_enum!(Field, Auto => "auto", Real => "real", Complex => "complex");

#[derive(Clone, Debug)]
pub struct MarginalProblemSpec {
    pub model: ModelSpec,
    pub m: usize,
    pub s: usize,
    pub mode: MarginalMode,
    pub placement: Placement,
    pub field: Field,
    /// Keep only `tr ω = tr σ = 1` (diagnostic).
    pub drop_marginals: bool,
    /// Also require σ's two `(2s−1)`-site marginals (factors `0..2s−2` and
    /// `1..2s−1`) to agree. On by default in consecutive mode, where it
    /// makes `z` nondecreasing in `s`.
    pub sigma_shift_invariance: bool,
}

impl MarginalProblemSpec {
    pub fn new(model: ModelSpec, m: usize, s: usize, mode: MarginalMode) -> Self {
        Self {
            model,
            m,
            s,
            mode,
            placement: Placement::Middle,
            field: Field::Auto,
            drop_marginals: false,
            sigma_shift_invariance: mode == MarginalMode::Consecutive,
        }
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn with_field(mut self, field: Field) -> Self {
        self.field = field;
        self
    }

    pub fn with_shift_invariance(mut self, on: bool) -> Self {
        self.sigma_shift_invariance = on;
        self
    }

    pub fn with_dropped_marginals(mut self, on: bool) -> Self {
        self.drop_marginals = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.dim != 1 {
            return Err(Error::Unsupported("the marginal SDP is implemented for D = 1 only".into()));
        }
        if self.s == 0 || 2 * self.s > self.m {
            return Err(Error::invalid(format!("need 1 ≤ 2s ≤ m, got m = {}, s = {}", self.m, self.s)));
        }
        caps::check_against(
            &format!("marginal SDP patch m = {}", self.m),
            caps::qubit_equivalents(self.model.d, self.m),
            if std::env::var(caps::MAX_QUBITS_ENV).is_ok() {
                caps::max_qubits()
            } else {
                caps::DEFAULT_MARGINAL_QUBITS
            },
        )
    }

    pub fn is_complex(&self) -> bool {
        match self.field {
            Field::Auto => !self.model.is_real(),
            Field::Real => false,
            Field::Complex => true,
        }
    }

    /// Ordered ω sites that make up each window tied to σ.
    pub fn windows(&self) -> Vec<Vec<usize>> {
        let (m, s) = (self.m, self.s);
        match self.mode {
            MarginalMode::Wrap => vec![(m - s..m).chain(0..s).collect()],
            MarginalMode::Consecutive => (0..=m - 2 * s).map(|k| (k..k + 2 * s).collect()).collect(),
        }
    }

    /// σ factors carrying the bond term.
    pub fn bond_factors(&self) -> [usize; 2] {
        match self.placement {
            Placement::Middle => [self.s - 1, self.s],
            Placement::LiteralLast => [2 * self.s - 2, 2 * self.s - 1],
        }
    }
}

/// Marginal of `rho` (on `k` sites of dimension `d`) on the listed factors,
/// in the listed order.
pub fn partial_trace(rho: &DMatrix<Complex64>, d: usize, keep: &[usize]) -> Result<DMatrix<Complex64>> {
    let n = rho.nrows();
    let k = site_count(n, d)?;
    let mut seen = vec![false; k];
    for &site in keep {
        if site >= k || std::mem::replace(&mut seen[site], true) {
            return Err(Error::invalid(format!("keep list {keep:?} invalid for {k} sites")));
        }
    }
    let rest: Vec<usize> = (0..k).filter(|s| !seen[*s]).collect();
    let dk = d.pow(keep.len() as u32);
    let dr = d.pow(rest.len() as u32);
    let mut out = DMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..dr {
                acc += rho[(compose(d, k, keep, a, &rest, e), compose(d, k, keep, b, &rest, e))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

fn site_count(n: usize, d: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::invalid("local dimension must be ≥ 2"));
    }
    let mut k = 0;
    let mut p = 1;
    while p < n {
        p *= d;
        k += 1;
    }
    if p != n {
        return Err(Error::invalid(format!("dimension {n} is not a power of {d}")));
    }
    Ok(k)
}

/// Full index whose digits at `keep` spell `a` and at `rest` spell `e`
/// (site 0 is the most significant digit).
fn compose(d: usize, k: usize, keep: &[usize], a: usize, rest: &[usize], e: usize) -> usize {
    let mut digits = vec![0usize; k];
    spread(d, keep, a, &mut digits);
    spread(d, rest, e, &mut digits);
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

fn spread(d: usize, sites: &[usize], mut value: usize, digits: &mut [usize]) {
    for &site in sites.iter().rev() {
        digits[site] = value % d;
        value /= d;
    }
}

/// Hermitian basis of a `dim`-dimensional space with unit Frobenius norm,
/// each element as both-triangle triplets. The real-symmetric part comes
/// first: `E_rr`, `(E_rc + E_cr)/√2`, then `i(E_rc − E_cr)/√2` if complex.
fn hermitian_basis(dim: usize, complex: bool) -> Vec<Vec<(usize, usize, Complex64)>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for r in 0..dim {
        out.push(vec![(r, r, Complex64::new(1.0, 0.0))]);
        for c in r + 1..dim {
            out.push(vec![(r, c, Complex64::new(h, 0.0)), (c, r, Complex64::new(h, 0.0))]);
        }
    }
    if complex {
        for r in 0..dim {
            for c in r + 1..dim {
                out.push(vec![(r, c, Complex64::new(0.0, h)), (c, r, Complex64::new(0.0, -h))]);
            }
        }
    }
    out
}

/// `B` placed on the listed sites of a `total`-site space.
fn lift(
    b: &[(usize, usize, Complex64)],
    d: usize,
    sites: &[usize],
    total: usize,
) -> Vec<(usize, usize, Complex64)> {
    let rest: Vec<usize> = (0..total).filter(|s| !sites.contains(s)).collect();
    let dr = d.pow(rest.len() as u32);
    let mut out = Vec::with_capacity(b.len() * dr);
    for &(r, c, v) in b {
        for e in 0..dr {
            out.push((compose(d, total, sites, r, &rest, e), compose(d, total, sites, c, &rest, e), v));
        }
    }
    out
}

/// Constraint matrix for a Hermitian operator given as triplets: the upper
/// triangle in the real case, half the real embedding in the complex case,
/// so that `⟨A, X⟩ = tr(ρ B)` either way.
fn encode(trip: &[(usize, usize, Complex64)], n: usize, complex: bool) -> SymSparse {
    if complex {
        real_embed_sparse(n, trip).scaled(0.5)
    } else {
        SymSparse::from_triplets(trip.iter().filter(|t| t.0 <= t.1).map(|&(r, c, v)| (r, c, v.re)))
    }
}

fn encode_dense(m: &DMatrix<Complex64>, complex: bool) -> DMatrix<f64> {
    if complex {
        crate::sdp::real_embed(m) * 0.5
    } else {
        m.map(|v| v.re)
    }
}

pub const OMEGA: usize = 0;
pub const SIGMA: usize = 1;

pub fn build_marginal_sdp(spec: &MarginalProblemSpec) -> Result<SdpProblem> {
    spec.validate()?;
    let d = spec.model.d;
    let (m, w) = (spec.m, 2 * spec.s);
    let complex = spec.is_complex();
    let dim_omega = d.pow(m as u32);
    let dim_sigma = d.pow(w as u32);
    let scale = if complex { 2 } else { 1 };

    let h_m = build_chain(&spec.model, m)?.to_dense();
    let h_bond = embed_on_sites(spec.model.term(), d, &spec.bond_factors(), w)?.to_dense();
    let objective = vec![encode_dense(&h_m, complex), encode_dense(&h_bond, complex)];

    let trace = |n: usize| {
        let id: Vec<_> = (0..n).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect();
        encode(&id, n, complex)
    };
    let mut constraints = vec![Constraint::new(vec![(OMEGA, trace(dim_omega))], 1.0)];
    if spec.drop_marginals {
        constraints.push(Constraint::new(vec![(SIGMA, trace(dim_sigma))], 1.0));
    } else {
        let basis = hermitian_basis(dim_sigma, complex);
        for window in spec.windows() {
            for b in &basis {
                let lifted = lift(b, d, &window, m);
                constraints.push(Constraint::new(
                    vec![
                        (OMEGA, encode(&lifted, dim_omega, complex)),
                        (SIGMA, encode(b, dim_sigma, complex).scaled(-1.0)),
                    ],
                    0.0,
                ));
            }
        }
        if spec.sigma_shift_invariance {
            let left: Vec<usize> = (0..w - 1).collect();
            let right: Vec<usize> = (1..w).collect();
            for b in hermitian_basis(d.pow(w as u32 - 1), complex) {
                let mut trip = lift(&b, d, &left, w);
                trip.extend(lift(&b, d, &right, w).into_iter().map(|(r, c, v)| (r, c, -v)));
                let a = encode(&trip, dim_sigma, complex);
                if !a.is_empty() {
                    constraints.push(Constraint::new(vec![(SIGMA, a)], 0.0));
                }
            }
        }
    }
    Ok(SdpProblem::new(vec![scale * dim_omega, scale * dim_sigma], objective, constraints)
        .with_trace_bounds(vec![scale as f64, scale as f64]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalBoundResult {
    pub m: usize,
    pub s: usize,
    pub mode: MarginalMode,
    pub placement: Placement,
    pub complex: bool,
    pub sigma_shift_invariance: bool,
    /// Dual objective of the SDP.
    pub z: f64,
    /// Rigorous lower bound on the SDP optimum recomputed from `y`.
    pub certified_z: Option<f64>,
    /// `z/m`, present only when the dual residual is within tolerance.
    pub density_bound: Option<f64>,
    pub certified_density_bound: Option<f64>,
    pub primal_obj: f64,
    pub gap: f64,
    pub feas_primal: f64,
    pub feas_dual: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub constraints: usize,
    pub dropped_constraints: usize,
    pub seconds: f64,
}

pub fn improved_anderson_bound(spec: &MarginalProblemSpec, opts: &SdpOptions) -> Result<MarginalBoundResult> {
    Ok(solve_marginal(spec, opts)?.0)
}

/// Like [`improved_anderson_bound`] but also hands back the problem and raw
/// solution for inspection.
pub fn solve_marginal(
    spec: &MarginalProblemSpec,
    opts: &SdpOptions,
) -> Result<(MarginalBoundResult, SdpProblem, SdpSolution)> {
    let start = Instant::now();
    let problem = build_marginal_sdp(spec)?;
    let sol = solve(&problem, opts)?;
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::Solver(format!("marginal SDP reported infeasible: {}", sol.message)));
    }
    let certified_z = certified_dual_bound(&problem, &sol.y);
    let dual_ok = sol.feas_dual <= opts.feas_tol;
    let mf = spec.m as f64;
    let result = MarginalBoundResult {
        m: spec.m,
        s: spec.s,
        mode: spec.mode,
        placement: spec.placement,
        complex: spec.is_complex(),
        sigma_shift_invariance: spec.sigma_shift_invariance && !spec.drop_marginals,
        z: sol.dual_obj,
        certified_z,
        density_bound: dual_ok.then_some(sol.dual_obj / mf),
        certified_density_bound: certified_z.map(|z| z / mf),
        primal_obj: sol.primal_obj,
        gap: sol.gap,
        feas_primal: sol.feas_primal,
        feas_dual: sol.feas_dual,
        status: sol.status,
        iterations: sol.iterations,
        constraints: problem.constraints.len(),
        dropped_constraints: sol.dropped_constraints,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((result, problem, sol))
}

/// Exact `λ_min(H_N)/N` of the periodic `N`-site ring, the value of the
/// unrelaxed program for tiny `N`.
pub fn full_program_oracle(model: &ModelSpec, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("the ring oracle needs N ≥ 2"));
    }
    caps::check_against(
        &format!("ring oracle N = {n}"),
        caps::qubit_equivalents(model.d, n),
        caps::DENSE_MAX_QUBITS,
    )?;
    let ring = build_ring(model, n)?;
    let eig = eigen::min_eig(&ring, EigenMethod::Auto, &LanczosOptions { tol: 1e-10, ..Default::default() })?;
    if !eig.converged {
        return Err(Error::NotConverged { iterations: eig.iterations, residual: eig.residual });
    }
    Ok(eig.value / n as f64)
}
