//! Primal-dual interior point method with the HKM search direction and
//! Mehrotra predictor-corrector steps.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{IterationRecord, SdpOptions, SdpProblem, SdpSolution, SdpStatus};
use crate::error::{Error, Result};

const STEP_FRACTION: f64 = 0.95;
const DIVERGENCE: f64 = 1e10;
const DEPENDENCE_TOL: f64 = 1e-10;

type Triplets = Vec<(usize, usize, f64)>;

/// Constraint data after presolve, grouped by block.
struct Prepared {
    sizes: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    b: DVector<f64>,
    /// Per block: `(kept constraint index, both-triangle triplets)`, sorted by index.
    by_block: Vec<Vec<(usize, Triplets)>>,
    gram: DMatrix<f64>,
}

impl Prepared {
    fn m(&self) -> usize {
        self.b.len()
    }

    fn a_op(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        for (blk, list) in self.by_block.iter().enumerate() {
            for (i, trip) in list {
                out[*i] += trip.iter().map(|&(r, c, v)| v * x[blk][(r, c)]).sum::<f64>();
            }
        }
        out
    }

    fn at_op(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (blk, list) in self.by_block.iter().enumerate() {
            for (i, trip) in list {
                let yi = y[*i];
                if yi == 0.0 {
                    continue;
                }
                for &(r, c, v) in trip {
                    out[blk][(r, c)] += yi * v;
                }
            }
        }
        out
    }

    /// `M_ij = Σ_b tr(A_ib X_b A_jb Z_b)` with `Z = S⁻¹`.
    fn schur(&self, x: &[DMatrix<f64>], z: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.m();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (blk, list) in self.by_block.iter().enumerate() {
            let (xb, zb) = (&x[blk], &z[blk]);
            let n = xb.nrows();
            for (pos, (i, trip)) in list.iter().enumerate() {
                let g = x_a_z(xb, zb, trip, n);
                for (j, tj) in &list[pos..] {
                    schur[(*i, *j)] += tj.iter().map(|&(p, q, w)| w * g[(q, p)]).sum::<f64>();
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                schur[(i, j)] = schur[(j, i)];
            }
        }
        schur
    }
}

/// `X A Z` for sparse symmetric `A`, choosing between a sum of outer
/// products and a dense product by operation count.
fn x_a_z(x: &DMatrix<f64>, z: &DMatrix<f64>, trip: &Triplets, n: usize) -> DMatrix<f64> {
    if trip.len() < n {
        let mut g = DMatrix::zeros(n, n);
        for &(r, c, v) in trip {
            let xr = x.column(r);
            for q in 0..n {
                let w = v * z[(c, q)];
                if w != 0.0 {
                    g.column_mut(q).axpy(w, &xr, 1.0);
                }
            }
        }
        g
    } else {
        // Z A, whose transpose is A Z since both are symmetric
        let mut za = DMatrix::zeros(n, n);
        for &(r, c, v) in trip {
            za.column_mut(c).axpy(v, &z.column(r), 1.0);
        }
        x * za.transpose()
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

fn frob2(blocks: &[DMatrix<f64>]) -> f64 {
    blocks.iter().map(|b| b.norm_squared()).sum()
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a.dot(b)).sum()
}

fn max_abs(blocks: &[DMatrix<f64>]) -> f64 {
    blocks.iter().map(|b| b.amax()).fold(0.0, f64::max)
}

/// Largest `α` with `X + α ΔX ⪰ 0` for `X ≻ 0` (∞ when unbounded).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(w) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(mut w) = l.solve_lower_triangular(&w.transpose()) else {
        return 0.0;
    };
    symmetrize(&mut w);
    let lmin = min_eig(&w);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn blocks_step(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> f64 {
    x.iter().zip(dx).map(|(x, d)| max_step(x, d)).fold(f64::INFINITY, f64::min)
}

/// Gram matrix `⟨A_i, A_j⟩` of the constraint matrices.
fn gram(problem: &SdpProblem) -> DMatrix<f64> {
    let m = problem.constraints.len();
    let mut index: HashMap<(usize, usize, usize), Vec<(usize, f64)>> = HashMap::new();
    for (i, con) in problem.constraints.iter().enumerate() {
        for (blk, a) in &con.blocks {
            for &(r, c, v) in a.entries() {
                // off-diagonal entries appear twice in the Frobenius product
                let w = if r == c { v } else { v * std::f64::consts::SQRT_2 };
                index.entry((*blk, r, c)).or_default().push((i, w));
            }
        }
    }
    let mut g = DMatrix::zeros(m, m);
    for list in index.values() {
        for &(i, vi) in list {
            for &(j, vj) in list {
                g[(i, j)] += vi * vj;
            }
        }
    }
    g
}

/// Pivoted Cholesky on the Gram matrix; returns the indices of a maximal
/// linearly independent subset, in increasing order.
fn independent_subset(g: &DMatrix<f64>) -> Vec<usize> {
    let m = g.nrows();
    let max_diag = (0..m).map(|i| g[(i, i)]).fold(0.0, f64::max);
    if max_diag <= 0.0 {
        return Vec::new();
    }
    let mut d: Vec<f64> = (0..m).map(|i| g[(i, i)]).collect();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut l: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut rank = 0;
    for k in 0..m {
        let (pj, &pv) = perm[k..]
            .iter()
            .enumerate()
            .map(|(j, &p)| (j + k, &d[p]))
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        if pv <= DEPENDENCE_TOL * max_diag {
            break;
        }
        perm.swap(k, pj);
        let pk = perm[k];
        let lkk = pv.sqrt();
        l[pk].push(lkk);
        let lk = l[pk].clone();
        for &pj in &perm[k + 1..] {
            let s: f64 = l[pj].iter().zip(&lk[..k]).map(|(a, b)| a * b).sum();
            let v = (g[(pj, pk)] - s) / lkk;
            l[pj].push(v);
            d[pj] -= v * v;
        }
        rank += 1;
    }
    let mut keep = perm[..rank].to_vec();
    keep.sort_unstable();
    keep
}

enum Presolve {
    Ready(Prepared, Vec<usize>),
    Inconsistent(String),
}

fn presolve(problem: &SdpProblem) -> Result<Presolve> {
    let g_all = gram(problem);
    let keep = independent_subset(&g_all);
    let m_all = problem.constraints.len();
    if keep.is_empty() {
        if problem.constraints.iter().any(|c| c.rhs.abs() > 1e-12) {
            return Ok(Presolve::Inconsistent("all constraint matrices vanish but rhs does not".into()));
        }
        return Err(Error::invalid("all constraint matrices are zero"));
    }
    let gram_kept = DMatrix::from_fn(keep.len(), keep.len(), |a, b| g_all[(keep[a], keep[b])]);
    let b_kept = DVector::from_iterator(keep.len(), keep.iter().map(|&i| problem.constraints[i].rhs));
    if keep.len() < m_all {
        let chol = gram_kept
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Solver("Gram matrix of independent constraints is singular".into()))?;
        let mut kept_mask = vec![false; m_all];
        for &k in &keep {
            kept_mask[k] = true;
        }
        for dropped in (0..m_all).filter(|&i| !kept_mask[i]) {
            let col = DVector::from_iterator(keep.len(), keep.iter().map(|&k| g_all[(k, dropped)]));
            let lam = chol.solve(&col);
            let implied = lam.dot(&b_kept);
            let rhs = problem.constraints[dropped].rhs;
            let scale = 1.0 + rhs.abs().max(lam.iter().zip(b_kept.iter()).map(|(a, b)| (a * b).abs()).sum());
            if (implied - rhs).abs() > 1e-8 * scale {
                return Ok(Presolve::Inconsistent(format!(
                    "constraint {dropped} is a combination of others with rhs {implied:.6e}, not {rhs:.6e}"
                )));
            }
        }
    }
    let mut position = vec![usize::MAX; m_all];
    for (pos, &k) in keep.iter().enumerate() {
        position[k] = pos;
    }
    let mut by_block: Vec<Vec<(usize, Triplets)>> = vec![Vec::new(); problem.block_sizes.len()];
    for &k in &keep {
        for (blk, a) in &problem.constraints[k].blocks {
            if !a.is_empty() {
                by_block[*blk].push((position[k], a.full()));
            }
        }
    }
    Ok(Presolve::Ready(
        Prepared {
            sizes: problem.block_sizes.clone(),
            c: problem.objective.clone(),
            b: b_kept,
            by_block,
            gram: gram_kept,
        },
        keep,
    ))
}

/// Interior starting point. Uses feasible points when they are cheap to
/// construct and falls back to scaled identities otherwise.
fn starting_point(p: &Prepared) -> Result<(Vec<DMatrix<f64>>, DVector<f64>, Vec<DMatrix<f64>>)> {
    let chol = p
        .gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Solver("Gram matrix of kept constraints is not positive definite".into()))?;
    let ntot: usize = p.sizes.iter().sum();
    let identity: Vec<DMatrix<f64>> = p.sizes.iter().map(|&n| DMatrix::identity(n, n)).collect();
    let u = chol.solve(&p.a_op(&identity));
    let a_t_u = p.at_op(&u);
    let perp: Vec<DMatrix<f64>> = identity.iter().zip(&a_t_u).map(|(i, a)| i - a).collect();
    let perp_norm = (frob2(&perp) / ntot as f64).sqrt();
    let identity_in_span = perp_norm <= 1e-8;

    let x_min_norm = p.at_op(&chol.solve(&p.b));
    let lam_x = x_min_norm.iter().map(min_eig).fold(f64::INFINITY, f64::min);
    let scale_x = max_abs(&x_min_norm).max(1e-3);
    let fallback_x = || -> Vec<DMatrix<f64>> {
        let xi = (frob2(&x_min_norm).sqrt()).max(10.0);
        identity.iter().map(|i| i * xi).collect()
    };
    let x0 = if lam_x > 1e-6 * scale_x {
        x_min_norm.clone()
    } else if !identity_in_span {
        let mut tau = 2.0 * lam_x.abs().max(1e-3);
        let mut found = None;
        for _ in 0..40 {
            let cand: Vec<DMatrix<f64>> = x_min_norm.iter().zip(&perp).map(|(x, q)| x + q * tau).collect();
            if cand.iter().map(min_eig).fold(f64::INFINITY, f64::min) > 0.0 {
                // back off from the boundary
                found = Some(x_min_norm.iter().zip(&perp).map(|(x, q)| x + q * (2.0 * tau)).collect());
                break;
            }
            tau *= 4.0;
        }
        found.unwrap_or_else(fallback_x)
    } else {
        fallback_x()
    };

    let lam_c = p.c.iter().map(min_eig).fold(f64::INFINITY, f64::min);
    let c_scale = (frob2(&p.c) / ntot as f64).sqrt();
    let m = p.m();
    let (y0, s0) = if identity_in_span {
        let mut t = (1.1 * (-lam_c)).max(0.0) + c_scale.max(1.0);
        let mut out = None;
        for _ in 0..40 {
            let y = -&u * t;
            let aty = p.at_op(&y);
            let s: Vec<DMatrix<f64>> = p.c.iter().zip(&aty).map(|(c, a)| c - a).collect();
            if s.iter().map(min_eig).fold(f64::INFINITY, f64::min) > 0.0 {
                out = Some((y, s));
                break;
            }
            t *= 2.0;
        }
        out.unwrap_or_else(|| (DVector::zeros(m), identity.iter().map(|i| i * c_scale.max(10.0)).collect()))
    } else if lam_c > 1e-8 {
        (DVector::zeros(m), p.c.clone())
    } else {
        (DVector::zeros(m), identity.iter().map(|i| i * c_scale.max(10.0)).collect())
    };
    Ok((x0, y0, s0))
}

struct Measures {
    pobj: f64,
    dobj: f64,
    gap: f64,
    feas_p: f64,
    feas_d: f64,
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
}

fn measure(p: &Prepared, x: &[DMatrix<f64>], y: &DVector<f64>, s: &[DMatrix<f64>], norm_b: f64, norm_c: f64) -> Measures {
    let pobj = inner(&p.c, x);
    let dobj = p.b.dot(y);
    let rp = &p.b - p.a_op(x);
    let aty = p.at_op(y);
    let rd: Vec<DMatrix<f64>> = p.c.iter().zip(&aty).zip(s).map(|((c, a), s)| c - a - s).collect();
    Measures {
        pobj,
        dobj,
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        feas_p: rp.norm() / (1.0 + norm_b),
        feas_d: frob2(&rd).sqrt() / (1.0 + norm_c),
        rp,
        rd,
    }
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn direction(
    p: &Prepared,
    chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
    x: &[DMatrix<f64>],
    z: &[DMatrix<f64>],
    rp: &DVector<f64>,
    rd: &[DMatrix<f64>],
    target: f64,
    corr: Option<&[DMatrix<f64>]>,
) -> Direction {
    let k: Vec<DMatrix<f64>> = (0..x.len())
        .map(|b| {
            let mut k = &z[b] * target - &x[b];
            if rd[b].amax() > 0.0 {
                k -= &x[b] * &rd[b] * &z[b];
            }
            if let Some(corr) = corr {
                k -= &corr[b];
            }
            k
        })
        .collect();
    let rhs = rp - p.a_op(&k);
    let dy = chol.solve(&rhs);
    let aty = p.at_op(&dy);
    let ds: Vec<DMatrix<f64>> = rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
    let dx: Vec<DMatrix<f64>> = (0..x.len())
        .map(|b| {
            let mut d = &k[b] + &x[b] * &aty[b] * &z[b];
            symmetrize(&mut d);
            d
        })
        .collect();
    Direction { dx, dy, ds }
}

fn factor_schur(mut m: DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut reg = 0.0;
    for attempt in 0..6 {
        if let Some(c) = m.clone().cholesky() {
            return Some(c);
        }
        let next = scale * 1e-14 * 100f64.powi(attempt);
        for i in 0..n {
            m[(i, i)] += next - reg;
        }
        reg = next;
    }
    None
}

fn inverse(s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = s.clone().cholesky()?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    if !(opts.gap_tol > 0.0 && opts.feas_tol > 0.0) {
        return Err(Error::invalid("SDP tolerances must be positive"));
    }
    let m_all = problem.constraints.len();
    let zero_blocks: Vec<DMatrix<f64>> = problem.block_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    let (prep, keep) = match presolve(problem)? {
        Presolve::Ready(p, k) => (p, k),
        Presolve::Inconsistent(msg) => {
            return Ok(SdpSolution {
                status: SdpStatus::Infeasible,
                x: zero_blocks.clone(),
                y: vec![0.0; m_all],
                s: zero_blocks,
                primal_obj: f64::NAN,
                dual_obj: f64::NAN,
                gap: f64::NAN,
                feas_primal: f64::NAN,
                feas_dual: f64::NAN,
                iterations: 0,
                dropped_constraints: 0,
                history: Vec::new(),
                message: msg,
                options: *opts,
            })
        }
    };
    let ntot: f64 = prep.sizes.iter().sum::<usize>() as f64;
    let norm_b = prep.b.norm();
    let norm_c = frob2(&prep.c).sqrt();
    let (mut x, mut y, mut s) = starting_point(&prep)?;

    let mut history = Vec::new();
    let mut status = SdpStatus::MaxIter;
    let mut message = String::new();
    let mut iterations = 0;
    let mut stalls = 0;
    loop {
        let ms = measure(&prep, &x, &y, &s, norm_b, norm_c);
        let converged = ms.gap <= opts.gap_tol && ms.feas_p <= opts.feas_tol && ms.feas_d <= opts.feas_tol;
        let record = |ap: f64, ad: f64| IterationRecord {
            primal_obj: ms.pobj,
            dual_obj: ms.dobj,
            feas_primal: ms.feas_p,
            feas_dual: ms.feas_d,
            step_primal: ap,
            step_dual: ad,
        };
        if converged {
            history.push(record(0.0, 0.0));
            status = SdpStatus::Optimal;
            break;
        }
        if max_abs(&x) > DIVERGENCE || y.amax() > DIVERGENCE || max_abs(&s) > DIVERGENCE {
            history.push(record(0.0, 0.0));
            status = SdpStatus::Infeasible;
            message = "iterates diverged; problem is primal or dual infeasible".into();
            break;
        }
        if iterations >= opts.max_iter {
            history.push(record(0.0, 0.0));
            message = format!("iteration limit {} reached", opts.max_iter);
            break;
        }
        let Some(z) = s.iter().map(inverse).collect::<Option<Vec<_>>>() else {
            history.push(record(0.0, 0.0));
            message = "dual slack lost definiteness".into();
            break;
        };
        let Some(chol) = factor_schur(prep.schur(&x, &z)) else {
            history.push(record(0.0, 0.0));
            message = "Schur complement could not be factored".into();
            break;
        };
        let mu = inner(&x, &s) / ntot;

        let pred = direction(&prep, &chol, &x, &z, &ms.rp, &ms.rd, 0.0, None);
        let ap = blocks_step(&x, &pred.dx).min(1.0);
        let ad = blocks_step(&s, &pred.ds).min(1.0);
        let x_aff: Vec<DMatrix<f64>> = x.iter().zip(&pred.dx).map(|(x, d)| x + d * ap).collect();
        let s_aff: Vec<DMatrix<f64>> = s.iter().zip(&pred.ds).map(|(s, d)| s + d * ad).collect();
        let mu_aff = inner(&x_aff, &s_aff) / ntot;
        let sigma = (mu_aff / mu).max(0.0).powi(3).min(1.0);

        let corr: Vec<DMatrix<f64>> = (0..x.len()).map(|b| &pred.dx[b] * &pred.ds[b] * &z[b]).collect();
        let dir = direction(&prep, &chol, &x, &z, &ms.rp, &ms.rd, sigma * mu, Some(&corr));
        let ap = (STEP_FRACTION * blocks_step(&x, &dir.dx)).min(1.0);
        let ad = (STEP_FRACTION * blocks_step(&s, &dir.ds)).min(1.0);
        history.push(record(ap, ad));

        for b in 0..x.len() {
            x[b] += &dir.dx[b] * ap;
            s[b] += &dir.ds[b] * ad;
            symmetrize(&mut x[b]);
            symmetrize(&mut s[b]);
        }
        y += &dir.dy * ad;
        iterations += 1;

        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                message = "step length collapsed".into();
                let ms = measure(&prep, &x, &y, &s, norm_b, norm_c);
                history.push(IterationRecord {
                    primal_obj: ms.pobj,
                    dual_obj: ms.dobj,
                    feas_primal: ms.feas_p,
                    feas_dual: ms.feas_d,
                    step_primal: 0.0,
                    step_dual: 0.0,
                });
                break;
            }
        } else {
            stalls = 0;
        }
    }

    let mut y_full = vec![0.0; m_all];
    for (pos, &k) in keep.iter().enumerate() {
        y_full[k] = y[pos];
    }
    let last = history.last().cloned().expect("history has at least one record");
    // residuals over every original constraint, dropped ones included
    let ax = problem.apply_constraints(&x);
    let rp_all: f64 = problem.constraints.iter().zip(&ax).map(|(c, a)| (c.rhs - a).powi(2)).sum::<f64>().sqrt();
    let b_all: f64 = problem.constraints.iter().map(|c| c.rhs * c.rhs).sum::<f64>().sqrt();
    Ok(SdpSolution {
        status,
        x,
        y: y_full,
        s,
        primal_obj: last.primal_obj,
        dual_obj: last.dual_obj,
        gap: (last.primal_obj - last.dual_obj).abs() / (1.0 + last.primal_obj.abs() + last.dual_obj.abs()),
        feas_primal: rp_all / (1.0 + b_all),
        feas_dual: last.feas_dual,
        iterations,
        dropped_constraints: m_all - keep.len(),
        history,
        message,
        options: *opts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{Constraint, SymSparse};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lambda_min_sdp(h: &DMatrix<f64>) -> SdpProblem {
        let n = h.nrows();
        SdpProblem::new(vec![n], vec![h.clone()], vec![Constraint::new(vec![(0, SymSparse::identity(n))], 1.0)])
            .with_trace_bounds(vec![1.0])
    }

    #[test]
    fn two_by_two_eigenvalue() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sol = solve(&lambda_min_sdp(&h), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_obj + 1.0).abs() < 1e-8, "{}", sol.primal_obj);
        assert!((sol.dual_obj + 1.0).abs() < 1e-8);
    }

    #[test]
    fn random_six_by_six() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let h = (&a + a.transpose()) * 0.5;
        let sol = solve(&lambda_min_sdp(&h), &SdpOptions::default()).unwrap();
        let exact = min_eig(&h);
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.dual_obj - exact).abs() < 1e-7);
    }

    #[test]
    fn fixed_off_diagonal() {
        // min X11 + X22 s.t. X12 = 0.6 has optimum 1.2 at X = [[.6,.6],[.6,.6]]
        let c = DMatrix::identity(2, 2);
        let con = Constraint::new(vec![(0, SymSparse::from_triplets([(0, 1, 0.5)]))], 0.6);
        let sol = solve(&SdpProblem::new(vec![2], vec![c], vec![con]), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_obj - 1.2).abs() < 1e-7, "{}", sol.primal_obj);
    }

    #[test]
    fn feasibility_problem() {
        // the triplet (0, 1) stands for E01 + E10, so the constraint reads 2 X01 = 0.6
        let cons = vec![
            Constraint::new(vec![(0, SymSparse::identity(2))], 1.0),
            Constraint::new(vec![(0, SymSparse::from_triplets([(0, 1, 1.0)]))], 0.6),
        ];
        let p = SdpProblem::new(vec![2], vec![DMatrix::zeros(2, 2)], cons);
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0][(0, 1)] - 0.3).abs() < 1e-8);
        assert!((sol.x[0].trace() - 1.0).abs() < 1e-8);
        assert!(min_eig(&sol.x[0]) > -1e-9);
    }

    #[test]
    fn off_diagonal_beyond_unit_trace_is_infeasible() {
        // X01 = 0.6 with tr X = 1 violates X00 X11 ≥ X01²
        let cons = vec![
            Constraint::new(vec![(0, SymSparse::identity(2))], 1.0),
            Constraint::new(vec![(0, SymSparse::from_triplets([(0, 1, 0.5)]))], 0.6),
        ];
        let p = SdpProblem::new(vec![2], vec![DMatrix::zeros(2, 2)], cons);
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn duplicate_constraints_are_dropped() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let id = SymSparse::identity(2);
        let cons = vec![
            Constraint::new(vec![(0, id.clone())], 1.0),
            Constraint::new(vec![(0, id.scaled(2.0))], 2.0),
        ];
        let sol = solve(&SdpProblem::new(vec![2], vec![h], cons), &SdpOptions::default()).unwrap();
        assert_eq!(sol.dropped_constraints, 1);
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_obj - 1.0).abs() < 1e-7);
    }

    #[test]
    fn inconsistent_constraints() {
        let id = SymSparse::identity(2);
        let cons = vec![
            Constraint::new(vec![(0, id.clone())], 1.0),
            Constraint::new(vec![(0, id)], 2.0),
        ];
        let sol = solve(&SdpProblem::new(vec![2], vec![DMatrix::zeros(2, 2)], cons), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn infeasible_by_divergence() {
        // tr X = 1 and X11 = 2 force X22 = -1
        let cons = vec![
            Constraint::new(vec![(0, SymSparse::identity(2))], 1.0),
            Constraint::new(vec![(0, SymSparse::from_triplets([(0, 0, 1.0)]))], 2.0),
        ];
        let sol = solve(&SdpProblem::new(vec![2], vec![DMatrix::zeros(2, 2)], cons), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible, "{sol:?}");
    }

    #[test]
    fn iteration_limit_status() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let opts = SdpOptions { max_iter: 1, ..Default::default() };
        let sol = solve(&lambda_min_sdp(&h), &opts).unwrap();
        assert_eq!(sol.status, SdpStatus::MaxIter);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn bad_tolerance() {
        let h = DMatrix::identity(2, 2);
        let opts = SdpOptions { gap_tol: 0.0, ..Default::default() };
        assert!(solve(&lambda_min_sdp(&h), &opts).is_err());
    }
}
