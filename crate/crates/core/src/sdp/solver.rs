//! Infeasible primal-dual interior point method with Nesterov-Todd scaling
//! and Mehrotra predictor-corrector steps.

use nalgebra::DVector;

use super::problem::{SdpProblem, SdpSolution, SolveStatus, SparseHermitian};
use crate::error::Result;
use crate::linalg::{self, cr, CMat, RMat};
use crate::tolerances::{SDP_MAX_ITER, SDP_TOL};

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Absolute duality gap and relative residual target.
    pub tol: f64,
    pub max_iter: usize,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: SDP_TOL,
            max_iter: SDP_MAX_ITER,
            verbose: false,
        }
    }
}

pub fn solve(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution> {
    solve_with(
        p,
        &SolverOptions {
            tol,
            max_iter,
            verbose: false,
        },
    )
}

/// Per-block NT scaling data.
struct Scaling {
    /// G with W = G G^dagger, G^dagger Z G = G^{-1} X G^{-dagger} = diag(lam).
    g: CMat,
    ginv: CMat,
    w: CMat,
    lam: Vec<f64>,
}

fn nt_scaling(x: &CMat, z: &CMat) -> Option<Scaling> {
    let lx = x.clone().cholesky()?.unpack();
    let t = lx.adjoint() * z * &lx;
    let e = linalg::eigh(&t);
    let n = x.nrows();
    let lam: Vec<f64> = e.values.iter().map(|&v| v.max(1e-300).sqrt()).collect();
    let mut g = &lx * &e.vectors;
    for j in 0..n {
        let s = lam[j].powf(-0.5);
        for i in 0..n {
            g[(i, j)] *= s;
        }
    }
    let lxinv = lx.solve_lower_triangular(&linalg::identity(n))?;
    let mut ginv = e.vectors.adjoint() * lxinv;
    for i in 0..n {
        let s = lam[i].sqrt();
        for j in 0..n {
            ginv[(i, j)] *= s;
        }
    }
    let mut w = &g * g.adjoint();
    linalg::hermitize_in_place(&mut w);
    if lam.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(Scaling { g, ginv, w, lam })
}

/// Largest alpha with V + alpha D >= 0, for V = diag(lam) > 0.
fn max_step(lam: &[f64], d: &CMat) -> f64 {
    let n = lam.len();
    let mut s = d.clone();
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] /= (lam[i] * lam[j]).sqrt();
        }
    }
    let m = linalg::lambda_min(&s);
    if m >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / m
    }
}

struct Layout {
    /// For each block, the (constraint, part index) pairs touching it.
    by_block: Vec<Vec<(usize, usize)>>,
}

fn block_index(p: &SdpProblem) -> Layout {
    let mut by_block = vec![vec![]; p.blocks.len()];
    for (i, k) in p.constraints.iter().enumerate() {
        for (j, (b, _)) in k.parts.iter().enumerate() {
            by_block[*b].push((i, j));
        }
    }
    Layout { by_block }
}

/// W A W for sparse A.
fn sandwich(w: &CMat, a: &SparseHermitian) -> CMat {
    let n = w.nrows();
    if a.nnz() < n {
        let mut g = CMat::zeros(n, n);
        for &(r, c, v) in a.entries() {
            // g += v * W[:, r] W[c, :]
            for j in 0..n {
                let x = w[(c, j)] * v;
                if x == cr(0.0) {
                    continue;
                }
                for i in 0..n {
                    g[(i, j)] += w[(i, r)] * x;
                }
            }
        }
        g
    } else {
        let mut t = CMat::zeros(n, n);
        for &(r, c, v) in a.entries() {
            for j in 0..n {
                t[(r, j)] += v * w[(c, j)];
            }
        }
        linalg::matmul(w, &t)
    }
}

fn schur_matrix(p: &SdpProblem, idx: &Layout, scal: &[Scaling]) -> RMat {
    let m = p.n_constraints();
    let mut mm = RMat::zeros(m, m);
    for (b, entries) in idx.by_block.iter().enumerate() {
        let w = &scal[b].w;
        for (pos, &(i, pi)) in entries.iter().enumerate() {
            let g = sandwich(w, &p.constraints[i].parts[pi].1);
            for &(j, pj) in &entries[pos..] {
                let v = p.constraints[j].parts[pj].1.re_inner(&g);
                mm[(i, j)] += v;
                if i != j {
                    mm[(j, i)] += v;
                }
            }
        }
    }
    mm
}

fn factor_solve(mm: &RMat, rhs: &[DVector<f64>]) -> Option<Vec<DVector<f64>>> {
    if let Some(x) = linalg::spd_solve(mm, rhs) {
        return Some(x);
    }
    let scale = (0..mm.nrows()).map(|i| mm[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    for reg in [1e-14, 1e-12, 1e-10, 1e-8] {
        let mut r = mm.clone();
        for i in 0..r.nrows() {
            r[(i, i)] += reg * scale;
        }
        if let Some(x) = linalg::spd_solve(&r, rhs) {
            return Some(x);
        }
    }
    None
}

fn blocks_fro(m: &[CMat]) -> f64 {
    m.iter().map(|x| x.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt()
}

fn blocks_inner(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| linalg::re_trace_prod(x, y)).sum()
}

/// Search direction for a given complementarity right-hand side.
struct Direction {
    dx: Vec<CMat>,
    dz: Vec<CMat>,
    dy: DVector<f64>,
}

pub fn solve_with(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    p.validate()?;
    let nb = p.blocks.len();
    let m = p.n_constraints();
    let n_tot: usize = p.blocks.iter().sum();
    let b = DVector::from_vec(p.rhs());
    let idx = block_index(p);

    // Starting point in the style of SDPT3.
    let mut x: Vec<CMat> = Vec::with_capacity(nb);
    let mut z: Vec<CMat> = Vec::with_capacity(nb);
    for (bi, &d) in p.blocks.iter().enumerate() {
        let sq = (d as f64).sqrt();
        let mut xi = 10f64.max(sq);
        let mut eta = 10f64.max(sq).max(linalg::fro_norm(&p.objective[bi]));
        for &(i, pi) in &idx.by_block[bi] {
            let na = p.constraints[i].parts[pi].1.fro_norm();
            xi = xi.max(sq * (1.0 + p.constraints[i].rhs.abs()) / (1.0 + na));
            eta = eta.max(na);
        }
        x.push(linalg::identity(d) * cr(xi));
        z.push(linalg::identity(d) * cr(eta));
    }
    let mut y = DVector::<f64>::zeros(m);
    let norm_b = b.norm();
    let norm_c = blocks_fro(&p.objective);

    let mut status = SolveStatus::MaxIterations;
    let mut note = String::new();
    let mut iterations = 0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let ax = DVector::from_vec(p.apply_a(&x));
        let rp = &b - &ax;
        let aty = p.apply_at(y.as_slice());
        let rd: Vec<CMat> = (0..nb).map(|k| &p.objective[k] - &z[k] - &aty[k]).collect();
        let pobj = p.primal_objective(&x);
        let dobj = b.dot(&y);
        let xz = blocks_inner(&x, &z);
        let mu = xz / n_tot as f64;
        let pinf = rp.norm() / (1.0 + norm_b);
        let dinf = blocks_fro(&rd) / (1.0 + norm_c);
        if opts.verbose {
            eprintln!(
                "it {iter:3} pobj {pobj:+.10e} dobj {dobj:+.10e} gap {:.2e} pinf {pinf:.2e} dinf {dinf:.2e} mu {mu:.2e}",
                pobj - dobj
            );
        }
        if pinf <= opts.tol && dinf <= opts.tol && (pobj - dobj).abs() <= opts.tol && xz <= opts.tol {
            status = SolveStatus::Optimal;
            break;
        }
        // Certificates of infeasibility.
        let atyz = blocks_fro(&(0..nb).map(|k| &aty[k] + &z[k]).collect::<Vec<_>>());
        if dobj > 0.0 && dobj > 1e8 * (1.0 + norm_c) && atyz <= 1e-6 * dobj {
            status = SolveStatus::Infeasible;
            note = "primal infeasible: dual ray found".into();
            break;
        }
        if pobj < 0.0 && -pobj > 1e8 * (1.0 + norm_b) && ax.norm() <= 1e-6 * -pobj {
            status = SolveStatus::Infeasible;
            note = "dual infeasible: primal ray found".into();
            break;
        }
        if blocks_fro(&x) > 1e14 || y.amax() > 1e14 {
            status = SolveStatus::Infeasible;
            note = "iterates diverged".into();
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let mut scal = Vec::with_capacity(nb);
        for k in 0..nb {
            match nt_scaling(&x[k], &z[k]) {
                Some(s) => scal.push(s),
                None => {
                    note = format!("scaling failed at iteration {iter}");
                    break;
                }
            }
        }
        if scal.len() < nb {
            break;
        }
        let mm = schur_matrix(p, &idx, &scal);
        // W Rd W, reused by both solves.
        let wrdw: Vec<CMat> = (0..nb).map(|k| &scal[k].w * &rd[k] * &scal[k].w).collect();

        let direction = |rc: Vec<CMat>| -> Option<Direction> {
            let t: Vec<CMat> = (0..nb).map(|k| &wrdw[k] - &rc[k]).collect();
            let rhs = &rp + DVector::from_vec(p.apply_a(&t));
            let dy = factor_solve(&mm, &[rhs])?.pop()?;
            let atdy = p.apply_at(dy.as_slice());
            let dz: Vec<CMat> = (0..nb).map(|k| &rd[k] - &atdy[k]).collect();
            let dx: Vec<CMat> = (0..nb)
                .map(|k| {
                    let mut v = &rc[k] - &scal[k].w * &dz[k] * &scal[k].w;
                    linalg::hermitize_in_place(&mut v);
                    v
                })
                .collect();
            Some(Direction { dx, dz, dy })
        };
        let scaled = |d: &Direction| -> (Vec<CMat>, Vec<CMat>) {
            let ddx = (0..nb)
                .map(|k| &scal[k].ginv * &d.dx[k] * scal[k].ginv.adjoint())
                .collect();
            let ddz = (0..nb)
                .map(|k| scal[k].g.adjoint() * &d.dz[k] * &scal[k].g)
                .collect();
            (ddx, ddz)
        };
        let steps = |ddx: &[CMat], ddz: &[CMat]| -> (f64, f64) {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for k in 0..nb {
                ap = ap.min(max_step(&scal[k].lam, &ddx[k]));
                ad = ad.min(max_step(&scal[k].lam, &ddz[k]));
            }
            (ap, ad)
        };

        // Predictor.
        let rc_aff: Vec<CMat> = x.iter().map(|xi| -xi).collect();
        let Some(aff) = direction(rc_aff) else {
            note = format!("Schur complement singular at iteration {iter}");
            break;
        };
        let (ddx_a, ddz_a) = scaled(&aff);
        let (ap_max, ad_max) = steps(&ddx_a, &ddz_a);
        let ap = ap_max.min(1.0);
        let ad = ad_max.min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..nb {
            let xa = &x[k] + &aff.dx[k] * cr(ap);
            let za = &z[k] + &aff.dz[k] * cr(ad);
            mu_aff += linalg::re_trace_prod(&xa, &za);
        }
        mu_aff /= n_tot as f64;
        let expo = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = if mu > 0.0 {
            (mu_aff.max(0.0) / mu).powf(expo).clamp(0.0, 1.0)
        } else {
            0.0
        };

        // Corrector: solve 1/2 (V D + D V) = sigma mu I - V^2 - H(Dx Dz).
        let mut rc: Vec<CMat> = Vec::with_capacity(nb);
        for k in 0..nb {
            let lam = &scal[k].lam;
            let n = lam.len();
            let mut cross = &ddx_a[k] * &ddz_a[k];
            linalg::hermitize_in_place(&mut cross);
            let mut d = CMat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let mut r = -cross[(i, j)];
                    if i == j {
                        r += cr(sigma * mu - lam[i] * lam[i]);
                    }
                    d[(i, j)] = r * (2.0 / (lam[i] + lam[j]));
                }
            }
            let mut v = &scal[k].g * d * scal[k].g.adjoint();
            linalg::hermitize_in_place(&mut v);
            rc.push(v);
        }
        let Some(dir) = direction(rc) else {
            note = format!("Schur complement singular at iteration {iter}");
            break;
        };
        let (ddx, ddz) = scaled(&dir);
        let (ap_max, ad_max) = steps(&ddx, &ddz);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);
        for k in 0..nb {
            x[k] += &dir.dx[k] * cr(ap);
            linalg::hermitize_in_place(&mut x[k]);
            z[k] += &dir.dz[k] * cr(ad);
            linalg::hermitize_in_place(&mut z[k]);
        }
        y += &dir.dy * ad;
    }

    let pobj = p.primal_objective(&x);
    let dobj = b.dot(&y);
    Ok(SdpSolution {
        primal: x,
        dual: y.iter().copied().collect(),
        slack: z,
        primal_objective: pobj,
        dual_objective: dobj,
        gap: pobj - dobj,
        status,
        iterations,
        note,
    })
}
