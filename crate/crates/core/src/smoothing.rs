//! Smooth min-entropies as semidefinite programs over a trace-distance ball
//! of normalized states, and a spectral-truncation bound for the smooth
//! max-entropy.
//!
//! The ball constraint 1/2 ||rho' - rho||_1 <= eps is written with the
//! traceless perturbation D = rho' - rho and a split variable P:
//! P >= 0, P >= D, tr P <= eps. For traceless D the smallest such tr P is
//! exactly 1/2 ||D||_1.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{self, align_with_sigma, outside_weight, split_ab, EntropyValue, Method};
use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMat};
use crate::sdp::{HermitianBasis, LmiProblem, OrbitPartition, SolveStatus, SolverOptions, SparseHermitian};
use crate::state::{DensityOperator, PureState};
use crate::tolerances::BALL_TOL;

/// Closed trace-distance ball of normalized states around `center`.
#[derive(Clone, Debug)]
pub struct SmoothingBall {
    pub center: DensityOperator,
    pub epsilon: f64,
}

impl SmoothingBall {
    pub fn new(center: DensityOperator, epsilon: f64) -> Result<Self> {
        check_eps(epsilon)?;
        Ok(SmoothingBall { center, epsilon })
    }

    pub fn distance(&self, other: &DensityOperator) -> Result<f64> {
        self.center.trace_distance(other)
    }

    /// Validity of `other` as a state plus 1/2 ||other - center||_1 <= eps + 1e-9.
    pub fn contains(&self, other: &DensityOperator) -> bool {
        if DensityOperator::new(other.layout().clone(), other.matrix().clone()).is_err() {
            return false;
        }
        matches!(self.distance(other), Ok(d) if d <= self.epsilon + 1e-9)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Argument(format!("smoothing parameter {eps} outside [0, 1)")));
    }
    Ok(())
}

/// Options for the smooth SDPs.
#[derive(Clone, Debug, Default)]
pub struct SmoothOptions {
    pub solver: SolverOptions,
    /// Labels of identical copies, e.g. `[["A.1","R.1"], ["A.2","R.2"]]`.
    /// When set, the program is restricted to operators invariant under
    /// permuting the copies, which loses nothing for permutation-invariant
    /// inputs and shrinks the problem considerably.
    pub copies: Option<Vec<Vec<String>>>,
}

/// Ball variables (D traceless, P) and the blocks that only involve them.
struct BallVars {
    delta: Vec<usize>,
    delta_basis: HermitianBasis,
    p: Vec<usize>,
}

/// Adds rho + D >= 0, P >= 0, P - D >= 0 and eps - tr P >= 0.
fn add_ball(
    lmi: &mut LmiProblem,
    center: &CMat,
    delta_basis: HermitianBasis,
    p_basis: &HermitianBasis,
    eps: f64,
) -> BallVars {
    let d = center.nrows();
    let pos = lmi.add_block(d);
    let p0 = lmi.add_block(d);
    let split = lmi.add_block(d);
    let budget = lmi.add_block(1);
    let delta = lmi.add_matrix_var(&delta_basis, |_| 0.0);
    let p = lmi.add_matrix_var(p_basis, |_| 0.0);
    lmi.add_constant(pos, center);
    lmi.add_matrix_coeff(&delta, &delta_basis, pos, |e| e.clone());
    lmi.add_matrix_coeff(&p, p_basis, p0, |e| e.clone());
    lmi.add_matrix_coeff(&p, p_basis, split, |e| e.clone());
    lmi.add_matrix_coeff(&delta, &delta_basis, split, |e| e.scaled(-1.0));
    lmi.add_constant(budget, &CMat::from_element(1, 1, cr(eps)));
    lmi.add_matrix_coeff(&p, p_basis, budget, |e| {
        SparseHermitian::from_dense(&CMat::from_element(1, 1, cr(-e.trace())))
    });
    BallVars { delta, delta_basis, p }
}

/// Turns the solver's perturbation into a valid state inside the ball:
/// clip tiny negative eigenvalues, renormalize, then pull toward the center
/// if the solver tolerance left it marginally outside.
fn repair_witness(center: &DensityOperator, raw: &CMat, eps: f64) -> Result<DensityOperator> {
    let candidate = DensityOperator::from_psd(center.layout().clone(), raw)?;
    let dist = center.trace_distance(&candidate)?;
    if dist <= eps {
        return Ok(candidate);
    }
    let t = eps / dist;
    let m = center.matrix() * cr(1.0 - t) + candidate.matrix() * cr(t);
    DensityOperator::new(center.layout().clone(), m)
}

fn status_note(status: SolveStatus) -> Option<String> {
    (status != SolveStatus::Optimal).then(|| format!("solver stopped: {status}"))
}

/// Smooth relative min-entropy
/// max_{rho' in ball} -log min{ lambda : lambda id (x) sigma >= rho' },
/// as one SDP in (lambda, rho', P) since sigma is fixed.
pub fn h_min_smooth_rel(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<EntropyValue> {
    h_min_smooth_rel_with(rho, sigma, eps, &SolverOptions::default())
}

pub fn h_min_smooth_rel_with(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    eps: f64,
    opts: &SolverOptions,
) -> Result<EntropyValue> {
    check_eps(eps)?;
    if eps == 0.0 {
        return entropy::h_min_rel(rho, sigma);
    }
    let (r, gamma, _) = align_with_sigma(rho, sigma)?;
    let d = r.dim();
    // Smoothed states must live on supp(id (x) sigma); compress to it.
    let e = linalg::eigh(&gamma);
    let v = e.support_basis();
    let k = v.ncols();
    let full_rank = k == d;
    let g_hat = if full_rank { gamma.clone() } else { v.adjoint() * &gamma * &v };
    let rho_hat0 = if full_rank {
        r.matrix().clone()
    } else {
        let c = v.adjoint() * r.matrix() * &v;
        let t = linalg::trace(&c).re;
        if t > 1e-12 {
            c / cr(t)
        } else {
            &g_hat / cr(linalg::trace(&g_hat).re)
        }
    };
    let lift = |m: &SparseHermitian| -> SparseHermitian {
        if full_rank {
            m.clone()
        } else {
            m.conjugated(&v)
        }
    };

    let mut lmi = LmiProblem::new();
    let main = lmi.add_block(k);
    let lam = lmi.add_var(1.0);
    lmi.add_coeff(lam, main, SparseHermitian::from_dense(&g_hat));
    lmi.add_constant(main, &(-&rho_hat0));
    let delta_basis = HermitianBasis::full(k).traceless();
    let p_basis = HermitianBasis::full(d);
    // Ball in the full space around r; the compressed state is
    // V (rho_hat0 + D) V^dagger, so the full-space perturbation is
    // V rho_hat0 V^dagger - r + V D V^dagger.
    let shift = if full_rank {
        CMat::zeros(d, d)
    } else {
        &v * &rho_hat0 * v.adjoint() - r.matrix()
    };
    let pos = lmi.add_block(k);
    let p0 = lmi.add_block(d);
    let split = lmi.add_block(d);
    let budget = lmi.add_block(1);
    let delta = lmi.add_matrix_var(&delta_basis, |_| 0.0);
    let p = lmi.add_matrix_var(&p_basis, |_| 0.0);
    lmi.add_matrix_coeff(&delta, &delta_basis, main, |e| e.scaled(-1.0));
    lmi.add_constant(pos, &rho_hat0);
    lmi.add_matrix_coeff(&delta, &delta_basis, pos, |e| e.clone());
    lmi.add_matrix_coeff(&p, &p_basis, p0, |e| e.clone());
    lmi.add_matrix_coeff(&p, &p_basis, split, |e| e.clone());
    lmi.add_matrix_coeff(&delta, &delta_basis, split, |e| lift(e).scaled(-1.0));
    lmi.add_constant(split, &(-&shift));
    lmi.add_constant(budget, &CMat::from_element(1, 1, cr(eps)));
    lmi.add_matrix_coeff(&p, &p_basis, budget, |e| {
        SparseHermitian::from_dense(&CMat::from_element(1, 1, cr(-e.trace())))
    });

    let sol = lmi.solve(opts)?;
    if sol.status == SolveStatus::Infeasible {
        let w = outside_weight(r.matrix(), &gamma);
        return Ok(EntropyValue::unbounded(
            Method::Sdp,
            format!("no state within {eps} is supported on supp(sigma) (outside weight {w:.3e})"),
        ));
    }
    let dm = sol.matrix(&delta, &delta_basis);
    let hat = &rho_hat0 + dm;
    let raw = if full_rank { hat } else { &v * hat * v.adjoint() };
    let smoothed = repair_witness(&r, &raw, eps)?;
    let smoothed = smoothed.reorder(&rho.layout().labels())?;
    Ok(EntropyValue {
        bits: -sol.value.log2(),
        method: Method::Sdp,
        witness: Some(sigma.clone()),
        gap: sol.gap,
        status: Some(sol.status),
        note: status_note(sol.status),
        smoothed: Some(smoothed),
    })
}

/// Cross-check path for the smooth relative min-entropy: bisection on
/// lambda, where each step minimizes the distance to the set
/// { rho' : lambda id (x) sigma >= rho' }. Requires full-rank sigma.
pub fn h_min_smooth_rel_bisection(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    eps: f64,
    steps: usize,
) -> Result<EntropyValue> {
    check_eps(eps)?;
    let (r, gamma, da) = align_with_sigma(rho, sigma)?;
    if linalg::rank(&gamma) < gamma.nrows() {
        return Err(Error::Argument("bisection path needs full-rank sigma".into()));
    }
    let base = entropy::h_min_rel(rho, sigma)?;
    if eps == 0.0 {
        return Ok(base);
    }
    let d = r.dim();
    let delta_basis = HermitianBasis::full(d).traceless();
    let p_basis = HermitianBasis::full(d);
    let distance = |lam: f64| -> Result<f64> {
        let mut lmi = LmiProblem::new();
        let main = lmi.add_block(d);
        lmi.add_constant(main, &(&gamma * cr(lam) - r.matrix()));
        let ball = add_ball(&mut lmi, r.matrix(), delta_basis.clone(), &p_basis, 1.0);
        lmi.add_matrix_coeff(&ball.delta, &ball.delta_basis, main, |e| e.scaled(-1.0));
        for (&v, e) in ball.p.iter().zip(p_basis.elements()) {
            lmi.set_cost(v, e.trace());
        }
        Ok(lmi.solve(&SolverOptions::default())?.value)
    };
    let mut lo = 1.0 / da as f64;
    let mut hi = 2f64.powf(-base.bits);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if distance(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(EntropyValue {
        bits: -hi.log2(),
        method: Method::Bisection,
        witness: Some(sigma.clone()),
        gap: 0.0,
        status: None,
        note: None,
        smoothed: None,
    })
}

/// Orbit partitions (on the AB space and on B) for copy permutations.
fn copy_symmetry(
    r: &DensityOperator,
    n_cond: usize,
    copies: &[Vec<String>],
) -> Result<(OrbitPartition, OrbitPartition)> {
    let layout = r.layout();
    let nf = layout.len();
    let dims = layout.dims();
    let mut gens_full = Vec::new();
    for w in copies.windows(2) {
        if w[0].len() != w[1].len() {
            return Err(Error::Argument("copies must list the same number of labels".into()));
        }
        let mut order: Vec<usize> = (0..nf).collect();
        for (x, y) in w[0].iter().zip(&w[1]) {
            let px = layout.position(x).ok_or_else(|| Error::Layout(format!("unknown label `{x}`")))?;
            let py = layout.position(y).ok_or_else(|| Error::Layout(format!("unknown label `{y}`")))?;
            if dims[px] != dims[py] || (px >= nf - n_cond) != (py >= nf - n_cond) {
                return Err(Error::Argument(format!("`{x}` and `{y}` are not interchangeable")));
            }
            order[px] = py;
            order[py] = px;
        }
        gens_full.push(order);
    }
    // Require an invariant input; otherwise the restriction would be lossy.
    for g in &gens_full {
        let moved = linalg::permute_operator(r.matrix(), &dims, g);
        if linalg::fro_norm(&(moved - r.matrix())) > 1e-10 {
            return Err(Error::Argument("state is not invariant under the copy permutations".into()));
        }
    }
    let full = OrbitPartition::from_factor_permutations(&dims, &gens_full);
    let base = nf - n_cond;
    let gens_b: Vec<Vec<usize>> = gens_full
        .iter()
        .map(|g| g[base..].iter().map(|&p| p - base).collect())
        .collect();
    let cond = OrbitPartition::from_factor_permutations(&dims[base..], &gens_b);
    Ok((full, cond))
}

/// Smooth conditional min-entropy: max over the ball and over sigma_B,
/// as one SDP minimizing tr X subject to id_A (x) X >= rho'.
pub fn h_min_smooth_cond<S: AsRef<str>>(rho: &DensityOperator, cond: &[S], eps: f64) -> Result<EntropyValue> {
    h_min_smooth_cond_with(rho, cond, eps, &SmoothOptions::default())
}

pub fn h_min_smooth_cond_with<S: AsRef<str>>(
    rho: &DensityOperator,
    cond: &[S],
    eps: f64,
    opts: &SmoothOptions,
) -> Result<EntropyValue> {
    check_eps(eps)?;
    if eps == 0.0 {
        return entropy::h_min_cond_with(rho, cond, &opts.solver);
    }
    let (r, da, db) = split_ab(rho, cond)?;
    let d = da * db;
    let (full_basis, b_basis) = match &opts.copies {
        Some(copies) => {
            let (pf, pb) = copy_symmetry(&r, cond.len(), copies)?;
            (HermitianBasis::invariant(&pf), HermitianBasis::invariant(&pb))
        }
        None => (HermitianBasis::full(d), HermitianBasis::full(db)),
    };
    let mut lmi = LmiProblem::new();
    let main = lmi.add_block(d);
    let x = lmi.add_matrix_var(&b_basis, |e| e.trace());
    lmi.add_matrix_coeff(&x, &b_basis, main, |e| e.kron_identity_left(da));
    lmi.add_constant(main, &(-r.matrix()));
    let ball = add_ball(&mut lmi, r.matrix(), full_basis.traceless(), &full_basis, eps);
    lmi.add_matrix_coeff(&ball.delta, &ball.delta_basis, main, |e| e.scaled(-1.0));
    let sol = lmi.solve(&opts.solver)?;
    let dm = sol.matrix(&ball.delta, &ball.delta_basis);
    let raw = r.matrix() + dm;
    let smoothed = repair_witness(&r, &raw, eps)?.reorder(&rho.layout().labels())?;
    let xm = sol.matrix(&x, &b_basis);
    let cond_layout = rho.layout().select(&rho.layout().positions(cond)?);
    let witness = DensityOperator::from_psd(cond_layout, &xm).ok();
    Ok(EntropyValue {
        bits: -sol.value.log2(),
        method: Method::Sdp,
        witness,
        gap: sol.gap,
        status: Some(sol.status),
        note: status_note(sol.status),
        smoothed: Some(smoothed),
    })
}

/// Upper bound on the smooth max-entropy relative to sigma: drop the
/// smallest eigenvalues of rho with total weight at most eps (which moves
/// the state by exactly that weight in half trace distance), renormalize,
/// and evaluate the max-entropy. Heuristic, not an optimum.
pub fn h_max_smooth_rel(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<(f64, String)> {
    check_eps(eps)?;
    let e = rho.eigh();
    let mut removed = 0.0;
    let mut keep = vec![true; e.values.len()];
    for (i, &v) in e.values.iter().enumerate() {
        let v = v.max(0.0);
        if removed + v <= eps && i + 1 < e.values.len() {
            removed += v;
            keep[i] = false;
        } else {
            break;
        }
    }
    let dropped = keep.iter().filter(|k| !**k).count();
    let mut m = CMat::zeros(rho.dim(), rho.dim());
    for (i, &k) in keep.iter().enumerate() {
        if k {
            let col = e.vectors.column(i);
            m += col * col.adjoint() * cr(e.values[i].max(0.0));
        }
    }
    let truncated = DensityOperator::from_psd(rho.layout().clone(), &m)?;
    let value = entropy::h_max_rel(&truncated, sigma)?;
    let note = format!("heuristic upper bound: spectral truncation dropped {dropped} eigenvalue(s) of total weight {removed:.6e}");
    Ok((value, note))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub value_bits_per_copy: f64,
    /// value_bits_per_copy - target_bits
    pub gap: f64,
    pub solver_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceSeries {
    pub eps: f64,
    /// S(A|R) of a single copy.
    pub target_bits: f64,
    pub points: Vec<ConvergencePoint>,
}

impl ConvergenceSeries {
    /// Each value is at least as close to the target as the previous one
    /// (up to `tol`).
    pub fn weakly_monotone_toward_target(&self, tol: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].gap.abs() <= w[0].gap.abs() + tol)
    }
}

/// Per-copy smooth min-entropy H_min^eps(rho_AR^{(x)n} | R^n) / n for
/// n = 1..=n_max, with target S(A|R).
pub fn convergence_series(psi: &PureState, eps: f64, n_max: usize) -> Result<ConvergenceSeries> {
    check_eps(eps)?;
    if n_max == 0 {
        return Err(Error::Argument("n_max must be at least 1".into()));
    }
    let rho = psi.density();
    let rho_ar = rho.partial_trace(&["A", "R"])?;
    let per_copy = rho_ar.dim();
    let total = (per_copy as f64).powi(n_max as i32);
    if total > 256.0 {
        return Err(Error::Dimension(format!(
            "(d_A d_R)^n_max = {total} exceeds 256; reduce n_max"
        )));
    }
    let target = entropy::cond_von_neumann(&rho_ar, &["R"])?;
    let points: Vec<Result<ConvergencePoint>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let big = rho_ar.tensor_power(n)?;
            let cond: Vec<String> = (1..=n).map(|k| format!("R.{k}")).collect();
            let copies: Vec<Vec<String>> = (1..=n).map(|k| vec![format!("A.{k}"), format!("R.{k}")]).collect();
            let opts = SmoothOptions {
                copies: (n > 1).then_some(copies),
                ..Default::default()
            };
            let v = h_min_smooth_cond_with(&big, &cond, eps, &opts)?;
            let per = v.bits / n as f64;
            Ok(ConvergencePoint {
                n,
                value_bits_per_copy: per,
                gap: per - target,
                solver_gap: v.gap,
            })
        })
        .collect();
    Ok(ConvergenceSeries {
        eps,
        target_bits: target,
        points: points.into_iter().collect::<Result<_>>()?,
    })
}

/// Witness check independent of the solver: valid state within the ball.
pub fn witness_in_ball(center: &DensityOperator, smoothed: &DensityOperator, eps: f64) -> bool {
    let ball = SmoothingBall {
        center: center.clone(),
        epsilon: eps,
    };
    ball.contains(smoothed) && center.trace_distance(smoothed).map(|d| d <= eps + BALL_TOL).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::SystemLayout;
    use crate::state::max_entangled;

    fn bell() -> DensityOperator {
        max_entangled(2, "A", "B").unwrap().density()
    }

    #[test]
    fn eps_zero_reduces() {
        let rho = bell();
        let rb = rho.partial_trace(&["B"]).unwrap();
        let a = h_min_smooth_rel(&rho, &rb, 0.0).unwrap().bits;
        assert!((a + 1.0).abs() < 1e-12);
        let b = h_min_smooth_cond(&rho, &["B"], 0.0).unwrap().bits;
        assert!((b + 1.0).abs() < 1e-7);
    }

    #[test]
    fn bell_closed_form() {
        // Twirling argument: H^eps(Phi_2 | B) = -1 - log2(1 - eps) for eps <= 3/4.
        let rho = bell();
        for eps in [0.05, 0.1, 0.3] {
            let v = h_min_smooth_cond(&rho, &["B"], eps).unwrap();
            let want = -1.0 - (1.0 - eps).log2();
            assert!((v.bits - want).abs() < 1e-6, "eps {eps}: {} vs {want}", v.bits);
            assert!(witness_in_ball(&rho, v.smoothed.as_ref().unwrap(), eps));
        }
    }

    #[test]
    fn relative_matches_bisection() {
        let rho = bell();
        let rb = rho.partial_trace(&["B"]).unwrap();
        let a = h_min_smooth_rel(&rho, &rb, 0.1).unwrap();
        let b = h_min_smooth_rel_bisection(&rho, &rb, 0.1, 40).unwrap();
        assert!((a.bits - b.bits).abs() < 1e-6, "{} vs {}", a.bits, b.bits);
        assert!(a.bits >= -1.0);
    }

    #[test]
    fn truncation_heuristic() {
        let l = SystemLayout::new(&[("A", 2), ("B", 1)]).unwrap();
        let rho = DensityOperator::diagonal(l, &[0.95, 0.05]).unwrap();
        let sb = DensityOperator::maximally_mixed(SystemLayout::single("B", 1).unwrap());
        let (v0, _) = h_max_smooth_rel(&rho, &sb, 0.0).unwrap();
        assert!((v0 - 1.0).abs() < 1e-12);
        let (v, note) = h_max_smooth_rel(&rho, &sb, 0.06).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(note.contains("1 eigenvalue"));
    }

    #[test]
    fn singular_sigma_compressed() {
        let l = SystemLayout::new(&[("A", 2), ("B", 2)]).unwrap();
        let rho = DensityOperator::diagonal(l, &[0.5, 0.0, 0.45, 0.05]).unwrap();
        let sb = DensityOperator::diagonal(SystemLayout::single("B", 2).unwrap(), &[1.0, 0.0]).unwrap();
        assert!(entropy::h_min_rel(&rho, &sb).unwrap().is_unbounded());
        // Moving the 0.05 weight costs exactly 0.05 in trace distance; the
        // best state is then diag(0.5, 0.5) on B=0, lambda = 1/2.
        let v = h_min_smooth_rel(&rho, &sb, 0.1).unwrap();
        assert!((v.bits - 1.0).abs() < 1e-6, "{}", v.bits);
        let far = h_min_smooth_rel(&rho, &sb, 0.01).unwrap();
        assert!(far.is_unbounded());
    }
}
