//! Non-smooth min-, max-, collision and von Neumann entropies, all in bits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::layout::SystemLayout;
use crate::linalg::{self, cr, CMat};
use crate::sdp::{HermitianBasis, LmiProblem, SolveStatus, SolverOptions};
use crate::state::{DensityOperator, PureState};
use crate::tolerances::RANK_CUTOFF;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Eigen,
    Bisection,
    Sdp,
    SpectralTruncation,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Eigen => "eigen",
            Method::Bisection => "bisection",
            Method::Sdp => "sdp",
            Method::SpectralTruncation => "spectral-truncation",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An entropy in bits together with how it was obtained.
#[derive(Clone, Debug)]
pub struct EntropyValue {
    pub bits: f64,
    pub method: Method,
    /// Optimizing sigma_B, when the quantity is an optimum over sigma_B.
    pub witness: Option<DensityOperator>,
    /// Duality gap of the underlying solve (0 for closed forms).
    pub gap: f64,
    pub status: Option<SolveStatus>,
    pub note: Option<String>,
    /// Optimal state inside the smoothing ball, for smooth quantities.
    pub smoothed: Option<DensityOperator>,
}

impl EntropyValue {
    pub(crate) fn closed(bits: f64, method: Method) -> Self {
        EntropyValue {
            bits,
            method,
            witness: None,
            gap: 0.0,
            status: None,
            note: None,
            smoothed: None,
        }
    }

    pub(crate) fn unbounded(method: Method, note: String) -> Self {
        EntropyValue {
            bits: f64::NEG_INFINITY,
            method,
            witness: None,
            gap: 0.0,
            status: None,
            note: Some(note),
            smoothed: None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.bits == f64::NEG_INFINITY
    }
}

pub(crate) fn log2(x: f64) -> f64 {
    x.log2()
}

/// -log lambda_max(rho)
pub fn h_min(rho: &DensityOperator) -> f64 {
    -log2(rho.eigh().max())
}

/// log rank(rho)
pub fn h_max(rho: &DensityOperator) -> f64 {
    log2(rho.rank() as f64)
}

pub fn von_neumann(rho: &DensityOperator) -> f64 {
    let e = rho.eigh();
    let cut = e.cutoff();
    -e.values
        .iter()
        .filter(|&&v| v > cut)
        .map(|&v| v * log2(v))
        .sum::<f64>()
}

/// S(AB) - S(B) with B = `cond`.
pub fn cond_von_neumann<S: AsRef<str>>(rho: &DensityOperator, cond: &[S]) -> Result<f64> {
    let rb = rho.partial_trace(cond)?;
    Ok(von_neumann(rho) - von_neumann(&rb))
}

/// rho reordered as (A, B) where B lists `cond` in the given order.
pub(crate) fn split_ab<S: AsRef<str>>(rho: &DensityOperator, cond: &[S]) -> Result<(DensityOperator, usize, usize)> {
    let a = rho.layout().complement(cond)?;
    if a.is_empty() {
        return Err(Error::Argument("conditioning covers every factor".into()));
    }
    let mut order: Vec<String> = a;
    order.extend(cond.iter().map(|s| s.as_ref().to_string()));
    let r = rho.reorder(&order)?;
    let db = rho.layout().dim_of_all(cond)?;
    let da = rho.dim() / db;
    Ok((r, da, db))
}

/// rho_AB with B matched to the layout of sigma, plus id_A (x) sigma.
pub(crate) fn align_with_sigma(rho: &DensityOperator, sigma: &DensityOperator) -> Result<(DensityOperator, CMat, usize)> {
    let cond: Vec<&str> = sigma.layout().labels();
    for l in &cond {
        if rho.layout().dim_of(l)? != sigma.layout().dim_of(l)? {
            return Err(Error::Dimension(format!("factor `{l}` differs between rho and sigma")));
        }
    }
    let (r, da, _) = split_ab(rho, &cond)?;
    let gamma = linalg::kron(&linalg::identity(da), sigma.matrix());
    Ok((r, gamma, da))
}

/// Weight of rho outside supp(id (x) sigma); zero when the support condition holds.
pub(crate) fn outside_weight(rho: &CMat, gamma: &CMat) -> f64 {
    let proj = linalg::support_projector(gamma);
    let perp = linalg::identity(gamma.nrows()) - proj;
    linalg::re_trace_prod(&perp, rho).max(0.0)
}

pub(crate) const SUPPORT_TOL: f64 = 1e-9;

/// H_min(rho_AB | sigma_B) via the generalized-inverse eigenvalue formula.
/// `sigma` names the conditioning factors through its layout.
pub fn h_min_rel(rho: &DensityOperator, sigma: &DensityOperator) -> Result<EntropyValue> {
    let (r, gamma, _) = align_with_sigma(rho, sigma)?;
    let w = outside_weight(r.matrix(), &gamma);
    if w > SUPPORT_TOL {
        return Ok(EntropyValue::unbounded(
            Method::Eigen,
            format!("support violation: weight {w:.3e} of rho lies outside supp(sigma)"),
        ));
    }
    let g = linalg::psd_power(&gamma, -0.5);
    let m = &g * r.matrix() * &g;
    let lam = linalg::lambda_max(&m);
    Ok(EntropyValue::closed(-log2(lam), Method::Eigen))
}

/// Same quantity computed from the definition: bisection on the smallest
/// lambda with lambda (id (x) sigma) - rho >= 0.
pub fn h_min_rel_bisection(rho: &DensityOperator, sigma: &DensityOperator) -> Result<EntropyValue> {
    let (r, gamma, _) = align_with_sigma(rho, sigma)?;
    let w = outside_weight(r.matrix(), &gamma);
    if w > SUPPORT_TOL {
        return Ok(EntropyValue::unbounded(
            Method::Bisection,
            format!("support violation: weight {w:.3e} of rho lies outside supp(sigma)"),
        ));
    }
    let rm = r.matrix();
    let feasible = |lam: f64| -> bool {
        let m = &gamma * cr(lam) - rm;
        linalg::lambda_min(&m) >= -1e-13 * lam.max(1.0)
    };
    let mut hi = 1.0;
    while !feasible(hi) {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::Solver("bisection bracket diverged".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(EntropyValue::closed(-log2(hi), Method::Bisection))
}

/// H_min(rho_AB | B) = -log min{ tr X : id_A (x) X >= rho_AB, X >= 0 }.
pub fn h_min_cond<S: AsRef<str>>(rho: &DensityOperator, cond: &[S]) -> Result<EntropyValue> {
    h_min_cond_with(rho, cond, &SolverOptions::default())
}

pub fn h_min_cond_with<S: AsRef<str>>(
    rho: &DensityOperator,
    cond: &[S],
    opts: &SolverOptions,
) -> Result<EntropyValue> {
    if cond.is_empty() {
        return Ok(EntropyValue::closed(h_min(rho), Method::ClosedForm));
    }
    let (r, da, db) = split_ab(rho, cond)?;
    let basis = HermitianBasis::full(db);
    let mut lmi = LmiProblem::new();
    let main = lmi.add_block(da * db);
    let pos = lmi.add_block(db);
    let x = lmi.add_matrix_var(&basis, |e| e.trace());
    lmi.add_matrix_coeff(&x, &basis, main, |e| e.kron_identity_left(da));
    lmi.add_matrix_coeff(&x, &basis, pos, |e| e.clone());
    lmi.add_constant(main, &(-r.matrix()));
    let sol = lmi.solve(opts)?;
    let xm = sol.matrix(&x, &basis);
    let cond_layout = rho.layout().select(&rho.layout().positions(cond)?);
    let witness = DensityOperator::from_psd(cond_layout, &xm).ok();
    let note = (sol.status != SolveStatus::Optimal).then(|| format!("solver stopped: {}", sol.status));
    Ok(EntropyValue {
        bits: -log2(sol.value),
        method: Method::Sdp,
        witness,
        gap: sol.gap,
        status: Some(sol.status),
        note,
        smoothed: None,
    })
}

/// log tr((id (x) sigma) rho^0)
pub fn h_max_rel(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let (r, gamma, _) = align_with_sigma(rho, sigma)?;
    let p0 = linalg::support_projector(r.matrix());
    Ok(log2(linalg::re_trace_prod(&gamma, &p0)))
}

/// log lambda_max(tr_A rho^0)
pub fn h_max_cond<S: AsRef<str>>(rho: &DensityOperator, cond: &[S]) -> Result<f64> {
    Ok(h_max_cond_value(rho, cond)?.bits)
}

/// Closed form with the maximizing sigma_B (top eigenvector of tr_A rho^0).
pub fn h_max_cond_value<S: AsRef<str>>(rho: &DensityOperator, cond: &[S]) -> Result<EntropyValue> {
    let (r, da, db) = split_ab(rho, cond)?;
    let p0 = linalg::support_projector(r.matrix());
    let pb = linalg::partial_trace_positions(&p0, &[da, db], &[1]);
    let e = linalg::eigh(&pb);
    let v = e.vectors.column(db - 1).into_owned();
    let cond_layout = SystemLayout::from_factors(
        cond.iter()
            .map(|l| {
                Ok(crate::layout::Factor {
                    label: l.as_ref().to_string(),
                    dim: rho.layout().dim_of(l.as_ref())?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let witness = DensityOperator::from_psd(cond_layout, &(&v * v.adjoint())).ok();
    Ok(EntropyValue {
        bits: log2(e.max()),
        method: Method::ClosedForm,
        witness,
        gap: 0.0,
        status: None,
        note: None,
        smoothed: None,
    })
}

/// Collision entropy -log tr(((id (x) sigma^{-1/4}) rho (id (x) sigma^{-1/4}))^2).
pub fn h2_rel(rho: &DensityOperator, sigma: &DensityOperator) -> Result<EntropyValue> {
    let (r, gamma, _) = align_with_sigma(rho, sigma)?;
    let w = outside_weight(r.matrix(), &gamma);
    if w > SUPPORT_TOL {
        return Ok(EntropyValue::unbounded(
            Method::ClosedForm,
            format!("support violation: weight {w:.3e} of rho lies outside supp(sigma)"),
        ));
    }
    let g = linalg::psd_power(&gamma, -0.25);
    let m = &g * r.matrix() * &g;
    Ok(EntropyValue::closed(-log2(linalg::re_trace_prod(&m, &m)), Method::ClosedForm))
}

/// |H_min(rho_AR | rho_R) + H_max(rho_AB | B)| for a pure state on A, B, R.
pub fn duality_gap(psi: &PureState, a: &str, b: &str, r: &str) -> Result<f64> {
    let (hmin, hmax) = duality_pair(psi, a, b, r)?;
    Ok((hmin + hmax).abs())
}

/// (H_min(rho_AR | rho_R), H_max(rho_AB | B)).
pub fn duality_pair(psi: &PureState, a: &str, b: &str, r: &str) -> Result<(f64, f64)> {
    if psi.layout().len() != 3 {
        return Err(Error::Layout("duality needs exactly three factors".into()));
    }
    let rho = psi.density();
    let rho_ar = rho.partial_trace(&[a, r])?;
    let rho_r = rho.partial_trace(&[r])?;
    let rho_ab = rho.partial_trace(&[a, b])?;
    let hmin = h_min_rel(&rho_ar, &rho_r)?.bits;
    let hmax = h_max_cond(&rho_ab, &[b])?;
    Ok((hmin, hmax))
}

/// Rank cutoff relative to the largest eigenvalue, exposed for reports.
pub fn rank_cutoff() -> f64 {
    RANK_CUTOFF
}
