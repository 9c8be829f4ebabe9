//! One-way state merging: Alice measures A A0 with a random block
//! measurement, Bob applies an outcome-dependent Uhlmann isometry, and the
//! result is compared with Phi_L (x) psi_{B B' R}. Also the converse bounds
//! on the entanglement cost.
//!
//! Register conventions. The input psi has factors A, B, R. Initial
//! entanglement Phi_K lives on A0 B0. After the protocol Alice holds A1
//! (dim L) and Bob holds B1 (dim L), B' (a copy of A) and B.

use serde::Serialize;

use crate::decoupling::{self, BlockMeasurement};
use crate::entropy::{self, EntropyValue};
use crate::error::{Error, Result};
use crate::layout::SystemLayout;
use crate::linalg::{self, cr, CMat, CVec};
use crate::metrics;
use crate::random;
use crate::smoothing;
use crate::state::{DensityOperator, PureState};
use crate::tolerances::{OUTCOME_PROB_FLOOR, RANK_CUTOFF};

/// Slack used when rounding a real-valued cost target up to whole bits, so
/// that solver noise on an integer target does not cost an extra bit.
pub const COST_ROUNDING_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct MergeTask {
    pub psi: PureState,
    pub k: usize,
    pub l: usize,
    pub eps_design: f64,
    pub seed: u64,
}

impl MergeTask {
    pub fn new(psi: PureState, k: usize, l: usize, eps_design: f64, seed: u64) -> Result<Self> {
        if k == 0 || l == 0 {
            return Err(Error::Argument("K and L must be at least 1".into()));
        }
        for lab in ["A", "B", "R"] {
            psi.layout().dim_of(lab)?;
        }
        if psi.layout().len() != 3 {
            return Err(Error::Layout("merging expects exactly the factors A, B, R".into()));
        }
        Ok(MergeTask {
            psi,
            k,
            l,
            eps_design,
            seed,
        })
    }

    pub fn from_plan(psi: PureState, plan: &CostPlan, seed: u64) -> Result<Self> {
        MergeTask::new(psi, plan.k, plan.l, plan.eps, seed)
    }

    pub fn cost(&self) -> f64 {
        (self.k as f64).log2() - (self.l as f64).log2()
    }
}

/// Per-outcome record of a protocol run.
#[derive(Clone, Debug)]
pub struct Branch {
    pub probability: f64,
    /// rho^j on (A1, R); `None` for negligible outcomes.
    pub state: Option<DensityOperator>,
    /// Bob's decoder from B B0 to B1 B' B.
    pub isometry: CMat,
    /// max |J^dag J - id| of the decoder restricted to the support of Bob's
    /// share of the branch state.
    pub isometry_defect: f64,
    /// Whether the decoder is an isometry on all of B B0 (possible only
    /// when dim B1 B' B >= dim B B0).
    pub full_isometry: bool,
}

#[derive(Clone, Debug)]
pub struct MergeOutcome {
    pub k: usize,
    pub l: usize,
    pub cost: f64,
    pub seed: u64,
    pub branches: Vec<Branch>,
    /// Final state on (A1, B1, B', B, R).
    pub final_state: DensityOperator,
    /// ||rho_final - Phi_L (x) psi_{B B' R}||_1, without the factor 1/2.
    pub error: f64,
    /// sum_j p_j ||rho^j_{A1 R} - tau (x) rho_R||_1
    pub condition_value: f64,
}

impl MergeOutcome {
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    /// error <= 2 sqrt(condition) + tol
    pub fn chain_holds(&self, tol: f64) -> bool {
        self.error <= 2.0 * self.condition_value.sqrt() + tol
    }

    pub fn max_isometry_defect(&self) -> f64 {
        self.branches.iter().map(|b| b.isometry_defect).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostMode {
    /// -H_min(A|R) + 2 log(1/eps), error 2 sqrt(2 eps)
    Nonsmooth,
    /// -H_min^eps(A|R) + 2 log(1/eps), error 8 sqrt(eps)
    Smooth,
    /// -H_min^{eps^2/64}(A|R) + 4 log(1/eps) + 12, error eps
    Corollary,
}

impl CostMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CostMode::Nonsmooth => "nonsmooth",
            CostMode::Smooth => "smooth",
            CostMode::Corollary => "corollary",
        }
    }
}

impl std::str::FromStr for CostMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonsmooth" => Ok(CostMode::Nonsmooth),
            "smooth" => Ok(CostMode::Smooth),
            "corollary" => Ok(CostMode::Corollary),
            other => Err(Error::Argument(format!("unknown cost mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CostPlan {
    pub mode: CostMode,
    pub eps: f64,
    /// Smoothing radius entering the entropy (0 for the nonsmooth plan).
    pub eps_prime: f64,
    /// The entropy term, in bits.
    pub entropy_bits: f64,
    /// Real-valued cost before rounding.
    pub target: f64,
    pub cost_bits: i64,
    pub k: usize,
    pub l: usize,
    /// Promised upper bound on the merging error.
    pub guarantee: f64,
}

/// Smallest whole number of bits at or above `target`, as (K, L) powers of
/// two with K = 1 or L = 1.
pub fn round_cost(target: f64) -> Result<(i64, usize, usize)> {
    if !target.is_finite() {
        return Err(Error::Argument(format!("cost target {target} is not finite")));
    }
    let c = (target - COST_ROUNDING_TOL).ceil() as i64;
    if c.abs() > 40 {
        return Err(Error::Argument(format!("cost {c} bits is beyond simulation range")));
    }
    Ok(if c >= 0 { (c, 1usize << c, 1) } else { (c, 1, 1usize << (-c)) })
}

/// Entanglement cost plan for merging the A part of rho_AR (conditioning on
/// the factor R).
pub fn plan_cost(rho_ar: &DensityOperator, eps: f64, mode: CostMode) -> Result<CostPlan> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Argument(format!("eps = {eps} outside (0, 1)")));
    }
    let log_inv = (1.0 / eps).log2();
    let (eps_prime, h, extra, guarantee) = match mode {
        CostMode::Nonsmooth => (0.0, entropy::h_min_cond(rho_ar, &["R"])?, 2.0 * log_inv, 2.0 * (2.0 * eps).sqrt()),
        CostMode::Smooth => (eps, smoothing::h_min_smooth_cond(rho_ar, &["R"], eps)?, 2.0 * log_inv, 8.0 * eps.sqrt()),
        CostMode::Corollary => {
            let e = eps * eps / 64.0;
            (e, smoothing::h_min_smooth_cond(rho_ar, &["R"], e)?, 4.0 * log_inv + 12.0, eps)
        }
    };
    let target = -h.bits + extra;
    let (cost_bits, k, l) = round_cost(target)?;
    Ok(CostPlan {
        mode,
        eps,
        eps_prime,
        entropy_bits: h.bits,
        target,
        cost_bits,
        k,
        l,
        guarantee,
    })
}

/// Result of matching two purifications.
#[derive(Clone, Debug)]
pub struct UhlmannMap {
    /// V from the source complement to the target complement.
    pub isometry: CMat,
    /// |<target| (id (x) V) |source>|^2
    pub fidelity: f64,
    pub defect: f64,
    pub full: bool,
    pub source_complement: SystemLayout,
    pub target_complement: SystemLayout,
}

struct Decoder {
    v: CMat,
    /// Source in the support basis, f x r.
    xi_hat: CMat,
    /// Restriction of V to the support, c' x r.
    j: CMat,
    overlap: f64,
    defect: f64,
    full: bool,
}

/// Core of the Uhlmann construction on amplitude matrices (rows: fixed
/// system, columns: complement). Bob's share of the source is supported on
/// conj(W) where W spans the row space of xi. V maps that support to the
/// target complement via the polar part of the overlap matrix, and is
/// extended to an isometry on the whole complement when dimensions allow.
fn uhlmann_decoder(xi: &CMat, phi: &CMat) -> Result<Decoder> {
    let f = xi.nrows();
    let c = xi.ncols();
    let cp = phi.ncols();
    if phi.nrows() != f {
        return Err(Error::Dimension("fixed systems differ in dimension".into()));
    }
    let gram = linalg::hermitize(&(xi * xi.adjoint()));
    let e = linalg::eigh(&gram);
    let cut = RANK_CUTOFF * e.max().max(0.0);
    let keep: Vec<usize> = (0..f).filter(|&i| e.values[i] > cut).collect();
    let r = keep.len();
    if r == 0 {
        return Err(Error::Argument("source vector is zero".into()));
    }
    if cp < r {
        return Err(Error::Dimension(format!(
            "target complement has dim {cp} but the source needs {r}"
        )));
    }
    // xi_hat = U_g sqrt(Lambda), W = xi^dag U_g Lambda^{-1/2}
    let mut xi_hat = CMat::zeros(f, r);
    let mut w = CMat::zeros(c, r);
    for (k, &i) in keep.iter().enumerate() {
        let s = e.values[i].sqrt();
        let u = e.vectors.column(i);
        xi_hat.set_column(k, &(u * cr(s)));
        w.set_column(k, &(xi.adjoint() * u * cr(1.0 / s)));
    }
    let o = phi.adjoint() * &xi_hat;
    let svd = o.clone().svd(true, true);
    let a = svd.u.expect("requested");
    let bh = svd.v_t.expect("requested");
    let mut j = (a * bh).map(|z| z.conj());
    let mut defect = linalg::max_abs(&(j.adjoint() * &j - linalg::identity(r)));
    if defect > 1e-10 {
        // degenerate singular values: re-orthonormalize without touching the
        // overlap-carrying directions more than necessary
        let (q, _) = linalg::qr_q_and_rdiag(&pad_square(&j));
        let q = q.columns(0, r).into_owned();
        let ph: Vec<_> = (0..r)
            .map(|k| {
                let z = (q.column(k).adjoint() * j.column(k))[(0, 0)];
                if z.norm() > 0.0 { z / z.norm() } else { cr(1.0) }
            })
            .collect();
        j = CMat::from_fn(cp, r, |i, k| q[(i, k)] * ph[k]);
        defect = linalg::max_abs(&(j.adjoint() * &j - linalg::identity(r)));
    }
    // <phi| (id (x) V) |xi> = tr(J^T O)
    let overlap = (j.transpose() * &o).trace().norm();
    let mut v = &j * w.transpose();
    let full = cp >= c;
    if full && r < c {
        let s_hat = w.map(|z| z.conj());
        let s_perp = complement_basis(&s_hat, c - r);
        let j_perp = complement_basis(&j, c - r);
        v += j_perp * s_perp.adjoint();
    }
    Ok(Decoder {
        v,
        xi_hat,
        j,
        overlap,
        defect,
        full,
    })
}

fn pad_square(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut out = CMat::zeros(n, n);
    out.view_mut((0, 0), (n, m.ncols())).copy_from(m);
    out
}

/// `count` orthonormal vectors orthogonal to the columns of `m`.
fn complement_basis(m: &CMat, count: usize) -> CMat {
    let n = m.nrows();
    let proj = linalg::identity(n) - m * m.adjoint();
    let e = linalg::eigh(&linalg::hermitize(&proj));
    // eigenvalues ascending; the complement has eigenvalue 1
    e.vectors.columns(n - count, count).into_owned()
}

/// Isometry V on the complement of `fixed` with
/// F((id (x) V) source, target) = F(source_fixed, target_fixed).
pub fn uhlmann_isometry<S: AsRef<str>>(source: &PureState, target: &PureState, fixed: &[S]) -> Result<UhlmannMap> {
    let fixed: Vec<String> = fixed.iter().map(|s| s.as_ref().to_string()).collect();
    let prep = |p: &PureState| -> Result<(CMat, SystemLayout)> {
        let rest = p.layout().complement(&fixed)?;
        let mut order = fixed.clone();
        order.extend(rest.iter().cloned());
        let q = p.reorder(&order)?;
        let comp = p.layout().keep(&rest)?;
        let dr = p.layout().dim_of_all(&fixed)?;
        let v = q.vector();
        let dc = v.len() / dr;
        Ok((CMat::from_fn(dr, dc, |i, k| v[i * dc + k]), comp))
    };
    let (xi, sc) = prep(source)?;
    let (phi, tc) = prep(target)?;
    for l in &fixed {
        if source.layout().dim_of(l)? != target.layout().dim_of(l)? {
            return Err(Error::Dimension(format!("factor `{l}` differs between source and target")));
        }
    }
    let d = uhlmann_decoder(&xi, &phi)?;
    Ok(UhlmannMap {
        isometry: d.v,
        fidelity: d.overlap * d.overlap,
        defect: d.defect,
        full: d.full,
        source_complement: sc,
        target_complement: tc,
    })
}

/// Apply id (x) V to a pure state, where V acts on everything except `fixed`.
pub fn apply_on_complement<S: AsRef<str>>(
    psi: &PureState,
    v: &CMat,
    fixed: &[S],
    new_complement: &SystemLayout,
) -> Result<PureState> {
    let fixed: Vec<String> = fixed.iter().map(|s| s.as_ref().to_string()).collect();
    let rest = psi.layout().complement(&fixed)?;
    let mut order = fixed.clone();
    order.extend(rest);
    let q = psi.reorder(&order)?;
    let fl = psi.layout().keep(&fixed)?;
    let df = fl.total_dim();
    let dc = q.vector().len() / df;
    if v.ncols() != dc || v.nrows() != new_complement.total_dim() {
        return Err(Error::Dimension("isometry does not match the complement".into()));
    }
    let m = CMat::from_fn(df, dc, |i, k| q.vector()[i * dc + k]);
    let out = m * v.transpose();
    let n = out.ncols();
    let vec = CVec::from_fn(df * n, |idx, _| out[(idx / n, idx % n)]);
    PureState::new(fl.concat(new_complement)?, vec)
}

/// Amplitudes psi[a, (b, r)] for psi ordered (A, B, R).
fn psi_matrix(psi: &PureState) -> Result<(CMat, usize, usize, usize)> {
    let q = psi.reorder(&["A", "B", "R"])?;
    let da = psi.layout().dim_of("A")?;
    let db = psi.layout().dim_of("B")?;
    let dr = psi.layout().dim_of("R")?;
    let v = q.vector();
    let n = db * dr;
    Ok((CMat::from_fn(da, n, |a, k| v[a * n + k]), da, db, dr))
}

/// ||sum_j p_j |x_j><x_j| - |t><t|||_1 computed in the span of the vectors.
fn mixture_distance(t: &CVec, xs: &[(f64, CVec)]) -> f64 {
    let d = t.len();
    let m = xs.len() + 1;
    if m >= d {
        let mut rho = -(t * t.adjoint());
        for (p, x) in xs {
            rho += x * x.adjoint() * cr(*p);
        }
        return linalg::trace_norm(&linalg::hermitize(&rho));
    }
    let mut cols = CMat::zeros(d, m);
    cols.set_column(0, t);
    for (k, (_, x)) in xs.iter().enumerate() {
        cols.set_column(k + 1, x);
    }
    let q = cols.clone().qr().q();
    let coef = q.adjoint() * &cols;
    let mut small = -(coef.column(0) * coef.column(0).adjoint());
    for (k, (p, _)) in xs.iter().enumerate() {
        small += coef.column(k + 1) * coef.column(k + 1).adjoint() * cr(*p);
    }
    linalg::trace_norm(&linalg::hermitize(&small))
}

/// Execute the protocol once.
pub fn run_protocol(task: &MergeTask) -> Result<MergeOutcome> {
    let (psi, da, db, dr) = psi_matrix(&task.psi)?;
    let (k, l) = (task.k, task.l);
    let d = da * k;
    if l > d {
        return Err(Error::Argument(format!("L = {l} exceeds dim A A0 = {d}")));
    }
    let mut rng = random::substream(task.seed, 0);
    let mut m: BlockMeasurement = decoupling::build_measurement(d, l, &mut rng)?;
    m.seed = Some(task.seed);
    let sk = cr(1.0 / (k as f64).sqrt());
    let f = l * dr;
    let c = db * k;
    let cp = l * da * db;

    // target Phi_L (x) psi_{B B' R}: rows (a1, r), columns (b1, b', b)
    let sl = cr(1.0 / (l as f64).sqrt());
    let mut phi = CMat::zeros(f, cp);
    for a1 in 0..l {
        for bp in 0..da {
            for b in 0..db {
                for r in 0..dr {
                    phi[(a1 * dr + r, (a1 * da + bp) * db + b)] = psi[(bp, b * dr + r)] * sl;
                }
            }
        }
    }
    let t = flatten(&phi);

    let rho_r = {
        let g = psi.adjoint() * &psi; // (b, r) x (b, r), transposed marginal
        let g = g.map(|z| z.conj());
        linalg::partial_trace_positions(&g, &[db, dr], &[1])
    };
    let tau_r = linalg::kron(&(linalg::identity(l) * cr(1.0 / l as f64)), &rho_r);
    let ar_layout = SystemLayout::new(&[(decoupling::A1, l), ("R", dr)])?;

    let mut branches = Vec::with_capacity(m.n_blocks);
    let mut mixture: Vec<(f64, CVec)> = Vec::new();
    let mut condition = 0.0;
    for jb in 0..m.n_blocks {
        let (start, len) = m.block(jb);
        // xi[(i, r), (b, b0)] = sum_a U[start + i, a K + b0] psi[a, (b, r)] / sqrt K
        let mut xi = CMat::zeros(f, c);
        for i in 0..len {
            for b0 in 0..k {
                for a in 0..da {
                    let u = m.unitary[(start + i, a * k + b0)] * sk;
                    if u == cr(0.0) {
                        continue;
                    }
                    for b in 0..db {
                        for r in 0..dr {
                            xi[(i * dr + r, b * k + b0)] += u * psi[(a, b * dr + r)];
                        }
                    }
                }
            }
        }
        let p = xi.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if p <= OUTCOME_PROB_FLOOR {
            branches.push(Branch {
                probability: p,
                state: None,
                isometry: CMat::identity(cp, c),
                isometry_defect: 0.0,
                full_isometry: cp >= c,
            });
            continue;
        }
        let xi = xi * cr(1.0 / p.sqrt());
        let rho_j = linalg::hermitize(&(&xi * xi.adjoint()));
        condition += p * linalg::trace_norm(&(&rho_j - &tau_r));
        let dec = uhlmann_decoder(&xi, &phi)?;
        // (id (x) V) xi = xi_hat J^T
        let out = &dec.xi_hat * dec.j.transpose();
        mixture.push((p, flatten(&out)));
        branches.push(Branch {
            probability: p,
            state: Some(DensityOperator::new_unchecked(ar_layout.clone(), rho_j)),
            isometry: dec.v,
            isometry_defect: dec.defect,
            full_isometry: dec.full,
        });
    }
    let error = mixture_distance(&t, &mixture);

    let mut rho = CMat::zeros(f * cp, f * cp);
    for (p, x) in &mixture {
        rho += x * x.adjoint() * cr(*p);
    }
    let raw_layout = SystemLayout::new(&[
        (decoupling::A1, l),
        ("R", dr),
        ("B1", l),
        ("B'", da),
        ("B", db),
    ])?;
    let final_state = DensityOperator::new_unchecked(raw_layout, linalg::hermitize(&rho))
        .reorder(&[decoupling::A1, "B1", "B'", "B", "R"])?;
    Ok(MergeOutcome {
        k,
        l,
        cost: task.cost(),
        seed: task.seed,
        branches,
        final_state,
        error,
        condition_value: condition,
    })
}

fn flatten(m: &CMat) -> CVec {
    let n = m.ncols();
    CVec::from_fn(m.nrows() * n, |idx, _| m[(idx / n, idx % n)])
}

/// The ideal output Phi_L (x) psi_{B B' R} on (A1, B1, B', B, R).
pub fn target_state(psi: &PureState, l: usize) -> Result<PureState> {
    let phi_l = crate::state::max_entangled(l, decoupling::A1, "B1")?;
    let moved = psi.relabel("A", "B'")?;
    phi_l.tensor(&moved)?.reorder(&[decoupling::A1, "B1", "B'", "B", "R"])
}

/// sum_j p_j ||rho^j - tau_{A1} (x) rho_R||_1 over measurement outcomes on
/// (A1, R).
pub fn merging_condition(outcomes: &[decoupling::Outcome], rho_r: &DensityOperator, l: usize) -> Result<f64> {
    let tau = DensityOperator::maximally_mixed(SystemLayout::single(decoupling::A1, l)?);
    let reference = tau.tensor(rho_r)?;
    let mut total = 0.0;
    for o in outcomes {
        if let Some(s) = &o.state {
            let s = s.reorder(&reference.layout().labels())?;
            total += o.probability * metrics::trace_norm(&(s.matrix() - reference.matrix()));
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroErrorBound {
    /// -H_min(rho_AR | rho_R)
    pub value: f64,
    /// H_max(rho_AB | B)
    pub max_entropy_form: f64,
    pub discrepancy: f64,
}

/// Lower bound on the cost of exact merging, in both of its forms.
pub fn zero_error_bound(psi: &PureState) -> Result<ZeroErrorBound> {
    let (hmin, hmax) = entropy::duality_pair(psi, "A", "B", "R")?;
    Ok(ZeroErrorBound {
        value: -hmin,
        max_entropy_form: hmax,
        discrepancy: (hmax + hmin).abs(),
    })
}

/// -H_min^{sqrt eps}(rho_AR | R): lower bound on the cost of any merging
/// protocol with error eps.
pub fn eps_error_bound(psi: &PureState, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Argument(format!("eps = {eps} outside [0, 1)")));
    }
    let rho_ar = psi.density().partial_trace(&["A", "R"])?;
    let h: EntropyValue = smoothing::h_min_smooth_cond(&rho_ar, &["R"], eps.sqrt())?;
    Ok(-h.bits)
}

/// The converse evaluated at a measured error. For e >= 1 the smoothing
/// ball holds every state and the bound is -log d_A.
pub fn lower_bound_at_error(psi: &PureState, error: f64) -> Result<f64> {
    if error >= 1.0 {
        return Ok(-(psi.layout().dim_of("A")? as f64).log2());
    }
    eps_error_bound(psi, error.max(0.0))
}

/// (H_min(rho_AR | sigma_R), H_min(rho'_ARX | sigma_R (x) rho_X)) for the
/// measurement with Kraus operators `kraus` on factor `a`, each outcome
/// recorded in a classical flag X. Kraus operators may change the dimension
/// of `a`.
pub fn monotonicity_witness(
    rho_ar: &DensityOperator,
    sigma_r: &DensityOperator,
    kraus: &[CMat],
    a: &str,
) -> Result<(f64, f64)> {
    if kraus.is_empty() {
        return Err(Error::Argument("no Kraus operators".into()));
    }
    let before = entropy::h_min_rel(rho_ar, sigma_r)?.bits;
    let rest = rho_ar.layout().complement(&[a])?;
    let mut order = vec![a.to_string()];
    order.extend(rest.iter().cloned());
    let r = rho_ar.reorder(&order)?;
    let da = rho_ar.layout().dim_of(a)?;
    let drest = r.dim() / da;
    let dout = kraus[0].nrows();
    let mut comp = linalg::identity(da) * cr(0.0);
    for km in kraus {
        if km.ncols() != da || km.nrows() != dout {
            return Err(Error::Dimension("Kraus operators have inconsistent shapes".into()));
        }
        comp += km.adjoint() * km;
    }
    let tp = linalg::max_abs(&(comp - linalg::identity(da)));
    if tp > 1e-9 {
        return Err(Error::invariant("trace-preserving", format!("defect {tp:.3e}")));
    }
    let nx = kraus.len();
    let blk = dout * drest;
    let mut out = CMat::zeros(blk * nx, blk * nx);
    let mut px = vec![0.0; nx];
    let id = linalg::identity(drest);
    for (x, km) in kraus.iter().enumerate() {
        let big = linalg::kron(km, &id);
        let w = linalg::hermitize(&(&big * r.matrix() * big.adjoint()));
        px[x] = linalg::trace(&w).re.max(0.0);
        // layout (A, rest, X): index (a, rest) * nx + x
        for i in 0..blk {
            for j in 0..blk {
                out[(i * nx + x, j * nx + x)] = w[(i, j)];
            }
        }
    }
    let mut factors = vec![crate::layout::Factor {
        label: a.to_string(),
        dim: dout,
    }];
    factors.extend(rho_ar.layout().keep(&rest)?.factors().iter().cloned());
    factors.push(crate::layout::Factor {
        label: "X".into(),
        dim: nx,
    });
    let after_state = DensityOperator::new_unchecked(SystemLayout::from_factors(factors)?, out);
    let rho_x = DensityOperator::diagonal(SystemLayout::single("X", nx)?, &px)?;
    let sigma_rx = sigma_r.tensor(&rho_x)?;
    let after = entropy::h_min_rel(&after_state, &sigma_rx)?.bits;
    Ok((before, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::random::{random_pure_state, rng_from_seed};
    use crate::state::max_entangled;

    fn rho_ar(psi: &PureState) -> DensityOperator {
        psi.density().partial_trace(&["A", "R"]).unwrap()
    }

    #[test]
    fn rounding() {
        assert_eq!(round_cost(3.0 + 1e-9).unwrap(), (3, 8, 1));
        assert_eq!(round_cost(2.2).unwrap(), (3, 8, 1));
        assert_eq!(round_cost(-1.5).unwrap(), (-1, 1, 2));
        assert_eq!(round_cost(0.0).unwrap(), (0, 1, 1));
        assert!(round_cost(f64::INFINITY).is_err());
    }

    #[test]
    fn plan_examples() {
        let prod = builtin::product();
        let p = plan_cost(&rho_ar(&prod), 0.25, CostMode::Nonsmooth).unwrap();
        assert_eq!(p.cost_bits, 4);
        let p = plan_cost(&rho_ar(&builtin::bell()), 0.5, CostMode::Nonsmooth).unwrap();
        assert_eq!((p.cost_bits, p.k, p.l), (3, 8, 1));
        let g = rho_ar(&builtin::ghz());
        assert!(plan_cost(&g, 1.0, CostMode::Nonsmooth).is_err());
        let p = plan_cost(&g, 0.5, CostMode::Nonsmooth).unwrap();
        assert!((p.target - 2.0).abs() < 1e-7);
        assert_eq!(p.cost_bits, 2);
        let p = plan_cost(&rho_ar(&builtin::bell()), 0.1, CostMode::Nonsmooth).unwrap();
        assert_eq!(p.cost_bits, 8);
        assert!((p.guarantee - 0.2f64.sqrt() * 2.0).abs() < 1e-12);
    }

    #[test]
    fn corollary_plan_uses_small_radius() {
        let p = plan_cost(&rho_ar(&builtin::bell()), 0.5, CostMode::Corollary).unwrap();
        assert!((p.eps_prime - 0.25 / 64.0).abs() < 1e-15);
        assert!((p.guarantee - 0.5).abs() < 1e-15);
        // -H = 1 + log(1 - eps') for Bell; plus 4 + 12
        assert!((p.target - (1.0 + (1.0 - p.eps_prime).log2() + 16.0)).abs() < 1e-6);
    }

    #[test]
    fn uhlmann_identity() {
        let mut rng = rng_from_seed(3);
        let psi = random_pure_state(SystemLayout::new(&[("A", 2), ("B", 3)]).unwrap(), &mut rng);
        let u = uhlmann_isometry(&psi, &psi, &["A"]).unwrap();
        assert!((u.fidelity - 1.0).abs() < 1e-10);
        let g = (u.isometry.adjoint() * &u.isometry - linalg::identity(3)).norm();
        assert!(g < 1e-10);
        // identity up to a phase
        let z = u.isometry[(0, 0)];
        assert!(linalg::max_abs(&(&u.isometry - linalg::identity(3) * z)) < 1e-8);
    }

    #[test]
    fn uhlmann_bit_flip() {
        let phi = max_entangled(2, "A", "B").unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = PureState::new(
            phi.layout().clone(),
            CVec::from_vec(vec![cr(0.0), cr(s), cr(s), cr(0.0)]),
        )
        .unwrap();
        let u = uhlmann_isometry(&phi, &psi, &["A"]).unwrap();
        assert!((u.fidelity - 1.0).abs() < 1e-10);
        let z = u.isometry[(0, 1)];
        let x = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        assert!(linalg::max_abs(&(&u.isometry - x * z)) < 1e-10);
    }

    #[test]
    fn uhlmann_mixed_fidelity() {
        let mk = |p: f64| {
            PureState::new(
                SystemLayout::new(&[("S", 2), ("E", 2)]).unwrap(),
                CVec::from_vec(vec![cr(p.sqrt()), cr(0.0), cr(0.0), cr((1.0 - p).sqrt())]),
            )
            .unwrap()
        };
        let u = uhlmann_isometry(&mk(0.9), &mk(0.8), &["S"]).unwrap();
        let expect = ((0.9f64 * 0.8).sqrt() + (0.1f64 * 0.2).sqrt()).powi(2);
        assert!((u.fidelity - expect).abs() < 1e-8);
        let mapped = apply_on_complement(&mk(0.9), &u.isometry, &["S"], &u.target_complement).unwrap();
        let ov = (mk(0.8).vector().adjoint() * mapped.vector())[(0, 0)].norm_sqr();
        assert!((ov - expect).abs() < 1e-8);
    }

    #[test]
    fn uhlmann_rejects_small_target() {
        let mut rng = rng_from_seed(8);
        let src = random_pure_state(SystemLayout::new(&[("A", 3), ("B", 3)]).unwrap(), &mut rng);
        let tgt = random_pure_state(SystemLayout::new(&[("A", 3), ("C", 2)]).unwrap(), &mut rng);
        assert!(matches!(uhlmann_isometry(&src, &tgt, &["A"]), Err(Error::Dimension(_))));
    }

    #[test]
    fn decoupled_a_merges_exactly() {
        let task = MergeTask::new(builtin::product(), 1, 1, 0.1, 5).unwrap();
        let out = run_protocol(&task).unwrap();
        assert!(out.error <= 1e-6, "{}", out.error);
        assert!(out.condition_value <= 1e-6);
        assert!((out.total_probability() - 1.0).abs() < 1e-9);
        assert!(out.max_isometry_defect() < 1e-9);
    }

    #[test]
    fn final_state_matches_error() {
        let task = MergeTask::new(builtin::bell(), 4, 1, 0.1, 2).unwrap();
        let out = run_protocol(&task).unwrap();
        let t = target_state(&builtin::bell(), 1).unwrap().density();
        let direct = metrics::trace_norm(&(out.final_state.matrix() - t.matrix()));
        assert!((direct - out.error).abs() < 1e-9);
        assert!(out.chain_holds(1e-6));
        assert!((out.final_state.trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bell_at_planned_cost() {
        let plan = plan_cost(&rho_ar(&builtin::bell()), 0.1, CostMode::Nonsmooth).unwrap();
        let mut ok = 0;
        for seed in 0..20 {
            let out = run_protocol(&MergeTask::from_plan(builtin::bell(), &plan, seed).unwrap()).unwrap();
            assert!(out.chain_holds(1e-6));
            assert!((out.total_probability() - 1.0).abs() < 1e-9);
            if out.error <= plan.guarantee {
                ok += 1;
            }
        }
        assert!(ok >= 19);
    }

    #[test]
    fn zero_error_examples() {
        let b = zero_error_bound(&builtin::bell()).unwrap();
        assert!((b.value - 1.0).abs() < 1e-9 && b.discrepancy < 1e-6);
        let p = zero_error_bound(&builtin::product()).unwrap();
        assert!(p.value.abs() < 1e-9 && p.discrepancy < 1e-6);
        let g = zero_error_bound(&builtin::ghz()).unwrap();
        assert!(g.value.abs() < 1e-9 && g.discrepancy < 1e-6);
    }

    #[test]
    fn eps_bound_examples() {
        let bell = builtin::bell();
        let e0 = eps_error_bound(&bell, 0.0).unwrap();
        let direct = -entropy::h_min_cond(&rho_ar(&bell), &["R"]).unwrap().bits;
        assert!((e0 - direct).abs() < 1e-7);
        let e = eps_error_bound(&bell, 0.01).unwrap();
        // closed form for Bell: 1 + log(1 - sqrt eps)
        assert!((e - (1.0 + 0.9f64.log2())).abs() < 1e-6);
        assert!(eps_error_bound(&builtin::product(), 0.01).unwrap() <= 1e-7);
    }

    #[test]
    fn monotonicity_examples() {
        let mut rng = rng_from_seed(21);
        let psi = random_pure_state(SystemLayout::new(&[("A", 2), ("R", 2), ("E", 2)]).unwrap(), &mut rng);
        let rho = psi.density().partial_trace(&["A", "R"]).unwrap();
        let sigma = rho.partial_trace(&["R"]).unwrap();
        let u = random::haar_unitary(2, &mut rng);
        let (b, a) = monotonicity_witness(&rho, &sigma, &[u], "A").unwrap();
        assert!((b - a).abs() < 1e-9);
        let (b, a) = monotonicity_witness(&rho, &sigma, &[linalg::identity(2)], "A").unwrap();
        assert!((b - a).abs() < 1e-9);
        let p0 = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(0.0)]);
        let p1 = linalg::identity(2) - &p0;
        let (b, a) = monotonicity_witness(&rho, &sigma, &[p0, p1], "A").unwrap();
        assert!(b >= a - 1e-7);
    }
}
