//! Random block measurements on Alice's system and a Monte Carlo check of
//! the decoupling bound.
//!
//! A measurement splits C^{d_A} into N = ceil(d_A / L) orthogonal blocks of
//! dimension L (the last one has dimension L' = d_A - (N-1) L when L does
//! not divide d_A). Outcome j is P_j = Q_j U with U Haar random and Q_j the
//! isometric map of block j onto a fresh L-dimensional register A1.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{self, align_with_sigma, outside_weight, SUPPORT_TOL};
use crate::error::{Error, Result};
use crate::layout::{Factor, SystemLayout};
use crate::linalg::{self, cr, CMat};
use crate::random::{self, QRng};
use crate::state::DensityOperator;
use crate::tolerances::{COMPLETENESS_TOL, OUTCOME_PROB_FLOOR};

/// Label given to the post-measurement register.
pub const A1: &str = "A1";

#[derive(Clone, Debug)]
pub struct BlockMeasurement {
    pub d_a: usize,
    pub l: usize,
    pub n_blocks: usize,
    /// Dimension of the last block when it is smaller than `l`.
    pub residual: Option<usize>,
    pub unitary: CMat,
    pub seed: Option<u64>,
}

impl BlockMeasurement {
    /// Measurement with a given unitary.
    pub fn with_unitary(d_a: usize, l: usize, unitary: CMat) -> Result<Self> {
        if l == 0 || l > d_a {
            return Err(Error::Argument(format!("block size {l} not in [1, {d_a}]")));
        }
        if unitary.nrows() != d_a || unitary.ncols() != d_a {
            return Err(Error::Dimension(format!(
                "unitary is {}x{}, expected {d_a}x{d_a}",
                unitary.nrows(),
                unitary.ncols()
            )));
        }
        let n_blocks = d_a.div_ceil(l);
        let last = d_a - (n_blocks - 1) * l;
        Ok(BlockMeasurement {
            d_a,
            l,
            n_blocks,
            residual: (last < l).then_some(last),
            unitary,
            seed: None,
        })
    }

    /// First row of block j and its dimension.
    pub fn block(&self, j: usize) -> (usize, usize) {
        let start = j * self.l;
        (start, self.l.min(self.d_a - start))
    }

    pub fn exact_division(&self) -> bool {
        self.residual.is_none()
    }

    /// P_j as an L x d_A matrix. Rows past a short block's dimension are zero.
    pub fn operator(&self, j: usize) -> CMat {
        let (start, len) = self.block(j);
        let mut p = CMat::zeros(self.l, self.d_a);
        p.view_mut((0, 0), (len, self.d_a))
            .copy_from(&self.unitary.view((start, 0), (len, self.d_a)));
        p
    }

    /// max |sum_j P_j^dag P_j - id|. The blocks partition the rows of the
    /// unitary, so the sum is U^dag U.
    pub fn completeness_defect(&self) -> f64 {
        let acc = linalg::matmul(&self.unitary.adjoint(), &self.unitary);
        linalg::max_abs(&(acc - linalg::identity(self.d_a)))
    }
}

/// Haar-random block measurement on a d_A-dimensional system.
pub fn build_measurement(d_a: usize, l: usize, rng: &mut QRng) -> Result<BlockMeasurement> {
    if l == 0 || l > d_a {
        return Err(Error::Argument(format!("block size {l} not in [1, {d_a}]")));
    }
    let u = random::haar_unitary(d_a, rng);
    let m = BlockMeasurement::with_unitary(d_a, l, u)?;
    let defect = m.completeness_defect();
    if defect > COMPLETENESS_TOL {
        return Err(Error::invariant("completeness", format!("defect {defect:.3e}")));
    }
    Ok(m)
}

pub fn build_measurement_seeded(d_a: usize, l: usize, seed: u64) -> Result<BlockMeasurement> {
    let mut m = build_measurement(d_a, l, &mut random::rng_from_seed(seed))?;
    m.seed = Some(seed);
    Ok(m)
}

/// One measurement outcome. `state` is the normalized post-measurement
/// state on A1 and the remaining factors, absent for negligible outcomes.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub probability: f64,
    pub state: Option<DensityOperator>,
}

/// Unnormalized blocks (P_j (x) id) rho (P_j (x) id)^dag for rho ordered as
/// (A, rest) with dim A = m.d_a.
pub(crate) fn measured_blocks(rho: &CMat, m: &BlockMeasurement) -> Vec<CMat> {
    let dr = rho.nrows() / m.d_a;
    let big = linalg::kron(&m.unitary, &linalg::identity(dr));
    let rot = linalg::matmul(&linalg::matmul(&big, rho), &big.adjoint());
    (0..m.n_blocks)
        .map(|j| {
            let (start, len) = m.block(j);
            let mut w = CMat::zeros(m.l * dr, m.l * dr);
            let s = start * dr;
            let n = len * dr;
            w.view_mut((0, 0), (n, n)).copy_from(&rot.view((s, s), (n, n)));
            linalg::hermitize_in_place(&mut w);
            w
        })
        .collect()
}

/// Apply the measurement to factor `a` of rho. Outcome states carry the
/// layout (A1, rest) with the remaining factors in their original order.
pub fn decoupling_trial_on(rho: &DensityOperator, m: &BlockMeasurement, a: &str) -> Result<Vec<Outcome>> {
    let da = rho.layout().dim_of(a)?;
    if da != m.d_a {
        return Err(Error::Dimension(format!("factor `{a}` has dim {da}, measurement expects {}", m.d_a)));
    }
    let rest = rho.layout().complement(&[a])?;
    let mut order = vec![a.to_string()];
    order.extend(rest.iter().cloned());
    let r = rho.reorder(&order)?;
    let mut factors = vec![Factor {
        label: A1.to_string(),
        dim: m.l,
    }];
    factors.extend(rho.layout().keep(&rest)?.factors().iter().cloned());
    let out_layout = SystemLayout::from_factors(factors)?;
    Ok(measured_blocks(r.matrix(), m)
        .into_iter()
        .map(|w| {
            let p = linalg::trace(&w).re.max(0.0);
            let state = (p > OUTCOME_PROB_FLOOR)
                .then(|| DensityOperator::new_unchecked(out_layout.clone(), w * cr(1.0 / p)));
            Outcome { probability: p, state }
        })
        .collect())
}

/// Measurement on the factor labelled `A`.
pub fn decoupling_trial(rho: &DensityOperator, m: &BlockMeasurement) -> Result<Vec<Outcome>> {
    decoupling_trial_on(rho, m, "A")
}

#[derive(Clone, Debug, Serialize)]
pub struct DecouplingReport {
    pub d_a: usize,
    pub l: usize,
    pub n_blocks: usize,
    pub residual: Option<usize>,
    pub samples: usize,
    /// Sample mean of (1/N) sum_j ||(d_A/L) w_j - tau (x) rho_R||_1.
    pub mean: f64,
    pub stderr: f64,
    /// 2^{-(H_2(rho_AR|sigma_R) - log L)/2}
    pub bound_h2: f64,
    /// Same with H_min in place of H_2 (a weaker bound).
    pub bound_hmin: f64,
    pub margin: f64,
    /// Whether the bound applies as stated (L divides d_A).
    pub gated: bool,
}

impl DecouplingReport {
    /// mean <= bound_h2 + k * stderr
    pub fn within(&self, k: f64) -> bool {
        self.mean <= self.bound_h2 + k * self.stderr
    }
}

/// Per-block deviation averaged over blocks, for one measurement.
pub(crate) fn block_deviation(rho: &CMat, rho_r: &CMat, m: &BlockMeasurement) -> f64 {
    let tau_r = linalg::kron(&(linalg::identity(m.l) * cr(1.0 / m.l as f64)), rho_r);
    let scale = cr(m.d_a as f64 / m.l as f64);
    let total: f64 = measured_blocks(rho, m)
        .iter()
        .map(|w| linalg::trace_norm(&(w * scale - &tau_r)))
        .sum();
    total / m.n_blocks as f64
}

/// Monte Carlo estimate of the Haar average of the per-block deviation,
/// compared with the collision-entropy bound. The blocks of one measurement
/// are identically distributed, so averaging over them gives an unbiased
/// estimate of the single-projector average that the bound controls.
///
/// Sample k uses the RNG stream `substream(seed, k)`.
pub fn estimate_decoupling(
    rho_ar: &DensityOperator,
    sigma_r: &DensityOperator,
    l: usize,
    samples: usize,
    seed: u64,
) -> Result<DecouplingReport> {
    if samples < 2 {
        return Err(Error::Argument("need at least two samples".into()));
    }
    let (r, gamma, da) = align_with_sigma(rho_ar, sigma_r)?;
    let w = outside_weight(r.matrix(), &gamma);
    if w > SUPPORT_TOL {
        return Err(Error::invariant(
            "support",
            format!("weight {w:.3e} of rho_AR lies outside supp(id (x) sigma_R)"),
        ));
    }
    if l == 0 || l > da {
        return Err(Error::Argument(format!("block size {l} not in [1, {da}]")));
    }
    let dr = r.dim() / da;
    let rho_r = linalg::partial_trace_positions(r.matrix(), &[da, dr], &[1]);
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = random::substream(seed, k as u64);
            let m = build_measurement(da, l, &mut rng)?;
            Ok(block_deviation(r.matrix(), &rho_r, &m))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let stderr = (var / n).sqrt();
    let log_l = (l as f64).log2();
    let h2 = entropy::h2_rel(rho_ar, sigma_r)?.bits;
    let hmin = entropy::h_min_rel(rho_ar, sigma_r)?.bits;
    let bound_h2 = (-0.5 * (h2 - log_l)).exp2();
    let bound_hmin = (-0.5 * (hmin - log_l)).exp2();
    let n_blocks = da.div_ceil(l);
    let last = da - (n_blocks - 1) * l;
    Ok(DecouplingReport {
        d_a: da,
        l,
        n_blocks,
        residual: (last < l).then_some(last),
        samples,
        mean,
        stderr,
        bound_h2,
        bound_hmin,
        margin: bound_h2 - mean,
        gated: last == l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{max_entangled, PureState};

    fn bell() -> DensityOperator {
        max_entangled(2, "A", "R").unwrap().density()
    }

    #[test]
    fn block_shapes() {
        let m = build_measurement_seeded(4, 2, 1).unwrap();
        assert_eq!((m.n_blocks, m.residual), (2, None));
        assert!(m.completeness_defect() < 1e-12);
        let m = build_measurement_seeded(4, 4, 1).unwrap();
        assert_eq!(m.n_blocks, 1);
        assert!(linalg::max_abs(&(m.operator(0) - &m.unitary)) == 0.0);
        let m = build_measurement_seeded(6, 4, 1).unwrap();
        assert_eq!((m.n_blocks, m.residual), (2, Some(2)));
        assert!(m.completeness_defect() < 1e-12);
        assert!(build_measurement_seeded(3, 4, 1).is_err());
        assert!(build_measurement_seeded(3, 0, 1).is_err());
    }

    #[test]
    fn single_block_rotates_input() {
        let rho_r = DensityOperator::diagonal(SystemLayout::single("R", 2).unwrap(), &[0.7, 0.3]).unwrap();
        let zero = PureState::basis(SystemLayout::single("A", 3).unwrap(), 0).unwrap().density();
        let rho = zero.tensor(&rho_r).unwrap();
        let m = build_measurement_seeded(3, 3, 5).unwrap();
        let out = decoupling_trial(&rho, &m).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 1.0).abs() < 1e-12);
        let expect = rho.conjugate(&linalg::kron(&m.unitary, &linalg::identity(2))).unwrap();
        let got = out[0].state.as_ref().unwrap();
        assert!(linalg::max_abs(&(got.matrix() - expect.matrix())) < 1e-12);
        assert_eq!(got.layout().labels(), vec!["A1", "R"]);
    }

    #[test]
    fn maximally_mixed_gives_tau() {
        let rho = DensityOperator::maximally_mixed(SystemLayout::single("A", 6).unwrap());
        let m = build_measurement_seeded(6, 2, 9).unwrap();
        let out = decoupling_trial(&rho, &m).unwrap();
        let total: f64 = out.iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for o in &out {
            let s = o.state.as_ref().unwrap();
            assert!(linalg::max_abs(&(s.matrix() - linalg::identity(2) * cr(0.5))) < 1e-12);
        }
    }

    #[test]
    fn bell_rank_one_outcomes() {
        let m = build_measurement_seeded(2, 1, 3).unwrap();
        let out = decoupling_trial(&bell(), &m).unwrap();
        assert_eq!(out.len(), 2);
        for (j, o) in out.iter().enumerate() {
            // p_j = ||u_j||^2 / 2 = 1/2 for any unit row u_j
            assert!((o.probability - 0.5).abs() < 1e-12);
            let s = o.state.as_ref().unwrap();
            assert_eq!(s.rank(), 1);
            // (<row_j| (x) id) sum_i |ii> leaves R in sum_i U_ji |i>
            let v = m.unitary.row(j).transpose();
            let expect = &v * v.adjoint();
            assert!(linalg::max_abs(&(s.matrix() - expect)) < 1e-12);
        }
    }

    #[test]
    fn product_state_is_already_decoupled() {
        let a = PureState::basis(SystemLayout::single("A", 2).unwrap(), 1).unwrap().density();
        let r = PureState::basis(SystemLayout::single("R", 2).unwrap(), 0).unwrap().density();
        let rho = a.tensor(&r).unwrap();
        let rep = estimate_decoupling(&rho, &r, 1, 200, 4).unwrap();
        assert!((rep.bound_h2 - 1.0).abs() < 1e-9);
        assert!(rep.within(3.0));
    }

    #[test]
    fn bell_bound_is_sqrt_two() {
        let sigma = DensityOperator::maximally_mixed(SystemLayout::single("R", 2).unwrap());
        let rep = estimate_decoupling(&bell(), &sigma, 1, 2000, 11).unwrap();
        assert!((rep.bound_h2 - 2f64.sqrt()).abs() < 1e-9);
        assert!(rep.within(3.0), "{rep:?}");
    }

    #[test]
    fn mixed_a_bound() {
        let rho_r = DensityOperator::diagonal(SystemLayout::single("R", 2).unwrap(), &[0.6, 0.4]).unwrap();
        let rho = DensityOperator::maximally_mixed(SystemLayout::single("A", 4).unwrap())
            .tensor(&rho_r)
            .unwrap();
        let rep = estimate_decoupling(&rho, &rho_r, 2, 2000, 12).unwrap();
        assert!((rep.bound_h2 - 0.5f64.sqrt()).abs() < 1e-9);
        assert!(rep.within(3.0));
        // every block is exactly tau (x) rho_R here
        assert!(rep.mean < 1e-10);
    }

    #[test]
    fn support_violation_is_an_error() {
        let r0 = PureState::basis(SystemLayout::single("R", 2).unwrap(), 0).unwrap().density();
        let err = estimate_decoupling(&bell(), &r0, 1, 10, 1).unwrap_err();
        assert!(matches!(err, Error::Invariant { ref invariant, .. } if invariant == "support"));
    }

    #[test]
    fn reports_are_deterministic() {
        let sigma = DensityOperator::maximally_mixed(SystemLayout::single("R", 2).unwrap());
        let a = estimate_decoupling(&bell(), &sigma, 1, 64, 77).unwrap();
        let b = estimate_decoupling(&bell(), &sigma, 1, 64, 77).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
