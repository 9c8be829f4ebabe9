//! Density operators and pure states over labelled tensor-product layouts.

use crate::error::{Error, Result};
use crate::layout::SystemLayout;
use crate::linalg::{self, c, cr, CMat, CVec, Eigh};
use crate::tolerances::{HERMITIAN_TOL, NORM_TOL, PSD_TOL, RANK_CUTOFF, TRACE_TOL};

/// Positive semidefinite, unit-trace operator on a labelled space.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    layout: SystemLayout,
    matrix: CMat,
}

impl DensityOperator {
    /// Validates hermiticity, trace and positivity before hermitizing.
    pub fn new(layout: SystemLayout, matrix: CMat) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension(format!(
                "layout {layout} has dimension {d}, matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invariant("finite", "matrix has non-finite entries"));
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::invariant(
                "hermitian",
                format!("max |M - M^dagger| entry is {defect:.3e}"),
            ));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::invariant(
                "trace",
                format!("trace is {:.12} (expected 1)", tr.re),
            ));
        }
        let matrix = linalg::hermitize(&matrix);
        let lmin = linalg::lambda_min(&matrix);
        if lmin < -PSD_TOL {
            return Err(Error::invariant(
                "psd",
                format!("smallest eigenvalue is {lmin:.3e}"),
            ));
        }
        Ok(DensityOperator { layout, matrix })
    }

    /// Skips validation. Callers are responsible for the invariants.
    pub fn new_unchecked(layout: SystemLayout, matrix: CMat) -> Self {
        debug_assert_eq!(layout.total_dim(), matrix.nrows());
        DensityOperator { layout, matrix }
    }

    /// Normalizes a nonzero PSD operator to unit trace, clipping tiny
    /// negative eigenvalues.
    pub fn from_psd(layout: SystemLayout, matrix: &CMat) -> Result<Self> {
        let e = linalg::eigh(matrix);
        let clipped = e.map(|v| v.max(0.0));
        let tr = linalg::trace(&clipped).re;
        if tr <= 0.0 {
            return Err(Error::invariant("trace", "operator has zero trace"));
        }
        Self::new(layout, clipped / cr(tr))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = &psi.vector;
        let mut m = v * v.adjoint();
        linalg::hermitize_in_place(&mut m);
        DensityOperator {
            layout: psi.layout.clone(),
            matrix: m,
        }
    }

    pub fn maximally_mixed(layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        DensityOperator {
            layout,
            matrix: linalg::identity(d) / cr(d as f64),
        }
    }

    /// Diagonal state in the computational basis.
    pub fn diagonal(layout: SystemLayout, probs: &[f64]) -> Result<Self> {
        let d = layout.total_dim();
        if probs.len() != d {
            return Err(Error::Dimension(format!("{} probabilities for dimension {d}", probs.len())));
        }
        let m = CMat::from_diagonal(&CVec::from_iterator(d, probs.iter().map(|&p| cr(p))));
        Self::new(layout, m)
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn eigh(&self) -> Eigh {
        linalg::eigh(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().values
    }

    pub fn rank(&self) -> usize {
        self.eigh().rank()
    }

    pub fn support_projector(&self) -> CMat {
        linalg::support_projector(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        linalg::re_trace_prod(&self.matrix, &self.matrix)
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(DensityOperator {
            layout,
            matrix: linalg::kron(&self.matrix, &other.matrix),
        })
    }

    /// n-fold tensor power with labels suffixed `.1`, `.2`, ...
    pub fn tensor_power(&self, n: usize) -> Result<DensityOperator> {
        if n == 0 {
            return Err(Error::Argument("tensor power needs n >= 1".into()));
        }
        let mut out = self.relabeled_all(".1");
        for k in 2..=n {
            out = out.tensor(&self.relabeled_all(&format!(".{k}")))?;
        }
        Ok(out)
    }

    fn relabeled_all(&self, suffix: &str) -> DensityOperator {
        DensityOperator {
            layout: self.layout.suffixed(suffix),
            matrix: self.matrix.clone(),
        }
    }

    /// Reduced state on `keep`; remaining factors keep their layout order.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityOperator> {
        let mut pos = self.layout.positions(keep)?;
        pos.sort_unstable();
        let m = linalg::partial_trace_positions(&self.matrix, &self.layout.dims(), &pos);
        Ok(DensityOperator {
            layout: self.layout.select(&pos),
            matrix: m,
        })
    }

    /// Trace out the named factors.
    pub fn trace_out<S: AsRef<str>>(&self, labels: &[S]) -> Result<DensityOperator> {
        let keep = self.layout.complement(labels)?;
        self.partial_trace(&keep)
    }

    /// Same state with factors listed in the given order.
    pub fn reorder<S: AsRef<str>>(&self, order: &[S]) -> Result<DensityOperator> {
        let pos = self.layout.positions(order)?;
        if pos.len() != self.layout.len() {
            return Err(Error::Layout(format!(
                "reorder needs all {} labels, got {}",
                self.layout.len(),
                pos.len()
            )));
        }
        Ok(DensityOperator {
            layout: self.layout.select(&pos),
            matrix: linalg::permute_operator(&self.matrix, &self.layout.dims(), &pos),
        })
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<DensityOperator> {
        Ok(DensityOperator {
            layout: self.layout.relabel(from, to)?,
            matrix: self.matrix.clone(),
        })
    }

    /// U rho U^dagger on the full space.
    pub fn conjugate(&self, u: &CMat) -> Result<DensityOperator> {
        if u.ncols() != self.dim() || u.nrows() != self.dim() {
            return Err(Error::Dimension("unitary size differs from state dimension".into()));
        }
        let mut m = u * &self.matrix * u.adjoint();
        linalg::hermitize_in_place(&mut m);
        Ok(DensityOperator {
            layout: self.layout.clone(),
            matrix: m,
        })
    }

    /// 1/2 ||rho - sigma||_1
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        self.check_same_layout(other)?;
        Ok(0.5 * linalg::trace_norm(&(&self.matrix - &other.matrix)))
    }

    pub fn check_same_layout(&self, other: &DensityOperator) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Layout(format!(
                "layouts differ: {} vs {}",
                self.layout, other.layout
            )));
        }
        Ok(())
    }

    /// Purification on `self.layout` followed by an ancilla of the full
    /// dimension: sum_k sqrt(lambda_k) |e_k> |k>.
    pub fn purify(&self, ancilla: &str) -> Result<PureState> {
        let anc = SystemLayout::single(ancilla, self.dim())?;
        let layout = self.layout.concat(&anc)?;
        let e = self.eigh();
        let d = self.dim();
        let mut v = CVec::zeros(d * d);
        for k in 0..d {
            let s = e.values[k].max(0.0).sqrt();
            if s == 0.0 {
                continue;
            }
            for i in 0..d {
                v[i * d + k] += e.vectors[(i, k)] * s;
            }
        }
        PureState::normalized(layout, v)
    }
}

/// Unit vector on a labelled space.
#[derive(Clone, Debug)]
pub struct PureState {
    layout: SystemLayout,
    vector: CVec,
}

impl PureState {
    pub fn new(layout: SystemLayout, vector: CVec) -> Result<Self> {
        let d = layout.total_dim();
        if vector.len() != d {
            return Err(Error::Dimension(format!(
                "layout {layout} has dimension {d}, vector has {} entries",
                vector.len()
            )));
        }
        let n = vector.norm();
        if !n.is_finite() || (n - 1.0).abs() > NORM_TOL {
            return Err(Error::invariant("norm", format!("vector norm is {n:.12}")));
        }
        Ok(PureState { layout, vector })
    }

    pub fn normalized(layout: SystemLayout, vector: CVec) -> Result<Self> {
        let n = vector.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::invariant("norm", "zero or non-finite vector"));
        }
        Self::new(layout, vector / cr(n))
    }

    /// Computational basis state |index>.
    pub fn basis(layout: SystemLayout, index: usize) -> Result<Self> {
        let d = layout.total_dim();
        if index >= d {
            return Err(Error::Argument(format!("basis index {index} out of range {d}")));
        }
        let mut v = CVec::zeros(d);
        v[index] = cr(1.0);
        Self::new(layout, v)
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn vector(&self) -> &CVec {
        &self.vector
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        Ok(PureState {
            layout: self.layout.concat(&other.layout)?,
            vector: linalg::kron_vec(&self.vector, &other.vector),
        })
    }

    pub fn reorder<S: AsRef<str>>(&self, order: &[S]) -> Result<PureState> {
        let pos = self.layout.positions(order)?;
        if pos.len() != self.layout.len() {
            return Err(Error::Layout("reorder needs every label".into()));
        }
        Ok(PureState {
            layout: self.layout.select(&pos),
            vector: linalg::permute_vector(&self.vector, &self.layout.dims(), &pos),
        })
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<PureState> {
        Ok(PureState {
            layout: self.layout.relabel(from, to)?,
            vector: self.vector.clone(),
        })
    }

    /// Amplitudes as a matrix with rows indexed by `rows` and columns by the
    /// remaining factors (both in layout order).
    pub fn as_matrix<S: AsRef<str>>(&self, rows: &[S]) -> Result<CMat> {
        let mut rpos = self.layout.positions(rows)?;
        rpos.sort_unstable();
        let cpos: Vec<usize> = (0..self.layout.len()).filter(|p| !rpos.contains(p)).collect();
        let dr: usize = rpos.iter().map(|&p| self.layout.factors()[p].dim).product();
        let dc: usize = cpos.iter().map(|&p| self.layout.factors()[p].dim).product();
        let mut order = rpos;
        order.extend(cpos);
        let v = linalg::permute_vector(&self.vector, &self.layout.dims(), &order);
        Ok(CMat::from_fn(dr, dc, |i, j| v[i * dc + j]))
    }

    /// Schmidt decomposition across `a_labels` | rest.
    pub fn schmidt<S: AsRef<str>>(&self, a_labels: &[S]) -> Result<SchmidtForm> {
        let layout_a = self.layout.keep(a_labels)?;
        let rest = self.layout.complement(a_labels)?;
        let layout_b = self.layout.keep(&rest)?;
        let m = self.as_matrix(a_labels)?;
        let svd = m.svd(true, true);
        let u = svd.u.expect("requested");
        let vt = svd.v_t.expect("requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let coefficients: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
        let left = u.select_columns(&order);
        // psi_ab = sum_k s_k u_ak (v_t)_kb, so the right vectors are rows of v_t.
        let right = vt.select_rows(&order).transpose();
        Ok(SchmidtForm {
            layout_a,
            layout_b,
            coefficients,
            left,
            right,
        })
    }
}

/// psi = sum_k s_k |a_k> |b_k>, coefficients descending.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    pub layout_a: SystemLayout,
    pub layout_b: SystemLayout,
    pub coefficients: Vec<f64>,
    pub left: CMat,
    pub right: CMat,
}

impl SchmidtForm {
    /// Number of coefficients whose square exceeds the rank cutoff.
    pub fn rank(&self) -> usize {
        let smax = self.coefficients.first().copied().unwrap_or(0.0);
        let cut = RANK_CUTOFF * smax * smax;
        self.coefficients.iter().filter(|&&s| s * s > cut).count()
    }

    pub fn reconstruct(&self) -> Result<PureState> {
        let da = self.layout_a.total_dim();
        let db = self.layout_b.total_dim();
        let mut v = CVec::zeros(da * db);
        for (k, &s) in self.coefficients.iter().enumerate() {
            for a in 0..da {
                let x = self.left[(a, k)] * s;
                for b in 0..db {
                    v[a * db + b] += x * self.right[(b, k)];
                }
            }
        }
        PureState::normalized(self.layout_a.concat(&self.layout_b)?, v)
    }
}

/// |Phi_d> = d^{-1/2} sum_i |i>|i>.
pub fn max_entangled(d: usize, label_a: &str, label_b: &str) -> Result<PureState> {
    let layout = SystemLayout::new(&[(label_a, d), (label_b, d)])?;
    let mut v = CVec::zeros(d * d);
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = cr(amp);
    }
    PureState::new(layout, v)
}

/// Builds a vector from (re, im) pairs.
pub fn cvec_from_pairs(pairs: &[(f64, f64)]) -> CVec {
    CVec::from_iterator(pairs.len(), pairs.iter().map(|&(r, i)| c(r, i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> PureState {
        max_entangled(2, "A", "B").unwrap()
    }

    #[test]
    fn validation_names_invariant() {
        let l = SystemLayout::single("A", 2).unwrap();
        let m = CMat::from_diagonal(&CVec::from_vec(vec![cr(0.7), cr(0.7)]));
        match DensityOperator::new(l.clone(), m) {
            Err(Error::Invariant { invariant, .. }) => assert_eq!(invariant, "trace"),
            other => panic!("unexpected {other:?}"),
        }
        let m = CMat::from_diagonal(&CVec::from_vec(vec![cr(1.5), cr(-0.5)]));
        match DensityOperator::new(l.clone(), m) {
            Err(Error::Invariant { invariant, .. }) => assert_eq!(invariant, "psd"),
            other => panic!("unexpected {other:?}"),
        }
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = cr(0.5);
        m[(1, 1)] = cr(0.5);
        m[(0, 1)] = cr(0.1);
        match DensityOperator::new(l, m) {
            Err(Error::Invariant { invariant, .. }) => assert_eq!(invariant, "hermitian"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bell_marginal_is_mixed() {
        let rho = bell().density();
        let ra = rho.partial_trace(&["A"]).unwrap();
        assert!(linalg::fro_norm(&(ra.matrix() - linalg::identity(2) * cr(0.5))) < 1e-14);
        assert_eq!(rho.rank(), 1);
    }

    #[test]
    fn tensor_label_collision() {
        let rho = bell().density();
        assert!(matches!(rho.tensor(&rho), Err(Error::Layout(_))));
        let sq = rho.tensor_power(2).unwrap();
        assert_eq!(sq.layout().labels(), vec!["A.1", "B.1", "A.2", "B.2"]);
    }

    #[test]
    fn reorder_round_trip() {
        let l = SystemLayout::new(&[("A", 2), ("B", 3)]).unwrap();
        let v = CVec::from_fn(6, |i, _| c(i as f64, 1.0 - i as f64));
        let psi = PureState::normalized(l, v).unwrap();
        let back = psi.reorder(&["B", "A"]).unwrap().reorder(&["A", "B"]).unwrap();
        assert!((back.vector() - psi.vector()).norm() < 1e-15);
        let rho = psi.density();
        let r2 = rho.reorder(&["B", "A"]).unwrap();
        let pb = r2.partial_trace(&["B"]).unwrap();
        let pb2 = rho.partial_trace(&["B"]).unwrap();
        assert!(linalg::fro_norm(&(pb.matrix() - pb2.matrix())) < 1e-14);
    }

    #[test]
    fn schmidt_of_bell() {
        let s = bell().schmidt(&["A"]).unwrap();
        assert_eq!(s.rank(), 2);
        for x in &s.coefficients {
            assert!((x - 0.5f64.sqrt()).abs() < 1e-14);
        }
        let back = s.reconstruct().unwrap();
        assert!((back.vector() - bell().vector()).norm() < 1e-14);
    }

    #[test]
    fn purify_bell_marginal() {
        let ra = bell().density().partial_trace(&["A"]).unwrap();
        let psi = ra.purify("P").unwrap();
        let back = psi.density().partial_trace(&["A"]).unwrap();
        assert!(linalg::fro_norm(&(back.matrix() - ra.matrix())) < 1e-14);
    }

    #[test]
    fn unnormalized_pure_rejected() {
        let l = SystemLayout::single("A", 2).unwrap();
        let r = PureState::new(l, CVec::from_vec(vec![cr(1.0), cr(1.0)]));
        assert!(matches!(r, Err(Error::Invariant { .. })));
    }
}
