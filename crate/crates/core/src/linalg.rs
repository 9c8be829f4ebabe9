//! Dense complex linear algebra helpers on top of nalgebra, with faer used
//! for the two kernels where it is much faster (QR and large Cholesky).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::tolerances::RANK_CUTOFF;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// (M + M^dagger) / 2
pub fn hermitize(m: &CMat) -> CMat {
    let mut h = m.adjoint();
    h += m;
    h *= cr(0.5);
    h
}

pub fn hermitize_in_place(m: &mut CMat) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().sum()
}

/// tr(A^dagger B)
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Re tr(A B) for Hermitian A, B.
pub fn re_trace_prod(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a[(i, j)];
            let y = b[(j, i)];
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Threshold below which eigenvalues are treated as zero.
    pub fn cutoff(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        RANK_CUTOFF * scale
    }

    /// Rebuild V f(D) V^dagger.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        let mut out = &scaled * self.vectors.adjoint();
        hermitize_in_place(&mut out);
        out
    }

    /// Columns spanning the eigenspaces with eigenvalue above the cutoff.
    pub fn support_basis(&self) -> CMat {
        let cut = self.cutoff();
        let idx: Vec<usize> = (0..self.values.len())
            .filter(|&i| self.values[i] > cut)
            .collect();
        self.vectors.select_columns(&idx)
    }

    pub fn rank(&self) -> usize {
        let cut = self.cutoff();
        self.values.iter().filter(|&&v| v > cut).count()
    }
}

pub fn eigh(m: &CMat) -> Eigh {
    let n = m.nrows();
    if n == 0 {
        return Eigh {
            values: vec![],
            vectors: CMat::zeros(0, 0),
        };
    }
    let h = hermitize(m);
    let se = h
        .clone()
        .try_symmetric_eigen(1e-15, 10_000)
        .unwrap_or_else(|| h.symmetric_eigen());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = se.eigenvectors.select_columns(&order);
    Eigh { values, vectors }
}

pub fn eigvals(m: &CMat) -> Vec<f64> {
    eigh(m).values
}

pub fn lambda_max(m: &CMat) -> f64 {
    eigh(m).max()
}

pub fn lambda_min(m: &CMat) -> f64 {
    eigh(m).min()
}

/// M^p for PSD M. Eigenvalues at or below the rank cutoff map to zero, so
/// negative powers give the generalized inverse on the support.
pub fn psd_power(m: &CMat, p: f64) -> CMat {
    let e = eigh(m);
    let cut = e.cutoff();
    e.map(|v| if v > cut { v.powf(p) } else { 0.0 })
}

pub fn psd_sqrt(m: &CMat) -> CMat {
    psd_power(m, 0.5)
}

pub fn support_projector(m: &CMat) -> CMat {
    let e = eigh(m);
    let cut = e.cutoff();
    e.map(|v| if v > cut { 1.0 } else { 0.0 })
}

pub fn rank(m: &CMat) -> usize {
    eigh(m).rank()
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    if m.nrows() == m.ncols() && hermiticity_defect(m) <= 1e-12 * (1.0 + max_abs(m)) {
        eigh(m).values.iter().map(|v| v.abs()).sum()
    } else {
        singular_values(m).iter().sum()
    }
}

/// Reorder the tensor factors of an operator: factor `order[k]` of the
/// input becomes factor `k` of the output.
pub fn permute_operator(m: &CMat, dims: &[usize], order: &[usize]) -> CMat {
    let map = permutation_map(dims, order);
    let d = map.len();
    CMat::from_fn(d, d, |i, j| m[(map[i], map[j])])
}

pub fn permute_vector(v: &CVec, dims: &[usize], order: &[usize]) -> CVec {
    let map = permutation_map(dims, order);
    CVec::from_fn(map.len(), |i, _| v[map[i]])
}

pub fn permutation_map(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let factors: Vec<crate::layout::Factor> = dims
        .iter()
        .enumerate()
        .map(|(i, &d)| crate::layout::Factor {
            label: format!("f{i}"),
            dim: d,
        })
        .collect();
    crate::layout::SystemLayout::from_factors(factors)
        .expect("generated labels are distinct")
        .permutation_map(order)
}

/// Trace out every factor not listed in `keep` (positions, ascending).
pub fn partial_trace_positions(m: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let n = dims.len();
    let traced: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let mut order: Vec<usize> = keep.to_vec();
    order.extend(&traced);
    let dk: usize = keep.iter().map(|&p| dims[p]).product();
    let dt: usize = traced.iter().map(|&p| dims[p]).product();
    let is_identity_order = order.iter().enumerate().all(|(i, &p)| i == p);
    let src = if is_identity_order {
        None
    } else {
        Some(permute_operator(m, dims, &order))
    };
    let src = src.as_ref().unwrap_or(m);
    let mut out = CMat::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..dt {
                s += src[(i * dt + k, j * dt + k)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

pub fn to_faer(m: &CMat) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn from_faer(m: faer::MatRef<'_, faer::c64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Q and the diagonal of R from a Householder QR of a square matrix.
pub fn qr_q_and_rdiag(m: &CMat) -> (CMat, Vec<Complex64>) {
    let fm = to_faer(m);
    let qr = fm.qr();
    let q = from_faer(qr.compute_Q().as_ref());
    let r = qr.R();
    let n = m.ncols().min(m.nrows());
    let diag = (0..n).map(|i| r[(i, i)]).collect();
    (q, diag)
}

/// Product of two complex matrices, routed through faer for large sizes.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    if a.nrows() * a.ncols() * b.ncols() < 64 * 64 * 64 {
        return a * b;
    }
    let p = &to_faer(a) * &to_faer(b);
    from_faer(p.as_ref())
}

/// Solve M x = rhs for symmetric positive definite real M. Returns `None`
/// when the factorization breaks down.
pub fn spd_solve(m: &RMat, rhs: &[DVector<f64>]) -> Option<Vec<DVector<f64>>> {
    use faer::linalg::solvers::Solve;
    let n = m.nrows();
    if n == 0 {
        return Some(rhs.iter().map(|_| DVector::zeros(0)).collect());
    }
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let llt = fm.llt(faer::Side::Lower).ok()?;
    let mut b = faer::Mat::<f64>::from_fn(n, rhs.len(), |i, k| rhs[k][i]);
    llt.solve_in_place(b.as_mut());
    let out: Vec<DVector<f64>> = (0..rhs.len())
        .map(|k| DVector::from_fn(n, |i, _| b[(i, k)]))
        .collect();
    if out.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
        return None;
    }
    Some(out)
}
