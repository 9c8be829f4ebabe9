use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::MatrixDoc;
use crate::linalg::{self, c, cr, CMat};

/// Hermitian matrix stored as its nonzero entries (both triangles).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseHermitian {
    pub fn zero(dim: usize) -> Self {
        SparseHermitian {
            dim,
            entries: vec![],
        }
    }

    /// Entries are summed when repeated; the result must be Hermitian.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, col, v) in entries {
            if r >= dim || col >= dim {
                return Err(Error::Dimension(format!("entry ({r},{col}) outside {dim}x{dim}")));
            }
            *map.entry((r, col)).or_insert(cr(0.0)) += v;
        }
        for (&(r, col), v) in &map {
            let w = map.get(&(col, r)).copied().unwrap_or(cr(0.0));
            if (v - w.conj()).norm() > 1e-12 * (1.0 + v.norm()) {
                return Err(Error::invariant("hermitian", format!("entry ({r},{col}) has no conjugate partner")));
            }
        }
        Ok(SparseHermitian {
            dim,
            entries: map.into_iter().filter(|(_, v)| *v != cr(0.0)).map(|((r, col), v)| (r, col, v)).collect(),
        })
    }

    pub fn from_dense(m: &CMat) -> Self {
        let n = m.nrows();
        let mut entries = vec![];
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != cr(0.0) {
                    entries.push((i, j, v));
                }
            }
        }
        SparseHermitian { dim: n, entries }
    }

    /// Real symmetric unit E_rc + E_cr (or E_rr on the diagonal).
    pub fn sym_unit(dim: usize, r: usize, col: usize) -> Self {
        if r == col {
            SparseHermitian {
                dim,
                entries: vec![(r, r, cr(1.0))],
            }
        } else {
            SparseHermitian {
                dim,
                entries: vec![(r, col, cr(1.0)), (col, r, cr(1.0))],
            }
        }
    }

    /// Imaginary unit i E_rc - i E_cr.
    pub fn antisym_unit(dim: usize, r: usize, col: usize) -> Self {
        SparseHermitian {
            dim,
            entries: vec![(r, col, c(0.0, 1.0)), (col, r, c(0.0, -1.0))],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        self.add_to(&mut m, 1.0);
        m
    }

    /// m += coef * self
    pub fn add_to(&self, m: &mut CMat, coef: f64) {
        for &(r, col, v) in &self.entries {
            m[(r, col)] += v * coef;
        }
    }

    /// Re tr(self * m)
    pub fn re_inner(&self, m: &CMat) -> f64 {
        let mut s = 0.0;
        for &(r, col, v) in &self.entries {
            let x = m[(col, r)];
            s += v.re * x.re - v.im * x.im;
        }
        s
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().filter(|(r, col, _)| r == col).map(|(_, _, v)| v.re).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.entries.iter().map(|(_, _, v)| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        SparseHermitian {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, col, v)| (r, col, v * a)).collect(),
        }
    }

    /// self + a * other
    pub fn plus(&self, other: &SparseHermitian, a: f64) -> Self {
        assert_eq!(self.dim, other.dim);
        let it = self
            .entries
            .iter()
            .copied()
            .chain(other.entries.iter().map(|&(r, col, v)| (r, col, v * a)));
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, col, v) in it {
            *map.entry((r, col)).or_insert(cr(0.0)) += v;
        }
        SparseHermitian {
            dim: self.dim,
            entries: map.into_iter().filter(|(_, v)| v.norm() > 0.0).map(|((r, col), v)| (r, col, v)).collect(),
        }
    }

    /// id_d (x) self
    pub fn kron_identity_left(&self, d: usize) -> Self {
        let n = self.dim;
        let mut entries = Vec::with_capacity(self.entries.len() * d);
        for a in 0..d {
            for &(r, col, v) in &self.entries {
                entries.push((a * n + r, a * n + col, v));
            }
        }
        SparseHermitian { dim: n * d, entries }
    }

    /// self (x) m for a dense Hermitian m.
    pub fn kron_dense_right(&self, m: &CMat) -> Self {
        let k = m.nrows();
        let mut entries = Vec::new();
        for &(r, col, v) in &self.entries {
            for i in 0..k {
                for j in 0..k {
                    let w = m[(i, j)];
                    if w != cr(0.0) {
                        entries.push((r * k + i, col * k + j, v * w));
                    }
                }
            }
        }
        SparseHermitian {
            dim: self.dim * k,
            entries,
        }
    }

    /// V self V^dagger, dense result stored sparse.
    pub fn conjugated(&self, v: &CMat) -> Self {
        let small = self.to_dense();
        let mut big = v * small * v.adjoint();
        linalg::hermitize_in_place(&mut big);
        Self::from_dense(&big)
    }

    fn to_doc(&self) -> SparseDoc {
        SparseDoc {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, col, v)| (r, col, v.re, v.im)).collect(),
        }
    }

    fn from_doc(d: &SparseDoc) -> Result<Self> {
        Self::from_entries(d.dim, d.entries.iter().map(|&(r, col, re, im)| (r, col, c(re, im))))
    }
}

/// One equality constraint sum_b <A_b, X_b> = rhs.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub parts: Vec<(usize, SparseHermitian)>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub objective: Vec<CMat>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>) -> Self {
        let objective = blocks.iter().map(|&d| CMat::zeros(d, d)).collect();
        SdpProblem {
            blocks,
            objective,
            constraints: vec![],
        }
    }

    pub fn set_objective(&mut self, block: usize, c: CMat) {
        self.objective[block] = c;
    }

    pub fn add_constraint(&mut self, parts: Vec<(usize, SparseHermitian)>, rhs: f64) {
        self.constraints.push(Constraint { parts, rhs });
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|k| k.rhs).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.blocks.len() {
            return Err(Error::Dimension("one objective block per block".into()));
        }
        for (b, (&d, c)) in self.blocks.iter().zip(&self.objective).enumerate() {
            if d == 0 {
                return Err(Error::Dimension(format!("block {b} has dimension 0")));
            }
            if c.nrows() != d || c.ncols() != d {
                return Err(Error::Dimension(format!("objective block {b} has wrong size")));
            }
            if linalg::hermiticity_defect(c) > 1e-10 * (1.0 + linalg::max_abs(c)) {
                return Err(Error::invariant("hermitian", format!("objective block {b}")));
            }
        }
        for (i, k) in self.constraints.iter().enumerate() {
            if !k.rhs.is_finite() {
                return Err(Error::Argument(format!("constraint {i} has non-finite rhs")));
            }
            for (b, a) in &k.parts {
                let d = *self
                    .blocks
                    .get(*b)
                    .ok_or_else(|| Error::Dimension(format!("constraint {i} names block {b}")))?;
                if a.dim() != d {
                    return Err(Error::Dimension(format!("constraint {i} block {b} has wrong size")));
                }
            }
        }
        Ok(())
    }

    /// A(X)
    pub fn apply_a(&self, x: &[CMat]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|k| k.parts.iter().map(|(b, a)| a.re_inner(&x[*b])).sum())
            .collect()
    }

    /// sum_i y_i A_i
    pub fn apply_at(&self, y: &[f64]) -> Vec<CMat> {
        let mut out: Vec<CMat> = self.blocks.iter().map(|&d| CMat::zeros(d, d)).collect();
        for (k, &yi) in self.constraints.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for (b, a) in &k.parts {
                a.add_to(&mut out[*b], yi);
            }
        }
        out
    }

    pub fn primal_objective(&self, x: &[CMat]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| linalg::re_trace_prod(c, x)).sum()
    }

    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        self.constraints.iter().zip(y).map(|(k, yi)| k.rhs * yi).sum()
    }

    /// Same problem with C scaled by `a`: optimal values scale by `a` and
    /// the optimal primal point is unchanged.
    pub fn with_scaled_objective(&self, a: f64) -> SdpProblem {
        let mut p = self.clone();
        for c in &mut p.objective {
            *c *= cr(a);
        }
        p
    }

    pub fn to_json(&self) -> String {
        let doc = ProblemDoc {
            blocks: self.blocks.clone(),
            objective: self.objective.iter().map(MatrixDoc::from_matrix).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|k| ConstraintDoc {
                    rhs: k.rhs,
                    parts: k.parts.iter().map(|(b, a)| (*b, a.to_doc())).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("problem serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProblemDoc = serde_json::from_str(text)?;
        let mut p = SdpProblem::new(doc.blocks);
        p.objective = doc.objective.iter().map(|m| m.to_matrix()).collect::<Result<_>>()?;
        for k in &doc.constraints {
            let parts = k
                .parts
                .iter()
                .map(|(b, s)| Ok((*b, SparseHermitian::from_doc(s)?)))
                .collect::<Result<_>>()?;
            p.add_constraint(parts, k.rhs);
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Primal blocks X_b.
    pub primal: Vec<CMat>,
    /// Dual multipliers y.
    pub dual: Vec<f64>,
    /// Dual slack Z = C - A^T y as tracked by the solver.
    pub slack: Vec<CMat>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// primal_objective - dual_objective
    pub gap: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub note: String,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn to_json(&self) -> String {
        let doc = SolutionDoc {
            blocks: self.primal.iter().map(|x| x.nrows()).collect(),
            primal: self.primal.iter().map(MatrixDoc::from_matrix).collect(),
            dual: self.dual.clone(),
            slack: self.slack.iter().map(MatrixDoc::from_matrix).collect(),
            primal_objective: self.primal_objective,
            dual_objective: self.dual_objective,
            gap: self.gap,
            status: self.status,
            iterations: self.iterations,
            note: self.note.clone(),
        };
        serde_json::to_string(&doc).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: SolutionDoc = serde_json::from_str(text)?;
        let primal: Vec<CMat> = d.primal.iter().map(|m| m.to_matrix()).collect::<Result<_>>()?;
        if primal.iter().map(|x| x.nrows()).collect::<Vec<_>>() != d.blocks {
            return Err(Error::Parse("block header does not match primal blocks".into()));
        }
        Ok(SdpSolution {
            primal,
            dual: d.dual,
            slack: d.slack.iter().map(|m| m.to_matrix()).collect::<Result<_>>()?,
            primal_objective: d.primal_objective,
            dual_objective: d.dual_objective,
            gap: d.gap,
            status: d.status,
            iterations: d.iterations,
            note: d.note,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SparseDoc {
    dim: usize,
    entries: Vec<(usize, usize, f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct ConstraintDoc {
    rhs: f64,
    parts: Vec<(usize, SparseDoc)>,
}

#[derive(Serialize, Deserialize)]
struct ProblemDoc {
    blocks: Vec<usize>,
    objective: Vec<MatrixDoc>,
    constraints: Vec<ConstraintDoc>,
}

#[derive(Serialize, Deserialize)]
struct SolutionDoc {
    blocks: Vec<usize>,
    primal: Vec<MatrixDoc>,
    dual: Vec<f64>,
    slack: Vec<MatrixDoc>,
    primal_objective: f64,
    dual_objective: f64,
    gap: f64,
    status: SolveStatus,
    iterations: usize,
    note: String,
}
