//! Linear matrix inequality front end:
//!
//! ```text
//! minimize   sum_i c_i y_i
//! subject to F0_b + sum_i y_i F_ib >= 0   for every block b
//! ```
//!
//! which is the dual of a standard-form problem with C = F0, A_i = -F_i and
//! b_i = -c_i.

use super::problem::{SdpProblem, SdpSolution, SolveStatus, SparseHermitian};
use super::solver::{solve_with, SolverOptions};
use super::symmetry::OrbitPartition;
use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, CMat};

/// Real basis of a subspace of d x d Hermitian matrices.
#[derive(Clone, Debug)]
pub struct HermitianBasis {
    dim: usize,
    elements: Vec<SparseHermitian>,
}

impl HermitianBasis {
    /// All Hermitian matrices (d^2 elements).
    pub fn full(dim: usize) -> Self {
        Self::invariant(&OrbitPartition::trivial(dim))
    }

    /// Hermitian matrices constant on each orbit of `part`.
    pub fn invariant(part: &OrbitPartition) -> Self {
        let dim = part.dim();
        let members = part.members();
        let mut elements = Vec::new();
        for (o, mem) in members.iter().enumerate() {
            let (r0, c0) = mem[0];
            let adj = part.orbit_of(c0, r0);
            if adj == o {
                let e = SparseHermitian::from_entries(dim, mem.iter().map(|&(r, cc)| (r, cc, cr(1.0))))
                    .expect("self-adjoint orbit");
                elements.push(e);
            } else if o < adj {
                let re = mem
                    .iter()
                    .map(|&(r, cc)| (r, cc, cr(1.0)))
                    .chain(members[adj].iter().map(|&(r, cc)| (r, cc, cr(1.0))));
                let im = mem
                    .iter()
                    .map(|&(r, cc)| (r, cc, c(0.0, 1.0)))
                    .chain(members[adj].iter().map(|&(r, cc)| (r, cc, c(0.0, -1.0))));
                elements.push(SparseHermitian::from_entries(dim, re).expect("paired orbit"));
                elements.push(SparseHermitian::from_entries(dim, im).expect("paired orbit"));
            }
        }
        HermitianBasis { dim, elements }
    }

    /// Traceless subspace, by eliminating one trace-carrying element.
    pub fn traceless(&self) -> Self {
        let pivot = self
            .elements
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.trace().abs().total_cmp(&b.1.trace().abs()))
            .map(|(i, _)| i);
        let Some(p) = pivot else { return self.clone() };
        let tp = self.elements[p].trace();
        if tp.abs() < 1e-14 {
            return self.clone();
        }
        let elements = self
            .elements
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != p)
            .map(|(_, e)| {
                let t = e.trace();
                if t == 0.0 {
                    e.clone()
                } else {
                    e.plus(&self.elements[p], -t / tp)
                }
            })
            .collect();
        HermitianBasis {
            dim: self.dim,
            elements,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[SparseHermitian] {
        &self.elements
    }

    pub fn compose(&self, coeffs: &[f64]) -> CMat {
        assert_eq!(coeffs.len(), self.elements.len());
        let mut m = CMat::zeros(self.dim, self.dim);
        for (e, &y) in self.elements.iter().zip(coeffs) {
            e.add_to(&mut m, y);
        }
        linalg::hermitize_in_place(&mut m);
        m
    }
}

#[derive(Clone, Debug, Default)]
pub struct LmiProblem {
    blocks: Vec<usize>,
    constant: Vec<CMat>,
    coeffs: Vec<Vec<(usize, SparseHermitian)>>,
    cost: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LmiSolution {
    pub y: Vec<f64>,
    /// sum_i c_i y_i at the returned point.
    pub value: f64,
    /// Duality gap of the underlying standard-form solve.
    pub gap: f64,
    pub status: SolveStatus,
    pub sdp: SdpSolution,
}

impl LmiSolution {
    pub fn slice(&self, vars: &[usize]) -> Vec<f64> {
        vars.iter().map(|&i| self.y[i]).collect()
    }

    /// Matrix variable `sum_k y_{vars[k]} E_k`.
    pub fn matrix(&self, vars: &[usize], basis: &HermitianBasis) -> CMat {
        basis.compose(&self.slice(vars))
    }
}

impl LmiProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, dim: usize) -> usize {
        self.blocks.push(dim);
        self.constant.push(CMat::zeros(dim, dim));
        self.blocks.len() - 1
    }

    pub fn add_var(&mut self, cost: f64) -> usize {
        self.coeffs.push(vec![]);
        self.cost.push(cost);
        self.cost.len() - 1
    }

    /// One variable per basis element; costs from `cost`.
    pub fn add_matrix_var(&mut self, basis: &HermitianBasis, cost: impl Fn(&SparseHermitian) -> f64) -> Vec<usize> {
        basis.elements().iter().map(|e| self.add_var(cost(e))).collect()
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.cost[var] = cost;
    }

    pub fn add_coeff(&mut self, var: usize, block: usize, f: SparseHermitian) {
        assert_eq!(f.dim(), self.blocks[block], "coefficient size must match block");
        if let Some(slot) = self.coeffs[var].iter_mut().find(|(b, _)| *b == block) {
            slot.1 = slot.1.plus(&f, 1.0);
        } else if !f.is_zero() {
            self.coeffs[var].push((block, f));
        }
    }

    /// Adds `map(E_k)` to block `block` for every basis element.
    pub fn add_matrix_coeff(
        &mut self,
        vars: &[usize],
        basis: &HermitianBasis,
        block: usize,
        map: impl Fn(&SparseHermitian) -> SparseHermitian,
    ) {
        for (&v, e) in vars.iter().zip(basis.elements()) {
            self.add_coeff(v, block, map(e));
        }
    }

    pub fn add_constant(&mut self, block: usize, m: &CMat) {
        self.constant[block] += m;
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn to_sdp(&self) -> SdpProblem {
        let mut p = SdpProblem::new(self.blocks.clone());
        for (b, f0) in self.constant.iter().enumerate() {
            p.set_objective(b, linalg::hermitize(f0));
        }
        for (i, parts) in self.coeffs.iter().enumerate() {
            p.add_constraint(
                parts.iter().map(|(b, f)| (*b, f.scaled(-1.0))).collect(),
                -self.cost[i],
            );
        }
        p
    }

    pub fn objective(&self, y: &[f64]) -> f64 {
        self.cost.iter().zip(y).map(|(c, y)| c * y).sum()
    }

    /// F0_b + sum_i y_i F_ib
    pub fn block_value(&self, block: usize, y: &[f64]) -> CMat {
        let mut m = self.constant[block].clone();
        for (parts, &yi) in self.coeffs.iter().zip(y) {
            for (b, f) in parts {
                if *b == block {
                    f.add_to(&mut m, yi);
                }
            }
        }
        linalg::hermitize_in_place(&mut m);
        m
    }

    /// Most negative eigenvalue over all blocks at `y` (0 if feasible).
    pub fn violation(&self, y: &[f64]) -> f64 {
        (0..self.blocks.len())
            .map(|b| (-linalg::lambda_min(&self.block_value(b, y))).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<LmiSolution> {
        if let Some(i) = self.coeffs.iter().position(|p| p.is_empty()) {
            return Err(Error::Argument(format!("variable {i} appears in no block")));
        }
        let p = self.to_sdp();
        let sdp = solve_with(&p, opts)?;
        let value = self.objective(&sdp.dual);
        Ok(LmiSolution {
            y: sdp.dual.clone(),
            value,
            gap: sdp.gap,
            status: sdp.status,
            sdp,
        })
    }
}
