use serde::Serialize;

use super::problem::{SdpProblem, SdpSolution};
use crate::linalg;

/// Residuals of a claimed solution, recomputed from the problem data alone.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    /// ||A(X) - b||_2
    pub primal_residual: f64,
    /// max_b max(0, -lambda_min(X_b))
    pub primal_psd_violation: f64,
    /// max_b max(0, -lambda_min(C_b - (A^T y)_b))
    pub dual_psd_violation: f64,
    /// |<X, C - A^T y>|
    pub complementarity: f64,
    /// |<C, X> - b.y|
    pub objective_gap: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        [
            self.primal_residual,
            self.primal_psd_violation,
            self.dual_psd_violation,
            self.complementarity,
            self.objective_gap,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

pub fn certify(p: &SdpProblem, s: &SdpSolution) -> ResidualReport {
    let ax = p.apply_a(&s.primal);
    let primal_residual = ax
        .iter()
        .zip(p.constraints.iter())
        .map(|(a, k)| (a - k.rhs).powi(2))
        .sum::<f64>()
        .sqrt();
    let primal_psd_violation = s
        .primal
        .iter()
        .map(|x| (-linalg::lambda_min(x)).max(0.0))
        .fold(0.0, f64::max);
    let aty = p.apply_at(&s.dual);
    let slack: Vec<_> = p.objective.iter().zip(&aty).map(|(c, a)| c - a).collect();
    let dual_psd_violation = slack
        .iter()
        .map(|z| (-linalg::lambda_min(z)).max(0.0))
        .fold(0.0, f64::max);
    let complementarity = s
        .primal
        .iter()
        .zip(&slack)
        .map(|(x, z)| linalg::re_trace_prod(x, z))
        .sum::<f64>()
        .abs();
    let objective_gap = (p.primal_objective(&s.primal) - p.dual_objective(&s.dual)).abs();
    ResidualReport {
        primal_residual,
        primal_psd_violation,
        dual_psd_violation,
        complementarity,
        objective_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, identity, CMat};
    use crate::sdp::{SolveStatus, SparseHermitian};

    #[test]
    fn hand_built_infeasible_point() {
        let mut p = SdpProblem::new(vec![2]);
        p.set_objective(0, identity(2));
        p.add_constraint(vec![(0, SparseHermitian::from_dense(&identity(2)))], 1.0);
        let mut x = CMat::zeros(2, 2);
        x[(0, 0)] = cr(0.9);
        x[(1, 1)] = cr(-0.2);
        let s = SdpSolution {
            primal: vec![x],
            dual: vec![2.0],
            slack: vec![identity(2)],
            primal_objective: 0.0,
            dual_objective: 0.0,
            gap: 0.0,
            status: SolveStatus::Optimal,
            iterations: 0,
            note: String::new(),
        };
        let r = certify(&p, &s);
        assert!((r.primal_residual - 0.3).abs() < 1e-12);
        assert!((r.primal_psd_violation - 0.2).abs() < 1e-12);
        assert!((r.dual_psd_violation - 1.0).abs() < 1e-12);
        assert!(r.objective_gap > 1.0);
    }
}
