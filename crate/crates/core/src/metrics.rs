//! Distances and fidelity between operators.

use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::state::DensityOperator;

/// ||M||_1, the sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    linalg::trace_norm(m)
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &CMat) -> f64 {
    linalg::fro_norm(m)
}

/// 1/2 ||rho - sigma||_1
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    rho.trace_distance(sigma)
}

/// Squared fidelity ||sqrt(rho) sqrt(sigma)||_1^2.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    rho.check_same_layout(sigma)?;
    Ok(fidelity_matrices(rho.matrix(), sigma.matrix()))
}

pub fn fidelity_matrices(rho: &CMat, sigma: &CMat) -> f64 {
    let a = linalg::psd_sqrt(rho);
    let b = linalg::psd_sqrt(sigma);
    let s: f64 = linalg::singular_values(&(a * b)).iter().sum();
    (s * s).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::SystemLayout;

    #[test]
    fn orthogonal_states() {
        let l = SystemLayout::single("A", 2).unwrap();
        let a = DensityOperator::diagonal(l.clone(), &[1.0, 0.0]).unwrap();
        let b = DensityOperator::diagonal(l, &[0.0, 1.0]).unwrap();
        assert_eq!(fidelity(&a, &b).unwrap(), 0.0);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_fidelity_is_bhattacharyya() {
        let l = SystemLayout::single("A", 3).unwrap();
        let p = [0.2, 0.3, 0.5];
        let q = [0.6, 0.1, 0.3];
        let a = DensityOperator::diagonal(l.clone(), &p).unwrap();
        let b = DensityOperator::diagonal(l, &q).unwrap();
        let bc: f64 = p.iter().zip(&q).map(|(x, y)| (x * y).sqrt()).sum();
        assert!((fidelity(&a, &b).unwrap() - bc * bc).abs() < 1e-14);
    }

    #[test]
    fn layout_mismatch() {
        let a = DensityOperator::maximally_mixed(SystemLayout::single("A", 2).unwrap());
        let b = DensityOperator::maximally_mixed(SystemLayout::single("B", 2).unwrap());
        assert!(fidelity(&a, &b).is_err());
    }
}
