//! Haar-random unitaries, random states and random channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::KrausChannel;
use crate::error::Result;
use crate::layout::SystemLayout;
use crate::linalg::{self, c, CMat, CVec};
use crate::state::{DensityOperator, PureState};

/// Deterministic RNG used throughout the crate.
pub type QRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> QRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` derived from a master seed. Streams do not
/// depend on how many values were drawn from other streams.
pub fn substream(seed: u64, index: u64) -> QRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix with i.i.d. standard complex Gaussian entries, filled
/// row by row.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = gaussian_complex(rng);
        }
    }
    m
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the columns of Q
/// rescaled by the phases of diag(R).
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = ginibre(dim, dim, rng);
    let (mut q, rdiag) = linalg::qr_q_and_rdiag(&g);
    for (j, r) in rdiag.iter().enumerate() {
        let n = r.norm();
        let phase = if n > 0.0 { r / n } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random isometry C^{d_in} -> C^{d_out}: the first d_in columns of a
/// Haar unitary.
pub fn haar_isometry<R: Rng + ?Sized>(d_in: usize, d_out: usize, rng: &mut R) -> CMat {
    assert!(d_out >= d_in, "isometry needs d_out >= d_in");
    let u = haar_unitary(d_out, rng);
    u.columns(0, d_in).into_owned()
}

pub fn random_pure_state<R: Rng + ?Sized>(layout: SystemLayout, rng: &mut R) -> PureState {
    let d = layout.total_dim();
    let v = CVec::from_fn(d, |_, _| gaussian_complex(rng));
    PureState::normalized(layout, v).expect("gaussian vector is nonzero")
}

/// Random mixed state from the Hilbert-Schmidt ensemble (partial trace of a
/// random pure state with an environment of `env_dim`).
pub fn random_density_env<R: Rng + ?Sized>(
    layout: SystemLayout,
    env_dim: usize,
    rng: &mut R,
) -> DensityOperator {
    let d = layout.total_dim();
    let g = ginibre(d, env_dim, rng);
    let m = &g * g.adjoint();
    DensityOperator::from_psd(layout, &m).expect("ginibre product is nonzero")
}

pub fn random_density<R: Rng + ?Sized>(layout: SystemLayout, rng: &mut R) -> DensityOperator {
    let d = layout.total_dim();
    random_density_env(layout, d, rng)
}

/// Random channel from a Haar isometry C^{d_in} -> C^{d_out} (x) C^{kraus}.
pub fn random_channel<R: Rng + ?Sized>(
    d_in: usize,
    output: SystemLayout,
    n_kraus: usize,
    rng: &mut R,
) -> Result<KrausChannel> {
    let d_out = output.total_dim();
    let v = haar_isometry(d_in, d_out * n_kraus, rng);
    KrausChannel::from_isometry(&v, output, n_kraus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_is_unitary() {
        let mut rng = rng_from_seed(1);
        for d in [1, 2, 5, 16] {
            let u = haar_unitary(d, &mut rng);
            assert!(linalg::fro_norm(&(u.adjoint() * &u - linalg::identity(d))) < 1e-12);
        }
    }

    #[test]
    fn haar_first_moment() {
        let mut rng = rng_from_seed(7);
        let n = 10_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let u = haar_unitary(4, &mut rng);
            acc += u[(0, 0)].norm_sqr();
        }
        let mean = acc / n as f64;
        assert!((mean - 0.25).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn substreams_are_reproducible() {
        let mut a = substream(5, 3);
        let mut b = substream(5, 3);
        let mut d = substream(5, 4);
        let x: u64 = a.random();
        assert_eq!(x, b.random::<u64>());
        assert_ne!(x, d.random::<u64>());
    }

    #[test]
    fn random_density_is_valid() {
        let mut rng = rng_from_seed(3);
        let l = SystemLayout::new(&[("A", 2), ("B", 3)]).unwrap();
        let rho = random_density(l.clone(), &mut rng);
        assert!(DensityOperator::new(l, rho.matrix().clone()).is_ok());
    }
}
