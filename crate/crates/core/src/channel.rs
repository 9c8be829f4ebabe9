//! Completely positive trace-preserving maps in Kraus form.

use crate::error::{Error, Result};
use crate::layout::SystemLayout;
use crate::linalg::{self, CMat};
use crate::state::DensityOperator;

#[derive(Clone, Debug)]
pub struct KrausChannel {
    kraus: Vec<CMat>,
    output: SystemLayout,
}

impl KrausChannel {
    /// Checks sum_k K_k^dagger K_k = id to 1e-9.
    pub fn new(kraus: Vec<CMat>, output: SystemLayout) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::Argument("channel needs at least one Kraus operator".into()))?;
        let (d_out, d_in) = first.shape();
        if d_out != output.total_dim() {
            return Err(Error::Dimension("Kraus rows differ from output dimension".into()));
        }
        let mut acc = CMat::zeros(d_in, d_in);
        for k in &kraus {
            if k.shape() != (d_out, d_in) {
                return Err(Error::Dimension("Kraus operators differ in shape".into()));
            }
            acc += k.adjoint() * k;
        }
        let defect = linalg::fro_norm(&(acc - linalg::identity(d_in)));
        if defect > 1e-9 {
            return Err(Error::invariant(
                "trace-preserving",
                format!("||sum K^dagger K - id|| = {defect:.3e}"),
            ));
        }
        Ok(KrausChannel { kraus, output })
    }

    /// Splits an isometry V: C^{d_in} -> C^{d_out} (x) C^{n} into Kraus
    /// operators K_k = (id (x) <k|) V.
    pub fn from_isometry(v: &CMat, output: SystemLayout, n: usize) -> Result<Self> {
        let d_out = output.total_dim();
        if v.nrows() != d_out * n {
            return Err(Error::Dimension("isometry rows must equal d_out * n".into()));
        }
        let d_in = v.ncols();
        let kraus = (0..n)
            .map(|k| CMat::from_fn(d_out, d_in, |i, j| v[(i * n + k, j)]))
            .collect();
        Self::new(kraus, output)
    }

    pub fn unitary(u: CMat, output: SystemLayout) -> Result<Self> {
        Self::new(vec![u], output)
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.input_dim() {
            return Err(Error::Dimension("state dimension differs from channel input".into()));
        }
        let d = self.output.total_dim();
        let mut out = CMat::zeros(d, d);
        for k in &self.kraus {
            out += k * rho.matrix() * k.adjoint();
        }
        linalg::hermitize_in_place(&mut out);
        Ok(DensityOperator::new_unchecked(self.output.clone(), out))
    }
}

/// Apply `channel` to `rho` (convenience wrapper).
pub fn apply_channel(channel: &KrausChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    channel.apply(rho)
}
