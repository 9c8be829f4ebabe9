//! Named tripartite pure states on factors A, B, R.

use crate::error::{Error, Result};
use crate::layout::SystemLayout;
use crate::linalg::cr;
use crate::linalg::CVec;
use crate::state::PureState;

pub const NAMES: [&str; 4] = ["bell", "ghz", "product", "w"];

fn qubits(da: usize, db: usize, dr: usize) -> SystemLayout {
    SystemLayout::new(&[("A", da), ("B", db), ("R", dr)]).expect("static layout")
}

/// Phi_2 between A and R, B trivial.
pub fn bell() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = CVec::from_vec(vec![cr(s), cr(0.0), cr(0.0), cr(s)]);
    PureState::new(qubits(2, 1, 2), v).expect("normalized")
}

/// (|000> + |111>)/sqrt 2
pub fn ghz() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVec::zeros(8);
    v[0] = cr(s);
    v[7] = cr(s);
    PureState::new(qubits(2, 2, 2), v).expect("normalized")
}

/// |0>_A (x) Phi_2 between B and R.
pub fn product() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVec::zeros(8);
    v[0] = cr(s);
    v[3] = cr(s);
    PureState::new(qubits(2, 2, 2), v).expect("normalized")
}

/// (|100> + |010> + |001>)/sqrt 3
pub fn w() -> PureState {
    let s = 1.0 / 3f64.sqrt();
    let mut v = CVec::zeros(8);
    v[4] = cr(s);
    v[2] = cr(s);
    v[1] = cr(s);
    PureState::new(qubits(2, 2, 2), v).expect("normalized")
}

pub fn by_name(name: &str) -> Result<PureState> {
    match name {
        "bell" => Ok(bell()),
        "ghz" => Ok(ghz()),
        "product" => Ok(product()),
        "w" => Ok(w()),
        other => Err(Error::Argument(format!(
            "unknown builtin state `{other}` (expected one of {})",
            NAMES.join(", ")
        ))),
    }
}
