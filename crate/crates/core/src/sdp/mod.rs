//! Semidefinite programming over block-diagonal complex Hermitian matrices.
//!
//! Problems are stated in the standard primal form
//!
//! ```text
//! minimize   <C, X>
//! subject to <A_i, X> = b_i,  X >= 0
//! ```
//!
//! with dual `max b.y  s.t.  C - sum_i y_i A_i >= 0`. [`LmiProblem`] offers
//! the dual (linear matrix inequality) view, which is how most of the
//! entropic programs in this crate are written.

mod certify;
mod lmi;
mod problem;
mod solver;
mod symmetry;

pub use certify::{certify, ResidualReport};
pub use lmi::{HermitianBasis, LmiProblem, LmiSolution};
pub use problem::{Constraint, SdpProblem, SdpSolution, SolveStatus, SparseHermitian};
pub use solver::{solve, solve_with, SolverOptions};
pub use symmetry::OrbitPartition;
