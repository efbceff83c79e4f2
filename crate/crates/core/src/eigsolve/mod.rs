//! Smallest eigenpair of sparse Hermitian pencils `K x = λ M x`.

mod krylov;
mod pcg;
mod sparse;

pub use krylov::{
    default_shift, rayleigh_and_residual, smallest_eigenpair, smallest_eigenpair_with, SolveOptions,
    SolveReport,
};
pub use pcg::{inner_solve, pcg, CgFailure, CgOutcome, IncompleteCholesky, Preconditioner};
pub use sparse::{dot, norm, SparseHermitian, Symmetry, TripletBuilder, C64};
