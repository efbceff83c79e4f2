//! Numerical laboratory for the principal Dirichlet eigenvalue of the planar
//! magnetic Laplacian `(-i∇ - α)²`, `α = (B/2)(-x₂, x₁)`, and for the stability
//! of its isoperimetric inequality.
//!
//! * [`geom`]: planar domains, areas, perimeters, Fraenkel and interior asymmetry.
//! * [`mesh`]: polar triangulations of star-shaped domains and exact level-set geometry.
//! * [`eigsolve`]: smallest eigenpair of sparse Hermitian pencils.
//! * [`magfem`]: P1 finite elements for the magnetic Dirichlet form.
//! * [`radial`]: the one-dimensional disk energy and comparison lemma machinery.
//! * [`rearr`]: symmetric decreasing rearrangement of computed eigenfunctions.
//! * [`harness`]: corpus generation, verification sweeps and reports.

pub mod eigsolve;
mod error;
pub mod geom;
pub mod harness;
pub mod magfem;
pub mod mesh;
mod optim;
pub mod radial;
pub mod rearr;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/magnetic_fem.md")]
    mod magnetic_fem {}
    #[doc = include_str!("../../../book/src/disk_energy.md")]
    mod disk_energy {}
    #[doc = include_str!("../../../book/src/rearrangement.md")]
    mod rearrangement {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
