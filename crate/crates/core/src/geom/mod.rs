//! Planar domains, their measures and asymmetries.

mod asymmetry;
mod domain;
pub mod polygon;
mod shape;

pub use asymmetry::{
    asymmetry, asymmetry_of_loops, asymmetry_report, fraenkel_asymmetry, fraenkel_of_loops,
    inscribed_disk, interior_asymmetry, interior_of_loops, quant_iso_check, quant_iso_of_loops,
    subset_asymmetry_check, AsymmetryKind, AsymmetryReport, FraenkelResult, InscribedDisk,
    InteriorResult, IsoCheck, SearchEffort, SubsetOutcome, ASYMMETRY_ZERO, ISO_FLOOR_SLACK,
};
pub(crate) use asymmetry::iso_from_parts;
pub use domain::{DiskSpec, PlanarDomain};
pub use shape::{polygon_ray_radius, uniform_angles, StarDescriptor, StarShape};

/// A point (or vector) in the plane.
pub type Point = [f64; 2];
