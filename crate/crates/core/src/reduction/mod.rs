//! The characteristic distribution, momentum-map fibers, isotropy algebras,
//! and the reduced symplectic form.
//!
//! The distribution spanned by the Hamiltonian vector fields of a finite
//! generating family of invariant functions is computed pointwise with a
//! rank-revealing SVD. Fibers of the momentum map (the accessible sets of
//! the family's flows) are traced with random bounded flow words; the
//! isotropy algebra is the null space of the stacked tangency residuals;
//! the reduced form is assembled from brackets of a pivoted complement of
//! the orbit directions and certified numerically.

mod closure;
mod distribution;
mod isotropy;
mod leaf;
mod reduced;

pub use closure::{classify_closure, ClosureReport, PlaneClass, PlaneReport};
pub use distribution::{distribution_at, DistributionFrame};
pub use isotropy::{isotropy_algebra, orbit_subspace, IsotropyAlgebra};
pub use leaf::{
    leaf_membership, trace_leaf, Budget, FlowWord, LeafSample, MembershipVerdict, Segment,
    SeparationCertificate,
};
pub use reduced::{reduced_form, LeafChart, ReducedFormReport};

use crate::chart::ChartError;
use crate::flows::FlowError;
use crate::geometry::GeometryError;
use crate::symmetry::SymmetryError;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ReductionError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("the invariant family is empty")]
    EmptyFamily,
    #[error(
        "distribution frame is ill-conditioned at {point:?}: retained sigma {sigma_retained:.3e} \
         vs discarded {sigma_discarded:.3e} (gap below 1e3)"
    )]
    IllConditioned {
        point: Vec<f64>,
        sigma_retained: f64,
        sigma_discarded: f64,
    },
    #[error("rank jump along the leaf: rank {found} at {point:?}, expected {expected}")]
    RankJump {
        expected: usize,
        found: usize,
        point: Vec<f64>,
    },
    #[error("need at least {need} cloud points, found {found}")]
    InsufficientCloud { need: usize, found: usize },
    #[error("complement selection found only {found} of {needed} independent directions")]
    ComplementSelection { needed: usize, found: usize },
    #[error("cannot build representative shift: {what} (residual {residual:.3e})")]
    ShiftConstruction { what: String, residual: f64 },
    #[error("leaf chart inconsistent with the leaf: {what} (residual {residual:.3e})")]
    LeafChartInconsistent { what: String, residual: f64 },
}

/// Runs the reduction pipeline with the trivial group G = {e}: the family
/// is all coordinate functions, whose Hamiltonian fields span the full
/// characteristic distribution pointwise; traced fibers are then the
/// symplectic leaves and the reduced form is the leaf symplectic form.
pub fn stratification_mode(
    structure: &crate::geometry::PoissonStructure,
    seed: &crate::chart::Point,
    budget: &Budget,
    flow: &crate::flows::FlowSettings,
) -> Result<(LeafSample, ReducedFormReport), ReductionError> {
    let chart = seed.chart();
    let family = crate::symmetry::InvariantFamily::parse(
        chart,
        chart.names(),
        "coordinate functions (trivial group)",
    )?;
    let sample = trace_leaf(seed, &family, structure, budget, flow)?;
    let action = crate::symmetry::GroupAction::trivial(chart)?;
    let iso = isotropy_algebra(&sample, &action, &family, structure, 32)?;
    let report = reduced_form(seed, &iso, &action, &family, structure, None, &[])?;
    Ok((sample, report))
}
