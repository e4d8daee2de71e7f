//! Pointwise frames of the characteristic distribution.

use nalgebra::DMatrix;

use crate::chart::Point;
use crate::geometry::PoissonStructure;
use crate::linalg::{ranked_span, RankedSpan};
use crate::symmetry::InvariantFamily;
use crate::tolerances;

use super::ReductionError;

/// The distribution at one point: generator columns `X_{f_i}(m)` for the
/// invariant family, with their rank-revealed orthonormal span.
#[derive(Debug, Clone)]
pub struct DistributionFrame {
    pub base: Point,
    /// n x K matrix, one column per family member.
    pub generators: DMatrix<f64>,
    pub span: RankedSpan,
}

impl DistributionFrame {
    pub fn rank(&self) -> usize {
        self.span.rank
    }

    /// Errors when the retained/discarded singular-value gap is too small
    /// to trust the rank.
    pub fn require_well_conditioned(&self) -> Result<(), ReductionError> {
        if self.span.ill_conditioned {
            return Err(ReductionError::IllConditioned {
                point: self.base.coords().to_vec(),
                sigma_retained: self.span.sigma_retained_min,
                sigma_discarded: self.span.sigma_discarded_max,
            });
        }
        Ok(())
    }
}

/// Evaluates `X_{f_i}(m)` for every family member and rank-reveals the span.
pub fn distribution_at(
    m: &Point,
    family: &InvariantFamily,
    structure: &PoissonStructure,
) -> Result<DistributionFrame, ReductionError> {
    if family.is_empty() {
        return Err(ReductionError::EmptyFamily);
    }
    let n = m.chart().dim();
    let mut generators = DMatrix::zeros(n, family.len());
    for (j, f) in family.members().iter().enumerate() {
        let column = structure.hamiltonian_at(f, m.coords())?;
        generators.set_column(j, &column);
    }
    let span = ranked_span(&generators, tolerances::RANK_REL);
    Ok(DistributionFrame {
        base: m.clone(),
        generators,
        span,
    })
}
