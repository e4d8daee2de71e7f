//! The isotropy algebra of a fiber, and the tangent space of its orbits.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chart::Point;
use crate::geometry::PoissonStructure;
use crate::linalg::{null_space, ranked_span, reject_from_span};
use crate::symmetry::{GroupAction, InvariantFamily};
use crate::tolerances;

use super::{distribution_at, DistributionFrame, LeafSample, ReductionError};

/// The Lie-algebra elements whose generators stay tangent to a traced
/// fiber at every sampled point.
#[derive(Debug, Clone, Serialize)]
pub struct IsotropyAlgebra {
    /// Coefficient vectors in the generator basis, spanning the algebra.
    pub basis: Vec<Vec<f64>>,
    pub dim: usize,
    /// Max over samples and basis elements of the out-of-span component.
    pub max_residual: f64,
    /// Smallest stacked residual among rejected basis directions; a sound
    /// rejection keeps this far above the acceptance threshold.
    pub rejected_min_residual: Option<f64>,
    pub samples_used: usize,
}

/// Solves for the null space of the stacked maps
/// `xi -> (component of xi_M(m) orthogonal to the distribution span at m)`
/// over an evenly spaced subsample of the cloud.
pub fn isotropy_algebra(
    sample: &LeafSample,
    action: &GroupAction,
    family: &InvariantFamily,
    structure: &PoissonStructure,
    max_samples: usize,
) -> Result<IsotropyAlgebra, ReductionError> {
    let k = action.group_dim();
    if k == 0 {
        return Ok(IsotropyAlgebra {
            basis: Vec::new(),
            dim: 0,
            max_residual: 0.0,
            rejected_min_residual: None,
            samples_used: 0,
        });
    }
    if sample.len() < 8 {
        return Err(ReductionError::InsufficientCloud {
            need: 8,
            found: sample.len(),
        });
    }
    let picks = subsample_indices(sample.len(), max_samples.max(8));
    let n = sample.seed().chart().dim();

    // Stack the per-sample rejection maps into one (n * samples) x k matrix.
    let mut stacked = DMatrix::zeros(n * picks.len(), k);
    let mut frames: Vec<(Point, DMatrix<f64>)> = Vec::with_capacity(picks.len());
    for (row_block, &idx) in picks.iter().enumerate() {
        let m = &sample.points()[idx];
        let frame = frame_at(m, family, structure)?;
        let generators = action.generator_matrix(m.coords())?;
        for j in 0..k {
            let rejected = reject_from_span(&frame, &generators.column(j).into_owned());
            for i in 0..n {
                stacked[(row_block * n + i, j)] = rejected[i];
            }
        }
        frames.push((m.clone(), frame));
    }

    let null = null_space(&stacked, tolerances::NULLSPACE_REL);
    let mut basis: Vec<Vec<f64>> = null
        .iter()
        .map(|v| canonicalize(v.as_slice()))
        .collect();
    basis.sort_by(|a, b| a.partial_cmp(b).expect("finite entries"));

    // Residual of every accepted element at every sampled point.
    let mut max_residual = 0.0f64;
    for xi in &basis {
        for (m, frame) in &frames {
            let v = action.generator_at(xi, m.coords())?;
            let out = reject_from_span(frame, &v).norm();
            max_residual = max_residual.max(out);
        }
    }

    // Stacked residual of the generator directions orthogonal to the
    // accepted algebra; these are the rejected directions.
    let mut rejected_min_residual: Option<f64> = None;
    if basis.len() < k {
        let accepted = DMatrix::from_fn(k, basis.len(), |i, j| basis[j][i]);
        let accepted_span = ranked_span(&accepted, tolerances::RANK_REL);
        for j in 0..k {
            let mut e = nalgebra::DVector::zeros(k);
            e[j] = 1.0;
            let out_of_algebra = reject_from_span(&accepted_span.basis, &e);
            if out_of_algebra.norm() < 0.5 {
                continue;
            }
            let direction = out_of_algebra.normalize();
            let residual = (&stacked * direction).norm();
            rejected_min_residual = Some(match rejected_min_residual {
                Some(prev) => prev.min(residual),
                None => residual,
            });
        }
    }

    Ok(IsotropyAlgebra {
        dim: basis.len(),
        basis,
        max_residual,
        rejected_min_residual,
        samples_used: picks.len(),
    })
}

/// Orthonormal basis of `T_m (G_rho . m)`, the span of the isotropy-algebra
/// generators at `m`. Zero columns for a trivial algebra.
pub fn orbit_subspace(
    m: &Point,
    iso: &IsotropyAlgebra,
    action: &GroupAction,
) -> Result<DMatrix<f64>, ReductionError> {
    let n = m.chart().dim();
    if iso.dim == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let mut columns = DMatrix::zeros(n, iso.dim);
    for (j, xi) in iso.basis.iter().enumerate() {
        columns.set_column(j, &action.generator_at(xi, m.coords())?);
    }
    let span = ranked_span(&columns, tolerances::RANK_REL);
    Ok(span.basis)
}

fn frame_at(
    m: &Point,
    family: &InvariantFamily,
    structure: &PoissonStructure,
) -> Result<DMatrix<f64>, ReductionError> {
    let frame: DistributionFrame = distribution_at(m, family, structure)?;
    frame.require_well_conditioned()?;
    Ok(frame.span.basis)
}

fn subsample_indices(len: usize, want: usize) -> Vec<usize> {
    if len <= want {
        return (0..len).collect();
    }
    (0..want).map(|i| i * len / want).collect()
}

/// Scales so the largest-magnitude entry is +1.
fn canonicalize(v: &[f64]) -> Vec<f64> {
    let (mut scale, mut best) = (1.0, 0.0f64);
    for &x in v {
        if x.abs() > best {
            best = x.abs();
            scale = x;
        }
    }
    if best == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|&x| x / scale).collect()
}
