//! Canonical group actions: finite maps, infinitesimal generators, invariant
//! families, and the action-quality checks.
//!
//! A `GroupAction` is a k-parameter family of chart maps `Phi_g` given in
//! closed form per coordinate (in the chart names plus parameters
//! `a1..ak`), together with k generator vector fields. Whether the maps
//! really form an action, leave the declared invariants fixed, and preserve
//! the Poisson bracket is checked statistically over a sampling plan; the
//! properness of the action is an input assumption, never verified.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::{ChartError, ChartSpec, Point};
use crate::expr::Dual;
use crate::geometry::{probe_fields, GeometryError, PoissonStructure, ScalarField, VectorField};
use crate::par;
use crate::sampling::SamplingPlan;
use crate::tolerances;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SymmetryError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    BadShape(String),
}

/// Names `a1..ak` for the group parameters.
pub fn param_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("a{i}")).collect()
}

/// A proper canonical G-action in coordinates.
#[derive(Debug, Clone)]
pub struct GroupAction {
    chart: Arc<ChartSpec>,
    group_dim: usize,
    generators: Vec<VectorField>,
    /// Finite maps, one per coordinate, over chart names + `a1..ak`.
    maps: Vec<ScalarField>,
    abelian: bool,
}

impl GroupAction {
    /// `generators[i]` are the components of the i-th infinitesimal
    /// generator; `maps` are per-coordinate expressions of the finite action.
    pub fn new(
        chart: &Arc<ChartSpec>,
        generators: &[Vec<String>],
        maps: &[String],
        abelian: bool,
    ) -> Result<Self, SymmetryError> {
        let k = generators.len();
        let n = chart.dim();
        if maps.len() != n {
            return Err(SymmetryError::BadShape(format!(
                "expected {n} finite-map expressions, found {}",
                maps.len()
            )));
        }
        let generator_fields = generators
            .iter()
            .enumerate()
            .map(|(i, components)| {
                if components.len() != n {
                    return Err(SymmetryError::BadShape(format!(
                        "generator {i} has {} components, chart has {n}",
                        components.len()
                    )));
                }
                VectorField::from_components(chart, components).map_err(SymmetryError::from)
            })
            .collect::<Result<Vec<_>, _>>()?;
        // The finite maps live on the chart extended by the parameter axes;
        // this also rejects charts whose names collide with a1..ak.
        let extended = extended_chart(chart, k)?;
        let map_fields = maps
            .iter()
            .map(|src| ScalarField::parse(&extended, src))
            .collect::<Result<Vec<_>, _>>()
            .map_err(SymmetryError::from)?;
        Ok(GroupAction {
            chart: chart.clone(),
            group_dim: k,
            generators: generator_fields,
            maps: map_fields,
            abelian,
        })
    }

    /// The trivial group G = {e}: no generators, identity map.
    pub fn trivial(chart: &Arc<ChartSpec>) -> Result<Self, SymmetryError> {
        let maps: Vec<String> = chart.names().to_vec();
        GroupAction::new(chart, &[], &maps, true)
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn group_dim(&self) -> usize {
        self.group_dim
    }

    pub fn is_abelian(&self) -> bool {
        self.abelian
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    /// `xi_M(m)` for the Lie-algebra element with coefficients `xi`.
    pub fn generator_at(
        &self,
        xi: &[f64],
        coords: &[f64],
    ) -> Result<DVector<f64>, SymmetryError> {
        let n = self.chart.dim();
        let mut out = DVector::zeros(n);
        for (c, generator) in xi.iter().zip(&self.generators) {
            if *c != 0.0 {
                out += generator.eval_at(coords)? * *c;
            }
        }
        Ok(out)
    }

    /// The n x k matrix whose columns are the generator values at `coords`.
    pub fn generator_matrix(&self, coords: &[f64]) -> Result<DMatrix<f64>, SymmetryError> {
        let n = self.chart.dim();
        let mut m = DMatrix::zeros(n, self.group_dim);
        for (j, generator) in self.generators.iter().enumerate() {
            m.set_column(j, &generator.eval_at(coords)?);
        }
        Ok(m)
    }

    /// `Phi_g(m)` as a canonical (wrapped) point.
    pub fn act(&self, params: &[f64], m: &Point) -> Result<Point, SymmetryError> {
        let raw = self.act_raw(params, m.coords())?;
        Ok(Point::new(self.chart.clone(), raw)?)
    }

    /// `Phi_g` on raw coordinates, without wrapping.
    pub fn act_raw(&self, params: &[f64], coords: &[f64]) -> Result<Vec<f64>, SymmetryError> {
        if params.len() != self.group_dim {
            return Err(SymmetryError::BadShape(format!(
                "expected {} group parameters, found {}",
                self.group_dim,
                params.len()
            )));
        }
        let mut env = coords.to_vec();
        env.extend_from_slice(params);
        self.maps
            .iter()
            .map(|f| f.eval_at(&env).map_err(SymmetryError::from))
            .collect()
    }

    /// Image and Jacobian with respect to the chart coordinates (parameters
    /// held fixed), by one dual pass through the map expressions.
    pub fn act_with_jacobian(
        &self,
        params: &[f64],
        coords: &[f64],
    ) -> Result<(Vec<f64>, DMatrix<f64>), SymmetryError> {
        let n = self.chart.dim();
        let width = n + self.group_dim;
        let mut env: Vec<Dual<f64>> = Vec::with_capacity(width);
        for (i, &x) in coords.iter().enumerate() {
            env.push(Dual::variable(x, i, width));
        }
        for &p in params {
            env.push(Dual::constant(p, width));
        }
        let mut image = Vec::with_capacity(n);
        let mut jac = DMatrix::zeros(n, n);
        for (row, map) in self.maps.iter().enumerate() {
            let out = map.eval_scalar::<Dual<f64>>(&env)?;
            image.push(out.value);
            for col in 0..n {
                jac[(row, col)] = out.partials.get(col).copied().unwrap_or(0.0);
            }
        }
        Ok((image, jac))
    }

    /// Max wrapped distance `|Phi_0(m) - m|` over the plan.
    pub fn identity_residual(&self, plan: &SamplingPlan) -> Result<f64, SymmetryError> {
        let zero = vec![0.0; self.group_dim];
        let mut worst = 0.0f64;
        for coords in plan.points() {
            let image = self.act_raw(&zero, &coords)?;
            let dist = self.chart.wrapped_distance(&image, &coords);
            worst = worst.max(dist);
        }
        Ok(worst)
    }

    /// Max residual between each generator and the central finite
    /// difference of its one-parameter finite map at t = 0.
    pub fn generator_residual(&self, plan: &SamplingPlan) -> Result<f64, SymmetryError> {
        let h = tolerances::FD_STEP;
        let mut worst = 0.0f64;
        for coords in plan.points() {
            for (i, generator) in self.generators.iter().enumerate() {
                let mut plus = vec![0.0; self.group_dim];
                let mut minus = vec![0.0; self.group_dim];
                plus[i] = h;
                minus[i] = -h;
                let fwd = self.act_raw(&plus, &coords)?;
                let bwd = self.act_raw(&minus, &coords)?;
                let gen = generator.eval_at(&coords)?;
                for j in 0..self.chart.dim() {
                    let fd = (fwd[j] - bwd[j]) / (2.0 * h);
                    worst = worst.max((fd - gen[j]).abs());
                }
            }
        }
        Ok(worst)
    }

    /// Max over sampled `(g, m)` of `|f(Phi_g m) - f(m)|`.
    pub fn check_invariance(
        &self,
        f: &ScalarField,
        plan: &SamplingPlan,
    ) -> Result<f64, SymmetryError> {
        let params = plan.group_params();
        let results = par::map(plan.points(), |coords| -> Result<f64, SymmetryError> {
            let base = f.eval_at(&coords)?;
            let mut worst = 0.0f64;
            for g in &params {
                let image = self.act_raw(g, &coords)?;
                let image = Point::new(self.chart.clone(), image)?;
                worst = worst.max((f.eval(&image)? - base).abs());
            }
            Ok(worst)
        });
        let mut worst = 0.0f64;
        for r in results {
            worst = worst.max(r?);
        }
        Ok(worst)
    }

    /// Max over sampled `(g, m)` and probe pairs `(f, h)` of
    /// `|{f o Phi_g, h o Phi_g}(m) - {f, h}(Phi_g m)|`, the composition
    /// differentiated by the chain rule through the finite map.
    pub fn check_canonical(
        &self,
        structure: &PoissonStructure,
        plan: &SamplingPlan,
    ) -> Result<f64, SymmetryError> {
        let probes = probe_fields(&self.chart);
        let params = plan.group_params();
        let results = par::map(plan.points(), |coords| -> Result<f64, SymmetryError> {
            let mut worst = 0.0f64;
            let b_m = structure.evaluate(&coords)?;
            for g in &params {
                let (image, jac) = self.act_with_jacobian(g, &coords)?;
                let b_image = structure.evaluate(&image)?;
                // Gradients of every probe at the image point.
                let grads: Vec<DVector<f64>> = probes
                    .iter()
                    .map(|p| {
                        p.value_and_gradient(&image)
                            .map(|(_, g)| DVector::from_vec(g))
                    })
                    .collect::<Result<_, _>>()?;
                let pulled: Vec<DVector<f64>> =
                    grads.iter().map(|g| jac.transpose() * g).collect();
                for (fi, gf) in grads.iter().enumerate() {
                    for (hi, gh) in grads.iter().enumerate().skip(fi + 1) {
                        let lhs = (pulled[fi].transpose() * &b_m * &pulled[hi])[(0, 0)];
                        let rhs = (gf.transpose() * &b_image * gh)[(0, 0)];
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
            }
            Ok(worst)
        });
        let mut worst = 0.0f64;
        for r in results {
            worst = worst.max(r?);
        }
        Ok(worst)
    }

    /// Max wrapped distance between `act(g1, act(g2, m))` and
    /// `act(g1 + g2, m)`; only meaningful for abelian-flagged actions.
    pub fn abelian_residual(&self, plan: &SamplingPlan) -> Result<f64, SymmetryError> {
        let params = plan.group_params();
        let mut worst = 0.0f64;
        for coords in plan.points().into_iter().take(32) {
            let m = Point::new(self.chart.clone(), coords)?;
            for g1 in params.iter().take(8) {
                for g2 in params.iter().take(8) {
                    let two_step = self.act(g1, &self.act(g2, &m)?)?;
                    let sum: Vec<f64> =
                        g1.iter().zip(g2).map(|(a, b)| a + b).collect();
                    let one_step = self.act(&sum, &m)?;
                    worst = worst.max(two_step.distance_to(&one_step));
                }
            }
        }
        Ok(worst)
    }

    /// Indices of sampled group parameters that fix `m` to within `tol`.
    /// For a free action only parameters near zero qualify.
    pub fn stabilizer_profile(
        &self,
        m: &Point,
        plan: &SamplingPlan,
        tol: f64,
    ) -> Result<Vec<usize>, SymmetryError> {
        let mut fixed = Vec::new();
        for (idx, g) in plan.group_params().iter().enumerate() {
            let image = self.act(g, m)?;
            if image.distance_to(m) < tol {
                fixed.push(idx);
            }
        }
        Ok(fixed)
    }
}

fn extended_chart(chart: &Arc<ChartSpec>, k: usize) -> Result<Arc<ChartSpec>, SymmetryError> {
    let mut names = chart.names().to_vec();
    names.extend(param_names(k));
    let mut periods = chart.periods().to_vec();
    periods.extend(std::iter::repeat_n(None, k));
    ChartSpec::new(names, periods).map_err(SymmetryError::from)
}

/// Scalar fields asserted to generate the G-invariant functions pointwise.
#[derive(Debug, Clone)]
pub struct InvariantFamily {
    members: Vec<ScalarField>,
    provenance: String,
}

impl InvariantFamily {
    pub fn new(members: Vec<ScalarField>, provenance: impl Into<String>) -> Self {
        InvariantFamily {
            members,
            provenance: provenance.into(),
        }
    }

    pub fn parse(
        chart: &Arc<ChartSpec>,
        sources: &[String],
        provenance: impl Into<String>,
    ) -> Result<Self, GeometryError> {
        let members = sources
            .iter()
            .map(|s| ScalarField::parse(chart, s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(InvariantFamily::new(members, provenance))
    }

    pub fn members(&self) -> &[ScalarField] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Per-member max invariance violation over the plan.
    pub fn invariance_violations(
        &self,
        action: &GroupAction,
        plan: &SamplingPlan,
    ) -> Result<Vec<f64>, SymmetryError> {
        self.members
            .iter()
            .map(|f| action.check_invariance(f, plan))
            .collect()
    }
}

#[cfg(test)]
mod tests;
