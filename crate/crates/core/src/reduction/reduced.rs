//! Assembly and certification of the reduced symplectic form.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chart::{ChartSpec, Point};
use crate::expr::{Dual, Expr};
use crate::geometry::{GeometryError, PoissonStructure, ScalarField};
use crate::linalg::{condition_ratio, least_squares, pivoted_selection};
use crate::symmetry::{GroupAction, InvariantFamily};
use crate::tolerances;

use super::{distribution_at, orbit_subspace, IsotropyAlgebra, ReductionError};

/// An analytic parameterization of the symplectic leaf containing a fiber:
/// parameter names, an embedding into the chart, the inverse on the leaf,
/// and the leaf symplectic form in parameter coordinates.
///
/// Embedding and form expressions may reference the fiber's seed point as
/// constants named `<coordinate>0` (for the plane `x+z=c`, the embedding
/// writes `c` as `x0 + z0`).
#[derive(Debug, Clone)]
pub struct LeafChart {
    param_names: Vec<String>,
    embedding: Vec<ScalarField>,
    params_of: Vec<ScalarField>,
    form: Vec<ScalarField>,
}

impl LeafChart {
    pub fn new(
        chart: &Arc<ChartSpec>,
        param_names: &[String],
        embedding: &[String],
        params_of: &[String],
        form: &[Vec<String>],
    ) -> Result<Self, ReductionError> {
        let p = param_names.len();
        let n = chart.dim();
        if embedding.len() != n {
            return Err(bad_chart(format!(
                "embedding needs {n} expressions, found {}",
                embedding.len()
            )));
        }
        if params_of.len() != p {
            return Err(bad_chart(format!(
                "params_of needs {p} expressions, found {}",
                params_of.len()
            )));
        }
        if form.len() != p || form.iter().any(|row| row.len() != p) {
            return Err(bad_chart(format!("leaf form must be a {p}x{p} matrix")));
        }
        // Embedding and form expressions see the parameters plus the seed
        // coordinates as `<name>0` constants.
        let mut embed_names = param_names.to_vec();
        embed_names.extend(chart.names().iter().map(|s| format!("{s}0")));
        let embed_chart = ChartSpec::new(embed_names, vec![None; p + n])
            .map_err(|e| bad_chart(e.to_string()))?;
        let embedding = embedding
            .iter()
            .map(|s| ScalarField::parse(&embed_chart, s))
            .collect::<Result<Vec<_>, _>>()?;
        let form = form
            .iter()
            .flatten()
            .map(|s| ScalarField::parse(&embed_chart, s))
            .collect::<Result<Vec<_>, _>>()?;
        let params_of = params_of
            .iter()
            .map(|s| ScalarField::parse(chart, s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LeafChart {
            param_names: param_names.to_vec(),
            embedding,
            params_of,
            form,
        })
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn param_dim(&self) -> usize {
        self.param_names.len()
    }

    /// Leaf parameters of a chart point, via the declared inverse.
    pub fn params_at(&self, m: &Point) -> Result<Vec<f64>, GeometryError> {
        self.params_of.iter().map(|f| f.eval(m)).collect()
    }

    /// Chart coordinates of the leaf point with the given parameters.
    pub fn embed(&self, params: &[f64], seed: &Point) -> Result<Vec<f64>, GeometryError> {
        let env = self.embed_env(params, seed);
        self.embedding.iter().map(|f| f.eval_at(&env)).collect()
    }

    /// Columns are the embedding derivatives along each parameter.
    pub fn tangent_frame(
        &self,
        params: &[f64],
        seed: &Point,
    ) -> Result<DMatrix<f64>, GeometryError> {
        let p = self.param_dim();
        let env = self.embed_env(params, seed);
        let width = env.len();
        let dual_env: Vec<Dual<f64>> = env
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i < p {
                    Dual::variable(x, i, width)
                } else {
                    Dual::constant(x, width)
                }
            })
            .collect();
        let n = self.embedding.len();
        let mut frame = DMatrix::zeros(n, p);
        for (row, f) in self.embedding.iter().enumerate() {
            let out = f.eval_scalar::<Dual<f64>>(&dual_env)?;
            for col in 0..p {
                frame[(row, col)] = out.partials.get(col).copied().unwrap_or(0.0);
            }
        }
        Ok(frame)
    }

    /// The leaf form matrix at the given parameters.
    pub fn form_matrix(&self, params: &[f64], seed: &Point) -> Result<DMatrix<f64>, GeometryError> {
        let p = self.param_dim();
        let env = self.embed_env(params, seed);
        let mut out = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                out[(i, j)] = self.form[i * p + j].eval_at(&env)?;
            }
        }
        Ok(out)
    }

    /// Max drift of the monitors between embedded sample parameters and the
    /// seed; nonzero drift means the embedding leaves the fiber's leaf.
    pub fn constraint_residual(
        &self,
        seed: &Point,
        monitors: &[ScalarField],
        n_samples: usize,
    ) -> Result<f64, ReductionError> {
        if monitors.is_empty() {
            return Ok(0.0);
        }
        let boxes = vec![(-1.0, 1.0); self.param_dim()];
        let plan = crate::sampling::SamplingPlan {
            point_box: boxes,
            n_points: n_samples,
            group_box: Vec::new(),
            n_group: 0,
        };
        let base: Vec<f64> = monitors
            .iter()
            .map(|c| c.eval(seed))
            .collect::<Result<_, _>>()?;
        let mut worst = 0.0f64;
        for params in plan.points() {
            let image = self.embed(&params, seed)?;
            let image = Point::new(seed.chart().clone(), image)?;
            for (c, b) in monitors.iter().zip(&base) {
                worst = worst.max((c.eval(&image)? - b).abs());
            }
        }
        Ok(worst)
    }

    fn embed_env(&self, params: &[f64], seed: &Point) -> Vec<f64> {
        let mut env = params.to_vec();
        env.extend_from_slice(seed.coords());
        env
    }
}

fn bad_chart(what: String) -> ReductionError {
    ReductionError::LeafChartInconsistent {
        what,
        residual: f64::NAN,
    }
}

/// The sampled reduced form at one base point, with every certification
/// residual the verdicts rest on.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedFormReport {
    pub base_point: Vec<f64>,
    pub leaf_rank: usize,
    pub orbit_dim: usize,
    pub reduced_dim: usize,
    /// The invariant functions realizing the chosen complement directions.
    pub selected_functions: Vec<String>,
    pub selection_pivots: Vec<f64>,
    /// Omega[a][b] = {f_a, f_b}(m).
    pub omega: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub nondegenerate: bool,
    pub antisymmetry_residual: f64,
    pub even_dimension: bool,
    /// Max change of any Omega entry under representative substitution.
    pub well_definedness_residual: f64,
    pub substitutions_tested: usize,
    /// Max |Omega_ab - omega_L(X_a, X_b)| against the leaf chart, when one
    /// is supplied.
    pub leaf_form_residual: Option<f64>,
    pub leafchart_point_residual: Option<f64>,
    pub leafchart_tangency_residual: Option<f64>,
}

/// Builds and certifies the reduced form at `m`:
/// a pivoted complement of the orbit directions inside the distribution
/// frame fixes representatives `f_a`; `Omega_ab = {f_a, f_b}(m)`;
/// nondegeneracy is judged by the relative singular-value floor;
/// well-definedness is probed by shifting representatives along invariant
/// functions whose Hamiltonian fields point into the orbit directions (and
/// along declared Casimirs); a supplied leaf chart cross-checks `Omega`
/// against the leaf symplectic form.
pub fn reduced_form(
    m: &Point,
    iso: &IsotropyAlgebra,
    action: &GroupAction,
    family: &InvariantFamily,
    structure: &PoissonStructure,
    leafchart: Option<&LeafChart>,
    casimirs: &[ScalarField],
) -> Result<ReducedFormReport, ReductionError> {
    let frame = distribution_at(m, family, structure)?;
    frame.require_well_conditioned()?;
    let rank = frame.rank();
    let orbit = orbit_subspace(m, iso, action)?;
    let orbit_dim = orbit.ncols();
    if orbit_dim > rank {
        return Err(ReductionError::ComplementSelection {
            needed: 0,
            found: rank,
        });
    }
    let reduced_dim = rank - orbit_dim;

    let (chosen, pivots) = pivoted_selection(&frame.generators, &orbit, reduced_dim);
    if chosen.len() < reduced_dim {
        return Err(ReductionError::ComplementSelection {
            needed: reduced_dim,
            found: chosen.len(),
        });
    }
    let selected: Vec<&ScalarField> = chosen.iter().map(|&i| &family.members()[i]).collect();

    let mut omega = DMatrix::zeros(reduced_dim, reduced_dim);
    for a in 0..reduced_dim {
        for b in 0..reduced_dim {
            omega[(a, b)] = structure.bracket(selected[a], selected[b], m)?;
        }
    }
    let antisymmetry_residual = (&omega + omega.transpose()).abs().max();
    let (sigma_min, sigma_max) = condition_ratio(&omega);
    let nondegenerate =
        reduced_dim == 0 || sigma_min > tolerances::NONDEGENERACY_REL * sigma_max;
    let mut singular_values: Vec<f64> = omega
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));

    // Representative shifts: invariant combinations realizing each orbit
    // direction as a Hamiltonian field, plus declared Casimirs.
    let mut shifts: Vec<Expr> = Vec::new();
    let family_exprs: Vec<Expr> = family.members().iter().map(|f| f.expr().clone()).collect();
    for j in 0..orbit_dim {
        let target = orbit.column(j).into_owned();
        let coeffs = least_squares(&frame.generators, &target);
        let realized = &frame.generators * &coeffs;
        let residual = (&realized - &target).norm();
        if residual > tolerances::ISOTROPY_RESIDUAL * 10.0 {
            return Err(ReductionError::ShiftConstruction {
                what: "orbit direction is not realizable inside the family span".into(),
                residual,
            });
        }
        shifts.push(Expr::linear_combination(coeffs.as_slice(), &family_exprs));
    }
    for casimir in casimirs {
        let xc = structure.hamiltonian_at(casimir, m.coords())?;
        if xc.norm() > 1e-6 {
            return Err(ReductionError::ShiftConstruction {
                what: format!(
                    "declared Casimir `{}` has a nonzero Hamiltonian field",
                    casimir.source()
                ),
                residual: xc.norm(),
            });
        }
        shifts.push(casimir.expr().clone());
    }

    let mut well_definedness_residual = 0.0f64;
    let mut substitutions_tested = 0usize;
    for a in 0..reduced_dim {
        for shift in &shifts {
            for lambda in [1.0, -1.0] {
                substitutions_tested += 1;
                let shifted = Expr::plus_scaled(selected[a].expr(), lambda, shift);
                let shifted = ScalarField::from_expr(structure.chart(), shifted)?;
                for b in 0..reduced_dim {
                    if b == a {
                        continue;
                    }
                    let row = structure.bracket(&shifted, selected[b], m)?;
                    let col = structure.bracket(selected[b], &shifted, m)?;
                    well_definedness_residual = well_definedness_residual
                        .max((row - omega[(a, b)]).abs())
                        .max((col - omega[(b, a)]).abs());
                }
            }
        }
    }

    let mut leaf_form_residual = None;
    let mut leafchart_point_residual = None;
    let mut leafchart_tangency_residual = None;
    if let Some(lc) = leafchart {
        let params = lc.params_at(m)?;
        let image = lc.embed(&params, m)?;
        let point_residual = m.chart().wrapped_distance(&image, m.coords());
        if point_residual > tolerances::LEAFCHART_CONSISTENCY {
            return Err(ReductionError::LeafChartInconsistent {
                what: "embedding(params_of(m)) does not return to m".into(),
                residual: point_residual,
            });
        }
        leafchart_point_residual = Some(point_residual);

        let tangent = lc.tangent_frame(&params, m)?;
        let mut coefficients: Vec<DVector<f64>> = Vec::with_capacity(reduced_dim);
        let mut tangency = 0.0f64;
        for &idx in &chosen {
            let x = frame.generators.column(idx).into_owned();
            let alpha = least_squares(&tangent, &x);
            tangency = tangency.max((&tangent * &alpha - &x).norm());
            coefficients.push(alpha);
        }
        if tangency > tolerances::LEAFCHART_CONSISTENCY {
            return Err(ReductionError::LeafChartInconsistent {
                what: "selected Hamiltonian fields are not tangent to the embedded leaf".into(),
                residual: tangency,
            });
        }
        leafchart_tangency_residual = Some(tangency);

        let lambda = lc.form_matrix(&params, m)?;
        let mut worst = 0.0f64;
        for a in 0..reduced_dim {
            for b in 0..reduced_dim {
                let pulled = (coefficients[a].transpose() * &lambda * &coefficients[b])[(0, 0)];
                worst = worst.max((omega[(a, b)] - pulled).abs());
            }
        }
        leaf_form_residual = Some(worst);
    }

    Ok(ReducedFormReport {
        base_point: m.coords().to_vec(),
        leaf_rank: rank,
        orbit_dim,
        reduced_dim,
        selected_functions: selected.iter().map(|f| f.source().to_string()).collect(),
        selection_pivots: pivots,
        omega: (0..reduced_dim)
            .map(|a| (0..reduced_dim).map(|b| omega[(a, b)]).collect())
            .collect(),
        singular_values,
        sigma_min,
        sigma_max,
        nondegenerate,
        antisymmetry_residual,
        even_dimension: reduced_dim % 2 == 0,
        well_definedness_residual,
        substitutions_tested,
        leaf_form_residual,
        leafchart_point_residual,
        leafchart_tangency_residual,
    })
}
