//! Scalar fields, vector fields, and the Poisson structure.
//!
//! Sign convention, fixed globally: `{f,g} = (grad f)^T B (grad g)` and
//! `X_f = B grad f`, so the derivative of `g` along `X_f` is
//! `X_f[g] = {g,f}`. A structure given symplectically stores `B = omega^-1`
//! (the literal matrix inverse), which keeps the torus examples consistent
//! with the same convention.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::{ChartError, ChartSpec, Point};
use crate::expr::{eval, eval_gradient, eval_hessian, Compiled, Dual, EvalError, Expr, ExprError, Scalar};

#[derive(Debug, Clone, thiserror::Error)]
pub enum GeometryError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("in `{source_text}`: {err}")]
    Eval { source_text: String, err: EvalError },
    #[error("expected a {expected}x{expected} matrix of expressions, found row of length {found}")]
    NotSquare { expected: usize, found: usize },
    #[error("tensor is not antisymmetric: |B[{row}][{col}] + B[{col}][{row}]| = {residual:.3e} at {point:?}")]
    NotAntisymmetric {
        row: usize,
        col: usize,
        residual: f64,
        point: Vec<f64>,
    },
    #[error("symplectic matrix is singular at {point:?}")]
    SingularOmega { point: Vec<f64> },
    #[error("`{0}` and `{1}` live on different charts")]
    ChartMismatch(String, String),
}

fn eval_err(source_text: &str, err: EvalError) -> GeometryError {
    GeometryError::Eval {
        source_text: source_text.to_string(),
        err,
    }
}

/// A smooth function on the chart: parsed source plus its compiled form.
/// Immutable after construction; evaluation is reentrant.
#[derive(Debug, Clone)]
pub struct ScalarField {
    chart: Arc<ChartSpec>,
    source: String,
    expr: Expr,
    compiled: Compiled,
}

impl ScalarField {
    pub fn parse(chart: &Arc<ChartSpec>, source: &str) -> Result<Self, GeometryError> {
        let expr = Expr::parse(source)?;
        let compiled = expr.compile(chart.names())?;
        Ok(ScalarField {
            chart: chart.clone(),
            source: source.to_string(),
            expr,
            compiled,
        })
    }

    /// Builds from a tree; the stored source is the pretty-printed form, so
    /// domain-error spans are only meaningful for parsed fields.
    pub fn from_expr(chart: &Arc<ChartSpec>, expr: Expr) -> Result<Self, GeometryError> {
        let compiled = expr.compile(chart.names())?;
        Ok(ScalarField {
            chart: chart.clone(),
            source: expr.pretty(),
            expr,
            compiled,
        })
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn is_constant(&self) -> bool {
        self.expr.is_constant()
    }

    pub fn eval(&self, point: &Point) -> Result<f64, GeometryError> {
        self.eval_at(point.coords())
    }

    /// Evaluation at raw coordinates (not necessarily canonical); flow
    /// integration and universal-cover tracking use this form.
    pub fn eval_at(&self, coords: &[f64]) -> Result<f64, GeometryError> {
        eval::<f64>(&self.compiled, coords).map_err(|e| eval_err(&self.source, e))
    }

    pub fn gradient(&self, point: &Point) -> Result<Vec<f64>, GeometryError> {
        Ok(self.value_and_gradient(point.coords())?.1)
    }

    pub fn value_and_gradient(&self, coords: &[f64]) -> Result<(f64, Vec<f64>), GeometryError> {
        eval_gradient(&self.compiled, coords).map_err(|e| eval_err(&self.source, e))
    }

    /// Value, gradient, and Hessian in one nested-dual pass.
    pub fn with_hessian(
        &self,
        coords: &[f64],
    ) -> Result<crate::expr::HessianOutput, GeometryError> {
        eval_hessian(&self.compiled, coords).map_err(|e| eval_err(&self.source, e))
    }

    pub(crate) fn eval_scalar<S: Scalar>(&self, env: &[S]) -> Result<S, GeometryError> {
        eval(&self.compiled, env).map_err(|e| eval_err(&self.source, e))
    }
}

/// How the Poisson tensor was specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Given,
    InvertedFromSymplectic,
}

#[derive(Debug)]
enum Entries {
    /// Row-major dim x dim matrix of expressions for B itself.
    Tensor(Vec<ScalarField>),
    /// Row-major expressions for omega; B(m) = omega(m)^-1 pointwise.
    InverseOfSymplectic(Vec<ScalarField>),
}

#[derive(Debug)]
struct PoissonInner {
    chart: Arc<ChartSpec>,
    entries: Entries,
    provenance: Provenance,
}

/// The bivector B(m) as a matrix-valued field; houses the bracket.
#[derive(Debug, Clone)]
pub struct PoissonStructure {
    inner: Arc<PoissonInner>,
}

impl PoissonStructure {
    /// Builds B from expression sources. Antisymmetry is spot-checked at
    /// eight sampled points on construction; the statistical structure
    /// checks re-verify it over a full plan.
    pub fn from_tensor(
        chart: &Arc<ChartSpec>,
        rows: &[Vec<String>],
    ) -> Result<Self, GeometryError> {
        let entries = parse_matrix(chart, rows)?;
        let out = PoissonStructure {
            inner: Arc::new(PoissonInner {
                chart: chart.clone(),
                entries: Entries::Tensor(entries),
                provenance: Provenance::Given,
            }),
        };
        out.spot_check_antisymmetry()?;
        Ok(out)
    }

    /// Builds B = omega^-1. Constant omega is inverted once and stored as
    /// literal entries; otherwise the inverse is taken pointwise at each
    /// evaluation.
    pub fn from_symplectic(
        chart: &Arc<ChartSpec>,
        rows: &[Vec<String>],
    ) -> Result<Self, GeometryError> {
        let omega = parse_matrix(chart, rows)?;
        let n = chart.dim();
        let constant = omega.iter().all(|f| f.is_constant());
        let entries = if constant {
            let origin = vec![0.0; n];
            let values: Vec<f64> = omega
                .iter()
                .map(|f| f.eval_at(&origin))
                .collect::<Result<_, _>>()?;
            let m = DMatrix::from_row_slice(n, n, &values);
            let inv = m.try_inverse().ok_or(GeometryError::SingularOmega {
                point: origin.clone(),
            })?;
            let fields = inv
                .row_iter()
                .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
                .map(|v| {
                    let source = format!("{:?}", v);
                    ScalarField::parse(chart, &source)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Entries::Tensor(fields)
        } else {
            Entries::InverseOfSymplectic(omega)
        };
        let out = PoissonStructure {
            inner: Arc::new(PoissonInner {
                chart: chart.clone(),
                entries,
                provenance: Provenance::InvertedFromSymplectic,
            }),
        };
        out.spot_check_antisymmetry()?;
        Ok(out)
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.inner.chart
    }

    pub fn dim(&self) -> usize {
        self.inner.chart.dim()
    }

    pub fn provenance(&self) -> Provenance {
        self.inner.provenance
    }

    /// True when every entry of the stored representation is a constant.
    pub fn is_constant(&self) -> bool {
        let entries = match &self.inner.entries {
            Entries::Tensor(e) | Entries::InverseOfSymplectic(e) => e,
        };
        entries.iter().all(|f| f.is_constant())
    }

    /// B(m) as a plain matrix.
    pub fn evaluate(&self, coords: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let n = self.dim();
        let env = coords.to_vec();
        let values = self.entries_scalar::<f64>(&env, coords)?;
        Ok(DMatrix::from_row_slice(n, n, &values))
    }

    /// B(m) entries (row-major) over any scalar; duals give entry gradients,
    /// with the inverse-of-omega representation differentiated through a
    /// generic Gauss-Jordan elimination.
    pub(crate) fn entries_scalar<S: Scalar>(
        &self,
        env: &[S],
        at: &[f64],
    ) -> Result<Vec<S>, GeometryError> {
        let n = self.dim();
        match &self.inner.entries {
            Entries::Tensor(fields) => fields.iter().map(|f| f.eval_scalar(env)).collect(),
            Entries::InverseOfSymplectic(fields) => {
                let omega: Vec<S> = fields
                    .iter()
                    .map(|f| f.eval_scalar(env))
                    .collect::<Result<_, _>>()?;
                invert_scalar_matrix(omega, n).ok_or(GeometryError::SingularOmega {
                    point: at.to_vec(),
                })
            }
        }
    }

    /// `{f,g}(m) = (grad f)^T B(m) (grad g)`.
    pub fn bracket(
        &self,
        f: &ScalarField,
        g: &ScalarField,
        point: &Point,
    ) -> Result<f64, GeometryError> {
        self.bracket_at(f, g, point.coords())
    }

    pub fn bracket_at(
        &self,
        f: &ScalarField,
        g: &ScalarField,
        coords: &[f64],
    ) -> Result<f64, GeometryError> {
        let n = self.dim();
        let (_, gf) = f.value_and_gradient(coords)?;
        let (_, gg) = g.value_and_gradient(coords)?;
        let b = self.evaluate(coords)?;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += gf[i] * b[(i, j)] * gg[j];
            }
        }
        Ok(acc)
    }

    /// Value and gradient of `m -> {f,g}(m)`, from nested-dual second
    /// derivatives of `f` and `g` and first derivatives of the entries.
    pub fn bracket_with_gradient(
        &self,
        f: &ScalarField,
        g: &ScalarField,
        coords: &[f64],
    ) -> Result<(f64, Vec<f64>), GeometryError> {
        let n = self.dim();
        let (_, gf, hf) = f.with_hessian(coords)?;
        let (_, gg, hg) = g.with_hessian(coords)?;
        let env: Vec<Dual<f64>> = coords
            .iter()
            .enumerate()
            .map(|(i, &x)| Dual::variable(x, i, n))
            .collect();
        let b_dual = self.entries_scalar::<Dual<f64>>(&env, coords)?;
        let b = |i: usize, j: usize| -> &Dual<f64> { &b_dual[i * n + j] };

        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let bij = b(i, j);
                let bv = bij.value;
                if bv == 0.0 && bij.partials.iter().all(|&p| p == 0.0) {
                    continue;
                }
                value += bv * gf[i] * gg[j];
                for k in 0..n {
                    let db = bij.partials.get(k).copied().unwrap_or(0.0);
                    grad[k] += db * gf[i] * gg[j]
                        + bv * hf[i][k] * gg[j]
                        + bv * gf[i] * hg[j][k];
                }
            }
        }
        Ok((value, grad))
    }

    /// The Hamiltonian vector field `X_f = B grad f`.
    pub fn hamiltonian_vf(&self, f: ScalarField) -> VectorField {
        VectorField {
            chart: self.inner.chart.clone(),
            kind: VectorFieldKind::Hamiltonian {
                structure: self.clone(),
                energy: f,
            },
        }
    }

    /// `X_f(m)` without building a `VectorField`.
    pub fn hamiltonian_at(
        &self,
        f: &ScalarField,
        coords: &[f64],
    ) -> Result<DVector<f64>, GeometryError> {
        let (_, grad) = f.value_and_gradient(coords)?;
        let b = self.evaluate(coords)?;
        Ok(b * DVector::from_vec(grad))
    }

    /// `{{f,g},h} + {{g,h},f} + {{h,f},g}` at `m`. Vanishes identically for
    /// a Poisson tensor; its magnitude is the evidence that the bracket
    /// satisfies Jacobi (and hence that a reduced two-form will be closed).
    pub fn jacobi_defect(
        &self,
        f: &ScalarField,
        g: &ScalarField,
        h: &ScalarField,
        point: &Point,
    ) -> Result<f64, GeometryError> {
        let coords = point.coords();
        let mut total = 0.0;
        for (a, b, c) in [(f, g, h), (g, h, f), (h, f, g)] {
            let (_, grad_inner) = self.bracket_with_gradient(a, b, coords)?;
            let (_, grad_c) = c.value_and_gradient(coords)?;
            let bm = self.evaluate(coords)?;
            let n = self.dim();
            for i in 0..n {
                for j in 0..n {
                    total += grad_inner[i] * bm[(i, j)] * grad_c[j];
                }
            }
        }
        Ok(total)
    }

    fn spot_check_antisymmetry(&self) -> Result<(), GeometryError> {
        let plan = crate::sampling::SamplingPlan::for_chart(&self.inner.chart, 0).with_points(8);
        for coords in plan.points() {
            self.antisymmetry_at(&coords)?;
        }
        Ok(())
    }

    /// Max |B + B^T| entry at one point; errors when above the tolerance
    /// for the entry class (constant vs field).
    pub fn antisymmetry_at(&self, coords: &[f64]) -> Result<f64, GeometryError> {
        let tol = if self.is_constant() {
            crate::tolerances::ANTISYM_CONST
        } else {
            crate::tolerances::ANTISYM_FIELD
        };
        let b = self.evaluate(coords)?;
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let residual = (b[(i, j)] + b[(j, i)]).abs();
                if residual > tol {
                    return Err(GeometryError::NotAntisymmetric {
                        row: i,
                        col: j,
                        residual,
                        point: coords.to_vec(),
                    });
                }
                worst = worst.max(residual);
            }
        }
        Ok(worst)
    }
}

fn parse_matrix(
    chart: &Arc<ChartSpec>,
    rows: &[Vec<String>],
) -> Result<Vec<ScalarField>, GeometryError> {
    let n = chart.dim();
    if rows.len() != n {
        return Err(GeometryError::NotSquare {
            expected: n,
            found: rows.len(),
        });
    }
    let mut out = Vec::with_capacity(n * n);
    for row in rows {
        if row.len() != n {
            return Err(GeometryError::NotSquare {
                expected: n,
                found: row.len(),
            });
        }
        for src in row {
            out.push(ScalarField::parse(chart, src)?);
        }
    }
    Ok(out)
}

/// Gauss-Jordan inverse of a row-major n x n matrix over any scalar,
/// pivoting on primal magnitude. Returns `None` on a (numerically) singular
/// matrix.
fn invert_scalar_matrix<S: Scalar>(mut a: Vec<S>, n: usize) -> Option<Vec<S>> {
    let mut inv: Vec<S> = (0..n * n)
        .map(|idx| S::from_f64(if idx % (n + 1) == 0 { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .primal()
                    .abs()
                    .total_cmp(&a[r2 * n + col].primal().abs())
            })
            .unwrap();
        if a[pivot_row * n + col].primal().abs() < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
                inv.swap(col * n + j, pivot_row * n + j);
            }
        }
        let pivot = a[col * n + col].clone();
        for j in 0..n {
            a[col * n + j] = a[col * n + j].div(&pivot);
            inv[col * n + j] = inv[col * n + j].div(&pivot);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * n + col].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..n {
                a[r * n + j] = a[r * n + j].sub(&factor.mul(&a[col * n + j]));
                inv[r * n + j] = inv[r * n + j].sub(&factor.mul(&inv[col * n + j]));
            }
        }
    }
    Some(inv)
}

#[derive(Debug, Clone)]
enum VectorFieldKind {
    Components(Vec<ScalarField>),
    Hamiltonian {
        structure: PoissonStructure,
        energy: ScalarField,
    },
}

/// A vector field on the chart: explicit components, or `X_f` derived from
/// a Poisson structure and a Hamiltonian.
#[derive(Debug, Clone)]
pub struct VectorField {
    chart: Arc<ChartSpec>,
    kind: VectorFieldKind,
}

impl VectorField {
    pub fn from_components(
        chart: &Arc<ChartSpec>,
        sources: &[String],
    ) -> Result<Self, GeometryError> {
        if sources.len() != chart.dim() {
            return Err(GeometryError::NotSquare {
                expected: chart.dim(),
                found: sources.len(),
            });
        }
        let components = sources
            .iter()
            .map(|s| ScalarField::parse(chart, s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VectorField {
            chart: chart.clone(),
            kind: VectorFieldKind::Components(components),
        })
    }

    pub fn from_fields(chart: &Arc<ChartSpec>, components: Vec<ScalarField>) -> Self {
        VectorField {
            chart: chart.clone(),
            kind: VectorFieldKind::Components(components),
        }
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    /// The Hamiltonian when this field is an `X_f`.
    pub fn energy(&self) -> Option<&ScalarField> {
        match &self.kind {
            VectorFieldKind::Hamiltonian { energy, .. } => Some(energy),
            VectorFieldKind::Components(_) => None,
        }
    }

    pub fn eval(&self, point: &Point) -> Result<DVector<f64>, GeometryError> {
        self.eval_at(point.coords())
    }

    pub fn eval_at(&self, coords: &[f64]) -> Result<DVector<f64>, GeometryError> {
        match &self.kind {
            VectorFieldKind::Components(components) => {
                let values = components
                    .iter()
                    .map(|c| c.eval_at(coords))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(DVector::from_vec(values))
            }
            VectorFieldKind::Hamiltonian { structure, energy } => {
                structure.hamiltonian_at(energy, coords)
            }
        }
    }
}

#[cfg(test)]
mod tests;

/// Fixed probe fields for statistical structure checks: every coordinate,
/// squares and pairwise products on linear axes, sines/cosines and pairwise
/// angle differences on periodic ones.
pub fn probe_fields(chart: &Arc<ChartSpec>) -> Vec<ScalarField> {
    let mut sources = Vec::new();
    let names = chart.names();
    for (i, name) in names.iter().enumerate() {
        sources.push(name.clone());
        if chart.is_periodic(i) {
            sources.push(format!("sin({name})"));
            sources.push(format!("cos({name})"));
        } else {
            sources.push(format!("{name}^2"));
        }
    }
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            match (chart.is_periodic(i), chart.is_periodic(j)) {
                (true, true) => sources.push(format!("sin({}-{})", names[i], names[j])),
                (false, false) => sources.push(format!("{}*{}", names[i], names[j])),
                _ => sources.push(format!("{}*sin({})", names[i], names[j])),
            }
        }
    }
    sources
        .iter()
        .map(|s| ScalarField::parse(chart, s).expect("probe fields parse"))
        .collect()
}

/// Max |Jacobi defect| over `n_triples` distinct probe triples at each of
/// the provided points. Returns the worst case and where it happened.
pub struct JacobiReport {
    pub max_defect: f64,
    pub worst_triple: [String; 3],
    pub worst_point: Vec<f64>,
    pub triples: usize,
    pub points: usize,
}

pub fn jacobi_check(
    structure: &PoissonStructure,
    points: &[Vec<f64>],
    n_triples: usize,
    rng_seed: u64,
) -> Result<JacobiReport, GeometryError> {
    let pool = probe_fields(structure.chart());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let indices: Vec<usize> = (0..pool.len()).collect();
    let mut report = JacobiReport {
        max_defect: 0.0,
        worst_triple: Default::default(),
        worst_point: Vec::new(),
        triples: n_triples,
        points: points.len(),
    };
    for _ in 0..n_triples {
        let pick: Vec<usize> = indices
            .choose_multiple(&mut rng, 3)
            .copied()
            .collect();
        let (f, g, h) = (&pool[pick[0]], &pool[pick[1]], &pool[pick[2]]);
        for coords in points {
            let point = Point::new(structure.chart().clone(), coords.clone())?;
            let defect = structure.jacobi_defect(f, g, h, &point)?.abs();
            if defect > report.max_defect {
                report.max_defect = defect;
                report.worst_triple = [
                    f.source().to_string(),
                    g.source().to_string(),
                    h.source().to_string(),
                ];
                report.worst_point = coords.clone();
            }
        }
    }
    Ok(report)
}
