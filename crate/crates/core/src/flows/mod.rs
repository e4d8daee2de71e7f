//! Numerical integration of vector fields with conservation monitoring.
//!
//! The integrator state lives on the universal cover: periodic coordinates
//! accumulate without wrapping, which keeps the right-hand side smooth
//! across the seam and makes "distance to a line on the cover" queries
//! well-defined for the closure classifier. Stored trajectory points are
//! wrapped back to canonical chart coordinates after every accepted step.

use crate::chart::{ChartError, Point};
use crate::geometry::{GeometryError, ScalarField, VectorField};
use crate::tolerances;

#[derive(Debug, Clone, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("step size underflow at t = {t} (stiff or discontinuous field)")]
    StepUnderflow { t: f64 },
    #[error("exceeded {max} integration steps")]
    MaxStepsExceeded { max: usize },
    #[error("invalid flow specification: {0}")]
    BadSpec(String),
}

/// Integration method with its accuracy parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical fixed-step fourth-order Runge-Kutta.
    FixedRk4 { step: f64 },
    /// Dormand-Prince 5(4) with embedded error control.
    AdaptiveRk45 { abs_tol: f64, rel_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSettings {
    pub method: Method,
    pub max_steps: usize,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            method: Method::AdaptiveRk45 {
                abs_tol: tolerances::FLOW_TOL,
                rel_tol: tolerances::FLOW_TOL,
            },
            max_steps: tolerances::FLOW_MAX_STEPS,
        }
    }
}

impl FlowSettings {
    pub fn with_tolerance(tol: f64) -> Self {
        FlowSettings {
            method: Method::AdaptiveRk45 {
                abs_tol: tol,
                rel_tol: tol,
            },
            ..Default::default()
        }
    }
}

/// A vector field together with how long and how accurately to flow it.
#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub field: VectorField,
    pub duration: f64,
    pub settings: FlowSettings,
}

impl FlowSpec {
    pub fn new(
        field: VectorField,
        duration: f64,
        settings: FlowSettings,
    ) -> Result<Self, FlowError> {
        if !duration.is_finite() {
            return Err(FlowError::BadSpec("duration must be finite".into()));
        }
        if settings.max_steps == 0 {
            return Err(FlowError::BadSpec("max_steps must be positive".into()));
        }
        match settings.method {
            Method::FixedRk4 { step } if !(step.is_finite() && step > 0.0) => {
                return Err(FlowError::BadSpec("step must be positive".into()));
            }
            Method::AdaptiveRk45 { abs_tol, rel_tol }
                if !(abs_tol > 0.0 && rel_tol > 0.0) =>
            {
                return Err(FlowError::BadSpec("tolerances must be positive".into()));
            }
            _ => {}
        }
        Ok(FlowSpec {
            field,
            duration,
            settings,
        })
    }

    pub fn run(&self, seed: &Point) -> Result<Trajectory, FlowError> {
        integrate(&self.field, seed, self.duration, &self.settings)
    }
}

/// An integrated orbit: wrapped points for chart queries, cover coordinates
/// for unwrapped displacement queries. Immutable after return.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    points: Vec<Point>,
    cover: Vec<Vec<f64>>,
    accepted_steps: usize,
    rejected_steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Unwrapped coordinates along the orbit, same indexing as `points`.
    pub fn cover(&self) -> &[Vec<f64>] {
        &self.cover
    }

    pub fn endpoint(&self) -> &Point {
        self.points.last().expect("trajectory has a seed point")
    }

    pub fn endpoint_cover(&self) -> &[f64] {
        self.cover.last().expect("trajectory has a seed point")
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted_steps
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected_steps
    }

    /// Max drift `|f(point) - f(seed)|` per monitor field, evaluated at the
    /// wrapped points.
    pub fn max_drift(&self, fields: &[ScalarField]) -> Result<Vec<f64>, GeometryError> {
        let mut drifts = vec![0.0f64; fields.len()];
        if self.points.is_empty() {
            return Ok(drifts);
        }
        let base: Vec<f64> = fields
            .iter()
            .map(|f| f.eval(&self.points[0]))
            .collect::<Result<_, _>>()?;
        for p in &self.points[1..] {
            for (k, f) in fields.iter().enumerate() {
                let drift = (f.eval(p)? - base[k]).abs();
                drifts[k] = drifts[k].max(drift);
            }
        }
        Ok(drifts)
    }

    /// CSV with header `t,<coord names...>` over the wrapped points.
    pub fn to_csv(&self) -> String {
        let chart = self.points[0].chart();
        let mut out = String::from("t");
        for name in chart.names() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (t, p) in self.times.iter().zip(&self.points) {
            out.push_str(&format!("{:?}", t));
            for c in p.coords() {
                out.push_str(&format!(",{:?}", c));
            }
            out.push('\n');
        }
        out
    }
}

/// Max drift of each monitor along a trajectory; see `Trajectory::max_drift`.
pub fn monitor_conservation(
    trajectory: &Trajectory,
    fields: &[ScalarField],
) -> Result<Vec<f64>, GeometryError> {
    trajectory.max_drift(fields)
}

/// Flows `seed` along `field` for `duration` (negative integrates backward).
pub fn integrate(
    field: &VectorField,
    seed: &Point,
    duration: f64,
    settings: &FlowSettings,
) -> Result<Trajectory, FlowError> {
    if field.chart() != seed.chart() {
        return Err(GeometryError::ChartMismatch("field".into(), "seed".into()).into());
    }
    let chart = seed.chart().clone();
    let mut times = vec![0.0];
    let mut cover = vec![seed.coords().to_vec()];
    let mut points = vec![seed.clone()];
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    if duration != 0.0 {
        let mut y = seed.coords().to_vec();
        let mut t = 0.0f64;
        let sign = duration.signum();
        match settings.method {
            Method::FixedRk4 { step } => {
                let n = (duration.abs() / step).ceil().max(1.0) as usize;
                if n > settings.max_steps {
                    return Err(FlowError::MaxStepsExceeded {
                        max: settings.max_steps,
                    });
                }
                let h = duration / n as f64;
                for k in 0..n {
                    y = rk4_step(field, &y, h)?;
                    t = (k + 1) as f64 * h;
                    accepted += 1;
                    times.push(t);
                    cover.push(y.clone());
                    points.push(Point::new(chart.clone(), y.clone())?);
                }
            }
            Method::AdaptiveRk45 { abs_tol, rel_tol } => {
                let mut h = duration / 16.0;
                let mut steps = 0usize;
                while (duration - t) * sign > f64::EPSILON * duration.abs() {
                    steps += 1;
                    if steps > settings.max_steps {
                        return Err(FlowError::MaxStepsExceeded {
                            max: settings.max_steps,
                        });
                    }
                    if (t + h - duration) * sign > 0.0 {
                        h = duration - t;
                    }
                    if h.abs() < f64::EPSILON * 4.0 * t.abs().max(1.0) {
                        return Err(FlowError::StepUnderflow { t });
                    }
                    let (y_next, err_norm) = dopri_step(field, &y, h, abs_tol, rel_tol)?;
                    let factor = if err_norm == 0.0 {
                        5.0
                    } else {
                        (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if err_norm <= 1.0 {
                        t += h;
                        y = y_next;
                        accepted += 1;
                        times.push(t);
                        cover.push(y.clone());
                        points.push(Point::new(chart.clone(), y.clone())?);
                    } else {
                        rejected += 1;
                    }
                    h *= factor;
                }
            }
        }
    }

    Ok(Trajectory {
        times,
        points,
        cover,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

fn rk4_step(field: &VectorField, y: &[f64], h: f64) -> Result<Vec<f64>, FlowError> {
    let k1 = field.eval_at(y)?;
    let k2 = field.eval_at(&axpy(y, h / 2.0, k1.as_slice()))?;
    let k3 = field.eval_at(&axpy(y, h / 2.0, k2.as_slice()))?;
    let k4 = field.eval_at(&axpy(y, h, k3.as_slice()))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, &yi)| yi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(&yi, &ki)| yi + a * ki).collect()
}

/// One Dormand-Prince 5(4) step; returns the fifth-order update and the
/// scaled error norm (accept when <= 1).
fn dopri_step(
    field: &VectorField,
    y: &[f64],
    h: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(Vec<f64>, f64), FlowError> {
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // Fifth-order minus embedded fourth-order weights.
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let n = y.len();
    let k1 = field.eval_at(y)?;
    let k2 = field.eval_at(&stage(y, h, &[(A21, &k1)]))?;
    let k3 = field.eval_at(&stage(y, h, &[(A31, &k1), (A32, &k2)]))?;
    let k4 = field.eval_at(&stage(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = field.eval_at(&stage(
        y,
        h,
        &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
    ))?;
    let k6 = field.eval_at(&stage(
        y,
        h,
        &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ))?;
    let y5: Vec<f64> = (0..n)
        .map(|i| y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]))
        .collect();
    let k7 = field.eval_at(&y5)?;

    let mut sum_sq = 0.0;
    for i in 0..n {
        let err = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
        sum_sq += (err / scale) * (err / scale);
    }
    let err_norm = (sum_sq / n as f64).sqrt();
    Ok((y5, err_norm))
}

fn stage(y: &[f64], h: f64, terms: &[(f64, &nalgebra::DVector<f64>)]) -> Vec<f64> {
    y.iter()
        .enumerate()
        .map(|(i, &yi)| {
            yi + h * terms
                .iter()
                .map(|(a, k)| a * k[i])
                .sum::<f64>()
        })
        .collect()
}

/// Endpoint of a piecewise flow, on the chart and on the cover.
#[derive(Debug, Clone)]
pub struct FlowEndpoint {
    pub point: Point,
    pub cover: Vec<f64>,
    pub accepted_steps: usize,
}

/// Integrates each `(field, duration)` segment in order, continuing on the
/// universal cover.
pub fn compose_flows(
    segments: &[(VectorField, f64)],
    seed: &Point,
    settings: &FlowSettings,
) -> Result<FlowEndpoint, FlowError> {
    let chart = seed.chart().clone();
    let mut cover = seed.coords().to_vec();
    let mut accepted = 0;
    for (field, duration) in segments {
        let start = Point::new(chart.clone(), cover.clone())?;
        // Re-base the segment on the unwrapped coordinates so cover
        // displacement accumulates across segments.
        let trajectory = integrate_from_cover(field, &start, &cover, *duration, settings)?;
        accepted += trajectory.accepted_steps;
        cover = trajectory.endpoint_cover().to_vec();
    }
    Ok(FlowEndpoint {
        point: Point::new(chart, cover.clone())?,
        cover,
        accepted_steps: accepted,
    })
}

fn integrate_from_cover(
    field: &VectorField,
    seed: &Point,
    cover_start: &[f64],
    duration: f64,
    settings: &FlowSettings,
) -> Result<Trajectory, FlowError> {
    let mut trajectory = integrate(field, seed, duration, settings)?;
    // `integrate` starts from the canonical representative; shift the cover
    // column by the offset between the requested start and the canonical one.
    let offset: Vec<f64> = cover_start
        .iter()
        .zip(seed.coords())
        .map(|(&a, &b)| a - b)
        .collect();
    if offset.iter().any(|&d| d != 0.0) {
        for cov in &mut trajectory.cover {
            for (c, &d) in cov.iter_mut().zip(&offset) {
                *c += d;
            }
        }
    }
    Ok(trajectory)
}
