//! Heuristic classification of the closure of a traced fiber on periodic
//! planes.
//!
//! The classifier looks for the properness-failure signature: a cloud whose
//! projection onto a periodic 2-plane is a line of irrational slope that
//! wraps densely around the torus. Everything reported here is labeled
//! heuristic; the tool never claims to certify properness, it only exhibits
//! (or fails to exhibit) the dense-subgroup behavior.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::linalg::ranked_span;
use crate::tolerances;

use super::{DistributionFrame, LeafSample};

/// What the cloud projection onto one periodic plane looks like.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PlaneClass {
    /// The distribution does not move in this plane.
    Fixed,
    /// One-dimensional trace on the universal cover.
    Line {
        /// Wraps densely (irrational slope, never closes in the data).
        dense: bool,
        /// Unit direction in (period-scaled) plane coordinates.
        direction: [f64; 2],
        /// Max cover distance of any cloud point from the line.
        max_line_distance: f64,
        /// Signed extent along the line, in units of the plane period.
        extent_periods: f64,
        /// Slope in period-normalized coordinates, None for vertical lines.
        slope: Option<f64>,
        /// Closest rational p/q the data cannot distinguish from the slope,
        /// when one exists within the observable denominator range.
        nearest_rational: Option<(i64, i64)>,
    },
    /// The projection spreads in both directions.
    Filled2d,
    /// Plane motion is 1-dimensional at the seed but the cloud leaves the
    /// line; no classification claimed.
    Unclassified,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaneReport {
    pub axes: (String, String),
    pub class: PlaneClass,
    /// Occupied box counts at 8, 16, and 32 divisions per period.
    pub box_counts: [usize; 3],
    /// Box-counting dimension estimates between consecutive scales.
    pub box_dims: [f64; 2],
    /// Minimal wrapped return distance to the seed at growing prefix sizes.
    pub min_return: Vec<(usize, f64)>,
    /// Log-log slope of the min-return curve, when defined.
    pub min_return_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub applicable: bool,
    pub skip_reason: Option<String>,
    pub planes: Vec<PlaneReport>,
    pub dense_line_any: bool,
}

/// Minimum cloud size for the statistics to mean anything.
pub const MIN_CLOUD: usize = 1000;

/// Classifies every periodic coordinate plane of the chart.
pub fn classify_closure(sample: &LeafSample, seed_frame: &DistributionFrame) -> ClosureReport {
    let chart = sample.seed().chart();
    let planes = chart.periodic_planes();
    if planes.is_empty() {
        return ClosureReport {
            applicable: false,
            skip_reason: Some("chart has no periodic plane".into()),
            planes: Vec::new(),
            dense_line_any: false,
        };
    }
    if sample.len() < MIN_CLOUD {
        return ClosureReport {
            applicable: false,
            skip_reason: Some(format!(
                "cloud has {} points, classifier needs {MIN_CLOUD}",
                sample.len()
            )),
            planes: Vec::new(),
            dense_line_any: false,
        };
    }
    let reports: Vec<PlaneReport> = planes
        .iter()
        .map(|&(i, j)| classify_plane(sample, seed_frame, i, j))
        .collect();
    let dense_line_any = reports
        .iter()
        .any(|r| matches!(r.class, PlaneClass::Line { dense: true, .. }));
    ClosureReport {
        applicable: true,
        skip_reason: None,
        planes: reports,
        dense_line_any,
    }
}

fn classify_plane(
    sample: &LeafSample,
    seed_frame: &DistributionFrame,
    i: usize,
    j: usize,
) -> PlaneReport {
    let chart = sample.seed().chart();
    let period_i = chart.periods()[i].expect("periodic axis");
    let period_j = chart.periods()[j].expect("periodic axis");
    let names = chart.names();

    // Projection of the distribution span onto the plane decides the
    // candidate class; the cloud then has to confirm it.
    let basis = &seed_frame.span.basis;
    let mut projected = DMatrix::zeros(2, basis.ncols());
    for col in 0..basis.ncols() {
        projected[(0, col)] = basis[(i, col)];
        projected[(1, col)] = basis[(j, col)];
    }
    let plane_span = ranked_span(&projected, tolerances::RANK_REL);

    let box_counts = box_counts(sample, i, j, period_i, period_j);
    let box_dims = [
        (box_counts[1] as f64 / box_counts[0] as f64).log2(),
        (box_counts[2] as f64 / box_counts[1] as f64).log2(),
    ];
    let min_return = min_return_curve(sample, i, j);
    let min_return_slope = fit_loglog_slope(&min_return);

    let class = match plane_span.rank {
        0 => PlaneClass::Fixed,
        2 => PlaneClass::Filled2d,
        _ => classify_line(sample, &plane_span.basis, i, j, period_i, period_j),
    };

    PlaneReport {
        axes: (names[i].clone(), names[j].clone()),
        class,
        box_counts,
        box_dims,
        min_return,
        min_return_slope,
    }
}

fn classify_line(
    sample: &LeafSample,
    plane_basis: &DMatrix<f64>,
    i: usize,
    j: usize,
    period_i: f64,
    period_j: f64,
) -> PlaneClass {
    let direction = DVector::from_vec(vec![plane_basis[(0, 0)], plane_basis[(1, 0)]]);
    let direction = direction.normalize();
    let seed_cover = &sample.cover()[0];

    // Distance of every cover increment from the line through the seed.
    let mut max_line_distance = 0.0f64;
    let mut along_min = 0.0f64;
    let mut along_max = 0.0f64;
    for cov in sample.cover() {
        let du = [cov[i] - seed_cover[i], cov[j] - seed_cover[j]];
        let along = du[0] * direction[0] + du[1] * direction[1];
        let off = [du[0] - along * direction[0], du[1] - along * direction[1]];
        max_line_distance = max_line_distance.max((off[0] * off[0] + off[1] * off[1]).sqrt());
        along_min = along_min.min(along);
        along_max = along_max.max(along);
    }
    if max_line_distance > tolerances::LINE_DISTANCE {
        return PlaneClass::Unclassified;
    }

    // Slope in period-normalized coordinates; a line closes after q wraps
    // exactly when the slope is p/q.
    let norm_i = direction[0] / period_i;
    let norm_j = direction[1] / period_j;
    let extent_raw = along_max - along_min;
    let extent_periods = extent_raw
        * (norm_i * norm_i + norm_j * norm_j).sqrt();

    let (slope, nearest_rational, dense) = if norm_i.abs() < 1e-12 || norm_j.abs() < 1e-12 {
        // Horizontal or vertical: closes after a single wrap.
        (None, Some((0, 1)), false)
    } else {
        let slope = norm_j / norm_i;
        // The data distinguishes the slope from p/q only when the trace
        // extends past q periods; search the continued-fraction convergents
        // inside that range.
        let q_max = (extent_periods.abs().ceil() as i64 + 1).max(2);
        let slope_tol = (tolerances::LINE_DISTANCE / extent_raw.max(1e-9)).max(1e-12);
        let nearest = nearest_rational_within(slope.abs(), q_max, slope_tol);
        let wraps_enough = extent_periods.abs() > 1.5;
        (Some(slope), nearest, nearest.is_none() && wraps_enough)
    };

    PlaneClass::Line {
        dense,
        direction: [direction[0], direction[1]],
        max_line_distance,
        extent_periods,
        slope,
        nearest_rational,
    }
}

/// Smallest-denominator rational within `tol` of `x` with denominator at
/// most `q_max`, by walking the continued-fraction convergents.
fn nearest_rational_within(x: f64, q_max: i64, tol: f64) -> Option<(i64, i64)> {
    let (mut h0, mut k0, mut h1, mut k1) = (1i64, 0i64, x.floor() as i64, 1i64);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if k1 > q_max {
            return None;
        }
        let approx = h1 as f64 / k1 as f64;
        if (x - approx).abs() <= tol {
            return Some((h1, k1));
        }
        if frac.abs() < 1e-15 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let h2 = a as i64 * h1 + h0;
        let k2 = a as i64 * k1 + k0;
        (h0, k0, h1, k1) = (h1, k1, h2, k2);
    }
    None
}

fn box_counts(
    sample: &LeafSample,
    i: usize,
    j: usize,
    period_i: f64,
    period_j: f64,
) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for (s, divisions) in [8usize, 16, 32].iter().enumerate() {
        let d = *divisions as f64;
        let mut cells: HashSet<(u32, u32)> = HashSet::new();
        for p in sample.points() {
            let a = ((p.coords()[i] / period_i * d).floor() as i64).rem_euclid(*divisions as i64);
            let b = ((p.coords()[j] / period_j * d).floor() as i64).rem_euclid(*divisions as i64);
            cells.insert((a as u32, b as u32));
        }
        counts[s] = cells.len();
    }
    counts
}

/// Minimal wrapped plane distance from any later cloud point back to the
/// seed, at prefix sizes N/4, N/2, N.
fn min_return_curve(sample: &LeafSample, i: usize, j: usize) -> Vec<(usize, f64)> {
    let chart = sample.seed().chart();
    let period_i = chart.periods()[i].expect("periodic axis");
    let period_j = chart.periods()[j].expect("periodic axis");
    let seed = sample.points()[0].coords();
    let n = sample.len();
    let prefixes = [n / 4, n / 2, n];
    let mut out = Vec::new();
    let mut best = f64::INFINITY;
    let mut next_prefix = 0;
    for (idx, p) in sample.points().iter().enumerate().skip(1) {
        let di = wrap_diff(p.coords()[i] - seed[i], period_i);
        let dj = wrap_diff(p.coords()[j] - seed[j], period_j);
        best = best.min((di * di + dj * dj).sqrt());
        while next_prefix < prefixes.len() && idx + 1 >= prefixes[next_prefix] {
            out.push((prefixes[next_prefix], best));
            next_prefix += 1;
        }
    }
    out
}

fn wrap_diff(d: f64, period: f64) -> f64 {
    let w = d.rem_euclid(period);
    if w > period / 2.0 {
        w - period
    } else {
        w
    }
}

fn fit_loglog_slope(curve: &[(usize, f64)]) -> Option<f64> {
    if curve.len() < 2 {
        return None;
    }
    let (n0, d0) = curve[0];
    let (n1, d1) = curve[curve.len() - 1];
    if d0 <= 0.0 || d1 <= 0.0 || n0 == n1 {
        return None;
    }
    Some((d1.ln() - d0.ln()) / ((n1 as f64).ln() - (n0 as f64).ln()))
}
