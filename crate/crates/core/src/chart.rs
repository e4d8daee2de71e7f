//! Coordinate charts and points with periodic axes.

use std::sync::Arc;

use serde::Serialize;

use crate::expr::RESERVED_WORDS;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ChartError {
    #[error("chart has no coordinates")]
    Empty,
    #[error("duplicate coordinate name `{0}`")]
    DuplicateName(String),
    #[error("`{0}` is not a valid coordinate name")]
    InvalidName(String),
    #[error("`{0}` is a reserved word")]
    ReservedName(String),
    #[error("period for `{name}` must be positive, got {period}")]
    BadPeriod { name: String, period: f64 },
    #[error("chart `{chart:?}` expects {expected} coordinates, got {found}")]
    Dimension {
        chart: Vec<String>,
        expected: usize,
        found: usize,
    },
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
}

/// A single coordinate chart: the computational stand-in for the manifold.
///
/// Each axis is either linear or periodic with a positive period; periodic
/// coordinates are stored canonically in `[0, period)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartSpec {
    names: Vec<String>,
    periods: Vec<Option<f64>>,
}

impl ChartSpec {
    /// `periods[i] = None` for a linear axis, `Some(p)` with `p > 0` for a
    /// periodic one.
    pub fn new(names: Vec<String>, periods: Vec<Option<f64>>) -> Result<Arc<Self>, ChartError> {
        if names.is_empty() {
            return Err(ChartError::Empty);
        }
        if periods.len() != names.len() {
            return Err(ChartError::Dimension {
                chart: names.clone(),
                expected: names.len(),
                found: periods.len(),
            });
        }
        for (i, name) in names.iter().enumerate() {
            if !is_identifier(name) {
                return Err(ChartError::InvalidName(name.clone()));
            }
            if RESERVED_WORDS.contains(&name.as_str()) {
                return Err(ChartError::ReservedName(name.clone()));
            }
            if names[..i].contains(name) {
                return Err(ChartError::DuplicateName(name.clone()));
            }
        }
        for (name, period) in names.iter().zip(&periods) {
            if let Some(p) = period {
                if !(p.is_finite() && *p > 0.0) {
                    return Err(ChartError::BadPeriod {
                        name: name.clone(),
                        period: *p,
                    });
                }
            }
        }
        Ok(Arc::new(ChartSpec { names, periods }))
    }

    /// Non-periodic chart over the given names.
    pub fn linear(names: &[&str]) -> Result<Arc<Self>, ChartError> {
        ChartSpec::new(
            names.iter().map(|s| s.to_string()).collect(),
            vec![None; names.len()],
        )
    }

    /// All axes periodic with period 2 pi.
    pub fn torus(names: &[&str]) -> Result<Arc<Self>, ChartError> {
        ChartSpec::new(
            names.iter().map(|s| s.to_string()).collect(),
            vec![Some(std::f64::consts::TAU); names.len()],
        )
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periods[axis].is_some()
    }

    /// Index pairs `(i, j)`, `i < j`, with both axes periodic.
    pub fn periodic_planes(&self) -> Vec<(usize, usize)> {
        let periodic: Vec<usize> = (0..self.dim()).filter(|&i| self.is_periodic(i)).collect();
        let mut planes = Vec::new();
        for (a, &i) in periodic.iter().enumerate() {
            for &j in &periodic[a + 1..] {
                planes.push((i, j));
            }
        }
        planes
    }

    /// Wraps `coords` in place to the canonical representative.
    pub fn canonicalize(&self, coords: &mut [f64]) {
        for (c, period) in coords.iter_mut().zip(&self.periods) {
            if let Some(p) = period {
                *c = c.rem_euclid(*p);
                // rem_euclid can return p itself when c is a tiny negative.
                if *c >= *p {
                    *c = 0.0;
                }
            }
        }
    }

    /// Signed componentwise difference `a - b`, wrapped on periodic axes to
    /// the representative of smallest magnitude.
    pub fn wrapped_diff(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .zip(&self.periods)
            .map(|((&x, &y), period)| match period {
                Some(p) => {
                    let d = (x - y).rem_euclid(*p);
                    if d > p / 2.0 {
                        d - p
                    } else {
                        d
                    }
                }
                None => x - y,
            })
            .collect()
    }

    /// Euclidean distance with wrapped differences on periodic axes.
    pub fn wrapped_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.wrapped_diff(a, b)
            .iter()
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt()
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A point of the chart, stored canonically (periodic axes wrapped).
#[derive(Debug, Clone)]
pub struct Point {
    chart: Arc<ChartSpec>,
    coords: Vec<f64>,
}

impl Point {
    pub fn new(chart: Arc<ChartSpec>, mut coords: Vec<f64>) -> Result<Self, ChartError> {
        if coords.len() != chart.dim() {
            return Err(ChartError::Dimension {
                chart: chart.names.clone(),
                expected: chart.dim(),
                found: coords.len(),
            });
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(ChartError::NonFinite { index });
        }
        chart.canonicalize(&mut coords);
        Ok(Point { chart, coords })
    }

    pub fn chart(&self) -> &Arc<ChartSpec> {
        &self.chart
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn distance_to(&self, other: &Point) -> f64 {
        self.chart.wrapped_distance(&self.coords, &other.coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn rejects_bad_charts() {
        assert!(ChartSpec::linear(&[]).is_err());
        assert!(ChartSpec::linear(&["x", "x"]).is_err());
        assert!(ChartSpec::linear(&["x", "sin"]).is_err());
        assert!(ChartSpec::linear(&["2x"]).is_err());
        assert!(ChartSpec::new(vec!["x".into()], vec![Some(-1.0)]).is_err());
        assert!(ChartSpec::new(vec!["x".into()], vec![Some(0.0)]).is_err());
    }

    #[test]
    fn points_canonicalize_periodic_axes() {
        let chart = ChartSpec::torus(&["a", "b"]).unwrap();
        let p = Point::new(chart.clone(), vec![TAU + 0.5, -0.25]).unwrap();
        assert!((p.coords()[0] - 0.5).abs() < 1e-15);
        assert!((p.coords()[1] - (TAU - 0.25)).abs() < 1e-15);
        // Tiny negative values wrap inside [0, period).
        let q = Point::new(chart, vec![-1e-18, 0.0]).unwrap();
        assert!(q.coords()[0] >= 0.0 && q.coords()[0] < TAU);
    }

    #[test]
    fn wrapped_distance_crosses_the_seam() {
        let chart = ChartSpec::torus(&["a"]).unwrap();
        let p = Point::new(chart.clone(), vec![0.1]).unwrap();
        let q = Point::new(chart, vec![TAU - 0.1]).unwrap();
        assert!((p.distance_to(&q) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mixed_chart_distance() {
        let chart = ChartSpec::new(
            vec!["x".into(), "a".into()],
            vec![None, Some(1.0)],
        )
        .unwrap();
        let p = Point::new(chart.clone(), vec![0.0, 0.95]).unwrap();
        let q = Point::new(chart, vec![3.0, 0.05]).unwrap();
        let d = p.distance_to(&q);
        assert!((d - (9.0f64 + 0.01).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn periodic_planes_enumerated() {
        let chart = ChartSpec::new(
            vec!["x".into(), "a".into(), "b".into()],
            vec![None, Some(TAU), Some(TAU)],
        )
        .unwrap();
        assert_eq!(chart.periodic_planes(), vec![(1, 2)]);
        let torus = ChartSpec::torus(&["t1", "t2", "p1", "p2"]).unwrap();
        assert_eq!(torus.periodic_planes().len(), 6);
    }

    #[test]
    fn rejects_non_finite_points() {
        let chart = ChartSpec::linear(&["x"]).unwrap();
        assert!(Point::new(chart, vec![f64::NAN]).is_err());
    }
}
