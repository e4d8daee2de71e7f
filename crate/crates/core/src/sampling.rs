//! Deterministic low-discrepancy sampling plans.
//!
//! Checks that quantify over points and group elements (invariance,
//! canonicity, Jacobi, rank profiles) sample a Halton sequence over a
//! declared box, so that every report is reproducible without an RNG.

use std::sync::Arc;

use crate::chart::ChartSpec;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical-inverse of `index` in the given base, in (0, 1).
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut fraction = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * fraction;
        index /= base;
        fraction /= base as f64;
    }
    result
}

/// Where and how much to sample.
#[derive(Debug, Clone)]
pub struct SamplingPlan {
    /// Per-axis box for chart points. Periodic axes span a full period.
    pub point_box: Vec<(f64, f64)>,
    pub n_points: usize,
    /// Per-parameter box for group elements.
    pub group_box: Vec<(f64, f64)>,
    pub n_group: usize,
}

pub const DEFAULT_POINTS: usize = 256;
pub const DEFAULT_GROUP: usize = 16;
/// Default half-width of the box on linear axes.
pub const DEFAULT_LINEAR_HALF_WIDTH: f64 = 2.0;

impl SamplingPlan {
    /// Default plan: 256 Halton points over `[-2, 2]` per linear axis and a
    /// full period per angle axis; 16 group parameters in `[-pi, pi]^k`.
    pub fn for_chart(chart: &Arc<ChartSpec>, group_dim: usize) -> Self {
        let point_box = chart
            .periods()
            .iter()
            .map(|period| match period {
                Some(p) => (0.0, *p),
                None => (-DEFAULT_LINEAR_HALF_WIDTH, DEFAULT_LINEAR_HALF_WIDTH),
            })
            .collect();
        SamplingPlan {
            point_box,
            n_points: DEFAULT_POINTS,
            group_box: vec![(-std::f64::consts::PI, std::f64::consts::PI); group_dim],
            n_group: DEFAULT_GROUP,
        }
    }

    pub fn with_points(mut self, n: usize) -> Self {
        self.n_points = n;
        self
    }

    pub fn with_group_samples(mut self, n: usize) -> Self {
        self.n_group = n;
        self
    }

    pub fn with_box(mut self, point_box: Vec<(f64, f64)>) -> Self {
        self.point_box = point_box;
        self
    }

    /// Chart-point samples as coordinate vectors.
    pub fn points(&self) -> Vec<Vec<f64>> {
        halton_box(&self.point_box, self.n_points, 0)
    }

    /// Group-parameter samples. Uses a disjoint prime block so point and
    /// parameter sequences stay uncorrelated.
    pub fn group_params(&self) -> Vec<Vec<f64>> {
        halton_box(&self.group_box, self.n_group, self.point_box.len())
    }
}

fn halton_box(boxes: &[(f64, f64)], n: usize, prime_offset: usize) -> Vec<Vec<f64>> {
    // Skip the first entries; short Halton prefixes are too regular.
    const BURN_IN: u64 = 32;
    (0..n as u64)
        .map(|i| {
            boxes
                .iter()
                .enumerate()
                .map(|(axis, &(lo, hi))| {
                    let base = PRIMES[(prime_offset + axis) % PRIMES.len()];
                    lo + (hi - lo) * radical_inverse(i + BURN_IN, base)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_fill_the_box_deterministically() {
        let chart = ChartSpec::linear(&["x", "y"]).unwrap();
        let plan = SamplingPlan::for_chart(&chart, 1);
        let pts = plan.points();
        assert_eq!(pts.len(), 256);
        assert_eq!(pts, plan.points());
        for p in &pts {
            assert!(p.iter().all(|c| (-2.0..=2.0).contains(c)));
        }
        // Both half-boxes of each axis get visited.
        for axis in 0..2 {
            assert!(pts.iter().any(|p| p[axis] < 0.0));
            assert!(pts.iter().any(|p| p[axis] > 0.0));
        }
        let params = plan.group_params();
        assert_eq!(params.len(), 16);
        assert!(params.iter().any(|g| g[0].abs() > 1.0));
    }

    #[test]
    fn periodic_axes_span_a_period() {
        let chart = ChartSpec::torus(&["a"]).unwrap();
        let plan = SamplingPlan::for_chart(&chart, 0);
        let pts = plan.points();
        let max = pts.iter().map(|p| p[0]).fold(f64::MIN, f64::max);
        let min = pts.iter().map(|p| p[0]).fold(f64::MAX, f64::min);
        assert!(min >= 0.0 && max < std::f64::consts::TAU);
        assert!(max - min > 5.0, "samples should spread over the circle");
    }
}
