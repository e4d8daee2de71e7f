//! Tracing momentum-map fibers with random flow words, and the greedy
//! same-fiber shooting test.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chart::Point;
use crate::expr::Expr;
use crate::flows::{compose_flows, FlowSettings};
use crate::geometry::{PoissonStructure, ScalarField, VectorField};
use crate::par;
use crate::symmetry::InvariantFamily;

use super::{distribution_at, ReductionError};

/// Effort limits for leaf tracing, with the RNG seed that makes a trace
/// reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Cloud size, seed point included.
    pub points: usize,
    /// Flow segments per word (and shooting iterations for membership).
    pub segments: usize,
    pub rng_seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            points: 1024,
            segments: 64,
            rng_seed: 2024,
        }
    }
}

/// One bounded random flow segment: the Hamiltonian is the family
/// combination with these weights, flowed for `duration`.
#[derive(Debug, Clone, Serialize)]
pub struct Segment {
    pub weights: Vec<f64>,
    pub duration: f64,
}

pub type FlowWord = Vec<Segment>;

/// A sampled fiber of the momentum map: every point is the endpoint of a
/// recorded flow word from the seed, and the distribution rank is constant
/// across the cloud.
#[derive(Debug, Clone)]
pub struct LeafSample {
    seed: Point,
    rank: usize,
    points: Vec<Point>,
    cover: Vec<Vec<f64>>,
    words: Vec<FlowWord>,
    budget: Budget,
}

impl LeafSample {
    pub fn seed(&self) -> &Point {
        &self.seed
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Cloud points, index 0 being the seed.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Unwrapped (universal cover) coordinates, same indexing as `points`.
    pub fn cover(&self) -> &[Vec<f64>] {
        &self.cover
    }

    pub fn words(&self) -> &[FlowWord] {
        &self.words
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Max drift `|c(p) - c(seed)|` per monitor over the whole cloud.
    pub fn max_drift(
        &self,
        monitors: &[ScalarField],
    ) -> Result<Vec<f64>, ReductionError> {
        let base: Vec<f64> = monitors
            .iter()
            .map(|c| c.eval(&self.seed))
            .collect::<Result<_, _>>()?;
        let mut drifts = vec![0.0f64; monitors.len()];
        for p in &self.points {
            for (k, c) in monitors.iter().enumerate() {
                drifts[k] = drifts[k].max((c.eval(p)? - base[k]).abs());
            }
        }
        Ok(drifts)
    }

    /// Re-executes the recorded word for cloud point `idx`; callers compare
    /// the endpoint against the stored point.
    pub fn replay(
        &self,
        idx: usize,
        family: &InvariantFamily,
        structure: &PoissonStructure,
        flow: &FlowSettings,
    ) -> Result<Point, ReductionError> {
        let segments = word_fields(&self.words[idx], family, structure)?;
        let end = compose_flows(&segments, &self.seed, flow)?;
        Ok(end.point)
    }

    /// CSV of the cloud: wrapped coordinates then `<name>_cover` columns.
    pub fn to_csv(&self) -> String {
        let chart = self.seed.chart();
        let mut out = String::new();
        let names = chart.names();
        out.push_str(&names.join(","));
        for name in names {
            out.push_str(&format!(",{name}_cover"));
        }
        out.push('\n');
        for (p, cov) in self.points.iter().zip(&self.cover) {
            let mut row: Vec<String> = p.coords().iter().map(|c| format!("{:?}", c)).collect();
            row.extend(cov.iter().map(|c| format!("{:?}", c)));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// The Hamiltonian `sum_i w_i f_i` of one segment, as a vector field.
fn word_fields(
    word: &FlowWord,
    family: &InvariantFamily,
    structure: &PoissonStructure,
) -> Result<Vec<(VectorField, f64)>, ReductionError> {
    let exprs: Vec<Expr> = family.members().iter().map(|f| f.expr().clone()).collect();
    word.iter()
        .map(|segment| {
            let combo = Expr::linear_combination(&segment.weights, &exprs);
            let energy = ScalarField::from_expr(structure.chart(), combo)?;
            Ok((structure.hamiltonian_vf(energy), segment.duration))
        })
        .collect()
}

/// Traces the fiber through `seed` by integrating `budget.points - 1`
/// independent random flow words (weights and durations uniform in
/// `[-1, 1]`, ChaCha-seeded). Every endpoint is re-checked for rank
/// constancy; a mismatch aborts with `RankJump`.
pub fn trace_leaf(
    seed: &Point,
    family: &InvariantFamily,
    structure: &PoissonStructure,
    budget: &Budget,
    flow: &FlowSettings,
) -> Result<LeafSample, ReductionError> {
    let seed_frame = distribution_at(seed, family, structure)?;
    seed_frame.require_well_conditioned()?;
    let rank = seed_frame.rank();

    // Words are drawn sequentially so the cloud is identical no matter how
    // the integrations are scheduled.
    let mut rng = ChaCha8Rng::seed_from_u64(budget.rng_seed);
    let k = family.len();
    let words: Vec<FlowWord> = (1..budget.points)
        .map(|_| {
            (0..budget.segments)
                .map(|_| Segment {
                    weights: (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
                    duration: rng.gen_range(-1.0..=1.0),
                })
                .collect()
        })
        .collect();

    let outcomes = par::map(words, |word| -> Result<_, ReductionError> {
        let segments = word_fields(&word, family, structure)?;
        let end = compose_flows(&segments, seed, flow)?;
        let frame = distribution_at(&end.point, family, structure)?;
        frame.require_well_conditioned()?;
        if frame.rank() != rank {
            return Err(ReductionError::RankJump {
                expected: rank,
                found: frame.rank(),
                point: end.point.coords().to_vec(),
            });
        }
        Ok((word, end))
    });

    let mut points = vec![seed.clone()];
    let mut cover = vec![seed.coords().to_vec()];
    let mut words = vec![FlowWord::new()];
    for outcome in outcomes {
        let (word, end) = outcome?;
        points.push(end.point);
        cover.push(end.cover);
        words.push(word);
    }
    Ok(LeafSample {
        seed: seed.clone(),
        rank,
        points,
        cover,
        words,
        budget: *budget,
    })
}

/// A conserved function that provably separates seed and target.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationCertificate {
    pub monitor: String,
    pub seed_value: f64,
    pub target_value: f64,
}

/// Outcome of the same-fiber shooting test. `NotReached` is not a proof of
/// non-membership: the test is semi-decidable, and only a separation
/// certificate (a conserved monitor that differs) is conclusive.
#[derive(Debug, Clone, Serialize)]
pub enum MembershipVerdict {
    Reached {
        word: FlowWord,
        distance: f64,
    },
    NotReached {
        best_distance: f64,
        certificate: Option<SeparationCertificate>,
    },
}

/// Greedy shooting from `seed` toward `target`: each round line-searches a
/// duration for every family Hamiltonian and keeps the best improvement.
pub fn leaf_membership(
    seed: &Point,
    target: &Point,
    family: &InvariantFamily,
    structure: &PoissonStructure,
    tol: f64,
    budget: &Budget,
    flow: &FlowSettings,
    monitors: &[ScalarField],
) -> Result<MembershipVerdict, ReductionError> {
    if family.is_empty() {
        return Err(ReductionError::EmptyFamily);
    }
    let k = family.len();
    let mut current = seed.clone();
    let mut word = FlowWord::new();
    let mut best = current.distance_to(target);

    for _ in 0..budget.segments {
        if best < tol {
            break;
        }
        let mut round_best: Option<(usize, f64, Point, f64)> = None;
        for i in 0..k {
            let mut weights = vec![0.0; k];
            weights[i] = 1.0;
            let segment_field = word_fields(
                &vec![Segment {
                    weights: weights.clone(),
                    duration: 0.0,
                }],
                family,
                structure,
            )?
            .remove(0)
            .0;
            let (t, endpoint, dist) =
                line_search_duration(&segment_field, &current, target, flow)?;
            if dist < round_best.as_ref().map_or(f64::INFINITY, |b| b.3) {
                round_best = Some((i, t, endpoint, dist));
            }
        }
        let Some((i, t, endpoint, dist)) = round_best else {
            break;
        };
        if dist >= best - 1e-15 {
            break;
        }
        let mut weights = vec![0.0; k];
        weights[i] = 1.0;
        word.push(Segment {
            weights,
            duration: t,
        });
        current = endpoint;
        best = dist;
    }

    if best < tol {
        return Ok(MembershipVerdict::Reached {
            word,
            distance: best,
        });
    }
    let mut certificate = None;
    for monitor in monitors {
        let a = monitor.eval(seed)?;
        let b = monitor.eval(target)?;
        if (a - b).abs() > (10.0 * tol).max(1e-9 * (1.0 + a.abs())) {
            certificate = Some(SeparationCertificate {
                monitor: monitor.source().to_string(),
                seed_value: a,
                target_value: b,
            });
            break;
        }
    }
    Ok(MembershipVerdict::NotReached {
        best_distance: best,
        certificate,
    })
}

/// Coarse-grid line search over the flow duration, with two refinement
/// rounds around the best grid point.
fn line_search_duration(
    field: &VectorField,
    from: &Point,
    target: &Point,
    flow: &FlowSettings,
) -> Result<(f64, Point, f64), ReductionError> {
    let evaluate = |t: f64| -> Result<(Point, f64), ReductionError> {
        if t == 0.0 {
            return Ok((from.clone(), from.distance_to(target)));
        }
        let end = compose_flows(&[(field.clone(), t)], from, flow)?;
        let d = end.point.distance_to(target);
        Ok((end.point, d))
    };
    let mut lo = -2.0f64;
    let mut hi = 2.0f64;
    let mut best = (0.0, from.clone(), from.distance_to(target));
    for _round in 0..3 {
        let steps = 16;
        for s in 0..=steps {
            let t = lo + (hi - lo) * s as f64 / steps as f64;
            let (p, d) = evaluate(t)?;
            if d < best.2 {
                best = (t, p, d);
            }
        }
        let width = (hi - lo) / steps as f64;
        lo = best.0 - width;
        hi = best.0 + width;
    }
    Ok(best)
}
