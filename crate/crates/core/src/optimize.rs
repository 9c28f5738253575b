//! Microphone placement search.
//!
//! The objective is broadband far-field capacity aggregated over an azimuth
//! grid. The search is a coordinate pattern search: each round proposes
//! `+-step` moves of every free coordinate of every movable microphone in a
//! seeded random order, accepts strict improvements, and halves the step
//! after a round without any. Infeasible proposals (outside the box or
//! closer than `min_spacing` to another microphone) are rejected without
//! spending an evaluation. Once the step falls below 1e-4 m the search
//! restarts from a random feasible layout until the restarts or the
//! evaluation budget run out; the best layout seen is reported.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capacity::{compensated_sum, ArrayChannel, SpectralWeights};
use crate::geometry::{ArrayGeometry, Position};
use crate::noisefield::NoiseModel;
use crate::wavefield::{Direction, SourceSpec};
use crate::{Error, Result};

/// Step size below which a local search stops.
pub const MIN_STEP: f64 = 1e-4;

/// Where microphones may go.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignConstraints {
    pub box_min: Position,
    pub box_max: Position,
    pub min_spacing: f64,
    /// Indices of microphones that never move.
    pub fixed: Vec<usize>,
}

impl DesignConstraints {
    /// Axes with zero box extent are frozen; at least one must be free.
    pub fn new(box_min: Position, box_max: Position, min_spacing: f64, fixed: Vec<usize>) -> Result<Self> {
        if box_min.iter().chain(box_max.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("design box must be finite"));
        }
        if (0..3).any(|k| box_max[k] < box_min[k]) {
            return Err(Error::invalid("design box has negative extent"));
        }
        if (0..3).all(|k| box_max[k] == box_min[k]) {
            return Err(Error::invalid("design box has no free dimension"));
        }
        if !(min_spacing.is_finite() && min_spacing > 0.0) {
            return Err(Error::invalid(format!("min_spacing must be positive, got {min_spacing}")));
        }
        Ok(Self {
            box_min,
            box_max,
            min_spacing,
            fixed,
        })
    }

    pub fn free_axes(&self) -> Vec<usize> {
        (0..3).filter(|&k| self.box_max[k] > self.box_min[k]).collect()
    }

    fn inside(&self, p: &Position) -> bool {
        (0..3).all(|k| p[k] >= self.box_min[k] && p[k] <= self.box_max[k])
    }

    /// Explains the first violated constraint, if any.
    pub fn violation(&self, geometry: &ArrayGeometry) -> Option<String> {
        let positions = geometry.positions();
        if let Some(&i) = self.fixed.iter().find(|&&i| i >= positions.len()) {
            return Some(format!("fixed index {i} out of range for {} microphones", positions.len()));
        }
        if let Some(i) = positions.iter().position(|p| !self.inside(p)) {
            return Some(format!("microphone {i} lies outside the design box"));
        }
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                let d = (positions[i] - positions[j]).norm();
                if d < self.min_spacing {
                    return Some(format!(
                        "microphones {i} and {j} are {d} m apart, below min_spacing {}",
                        self.min_spacing
                    ));
                }
            }
        }
        None
    }

    pub fn is_feasible(&self, geometry: &ArrayGeometry) -> bool {
        self.violation(geometry).is_none()
    }

    fn moved_ok(&self, positions: &[Position], index: usize) -> bool {
        let p = &positions[index];
        self.inside(p)
            && positions
                .iter()
                .enumerate()
                .all(|(j, q)| j == index || (p - q).norm() >= self.min_spacing)
    }
}

/// How per-azimuth broadband capacities are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    MeanOverAzimuth,
    MinOverAzimuth,
}

/// Design score: broadband far-field capacity aggregated over azimuths.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignObjective {
    pub aggregation: Aggregation,
    pub azimuths: Vec<f64>,
    /// Polar angle of the evaluated directions; pi/2 is the horizontal plane.
    pub polar: f64,
    pub weights: SpectralWeights,
    pub noise: NoiseModel,
    pub snr_linear: f64,
}

impl DesignObjective {
    pub fn new(
        aggregation: Aggregation,
        azimuths: Vec<f64>,
        weights: SpectralWeights,
        noise: NoiseModel,
        snr_linear: f64,
    ) -> Result<Self> {
        if azimuths.is_empty() {
            return Err(Error::invalid("objective azimuth grid is empty"));
        }
        Ok(Self {
            aggregation,
            azimuths,
            polar: PI / 2.0,
            weights,
            noise,
            snr_linear,
        })
    }
}

/// Objective value of `geometry`.
pub fn evaluate_objective(geometry: &ArrayGeometry, objective: &DesignObjective, speed_of_sound: f64) -> Result<f64> {
    if objective.azimuths.is_empty() {
        return Err(Error::invalid("objective azimuth grid is empty"));
    }
    let channel = ArrayChannel::new(geometry.clone(), objective.noise.clone(), speed_of_sound)?;
    let sources = objective
        .azimuths
        .iter()
        .map(|&a| Direction::new(a, objective.polar).map(SourceSpec::FarField))
        .collect::<Result<Vec<_>>>()?;
    let per_angle = channel.broadband_many(&sources, &objective.weights, objective.snr_linear)?;
    Ok(match objective.aggregation {
        Aggregation::MeanOverAzimuth => compensated_sum(per_angle.iter().copied()) / per_angle.len() as f64,
        Aggregation::MinOverAzimuth => per_angle.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Search settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions {
    /// Maximum number of objective evaluations, the initial one included.
    pub budget: usize,
    pub seed: u64,
    /// Random restarts after the first local search converges.
    pub restarts: usize,
    /// Starting step, meters; `None` uses a quarter of the smallest free box extent.
    pub initial_step: Option<f64>,
}

impl SearchOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            seed,
            restarts: 4,
            initial_step: None,
        }
    }
}

/// One accepted improvement of the incumbent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    /// 1-based evaluation count at which the value was reached.
    pub evaluation: usize,
    pub objective: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationReport {
    pub initial: ArrayGeometry,
    pub best: ArrayGeometry,
    /// Starts with the initial objective; strictly increasing.
    pub trace: Vec<TracePoint>,
    pub evaluations: usize,
    pub seed: u64,
}

impl OptimizationReport {
    pub fn initial_objective(&self) -> f64 {
        self.trace[0].objective
    }

    pub fn final_objective(&self) -> f64 {
        self.trace[self.trace.len() - 1].objective
    }

    /// CSV with header `iteration,evaluation,objective_bits,step_m`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# seed={}", self.seed).unwrap();
        writeln!(out, "# evaluations={}", self.evaluations).unwrap();
        out.push_str("iteration,evaluation,objective_bits,step_m\n");
        for (i, p) in self.trace.iter().enumerate() {
            writeln!(out, "{i},{},{},{}", p.evaluation, p.objective, p.step).unwrap();
        }
        out
    }
}

struct Search<'a> {
    constraints: &'a DesignConstraints,
    objective: &'a DesignObjective,
    speed_of_sound: f64,
    budget: usize,
    evaluations: usize,
    best_positions: Vec<Position>,
    best_value: f64,
    trace: Vec<TracePoint>,
}

impl Search<'_> {
    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }

    fn evaluate(&mut self, positions: &[Position], step: f64) -> Result<f64> {
        let geometry = ArrayGeometry::new(positions.to_vec())?;
        let value = evaluate_objective(&geometry, self.objective, self.speed_of_sound)?;
        self.evaluations += 1;
        if value > self.best_value {
            self.best_value = value;
            self.best_positions = positions.to_vec();
            self.trace.push(TracePoint {
                evaluation: self.evaluations,
                objective: value,
                step,
            });
        }
        Ok(value)
    }

    fn local_search(&mut self, mut positions: Vec<Position>, mut value: f64, start_step: f64, rng: &mut ChaCha8Rng) -> Result<()> {
        let movable: Vec<usize> = (0..positions.len())
            .filter(|i| !self.constraints.fixed.contains(i))
            .collect();
        let axes = self.constraints.free_axes();
        let mut moves: Vec<(usize, usize, f64)> = movable
            .iter()
            .flat_map(|&i| axes.iter().flat_map(move |&k| [(i, k, 1.0), (i, k, -1.0)]))
            .collect();
        let mut step = start_step;
        while step >= MIN_STEP && !self.exhausted() {
            moves.shuffle(rng);
            let mut improved = false;
            for &(i, k, sign) in &moves {
                if self.exhausted() {
                    return Ok(());
                }
                let previous = positions[i];
                positions[i][k] += sign * step;
                if !self.constraints.moved_ok(&positions, i) {
                    positions[i] = previous;
                    continue;
                }
                let candidate = self.evaluate(&positions, step)?;
                if candidate > value {
                    value = candidate;
                    improved = true;
                } else {
                    positions[i] = previous;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok(())
    }

    /// Uniform random placement of the movable microphones.
    fn random_start(&self, template: &[Position], rng: &mut ChaCha8Rng) -> Option<Vec<Position>> {
        let c = self.constraints;
        for _ in 0..1000 {
            let mut positions = template.to_vec();
            let mut ok = true;
            for i in 0..positions.len() {
                if c.fixed.contains(&i) {
                    continue;
                }
                for k in 0..3 {
                    positions[i][k] = if c.box_max[k] > c.box_min[k] {
                        rng.random_range(c.box_min[k]..=c.box_max[k])
                    } else {
                        c.box_min[k]
                    };
                }
            }
            for i in 0..positions.len() {
                if !c.moved_ok(&positions, i) {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Some(positions);
            }
        }
        None
    }
}

/// Random-restart pattern search maximizing `objective`.
pub fn optimize_geometry(
    initial: &ArrayGeometry,
    constraints: &DesignConstraints,
    objective: &DesignObjective,
    options: &SearchOptions,
    speed_of_sound: f64,
) -> Result<OptimizationReport> {
    if options.budget == 0 {
        return Err(Error::invalid("evaluation budget must be at least 1"));
    }
    if let Some(reason) = constraints.violation(initial) {
        return Err(Error::invalid(format!("initial geometry is infeasible: {reason}")));
    }
    let start_step = match options.initial_step {
        Some(s) if s.is_finite() && s > 0.0 => s,
        Some(s) => return Err(Error::invalid(format!("initial step must be positive, got {s}"))),
        None => {
            let extent = constraints
                .free_axes()
                .iter()
                .map(|&k| constraints.box_max[k] - constraints.box_min[k])
                .fold(f64::INFINITY, f64::min);
            0.25 * extent
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut search = Search {
        constraints,
        objective,
        speed_of_sound,
        budget: options.budget,
        evaluations: 0,
        best_positions: initial.positions().to_vec(),
        best_value: f64::NEG_INFINITY,
        trace: Vec::new(),
    };
    let initial_value = search.evaluate(initial.positions(), start_step)?;
    search.local_search(initial.positions().to_vec(), initial_value, start_step, &mut rng)?;
    for _ in 0..options.restarts {
        if search.exhausted() {
            break;
        }
        let Some(start) = search.random_start(initial.positions(), &mut rng) else {
            break;
        };
        let value = search.evaluate(&start, start_step)?;
        search.local_search(start, value, start_step, &mut rng)?;
    }

    let best = ArrayGeometry::new(search.best_positions)?;
    let best = match initial.labels() {
        Some(labels) => best.with_labels(labels.to_vec())?,
        None => best,
    };
    Ok(OptimizationReport {
        initial: initial.clone(),
        best,
        trace: search.trace,
        evaluations: search.evaluations,
        seed: options.seed,
    })
}

/// Two microphones on the x-axis, centered at the origin, `spacing` apart.
pub fn pair_geometry(spacing: f64) -> Result<ArrayGeometry> {
    crate::geometry::build_linear(2, spacing)
}

/// Exhaustive search over two-microphone spacings; ties go to the smaller
/// spacing. Returns `(spacing, objective)`.
pub fn brute_force_best_spacing(spacings: &[f64], objective: &DesignObjective, speed_of_sound: f64) -> Result<(f64, f64)> {
    if spacings.is_empty() {
        return Err(Error::invalid("spacing grid is empty"));
    }
    let mut best: Option<(f64, f64)> = None;
    for &s in spacings {
        let value = evaluate_objective(&pair_geometry(s)?, objective, speed_of_sound)?;
        best = match best {
            Some((bs, bv)) if value < bv || (value == bv && s >= bs) => Some((bs, bv)),
            _ => Some((s, value)),
        };
    }
    Ok(best.expect("non-empty grid"))
}
