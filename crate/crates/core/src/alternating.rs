//! Alternating optimization of revolving angles and ring heights.
//!
//! Each outer iteration runs two greedy phases:
//!
//! * **angles** at fixed heights: every ring matches one atom from its own
//!   angle candidates per inner step, then a single joint refit and residual
//!   update follow;
//! * **heights** at fixed angles: rings pick, one after another, the height
//!   slot whose `N`-column block best matches the residual, with a refit after
//!   each ring. A slot taken by one ring is unavailable to the rest.
//!
//! Heights found in one outer iteration seed the angle phase of the next.

use crate::channel::{
    angle_dictionary_from_joint, build_angle_dictionary, build_height_dictionary, build_joint_dictionary,
    height_dictionary_from_joint, ChannelMatrix, Dictionary, PathSet,
};
use crate::error::{FclaError, Result};
use crate::geometry::{FclaConfig, PositionGrid};
use crate::linalg::{identity, CMat};
use crate::precoding::{normalize_nonzero_columns, sinr};
use crate::solver::{
    best_candidate, refit, OuterRecord, Phase, PlacementSolution, RingPlacement, SolverOptions,
    SolverTrace, TraceStep,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternatingOptions {
    pub solver: SolverOptions,
    /// Outer iterations `I`.
    pub iterations: usize,
    /// Stop early once the relative sum-rate change between outer iterations
    /// falls below this value. `None` always runs all iterations.
    pub early_stop: Option<f64>,
}

impl AlternatingOptions {
    pub fn new(solver: SolverOptions, iterations: usize) -> Self {
        Self {
            solver,
            iterations,
            early_stop: None,
        }
    }
}

/// Initial height slot of each ring: evenly spread over the height grid.
pub fn initial_heights(rings: usize, slots: usize) -> Vec<usize> {
    let denom = rings.saturating_sub(1).max(1) as f64;
    (0..rings)
        .map(|m| ((m as f64) * (slots as f64 - 1.0) / denom).round() as usize)
        .collect()
}

/// Output of one angle phase.
#[derive(Debug, Clone, PartialEq)]
pub struct AnglePhase {
    /// Selected angle slots per ring, in selection order.
    pub angles: Vec<Vec<usize>>,
    pub channel: CMat,
    pub coefficients: CMat,
    pub steps: Vec<TraceStep>,
}

pub fn optimize_angles(
    users: &[PathSet],
    heights: &[usize],
    per_ring: usize,
    grid: &PositionGrid,
    config: &FclaConfig,
    opts: &SolverOptions,
) -> Result<AnglePhase> {
    if per_ring > grid.angle_count() {
        return Err(FclaError::InfeasibleGrid(format!(
            "{} angle slots cannot host {per_ring} antennas",
            grid.angle_count()
        )));
    }
    let dict = build_angle_dictionary(users, heights, grid, config)?;
    angle_phase(&dict, per_ring, opts)
}

fn angle_phase(dict: &Dictionary, per_ring: usize, opts: &SolverOptions) -> Result<AnglePhase> {
    let rings = dict.group_count();
    let users = dict.users();
    let mut live = vec![true; dict.len()];
    let mut angles: Vec<Vec<usize>> = vec![Vec::with_capacity(per_ring); rings];
    let mut support: Vec<usize> = Vec::with_capacity(rings * per_ring);
    let mut residual = identity(users);
    let mut coefficients = CMat::zeros(0, users);
    let mut steps = Vec::with_capacity(per_ring);

    for n in 0..per_ring {
        let correlation = dict.entries.ad_mul(&residual);
        let mut picks = Vec::with_capacity(rings);
        for ring in 0..rings {
            let candidates = dict.group_columns(ring).filter(|&g| live[g]);
            let pick = best_candidate(&correlation, candidates, opts.matching)
                .ok_or(FclaError::EmptyCandidates)?;
            live[pick] = false;
            angles[ring].push(dict.atom(pick).psi_index);
            picks.push(pick);
        }
        support.extend_from_slice(&picks);
        let (f, next, objective) = refit(&dict.columns(&support), opts.alpha)?;
        residual = next;
        coefficients = f;
        steps.push(TraceStep {
            outer: 0,
            phase: Phase::Angle,
            step: n,
            selected: picks,
            groups: (0..rings).collect(),
            objective,
        });
    }
    Ok(AnglePhase {
        angles,
        channel: dict.columns(&support),
        coefficients,
        steps,
    })
}

/// Output of one height phase.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightPhase {
    /// Height slot per ring.
    pub heights: Vec<usize>,
    /// Channel at the final placement, ring-major.
    pub channel: CMat,
    pub coefficients: CMat,
    pub steps: Vec<TraceStep>,
}

pub fn optimize_heights(
    users: &[PathSet],
    angles: &[Vec<usize>],
    grid: &PositionGrid,
    config: &FclaConfig,
    opts: &SolverOptions,
) -> Result<HeightPhase> {
    let rings = angles.len();
    let slots = grid.height_count();
    if slots < rings {
        return Err(FclaError::InfeasibleGrid(format!(
            "{slots} height slots cannot host {rings} rings"
        )));
    }
    let dict = build_height_dictionary(users, angles, grid, config)?;
    height_phase(&dict, rings, slots, opts)
}

fn height_phase(dict: &Dictionary, rings: usize, slots: usize, opts: &SolverOptions) -> Result<HeightPhase> {
    let users = dict.users();
    let width = dict.group_width;
    let mut live = vec![true; slots];
    let mut heights = Vec::with_capacity(rings);
    let mut support: Vec<usize> = Vec::new();
    let mut residual = identity(users);
    let mut coefficients = CMat::zeros(0, users);
    let mut steps = Vec::with_capacity(rings);

    for ring in 0..rings {
        // only this ring's blocks compete
        let first = ring * slots * width;
        let correlation = dict.entries.columns(first, slots * width).ad_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for slot in (0..slots).filter(|&s| live[s]) {
            let score: f64 = (slot * width..(slot + 1) * width)
                .map(|g| correlation.row(g).iter().map(|z| z.norm_sqr()).sum::<f64>())
                .sum();
            match best {
                Some((_, s)) if score <= s => {}
                _ => best = Some((slot, score)),
            }
        }
        let (slot, _) = best.ok_or(FclaError::EmptyCandidates)?;
        live[slot] = false;
        heights.push(slot);
        support.extend(dict.group_columns(ring * slots + slot));
        let (f, next, objective) = refit(&dict.columns(&support), opts.alpha)?;
        residual = next;
        coefficients = f;
        steps.push(TraceStep {
            outer: 0,
            phase: Phase::Height,
            step: ring,
            selected: vec![slot],
            groups: vec![ring],
            objective,
        });
    }
    Ok(HeightPhase {
        heights,
        channel: dict.columns(&support),
        coefficients,
        steps,
    })
}

pub fn solve_alternating(
    users: &[PathSet],
    grid: &PositionGrid,
    config: &FclaConfig,
    opts: &AlternatingOptions,
) -> Result<PlacementSolution> {
    if opts.iterations == 0 {
        return Err(FclaError::InvalidConfig("at least one outer iteration is required".into()));
    }
    let solver = &opts.solver;
    if config.per_ring > grid.angle_count() || config.rings > grid.height_count() {
        return Err(FclaError::InfeasibleGrid(format!(
            "{}x{} grid cannot host {} rings of {}",
            grid.height_count(),
            grid.angle_count(),
            config.rings,
            config.per_ring
        )));
    }
    let joint = build_joint_dictionary(users, grid, config);
    let mut heights = initial_heights(config.rings, grid.height_count());
    let mut trace = SolverTrace::default();
    let mut last: Option<(Vec<Vec<usize>>, HeightPhase)> = None;

    for outer in 0..opts.iterations {
        let angle_dict = angle_dictionary_from_joint(&joint, &heights, grid)?;
        let angle_result = angle_phase(&angle_dict, config.per_ring, solver)?;
        let mut angles = angle_result.angles;
        for set in &mut angles {
            set.sort_unstable();
        }
        trace.steps.extend(angle_result.steps.into_iter().map(|mut s| {
            s.outer = outer;
            s
        }));

        let height_dict = height_dictionary_from_joint(&joint, &angles, grid)?;
        let height_phase = height_phase(&height_dict, config.rings, grid.height_count(), solver)?;
        trace.steps.extend(height_phase.steps.iter().cloned().map(|mut s| {
            s.outer = outer;
            s
        }));
        heights = height_phase.heights.clone();

        let precoder = normalize_nonzero_columns(&height_phase.coefficients, solver.power);
        let rate = sinr(&height_phase.channel, &precoder, solver.noise_var)?.sum_rate;
        let objective = height_phase.steps.last().map_or(f64::NAN, |s| s.objective);
        let previous = trace.outer.last().map(|r| r.sum_rate);
        trace.outer.push(OuterRecord {
            iteration: outer + 1,
            sum_rate: rate,
            objective,
        });
        last = Some((angles, height_phase));

        if let (Some(tol), Some(prev)) = (opts.early_stop, previous) {
            if ((rate - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < tol {
                break;
            }
        }
    }

    let (angles, phase) = last.expect("at least one outer iteration ran");
    let rings: Vec<RingPlacement> = angles
        .iter()
        .zip(&phase.heights)
        .map(|(set, &zi)| RingPlacement {
            z_index: zi,
            z: grid.z[zi],
            psi_indices: set.clone(),
            psi: set.iter().map(|&g| grid.psi[g]).collect(),
        })
        .collect();
    let objective = phase.steps.last().map_or(f64::NAN, |s| s.objective);
    let precoder = normalize_nonzero_columns(&phase.coefficients, solver.power);
    let rates = sinr(&phase.channel, &precoder, solver.noise_var)?;
    let positions = crate::solver::flatten_positions(&rings);
    Ok(PlacementSolution {
        rings,
        channel: ChannelMatrix {
            entries: phase.channel,
            positions,
        },
        precoder,
        objective,
        rates,
        iterations: trace.outer.len(),
        trace,
    })
}
