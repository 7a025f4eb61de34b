//! Types and kernels shared by the greedy placement solvers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelMatrix, Dictionary};
use crate::error::{FclaError, Result};
use crate::geometry::Position;
use crate::linalg::{identity, CMat};
use crate::precoding::{rzf, rzf_objective, RateReport};

/// Score used to rank a candidate column against the residual.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingNorm {
    /// `‖h̃_gᴴ R‖²₂`
    #[default]
    SquaredL2,
    /// `‖h̃_gᴴ R‖₁`
    L1,
}

impl MatchingNorm {
    pub fn score<'a>(&self, row: impl Iterator<Item = &'a num_complex::Complex64>) -> f64 {
        match self {
            MatchingNorm::SquaredL2 => row.map(|z| z.norm_sqr()).sum(),
            MatchingNorm::L1 => row.map(|z| z.norm()).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// RZF regularization α.
    pub alpha: f64,
    /// Total transmit power P used for the final column normalization.
    pub power: f64,
    /// Noise variance σ², used for rate diagnostics.
    pub noise_var: f64,
    #[serde(default)]
    pub matching: MatchingNorm,
}

impl SolverOptions {
    pub fn new(alpha: f64, power: f64, noise_var: f64) -> Self {
        Self {
            alpha,
            power,
            noise_var,
            matching: MatchingNorm::default(),
        }
    }
}

/// One ring of a placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingPlacement {
    pub z_index: usize,
    pub z: f64,
    pub psi_indices: Vec<usize>,
    pub psi: Vec<f64>,
}

impl RingPlacement {
    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        self.psi.iter().map(move |&psi| Position { psi, z: self.z })
    }
}

pub fn flatten_positions(rings: &[RingPlacement]) -> Vec<Position> {
    rings.iter().flat_map(RingPlacement::positions).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Joint,
    Angle,
    Height,
}

/// One greedy step: what was appended to the support and the regularized
/// objective after the refit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Outer iteration (always 0 for the joint solver).
    pub outer: usize,
    pub phase: Phase,
    pub step: usize,
    /// Dictionary columns (joint/angle phase) or height slots (height phase)
    /// chosen at this step.
    pub selected: Vec<usize>,
    /// Group of each selection (height slot for the joint solver, ring otherwise).
    pub groups: Vec<usize>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub iteration: usize,
    pub sum_rate: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub steps: Vec<TraceStep>,
    pub outer: Vec<OuterRecord>,
}

impl SolverTrace {
    /// CSV rows `iter,selected_g,group,objective`, one per selected column.
    pub fn write_step_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iter", "selected_g", "group", "objective"])?;
        for (i, step) in self.steps.iter().enumerate() {
            for (sel, grp) in step.selected.iter().zip(&step.groups) {
                w.write_record([
                    (i + 1).to_string(),
                    sel.to_string(),
                    grp.to_string(),
                    step.objective.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// CSV rows `i,sum_rate`, one per outer iteration.
    pub fn write_convergence_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["i", "sum_rate"])?;
        for rec in &self.outer {
            w.write_record([rec.iteration.to_string(), rec.sum_rate.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Result of a placement solver.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSolution {
    pub rings: Vec<RingPlacement>,
    /// Channel at the selected positions, ring-major column order.
    pub channel: ChannelMatrix,
    /// Column-normalized precoder.
    pub precoder: CMat,
    /// Regularized objective of the final refit (before normalization).
    pub objective: f64,
    /// Rates of `channel` under `precoder`.
    pub rates: RateReport,
    /// Greedy iterations performed (atoms matched, for the joint solver).
    pub iterations: usize,
    pub trace: SolverTrace,
}

impl PlacementSolution {
    pub fn positions(&self) -> Vec<Position> {
        flatten_positions(&self.rings)
    }
}

/// Index of the best-scoring candidate; ties go to the lowest index.
pub(crate) fn best_candidate(
    correlation: &CMat,
    candidates: impl IntoIterator<Item = usize>,
    norm: MatchingNorm,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for g in candidates {
        let score = norm.score(correlation.row(g).iter());
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((g, score)),
        }
    }
    best.map(|(g, _)| g)
}

/// Picks the column of `dict` whose matched-filter output against
/// `residual` has the largest norm.
pub fn match_atom(
    dict: &Dictionary,
    residual: &CMat,
    candidates: &[usize],
    norm: MatchingNorm,
) -> Result<usize> {
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    let correlation = dict.entries.ad_mul(residual);
    best_candidate(&correlation, sorted, norm).ok_or(FclaError::EmptyCandidates)
}

/// Regularized least-squares refit on the selected columns: returns the
/// coefficients, the new residual `I − HF` and the objective.
pub(crate) fn refit(selected: &CMat, alpha: f64) -> Result<(CMat, CMat, f64)> {
    let f = rzf(selected, alpha)?;
    let residual = identity(selected.nrows()) - selected * &f;
    let objective = rzf_objective(selected, &f, alpha);
    Ok((f, residual, objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn single_candidate_and_ties() {
        let corr = CMat::from_fn(4, 2, |_, _| Complex64::new(1.0, 0.0));
        assert_eq!(best_candidate(&corr, [2], MatchingNorm::SquaredL2), Some(2));
        assert_eq!(best_candidate(&corr, [1, 3, 2], MatchingNorm::SquaredL2), Some(1));
        assert_eq!(best_candidate(&corr, Vec::new(), MatchingNorm::L1), None);
    }

    #[test]
    fn norms_differ() {
        let spiky = [Complex64::new(3.0, 0.0), Complex64::new(0.0, 0.0)];
        let flat = [Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0)];
        // ℓ2²: 9 vs 8, ℓ1: 3 vs 4
        assert!(MatchingNorm::SquaredL2.score(spiky.iter()) > MatchingNorm::SquaredL2.score(flat.iter()));
        assert!(MatchingNorm::L1.score(spiky.iter()) < MatchingNorm::L1.score(flat.iter()));
    }
}
