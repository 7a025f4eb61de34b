//! Joint greedy selection of heights and revolving angles.
//!
//! One dictionary holds every `(ψ, z)` grid point, grouped by height slot.
//! Atoms are matched one at a time against the residual `I − H*F*`, with a
//! regularized least-squares refit after each pick. A height group closes as
//! soon as it holds `N` atoms; the solver keeps matching until `M` groups are
//! closed, then keeps only the atoms of the closed groups.

use crate::channel::{ChannelMatrix, Dictionary};
use crate::error::{FclaError, Result};
use crate::precoding::{normalize_nonzero_columns, rzf_objective, rzf_user_gram, sinr};
use crate::solver::{
    best_candidate, refit, Phase, PlacementSolution, RingPlacement, SolverOptions, SolverTrace,
    TraceStep,
};
use crate::linalg::identity;

/// Ring structure to extract from the dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingLayout {
    pub rings: usize,
    pub per_ring: usize,
}

pub fn solve_joint(
    dict: &Dictionary,
    layout: RingLayout,
    opts: &SolverOptions,
) -> Result<PlacementSolution> {
    let RingLayout { rings, per_ring } = layout;
    if rings == 0 || per_ring == 0 {
        return Err(FclaError::InvalidConfig("need at least one ring and one antenna".into()));
    }
    if dict.group_count() < rings || dict.group_width < per_ring {
        return Err(FclaError::InfeasibleGrid(format!(
            "{} groups of {} cannot host {} rings of {}",
            dict.group_count(),
            dict.group_width,
            rings,
            per_ring
        )));
    }

    let users = dict.users();
    let mut live = vec![true; dict.len()];
    let mut support: Vec<usize> = Vec::new();
    let mut counts = vec![0usize; dict.group_count()];
    let mut closed: Vec<usize> = Vec::new();
    let mut residual = identity(users);
    let mut trace = SolverTrace::default();

    while closed.len() < rings {
        let correlation = dict.entries.ad_mul(&residual);
        let candidates = live.iter().enumerate().filter(|(_, &l)| l).map(|(g, _)| g);
        let pick = best_candidate(&correlation, candidates, opts.matching).ok_or_else(|| {
            FclaError::Infeasible(format!(
                "candidates exhausted with {} of {} groups complete",
                closed.len(),
                rings
            ))
        })?;
        support.push(pick);
        live[pick] = false;

        let (_, next_residual, objective) = refit(&dict.columns(&support), opts.alpha)?;
        residual = next_residual;

        let group = dict.group_of(pick);
        counts[group] += 1;
        debug_assert!(counts[group] <= per_ring);
        if counts[group] == per_ring {
            closed.push(group);
            for g in dict.group_columns(group) {
                live[g] = false;
            }
        }
        trace.steps.push(TraceStep {
            outer: 0,
            phase: Phase::Joint,
            step: support.len() - 1,
            selected: vec![pick],
            groups: vec![group],
            objective,
        });
    }

    let iterations = support.len();
    closed.sort_unstable();
    let mut ring_placements = Vec::with_capacity(rings);
    let mut final_support = Vec::with_capacity(rings * per_ring);
    for &group in &closed {
        let mut members: Vec<usize> = support
            .iter()
            .copied()
            .filter(|&g| dict.group_of(g) == group)
            .collect();
        members.sort_unstable();
        let first = dict.atom(members[0]);
        ring_placements.push(RingPlacement {
            z_index: first.z_index,
            z: first.position.z,
            psi_indices: members.iter().map(|&g| dict.atom(g).psi_index).collect(),
            psi: members.iter().map(|&g| dict.atom(g).position.psi).collect(),
        });
        final_support.extend(members);
    }
    debug_assert_eq!(final_support.len(), rings * per_ring);

    let h = dict.columns(&final_support);
    let f = rzf_user_gram(&h, opts.alpha)?;
    let objective = rzf_objective(&h, &f, opts.alpha);
    let precoder = normalize_nonzero_columns(&f, opts.power);
    let rates = sinr(&h, &precoder, opts.noise_var)?;
    Ok(PlacementSolution {
        rings: ring_placements,
        channel: ChannelMatrix {
            entries: h,
            positions: final_support.iter().map(|&g| dict.atom(g).position).collect(),
        },
        precoder,
        objective,
        rates,
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_joint_dictionary, draw_paths};
    use crate::geometry::{build_grid, check_feasible, FclaConfig, GridSize};
    use crate::linalg::CMat;
    use crate::pattern::Pattern;
    use num_complex::Complex64;

    fn opts() -> SolverOptions {
        SolverOptions::new(1.0, 4.0, 1.0)
    }

    #[test]
    fn worked_trace() {
        // M=1, N=2, G_V=2, G_H=2. Columns: (ψ1,z1) (ψ2,z1) (ψ1,z2) (ψ2,z2).
        let cfg = FclaConfig::with_grid(1, 2, GridSize { angles: 2, heights: 2 }, 0.05, 0.1, Pattern::Omni).unwrap();
        let grid = build_grid(&cfg).unwrap();
        let c = |x: f64| Complex64::new(x, 0.0);
        let entries = CMat::from_column_slice(2, 4, &[
            c(3.0), c(0.0),
            c(0.0), c(1.5),
            c(0.0), c(2.0),
            c(0.0), c(1.0),
        ]);
        let dict = Dictionary::with_joint_layout(entries, &grid).unwrap();
        let sol = solve_joint(&dict, RingLayout { rings: 1, per_ring: 2 }, &SolverOptions::new(0.01, 3.0, 1.0)).unwrap();
        let picks: Vec<usize> = sol.trace.steps.iter().map(|s| s.selected[0]).collect();
        assert_eq!(picks, vec![0, 2, 1]);
        assert_eq!(sol.iterations, 3);
        assert_eq!(sol.rings.len(), 1);
        assert_eq!(sol.rings[0].z_index, 0);
        assert_eq!(sol.rings[0].psi_indices, vec![0, 1]);
    }

    #[test]
    fn forced_full_grid() {
        let cfg = FclaConfig::with_grid(2, 3, GridSize { angles: 3, heights: 2 }, 0.05, 0.1, Pattern::Directional { kappa: 1.0 }).unwrap();
        let grid = build_grid(&cfg).unwrap();
        let users = draw_paths(4, 2, 3);
        let dict = build_joint_dictionary(&users, &grid, &cfg);
        let sol = solve_joint(&dict, RingLayout { rings: 2, per_ring: 3 }, &opts()).unwrap();
        assert_eq!(sol.iterations, 6);
        assert_eq!(sol.rings.iter().map(|r| r.z_index).collect::<Vec<_>>(), vec![0, 1]);
        for r in &sol.rings {
            assert_eq!(r.psi_indices, vec![0, 1, 2]);
        }
    }

    #[test]
    fn invariants_on_random_instances() {
        for seed in 0..20 {
            let cfg = FclaConfig::with_grid(3, 2, GridSize { angles: 6, heights: 5 }, 0.05, 0.1, Pattern::Directional { kappa: 1.0 }).unwrap();
            let grid = build_grid(&cfg).unwrap();
            let users = draw_paths(6, 3, seed);
            let dict = build_joint_dictionary(&users, &grid, &cfg);
            let sol = solve_joint(&dict, RingLayout { rings: 3, per_ring: 2 }, &opts()).unwrap();
            check_feasible(&sol.positions(), &cfg).unwrap();
            assert!(sol.iterations >= 6 && sol.iterations <= 30);
            for w in sol.trace.steps.windows(2) {
                assert!(w[1].objective <= w[0].objective + 1e-9);
            }
            let mut seen = std::collections::HashSet::new();
            for s in &sol.trace.steps {
                assert!(seen.insert(s.selected[0]));
            }
            let power: f64 = sol.precoder.iter().map(|z| z.norm_sqr()).sum();
            assert!((power - 4.0).abs() < 1e-12);
            let again = solve_joint(&dict, RingLayout { rings: 3, per_ring: 2 }, &opts()).unwrap();
            assert_eq!(sol, again);
        }
    }

    #[test]
    fn rejects_small_dictionary() {
        let cfg = FclaConfig::with_grid(1, 2, GridSize { angles: 2, heights: 2 }, 0.05, 0.1, Pattern::Omni).unwrap();
        let grid = build_grid(&cfg).unwrap();
        let dict = build_joint_dictionary(&draw_paths(2, 1, 0), &grid, &cfg);
        assert!(solve_joint(&dict, RingLayout { rings: 3, per_ring: 1 }, &opts()).is_err());
        assert!(solve_joint(&dict, RingLayout { rings: 1, per_ring: 3 }, &opts()).is_err());
    }
}
