//! Exhaustive reference solver for tiny grids.
//!
//! Enumerates every feasible placement (an unordered choice of `M` height
//! slots, then an independent choice of `N` angle slots for each ring) and
//! evaluates the RZF solution on each.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{build_joint_dictionary, PathSet};
use crate::error::{FclaError, Result};
use crate::geometry::{FclaConfig, PositionGrid};
use crate::precoding::{normalize_nonzero_columns, rzf, rzf_objective, sinr};
use crate::solver::{RingPlacement, SolverOptions};

pub const DEFAULT_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Minimize the regularized MUI objective.
    Objective,
    /// Maximize the sum rate with normalized RZF precoding.
    SumRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub rings: Vec<RingPlacement>,
    pub objective: f64,
    pub sum_rate: f64,
    pub count: u128,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn enumeration_count(config: &FclaConfig, grid: &PositionGrid) -> u128 {
    let heights = binomial(grid.height_count(), config.rings);
    let angles = binomial(grid.angle_count(), config.per_ring);
    (0..config.rings).fold(heights, |acc, _| acc.saturating_mul(angles))
}

pub fn exhaustive_best(
    users: &[PathSet],
    grid: &PositionGrid,
    config: &FclaConfig,
    opts: &SolverOptions,
    criterion: Criterion,
    cap: u128,
) -> Result<OracleResult> {
    let count = enumeration_count(config, grid);
    if count > cap {
        return Err(FclaError::EnumerationCap { count, cap });
    }
    let dict = &build_joint_dictionary(users, grid, config);
    let height_sets = &combinations(grid.height_count(), config.rings);
    let angle_sets = &combinations(grid.angle_count(), config.per_ring);
    let per_height = (angle_sets.len() as u128).pow(config.rings as u32);
    let rings = config.rings;

    let decode = |index: u128| -> (usize, Vec<usize>) {
        let hs = (index / per_height) as usize;
        let mut rest = index % per_height;
        let mut choice = vec![0usize; rings];
        for slot in choice.iter_mut().rev() {
            *slot = (rest % angle_sets.len() as u128) as usize;
            rest /= angle_sets.len() as u128;
        }
        (hs, choice)
    };

    let evaluate = |index: u128| -> Result<(f64, f64)> {
        let (hs, choice) = decode(index);
        let columns: Vec<usize> = height_sets[hs]
            .iter()
            .zip(&choice)
            .flat_map(|(&zi, &ai)| angle_sets[ai].iter().map(move |&gh| dict.column_of(zi, gh)))
            .collect();
        let h = dict.columns(&columns);
        let f = rzf(&h, opts.alpha)?;
        let objective = rzf_objective(&h, &f, opts.alpha);
        let sum_rate = sinr(&h, &normalize_nonzero_columns(&f, opts.power), opts.noise_var)?.sum_rate;
        Ok((objective, sum_rate))
    };

    let key = |(obj, rate): (f64, f64)| match criterion {
        Criterion::Objective => obj,
        Criterion::SumRate => -rate,
    };

    // min by (key, index) so the result does not depend on scheduling
    let best = (0..count as u64)
        .into_par_iter()
        .map(|i| evaluate(i as u128).map(|v| (key(v), i, v)))
        .try_reduce_with(|a, b| {
            let a_wins = a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
            Ok(if a_wins { a } else { b })
        })
        .transpose()?
        .ok_or_else(|| FclaError::Infeasible("no feasible placement on this grid".into()))?;

    let (_, index, (objective, sum_rate)) = best;
    let (hs, choice) = decode(index as u128);
    let rings = height_sets[hs]
        .iter()
        .zip(&choice)
        .map(|(&zi, &ai)| RingPlacement {
            z_index: zi,
            z: grid.z[zi],
            psi_indices: angle_sets[ai].clone(),
            psi: angle_sets[ai].iter().map(|&g| grid.psi[g]).collect(),
        })
        .collect();
    Ok(OracleResult {
        rings,
        objective,
        sum_rate,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_paths, synthesize_channel};
    use crate::geometry::{build_grid, GridSize};
    use crate::pattern::Pattern;
    use crate::solver::flatten_positions;

    #[test]
    fn subsets() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(combinations(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(combinations(4, 2)[5], vec![2, 3]);
        assert_eq!(binomial(12, 4), 495);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn single_feasible_placement() {
        let cfg = FclaConfig::with_grid(2, 2, GridSize { angles: 2, heights: 2 }, 0.05, 0.1, Pattern::Omni).unwrap();
        let grid = build_grid(&cfg).unwrap();
        let users = draw_paths(3, 2, 1);
        let res = exhaustive_best(&users, &grid, &cfg, &SolverOptions::new(1.0, 1.0, 1.0), Criterion::Objective, DEFAULT_CAP).unwrap();
        assert_eq!(res.count, 1);
        assert_eq!(res.rings.len(), 2);
        assert_eq!(res.rings[0].psi_indices, vec![0, 1]);
    }

    #[test]
    fn matches_hand_loop() {
        let cfg = FclaConfig::with_grid(1, 1, GridSize { angles: 2, heights: 2 }, 0.05, 0.1, Pattern::Directional { kappa: 1.0 }).unwrap();
        let grid = build_grid(&cfg).unwrap();
        let users = draw_paths(2, 3, 4);
        let opts = SolverOptions::new(0.5, 1.0, 1.0);
        let res = exhaustive_best(&users, &grid, &cfg, &opts, Criterion::Objective, DEFAULT_CAP).unwrap();
        assert_eq!(res.count, 4);
        let mut best = f64::INFINITY;
        for &z in &grid.z {
            for &psi in &grid.psi {
                let h = synthesize_channel(&users, &[crate::geometry::Position { psi, z }], &cfg).unwrap().entries;
                let f = rzf(&h, 0.5).unwrap();
                best = best.min(rzf_objective(&h, &f, 0.5));
            }
        }
        assert!((res.objective - best).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let cfg = FclaConfig::with_grid(2, 2, GridSize { angles: 8, heights: 8 }, 0.05, 0.1, Pattern::Omni).unwrap();
        let grid = build_grid(&cfg).unwrap();
        let users = draw_paths(2, 1, 0);
        let err = exhaustive_best(&users, &grid, &cfg, &SolverOptions::new(1.0, 1.0, 1.0), Criterion::Objective, 100).unwrap_err();
        match err {
            FclaError::EnumerationCap { count, cap } => {
                assert_eq!(count, 28 * 28 * 28);
                assert_eq!(cap, 100);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn sum_rate_criterion_dominates() {
        let cfg = FclaConfig::with_grid(1, 2, GridSize { angles: 4, heights: 3 }, 0.05, 0.1, Pattern::Directional { kappa: 1.0 }).unwrap();
        let grid = build_grid(&cfg).unwrap();
        let users = draw_paths(2, 2, 6);
        let opts = SolverOptions::new(1.0, 2.0, 1.0);
        let by_rate = exhaustive_best(&users, &grid, &cfg, &opts, Criterion::SumRate, DEFAULT_CAP).unwrap();
        let by_obj = exhaustive_best(&users, &grid, &cfg, &opts, Criterion::Objective, DEFAULT_CAP).unwrap();
        assert_eq!(by_rate.count, 18);
        assert!(by_rate.sum_rate >= by_obj.sum_rate);
        assert!(by_obj.objective <= by_rate.objective);
        let h = synthesize_channel(&users, &flatten_positions(&by_rate.rings), &cfg).unwrap();
        let f = normalize_nonzero_columns(&rzf(&h.entries, 1.0).unwrap(), 2.0);
        assert!((sinr(&h.entries, &f, 1.0).unwrap().sum_rate - by_rate.sum_rate).abs() < 1e-12);
    }

    #[test]
    fn greedy_never_beats_optimum() {
        use crate::alternating::{solve_alternating, AlternatingOptions};
        use crate::joint::{solve_joint, RingLayout};
        let cfg = FclaConfig::with_grid(1, 2, GridSize { angles: 4, heights: 3 }, 0.05, 0.1, Pattern::Directional { kappa: 1.0 }).unwrap();
        let grid = build_grid(&cfg).unwrap();
        let opts = SolverOptions::new(0.5, 1.0, 1.0);
        for seed in 0..100 {
            let users = draw_paths(3, 3, 1000 + seed);
            let best = exhaustive_best(&users, &grid, &cfg, &opts, Criterion::Objective, DEFAULT_CAP).unwrap();
            assert_eq!(best.count, 18);
            let dict = build_joint_dictionary(&users, &grid, &cfg);
            let joint = solve_joint(&dict, RingLayout { rings: 1, per_ring: 2 }, &opts).unwrap();
            let alt = solve_alternating(&users, &grid, &cfg, &AlternatingOptions::new(opts, 3)).unwrap();
            assert!(joint.objective >= best.objective - 1e-12);
            assert!(alt.objective >= best.objective - 1e-12);
        }
    }

    #[test]
    fn ring_order_does_not_matter() {
        let cfg = FclaConfig::with_grid(2, 1, GridSize { angles: 3, heights: 3 }, 0.05, 0.1, Pattern::Omni).unwrap();
        let grid = build_grid(&cfg).unwrap();
        let users = draw_paths(2, 2, 77);
        let opts = SolverOptions::new(1.0, 1.0, 1.0);
        let best = exhaustive_best(&users, &grid, &cfg, &opts, Criterion::Objective, DEFAULT_CAP).unwrap();
        let mut swapped = best.rings.clone();
        swapped.reverse();
        let h = synthesize_channel(&users, &flatten_positions(&swapped), &cfg).unwrap().entries;
        let obj = rzf_objective(&h, &rzf(&h, 1.0).unwrap(), 1.0);
        assert!((obj - best.objective).abs() < 1e-12);
    }
}
