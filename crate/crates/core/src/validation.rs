//! Self-check suites: numerical properties, solver structure and agreement
//! with the exhaustive solver on tiny instances.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alternating::{solve_alternating, AlternatingOptions};
use crate::channel::{build_joint_dictionary, draw_paths, Dictionary};
use crate::geometry::{build_grid, check_feasible, FclaConfig, GridSize};
use crate::joint::{solve_joint, RingLayout};
use crate::linalg::{frobenius_sq, identity, CMat};
use crate::oracle::{exhaustive_best, Criterion, DEFAULT_CAP};
use crate::pattern::{sphere_average, Pattern};
use crate::precoding::{normalize_columns, rzf, rzf_antenna_gram, rzf_user_gram, sinr};
use crate::solver::{Phase, PlacementSolution, SolverOptions, SolverTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn within(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(name, value <= tolerance, format!("{value:.3e} (tolerance {tolerance:.0e})"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(f, "[{status}] {}", self.suite)?;
        for c in &self.checks {
            let mark = if c.passed { "ok" } else { "FAILED" };
            writeln!(f, "  {mark:6} {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Smallest cosine similarity between matching columns.
fn min_column_cosine(a: &CMat, b: &CMat) -> f64 {
    a.column_iter()
        .zip(b.column_iter())
        .map(|(x, y)| x.dotc(&y).norm() / (x.norm() * y.norm()))
        .fold(1.0, f64::min)
}

pub fn pattern_suite() -> SuiteReport {
    let checks = [1.0, 2.0, 3.0]
        .into_iter()
        .map(|kappa| {
            let avg = sphere_average(&Pattern::Directional { kappa }, 400);
            Check::within(format!("sphere average, kappa={kappa}"), (avg - 1.0).abs(), 1e-3)
        })
        .chain(std::iter::once(Check::within(
            "sphere average, omni",
            (sphere_average(&Pattern::Omni, 100) - 1.0).abs(),
            1e-3,
        )))
        .collect();
    SuiteReport {
        suite: "pattern normalization".into(),
        checks,
    }
}

pub fn precoding_suite(seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut worst = [0.0f64; 4];
    for _ in 0..20 {
        let k = rng.random_range(2..7);
        let n = rng.random_range(k..k + 6);
        let h = random_matrix(k, n, &mut rng);
        let alpha = rng.random_range(0.05..2.0);

        let gram = &h * h.adjoint() + identity(k) * Complex64::from(alpha);
        let reference = gram.lu().solve(&h).expect("regularized Gram is invertible").adjoint();
        let f = rzf(&h, alpha).expect("positive alpha");
        worst[0] = worst[0].max(max_abs(&(&f - &reference)));

        let a = rzf_user_gram(&h, alpha).expect("positive alpha");
        let b = rzf_antenna_gram(&h, alpha).expect("positive alpha");
        worst[1] = worst[1].max(max_abs(&(a - b)));

        let power = rng.random_range(0.5..10.0);
        let normalized = normalize_columns(&f, power).expect("nonzero columns");
        worst[2] = worst[2].max((frobenius_sq(&normalized) - power).abs());

        let g = random_matrix(n, k, &mut rng);
        let noise = rng.random_range(0.1..2.0);
        let report = sinr(&h, &g, noise).expect("shapes agree");
        for u in 0..k {
            let term = |i: usize| -> f64 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    acc += h[(u, j)] * g[(j, i)];
                }
                acc.norm_sqr()
            };
            let interference: f64 = (0..k).filter(|&i| i != u).map(term).sum();
            let expected = term(u) / (interference + noise);
            worst[3] = worst[3].max((report.sinr[u] - expected).abs() / expected.max(1.0));
        }
    }
    checks.push(Check::within("rzf vs linear-system oracle", worst[0], 1e-10));
    checks.push(Check::within("user vs antenna Gram form", worst[1], 1e-10));
    checks.push(Check::within("normalized power equals P", worst[2], 1e-12));
    checks.push(Check::within("SINR vs scalar loop", worst[3], 1e-12));

    let h = random_matrix(4, 7, &mut rng);
    let zf = rzf(&h, 0.0).expect("full row rank");
    let near = rzf(&h, 1e-9).expect("positive alpha");
    checks.push(Check::within("ZF interference H F - I", max_abs(&(&h * &zf - identity(4))), 1e-10));
    checks.push(Check::within("small alpha approaches ZF", max_abs(&(&near - &zf)), 1e-6));
    let mrt = rzf(&h, 1e8).expect("positive alpha");
    let cosine = min_column_cosine(&mrt, &h.adjoint());
    checks.push(Check::new(
        "large alpha approaches MRT direction",
        cosine > 1.0 - 1e-6,
        format!("min cosine {cosine:.12}"),
    ));
    SuiteReport {
        suite: "precoding".into(),
        checks,
    }
}

fn phase_monotone(trace: &SolverTrace) -> bool {
    let mut last: Option<(usize, Phase, f64)> = None;
    for s in &trace.steps {
        if let Some((outer, phase, obj)) = last {
            if outer == s.outer && phase == s.phase && s.objective > obj + 1e-9 * obj.max(1.0) {
                return false;
            }
        }
        last = Some((s.outer, s.phase, s.objective));
    }
    true
}

/// The joint solver on a crafted 2-user dictionary over a 2x2 grid must pick
/// (ψ₁,z₁), (ψ₁,z₂), (ψ₂,z₁) and keep the two atoms at z₁.
pub fn crafted_trace() -> (Vec<usize>, PlacementSolution) {
    let cfg = FclaConfig::with_grid(1, 2, GridSize { angles: 2, heights: 2 }, 0.05, 0.1, Pattern::Omni)
        .expect("valid crafted grid");
    let grid = build_grid(&cfg).expect("valid crafted grid");
    let c = |x: f64| Complex64::new(x, 0.0);
    let entries = CMat::from_column_slice(2, 4, &[c(3.0), c(0.0), c(0.0), c(1.5), c(0.0), c(2.0), c(0.0), c(1.0)]);
    let dict = Dictionary::with_joint_layout(entries, &grid).expect("layout matches grid");
    let sol = solve_joint(&dict, RingLayout { rings: 1, per_ring: 2 }, &SolverOptions::new(0.01, 2.0, 1.0))
        .expect("crafted instance is solvable");
    let picks = sol.trace.steps.iter().map(|s| s.selected[0]).collect();
    (picks, sol)
}

pub fn structural_suite(seed: u64) -> SuiteReport {
    let mut checks = Vec::new();
    let (picks, sol) = crafted_trace();
    checks.push(Check::new(
        "joint worked trace",
        picks == [0, 2, 1] && sol.rings[0].z_index == 0 && sol.rings[0].psi_indices == [0, 1],
        format!("picks {picks:?}, ring {:?}", sol.rings[0].psi_indices),
    ));

    let spec = [(4, 4, 16, 12), (2, 3, 6, 6), (3, 2, 8, 5)];
    let mut iterations_ok = true;
    let mut monotone_ok = true;
    let mut deterministic = true;
    let mut feasible = true;
    let mut detail = String::new();
    for (i, &(m, n, k, g)) in spec.iter().enumerate() {
        let cfg = FclaConfig::with_grid(m, n, GridSize { angles: g, heights: g }, 0.025, 0.1, Pattern::Directional { kappa: 1.0 })
            .expect("valid grid");
        let grid = build_grid(&cfg).expect("valid grid");
        let opts = SolverOptions::new(1.0, 1.0, 1.0);
        for t in 0..5u64 {
            let users = draw_paths(k, 4, seed.wrapping_add(97 * i as u64 + t));
            let dict = build_joint_dictionary(&users, &grid, &cfg);
            let layout = RingLayout { rings: m, per_ring: n };
            let joint = solve_joint(&dict, layout, &opts);
            let alt_opts = AlternatingOptions::new(opts, 3);
            let alt = solve_alternating(&users, &grid, &cfg, &alt_opts);
            let (joint, alt) = match (joint, alt) {
                (Ok(j), Ok(a)) => (j, a),
                (j, a) => {
                    feasible = false;
                    detail = format!("solver error: {:?} {:?}", j.err(), a.err());
                    continue;
                }
            };
            if joint.iterations < m * n || joint.iterations > g * g {
                iterations_ok = false;
                detail = format!("joint iterations {} outside [{}, {}]", joint.iterations, m * n, g * g);
            }
            monotone_ok &= phase_monotone(&joint.trace) && phase_monotone(&alt.trace);
            feasible &= check_feasible(&joint.positions(), &cfg).is_ok() && check_feasible(&alt.positions(), &cfg).is_ok();
            deterministic &= solve_joint(&dict, layout, &opts).ok().as_ref() == Some(&joint)
                && solve_alternating(&users, &grid, &cfg, &alt_opts).ok().as_ref() == Some(&alt);
        }
    }
    checks.push(Check::new("joint iteration count in [MN, G_V*G_H]", iterations_ok, detail.clone()));
    checks.push(Check::new("objective non-increasing within each phase", monotone_ok, ""));
    checks.push(Check::new("placements satisfy spacing constraints", feasible, detail));
    checks.push(Check::new("solvers deterministic", deterministic, ""));
    SuiteReport {
        suite: "solver structure".into(),
        checks,
    }
}

/// Relative objective gaps of the greedy solvers to the exhaustive optimum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleGaps {
    pub joint: Vec<f64>,
    pub alternating: Vec<f64>,
    /// Instances where a greedy objective fell below the optimum.
    pub violations: Vec<String>,
    pub infeasible: Vec<String>,
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Runs both greedy solvers and the exhaustive solver on `instances` tiny
/// random problems with `M, N ≤ 2` and `G_H, G_V ≤ 4`.
pub fn oracle_gaps(instances: usize, seed: u64) -> OracleGaps {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaps = OracleGaps::default();
    for i in 0..instances {
        let m = rng.random_range(1..=2usize);
        let n = rng.random_range(1..=2usize);
        let gv = rng.random_range(m..=4usize);
        let gh = rng.random_range(n.max(2)..=4usize);
        let k = rng.random_range(1..=4usize);
        let pattern = if rng.random_bool(0.5) { Pattern::Omni } else { Pattern::Directional { kappa: 1.0 } };
        let alpha = rng.random_range(0.1..2.0);
        let label = format!("#{i} M={m} N={n} G_V={gv} G_H={gh} K={k}");
        let cfg = FclaConfig::with_grid(m, n, GridSize { angles: gh, heights: gv }, 0.025, 0.1, pattern).expect("valid grid");
        let grid = build_grid(&cfg).expect("valid grid");
        let users = draw_paths(k, 3, rng.random());
        let opts = SolverOptions::new(alpha, 1.0, 1.0);
        let best = exhaustive_best(&users, &grid, &cfg, &opts, Criterion::Objective, DEFAULT_CAP).expect("tiny grid under cap");
        let dict = build_joint_dictionary(&users, &grid, &cfg);
        let solutions = [
            solve_joint(&dict, RingLayout { rings: m, per_ring: n }, &opts),
            solve_alternating(&users, &grid, &cfg, &AlternatingOptions::new(opts, 3)),
        ];
        for (which, sol) in solutions.into_iter().enumerate() {
            let sol = match sol {
                Ok(s) => s,
                Err(e) => {
                    gaps.infeasible.push(format!("{label}: {e}"));
                    continue;
                }
            };
            if check_feasible(&sol.positions(), &cfg).is_err() {
                gaps.infeasible.push(label.clone());
            }
            let gap = (sol.objective - best.objective) / best.objective;
            if sol.objective < best.objective - 1e-9 * best.objective {
                gaps.violations.push(format!("{label}: greedy {} < optimum {}", sol.objective, best.objective));
            }
            if which == 0 {
                gaps.joint.push(gap);
            } else {
                gaps.alternating.push(gap);
            }
        }
    }
    gaps
}

pub fn oracle_suite(instances: usize, seed: u64) -> (SuiteReport, OracleGaps) {
    let gaps = oracle_gaps(instances, seed);
    let checks = vec![
        Check::new(
            "greedy placements feasible",
            gaps.infeasible.is_empty(),
            format!("{} infeasible of {}", gaps.infeasible.len(), 2 * instances),
        ),
        Check::new(
            "greedy objective >= exhaustive optimum",
            gaps.violations.is_empty(),
            format!("{} violations", gaps.violations.len()),
        ),
        Check::new(
            "median relative gap",
            true,
            format!("joint {:.4}, alternating {:.4}", median(&gaps.joint), median(&gaps.alternating)),
        ),
    ];
    (
        SuiteReport {
            suite: format!("exhaustive agreement ({instances} instances)"),
            checks,
        },
        gaps,
    )
}

pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    vec![
        pattern_suite(),
        precoding_suite(seed),
        structural_suite(seed),
        oracle_suite(100, seed).0,
    ]
}
