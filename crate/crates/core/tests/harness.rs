use fcla_core::harness::{run_sweep, time_solvers, ExperimentSpec, Method};

#[test]
fn standard_error_shrinks_with_trials() {
    let base = ExperimentSpec { methods: vec![Method::Ucla], seed: 4, ..ExperimentSpec::default() };
    let se = |trials| run_sweep(&ExperimentSpec { trials, ..base.clone() }).unwrap().table.rows[0].stderr;
    let ratio = se(50) / se(200);
    assert!((1.5..2.7).contains(&ratio), "ratio {ratio}");
}

#[test]
fn flexible_beats_uniform_on_average() {
    let report = run_sweep(&ExperimentSpec { trials: 200, seed: 9, grid: 8, ..ExperimentSpec::default() }).unwrap();
    let t = &report.table;
    assert!(t.relative_gain(Method::FclaA, Method::Ucla, 0.0).unwrap() > 0.0);
    assert!(t.relative_gain(Method::FclaJ, Method::Ucla, 0.0).unwrap() > 0.0);
    // paired draws: per-trial samples line up across methods
    assert!(report.samples[0].iter().all(|s| s.len() == 200));
}

#[test]
fn alternating_is_cheaper_than_joint() {
    let spec = ExperimentSpec { seed: 2, ..ExperimentSpec::default() };
    let timing = time_solvers(&spec, 20).unwrap();
    assert!(timing.alternating < timing.joint, "{timing:?}");
}

#[test]
fn alternating_matching_work_is_smaller() {
    use fcla_core::channel::draw_paths;
    use fcla_core::geometry::GridSize;
    use fcla_core::harness::{alternating_matching_cost, joint_matching_cost, trial_seed, TrialSetup};
    let spec = ExperimentSpec { seed: 3, ..ExperimentSpec::default() };
    let setup = TrialSetup::new(&spec, &spec.points()[0]).unwrap();
    let grid = GridSize { angles: 12, heights: 12 };
    let alt = alternating_matching_cost(spec.iterations, spec.users, spec.rings, spec.per_ring, grid);
    assert_eq!(alt, 5 * 256 * (4 * 4 * 12 + 4 * 4 * 12));
    // best case for the joint solver already costs MN full sweeps
    let floor = joint_matching_cost(spec.rings * spec.per_ring, spec.users, grid);
    let mut total_joint = 0;
    for t in 0..20 {
        let users = draw_paths(spec.users, spec.paths, trial_seed(spec.seed, t));
        let sol = setup.solve_joint(&users).unwrap();
        total_joint += joint_matching_cost(sol.iterations, spec.users, grid);
    }
    assert!(floor * 20 <= total_joint);
    assert!(alt * 20 < total_joint, "alternating {} vs joint {}", alt * 20, total_joint);
}
