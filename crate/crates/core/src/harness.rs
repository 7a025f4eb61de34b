//! Monte Carlo sum-rate experiments.
//!
//! A sweep is a list of points (SNR, grid size or outer-iteration count). At
//! every point each trial draws one set of user paths and runs every requested
//! method on it, so the methods are compared on paired channel realizations.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alternating::{solve_alternating, AlternatingOptions};
use crate::channel::{build_joint_dictionary, draw_paths, synthesize_channel, PathSet};
use crate::error::{FclaError, Result};
use crate::geometry::{build_grid, FclaConfig, GridSize, Position, PositionGrid};
use crate::joint::{solve_joint, RingLayout};
use crate::linalg::CMat;
use crate::pattern::Pattern;
use crate::precoding::{normalize_nonzero_columns, rzf, sinr, RateReport};
use crate::solver::{MatchingNorm, PlacementSolution, SolverOptions};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ucla")]
    Ucla,
    #[serde(rename = "fcla-j")]
    FclaJ,
    #[serde(rename = "fcla-a")]
    FclaA,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ucla, Method::FclaJ, Method::FclaA];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ucla => "ucla",
            Method::FclaJ => "fcla-j",
            Method::FclaA => "fcla-a",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = FclaError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| FclaError::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// How the RZF regularization is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum AlphaRule {
    /// `α = σ²`
    #[default]
    Mmse,
    Fixed { value: f64 },
}

impl AlphaRule {
    pub fn alpha(&self, noise_var: f64) -> f64 {
        match *self {
            AlphaRule::Mmse => noise_var,
            AlphaRule::Fixed { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "var", content = "values", rename_all = "lowercase")]
pub enum Sweep {
    /// SNR values in dB.
    Snr(Vec<f64>),
    /// Grid sizes `G = G_H = G_V`.
    Grid(Vec<usize>),
    /// Outer iterations of the alternating solver.
    Iterations(Vec<usize>),
}

impl Sweep {
    pub fn var(&self) -> &'static str {
        match self {
            Sweep::Snr(_) => "snr",
            Sweep::Grid(_) => "grid",
            Sweep::Iterations(_) => "iterations",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::Snr(v) => v.len(),
            Sweep::Grid(v) => v.len(),
            Sweep::Iterations(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One evaluation point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub grid: usize,
    pub iterations: usize,
    /// Value of the swept variable, as reported in the results.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub rings: usize,
    pub per_ring: usize,
    pub users: usize,
    pub paths: usize,
    pub carrier_hz: f64,
    pub noise_var: f64,
    pub pattern: Pattern,
    /// `G = G_H = G_V` when no grid sweep is active.
    pub grid: usize,
    /// Minimum spacing in meters; a quarter wavelength when absent.
    pub d_min: Option<f64>,
    pub iterations: usize,
    pub snr_db: f64,
    /// Swept variable; a single point at the fixed values when absent.
    pub sweep: Option<Sweep>,
    pub trials: usize,
    pub seed: u64,
    pub alpha: AlphaRule,
    pub methods: Vec<Method>,
    pub matching: MatchingNorm,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            rings: 4,
            per_ring: 4,
            users: 16,
            paths: 4,
            carrier_hz: 3e9,
            noise_var: 1.0,
            pattern: Pattern::Directional { kappa: 1.0 },
            grid: 12,
            d_min: None,
            iterations: 5,
            snr_db: 0.0,
            sweep: None,
            trials: 200,
            seed: 0,
            alpha: AlphaRule::Mmse,
            methods: Method::ALL.to_vec(),
            matching: MatchingNorm::SquaredL2,
        }
    }
}

impl ExperimentSpec {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn spacing(&self) -> f64 {
        self.d_min.unwrap_or(self.wavelength() / 4.0)
    }

    pub fn power(&self, snr_db: f64) -> f64 {
        10f64.powf(snr_db / 10.0) * self.noise_var
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FclaError::InvalidConfig(msg));
        if self.trials == 0 {
            return bad("trial count must be at least 1".into());
        }
        if self.users == 0 || self.paths == 0 {
            return bad("need at least one user and one path".into());
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return bad(format!("carrier frequency must be positive, got {}", self.carrier_hz));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return bad(format!("noise variance must be positive, got {}", self.noise_var));
        }
        if self.methods.is_empty() {
            return bad("no methods requested".into());
        }
        if let AlphaRule::Fixed { value } = self.alpha {
            if !(value >= 0.0 && value.is_finite()) {
                return bad(format!("regularization must be non-negative, got {value}"));
            }
        }
        if matches!(&self.sweep, Some(s) if s.is_empty()) {
            return bad("sweep has no values".into());
        }
        for point in self.points() {
            if !point.snr_db.is_finite() {
                return bad(format!("SNR must be finite, got {}", point.snr_db));
            }
            if point.iterations == 0 {
                return bad("outer iterations must be at least 1".into());
            }
            self.config(point.grid)?;
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let base = SweepPoint {
            snr_db: self.snr_db,
            grid: self.grid,
            iterations: self.iterations,
            value: self.snr_db,
        };
        match &self.sweep {
            None => vec![base],
            Some(Sweep::Snr(v)) => v.iter().map(|&s| SweepPoint { snr_db: s, value: s, ..base }).collect(),
            Some(Sweep::Grid(v)) => v.iter().map(|&g| SweepPoint { grid: g, value: g as f64, ..base }).collect(),
            Some(Sweep::Iterations(v)) => v
                .iter()
                .map(|&i| SweepPoint { iterations: i, value: i as f64, ..base })
                .collect(),
        }
    }

    pub fn sweep_var(&self) -> &'static str {
        self.sweep.as_ref().map_or("snr", Sweep::var)
    }

    /// Array configuration at grid size `G = G_H = G_V`.
    pub fn config(&self, grid: usize) -> Result<FclaConfig> {
        FclaConfig::with_grid(
            self.rings,
            self.per_ring,
            GridSize { angles: grid, heights: grid },
            self.spacing(),
            self.wavelength(),
            self.pattern,
        )
    }

    pub fn solver_options(&self, snr_db: f64) -> SolverOptions {
        SolverOptions {
            alpha: self.alpha.alpha(self.noise_var),
            power: self.power(snr_db),
            noise_var: self.noise_var,
            matching: self.matching,
        }
    }
}

/// Seed of trial `trial`. It does not depend on the sweep point, so every
/// point of a sweep sees the same channel realizations.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    splitmix64(base ^ splitmix64(trial as u64 ^ 0x5EED_0000_0000_0000))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform cylindrical reference array on the same radius: `N` angles at
/// multiples of `2π/N`, ring `m` at height `m·d_min`.
pub fn ucla_positions(config: &FclaConfig) -> Vec<Position> {
    let step = std::f64::consts::TAU / config.per_ring as f64;
    (0..config.rings)
        .flat_map(|m| {
            (0..config.per_ring).map(move |n| Position {
                psi: n as f64 * step,
                z: m as f64 * config.d_min,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub channel: CMat,
    pub precoder: CMat,
    pub rates: RateReport,
}

pub fn ucla_baseline(users: &[PathSet], config: &FclaConfig, opts: &SolverOptions) -> Result<BaselineOutcome> {
    let channel = synthesize_channel(users, &ucla_positions(config), config)?.entries;
    let precoder = normalize_nonzero_columns(&rzf(&channel, opts.alpha)?, opts.power);
    let rates = sinr(&channel, &precoder, opts.noise_var)?;
    Ok(BaselineOutcome {
        channel,
        precoder,
        rates,
    })
}

/// Sum rate of a flexible solution, evaluated on the channel synthesized at
/// the returned placement.
fn placement_rate(users: &[PathSet], sol: &PlacementSolution, config: &FclaConfig, noise_var: f64) -> Result<f64> {
    let channel = synthesize_channel(users, &sol.positions(), config)?;
    Ok(sinr(&channel.entries, &sol.precoder, noise_var)?.sum_rate)
}

/// Everything one trial needs besides the paths.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub config: FclaConfig,
    pub grid: PositionGrid,
    pub opts: SolverOptions,
    pub iterations: usize,
}

impl TrialSetup {
    pub fn new(spec: &ExperimentSpec, point: &SweepPoint) -> Result<Self> {
        let config = spec.config(point.grid)?;
        let grid = build_grid(&config)?;
        Ok(Self {
            config,
            grid,
            opts: spec.solver_options(point.snr_db),
            iterations: point.iterations,
        })
    }

    pub fn run_method(&self, method: Method, users: &[PathSet]) -> Result<f64> {
        match method {
            Method::Ucla => Ok(ucla_baseline(users, &self.config, &self.opts)?.rates.sum_rate),
            Method::FclaJ => {
                let sol = self.solve_joint(users)?;
                placement_rate(users, &sol, &self.config, self.opts.noise_var)
            }
            Method::FclaA => {
                let sol = self.solve_alternating(users)?;
                placement_rate(users, &sol, &self.config, self.opts.noise_var)
            }
        }
    }

    pub fn solve_joint(&self, users: &[PathSet]) -> Result<PlacementSolution> {
        let dict = build_joint_dictionary(users, &self.grid, &self.config);
        solve_joint(
            &dict,
            RingLayout {
                rings: self.config.rings,
                per_ring: self.config.per_ring,
            },
            &self.opts,
        )
    }

    pub fn solve_alternating(&self, users: &[PathSet]) -> Result<PlacementSolution> {
        solve_alternating(users, &self.grid, &self.config, &AlternatingOptions::new(self.opts, self.iterations))
    }
}

/// Sum rate of each requested method on one trial, in `spec.methods` order.
pub fn run_trial(spec: &ExperimentSpec, point: &SweepPoint, trial: usize) -> Result<Vec<(Method, f64)>> {
    let setup = TrialSetup::new(spec, point)?;
    run_trial_with(spec, &setup, point, trial)
}

fn run_trial_with(spec: &ExperimentSpec, setup: &TrialSetup, point: &SweepPoint, trial: usize) -> Result<Vec<(Method, f64)>> {
    let users = draw_paths(spec.users, spec.paths, trial_seed(spec.seed, trial));
    spec.methods
        .iter()
        .map(|&m| setup.run_method(m, &users).map(|r| (m, r)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| FclaError::Trial {
            point: format!("{}={}", spec.sweep_var(), point.value),
            trial,
            source: Box::new(e),
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub mean_sum_rate_bits: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, method: Method, value: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method && r.sweep_value == value)
    }

    /// Rows of one method in sweep order.
    pub fn series(&self, method: Method) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.method == method).collect()
    }

    /// `(mean_method − mean_baseline) / mean_baseline` at one sweep value.
    pub fn relative_gain(&self, method: Method, baseline: Method, value: f64) -> Option<f64> {
        let m = self.get(method, value)?.mean_sum_rate_bits;
        let b = self.get(baseline, value)?.mean_sum_rate_bits;
        Some((m - b) / b)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub value: f64,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub table: ResultTable,
    /// Trials dropped for every method because one of them failed.
    pub failures: Vec<TrialFailure>,
    /// Per-trial rates, `samples[point][method][trial]`, failed trials omitted.
    pub samples: Vec<Vec<Vec<f64>>>,
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs every (point, trial) pair on the current rayon pool.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepReport> {
    spec.validate()?;
    let points = spec.points();
    let setups = points
        .iter()
        .map(|p| TrialSetup::new(spec, p))
        .collect::<Result<Vec<_>>>()?;
    let work: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Result<Vec<(Method, f64)>>> = work
        .par_iter()
        .map(|&(p, t)| run_trial_with(spec, &setups[p], &points[p], t))
        .collect();

    let mut report = SweepReport::default();
    let var = spec.sweep_var().to_string();
    for (p, point) in points.iter().enumerate() {
        let mut per_method: Vec<Vec<f64>> = vec![Vec::with_capacity(spec.trials); spec.methods.len()];
        for (t, outcome) in outcomes[p * spec.trials..(p + 1) * spec.trials].iter().enumerate() {
            match outcome {
                Ok(rates) => {
                    for (slot, (_, r)) in per_method.iter_mut().zip(rates) {
                        slot.push(*r);
                    }
                }
                Err(e) => report.failures.push(TrialFailure {
                    value: point.value,
                    trial: t,
                    message: e.to_string(),
                }),
            }
        }
        for (&method, rates) in spec.methods.iter().zip(&per_method) {
            let (mean, stderr) = mean_stderr(rates);
            report.table.rows.push(ResultRow {
                method,
                sweep_var: var.clone(),
                sweep_value: point.value,
                mean_sum_rate_bits: mean,
                stderr,
                trials: rates.len(),
            });
        }
        report.samples.push(per_method);
    }
    Ok(report)
}

/// [`run_sweep`] on a dedicated pool of at most `jobs` workers.
pub fn run_sweep_with_jobs(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<SweepReport> {
    match jobs {
        None => run_sweep(spec),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| FclaError::InvalidConfig(format!("cannot start worker pool: {e}")))?;
            pool.install(|| run_sweep(spec))
        }
    }
}

/// Run manifest: the spec plus the code version that produced the results.
/// Feeding it back as a spec reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub spec: ExperimentSpec,
    pub code_version: String,
}

impl Manifest {
    pub fn new(spec: &ExperimentSpec) -> Self {
        Self {
            spec: spec.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// Complex multiply-adds spent in atom matching by the joint solver:
/// every iteration correlates all `G_V·G_H` columns with the `K × K` residual.
pub fn joint_matching_cost(iterations: usize, users: usize, grid: GridSize) -> u64 {
    (iterations * users * users * grid.angles * grid.heights) as u64
}

/// Same count for the alternating solver: per outer iteration, `N` angle
/// steps over `M·G_H` columns and `M` height steps over `N·G_V` columns.
pub fn alternating_matching_cost(outer: usize, users: usize, rings: usize, per_ring: usize, grid: GridSize) -> u64 {
    let angle = per_ring * rings * grid.angles;
    let height = rings * per_ring * grid.heights;
    (outer * users * users * (angle + height)) as u64
}

/// Wall-clock time of the two flexible solvers on the same instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTiming {
    pub joint: Duration,
    pub alternating: Duration,
}

pub fn time_solvers(spec: &ExperimentSpec, trials: usize) -> Result<SolverTiming> {
    let point = spec.points()[0];
    let setup = TrialSetup::new(spec, &point)?;
    let mut timing = SolverTiming {
        joint: Duration::ZERO,
        alternating: Duration::ZERO,
    };
    for t in 0..trials {
        let users = draw_paths(spec.users, spec.paths, trial_seed(spec.seed, t));
        let start = Instant::now();
        setup.solve_joint(&users)?;
        timing.joint += start.elapsed();
        let start = Instant::now();
        setup.solve_alternating(&users)?;
        timing.alternating += start.elapsed();
    }
    Ok(timing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::check_feasible;

    fn small() -> ExperimentSpec {
        ExperimentSpec {
            rings: 2,
            per_ring: 2,
            users: 4,
            paths: 2,
            grid: 6,
            iterations: 2,
            trials: 6,
            seed: 11,
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn ucla_layout() {
        let cfg = FclaConfig::with_grid(1, 4, GridSize { angles: 12, heights: 4 }, 0.05, 0.1, Pattern::Omni).unwrap();
        let psi: Vec<f64> = ucla_positions(&cfg).iter().map(|p| p.psi).collect();
        let expect = [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI, 3.0 * std::f64::consts::FRAC_PI_2];
        for (a, b) in psi.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let spec = ExperimentSpec::default();
        for g in [4, 8, 12] {
            let cfg = spec.config(g).unwrap();
            check_feasible(&ucla_positions(&cfg), &cfg).unwrap();
        }
    }

    #[test]
    fn snr_and_alpha() {
        let spec = ExperimentSpec { noise_var: 2.0, ..ExperimentSpec::default() };
        assert!((spec.power(10.0) - 20.0).abs() < 1e-12);
        assert_eq!(spec.power(0.0), 2.0);
        assert_eq!(spec.solver_options(0.0).alpha, 2.0);
        assert_eq!(AlphaRule::Fixed { value: 0.3 }.alpha(2.0), 0.3);
        assert!((spec.wavelength() - 0.0999308193333).abs() < 1e-12);
    }

    #[test]
    fn sweep_points() {
        let mut spec = small();
        assert_eq!(spec.points().len(), 1);
        spec.sweep = Some(Sweep::Snr((-3..=3).map(|i| 2.0 * i as f64).collect()));
        assert_eq!(spec.points().len(), 7);
        assert_eq!(spec.points()[0].snr_db, -6.0);
        spec.sweep = Some(Sweep::Grid(vec![4, 5]));
        assert_eq!(spec.points()[1].grid, 5);
        assert_eq!(spec.sweep_var(), "grid");
    }

    #[test]
    fn validation_rejects() {
        assert!(ExperimentSpec { trials: 0, ..small() }.validate().is_err());
        assert!(ExperimentSpec { grid: 1, ..small() }.validate().is_err());
        assert!(ExperimentSpec { methods: vec![], ..small() }.validate().is_err());
        assert!(ExperimentSpec { sweep: Some(Sweep::Iterations(vec![0])), ..small() }.validate().is_err());
        assert!(ExperimentSpec { alpha: AlphaRule::Fixed { value: -1.0 }, ..small() }.validate().is_err());
        small().validate().unwrap();
    }

    #[test]
    fn trials_are_deterministic() {
        let spec = small();
        let point = spec.points()[0];
        let a = run_trial(&spec, &point, 3).unwrap();
        let b = run_trial(&spec, &point, 3).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.1.to_bits(), y.1.to_bits());
        }
        let only = ExperimentSpec { methods: vec![Method::Ucla], ..spec };
        assert_eq!(run_trial(&only, &point, 3).unwrap(), vec![a[0]]);
    }

    #[test]
    fn sweep_is_schedule_independent() {
        let spec = ExperimentSpec { sweep: Some(Sweep::Snr(vec![-2.0, 2.0])), ..small() };
        let a = run_sweep_with_jobs(&spec, Some(1)).unwrap();
        let b = run_sweep_with_jobs(&spec, Some(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.table.rows.len(), 6);
        assert!(a.failures.is_empty());
        for row in &a.table.rows {
            assert_eq!(row.trials, 6);
            assert!(row.mean_sum_rate_bits > 0.0);
        }
    }

    #[test]
    fn stats() {
        assert_eq!(mean_stderr(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_and_manifest_round_trip() {
        let spec = ExperimentSpec { sweep: Some(Sweep::Grid(vec![4, 6])), ..small() };
        let report = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        report.table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,sweep_var,sweep_value,mean_sum_rate_bits,stderr,trials\n"));
        assert_eq!(ResultTable::read_csv(&buf[..]).unwrap(), report.table);

        let mut json = Vec::new();
        Manifest::new(&spec).write(&mut json).unwrap();
        let back: ExperimentSpec = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, spec);
        let empty: ExperimentSpec = serde_json::from_str("{}").unwrap();
        assert_eq!(empty, ExperimentSpec::default());
    }

    #[test]
    fn relative_gain_definition() {
        let row = |method, mean| ResultRow {
            method,
            sweep_var: "snr".into(),
            sweep_value: 0.0,
            mean_sum_rate_bits: mean,
            stderr: 0.0,
            trials: 1,
        };
        let t = ResultTable { rows: vec![row(Method::Ucla, 8.0), row(Method::FclaA, 10.0)] };
        assert_eq!(t.relative_gain(Method::FclaA, Method::Ucla, 0.0), Some(0.25));
        assert_eq!(t.relative_gain(Method::FclaJ, Method::Ucla, 0.0), None);
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("fcla".parse::<Method>().is_err());
    }
}
