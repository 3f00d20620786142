//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 check failure, 2 configuration error, 3 input
//! data or output error. Progress goes to stdout, diagnostics to stderr,
//! artifacts only into the output directory.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector, Matrix4, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{MapSource, RunConfig};
use crate::error::Error;
use crate::explore::{self, EpisodeLog, Strategy};
use crate::icr::{ControlSequence, PlanningProblem};
use crate::liegroup::{self, Pose, Twist};
use crate::mapcore::{GridMap, Information, Occupancy};
use crate::pgm;
use crate::tracking::{Measurement, Sensor, TargetBelief, TargetModel, TrackingProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    CheckFailed = 1,
    ConfigError = 2,
    DataError = 3,
}

#[derive(Debug, Parser)]
#[command(name = "icr", version, about = "Information-driven exploration and target-tracking planner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run exploration episodes and write per-episode logs and snapshots.
    Explore(CommonArgs),
    /// Compare analytic gradients against finite differences.
    Gradcheck(CommonArgs),
    /// Sweep the one-step tracking cost over robot positions.
    Costmap(CommonArgs),
    /// Optimize a tracking control sequence by gradient descent.
    Track(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration file (defaults apply when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// A command that could not complete, with the exit code to report.
#[derive(Debug)]
pub struct Failure {
    pub code: ExitCode,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: ExitCode::ConfigError,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: ExitCode::DataError,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) => Failure::config(e.to_string()),
            _ => Failure::data(e.to_string()),
        }
    }
}

pub type CmdResult = std::result::Result<ExitCode, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::ConfigError
            } else {
                ExitCode::Success
            };
        }
    };
    let result = match &cli.command {
        Command::Explore(a) => cmd_explore(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Costmap(a) => cmd_costmap(a),
        Command::Track(a) => cmd_track(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load_config(args: &CommonArgs) -> std::result::Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path).map_err(|e| Failure::config(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg.seeds = vec![seed];
    }
    Ok(cfg)
}

fn prepare_output(dir: &Path) -> std::result::Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> std::result::Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

pub fn load_map(cfg: &RunConfig) -> crate::Result<GridMap> {
    match &cfg.map {
        MapSource::File {
            path, resolution, ..
        } => pgm::load_map(path, *resolution, cfg.map_origin()),
        MapSource::Synthetic {
            width,
            height,
            resolution,
        } => GridMap::synthetic_room(*width, *height, *resolution),
    }
}

fn episode_csv(log: &EpisodeLog) -> String {
    let mut out = String::from(explore::CSV_HEADER);
    out.push('\n');
    for row in log.csv_rows() {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn cmd_explore(args: &CommonArgs) -> CmdResult {
    let cfg = load_config(args)?;
    let map = load_map(&cfg).map_err(|e| Failure::data(e.to_string()))?;
    prepare_output(&cfg.output_dir)?;
    let jobs: Vec<(Strategy, u64)> = cfg
        .strategies
        .iter()
        .flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let workers = cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::data(e.to_string()))?;
    println!(
        "exploring {} episode(s) on a {}x{} map with {} worker(s)",
        jobs.len(),
        map.height(),
        map.width(),
        workers
    );
    let logs: Vec<crate::Result<EpisodeLog>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(strategy, seed)| explore::run_episode(&cfg.episode_config(strategy, seed), &map))
            .collect()
    });
    for log in logs {
        let log = log?;
        let stem = format!("episode_{}_seed{}", log.strategy, log.seed);
        write_text(&cfg.output_dir.join(format!("{stem}.csv")), &episode_csv(&log))?;
        for snap in &log.snapshots {
            let base = cfg.output_dir.join(format!("{stem}_step{}", snap.step));
            pgm::occupancy_image(map.width(), map.height(), &snap.labels)
                .write(&base.with_extension("map.pgm"))
                .map_err(Failure::from)?;
            pgm::heatmap_image(map.width(), map.height(), &snap.info)
                .write(&base.with_extension("info.pgm"))
                .map_err(Failure::from)?;
        }
        println!(
            "{:>13} seed {:>4}: final reward {:.3}",
            log.strategy.name(),
            log.seed,
            log.final_reward()
        );
    }
    Ok(ExitCode::Success)
}

/// Error of an analytic derivative against its finite-difference estimate:
/// relative where the estimate exceeds `floor`, absolute otherwise.
pub fn derivative_error(analytic: f64, fd: f64, floor: f64) -> f64 {
    let diff = (analytic - fd).abs();
    if fd.abs() > floor {
        diff / fd.abs()
    } else {
        diff
    }
}

/// Central difference of `log det Y_K` computed cell by cell as
/// `sum_j ln(Y+_jj / Y-_jj)`, which avoids cancelling two large sums.
fn fd_reward(
    problem: &PlanningProblem,
    u: &ControlSequence,
    k: usize,
    i: usize,
    h: f64,
) -> crate::Result<f64> {
    let base = u.controls()[k].component(i);
    let plus = problem.forward_pass(&u.with_component(k, i, base + h)?)?.info.diagonal();
    let minus = problem.forward_pass(&u.with_component(k, i, base - h)?)?.info.diagonal();
    let sum: f64 = plus
        .iter()
        .zip(minus.iter())
        .map(|(p, m)| ((p - m) / m).ln_1p())
        .sum();
    Ok(sum / (2.0 * h))
}

struct GradInstance {
    map: GridMap,
    prior: Information,
    start: Pose,
    controls: ControlSequence,
}

fn random_grad_instance(rng: &mut ChaCha8Rng, index: usize) -> crate::Result<GradInstance> {
    let horizon = [1, 2, 3, 5][index % 4];
    let width = rng.random_range(3..=8);
    let height = rng.random_range(3..=8);
    let resolution = 0.5;
    let origin = Vector2::new(-0.5, -0.5 * height as f64 / 2.0);
    let map = GridMap::filled(width, height, resolution, origin, Occupancy::Free)?;
    let prior = Information::Diagonal(DVector::from_fn(map.len(), |_, _| {
        0.01 + rng.random_range(0.0..3.0)
    }));
    let start = Pose::planar(
        rng.random_range(-1.0..0.5),
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
    );
    // every fourth instance exercises the full SE(3) path
    let spatial = index % 4 == 3;
    let controls = (0..horizon)
        .map(|_| {
            let mut v = [
                rng.random_range(0.0..2.0),
                rng.random_range(-0.5..0.5),
                0.0,
                0.0,
                0.0,
                rng.random_range(-1.0..1.0),
            ];
            if spatial {
                v[2] = rng.random_range(-0.2..0.2);
                v[3] = rng.random_range(-0.2..0.2);
                v[4] = rng.random_range(-0.2..0.2);
            }
            Twist::from_array(v)
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(GradInstance {
        map,
        prior,
        start,
        controls: ControlSequence::new(controls, 0.5)?,
    })
}

fn tracking_fixture(sensor: Sensor, rng: &mut ChaCha8Rng, horizon: usize) -> crate::Result<(TrackingProblem, ControlSequence)> {
    let model = TargetModel::constant_velocity(0.5, 0.1)?;
    let belief = TargetBelief::new(
        DVector::from_vec(vec![3.0, 4.0, 0.2, -0.1]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 0.7, 0.1, 0.1])),
    )?;
    let problem = TrackingProblem {
        model,
        belief,
        measurement: Measurement::new(sensor, 0.1)?,
        start: Pose::planar(0.0, 0.0, rng.random_range(-0.5..0.5)),
        weights: (0..horizon).map(|_| rng.random_range(0.0..1.0)).collect(),
    };
    let controls = (0..horizon)
        .map(|_| {
            Twist::planar(
                rng.random_range(0.5..1.5),
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.5..0.5),
            )
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok((problem, ControlSequence::new(controls, 0.5)?))
}

pub fn cmd_gradcheck(args: &CommonArgs) -> CmdResult {
    let cfg = load_config(args)?;
    let g = &cfg.gradcheck;
    let floor = 1e-7;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // worst error per (k, i) over all planner instances
    let mut table = vec![[0.0f64; 6]; 5];
    let corrupt = g.corrupt_dexp;
    let dexp = move |tau: f64, u: &Twist, i: usize| -> Matrix4<f64> {
        let d = liegroup::dexp_du(tau, u, i);
        if corrupt {
            d * 1.1
        } else {
            d
        }
    };
    for index in 0..g.instances {
        let inst = random_grad_instance(&mut rng, index)?;
        let problem = PlanningProblem {
            start: inst.start,
            prior: &inst.prior,
            positions: inst.map.positions(),
            fov: &cfg.fov,
        };
        let grad = problem.gradient_masked(&inst.controls, &[true; 6], dexp)?;
        for (k, row) in grad.iter().enumerate() {
            for (i, a) in row.iter().enumerate() {
                let fd = fd_reward(&problem, &inst.controls, k, i, g.fd_step)?;
                let err = derivative_error(*a, fd, floor);
                table[k][i] = table[k][i].max(err);
            }
        }
    }
    let icr_worst = table.iter().flatten().fold(0.0f64, |m, e| m.max(*e));

    let mut track_worst = 0.0f64;
    let mut track_where = (Sensor::Range, 0, 0, 0);
    for sensor in [Sensor::Range, Sensor::Bearing] {
        for horizon in 1..=5 {
            let (problem, u) = tracking_fixture(sensor, &mut rng, horizon)?;
            for k in 0..horizon {
                for i in liegroup::PLANAR_COMPONENTS {
                    let sens = problem.sensitivities(&u, k, i)?;
                    let base = u.controls()[k].component(i);
                    let plus = problem.rollout(&u.with_component(k, i, base + g.fd_step)?)?;
                    let minus = problem.rollout(&u.with_component(k, i, base - g.fd_step)?)?;
                    for t in 0..horizon {
                        let fd = (&plus.covs[t + 1] - &minus.covs[t + 1]) / (2.0 * g.fd_step);
                        let diff = (&sens[t] - &fd).norm();
                        let scale = fd.norm();
                        let err = if scale > floor { diff / scale } else { diff };
                        if err > track_worst {
                            track_worst = err;
                            track_where = (sensor, horizon, k, i);
                        }
                    }
                }
            }
        }
    }

    println!("planner gradient: worst error per (k, i) over {} instances", g.instances);
    println!("   k        vx        vy        vz        wx        wy        wz");
    for (k, row) in table.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|e| format!("{e:9.2e}")).collect();
        println!("{k:>4} {}", cells.join(" "));
    }
    println!("planner gradient max error: {icr_worst:.3e}");
    println!("tracking sensitivity max error: {track_worst:.3e}");
    let mut ok = true;
    if !(icr_worst < g.tolerance) {
        let (k, i) = worst_index(&table);
        eprintln!(
            "planner gradient check failed: error {icr_worst:.3e} at k = {k}, component {i}"
        );
        ok = false;
    }
    if !(track_worst < g.tolerance) {
        let (sensor, horizon, k, i) = track_where;
        eprintln!(
            "tracking sensitivity check failed: error {track_worst:.3e} for {sensor:?}, horizon {horizon}, k = {k}, component {i}"
        );
        ok = false;
    }
    Ok(if ok {
        ExitCode::Success
    } else {
        ExitCode::CheckFailed
    })
}

fn worst_index(table: &[[f64; 6]]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut worst = -1.0;
    for (k, row) in table.iter().enumerate() {
        for (i, e) in row.iter().enumerate() {
            if *e > worst {
                worst = *e;
                best = (k, i);
            }
        }
    }
    best
}

/// `lo, lo + res, ...` up to `hi` (inclusive within rounding).
pub fn grid_axis(lo: f64, hi: f64, res: f64) -> Vec<f64> {
    let n = ((hi - lo) / res + 1e-9).floor() as usize + 1;
    (0..n).map(|i| lo + i as f64 * res).collect()
}

pub fn cmd_costmap(args: &CommonArgs) -> CmdResult {
    let cfg = load_config(args)?;
    let c = &cfg.costmap;
    let model = TargetModel::static_target(c.process_noise)?;
    let belief = TargetBelief::new(
        DVector::from_vec(c.target_mean.to_vec()),
        DMatrix::from_diagonal(&DVector::from_vec(c.target_cov.to_vec())),
    )?;
    let meas = Measurement::new(c.sensor, c.noise_var)?;
    let xs = grid_axis(c.x_range[0], c.x_range[1], c.resolution);
    let ys = grid_axis(c.y_range[0], c.y_range[1], c.resolution);
    let grid = crate::tracking::cost_map(&xs, &ys, &belief, &meas, &model)?;
    prepare_output(&cfg.output_dir)?;
    let mut out = String::from("x,y,cost\n");
    for (x, y, cost) in &grid {
        out.push_str(&format!("{x},{y},{cost}\n"));
    }
    write_text(&cfg.output_dir.join("costmap.csv"), &out)?;
    let best = grid
        .iter()
        .filter(|r| r.2.is_finite())
        .min_by(|a, b| a.2.total_cmp(&b.2));
    println!("costmap: {} x {} points", xs.len(), ys.len());
    if let Some((x, y, cost)) = best {
        println!("minimum {cost:.6} at ({x:.3}, {y:.3})");
    }
    Ok(ExitCode::Success)
}

pub fn tracking_problem(cfg: &RunConfig) -> crate::Result<(TrackingProblem, ControlSequence)> {
    let t = &cfg.track;
    let model = TargetModel::constant_velocity(t.tau, t.diffusion)?;
    let belief = TargetBelief::new(
        DVector::from_vec(t.target_mean.to_vec()),
        DMatrix::from_diagonal(&DVector::from_vec(t.target_cov.to_vec())),
    )?;
    let weights = t
        .weights
        .clone()
        .unwrap_or_else(|| TrackingProblem::terminal_weights(t.horizon));
    let problem = TrackingProblem {
        model,
        belief,
        measurement: Measurement::new(t.sensor, t.noise_var)?,
        start: Pose::planar(t.start[0], t.start[1], t.start[2]),
        weights,
    };
    let [vx, vy, w] = t.initial_control;
    let u0 = ControlSequence::constant(Twist::planar(vx, vy, w)?, t.horizon, t.tau)?;
    Ok((problem, u0))
}

pub fn cmd_track(args: &CommonArgs) -> CmdResult {
    let cfg = load_config(args)?;
    let t = &cfg.track;
    let (problem, u0) = tracking_problem(&cfg)?;
    let active = t.active_mask()?;
    let result = problem.descend(&u0, &t.alpha6(), &active, t.iterations)?;
    prepare_output(&cfg.output_dir)?;
    let mut iters = String::from("iter,cost,grad_inf_norm\n");
    for (i, (c, g)) in result.cost_trace.iter().zip(&result.grad_inf_norm_trace).enumerate() {
        iters.push_str(&format!("{i},{c},{g}\n"));
    }
    write_text(&cfg.output_dir.join("track_iterations.csv"), &iters)?;
    let mut traj = String::from("t,x,y,theta\n");
    for (i, pose) in std::iter::once(&problem.start).chain(&result.poses).enumerate() {
        let p = pose.translation();
        traj.push_str(&format!("{i},{},{},{}\n", p.x, p.y, pose.heading()));
    }
    write_text(&cfg.output_dir.join("track_trajectory.csv"), &traj)?;
    let first = result.cost_trace.first().copied().unwrap_or(f64::NAN);
    let last = result.cost_trace.last().copied().unwrap_or(f64::NAN);
    let grad = result.grad_inf_norm_trace.last().copied().unwrap_or(f64::NAN);
    println!(
        "track: {} iterations, cost {first:.6} -> {last:.6}, final gradient inf-norm {grad:.3e}",
        result.cost_trace.len().saturating_sub(1)
    );
    let _ = std::io::stdout().flush();
    Ok(ExitCode::Success)
}
