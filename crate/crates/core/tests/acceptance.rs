//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use icr_core::explore::{self, EpisodeConfig, Strategy};
use icr_core::fov::{self, ConeFov};
use icr_core::icr::{ControlLimits, ControlSequence, PlanningProblem, StepPolicy};
use icr_core::liegroup::{self, Pose, Twist, VX, VY, WZ};
use icr_core::mapcore::{self, GridMap, Information, MapBelief, Occupancy};
use icr_core::tracking::{self, Measurement, Sensor, TargetBelief, TargetModel, TrackingProblem};
use icr_core::{cli, config::RunConfig};
use nalgebra::{DMatrix, DVector, Matrix4, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("lie group exponential and derivative", 10, lie_group),
        ("cone distance fidelity", 30, sdf_fidelity),
        ("probit anchor", 5, probit_anchor),
        ("planner gradient vs finite differences", 120, planner_gradient),
        ("covariance and information filter duality", 30, filter_duality),
        ("planner improvement", 180, planner_improvement),
        ("exploration ordering", 300, exploration_ordering),
        ("tracking cost map", 30, cost_map),
        ("tracking descent and sensitivities", 120, tracking_convergence),
        ("explore determinism", 120, explore_determinism),
    ];
    let mut failed = 0;
    for (n, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(*budget) => Err(format!(
                "{detail}; took {:.1}s, budget {budget}s",
                elapsed.as_secs_f64()
            )),
            other => other,
        };
        match outcome {
            Ok(detail) => println!(
                "criterion {:>2} PASS  {name}: {detail} ({:.1}s)",
                n + 1,
                elapsed.as_secs_f64()
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {:>2} FAIL  {name}: {detail} ({:.1}s)",
                    n + 1,
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn twist_hat(u: &Twist) -> Matrix4<f64> {
    let v = u.to_array();
    Matrix4::new(
        0.0, -v[5], v[4], v[0], //
        v[5], 0.0, -v[3], v[1], //
        -v[4], v[3], 0.0, v[2], //
        0.0, 0.0, 0.0, 0.0,
    )
}

/// Truncated power series with scaling and squaring, so the twenty terms
/// are only ever summed for a matrix of norm at most 1/2.
fn series_exp(a: &Matrix4<f64>) -> Matrix4<f64> {
    let norm = a.abs().row_sum().max();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(squarings);
    let mut term = Matrix4::identity();
    let mut sum = Matrix4::identity();
    for n in 1..=20 {
        term = term * scaled / n as f64;
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

fn random_twist(rng: &mut impl Rng, planar: bool) -> Twist {
    let w = if planar {
        [0.0, 0.0, rng.random_range(-10.0..10.0)]
    } else {
        let dir = nalgebra::Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .normalize();
        let mag = rng.random_range(0.0..10.0);
        [dir.x * mag, dir.y * mag, dir.z * mag]
    };
    let v = [
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
        if planar { 0.0 } else { rng.random_range(-3.0..3.0) },
    ];
    Twist::from_array([v[0], v[1], v[2], w[0], w[1], w[2]]).unwrap()
}

fn lie_group() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_exp = 0.0f64;
    for n in 0..10_000 {
        let planar = n % 2 == 0;
        let u = random_twist(&mut rng, planar);
        let tau = rng.random_range(0.0..=1.0);
        let oracle = series_exp(&(twist_hat(&u) * tau));
        let got = if planar {
            liegroup::exp_se2(tau, &u)
        } else {
            liegroup::exp_se3(tau, &u)
        };
        worst_exp = worst_exp.max((got.matrix() - oracle).amax());
    }

    let mut worst_dexp = 0.0f64;
    let h = 1e-6;
    for n in 0..200 {
        let u = random_twist(&mut rng, n % 2 == 0);
        let tau = rng.random_range(0.05..=1.0);
        for i in 0..6 {
            let up = u.with_component(i, u.component(i) + h).unwrap();
            let dn = u.with_component(i, u.component(i) - h).unwrap();
            let fd = (liegroup::exp_se3(tau, &up).matrix() - liegroup::exp_se3(tau, &dn).matrix()) / (2.0 * h);
            let d = liegroup::dexp_du(tau, &u, i);
            worst_dexp = worst_dexp.max((d - fd).norm() / fd.norm().max(1e-7));
        }
    }

    // translation columns of the planar derivatives in closed form
    let mut worst_closed = 0.0f64;
    for _ in 0..1000 {
        let w = rng.random_range(0.01..10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let u = Twist::planar(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), w).unwrap();
        let tau = rng.random_range(0.0..=1.0);
        let (s, c) = ((w * tau).sin() / w, (1.0 - (w * tau).cos()) / w);
        let mut dvx = Matrix4::zeros();
        dvx[(0, 3)] = s;
        dvx[(1, 3)] = c;
        let mut dvy = Matrix4::zeros();
        dvy[(0, 3)] = -c;
        dvy[(1, 3)] = s;
        worst_closed = worst_closed
            .max((liegroup::dexp_du(tau, &u, VX) - dvx).amax())
            .max((liegroup::dexp_du(tau, &u, VY) - dvy).amax());
    }

    ensure(
        worst_exp <= 1e-10 && worst_dexp <= 1e-5 && worst_closed <= 1e-12,
        format!("exp err {worst_exp:.2e}, dexp rel err {worst_dexp:.2e}, planar closed form err {worst_closed:.2e}"),
    )
}

fn sdf_fidelity() -> Outcome {
    let fov = ConeFov::new(3.0, PI / 6.0, 1.0, 0.5).unwrap();
    let w = 3.0 * (PI / 6.0).tan();
    let corners = [Vector2::zeros(), Vector2::new(3.0, w), Vector2::new(3.0, -w)];
    let lengths: Vec<f64> = (0..3).map(|e| (corners[(e + 1) % 3] - corners[e]).norm()).collect();
    let perimeter: f64 = lengths.iter().sum();
    let samples = 10_000;
    let boundary: Vec<Vector2<f64>> = (0..samples)
        .map(|n| {
            let mut s = perimeter * n as f64 / samples as f64;
            let mut e = 0;
            while s > lengths[e] {
                s -= lengths[e];
                e += 1;
            }
            let (a, b) = (corners[e], corners[(e + 1) % 3]);
            a + (b - a) * (s / lengths[e])
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let q = Vector2::new(rng.random_range(-2.0..5.0), rng.random_range(-4.0..4.0));
        let dist = boundary.iter().map(|b| (q - b).norm()).fold(f64::INFINITY, f64::min);
        let oracle = if fov.contains(&q) { -dist } else { dist };
        worst = worst.max((fov::sdf_cone2d(&q, &fov).distance - oracle).abs());
    }

    let mut violations = 0;
    for _ in 0..100_000 {
        let q = Vector2::new(rng.random_range(-2.0..5.0), rng.random_range(-4.0..4.0));
        let d = fov::sdf_cone2d(&q, &fov).distance;
        if (d < 0.0) != fov.contains(&q) && d != 0.0 {
            violations += 1;
        }
    }
    ensure(
        worst <= 2e-3 && violations == 0,
        format!("max |error| {worst:.2e}, sign violations {violations}"),
    )
}

fn probit_anchor() -> Outcome {
    let at_zero = fov::probit(0.0, 0.5);
    let grid: Vec<f64> = (0..10_000).map(|n| fov::probit(-5.0 + 10.0 * n as f64 / 9999.0, 0.5)).collect();
    let monotone = grid.windows(2).all(|w| w[1] >= w[0]);
    let sharp = fov::probit(0.5, 1e-3);
    ensure(
        (at_zero - 0.00234).abs() <= 1e-5 && monotone && sharp > 1.0 - 1e-12,
        format!("phi(0) = {at_zero:.6}, monotone {monotone}, phi(0.5; 1e-3) = {sharp}"),
    )
}

/// `d log det Y_K / du` by central differences, summed cell by cell.
fn fd_reward(problem: &PlanningProblem, u: &ControlSequence, k: usize, i: usize, h: f64) -> f64 {
    let base = u.controls()[k].component(i);
    let plus = problem.forward_pass(&u.with_component(k, i, base + h).unwrap()).unwrap().info.diagonal();
    let minus = problem.forward_pass(&u.with_component(k, i, base - h).unwrap()).unwrap().info.diagonal();
    plus.iter().zip(minus.iter()).map(|(p, m)| ((p - m) / m).ln_1p()).sum::<f64>() / (2.0 * h)
}

fn planner_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let fov = ConeFov::default();
    let mut worst = 0.0f64;
    let mut nontrivial = 0;
    let instances = 60;
    for n in 0..instances {
        let horizon = [1, 2, 3, 5][n % 4];
        let (width, height) = (rng.random_range(2..=8), rng.random_range(2..=8));
        let origin = Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-2.0..0.0));
        let map = GridMap::filled(width, height, 0.5, origin, Occupancy::Free).unwrap();
        let prior = Information::Diagonal(DVector::from_fn(map.len(), |_, _| rng.random_range(0.01..2.0)));
        let start = Pose::planar(rng.random_range(-1.5..0.0), rng.random_range(-1.0..1.0), rng.random_range(-0.6..0.6));
        let rows: Vec<[f64; 6]> = (0..horizon)
            .map(|_| {
                let mut r = [0.0; 6];
                r[VX] = rng.random_range(0.0..2.0);
                r[VY] = rng.random_range(-0.5..0.5);
                r[WZ] = rng.random_range(-1.0..1.0);
                r
            })
            .collect();
        let u = ControlSequence::from_rows(&rows, 0.5).unwrap();
        let problem = PlanningProblem {
            start,
            prior: &prior,
            positions: map.positions(),
            fov: &fov,
        };
        let grad = problem.gradient(&u).unwrap();
        for (k, row) in grad.iter().enumerate() {
            for (i, g) in row.iter().enumerate() {
                let fd = fd_reward(&problem, &u, k, i, 1e-5);
                if fd.abs() > 1e-7 {
                    nontrivial += 1;
                }
                worst = worst.max(cli::derivative_error(*g, fd, 1e-7));
            }
        }
    }
    ensure(
        worst <= 1e-4 && nontrivial > 0,
        format!("{instances} instances, worst error {worst:.2e}, {nontrivial} non-trivial entries"),
    )
}

fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
    &a * a.transpose() + DMatrix::identity(n, n) * rng.random_range(0.2..2.0)
}

fn filter_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fov = ConeFov::default();
    let mut worst_cov = 0.0f64;
    let mut worst_mean = 0.0f64;
    for _ in 0..20 {
        let (w, h) = (rng.random_range(2..=5), rng.random_range(2..=5));
        let map = GridMap::filled(w, h, 0.5, Vector2::zeros(), Occupancy::Free).unwrap();
        let n = map.len();
        let cov0 = random_spd(&mut rng, n);
        let mean0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let info0 = cov0.clone().cholesky().unwrap().inverse();
        let mut belief = MapBelief::new(mean0.clone(), Information::Dense(info0)).unwrap();
        let (mut mean, mut cov) = (mean0, cov0);
        for _ in 0..10 {
            let pose = Pose::planar(rng.random_range(-2.0..1.0), rng.random_range(-1.0..2.5), rng.random_range(-0.8..0.8));
            let m = mapcore::info_contribution(&pose, map.positions(), &fov);
            let z = mapcore::Measurement {
                z: DVector::from_fn(n, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 }),
                mask: vec![true; n],
            };
            (mean, cov) = mapcore::ekf_update(&mean, &cov, &z, &m).unwrap();
            belief = belief.eif_update(&m, &z).unwrap();
            let y_inv = belief.info().to_dense().cholesky().unwrap().inverse();
            worst_cov = worst_cov.max((&cov - y_inv).amax());
            worst_mean = worst_mean.max((&mean - belief.mean()).amax());
        }
    }

    // diagonal storage against dense storage over a full episode
    let truth = GridMap::synthetic_room(6, 6, 0.5).unwrap();
    let mut diag = MapBelief::diagonal_prior(truth.len(), 100.0).unwrap();
    let mut dense = MapBelief::dense_prior(truth.len(), 100.0).unwrap();
    let mut pose = Pose::planar(-1.0, 1.5, 0.0);
    let mut worst_path = 0.0f64;
    for _ in 0..60 {
        pose = pose.compose(&icr_core::icr::step_exp(0.5, &explore::policy_random_step(&mut rng)));
        let z = mapcore::sample_measurement(&truth, &pose, &fov, diag.mean()).unwrap();
        let m = mapcore::info_contribution(&pose, truth.positions(), &fov);
        diag.eif_update_in_place(&m, &z).unwrap();
        dense.eif_update_in_place(&m, &z).unwrap();
        worst_path = worst_path
            .max((diag.info_diagonal() - dense.info_diagonal()).amax())
            .max((diag.mean() - dense.mean()).amax());
    }
    ensure(
        worst_cov <= 1e-8 && worst_mean <= 1e-8 && worst_path <= 1e-9,
        format!("cov err {worst_cov:.2e}, mean err {worst_mean:.2e}, diagonal vs dense {worst_path:.2e}"),
    )
}

fn planner_improvement() -> Outcome {
    let map = GridMap::filled(20, 20, 0.5, Vector2::zeros(), Occupancy::Free).unwrap();
    // left half already observed
    let prior = Information::Diagonal(DVector::from_fn(map.len(), |j, _| {
        if j % 20 < 10 {
            5.0
        } else {
            0.01
        }
    }));
    let fov = ConeFov::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let runs = 50;
    let (mut improved, mut monotone) = (0, 0);
    for _ in 0..runs {
        let start = Pose::planar(rng.random_range(1.0..9.0), rng.random_range(1.0..9.0), rng.random_range(-PI..PI));
        let u0 = explore::init_trajectory_random(&mut rng, 5, 0.5).unwrap();
        let problem = PlanningProblem {
            start,
            prior: &prior,
            positions: map.positions(),
            fov: &fov,
        };
        let result = problem
            .optimize(&u0, &StepPolicy::default(), &ControlLimits::planar(), 10)
            .unwrap();
        if result.final_reward() > result.reward_trace[0] {
            improved += 1;
        }
        if result.reward_trace.windows(2).all(|w| w[1] >= w[0]) {
            monotone += 1;
        }
    }
    ensure(
        improved * 10 >= runs * 9 && monotone == runs,
        format!("improved {improved}/{runs}, monotone traces {monotone}/{runs}"),
    )
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn exploration_ordering() -> Outcome {
    use rayon::prelude::*;
    let truth = GridMap::synthetic_room(40, 30, 0.5).unwrap();
    let seeds: Vec<u64> = (0..20).collect();
    let run = |strategy| -> Vec<f64> {
        seeds
            .par_iter()
            .map(|&seed| {
                let cfg = EpisodeConfig::new(strategy, seed, Pose::planar(3.0, 3.0, 0.0));
                explore::run_episode(&cfg, &truth).unwrap().final_reward()
            })
            .collect()
    };
    let icr = run(Strategy::Icr);
    let random = run(Strategy::Random);
    let (m_icr, se_icr) = mean_and_se(&icr);
    let (m_rnd, se_rnd) = mean_and_se(&random);
    let se = (se_icr * se_icr + se_rnd * se_rnd).sqrt();
    let wins = icr.iter().zip(&random).filter(|(a, b)| a >= b).count();
    ensure(
        m_icr - m_rnd > 2.0 * se && wins * 5 >= seeds.len() * 4,
        format!(
            "icr {m_icr:.1} vs random {m_rnd:.1}, gap {:.1} = {:.1} SE, icr >= random in {wins}/{}",
            m_icr - m_rnd,
            (m_icr - m_rnd) / se,
            seeds.len()
        ),
    )
}

fn cost_map() -> Outcome {
    let belief = TargetBelief::new(
        DVector::from_vec(vec![3.0, 4.0]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 0.7])),
    )
    .unwrap();
    let model = TargetModel::static_target(0.0).unwrap();
    let xs = cli::grid_axis(0.0, 6.0, 0.1);
    let ys = cli::grid_axis(0.0, 8.0, 0.1);
    let range = tracking::cost_map(&xs, &ys, &belief, &Measurement::new(Sensor::Range, 0.1).unwrap(), &model).unwrap();
    let nx = xs.len();
    let (mut best, mut best_x) = (f64::INFINITY, f64::NAN);
    for &(x, _, c) in &range {
        if c < best {
            best = c;
            best_x = x;
        }
    }
    let mut asym = 0.0f64;
    for row in 0..ys.len() {
        for col in 0..nx {
            let (a, b) = (range[row * nx + col].2, range[row * nx + nx - 1 - col].2);
            if a.is_nan() != b.is_nan() {
                asym = f64::INFINITY;
            } else if !a.is_nan() {
                asym = asym.max((a - b).abs());
            }
        }
    }

    let bearing = tracking::cost_map(
        &xs,
        &[4.0],
        &belief,
        &Measurement::new(Sensor::Bearing, 0.1).unwrap(),
        &model,
    )
    .unwrap();
    let left: Vec<f64> = bearing.iter().filter(|p| p.0 < 2.95).map(|p| p.2).collect();
    let right: Vec<f64> = bearing.iter().rev().filter(|p| p.0 > 3.05).map(|p| p.2).collect();
    let decreasing = left.windows(2).all(|w| w[1] < w[0]) && right.windows(2).all(|w| w[1] < w[0]);
    ensure(
        (best_x - 3.0).abs() <= 0.1 + 1e-9 && asym <= 1e-9 && decreasing,
        format!("range argmin x = {best_x:.2}, mirror asymmetry {asym:.2e}, bearing decreasing toward target {decreasing}"),
    )
}

fn tracking_convergence() -> Outcome {
    let cfg = RunConfig::default();
    let (problem, u0) = cli::tracking_problem(&cfg).unwrap();
    let active = cfg.track.active_mask().unwrap();
    let result = problem.descend(&u0, &cfg.track.alpha6(), &active, cfg.track.iterations).unwrap();
    let first = result.cost_trace[0];
    let last = *result.cost_trace.last().unwrap();
    let grad = *result.grad_inf_norm_trace.last().unwrap();
    let converged = last < first && grad < 1e-3 && result.cost_trace.len() <= 501;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    let h = 1e-6;
    for n in 0..20 {
        let horizon = 1 + n % 5;
        let sensor = if n % 2 == 0 { Sensor::Range } else { Sensor::Bearing };
        let problem = TrackingProblem {
            model: TargetModel::constant_velocity(0.5, 0.1).unwrap(),
            belief: TargetBelief::new(
                DVector::from_vec(vec![3.0, 4.0, 0.2, -0.1]),
                DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 0.7, 0.1, 0.1])),
            )
            .unwrap(),
            measurement: Measurement::new(sensor, 0.1).unwrap(),
            start: Pose::planar(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)),
            weights: TrackingProblem::terminal_weights(horizon),
        };
        let rows: Vec<[f64; 6]> = (0..horizon)
            .map(|_| {
                let mut r = [0.0; 6];
                r[VX] = rng.random_range(0.5..1.5);
                r[VY] = rng.random_range(-0.3..0.3);
                r[WZ] = rng.random_range(-0.5..0.5);
                r
            })
            .collect();
        let u = ControlSequence::from_rows(&rows, 0.5).unwrap();
        for k in 0..horizon {
            for i in [VX, VY, WZ] {
                let sens = problem.sensitivities(&u, k, i).unwrap();
                let base = u.controls()[k].component(i);
                let plus = problem.rollout(&u.with_component(k, i, base + h).unwrap()).unwrap().covs;
                let minus = problem.rollout(&u.with_component(k, i, base - h).unwrap()).unwrap().covs;
                for t in 1..=horizon {
                    let fd = (&plus[t] - &minus[t]) / (2.0 * h);
                    let a = &sens[t - 1];
                    let err = if fd.norm() > 1e-7 {
                        (a - &fd).norm() / fd.norm()
                    } else {
                        (a - &fd).norm()
                    };
                    worst = worst.max(err);
                }
            }
        }
    }
    ensure(
        converged && worst <= 1e-4,
        format!(
            "cost {first:.4} -> {last:.4} in {} iterations, final |grad| {grad:.2e}, sensitivity err {worst:.2e}",
            result.cost_trace.len() - 1
        ),
    )
}

fn explore_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{
  "seeds": [3, 4],
  "strategies": ["icr", "icr_frontier", "frontier", "random"],
  "map": {"kind": "synthetic", "width": 16, "height": 12, "resolution": 0.5},
  "episode": {"total_steps": 40, "initial_pose": [2.0, 2.0, 0.0], "snapshot_steps": [20, 40]}
}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let code = cli::run([
            "icr",
            "explore",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        if code != cli::ExitCode::Success {
            return Err(format!("explore exited with {code:?}"));
        }
        let mut files: Vec<_> = std::fs::read_dir(&out)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        let contents: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
            .collect();
        outputs.push(contents);
    }
    let csvs = outputs[0].iter().filter(|(n, _)| n.ends_with(".csv")).count();
    ensure(
        outputs[0] == outputs[1] && csvs == 8,
        format!("{} files ({csvs} CSV) identical across runs: {}", outputs[0].len(), outputs[0] == outputs[1]),
    )
}
