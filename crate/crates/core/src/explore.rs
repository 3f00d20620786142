//! Exploration episodes: receding-horizon planning against a simulated
//! occupancy map, with frontier and random baselines.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DVector, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fov::ConeFov;
use crate::icr::{step_exp, ControlLimits, ControlSequence, PlanningProblem, StepPolicy};
use crate::liegroup::{Pose, Twist};
use crate::mapcore::{self, GridMap, MapBelief, Occupancy};

pub const CRUISE_SPEED: f64 = 1.5;
pub const INIT_TURN_RANGE: f64 = PI / 10.0;
pub const RANDOM_TURN_RANGE: f64 = PI / 3.0;
/// A cell counts as explored once its information reaches this multiple of
/// the prior information.
pub const EXPLORED_RATIO: f64 = 2.0;
/// Distance outside the map extent that triggers re-centering.
pub const SOFT_CLAMP_MARGIN: f64 = 2.0;
const REORTHONORMALIZE_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Icr,
    IcrFrontier,
    Frontier,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Icr,
        Strategy::IcrFrontier,
        Strategy::Frontier,
        Strategy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Icr => "icr",
            Strategy::IcrFrontier => "icr_frontier",
            Strategy::Frontier => "frontier",
            Strategy::Random => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub strategy: Strategy,
    pub horizon: usize,
    pub total_steps: usize,
    pub tau: f64,
    pub seed: u64,
    pub fov: ConeFov,
    pub initial_pose: Pose,
    pub policy: StepPolicy,
    pub limits: ControlLimits,
    pub iterations: usize,
    pub replan_every: usize,
    pub prior_variance: f64,
    pub snapshot_steps: Vec<usize>,
}

impl EpisodeConfig {
    pub fn new(strategy: Strategy, seed: u64, initial_pose: Pose) -> Self {
        Self {
            strategy,
            horizon: 5,
            total_steps: 300,
            tau: 0.5,
            seed,
            fov: ConeFov::default(),
            initial_pose,
            policy: StepPolicy::default(),
            limits: ControlLimits::planar(),
            iterations: 10,
            replan_every: 5,
            prior_variance: 100.0,
            snapshot_steps: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.total_steps < self.horizon {
            return Err(Error::InvalidParameter(format!(
                "need total_steps >= horizon >= 1, got {} and {}",
                self.total_steps, self.horizon
            )));
        }
        if self.replan_every == 0 {
            return Err(Error::InvalidParameter("replan_every must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.prior_variance > 0.0 && self.prior_variance.is_finite()) {
            return Err(Error::InvalidParameter("prior variance must be positive".into()));
        }
        self.policy.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub reward: f64,
    /// A new plan was computed before this step.
    pub replanned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub labels: Vec<Occupancy>,
    pub info: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub strategy: Strategy,
    pub seed: u64,
    pub initial_reward: f64,
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub belief: MapBelief,
}

impl EpisodeLog {
    pub fn final_reward(&self) -> f64 {
        self.records.last().map_or(self.initial_reward, |r| r.reward)
    }

    /// Rows of `step,strategy,seed,reward,pose_x,pose_y,pose_theta`.
    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.records.iter().map(move |r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.step, self.strategy, self.seed, r.reward, r.x, r.y, r.theta
            )
        })
    }
}

pub const CSV_HEADER: &str = "step,strategy,seed,reward,pose_x,pose_y,pose_theta";

/// `vx = 1.5`, `omega ~ U[-pi/10, pi/10]` per step.
pub fn init_trajectory_random<R: Rng>(rng: &mut R, horizon: usize, tau: f64) -> Result<ControlSequence> {
    let controls = (0..horizon)
        .map(|_| {
            let w = rng.random_range(-INIT_TURN_RANGE..=INIT_TURN_RANGE);
            Twist::planar(CRUISE_SPEED, 0.0, w)
        })
        .collect::<Result<Vec<_>>>()?;
    ControlSequence::new(controls, tau)
}

/// `vx = 1.5`, `omega ~ U[-pi/3, pi/3]`.
pub fn policy_random_step<R: Rng>(rng: &mut R) -> Twist {
    let w = rng.random_range(-RANDOM_TURN_RANGE..=RANDOM_TURN_RANGE);
    Twist::planar(CRUISE_SPEED, 0.0, w).expect("finite by construction")
}

/// What the frontier heuristic may look at: grid shape, cell positions and
/// the current and prior information. No occupancy.
#[derive(Debug, Clone, Copy)]
pub struct FrontierView<'a> {
    pub width: usize,
    pub height: usize,
    pub positions: &'a [Vector3<f64>],
    pub info: &'a DVector<f64>,
    pub prior_info: &'a DVector<f64>,
}

impl FrontierView<'_> {
    pub fn is_unexplored(&self, j: usize) -> bool {
        self.info[j] < EXPLORED_RATIO * self.prior_info[j]
    }

    /// Cells of the largest 4-connected unexplored component (ties go to
    /// the component containing the lowest index).
    pub fn largest_unexplored(&self) -> Vec<usize> {
        let n = self.width * self.height;
        let mut seen = vec![false; n];
        let mut best: Vec<usize> = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] || !self.is_unexplored(start) {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut component = Vec::new();
            while let Some(j) = queue.pop_front() {
                component.push(j);
                let (row, col) = (j / self.width, j % self.width);
                let mut visit = |nb: usize| {
                    if !seen[nb] && self.is_unexplored(nb) {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                };
                if row > 0 {
                    visit(j - self.width);
                }
                if row + 1 < self.height {
                    visit(j + self.width);
                }
                if col > 0 {
                    visit(j - 1);
                }
                if col + 1 < self.width {
                    visit(j + 1);
                }
            }
            if component.len() > best.len() {
                best = component;
            }
        }
        best
    }
}

/// Turn toward the centroid of the largest unexplored region in the first
/// step, then drive straight. `None` when everything is explored.
pub fn init_trajectory_frontier(
    view: &FrontierView,
    pose: &Pose,
    horizon: usize,
    tau: f64,
) -> Result<Option<ControlSequence>> {
    let region = view.largest_unexplored();
    if region.is_empty() {
        return Ok(None);
    }
    let centroid = region
        .iter()
        .fold(Vector3::zeros(), |acc, &j| acc + view.positions[j])
        / region.len() as f64;
    let local = pose.inverse().transform_point(&centroid);
    let bearing = local.y.atan2(local.x);
    let turn = bearing.clamp(-PI / 2.0, PI / 2.0) / tau;
    let mut controls = vec![Twist::planar(0.0, 0.0, turn)?];
    controls.extend((1..horizon).map(|_| Twist::planar(CRUISE_SPEED, 0.0, 0.0).expect("finite")));
    Ok(Some(ControlSequence::new(controls, tau)?))
}

/// Pulls a pose that wandered too far back onto the margin and points it at
/// the map center.
pub fn soft_clamp(pose: &Pose, map: &GridMap) -> Pose {
    let (lo, hi) = map.bounds();
    let margin = Vector2::new(SOFT_CLAMP_MARGIN, SOFT_CLAMP_MARGIN);
    let (lo, hi) = (lo - margin, hi + margin);
    let p = pose.translation();
    if p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y {
        return *pose;
    }
    let x = p.x.clamp(lo.x, hi.x);
    let y = p.y.clamp(lo.y, hi.y);
    let c = map.center();
    Pose::planar(x, y, (c.y - y).atan2(c.x - x))
}

/// Grid geometry without occupancy, which is all the planners get to see.
#[derive(Debug, Clone, Copy)]
struct Layout<'a> {
    width: usize,
    height: usize,
    positions: &'a [Vector3<f64>],
}

fn plan(
    cfg: &EpisodeConfig,
    rng: &mut ChaCha8Rng,
    belief: &MapBelief,
    prior_info: &DVector<f64>,
    layout: Layout,
    pose: &Pose,
) -> Result<Vec<Twist>> {
    let info_diag = belief.info_diagonal();
    let view = FrontierView {
        width: layout.width,
        height: layout.height,
        positions: layout.positions,
        info: &info_diag,
        prior_info,
    };
    let frontier_or_random = |rng: &mut ChaCha8Rng| -> Result<ControlSequence> {
        match init_trajectory_frontier(&view, pose, cfg.horizon, cfg.tau)? {
            Some(u) => Ok(u),
            None => init_trajectory_random(rng, cfg.horizon, cfg.tau),
        }
    };
    let u0 = match cfg.strategy {
        Strategy::Random => return Ok(vec![policy_random_step(rng)]),
        Strategy::Frontier => return Ok(frontier_or_random(rng)?.controls().to_vec()),
        Strategy::Icr => init_trajectory_random(rng, cfg.horizon, cfg.tau)?,
        Strategy::IcrFrontier => frontier_or_random(rng)?,
    };
    let problem = PlanningProblem {
        start: *pose,
        prior: belief.info(),
        positions: layout.positions,
        fov: &cfg.fov,
    };
    let result = problem.optimize(&u0, &cfg.policy, &cfg.limits, cfg.iterations)?;
    Ok(result.controls.controls().to_vec())
}

/// Runs one episode against the true map `truth`.
pub fn run_episode(cfg: &EpisodeConfig, truth: &GridMap) -> Result<EpisodeLog> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut belief = MapBelief::diagonal_prior(truth.len(), cfg.prior_variance)?;
    let prior_info = belief.info_diagonal();
    let initial_reward = belief.log_det_info()?;
    let mut pose = cfg.initial_pose;
    let mut queue: VecDeque<Twist> = VecDeque::new();
    let mut since_plan = 0;
    let mut records = Vec::with_capacity(cfg.total_steps);
    let mut snapshots = Vec::new();
    let layout = Layout {
        width: truth.width(),
        height: truth.height(),
        positions: truth.positions(),
    };
    for step in 1..=cfg.total_steps {
        let replanned = queue.is_empty() || since_plan >= cfg.replan_every;
        if replanned {
            queue = plan(cfg, &mut rng, &belief, &prior_info, layout, &pose)?.into();
            since_plan = 0;
        }
        let u = queue.pop_front().expect("plans are never empty");
        since_plan += 1;
        pose = pose.compose(&step_exp(cfg.tau, &u));
        if step % REORTHONORMALIZE_EVERY == 0 {
            pose = pose.orthonormalized();
        }
        let clamped = soft_clamp(&pose, truth);
        if clamped != pose {
            pose = clamped;
            queue.clear();
        }
        let z = mapcore::sample_measurement(truth, &pose, &cfg.fov, belief.mean())?;
        let m = mapcore::info_contribution(&pose, truth.positions(), &cfg.fov);
        belief.eif_update_in_place(&m, &z)?;
        let reward = belief.log_det_info()?;
        let t = pose.translation();
        records.push(StepRecord {
            step,
            x: t.x,
            y: t.y,
            theta: pose.heading(),
            reward,
            replanned,
        });
        if cfg.snapshot_steps.contains(&step) {
            snapshots.push(Snapshot {
                step,
                labels: mapcore::threshold_map(belief.mean()),
                info: belief.info_diagonal(),
            });
        }
    }
    Ok(EpisodeLog {
        strategy: cfg.strategy,
        seed: cfg.seed,
        initial_reward,
        records,
        snapshots,
        belief,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("greedy".parse::<Strategy>().is_err());
    }

    #[test]
    fn random_init_is_seeded() {
        let a = init_trajectory_random(&mut ChaCha8Rng::seed_from_u64(7), 5, 0.5).unwrap();
        let b = init_trajectory_random(&mut ChaCha8Rng::seed_from_u64(7), 5, 0.5).unwrap();
        assert_eq!(a, b);
        for u in a.controls() {
            assert_eq!(u.to_array()[0], CRUISE_SPEED);
            assert!(u.to_array()[5].abs() <= INIT_TURN_RANGE);
        }
    }

    #[test]
    fn soft_clamp_recenters() {
        let map = GridMap::filled(10, 10, 1.0, Vector2::zeros(), Occupancy::Free).unwrap();
        let inside = Pose::planar(11.5, 5.0, 0.3);
        assert_eq!(soft_clamp(&inside, &map), inside);
        let out = soft_clamp(&Pose::planar(20.0, 5.0, 0.3), &map);
        assert_eq!(out.translation().x, 12.0);
        assert!((out.heading() - PI).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = EpisodeConfig::new(Strategy::Icr, 0, Pose::identity());
        assert!(cfg.validate().is_ok());
        cfg.total_steps = 3;
        assert!(cfg.validate().is_err());
    }
}
