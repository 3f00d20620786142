//! JSON run configuration shared by all subcommands.
//!
//! Every section is optional and falls back to the defaults documented in
//! `configs/SCHEMA.md`. Unknown keys are rejected so typos surface as
//! configuration errors.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explore::{EpisodeConfig, Strategy};
use crate::fov::ConeFov;
use crate::icr::{ControlLimits, StepPolicy};
use crate::liegroup::{Pose, PLANAR_COMPONENTS};
use crate::tracking::Sensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub strategies: Vec<Strategy>,
    /// Worker threads for episodes; `None` uses the available parallelism.
    pub workers: Option<usize>,
    pub map: MapSource,
    pub fov: ConeFov,
    pub episode: EpisodeSection,
    pub gradcheck: GradcheckSection,
    pub costmap: CostmapSection,
    pub track: TrackSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            seed: 0,
            seeds: vec![0],
            strategies: Strategy::ALL.to_vec(),
            workers: None,
            map: MapSource::default(),
            fov: ConeFov::default(),
            episode: EpisodeSection::default(),
            gradcheck: GradcheckSection::default(),
            costmap: CostmapSection::default(),
            track: TrackSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum MapSource {
    /// P2 graymap; a relative path is resolved against the config file.
    File {
        path: PathBuf,
        resolution: f64,
        #[serde(default)]
        origin: [f64; 2],
    },
    /// Built-in room layout, `width` columns by `height` rows.
    Synthetic {
        width: usize,
        height: usize,
        resolution: f64,
    },
}

impl Default for MapSource {
    fn default() -> Self {
        MapSource::Synthetic {
            width: 40,
            height: 30,
            resolution: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeSection {
    pub horizon: usize,
    pub total_steps: usize,
    pub tau: f64,
    /// `[x, y, theta]`.
    pub initial_pose: [f64; 3],
    pub iterations: usize,
    pub replan_every: usize,
    pub prior_variance: f64,
    pub snapshot_steps: Vec<usize>,
    pub step_policy: StepPolicySection,
    /// Twist components the planner may change.
    pub active_components: Vec<usize>,
    pub control_bounds: Option<BoundsSection>,
}

impl Default for EpisodeSection {
    fn default() -> Self {
        Self {
            horizon: 5,
            total_steps: 300,
            tau: 0.5,
            initial_pose: [3.0, 3.0, 0.0],
            iterations: 10,
            replan_every: 5,
            prior_variance: 100.0,
            snapshot_steps: vec![51, 126, 300],
            step_policy: StepPolicySection::default(),
            active_components: PLANAR_COMPONENTS.to_vec(),
            control_bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepPolicySection {
    pub gamma0: [f64; 6],
    pub beta: f64,
    pub max_halvings: usize,
}

impl Default for StepPolicySection {
    fn default() -> Self {
        let p = StepPolicy::default();
        Self {
            gamma0: p.gamma0,
            beta: p.beta,
            max_halvings: p.max_halvings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub lower: [f64; 6],
    pub upper: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckSection {
    pub instances: usize,
    pub fd_step: f64,
    pub tolerance: f64,
    /// Negative control: scales the exponential derivative used by the
    /// planner gradient so the check must fail.
    pub corrupt_dexp: bool,
}

impl Default for GradcheckSection {
    fn default() -> Self {
        Self {
            instances: 20,
            fd_step: 1e-5,
            tolerance: 1e-3,
            corrupt_dexp: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostmapSection {
    pub sensor: Sensor,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub resolution: f64,
    pub target_mean: [f64; 2],
    /// Diagonal of the static target covariance.
    pub target_cov: [f64; 2],
    pub noise_var: f64,
    pub process_noise: f64,
}

impl Default for CostmapSection {
    fn default() -> Self {
        Self {
            sensor: Sensor::Range,
            x_range: [0.0, 6.0],
            y_range: [0.0, 8.0],
            resolution: 0.1,
            target_mean: [3.0, 4.0],
            target_cov: [0.3, 0.7],
            noise_var: 0.1,
            process_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackSection {
    pub sensor: Sensor,
    pub horizon: usize,
    pub tau: f64,
    pub diffusion: f64,
    pub noise_var: f64,
    /// `[x, y, vx, vy]`.
    pub target_mean: [f64; 4],
    /// Diagonal of the target covariance.
    pub target_cov: [f64; 4],
    /// `[x, y, theta]`.
    pub start: [f64; 3],
    /// Initial `[vx, vy, omega]`, repeated over the horizon.
    pub initial_control: [f64; 3],
    /// Per-component descent step sizes for `[vx, vy, omega]`.
    pub alpha: [f64; 3],
    /// Components held fixed, by name (`vx`, `vy`, `omega`).
    pub freeze: Vec<String>,
    pub iterations: usize,
    /// Stage weights `b_1..b_{t_f}`; defaults to terminal cost only.
    pub weights: Option<Vec<f64>>,
}

impl Default for TrackSection {
    fn default() -> Self {
        Self {
            sensor: Sensor::Range,
            horizon: 3,
            tau: 1.0,
            diffusion: 0.01,
            noise_var: 0.1,
            target_mean: [3.0, 4.0, 0.0, 0.0],
            target_cov: [0.3, 0.7, 0.1, 0.1],
            start: [0.0, 0.0, 0.0],
            initial_control: [1.0, 0.0, 0.0],
            alpha: [1.5, 0.3, 0.3],
            freeze: vec!["vy".into()],
            iterations: 500,
            weights: None,
        }
    }
}

impl TrackSection {
    /// Activity mask over the six twist components.
    pub fn active_mask(&self) -> Result<[bool; 6]> {
        let mut active = [false; 6];
        for i in PLANAR_COMPONENTS {
            active[i] = true;
        }
        for name in &self.freeze {
            let i = planar_index(name)?;
            active[i] = false;
        }
        Ok(active)
    }

    pub fn alpha6(&self) -> [f64; 6] {
        let mut a = [0.0; 6];
        for (slot, i) in PLANAR_COMPONENTS.iter().enumerate() {
            a[*i] = self.alpha[slot];
        }
        a
    }
}

fn planar_index(name: &str) -> Result<usize> {
    match name {
        "vx" => Ok(PLANAR_COMPONENTS[0]),
        "vy" => Ok(PLANAR_COMPONENTS[1]),
        "omega" => Ok(PLANAR_COMPONENTS[2]),
        other => Err(Error::Config(format!(
            "unknown control component {other:?} (expected vx, vy or omega)"
        ))),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file, resolving a relative map path
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let MapSource::File { path: map_path, .. } = &mut cfg.map {
            if map_path.is_relative() {
                if let Some(dir) = path.parent() {
                    *map_path = dir.join(&*map_path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.strategies.is_empty() {
            return bad("strategies must not be empty".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        match &self.map {
            MapSource::File { resolution, origin, .. } => {
                if !(*resolution > 0.0 && resolution.is_finite()) {
                    return bad(format!("map resolution must be positive, got {resolution}"));
                }
                if !origin.iter().all(|x| x.is_finite()) {
                    return bad("map origin must be finite".into());
                }
            }
            MapSource::Synthetic {
                width,
                height,
                resolution,
            } => {
                if *width < 8 || *height < 8 {
                    return bad("synthetic map needs at least 8x8 cells".into());
                }
                if !(*resolution > 0.0 && resolution.is_finite()) {
                    return bad(format!("map resolution must be positive, got {resolution}"));
                }
            }
        }
        if self.episode.active_components.iter().any(|&i| i >= 6) {
            return bad("active_components entries must be below 6".into());
        }
        self.episode_config(Strategy::Icr, 0)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let g = &self.gradcheck;
        if g.instances == 0 || !(g.fd_step > 0.0) || !(g.tolerance > 0.0) {
            return bad("gradcheck needs instances >= 1 and positive fd_step, tolerance".into());
        }
        let c = &self.costmap;
        if !(c.resolution > 0.0)
            || !(c.x_range[1] >= c.x_range[0])
            || !(c.y_range[1] >= c.y_range[0])
            || !(c.noise_var > 0.0)
            || !c.target_cov.iter().all(|v| *v > 0.0)
            || !(c.process_noise >= 0.0)
        {
            return bad("costmap needs positive resolution, variances and ordered ranges".into());
        }
        let t = &self.track;
        if t.horizon == 0 || !(t.tau > 0.0) || !(t.diffusion > 0.0) || !(t.noise_var > 0.0) {
            return bad("track needs horizon >= 1 and positive tau, diffusion, noise_var".into());
        }
        if !t.target_cov.iter().all(|v| *v > 0.0) {
            return bad("track target_cov entries must be positive".into());
        }
        if !t.alpha.iter().all(|a| *a >= 0.0 && a.is_finite()) {
            return bad("track alpha entries must be non-negative".into());
        }
        t.active_mask()?;
        if let Some(w) = &t.weights {
            if w.len() != t.horizon {
                return bad(format!(
                    "track weights need {} entries, got {}",
                    t.horizon,
                    w.len()
                ));
            }
        }
        Ok(())
    }

    pub fn map_origin(&self) -> Vector2<f64> {
        match &self.map {
            MapSource::File { origin, .. } => Vector2::new(origin[0], origin[1]),
            MapSource::Synthetic { .. } => Vector2::zeros(),
        }
    }

    pub fn episode_config(&self, strategy: Strategy, seed: u64) -> EpisodeConfig {
        let e = &self.episode;
        let mut limits = ControlLimits {
            active: [false; 6],
            ..ControlLimits::default()
        };
        for &i in &e.active_components {
            if i < 6 {
                limits.active[i] = true;
            }
        }
        if let Some(b) = &e.control_bounds {
            limits.lower = b.lower;
            limits.upper = b.upper;
        }
        EpisodeConfig {
            strategy,
            horizon: e.horizon,
            total_steps: e.total_steps,
            tau: e.tau,
            seed,
            fov: self.fov,
            initial_pose: Pose::planar(e.initial_pose[0], e.initial_pose[1], e.initial_pose[2]),
            policy: StepPolicy {
                gamma0: e.step_policy.gamma0,
                beta: e.step_policy.beta,
                max_halvings: e.step_policy.max_halvings,
            },
            limits,
            iterations: e.iterations,
            replan_every: e.replan_every,
            prior_variance: e.prior_variance,
            snapshot_steps: e.snapshot_steps.clone(),
        }
    }
}
