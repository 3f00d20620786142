//! Gradient-ascent trajectory optimization of the map information.
//!
//! The reward of a control sequence is `log det Y_K`, the map information
//! after executing the `K` controls from a known start pose. Because the
//! per-step information contributions are diagonal, the gradient reduces to
//! per-cell sums weighted by the marginal variances of `Y_K`.
//!
//! For every cell `j` and pose `T_s` the contribution derivative is
//! `dM_jj = grad_q(M_jj) . top2(-T_s^-1 dT_s T_s^-1 p_j)`. The pose
//! derivative `dT_s/du_k` is propagated as `Lambda <- Lambda exp(tau u^)`
//! starting from `T_k dexp(tau u_k)/du_k`. The per-cell sum collapses to a
//! 2x4 moment matrix per pose, so each `(k, i, s)` term costs a single 4x4
//! product.

use nalgebra::{Matrix2x4, Matrix4, Vector3, Vector4};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fov::{self, ConeFov};
use crate::liegroup::{self, Pose, Twist};
use crate::mapcore::Information;

/// Per-step twists held for a fixed step duration.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    controls: Vec<Twist>,
    tau: f64,
}

impl ControlSequence {
    pub fn new(controls: Vec<Twist>, tau: f64) -> Result<Self> {
        if controls.is_empty() {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step duration must be positive, got {tau}"
            )));
        }
        Ok(Self { controls, tau })
    }

    pub fn from_rows(rows: &[[f64; 6]], tau: f64) -> Result<Self> {
        let controls = rows
            .iter()
            .map(|r| Twist::from_array(*r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(controls, tau)
    }

    pub fn constant(u: Twist, k: usize, tau: f64) -> Result<Self> {
        Self::new(vec![u; k], tau)
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn controls(&self) -> &[Twist] {
        &self.controls
    }

    pub fn rows(&self) -> Vec<[f64; 6]> {
        self.controls.iter().map(Twist::to_array).collect()
    }

    pub fn with_component(&self, k: usize, i: usize, value: f64) -> Result<Self> {
        let mut out = self.clone();
        out.controls[k] = out.controls[k].with_component(i, value)?;
        Ok(out)
    }
}

/// `exp(tau u^)`, through the planar closed form when the twist is planar.
pub fn step_exp(tau: f64, u: &Twist) -> Pose {
    if u.is_planar() {
        liegroup::exp_se2(tau, u)
    } else {
        liegroup::exp_se3(tau, u)
    }
}

/// Poses `T_1..T_K` reached from `start`.
pub fn rollout(start: &Pose, u: &ControlSequence) -> Vec<Pose> {
    let mut pose = *start;
    u.controls
        .iter()
        .map(|c| {
            pose = pose.compose(&step_exp(u.tau, c));
            pose
        })
        .collect()
}

/// Backtracking gradient-ascent step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub gamma0: [f64; 6],
    pub beta: f64,
    pub max_halvings: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            gamma0: [1e-2; 6],
            beta: 0.5,
            max_halvings: 20,
        }
    }
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma0.iter().all(|g| *g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter("step sizes must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "backtracking factor must lie in (0, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Which twist components are optimized, plus an optional box on each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlLimits {
    pub active: [bool; 6],
    pub lower: [f64; 6],
    pub upper: [f64; 6],
}

impl Default for ControlLimits {
    fn default() -> Self {
        Self {
            active: [true; 6],
            lower: [f64::NEG_INFINITY; 6],
            upper: [f64::INFINITY; 6],
        }
    }
}

impl ControlLimits {
    /// Only `vx`, `vy` and `wz` move.
    pub fn planar() -> Self {
        let mut active = [false; 6];
        for i in liegroup::PLANAR_COMPONENTS {
            active[i] = true;
        }
        Self {
            active,
            ..Self::default()
        }
    }

    fn clamp(&self, i: usize, v: f64) -> f64 {
        v.max(self.lower[i]).min(self.upper[i])
    }
}

/// Everything the planner needs. It sees cell positions and the current
/// information, never the true occupancy.
#[derive(Debug, Clone, Copy)]
pub struct PlanningProblem<'a> {
    pub start: Pose,
    pub prior: &'a Information,
    pub positions: &'a [Vector3<f64>],
    pub fov: &'a ConeFov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub poses: Vec<Pose>,
    pub info: Information,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub controls: ControlSequence,
    /// Reward before the first iteration followed by one entry per accepted
    /// step.
    pub reward_trace: Vec<f64>,
    pub grad_inf_norm_trace: Vec<f64>,
    pub poses: Vec<Pose>,
}

impl PlanResult {
    pub fn final_reward(&self) -> f64 {
        *self.reward_trace.last().expect("trace is never empty")
    }
}

impl PlanningProblem<'_> {
    fn check(&self, u: &ControlSequence) -> Result<()> {
        if self.prior.len() != self.positions.len() {
            return Err(Error::DimensionMismatch {
                context: "prior information vs cells",
                expected: self.positions.len(),
                found: self.prior.len(),
            });
        }
        debug_assert!(!u.is_empty());
        Ok(())
    }

    /// `Y_K = Y_0 + sum_{s=1..K} M(T_s)`.
    pub fn forward_pass(&self, u: &ControlSequence) -> Result<ForwardPass> {
        self.check(u)?;
        let poses = rollout(&self.start, u);
        let mut info = self.prior.clone();
        for pose in &poses {
            let m = crate::mapcore::info_contribution(pose, self.positions, self.fov);
            info.add_diagonal(&m);
        }
        Ok(ForwardPass { poses, info })
    }

    pub fn reward(&self, u: &ControlSequence) -> Result<f64> {
        self.forward_pass(u)?.info.log_det()
    }

    /// `d log det Y_K / du_k^(i)` for all `k` and `i`.
    pub fn gradient(&self, u: &ControlSequence) -> Result<Vec<[f64; 6]>> {
        self.gradient_masked(u, &[true; 6], liegroup::dexp_du)
    }

    /// Gradient over the `active` components only (others are zero), with
    /// the exponential derivative supplied by the caller.
    pub fn gradient_masked<F>(
        &self,
        u: &ControlSequence,
        active: &[bool; 6],
        dexp: F,
    ) -> Result<Vec<[f64; 6]>>
    where
        F: Fn(f64, &Twist, usize) -> Matrix4<f64> + Sync,
    {
        let fwd = self.forward_pass(u)?;
        let weights = fwd.info.inverse_diagonal()?;
        let moments = self.moments(&fwd.poses, weights.as_slice());
        let tau = u.tau;
        let k_len = u.len();
        // prefix poses T_0..T_{K-1} and step exponentials
        let prefix: Vec<Pose> = std::iter::once(self.start)
            .chain(fwd.poses[..k_len - 1].iter().copied())
            .collect();
        let steps: Vec<Matrix4<f64>> = u
            .controls
            .iter()
            .map(|c| *step_exp(tau, c).matrix())
            .collect();
        let inv_poses: Vec<Matrix4<f64>> = fwd.poses.iter().map(|p| *p.inverse().matrix()).collect();

        let grad = (0..k_len)
            .into_par_iter()
            .map(|k| {
                let mut row = [0.0; 6];
                for (i, out) in row.iter_mut().enumerate() {
                    if !active[i] {
                        continue;
                    }
                    let mut lambda = prefix[k].matrix() * dexp(tau, &u.controls[k], i);
                    let mut acc = 0.0;
                    for s in k..k_len {
                        if s > k {
                            lambda *= steps[s];
                        }
                        // pose index s holds T_{s+1}
                        let b = -(inv_poses[s] * lambda);
                        acc += moments[s].component_mul(&b.fixed_view::<2, 4>(0, 0)).sum();
                    }
                    *out = acc;
                }
                row
            })
            .collect();
        Ok(grad)
    }

    /// `G_s = sum_j w_j grad_q(M_jj) (T_s^-1 p_j)^T` per pose.
    fn moments(&self, poses: &[Pose], weights: &[f64]) -> Vec<Matrix2x4<f64>> {
        poses
            .par_iter()
            .map(|pose| {
                let inv = pose.inverse();
                let mut g = Matrix2x4::zeros();
                for (p, w) in self.positions.iter().zip(weights) {
                    let q = inv.transform_homogeneous(&Vector4::new(p.x, p.y, p.z, 1.0));
                    let noise = fov::noise_at(&q.xy(), self.fov);
                    if noise.grad_q == nalgebra::Vector2::zeros() {
                        continue;
                    }
                    g += (noise.grad_q * *w) * q.transpose();
                }
                g
            })
            .collect()
    }

    /// Gradient ascent with per-iteration backtracking.
    ///
    /// Each iteration starts from the full step `gamma0 * grad` and shrinks
    /// it by `beta` until the reward does not decrease. An iteration that
    /// finds no acceptable step ends the optimization.
    pub fn optimize(
        &self,
        u0: &ControlSequence,
        policy: &StepPolicy,
        limits: &ControlLimits,
        iters: usize,
    ) -> Result<PlanResult> {
        policy.validate()?;
        let mut u = u0.clone();
        let mut reward = self.reward(&u)?;
        let mut reward_trace = vec![reward];
        let mut grad_inf_norm_trace = Vec::new();
        for _ in 0..iters {
            let grad = self.gradient_masked(&u, &limits.active, liegroup::dexp_du)?;
            let norm = grad
                .iter()
                .flat_map(|r| r.iter())
                .fold(0.0f64, |m, g| m.max(g.abs()));
            grad_inf_norm_trace.push(norm);
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..=policy.max_halvings {
                let candidate = self.step(&u, &grad, policy, limits, scale)?;
                let r = self.reward(&candidate)?;
                if r.is_finite() && r >= reward {
                    accepted = Some((candidate, r));
                    break;
                }
                scale *= policy.beta;
            }
            match accepted {
                Some((candidate, r)) => {
                    u = candidate;
                    reward = r;
                    reward_trace.push(r);
                }
                None => break,
            }
        }
        let poses = rollout(&self.start, &u);
        Ok(PlanResult {
            controls: u,
            reward_trace,
            grad_inf_norm_trace,
            poses,
        })
    }

    fn step(
        &self,
        u: &ControlSequence,
        grad: &[[f64; 6]],
        policy: &StepPolicy,
        limits: &ControlLimits,
        scale: f64,
    ) -> Result<ControlSequence> {
        let controls = u
            .controls
            .iter()
            .zip(grad)
            .map(|(c, g)| {
                let mut v = c.to_array();
                for i in 0..6 {
                    if limits.active[i] {
                        v[i] = limits.clamp(i, v[i] + scale * policy.gamma0[i] * g[i]);
                    }
                }
                Twist::from_array(v)
            })
            .collect::<Result<Vec<_>>>()?;
        ControlSequence::new(controls, u.tau)
    }
}

pub fn forward_pass(problem: &PlanningProblem, u: &ControlSequence) -> Result<ForwardPass> {
    problem.forward_pass(u)
}

pub fn reward(problem: &PlanningProblem, u: &ControlSequence) -> Result<f64> {
    problem.reward(u)
}

pub fn gradient(problem: &PlanningProblem, u: &ControlSequence) -> Result<Vec<[f64; 6]>> {
    problem.gradient(u)
}

pub fn icr_optimize(
    problem: &PlanningProblem,
    u0: &ControlSequence,
    policy: &StepPolicy,
    limits: &ControlLimits,
    iters: usize,
) -> Result<PlanResult> {
    problem.optimize(u0, policy, limits, iters)
}
