//! Active target tracking with range or bearing measurements.
//!
//! The target follows a linear Gaussian model and the measurement model is
//! linearized once around the prior mean, so the filter covariance evolves
//! through the deterministic Riccati map
//! `rho(Sigma) = A (Sigma^-1 + M(T))^-1 A^T + W` with `M = H^T V^-1 H`.
//! The cost `sum_t b_t log det Sigma_t` is then a smooth function of the
//! robot controls and is minimized by gradient descent. Its gradient comes
//! from propagating `a = dSigma_t/du_k` alongside the covariance.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::icr::{rollout, step_exp, ControlSequence};
use crate::liegroup::{self, Pose, Twist};

/// Guard against a robot sitting on the target mean.
pub const COINCIDENCE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sensor {
    Range,
    Bearing,
}

/// Linear target dynamics `y' = A y + w`, `w ~ N(0, W)`, with `S` picking
/// the position out of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    pub a: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub s: DMatrix<f64>,
}

impl TargetModel {
    /// Planar constant-velocity target with diffusion strength `q`.
    pub fn constant_velocity(tau: f64, q: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diffusion strength must be positive, got {q}"
            )));
        }
        let i2 = DMatrix::<f64>::identity(2, 2);
        let mut a = DMatrix::identity(4, 4);
        a.view_mut((0, 2), (2, 2)).copy_from(&(&i2 * tau));
        let mut w = DMatrix::zeros(4, 4);
        w.view_mut((0, 0), (2, 2)).copy_from(&(&i2 * (tau.powi(3) / 3.0)));
        w.view_mut((0, 2), (2, 2)).copy_from(&(&i2 * (tau * tau / 2.0)));
        w.view_mut((2, 0), (2, 2)).copy_from(&(&i2 * (tau * tau / 2.0)));
        w.view_mut((2, 2), (2, 2)).copy_from(&(&i2 * tau));
        let mut s = DMatrix::zeros(2, 4);
        s.view_mut((0, 0), (2, 2)).copy_from(&i2);
        Ok(Self { a, w: w * q, s })
    }

    /// Static planar target, `A = I`, `W = eps I`. `eps = 0` is allowed.
    pub fn static_target(eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "process noise must be non-negative, got {eps}"
            )));
        }
        Ok(Self {
            a: DMatrix::identity(2, 2),
            w: DMatrix::identity(2, 2) * eps,
            s: DMatrix::identity(2, 2),
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Gaussian belief over the target state.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl TargetBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                context: "target covariance",
                expected: mean.len(),
                found: cov.nrows(),
            });
        }
        check_spd(&cov, "target covariance")?;
        Ok(Self { mean, cov })
    }
}

fn check_spd(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if (m - m.transpose()).amax() > 1e-9 || m.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(what));
    }
    Ok(())
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn position(pose: &Pose) -> Vector2<f64> {
    pose.translation().xy()
}

fn planar_rotation(m: &Matrix4<f64>) -> Matrix2<f64> {
    m.fixed_view::<2, 2>(0, 0).into_owned()
}

/// `(I - x x^T / |x|^2) / |x|`, the derivative of `x / |x|`.
fn normalize_jacobian(x: &Vector2<f64>) -> Matrix2<f64> {
    let n = x.norm();
    (Matrix2::identity() - x * x.transpose() / (n * n)) / n
}

/// Directional derivative of [`normalize_jacobian`] along `dx`.
fn normalize_jacobian_deriv(x: &Vector2<f64>, dx: &Vector2<f64>) -> Matrix2<f64> {
    let n = x.norm();
    let xd = x.dot(dx);
    Matrix2::identity() * (-xd / n.powi(3)) - (dx * x.transpose() + x * dx.transpose()) / n.powi(3)
        + x * x.transpose() * (3.0 * xd / n.powi(5))
}

fn guard(xi: &Vector2<f64>) -> Result<()> {
    let n = xi.norm();
    if n < COINCIDENCE_EPS {
        Err(Error::CoincidentTarget(n))
    } else {
        Ok(())
    }
}

/// Distance from the robot to the target position `m`.
pub fn h_range(pose: &Pose, m: &Vector2<f64>) -> Result<f64> {
    let xi = position(pose) - m;
    guard(&xi)?;
    Ok(xi.norm())
}

/// Unit vector toward the target in the robot frame.
pub fn h_bearing(pose: &Pose, m: &Vector2<f64>) -> Result<Vector2<f64>> {
    let r = planar_rotation(pose.matrix());
    let xi = r.transpose() * (m - position(pose));
    guard(&xi)?;
    Ok(xi / xi.norm())
}

/// Range Jacobian in the target state, `-xi^T S / |xi|` with
/// `xi = robot - S mu`.
pub fn range_jacobian(pose: &Pose, mean: &DVector<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let target = s * mean;
    let xi = position(pose) - Vector2::new(target[0], target[1]);
    guard(&xi)?;
    let dir = DMatrix::from_row_slice(1, 2, &[xi.x, xi.y]) / xi.norm();
    Ok(-(dir * s))
}

/// Bearing Jacobian in the target state.
pub fn bearing_jacobian(pose: &Pose, mean: &DVector<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let target = s * mean;
    let r = planar_rotation(pose.matrix());
    let xi = r.transpose() * (Vector2::new(target[0], target[1]) - position(pose));
    guard(&xi)?;
    let p = normalize_jacobian(&xi) * r.transpose();
    Ok(to_dmatrix(&p) * s)
}

fn to_dmatrix(m: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 2, m.as_slice())
}

/// Linearized measurement of a sensor with isotropic noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub sensor: Sensor,
    pub noise_var: f64,
}

impl Measurement {
    pub fn new(sensor: Sensor, noise_var: f64) -> Result<Self> {
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "measurement noise must be positive, got {noise_var}"
            )));
        }
        Ok(Self { sensor, noise_var })
    }

    pub fn jacobian(&self, pose: &Pose, mean: &DVector<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self.sensor {
            Sensor::Range => range_jacobian(pose, mean, s),
            Sensor::Bearing => bearing_jacobian(pose, mean, s),
        }
    }

    /// `H^T V^-1 H`.
    pub fn info(&self, pose: &Pose, mean: &DVector<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let h = self.jacobian(pose, mean, s)?;
        Ok(h.transpose() * &h / self.noise_var)
    }

    /// Derivative of the Jacobian when the pose moves along `dpose`.
    pub fn jacobian_deriv(
        &self,
        pose: &Pose,
        dpose: &Matrix4<f64>,
        mean: &DVector<f64>,
        s: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        let target = s * mean;
        let target = Vector2::new(target[0], target[1]);
        let robot = position(pose);
        let drobot = Vector2::new(dpose[(0, 3)], dpose[(1, 3)]);
        match self.sensor {
            Sensor::Range => {
                let xi = robot - target;
                guard(&xi)?;
                let ddir = normalize_jacobian(&xi) * drobot;
                Ok(-(DMatrix::from_row_slice(1, 2, &[ddir.x, ddir.y]) * s))
            }
            Sensor::Bearing => {
                let r = planar_rotation(pose.matrix());
                let dr = planar_rotation(dpose);
                let rel = target - robot;
                let xi = r.transpose() * rel;
                guard(&xi)?;
                let dxi = dr.transpose() * rel - r.transpose() * drobot;
                let dp = normalize_jacobian_deriv(&xi, &dxi) * r.transpose()
                    + normalize_jacobian(&xi) * dr.transpose();
                Ok(to_dmatrix(&dp) * s)
            }
        }
    }

    /// `dM = D(H^T V^-1 dH)` with `D(X) = X + X^T`.
    pub fn info_deriv(
        &self,
        pose: &Pose,
        dpose: &Matrix4<f64>,
        mean: &DVector<f64>,
        s: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        let h = self.jacobian(pose, mean, s)?;
        let dh = self.jacobian_deriv(pose, dpose, mean, s)?;
        let x = h.transpose() * dh / self.noise_var;
        Ok(&x + x.transpose())
    }
}

/// `A (I + Sigma M)^-1 Sigma A^T + W`, equal to `A (Sigma^-1 + M)^-1 A^T + W`
/// without inverting `Sigma`.
pub fn riccati(cov: &DMatrix<f64>, m: &DMatrix<f64>, model: &TargetModel) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let lu = (DMatrix::identity(n, n) + cov * m).lu();
    let post = lu
        .solve(cov)
        .ok_or(Error::Singular("I + Sigma M"))?;
    Ok(sym(&model.a * post * model.a.transpose() + &model.w))
}

/// One step of `a_t = A (I + Sigma M)^-1 (a_prev - Sigma dM Sigma) (I + M Sigma)^-1 A^T`.
pub fn sensitivity_recursion(
    a_prev: &DMatrix<f64>,
    cov_prev: &DMatrix<f64>,
    m: &DMatrix<f64>,
    dm: &DMatrix<f64>,
    model: &TargetModel,
) -> Result<DMatrix<f64>> {
    let n = cov_prev.nrows();
    let inner = a_prev - cov_prev * dm * cov_prev;
    let lu = (DMatrix::identity(n, n) + cov_prev * m).lu();
    // (I + M Sigma)^-1 = ((I + Sigma M)^-1)^T for symmetric Sigma, M
    let left = lu.solve(&inner).ok_or(Error::Singular("I + Sigma M"))?;
    let both = lu
        .solve(&left.transpose())
        .ok_or(Error::Singular("I + Sigma M"))?
        .transpose();
    Ok(sym(&model.a * both * model.a.transpose()))
}

/// One-step cost `log det rho(Sigma0)` with the robot at `p`, or NaN when
/// the linearization is undefined there.
pub fn one_step_cost(
    p: &Vector2<f64>,
    belief: &TargetBelief,
    meas: &Measurement,
    model: &TargetModel,
) -> Result<f64> {
    let pose = Pose::planar(p.x, p.y, 0.0);
    let m = match meas.info(&pose, &belief.mean, &model.s) {
        Ok(m) => m,
        Err(Error::CoincidentTarget(_)) => return Ok(f64::NAN),
        Err(e) => return Err(e),
    };
    let next = riccati(&belief.cov, &m, model)?;
    crate::mapcore::log_det_spd(&next)
}

/// Grid sweep of [`one_step_cost`] over `xs x ys`, row-major in `y` then `x`.
pub fn cost_map(
    xs: &[f64],
    ys: &[f64],
    belief: &TargetBelief,
    meas: &Measurement,
    model: &TargetModel,
) -> Result<Vec<(f64, f64, f64)>> {
    let points: Vec<(f64, f64)> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .collect();
    points
        .par_iter()
        .map(|&(x, y)| one_step_cost(&Vector2::new(x, y), belief, meas, model).map(|c| (x, y, c)))
        .collect()
}

/// Open-loop tracking problem over horizon `t_f = weights.len()`.
#[derive(Debug, Clone)]
pub struct TrackingProblem {
    pub model: TargetModel,
    pub belief: TargetBelief,
    pub measurement: Measurement,
    pub start: Pose,
    /// `b_1..b_{t_f}`.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRollout {
    pub poses: Vec<Pose>,
    pub infos: Vec<DMatrix<f64>>,
    /// `Sigma_0..Sigma_{t_f}`.
    pub covs: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingResult {
    pub controls: ControlSequence,
    pub cost_trace: Vec<f64>,
    pub grad_inf_norm_trace: Vec<f64>,
    pub poses: Vec<Pose>,
}

impl TrackingProblem {
    /// Terminal-cost weights `b_{t_f} = 1`, others zero.
    pub fn terminal_weights(horizon: usize) -> Vec<f64> {
        let mut w = vec![0.0; horizon];
        if let Some(last) = w.last_mut() {
            *last = 1.0;
        }
        w
    }

    fn check(&self, u: &ControlSequence) -> Result<()> {
        if u.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                context: "controls vs stage weights",
                expected: self.weights.len(),
                found: u.len(),
            });
        }
        if self.belief.mean.len() != self.model.dim() {
            return Err(Error::DimensionMismatch {
                context: "target belief vs model",
                expected: self.model.dim(),
                found: self.belief.mean.len(),
            });
        }
        Ok(())
    }

    pub fn rollout(&self, u: &ControlSequence) -> Result<TrackingRollout> {
        self.check(u)?;
        let poses = rollout(&self.start, u);
        let mut covs = vec![self.belief.cov.clone()];
        let mut infos = Vec::with_capacity(poses.len());
        for pose in &poses {
            let m = self.measurement.info(pose, &self.belief.mean, &self.model.s)?;
            let next = riccati(covs.last().expect("non-empty"), &m, &self.model)?;
            infos.push(m);
            covs.push(next);
        }
        Ok(TrackingRollout { poses, infos, covs })
    }

    fn cost_of(&self, roll: &TrackingRollout) -> Result<f64> {
        let mut cost = 0.0;
        for (b, cov) in self.weights.iter().zip(&roll.covs[1..]) {
            if *b != 0.0 {
                cost += b * crate::mapcore::log_det_spd(cov)?;
            }
        }
        Ok(cost)
    }

    pub fn cost(&self, u: &ControlSequence) -> Result<f64> {
        self.cost_of(&self.rollout(u)?)
    }

    /// `dSigma_t / du_k^(i)` for `t = 1..t_f` (zero for `t <= k`).
    pub fn sensitivities(&self, u: &ControlSequence, k: usize, i: usize) -> Result<Vec<DMatrix<f64>>> {
        let roll = self.rollout(u)?;
        self.sensitivities_of(&roll, u, k, i)
    }

    fn sensitivities_of(
        &self,
        roll: &TrackingRollout,
        u: &ControlSequence,
        k: usize,
        i: usize,
    ) -> Result<Vec<DMatrix<f64>>> {
        let n = self.model.dim();
        let horizon = u.len();
        let tau = u.tau();
        let prev_pose = if k == 0 { self.start } else { roll.poses[k - 1] };
        let mut lambda = prev_pose.matrix() * liegroup::dexp_du(tau, &u.controls()[k], i);
        let mut a = DMatrix::zeros(n, n);
        let mut out = vec![DMatrix::zeros(n, n); horizon];
        for t in k..horizon {
            if t > k {
                lambda *= step_exp(tau, &u.controls()[t]).matrix();
            }
            // roll.poses[t] is T_{t+1}, measured against Sigma_t
            let dm = self
                .measurement
                .info_deriv(&roll.poses[t], &lambda, &self.belief.mean, &self.model.s)?;
            a = sensitivity_recursion(&a, &roll.covs[t], &roll.infos[t], &dm, &self.model)?;
            out[t] = a.clone();
        }
        Ok(out)
    }

    /// Cost gradient over the `active` components (others are zero).
    pub fn gradient(&self, u: &ControlSequence, active: &[bool; 6]) -> Result<Vec<[f64; 6]>> {
        let roll = self.rollout(u)?;
        let cov_inv: Vec<Option<DMatrix<f64>>> = roll.covs[1..]
            .iter()
            .zip(&self.weights)
            .map(|(c, b)| {
                if *b == 0.0 {
                    Ok(None)
                } else {
                    c.clone()
                        .cholesky()
                        .map(|ch| Some(ch.inverse()))
                        .ok_or(Error::NotPositiveDefinite("target covariance"))
                }
            })
            .collect::<Result<_>>()?;
        (0..u.len())
            .into_par_iter()
            .map(|k| {
                let mut row = [0.0; 6];
                for (i, out) in row.iter_mut().enumerate() {
                    if !active[i] {
                        continue;
                    }
                    let sens = self.sensitivities_of(&roll, u, k, i)?;
                    *out = sens
                        .iter()
                        .zip(&cov_inv)
                        .zip(&self.weights)
                        .skip(k)
                        .filter_map(|((a, ci), b)| ci.as_ref().map(|ci| b * (ci * a).trace()))
                        .sum();
                }
                Ok(row)
            })
            .collect()
    }

    /// Fixed-step descent `u <- u - alpha * grad` over the active components.
    ///
    /// The traces hold one entry per evaluated iterate, including the
    /// returned one. Iteration stops early if the cost or gradient becomes
    /// non-finite or the linearization breaks down; the last finite iterate
    /// is returned.
    pub fn descend(
        &self,
        u0: &ControlSequence,
        alpha: &[f64; 6],
        active: &[bool; 6],
        iters: usize,
    ) -> Result<TrackingResult> {
        if alpha.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("step sizes must be non-negative".into()));
        }
        let mut u = u0.clone();
        let mut cost_trace = Vec::new();
        let mut grad_inf_norm_trace = Vec::new();
        for it in 0..=iters {
            let (cost, grad) = match (self.cost(&u), self.gradient(&u, active)) {
                (Ok(c), Ok(g)) => (c, g),
                (Err(e), _) | (_, Err(e)) if it == 0 => return Err(e),
                _ => break,
            };
            let norm = grad.iter().flatten().fold(0.0f64, |m, g| m.max(g.abs()));
            if !cost.is_finite() || !norm.is_finite() {
                break;
            }
            cost_trace.push(cost);
            grad_inf_norm_trace.push(norm);
            if it == iters {
                break;
            }
            let next: Result<Vec<Twist>> = u
                .controls()
                .iter()
                .zip(&grad)
                .map(|(c, g)| {
                    let mut v = c.to_array();
                    for i in 0..6 {
                        if active[i] {
                            v[i] -= alpha[i] * g[i];
                        }
                    }
                    Twist::from_array(v)
                })
                .collect();
            match next {
                Ok(controls) => u = ControlSequence::new(controls, u.tau())?,
                Err(_) => break,
            }
        }
        let poses = rollout(&self.start, &u);
        Ok(TrackingResult {
            controls: u,
            cost_trace,
            grad_inf_norm_trace,
            poses,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn riccati_without_measurement() {
        let model = TargetModel::constant_velocity(0.5, 0.2).unwrap();
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 0.5, 0.3]));
        let out = riccati(&cov, &DMatrix::zeros(4, 4), &model).unwrap();
        let expected = &model.a * &cov * model.a.transpose() + &model.w;
        assert_relative_eq!(out, expected, epsilon = 1e-14);
    }

    #[test]
    fn riccati_scalar_closed_form() {
        let model = TargetModel::static_target(0.0).unwrap();
        let out = riccati(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2), &model).unwrap();
        assert_relative_eq!(out, DMatrix::identity(2, 2) * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn range_triangle() {
        let pose = Pose::identity();
        assert_relative_eq!(h_range(&pose, &Vector2::new(3.0, 4.0)).unwrap(), 5.0);
        let mean = DVector::from_vec(vec![3.0, 4.0, 0.0, 0.0]);
        let model = TargetModel::constant_velocity(0.5, 1.0).unwrap();
        let h = range_jacobian(&pose, &mean, &model.s).unwrap();
        assert_relative_eq!(h[(0, 0)], 0.6, epsilon = 1e-15);
        assert_relative_eq!(h[(0, 1)], 0.8, epsilon = 1e-15);
        assert_eq!(h[(0, 2)], 0.0);
    }

    #[test]
    fn bearing_axis_aligned() {
        let b = h_bearing(&Pose::identity(), &Vector2::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(b, Vector2::new(1.0, 0.0));
    }

    #[test]
    fn coincident_target_is_an_error() {
        let pose = Pose::planar(1.0, 2.0, 0.3);
        assert!(matches!(
            h_range(&pose, &Vector2::new(1.0, 2.0)),
            Err(Error::CoincidentTarget(_))
        ));
        assert!(h_bearing(&pose, &Vector2::new(1.0, 2.0)).is_err());
    }

    #[test]
    fn zero_pose_derivative_gives_zero_info_derivative() {
        let meas = Measurement::new(Sensor::Bearing, 0.1).unwrap();
        let model = TargetModel::constant_velocity(0.5, 1.0).unwrap();
        let mean = DVector::from_vec(vec![3.0, 4.0, 0.1, 0.0]);
        let dm = meas
            .info_deriv(&Pose::planar(0.5, 0.2, 0.4), &Matrix4::zeros(), &mean, &model.s)
            .unwrap();
        assert_eq!(dm, DMatrix::zeros(4, 4));
    }

    #[test]
    fn zero_inputs_zero_sensitivity() {
        let model = TargetModel::constant_velocity(0.5, 1.0).unwrap();
        let cov = DMatrix::identity(4, 4);
        let a = sensitivity_recursion(
            &DMatrix::zeros(4, 4),
            &cov,
            &DMatrix::identity(4, 4),
            &DMatrix::zeros(4, 4),
            &model,
        )
        .unwrap();
        assert_eq!(a, DMatrix::zeros(4, 4));
    }
}
