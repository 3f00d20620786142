//! Pose and twist algebra on SE(2)/SE(3).
//!
//! Poses are homogeneous 4x4 matrices. Twists are ordered `[v; w]`
//! (linear velocity first), and planar motion is the SE(2) embedding
//! `v = (vx, vy, 0)`, `w = (0, 0, wz)`.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector4, Vector6};

use crate::error::{Error, Result};

pub const VX: usize = 0;
pub const VY: usize = 1;
pub const VZ: usize = 2;
pub const WX: usize = 3;
pub const WY: usize = 4;
pub const WZ: usize = 5;

/// Indices of the twist components that act in the plane.
pub const PLANAR_COMPONENTS: [usize; 3] = [VX, VY, WZ];

/// Below this |w tau| the sinc-type coefficients of the exponential use
/// their Taylor expansion.
pub const SMALL_ANGLE: f64 = 1e-4;

/// Switch point for the higher-order coefficients (derivatives of the
/// sinc terms and the SE(3) left-Jacobian terms), whose closed forms lose
/// precision as 1/x^2 .. 1/x^4.
const SMALL_ANGLE_HIGH_ORDER: f64 = 0.1;

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Linear and angular velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    linear: Vector3<f64>,
    angular: Vector3<f64>,
}

impl Twist {
    pub fn new(linear: Vector3<f64>, angular: Vector3<f64>) -> Result<Self> {
        if linear.iter().chain(angular.iter()).all(|x| x.is_finite()) {
            Ok(Self { linear, angular })
        } else {
            Err(Error::NonFinite("twist"))
        }
    }

    pub fn zero() -> Self {
        Self {
            linear: Vector3::zeros(),
            angular: Vector3::zeros(),
        }
    }

    /// SE(2)-embedded twist `(vx, vy, 0, 0, 0, omega)`.
    pub fn planar(vx: f64, vy: f64, omega: f64) -> Result<Self> {
        Self::new(Vector3::new(vx, vy, 0.0), Vector3::new(0.0, 0.0, omega))
    }

    pub fn from_vector(u: &Vector6<f64>) -> Result<Self> {
        Self::new(u.fixed_rows::<3>(0).into(), u.fixed_rows::<3>(3).into())
    }

    pub fn from_array(u: [f64; 6]) -> Result<Self> {
        Self::from_vector(&Vector6::from(u))
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut u = Vector6::zeros();
        u.fixed_rows_mut::<3>(0).copy_from(&self.linear);
        u.fixed_rows_mut::<3>(3).copy_from(&self.angular);
        u
    }

    pub fn to_array(&self) -> [f64; 6] {
        self.to_vector().into()
    }

    pub fn linear(&self) -> &Vector3<f64> {
        &self.linear
    }

    pub fn angular(&self) -> &Vector3<f64> {
        &self.angular
    }

    pub fn component(&self, i: usize) -> f64 {
        if i < 3 {
            self.linear[i]
        } else {
            self.angular[i - 3]
        }
    }

    /// Copy with component `i` replaced.
    pub fn with_component(&self, i: usize, value: f64) -> Result<Self> {
        let mut u = self.to_vector();
        u[i] = value;
        Self::from_vector(&u)
    }

    pub fn is_planar(&self) -> bool {
        self.linear.z == 0.0 && self.angular.x == 0.0 && self.angular.y == 0.0
    }
}

/// Element of the Lie algebra se(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistMatrix(Matrix4<f64>);

impl TwistMatrix {
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn vee(&self) -> Twist {
        let m = &self.0;
        Twist {
            linear: Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]),
            angular: Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]),
        }
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Hat map of a raw 6-vector `[v; w]`.
pub fn hat6(u: &Vector6<f64>) -> Matrix4<f64> {
    let w = Vector3::new(u[3], u[4], u[5]);
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&w));
    m[(0, 3)] = u[0];
    m[(1, 3)] = u[1];
    m[(2, 3)] = u[2];
    m
}

pub fn hat(u: &Twist) -> TwistMatrix {
    TwistMatrix(hat6(&u.to_vector()))
}

/// Rigid-body transform stored as a homogeneous matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose(Matrix4<f64>);

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    /// Validates orthonormality, determinant and bottom row.
    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("pose"));
        }
        let bottom = m.fixed_view::<1, 4>(3, 0);
        if (bottom - nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0)).norm() > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose("bottom row is not (0, 0, 0, 1)".into()));
        }
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into();
        let drift = (r.transpose() * r - Matrix3::identity()).norm();
        if drift > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose(format!(
                "rotation not orthonormal (|R^T R - I| = {drift:e})"
            )));
        }
        if (r.determinant() - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose("rotation determinant is not 1".into()));
        }
        Ok(Self(m))
    }

    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Self::from_matrix(m)
    }

    /// Planar pose at `(x, y)` with heading `theta` about +z.
    pub fn planar(x: f64, y: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(Matrix4::new(
            c, -s, 0.0, x, //
            s, c, 0.0, y, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into()
    }

    /// Heading about +z, meaningful for SE(2)-embedded poses.
    pub fn heading(&self) -> f64 {
        self.0[(1, 0)].atan2(self.0[(0, 0)])
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose(self.0 * other.0)
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation().transpose();
        let t = -(rt * self.translation());
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
        Pose(m)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }

    pub fn transform_homogeneous(&self, p: &Vector4<f64>) -> Vector4<f64> {
        self.0 * p
    }

    /// Projects the rotation block onto SO(3) (polar decomposition).
    pub fn orthonormalized(&self) -> Pose {
        let r = self.rotation();
        let svd = r.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut projected = u * vt;
        if projected.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            projected = u * vt;
        }
        let mut m = self.0;
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&projected);
        m.fixed_view_mut::<1, 4>(3, 0)
            .copy_from(&nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0));
        Pose(m)
    }

    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rotation();
        (r.transpose() * r - Matrix3::identity()).norm()
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn inverse(a: &Pose) -> Pose {
    a.inverse()
}

// Coefficient functions of x = |w| tau, each with its Taylor branch.

/// sin(x) / x
fn sinc(x: f64) -> f64 {
    if x.abs() < SMALL_ANGLE {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// (1 - cos x) / x^2
fn cosc(x: f64) -> f64 {
    if x.abs() < SMALL_ANGLE {
        let x2 = x * x;
        0.5 - x2 / 24.0 + x2 * x2 / 720.0
    } else {
        let s = (0.5 * x).sin();
        2.0 * s * s / (x * x)
    }
}

fn series(x2: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x2 + c)
}

/// (x cos x - sin x) / x^3 = d(sinc)/dx / x
fn sinc_deriv_over_x(x: f64) -> f64 {
    if x.abs() < SMALL_ANGLE_HIGH_ORDER {
        series(
            x * x,
            &[
                -1.0 / 3.0,
                1.0 / 30.0,
                -1.0 / 840.0,
                1.0 / 45360.0,
                -1.0 / 3991680.0,
            ],
        )
    } else {
        (x * x.cos() - x.sin()) / (x * x * x)
    }
}

/// (x sin x - 2 (1 - cos x)) / x^4 = d(cosc)/dx / x
fn cosc_deriv_over_x(x: f64) -> f64 {
    if x.abs() < SMALL_ANGLE_HIGH_ORDER {
        series(
            x * x,
            &[
                -1.0 / 12.0,
                1.0 / 180.0,
                -1.0 / 6720.0,
                1.0 / 453600.0,
                -1.0 / 47900160.0,
            ],
        )
    } else {
        let s = (0.5 * x).sin();
        (x * x.sin() - 4.0 * s * s) / (x * x * x * x)
    }
}

/// (x - sin x) / x^3
fn sinc3(x: f64) -> f64 {
    if x.abs() < SMALL_ANGLE_HIGH_ORDER {
        series(
            x * x,
            &[
                1.0 / 6.0,
                -1.0 / 120.0,
                1.0 / 5040.0,
                -1.0 / 362880.0,
                1.0 / 39916800.0,
            ],
        )
    } else {
        (x - x.sin()) / (x * x * x)
    }
}

/// (x^2 + 2 cos x - 2) / (2 x^4)
fn cosc4(x: f64) -> f64 {
    if x.abs() < SMALL_ANGLE_HIGH_ORDER {
        series(
            x * x,
            &[
                1.0 / 24.0,
                -1.0 / 720.0,
                1.0 / 40320.0,
                -1.0 / 3628800.0,
                1.0 / 479001600.0,
            ],
        )
    } else {
        (x * x + 2.0 * x.cos() - 2.0) / (2.0 * x.powi(4))
    }
}

/// (2x - 3 sin x + x cos x) / (2 x^5)
fn sinc5(x: f64) -> f64 {
    if x.abs() < SMALL_ANGLE_HIGH_ORDER {
        series(
            x * x,
            &[
                1.0 / 120.0,
                -1.0 / 2520.0,
                1.0 / 120960.0,
                -1.0 / 9979200.0,
                1.0 / 1245404160.0,
            ],
        )
    } else {
        (2.0 * x - 3.0 * x.sin() + x * x.cos()) / (2.0 * x.powi(5))
    }
}

/// Closed-form exponential of an SE(2)-embedded twist:
/// `I + sin(w tau)/w * u^ + (1 - cos(w tau))/w^2 * (u^)^2`.
///
/// Only `vx`, `vy` and `wz` are read; the other components are ignored.
pub fn exp_se2(tau: f64, u: &Twist) -> Pose {
    let (vx, vy, w) = (u.linear.x, u.linear.y, u.angular.z);
    let x = w * tau;
    let a = tau * sinc(x);
    let b = tau * tau * cosc(x);
    let uh = planar_hat(vx, vy, w);
    Pose(Matrix4::identity() + uh * a + uh * uh * b)
}

fn planar_hat(vx: f64, vy: f64, w: f64) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(0, 1)] = -w;
    m[(1, 0)] = w;
    m[(0, 3)] = vx;
    m[(1, 3)] = vy;
    m
}

/// Full SE(3) exponential: Rodrigues rotation and the V-matrix translation.
pub fn exp_se3(tau: f64, u: &Twist) -> Pose {
    let phi = u.angular * tau;
    let rho = u.linear * tau;
    let theta = phi.norm();
    let k = skew(&phi);
    let k2 = k * k;
    let r = Matrix3::identity() + k * sinc(theta) + k2 * cosc(theta);
    let v = Matrix3::identity() + k * cosc(theta) + k2 * sinc3(theta);
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&(v * rho));
    Pose(m)
}

/// Left Jacobian of SO(3).
pub fn left_jacobian_so3(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = skew(phi);
    Matrix3::identity() + k * cosc(theta) + k * k * sinc3(theta)
}

/// Left Jacobian of SE(3) for `xi = [rho; phi]`.
pub fn left_jacobian(xi: &Vector6<f64>) -> Matrix6<f64> {
    let rho = Vector3::new(xi[0], xi[1], xi[2]);
    let phi = Vector3::new(xi[3], xi[4], xi[5]);
    let theta = phi.norm();
    let p = skew(&phi);
    let r = skew(&rho);
    let prp = p * r * p;
    let q = r * 0.5
        + (p * r + r * p + prp) * sinc3(theta)
        + (p * p * r + r * p * p - prp * 3.0) * cosc4(theta)
        + (prp * p + p * prp) * sinc5(theta);
    let jr = left_jacobian_so3(&phi);
    let mut j = Matrix6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&jr);
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&jr);
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&q);
    j
}

/// SE(3) adjoint of the algebra element `xi = [rho; phi]`.
pub fn ad(xi: &Vector6<f64>) -> Matrix6<f64> {
    let rho = Vector3::new(xi[0], xi[1], xi[2]);
    let phi = Vector3::new(xi[3], xi[4], xi[5]);
    let p = skew(&phi);
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&p);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&p);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&skew(&rho));
    m
}

/// Derivative of `exp(tau u^)` with respect to twist component `i`.
///
/// Planar twists differentiated along a planar component use the SE(2)
/// closed form; everything else goes through the SE(3) left Jacobian.
///
/// # Panics
/// If `i >= 6`.
pub fn dexp_du(tau: f64, u: &Twist, i: usize) -> Matrix4<f64> {
    assert!(i < 6, "control index {i} out of range");
    if u.is_planar() && PLANAR_COMPONENTS.contains(&i) {
        dexp_du_planar(tau, u, i)
    } else {
        dexp_du_left_jacobian(tau, u, i)
    }
}

/// `tau (J_L(tau u) e_i)^ exp(tau u^)`.
pub fn dexp_du_left_jacobian(tau: f64, u: &Twist, i: usize) -> Matrix4<f64> {
    let jl = left_jacobian(&(u.to_vector() * tau));
    let col: Vector6<f64> = jl.column(i).into();
    hat6(&col) * exp_se3(tau, u).matrix() * tau
}

/// SE(2) derivative of the exponential for `i` in `{VX, VY, WZ}`.
///
/// Differentiates `I + a(w) u^ + b(w) (u^)^2` term by term; for `wz` the
/// coefficient derivatives `a'` and `b'` contribute in addition to the
/// derivative of `u^` and `(u^)^2`.
///
/// # Panics
/// If `i` is not a planar component.
pub fn dexp_du_planar(tau: f64, u: &Twist, i: usize) -> Matrix4<f64> {
    let (vx, vy, w) = (u.linear.x, u.linear.y, u.angular.z);
    let x = w * tau;
    let a = tau * sinc(x);
    let b = tau * tau * cosc(x);
    let uh = planar_hat(vx, vy, w);
    // d(u^)/du_i and d((u^)^2)/du_i
    let mut duh2 = Matrix4::zeros();
    let duh = match i {
        VX => {
            duh2[(1, 3)] = w;
            planar_hat(1.0, 0.0, 0.0)
        }
        VY => {
            duh2[(0, 3)] = -w;
            planar_hat(0.0, 1.0, 0.0)
        }
        WZ => {
            duh2[(0, 0)] = -2.0 * w;
            duh2[(1, 1)] = -2.0 * w;
            duh2[(0, 3)] = -vy;
            duh2[(1, 3)] = vx;
            planar_hat(0.0, 0.0, 1.0)
        }
        _ => panic!("component {i} is not planar"),
    };
    let mut d = duh * a + duh2 * b;
    if i == WZ {
        let da = tau.powi(3) * w * sinc_deriv_over_x(x);
        let db = tau.powi(4) * w * cosc_deriv_over_x(x);
        d += uh * da + uh * uh * db;
    }
    d
}
