//! Differentiable field of view.
//!
//! The sensing region is a cone with apex at the body origin pointing along
//! +x, projected onto the body z = 0 plane (an isosceles triangle). Its
//! signed distance is smoothed by a shifted probit so that the inverse
//! noise variance of a cell falls from `1/sigma^2` inside the region to
//! zero outside.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{Vector2, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::liegroup::Pose;

/// Offset of the probit argument; places Phi(0) at about 0.00234.
const PROBIT_SHIFT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "ConeFovParams", into = "ConeFovParams")]
pub struct ConeFov {
    height: f64,
    half_angle: f64,
    sigma: f64,
    kappa: f64,
}

/// Unvalidated field-of-view parameters as they appear in config files.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeFovParams {
    #[serde(default = "default_height")]
    pub height: f64,
    #[serde(default = "default_half_angle")]
    pub half_angle: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_height() -> f64 {
    3.0
}
fn default_half_angle() -> f64 {
    PI / 6.0
}
fn default_sigma() -> f64 {
    1.0
}
fn default_kappa() -> f64 {
    0.5
}

impl TryFrom<ConeFovParams> for ConeFov {
    type Error = Error;
    fn try_from(p: ConeFovParams) -> Result<Self> {
        ConeFov::new(p.height, p.half_angle, p.sigma, p.kappa)
    }
}

impl From<ConeFov> for ConeFovParams {
    fn from(f: ConeFov) -> Self {
        Self {
            height: f.height,
            half_angle: f.half_angle,
            sigma: f.sigma,
            kappa: f.kappa,
        }
    }
}

impl Default for ConeFov {
    /// 3 m deep, 60 degrees between the legs, unit noise, kappa = 0.5.
    fn default() -> Self {
        Self {
            height: default_height(),
            half_angle: default_half_angle(),
            sigma: default_sigma(),
            kappa: default_kappa(),
        }
    }
}

impl ConeFov {
    pub fn new(height: f64, half_angle: f64, sigma: f64, kappa: f64) -> Result<Self> {
        let ok = height > 0.0
            && height.is_finite()
            && half_angle > 0.0
            && half_angle < FRAC_PI_2
            && sigma > 0.0
            && sigma.is_finite()
            && kappa > 0.0
            && kappa.is_finite();
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "cone fov requires h > 0, 0 < psi < pi/2, sigma > 0, kappa > 0 \
                 (got h = {height}, psi = {half_angle}, sigma = {sigma}, kappa = {kappa})"
            )));
        }
        Ok(Self {
            height,
            half_angle,
            sigma,
            kappa,
        })
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Largest distance from the apex to any point of the region.
    pub fn reach(&self) -> f64 {
        self.height / self.half_angle.cos()
    }

    /// Analytic membership test for the projected cone.
    pub fn contains(&self, q: &Vector2<f64>) -> bool {
        let t = self.half_angle.tan();
        q.x >= 0.0 && q.x <= self.height && q.y * q.y <= (t * q.x) * (t * q.x)
    }

    /// x-coordinate of the incenter, where the three medial lines meet.
    fn medial_x(&self) -> f64 {
        self.height / (1.0 + self.half_angle.sin())
    }

    /// Lower boundary of region D1 (upper boundary of D3 and P3).
    fn lower_bound(&self, x: f64) -> f64 {
        let (h, psi) = (self.height, self.half_angle);
        if x <= 0.0 {
            -x / psi.tan()
        } else if x <= self.medial_x() {
            0.0
        } else if x <= h {
            (FRAC_PI_4 + psi / 2.0).tan() * x - h / psi.cos()
        } else {
            h * psi.tan()
        }
    }

    /// Upper boundary of region D1 (lower boundary of P1).
    fn upper_bound(&self, x: f64) -> f64 {
        let (h, psi) = (self.height, self.half_angle);
        if x <= h {
            -(x - h) / psi.tan() + h * psi.tan()
        } else {
            h * psi.tan()
        }
    }

    /// Normal `a_i` and offset `b_i` of edge line i (1-based), oriented so
    /// that `a^T q + b <= 0` inside.
    fn edge_line(&self, i: usize) -> (Vector2<f64>, f64) {
        let cot = 1.0 / self.half_angle.tan();
        match i {
            1 => (Vector2::new(-1.0, cot), 0.0),
            2 => (Vector2::new(-1.0, -cot), 0.0),
            3 => (Vector2::new(1.0, 0.0), -self.height),
            _ => unreachable!(),
        }
    }

    /// Vertex `q_i` (1-based): the two base corners and the apex.
    fn vertex(&self, i: usize) -> Vector2<f64> {
        let w = self.height * self.half_angle.tan();
        match i {
            1 => Vector2::new(self.height, w),
            2 => Vector2::new(self.height, -w),
            3 => Vector2::zeros(),
            _ => unreachable!(),
        }
    }

    /// Region whose closest boundary feature determines the distance.
    /// Boundaries are closed and checked in the order D1, D2, D3, P1, P2, P3.
    pub fn classify(&self, q: &Vector2<f64>) -> Region {
        let (x, y) = (q.x, q.y);
        let lo = self.lower_bound(x);
        let hi = self.upper_bound(x);
        if x <= self.height && y >= lo && y <= hi {
            Region::D1
        } else if x <= self.height && y <= -lo && y >= -hi {
            Region::D2
        } else if x >= self.medial_x() && y.abs() <= lo {
            Region::D3
        } else if y >= hi {
            Region::P1
        } else if y <= -hi {
            Region::P2
        } else {
            debug_assert!(x <= 0.0 && y.abs() <= lo);
            Region::P3
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Closest to the upper leg.
    D1,
    /// Closest to the lower leg.
    D2,
    /// Closest to the base.
    D3,
    /// Closest to the upper base corner.
    P1,
    /// Closest to the lower base corner.
    P2,
    /// Closest to the apex.
    P3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfEval {
    pub distance: f64,
    pub grad: Vector2<f64>,
    pub region: Region,
}

/// Signed distance to the projected cone, negative inside.
///
/// The gradient is the unit normal of the closest edge, or the unit vector
/// away from the closest vertex. Exactly at a vertex it is zero.
pub fn sdf_cone2d(q: &Vector2<f64>, fov: &ConeFov) -> SdfEval {
    let region = fov.classify(q);
    let (distance, grad) = match region {
        Region::D1 | Region::D2 | Region::D3 => {
            let i = region_index(region);
            let (a, b) = fov.edge_line(i);
            let n = a.norm();
            ((a.dot(q) + b) / n, a / n)
        }
        Region::P1 | Region::P2 | Region::P3 => {
            let diff = q - fov.vertex(region_index(region));
            let dist = diff.norm();
            let grad = if dist > 0.0 {
                diff / dist
            } else {
                Vector2::zeros()
            };
            (dist, grad)
        }
    };
    // The distance is not differentiable at the vertices.
    let grad = if (1..=3).any(|i| fov.vertex(i) == *q) {
        Vector2::zeros()
    } else {
        grad
    };
    SdfEval {
        distance,
        grad,
        region,
    }
}

fn region_index(r: Region) -> usize {
    match r {
        Region::D1 | Region::P1 => 1,
        Region::D2 | Region::P2 => 2,
        Region::D3 | Region::P3 => 3,
    }
}

pub fn sdf_grad(q: &Vector2<f64>, fov: &ConeFov) -> Vector2<f64> {
    sdf_cone2d(q, fov).grad
}

/// Cell position `p` in the robot body frame, `Q T^-1 [p; 1]`.
pub fn body_frame(pose: &Pose, p: &Vector3<f64>) -> Vector3<f64> {
    pose.inverse()
        .transform_homogeneous(&Vector4::new(p.x, p.y, p.z, 1.0))
        .xyz()
}

/// Shifted Gaussian CDF, `0.5 [1 + erf(x / (sqrt(2) kappa) - 2)]`.
pub fn probit(x: f64, kappa: f64) -> f64 {
    0.5 * libm::erfc(PROBIT_SHIFT - x / (std::f64::consts::SQRT_2 * kappa))
}

/// `1 - probit(x, kappa)`, accurate when probit is close to one.
pub fn probit_complement(x: f64, kappa: f64) -> f64 {
    0.5 * libm::erfc(x / (std::f64::consts::SQRT_2 * kappa) - PROBIT_SHIFT)
}

pub fn probit_deriv(x: f64, kappa: f64) -> f64 {
    let s = x / (std::f64::consts::SQRT_2 * kappa) - PROBIT_SHIFT;
    (-s * s).exp() / ((2.0 * PI).sqrt() * kappa)
}

/// Inverse noise variance and its gradient with respect to the body-frame
/// point (the z component of the point is ignored).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSample {
    pub inv_var: f64,
    pub grad_q: Vector2<f64>,
    pub sdf: SdfEval,
}

pub fn noise_at(q: &Vector2<f64>, fov: &ConeFov) -> NoiseSample {
    let sdf = sdf_cone2d(q, fov);
    let inv_s2 = 1.0 / (fov.sigma * fov.sigma);
    NoiseSample {
        inv_var: inv_s2 * probit_complement(sdf.distance, fov.kappa),
        grad_q: sdf.grad * (-inv_s2 * probit_deriv(sdf.distance, fov.kappa)),
        sdf,
    }
}

/// `(1 - Phi(d(q))) / sigma^2` for the cell at world position `p`.
pub fn inv_noise_var(pose: &Pose, p: &Vector3<f64>, fov: &ConeFov) -> f64 {
    let q = body_frame(pose, p);
    noise_at(&q.xy(), fov).inv_var
}
