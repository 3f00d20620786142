//! Occupancy grids and the Gaussian map belief.
//!
//! The measurement model observes every cell directly (`h(T, m) = m`), so
//! the measurement Jacobian is the identity and the pose only enters
//! through the diagonal noise covariance produced by [`crate::fov`]. The
//! per-pose information contribution is therefore diagonal.

use nalgebra::{DMatrix, DVector, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::fov::{self, ConeFov};
use crate::liegroup::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Occupancy {
    Free,
    Occupied,
}

impl Occupancy {
    /// Measurement encoding: free = -1, occupied = +1.
    pub fn value(self) -> f64 {
        match self {
            Occupancy::Free => -1.0,
            Occupancy::Occupied => 1.0,
        }
    }
}

/// Row-major occupancy grid. Cell `j = row * width + col` is centered at
/// `origin + resolution * (col + 1/2, row + 1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Vector2<f64>,
    cells: Vec<Occupancy>,
    positions: Vec<Vector3<f64>>,
}

impl GridMap {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Vector2<f64>,
        cells: Vec<Occupancy>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("map must have at least one cell".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "map resolution must be positive, got {resolution}"
            )));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(Error::NonFinite("map origin"));
        }
        if cells.len() != width * height {
            return Err(Error::DimensionMismatch {
                context: "map cells",
                expected: width * height,
                found: cells.len(),
            });
        }
        let positions = (0..height)
            .flat_map(|row| (0..width).map(move |col| (row, col)))
            .map(|(row, col)| {
                Vector3::new(
                    origin.x + resolution * (col as f64 + 0.5),
                    origin.y + resolution * (row as f64 + 0.5),
                    0.0,
                )
            })
            .collect();
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
            positions,
        })
    }

    pub fn filled(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Vector2<f64>,
        value: Occupancy,
    ) -> Result<Self> {
        Self::new(width, height, resolution, origin, vec![value; width * height])
    }

    /// Rectangular room with outer walls and two partial inner walls with
    /// door gaps, `height` rows by `width` columns.
    pub fn synthetic_room(width: usize, height: usize, resolution: f64) -> Result<Self> {
        let mut cells = vec![Occupancy::Free; width * height];
        let mut set = |row: usize, col: usize| cells[row * width + col] = Occupancy::Occupied;
        for col in 0..width {
            set(0, col);
            set(height - 1, col);
        }
        for row in 0..height {
            set(row, 0);
            set(row, width - 1);
        }
        // vertical wall at 40% width with a door in the lower third
        let wall_col = width * 2 / 5;
        let door = (height / 5, height / 5 + height.max(10) / 6);
        for row in 0..height {
            if row < door.0 || row > door.1 {
                set(row, wall_col);
            }
        }
        // horizontal wall across the right part at 60% height, door near the right
        let wall_row = height * 3 / 5;
        let door_col = width * 4 / 5;
        for col in wall_col..width {
            if !(door_col..door_col + width.max(10) / 8).contains(&col) {
                set(wall_row, col);
            }
        }
        // a block obstacle in the left room
        for row in height * 3 / 5..height * 3 / 5 + 2 {
            for col in width / 8..width / 8 + 3 {
                set(row.min(height - 1), col.min(width - 1));
            }
        }
        Self::new(width, height, resolution, Vector2::zeros(), cells)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Vector2<f64> {
        self.origin
    }

    pub fn cells(&self) -> &[Occupancy] {
        &self.cells
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    /// Lower-left and upper-right corners of the map extent.
    pub fn bounds(&self) -> (Vector2<f64>, Vector2<f64>) {
        let size = Vector2::new(self.width as f64, self.height as f64) * self.resolution;
        (self.origin, self.origin + size)
    }

    pub fn center(&self) -> Vector2<f64> {
        let (lo, hi) = self.bounds();
        (lo + hi) * 0.5
    }
}

/// Inverse of the map covariance.
#[derive(Debug, Clone, PartialEq)]
pub enum Information {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Information {
    pub fn len(&self) -> usize {
        match self {
            Information::Diagonal(d) => d.len(),
            Information::Dense(m) => m.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn diagonal(&self) -> DVector<f64> {
        match self {
            Information::Diagonal(d) => d.clone(),
            Information::Dense(m) => m.diagonal(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Information::Diagonal(d) => DMatrix::from_diagonal(d),
            Information::Dense(m) => m.clone(),
        }
    }

    /// Adds a diagonal increment.
    pub fn add_diagonal(&mut self, m: &DVector<f64>) {
        match self {
            Information::Diagonal(d) => *d += m,
            Information::Dense(y) => {
                for (j, mj) in m.iter().enumerate() {
                    y[(j, j)] += mj;
                }
            }
        }
    }

    /// Diagonal of the inverse (the marginal variances).
    pub fn inverse_diagonal(&self) -> Result<DVector<f64>> {
        match self {
            Information::Diagonal(d) => {
                if d.iter().all(|x| *x > 0.0) {
                    Ok(d.map(|x| 1.0 / x))
                } else {
                    Err(Error::Singular("information matrix"))
                }
            }
            Information::Dense(y) => {
                let chol = y
                    .clone()
                    .cholesky()
                    .ok_or(Error::NotPositiveDefinite("information matrix"))?;
                Ok(chol.inverse().diagonal())
            }
        }
    }

    pub fn log_det(&self) -> Result<f64> {
        match self {
            Information::Diagonal(d) => {
                if d.iter().all(|x| *x > 0.0) {
                    Ok(d.iter().map(|x| x.ln()).sum())
                } else {
                    Err(Error::NotPositiveDefinite("information matrix"))
                }
            }
            Information::Dense(y) => log_det_spd(y),
        }
    }
}

/// `log det` of a symmetric positive definite matrix via Cholesky.
pub fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("matrix"))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Gaussian belief over the map. The information mean is `Y * mean` and is
/// not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MapBelief {
    mean: DVector<f64>,
    info: Information,
}

impl MapBelief {
    pub fn new(mean: DVector<f64>, info: Information) -> Result<Self> {
        if mean.len() != info.len() {
            return Err(Error::DimensionMismatch {
                context: "belief mean vs information",
                expected: info.len(),
                found: mean.len(),
            });
        }
        match &info {
            Information::Diagonal(d) => {
                if !d.iter().all(|x| *x > 0.0 && x.is_finite()) {
                    return Err(Error::NotPositiveDefinite("diagonal information"));
                }
            }
            Information::Dense(y) => {
                if (y - y.transpose()).amax() > 1e-9 {
                    return Err(Error::NotPositiveDefinite("dense information (asymmetric)"));
                }
                if y.clone().cholesky().is_none() {
                    return Err(Error::NotPositiveDefinite("dense information"));
                }
            }
        }
        Ok(Self { mean, info })
    }

    /// Zero mean, `Sigma0 = variance * I`, diagonal storage.
    pub fn diagonal_prior(n: usize, variance: f64) -> Result<Self> {
        Self::new(
            DVector::zeros(n),
            Information::Diagonal(DVector::from_element(n, 1.0 / variance)),
        )
    }

    /// Zero mean, `Sigma0 = variance * I`, dense storage.
    pub fn dense_prior(n: usize, variance: f64) -> Result<Self> {
        Self::new(
            DVector::zeros(n),
            Information::Dense(DMatrix::identity(n, n) / variance),
        )
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn info(&self) -> &Information {
        &self.info
    }

    pub fn info_diagonal(&self) -> DVector<f64> {
        self.info.diagonal()
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Information-form update with a diagonal contribution `m`:
    /// `Y' = Y + M`, `xi' = xi + M z`.
    pub fn eif_update(mut self, m: &DVector<f64>, z: &Measurement) -> Result<Self> {
        self.eif_update_in_place(m, z)?;
        Ok(self)
    }

    pub fn eif_update_in_place(&mut self, m: &DVector<f64>, z: &Measurement) -> Result<()> {
        let n = self.len();
        for (len, context) in [(m.len(), "information increment"), (z.z.len(), "measurement")] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: n,
                    found: len,
                });
            }
        }
        if m.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidParameter(
                "information increment must be non-negative".into(),
            ));
        }
        match &mut self.info {
            Information::Diagonal(y) => {
                for j in 0..n {
                    if m[j] > 0.0 {
                        let y_new = y[j] + m[j];
                        self.mean[j] = (y[j] * self.mean[j] + m[j] * z.z[j]) / y_new;
                        y[j] = y_new;
                    }
                }
            }
            Information::Dense(y) => {
                let mut xi = &*y * &self.mean;
                for j in 0..n {
                    xi[j] += m[j] * z.z[j];
                    y[(j, j)] += m[j];
                }
                let chol = y
                    .clone()
                    .cholesky()
                    .ok_or(Error::NotPositiveDefinite("updated information"))?;
                self.mean = chol.solve(&xi);
            }
        }
        Ok(())
    }

    pub fn log_det_info(&self) -> Result<f64> {
        self.info.log_det()
    }
}

/// Measurement vector with the in-view mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub z: DVector<f64>,
    pub mask: Vec<bool>,
}

/// Diagonal of `M(T) = H^T V(T)^-1 H` with `H = I`.
pub fn info_contribution(pose: &Pose, positions: &[Vector3<f64>], fov: &ConeFov) -> DVector<f64> {
    let inv = pose.inverse();
    DVector::from_iterator(
        positions.len(),
        positions.iter().map(|p| {
            let q = inv.transform_point(p);
            fov::noise_at(&q.xy(), fov).inv_var
        }),
    )
}

/// Covariance-form Kalman update with `H = I` and diagonal noise given by
/// its inverse `v_inv`. Cells with `v_inv = 0` are unobserved.
pub fn ekf_update(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    z: &Measurement,
    v_inv: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = mean.len();
    if cov.nrows() != n || cov.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "covariance",
            expected: n,
            found: cov.nrows(),
        });
    }
    if z.z.len() != n || v_inv.len() != n {
        return Err(Error::DimensionMismatch {
            context: "measurement",
            expected: n,
            found: z.z.len().min(v_inv.len()),
        });
    }
    if (cov - cov.transpose()).amax() > 1e-9 || cov.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite("covariance"));
    }
    let observed: Vec<usize> = (0..n).filter(|&j| v_inv[j] > 0.0).collect();
    if observed.is_empty() {
        return Ok((mean.clone(), cov.clone()));
    }
    let k = observed.len();
    // innovation covariance over the observed cells: Sigma_OO + V_OO
    let mut innov = DMatrix::zeros(k, k);
    for (a, &ja) in observed.iter().enumerate() {
        for (b, &jb) in observed.iter().enumerate() {
            innov[(a, b)] = cov[(ja, jb)];
        }
        innov[(a, a)] += 1.0 / v_inv[ja];
    }
    let chol = innov
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("innovation covariance"))?;
    let cross = DMatrix::from_fn(n, k, |r, c| cov[(r, observed[c])]);
    let residual = DVector::from_iterator(k, observed.iter().map(|&j| z.z[j] - mean[j]));
    // gain = Sigma_{:,O} R^-1
    let gain = chol.solve(&cross.transpose()).transpose();
    let mean_new = mean + &gain * residual;
    let mut cov_new = cov - &gain * cross.transpose();
    cov_new = (&cov_new + cov_new.transpose()) * 0.5;
    Ok((mean_new, cov_new))
}

/// Noiseless observation of the true map: cells strictly inside the field
/// of view report their occupancy, all others repeat the prior mean.
pub fn sample_measurement(
    truth: &GridMap,
    pose: &Pose,
    fov: &ConeFov,
    prior_mean: &DVector<f64>,
) -> Result<Measurement> {
    if prior_mean.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "prior mean vs map",
            expected: truth.len(),
            found: prior_mean.len(),
        });
    }
    let inv = pose.inverse();
    let mask: Vec<bool> = truth
        .positions()
        .iter()
        .map(|p| fov::sdf_cone2d(&inv.transform_point(p).xy(), fov).distance < 0.0)
        .collect();
    let z = DVector::from_iterator(
        truth.len(),
        mask.iter()
            .zip(truth.cells())
            .zip(prior_mean.iter())
            .map(|((&seen, cell), &mu)| if seen { cell.value() } else { mu }),
    );
    Ok(Measurement { z, mask })
}

pub fn log_det_info(belief: &MapBelief) -> Result<f64> {
    belief.log_det_info()
}

/// `g(x) = +1` for `x > 0`, `-1` otherwise (unknown renders as free).
pub fn threshold_map(mean: &DVector<f64>) -> Vec<Occupancy> {
    mean.iter()
        .map(|&x| {
            if x > 0.0 {
                Occupancy::Occupied
            } else {
                Occupancy::Free
            }
        })
        .collect()
}
