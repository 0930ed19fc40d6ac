//! Constant-velocity Kalman filter over bounding boxes: state is
//! (x, y, w, h, vx, vy, vw, vh) in pixels and pixels/frame.

use nalgebra::{SMatrix, SVector};

pub type StateVector = SVector<f64, 8>;
pub type StateCovariance = SMatrix<f64, 8, 8>;

/// Minimum box side after an update, pixels.
pub const MIN_BOX_SIZE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

/// Bounding-box measurement (z_x, z_y, z_w, z_h) in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Process noise scaled by box size, SORT-style: per-frame standard
/// deviations `pos_weight * h` on position/size and `vel_weight * h` on
/// velocity components.
#[derive(Debug, Clone, Copy)]
pub struct ProcessNoise {
    pub pos_weight: f64,
    pub vel_weight: f64,
}

impl Default for ProcessNoise {
    fn default() -> Self {
        Self {
            pos_weight: 1.0 / 20.0,
            vel_weight: 1.0 / 160.0,
        }
    }
}

/// Measurement noise: R = sigma_px^2 * I.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementNoise {
    pub sigma_px: f64,
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        Self { sigma_px: 2.0 }
    }
}

impl TrackState {
    /// Initializes from a first measurement with zero velocity.
    pub fn from_measurement(z: &Measurement, q: &ProcessNoise) -> Self {
        let mut mean = StateVector::zeros();
        mean[0] = z.x;
        mean[1] = z.y;
        mean[2] = z.w.max(MIN_BOX_SIZE);
        mean[3] = z.h.max(MIN_BOX_SIZE);

        let scale = mean[3];
        let pos_std = 2.0 * q.pos_weight * scale;
        let vel_std = 10.0 * q.vel_weight * scale;
        let mut cov = StateCovariance::zeros();
        for i in 0..4 {
            cov[(i, i)] = pos_std * pos_std;
            cov[(i + 4, i + 4)] = vel_std * vel_std;
        }
        Self {
            mean,
            covariance: cov,
        }
    }

    pub fn bbox(&self) -> Measurement {
        Measurement {
            x: self.mean[0],
            y: self.mean[1],
            w: self.mean[2],
            h: self.mean[3],
        }
    }
}

fn transition(dt: f64) -> StateCovariance {
    let mut f = StateCovariance::identity();
    for i in 0..4 {
        f[(i, i + 4)] = dt;
    }
    f
}

fn process_covariance(q: &ProcessNoise, scale: f64) -> StateCovariance {
    let pos = (q.pos_weight * scale).powi(2);
    let vel = (q.vel_weight * scale).powi(2);
    let mut m = StateCovariance::zeros();
    for i in 0..4 {
        m[(i, i)] = pos;
        m[(i + 4, i + 4)] = vel;
    }
    m
}

fn symmetrize(m: &mut StateCovariance) {
    *m = (*m + m.transpose()) * 0.5;
}

/// Advances the state `dt_frames` steps under the constant-velocity model.
pub fn kf_predict(state: &TrackState, dt_frames: u64, q: &ProcessNoise) -> TrackState {
    debug_assert!(dt_frames >= 1);
    let f = transition(dt_frames as f64);
    let mean = f * state.mean;
    let mut covariance =
        f * state.covariance * f.transpose() + process_covariance(q, state.mean[3]) * dt_frames as f64;
    symmetrize(&mut covariance);
    TrackState { mean, covariance }
}

/// Result of a measurement update; `size_clamped` flags a posterior box
/// side that had to be clamped up to [`MIN_BOX_SIZE`].
#[derive(Debug, Clone)]
pub struct KfUpdate {
    pub state: TrackState,
    pub size_clamped: bool,
}

/// Standard Kalman update with H selecting (x, y, w, h), Joseph-form
/// covariance so the result stays symmetric PSD.
pub fn kf_update(state: &TrackState, z: &Measurement, r: &MeasurementNoise) -> KfUpdate {
    type H = SMatrix<f64, 4, 8>;
    let mut h = H::zeros();
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    let r_mat = SMatrix::<f64, 4, 4>::identity() * r.sigma_px.powi(2);

    let zv = SVector::<f64, 4>::new(z.x, z.y, z.w, z.h);
    let innovation = zv - h * state.mean;
    let s = h * state.covariance * h.transpose() + r_mat;
    let s_inv = s.try_inverse().expect("innovation covariance invertible");
    let gain = state.covariance * h.transpose() * s_inv;

    let mut mean = state.mean + gain * innovation;
    let i_kh = StateCovariance::identity() - gain * h;
    let mut covariance =
        i_kh * state.covariance * i_kh.transpose() + gain * r_mat * gain.transpose();
    symmetrize(&mut covariance);

    let mut size_clamped = false;
    for i in [2usize, 3] {
        if mean[i] < MIN_BOX_SIZE {
            mean[i] = MIN_BOX_SIZE;
            size_clamped = true;
        }
    }
    KfUpdate {
        state: TrackState { mean, covariance },
        size_clamped,
    }
}
