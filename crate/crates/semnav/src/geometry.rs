//! Camera model, pinhole projection and rigid-transform algebra connecting
//! the camera, robot and map frames.
//!
//! Frame conventions (fixed once, used everywhere):
//! - camera: +z along the optical axis, +x right, +y down (standard pinhole)
//! - robot:  +x forward, +y left, +z up
//! - map:    z = 0 is the ground plane, z up
//!
//! The default camera mount points the optical axis along robot +x at a
//! configurable height above the ground (see [`RigidTransform3::camera_mount`]).

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("depth {0} outside the valid sensor range")]
    InvalidDepth(f64),
    #[error("point behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("matrix is not a proper rotation")]
    NotRigid,
}

/// A 3D point in meters. The owning frame (camera, robot or map) is implied
/// by the producing operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }
}

/// An axis-aligned bounding box in pixel space, stored as center + size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    /// Box center, pixels.
    pub cx: f64,
    pub cy: f64,
    /// Box size, pixels; always positive.
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { cx, cy, w, h }
    }

    /// Builds a box from inclusive integer pixel bounds.
    pub fn from_pixel_bounds(u_min: u32, v_min: u32, u_max: u32, v_max: u32) -> Self {
        let w = (u_max - u_min + 1) as f64;
        let h = (v_max - v_min + 1) as f64;
        Self {
            cx: (u_min + u_max) as f64 / 2.0,
            cy: (v_min + v_max) as f64 / 2.0,
            w,
            h,
        }
    }

    /// Inclusive integer pixel bounds covered by the box. The first covered
    /// column is `round(cx - w/2)` and the box spans `round(w)` columns
    /// (same for rows), which makes this the exact inverse of
    /// [`BoundingBox::from_pixel_bounds`].
    pub fn pixel_bounds(&self) -> (i64, i64, i64, i64) {
        let u0 = (self.cx - self.w / 2.0).round() as i64;
        let v0 = (self.cy - self.h / 2.0).round() as i64;
        let u1 = u0 + (self.w.round() as i64).max(1) - 1;
        let v1 = v0 + (self.h.round() as i64).max(1) - 1;
        (u0, v0, u1, v1)
    }

    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )
    }
}

/// Pinhole camera intrinsics plus the valid depth range of the sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub depth_min: f64,
    pub depth_max: f64,
}

impl CameraModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        width: u32,
        height: u32,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        depth_min: f64,
        depth_max: f64,
    ) -> Result<Self, GeometryError> {
        let err = |m: &str| Err(GeometryError::InvalidIntrinsics(m.to_string()));
        if width == 0 || height == 0 {
            return err("image dimensions must be positive");
        }
        if fx <= 0.0 || fy <= 0.0 {
            return err("focal lengths must be positive");
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return err("principal point must lie inside the image");
        }
        if !(depth_min > 0.0 && depth_min < depth_max) {
            return err("depth range must satisfy 0 < depth_min < depth_max");
        }
        Ok(Self {
            width,
            height,
            fx,
            fy,
            cx,
            cy,
            depth_min,
            depth_max,
        })
    }

    /// 640x480 camera with a 90 deg horizontal and 58 deg vertical field of
    /// view: fx = 320 / tan(45 deg), fy = 240 / tan(29 deg).
    pub fn default_rgbd() -> Self {
        let fx = 320.0 / 45.0_f64.to_radians().tan();
        let fy = 240.0 / 29.0_f64.to_radians().tan();
        Self::new(640, 480, fx, fy, 320.0, 240.0, 0.3, 10.0).expect("valid defaults")
    }

    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && u < self.width as f64 && v >= 0.0 && v < self.height as f64
    }

    pub fn valid_depth(&self, depth: f64) -> bool {
        depth.is_finite() && depth >= self.depth_min && depth <= self.depth_max
    }
}

/// Planar robot pose: position in map meters plus heading, normalized to
/// (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotPose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RobotPose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    /// SE(3) embedding of the planar pose: yaw about z, translation (x, y, 0).
    pub fn to_transform(&self) -> RigidTransform3 {
        RigidTransform3 {
            rotation: yaw_matrix(self.theta),
            translation: Vector3::new(self.x, self.y, 0.0),
        }
    }
}

/// Normalizes an angle to (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut a = theta % two_pi;
    if a <= -std::f64::consts::PI {
        a += two_pi;
    } else if a > std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

fn yaw_matrix(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

const ORTHONORMAL_TOL: f64 = 1e-9;

/// A proper rigid transform: orthonormal rotation (det +1) plus translation.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform3 {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform3 {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Validates the rotation before accepting it.
    pub fn from_parts(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self, GeometryError> {
        if rotation_drift(&rotation) > ORTHONORMAL_TOL
            || (rotation.determinant() - 1.0).abs() > ORTHONORMAL_TOL
        {
            return Err(GeometryError::NotRigid);
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::new(x, y, z),
        }
    }

    pub fn from_yaw(theta: f64) -> Self {
        Self {
            rotation: yaw_matrix(theta),
            translation: Vector3::zeros(),
        }
    }

    /// Default camera mount: optical axis along robot +x, camera x (right)
    /// along robot -y, camera y (down) along robot -z, lens at `height`
    /// meters above the ground.
    pub fn camera_mount(height: f64) -> Self {
        // Columns are the camera basis vectors expressed in the robot frame.
        let rotation = Matrix3::new(
            0.0, 0.0, 1.0, //
            -1.0, 0.0, 0.0, //
            0.0, -1.0, 0.0,
        );
        Self {
            rotation,
            translation: Vector3::new(0.0, 0.0, height),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

fn rotation_drift(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).abs().max()
}

/// Gram-Schmidt re-orthonormalization used when composed rotations drift.
fn reorthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let c0 = r.column(0).normalize();
    let mut c1 = r.column(1) - c0 * r.column(1).dot(&c0);
    c1.normalize_mut();
    let c2 = c0.cross(&c1);
    Matrix3::from_columns(&[c0, c1, c2])
}

/// Back-projects a pixel with a measured depth into the camera frame.
pub fn back_project(
    pixel: (f64, f64),
    depth: f64,
    cam: &CameraModel,
) -> Result<Point3, GeometryError> {
    if !cam.valid_depth(depth) {
        return Err(GeometryError::InvalidDepth(depth));
    }
    let (u, v) = pixel;
    Ok(Point3::new(
        (u - cam.cx) * depth / cam.fx,
        (v - cam.cy) * depth / cam.fy,
        depth,
    ))
}

/// Projects a camera-frame point onto the image plane. The result may lie
/// outside the image bounds; callers clip.
pub fn project_point(p: Point3, cam: &CameraModel) -> Result<(f64, f64), GeometryError> {
    if p.z <= 0.0 {
        return Err(GeometryError::BehindCamera(p.z));
    }
    Ok((cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy))
}

/// R * p + t.
pub fn apply_transform(t: &RigidTransform3, p: Point3) -> Point3 {
    Point3::from_vector(t.rotation * p.to_vector() + t.translation)
}

/// Composes two transforms so that `compose(a, b)` applies `b` first:
/// `compose(a, b)(p) = a(b(p))`.
pub fn compose(a: &RigidTransform3, b: &RigidTransform3) -> RigidTransform3 {
    let mut rotation = a.rotation * b.rotation;
    if rotation_drift(&rotation) > ORTHONORMAL_TOL {
        rotation = reorthonormalize(&rotation);
    }
    RigidTransform3 {
        rotation,
        translation: a.rotation * b.translation + a.translation,
    }
}

/// Maps a camera-frame object point into the map frame through the robot
/// pose and the camera mount. Single code path: exactly
/// `apply_transform(compose(M(pose), cam_in_robot), p_o)`.
pub fn object_to_map(p_o: Point3, pose: &RobotPose2D, cam_in_robot: &RigidTransform3) -> Point3 {
    apply_transform(&compose(&pose.to_transform(), cam_in_robot), p_o)
}
