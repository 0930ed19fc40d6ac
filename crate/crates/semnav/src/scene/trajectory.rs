//! Timed pose sampling along a waypoint polyline.

use crate::geometry::{normalize_angle, RobotPose2D};
use crate::seeding::mix_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory needs at least one waypoint")]
    EmptyTrajectory,
    #[error("speed and dt must be positive")]
    InvalidStep,
}

/// Optional Gaussian pose noise applied per sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct PoseNoise {
    pub sigma_xy: f64,
    pub sigma_theta: f64,
    pub seed: u64,
}

/// Samples poses along the waypoint polyline at fixed `dt`: linear in
/// position, shortest-arc in heading, with the final waypoint always
/// included. A single waypoint yields that single pose.
pub fn sample_trajectory(
    waypoints: &[RobotPose2D],
    speed: f64,
    dt: f64,
    noise: Option<PoseNoise>,
) -> Result<Vec<RobotPose2D>, TrajectoryError> {
    if waypoints.is_empty() {
        return Err(TrajectoryError::EmptyTrajectory);
    }
    if speed <= 0.0 || dt <= 0.0 {
        return Err(TrajectoryError::InvalidStep);
    }

    // cumulative arc length per waypoint
    let mut arc = vec![0.0f64];
    for pair in waypoints.windows(2) {
        let d = ((pair[1].x - pair[0].x).powi(2) + (pair[1].y - pair[0].y).powi(2)).sqrt();
        arc.push(arc.last().unwrap() + d);
    }
    let total = *arc.last().unwrap();

    let mut poses = Vec::new();
    if total == 0.0 {
        poses.push(waypoints[0]);
    } else {
        let mut s = 0.0;
        let step = speed * dt;
        while s < total + step * 1e-9 {
            poses.push(pose_at(waypoints, &arc, s.min(total)));
            s += step;
        }
        // make sure the goal pose closes the trajectory
        let last_s = (poses.len() - 1) as f64 * step;
        if total - last_s > step * 1e-9 {
            poses.push(pose_at(waypoints, &arc, total));
        }
    }

    if let Some(n) = noise {
        if n.sigma_xy > 0.0 || n.sigma_theta > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(n.seed, 0x7261_6a65));
            let nxy = Normal::new(0.0, n.sigma_xy.max(0.0)).expect("sigma >= 0");
            let nth = Normal::new(0.0, n.sigma_theta.max(0.0)).expect("sigma >= 0");
            for p in &mut poses {
                *p = RobotPose2D::new(
                    p.x + nxy.sample(&mut rng),
                    p.y + nxy.sample(&mut rng),
                    p.theta + nth.sample(&mut rng),
                );
            }
        }
    }
    Ok(poses)
}

fn pose_at(waypoints: &[RobotPose2D], arc: &[f64], s: f64) -> RobotPose2D {
    // find the segment containing arc length s
    let mut i = 0;
    while i + 1 < arc.len() - 1 && arc[i + 1] <= s {
        i += 1;
    }
    let seg = arc[i + 1] - arc[i];
    if seg == 0.0 {
        return waypoints[i + 1];
    }
    let f = ((s - arc[i]) / seg).clamp(0.0, 1.0);
    let a = &waypoints[i];
    let b = &waypoints[i + 1];
    let dtheta = normalize_angle(b.theta - a.theta);
    RobotPose2D::new(
        a.x + f * (b.x - a.x),
        a.y + f * (b.y - a.y),
        a.theta + f * dtheta,
    )
}
