//! Semantic costmap mapping over a synthetic RGB-D world.
//!
//! The crate simulates a depth camera flying through a furnished room,
//! tracks detected objects, lifts their point clouds onto the map plane via
//! RANSAC plane fitting, fuses the result with a log-odds occupancy grid
//! into a 0-255 costmap, and plans collision-checked paths over it. The
//! point of the exercise: hollow-bottom furniture (tables, chairs) reads as
//! free space to a planar metric map but not to the semantic layer.
//!
//! Enable the `parallel` feature (default) to run the per-pixel and
//! per-hypothesis inner loops on rayon; without it everything falls back to
//! sequential code paths with identical results.

pub mod cloud;
pub mod config;
pub mod geometry;
pub mod map;
pub mod pipeline;
pub mod plane;
pub mod planner;
pub mod poly;
pub mod report;
pub mod scene;
pub(crate) mod seeding;
pub mod tracking;
pub mod viz;

pub use config::{ConfigError, ScenarioConfig};
pub use geometry::{CameraModel, GeometryError, Point3, RigidTransform3, RobotPose2D};
pub use pipeline::{run_pipeline, PipelineError, RunArtifacts, RunOptions};
pub use report::EvalReport;
