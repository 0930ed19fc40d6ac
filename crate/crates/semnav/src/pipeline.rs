//! The scenario runner: render -> detect -> track -> cloud -> plane ->
//! register -> stamp, with scan integration feeding the metric grid, and a
//! final plan/validate pass over both costmaps.
//!
//! Every randomized stage draws from a stream derived from the scenario
//! seed, so a (config, seed) pair reproduces its artifacts byte-for-byte
//! (the report's wall-clock timings are the one exception).

use crate::cloud::{
    centroid, euclidean_cluster, extract_roi_cloud, largest_cluster, object_height,
    remove_background,
};
use crate::config::{ConfigError, ScenarioConfig};
use crate::geometry::{compose, RigidTransform3};
use crate::map::{
    compose_costmap, depth_to_scan, integrate_scan, save_map, stamp_semantic_footprint,
    GridGeometry, LogOddsParams, MapError, ObjectRegistry, Observation, OccupancyGrid,
    SemanticLayer,
};
use crate::plane::{footprint_hull, project_inliers_to_map, ransac_plane};
use crate::planner::{plan, validate_path, CollisionReport, Path as PlannedPath, PlanRequest};
use crate::report::{EvalReport, ObjectEval, PlanVerdict, StageTimings, REPORT_SCHEMA_VERSION};
use crate::scene::{oracle_detect, render_depth, Detection, ObjectClass, SceneDescription, SceneError};
use crate::seeding::mix_seed;
use crate::tracking::Tracker;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

pub const DETECTIONS_SCHEMA_VERSION: u32 = 1;

const STREAM_TRAJECTORY: u64 = 1;
const STREAM_RENDER: u64 = 2;
const STREAM_RANSAC: u64 = 3;
const STREAM_ORACLE: u64 = 4;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("trajectory error: {0}")]
    Trajectory(#[from] crate::scene::TrajectoryError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("detections file error: {0}")]
    Detections(String),
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Skip the semantic stages entirely; the metric grid is unaffected.
    pub metric_only: bool,
    /// Write per-frame track states to tracks.csv.
    pub trace: bool,
    /// Write per-track clouds as ASCII XYZ files under clouds/.
    pub dump_clouds: bool,
    /// Overrides the config seed.
    pub seed: Option<u64>,
}

/// External detections file: the pluggable-detector interface. Bounding
/// boxes are pixel center/size, frames index into the sampled trajectory.
#[derive(Debug, Serialize, Deserialize)]
pub struct DetectionsFile {
    pub schema: u32,
    pub frames: Vec<DetectionFrame>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub frame: u64,
    pub detections: Vec<DetectionDto>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DetectionDto {
    pub class: ObjectClass,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

fn default_confidence() -> f64 {
    1.0
}

enum DetectorSource {
    Oracle { min_pixels: usize },
    External(Vec<Vec<Detection>>),
}

fn load_external_detections(path: &Path, frame_count: usize) -> Result<DetectorSource, PipelineError> {
    let file: DetectionsFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if file.schema != DETECTIONS_SCHEMA_VERSION {
        return Err(PipelineError::Detections(format!(
            "unsupported detections schema {} (expected {DETECTIONS_SCHEMA_VERSION})",
            file.schema
        )));
    }
    let mut per_frame: Vec<Vec<Detection>> = vec![Vec::new(); frame_count];
    for f in file.frames {
        let idx = f.frame as usize;
        if idx >= frame_count {
            continue; // detections past the trajectory end are ignored
        }
        for d in f.detections {
            if d.w <= 0.0 || d.h <= 0.0 {
                return Err(PipelineError::Detections(format!(
                    "frame {}: non-positive detection size",
                    f.frame
                )));
            }
            per_frame[idx].push(Detection {
                bbox: crate::geometry::BoundingBox::new(d.cx, d.cy, d.w, d.h),
                class: d.class,
                confidence: d.confidence.clamp(0.0, 1.0),
            });
        }
    }
    Ok(DetectorSource::External(per_frame))
}

/// Everything a finished run leaves behind.
pub struct RunArtifacts {
    pub report: EvalReport,
    pub out_dir: PathBuf,
}

pub fn run_pipeline(
    config: &ScenarioConfig,
    options: &RunOptions,
) -> Result<RunArtifacts, PipelineError> {
    let seed = options.seed.unwrap_or(config.seed);
    let scene = SceneDescription::load(&config.scene_path())?;
    let cam = config.camera.model().map_err(ConfigError::Camera)?;
    let mount = RigidTransform3::camera_mount(config.camera.mount_height);

    let noise = (config.trajectory.pose_noise_xy > 0.0 || config.trajectory.pose_noise_theta > 0.0)
        .then_some(crate::scene::PoseNoise {
            sigma_xy: config.trajectory.pose_noise_xy,
            sigma_theta: config.trajectory.pose_noise_theta,
            seed: mix_seed(seed, STREAM_TRAJECTORY),
        });
    let poses = crate::scene::sample_trajectory(
        &config.trajectory.poses(),
        config.trajectory.speed,
        config.trajectory.dt,
        noise,
    )?;

    let geometry = GridGeometry::covering(scene.bounds.min, scene.bounds.max, config.map.resolution);
    let mut metric = OccupancyGrid::new(geometry.clone(), LogOddsParams::default());
    let mut semantic = SemanticLayer::new(geometry);
    let mut registry = ObjectRegistry::new(config.map.merge_radius);
    let mut tracker = Tracker::new(config.tracker.params());

    let detector = match &config.detections {
        Some(path) if !options.metric_only => {
            load_external_detections(&config.resolve(path), poses.len())?
        }
        _ => DetectorSource::Oracle {
            min_pixels: config.tracker.min_pixels,
        },
    };

    std::fs::create_dir_all(&options.out_dir)?;
    let mut trace_rows = String::from("frame,id,class,x,y,w,h\n");
    if options.dump_clouds {
        std::fs::create_dir_all(options.out_dir.join("clouds"))?;
    }

    let mut timings = StageTimings::default();
    for (frame_idx, pose) in poses.iter().enumerate() {
        let frame = frame_idx as u64;
        let camera_in_map = compose(&pose.to_transform(), &mount);

        let t0 = Instant::now();
        let depth = render_depth(
            &scene,
            &camera_in_map,
            &cam,
            config.camera.noise_sigma,
            mix_seed(seed, STREAM_RENDER + frame),
        );
        timings.render += t0.elapsed().as_secs_f64() * 1e3;

        if !options.metric_only {
            let t1 = Instant::now();
            let mut detections = match &detector {
                DetectorSource::Oracle { min_pixels } => oracle_detect(
                    &scene,
                    &camera_in_map,
                    &cam,
                    *min_pixels,
                    mix_seed(seed, STREAM_ORACLE + frame),
                ),
                DetectorSource::External(frames) => frames[frame_idx].clone(),
            };
            detections.retain(|d| d.confidence >= config.tracker.min_confidence);
            let tracks = tracker.step(&detections, frame);
            timings.detect_track += t1.elapsed().as_secs_f64() * 1e3;

            for (track_seq, track) in tracks.iter().enumerate() {
                if options.trace {
                    trace_rows.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        frame,
                        track.track_id,
                        track.class,
                        track.bbox.cx,
                        track.bbox.cy,
                        track.bbox.w,
                        track.bbox.h
                    ));
                }
                let t2 = Instant::now();
                let ransac_seed = mix_seed(
                    mix_seed(seed, STREAM_RANSAC),
                    frame * 1024 + track_seq as u64,
                );
                let observation = match observe_track(
                    &depth,
                    track,
                    &cam,
                    &camera_in_map,
                    config,
                    ransac_seed,
                    frame,
                    options,
                ) {
                    Ok(obs) => obs,
                    Err(reason) => {
                        timings.cloud_plane += t2.elapsed().as_secs_f64() * 1e3;
                        if options.trace {
                            eprintln!(
                                "frame {frame}: track {} ({}) skipped: {reason}",
                                track.track_id, track.class
                            );
                        }
                        continue;
                    }
                };
                timings.cloud_plane += t2.elapsed().as_secs_f64() * 1e3;

                let t3 = Instant::now();
                let id = registry.register(observation);
                let record = registry.get(id).expect("just registered").clone();
                // low-support records wait for confirmation before they
                // touch the semantic layer
                if record.observation_count >= config.map.min_observations {
                    if let Err(e) =
                        stamp_semantic_footprint(&mut semantic, &record, config.map.decay_sigma)
                    {
                        if options.trace {
                            eprintln!("frame {frame}: stamp for object {id} skipped: {e}");
                        }
                    }
                }
                timings.map_update += t3.elapsed().as_secs_f64() * 1e3;
            }
        }

        let t4 = Instant::now();
        let scan = depth_to_scan(&depth, &cam, config.map.scan_band_half_height);
        // a frame whose (possibly noise-perturbed) pose left the grid is
        // dropped, it does not abort the run
        if let Err(e) = integrate_scan(&mut metric, pose, &scan) {
            if options.trace {
                eprintln!("frame {frame}: scan integration skipped: {e}");
            }
        }
        timings.map_update += t4.elapsed().as_secs_f64() * 1e3;
    }
    registry.prune_below(config.map.min_observations);

    let frames = poses.len().max(1);
    timings.render /= frames as f64;
    timings.detect_track /= frames as f64;
    timings.cloud_plane /= frames as f64;
    timings.map_update /= frames as f64;

    // planning on the raw metric grid and on the composed costmap
    let request = config.planner.request();
    let metric_outcome = plan_and_validate(&metric, &request, &scene);
    let semantic_outcome = if options.metric_only {
        None
    } else {
        let costmap = compose_costmap(&metric, &semantic)?;
        let outcome = plan_and_validate(&costmap, &request, &scene);
        crate::map::write_pgm(
            &options.out_dir.join("costmap.pgm"),
            costmap.geometry(),
            costmap.values(),
        )?;
        write_grid_sidecar(&options.out_dir.join("costmap.json"), &costmap)?;
        Some(outcome)
    };

    // artifacts: save_map covers metric.*, semantic.* and registry.json;
    // metric-only runs write just the metric raster
    if options.metric_only {
        crate::map::write_pgm(
            &options.out_dir.join("metric.pgm"),
            metric.geometry(),
            metric.values(),
        )?;
        write_grid_sidecar(&options.out_dir.join("metric.json"), &metric)?;
    } else {
        save_map(&options.out_dir, &metric, &semantic, &registry)?;
    }
    if options.trace {
        std::fs::write(options.out_dir.join("tracks.csv"), trace_rows)?;
    }

    let mut paths_csv = String::from("map,index,x,y\n");
    push_path_csv(&mut paths_csv, "metric", metric_outcome.path.as_ref());
    if let Some(sem) = &semantic_outcome {
        push_path_csv(&mut paths_csv, "semantic", sem.path.as_ref());
    }
    std::fs::write(options.out_dir.join("paths.csv"), paths_csv)?;

    let report = EvalReport {
        schema: REPORT_SCHEMA_VERSION,
        scenario: config.label(),
        seed,
        frames: poses.len(),
        objects: evaluate_objects(&registry, &scene),
        metric_plan: metric_outcome.verdict,
        semantic_plan: semantic_outcome.map(|o| o.verdict),
        timings_ms_per_frame: timings,
    };
    std::fs::write(options.out_dir.join("report.json"), report.to_json())?;

    Ok(RunArtifacts {
        report,
        out_dir: options.out_dir.clone(),
    })
}

/// Lifts one confirmed track into a map-frame observation. Any stage error
/// drops the track for this frame; the error text is the skip reason.
#[allow(clippy::too_many_arguments)]
fn observe_track(
    depth: &crate::scene::DepthImage,
    track: &crate::tracking::Track,
    cam: &crate::geometry::CameraModel,
    camera_in_map: &RigidTransform3,
    config: &ScenarioConfig,
    ransac_seed: u64,
    frame: u64,
    options: &RunOptions,
) -> Result<Observation, String> {
    let cluster_params = config.cluster.params();
    let roi = extract_roi_cloud(depth, &track.bbox, cam, cluster_params.stride)
        .map_err(|e| format!("roi: {e}"))?;
    let foreground = remove_background(&roi).map_err(|e| format!("background: {e}"))?;
    let clusters = euclidean_cluster(&foreground, &cluster_params);
    let cluster = largest_cluster(&foreground, &clusters).map_err(|e| format!("cluster: {e}"))?;
    let object_cloud = foreground.subcloud(cluster);

    if options.dump_clouds {
        let path = options
            .out_dir
            .join("clouds")
            .join(format!("frame_{frame:04}_track_{}.xyz", track.track_id));
        let _ = std::fs::write(path, object_cloud.to_xyz());
    }

    let map_cloud = object_cloud.to_map_frame(camera_in_map);
    let height = object_height(&map_cloud).map_err(|e| format!("height: {e}"))?;
    let (_, inliers) = ransac_plane(&map_cloud, &config.ransac.params(ransac_seed))
        .map_err(|e| format!("ransac: {e}"))?;
    if inliers.len() < config.ransac.min_plane_points {
        return Err(format!(
            "ransac: plane carries only {} points (need {})",
            inliers.len(),
            config.ransac.min_plane_points
        ));
    }
    let plane_cloud = map_cloud.subcloud(&inliers);
    // the cloud mean sanity-checks the hull but the registered position is
    // the footprint's area centroid: the grazing view oversamples the near
    // edge, and the hull centroid does not care about sample density
    let mean = centroid(&plane_cloud).map_err(|e| format!("centroid: {e}"))?;
    let points2d = project_inliers_to_map(&plane_cloud).map_err(|e| format!("project: {e}"))?;
    let footprint = footprint_hull(&points2d);
    let position = footprint.area_centroid();
    debug_assert!(
        (position[0] - mean.x).abs() < 1.0 && (position[1] - mean.y).abs() < 1.0,
        "hull centroid and cloud mean disagree wildly"
    );

    Ok(Observation {
        class: track.class,
        position,
        height,
        footprint,
        confidence: track.confidence,
    })
}

struct PlanOutcome {
    verdict: PlanVerdict,
    path: Option<PlannedPath>,
}

fn plan_and_validate(
    costmap: &OccupancyGrid,
    request: &PlanRequest,
    scene: &SceneDescription,
) -> PlanOutcome {
    match plan(costmap, request) {
        Ok(path) => {
            let report: CollisionReport =
                validate_path(&path, scene, request.flight_height, request.robot_radius);
            PlanOutcome {
                verdict: PlanVerdict {
                    found: true,
                    cost: Some(path.total_cost),
                    waypoints: Some(path.waypoints.len()),
                    collided: Some(report.collided),
                    first_collision_waypoint: report.first_collision_waypoint,
                    offending_object: report.offending_object,
                    error: None,
                },
                path: Some(path),
            }
        }
        Err(e) => PlanOutcome {
            verdict: PlanVerdict {
                found: false,
                cost: None,
                waypoints: None,
                collided: None,
                first_collision_waypoint: None,
                offending_object: None,
                error: Some(e.to_string()),
            },
            path: None,
        },
    }
}

fn push_path_csv(out: &mut String, name: &str, path: Option<&PlannedPath>) {
    if let Some(p) = path {
        for (i, wp) in p.waypoints.iter().enumerate() {
            out.push_str(&format!("{name},{i},{},{}\n", wp[0], wp[1]));
        }
    }
}

fn write_grid_sidecar(path: &Path, grid: &OccupancyGrid) -> Result<(), PipelineError> {
    Ok(crate::map::write_map_sidecar(path, grid.geometry())?)
}

/// Matches each registered object to the nearest same-class ground-truth
/// object and reports position/height errors against it.
fn evaluate_objects(registry: &ObjectRegistry, scene: &SceneDescription) -> Vec<ObjectEval> {
    registry
        .records()
        .iter()
        .map(|r| {
            let gt = scene
                .objects
                .iter()
                .filter(|o| o.class == r.class)
                .min_by(|a, b| {
                    let da = (a.x - r.position[0]).hypot(a.y - r.position[1]);
                    let db = (b.x - r.position[0]).hypot(b.y - r.position[1]);
                    da.total_cmp(&db)
                });
            let (position_error, height_error) = match gt {
                Some(o) => {
                    let centroid = crate::scene::object_footprint(o).area_centroid();
                    (
                        Some((centroid[0] - r.position[0]).hypot(centroid[1] - r.position[1])),
                        Some((o.top_height() - r.height).abs()),
                    )
                }
                None => (None, None),
            };
            ObjectEval {
                id: r.id,
                class: r.class,
                x: r.position[0],
                y: r.position[1],
                height: r.height,
                observations: r.observation_count,
                confidence: r.confidence,
                position_error,
                height_error,
            }
        })
        .collect()
}
