//! Deterministic synthetic world standing in for the RGB-D sensor and the
//! learned detector: parametric furniture built from oriented boxes, a
//! ray-cast depth renderer, a ground-truth detection oracle and trajectory
//! sampling.
//!
//! There is intentionally no floor box: downward rays miss, which keeps
//! clouds and scans free of ground returns.

mod oracle;
mod render;
mod shapes;
mod trajectory;

pub use oracle::{oracle_detect, Detection};
pub use render::{render_depth, render_depth_seq, DepthImage, DEPTH_NO_RETURN};
#[cfg(feature = "parallel")]
pub use render::render_depth_par;
pub use shapes::{BoxPart, OrientedBox, SceneBox};
pub use trajectory::{sample_trajectory, PoseNoise, TrajectoryError};

use crate::geometry::RobotPose2D;
use crate::poly::Polygon;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCENE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("io error reading scene: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported scene schema version {found} (expected {SCENE_SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("invalid scene: {0}")]
    Invalid(String),
}

/// The six object classes the detector knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    Chair,
    CoffeeTable,
    ConferenceTable,
    Sofa,
    Whiteboard,
    Desk,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 6] = [
        ObjectClass::Chair,
        ObjectClass::CoffeeTable,
        ObjectClass::ConferenceTable,
        ObjectClass::Sofa,
        ObjectClass::Whiteboard,
        ObjectClass::Desk,
    ];

    /// Structural category; fixed per class.
    pub fn structure(&self) -> Structure {
        match self {
            ObjectClass::Chair
            | ObjectClass::CoffeeTable
            | ObjectClass::Whiteboard
            | ObjectClass::Desk => Structure::HollowBottom,
            ObjectClass::ConferenceTable => Structure::PartlyHollow,
            ObjectClass::Sofa => Structure::Solid,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObjectClass::Chair => "chair",
            ObjectClass::CoffeeTable => "coffee_table",
            ObjectClass::ConferenceTable => "conference_table",
            ObjectClass::Sofa => "sofa",
            ObjectClass::Whiteboard => "whiteboard",
            ObjectClass::Desk => "desk",
        }
    }
}

impl std::fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Elevated slab on corner legs; free space underneath.
    HollowBottom,
    /// Slab on legs plus a center pedestal.
    PartlyHollow,
    /// One full-height box.
    Solid,
}

/// Box-union parameters of one furniture piece. The slab is the elevated
/// load-bearing surface; for solid objects it describes the whole body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub slab_width: f64,
    pub slab_depth: f64,
    pub slab_thickness: f64,
    pub slab_top_height: f64,
    pub leg_size: f64,
    #[serde(default)]
    pub pedestal_width: f64,
    #[serde(default)]
    pub pedestal_depth: f64,
}

impl ShapeSpec {
    /// Default dimensions per class; not claimed to match any particular
    /// real furniture set.
    pub fn default_for(class: ObjectClass) -> Self {
        match class {
            ObjectClass::Chair => Self {
                slab_width: 0.45,
                slab_depth: 0.45,
                slab_thickness: 0.04,
                slab_top_height: 0.45,
                leg_size: 0.05,
                pedestal_width: 0.0,
                pedestal_depth: 0.0,
            },
            ObjectClass::CoffeeTable => Self {
                slab_width: 0.9,
                slab_depth: 0.5,
                slab_thickness: 0.04,
                slab_top_height: 0.45,
                leg_size: 0.04,
                pedestal_width: 0.0,
                pedestal_depth: 0.0,
            },
            ObjectClass::ConferenceTable => Self {
                slab_width: 1.8,
                slab_depth: 0.9,
                slab_thickness: 0.05,
                slab_top_height: 0.74,
                leg_size: 0.06,
                pedestal_width: 0.8,
                pedestal_depth: 0.5,
            },
            ObjectClass::Sofa => Self {
                slab_width: 1.6,
                slab_depth: 0.8,
                slab_thickness: 0.75,
                slab_top_height: 0.75,
                leg_size: 0.0,
                pedestal_width: 0.0,
                pedestal_depth: 0.0,
            },
            // The board is a tall thin slab elevated on stand legs.
            ObjectClass::Whiteboard => Self {
                slab_width: 1.2,
                slab_depth: 0.08,
                slab_thickness: 0.9,
                slab_top_height: 1.8,
                leg_size: 0.05,
                pedestal_width: 0.0,
                pedestal_depth: 0.0,
            },
            ObjectClass::Desk => Self {
                slab_width: 1.2,
                slab_depth: 0.6,
                slab_thickness: 0.04,
                slab_top_height: 0.72,
                leg_size: 0.05,
                pedestal_width: 0.0,
                pedestal_depth: 0.0,
            },
        }
    }

    fn validate(&self, structure: Structure) -> Result<(), String> {
        if self.slab_width <= 0.0 || self.slab_depth <= 0.0 {
            return Err("footprint dimensions must be positive".into());
        }
        match structure {
            // a solid body is one box; thickness equals its height
            Structure::Solid => {
                if self.slab_top_height <= 0.0 {
                    return Err("body height must be positive".into());
                }
            }
            Structure::HollowBottom | Structure::PartlyHollow => {
                if !(self.slab_top_height > self.slab_thickness && self.slab_thickness > 0.0) {
                    return Err("slab top height must exceed slab thickness (> 0)".into());
                }
            }
        }
        Ok(())
    }
}

/// One furniture piece placed in the map frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub class: ObjectClass,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw: f64,
    #[serde(default)]
    pub shape: Option<ShapeSpec>,
}

impl SceneObject {
    pub fn new(id: u32, class: ObjectClass, x: f64, y: f64, yaw: f64) -> Self {
        Self {
            id,
            class,
            x,
            y,
            yaw,
            shape: None,
        }
    }

    pub fn pose(&self) -> RobotPose2D {
        RobotPose2D::new(self.x, self.y, self.yaw)
    }

    pub fn shape(&self) -> ShapeSpec {
        self.shape.unwrap_or_else(|| ShapeSpec::default_for(self.class))
    }

    /// Height of the load-bearing surface above the ground.
    pub fn top_height(&self) -> f64 {
        self.shape().slab_top_height
    }

    /// The boxes making up the object, in the map frame.
    pub fn boxes(&self) -> Vec<(OrientedBox, BoxPart)> {
        shapes::object_boxes(self)
    }
}

/// An axis-aligned wall segment (or any static box obstacle).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Wall {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// Map extent in meters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneDescription {
    pub schema: u32,
    pub bounds: Bounds,
    #[serde(default)]
    pub walls: Vec<Wall>,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
}

impl SceneDescription {
    pub fn new(bounds: Bounds, walls: Vec<Wall>, objects: Vec<SceneObject>) -> Self {
        Self {
            schema: SCENE_SCHEMA_VERSION,
            bounds,
            walls,
            objects,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let scene: SceneDescription = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SceneError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.schema != SCENE_SCHEMA_VERSION {
            return Err(SceneError::SchemaVersion { found: self.schema });
        }
        let inv = |m: String| Err(SceneError::Invalid(m));
        if !(self.bounds.min[0] < self.bounds.max[0] && self.bounds.min[1] < self.bounds.max[1]) {
            return inv("bounds must have positive extent".into());
        }
        let mut seen = std::collections::HashSet::new();
        for obj in &self.objects {
            if !seen.insert(obj.id) {
                return inv(format!("duplicate object id {}", obj.id));
            }
            obj.shape()
                .validate(obj.class.structure())
                .map_err(SceneError::Invalid)?;
            if obj.x < self.bounds.min[0]
                || obj.x > self.bounds.max[0]
                || obj.y < self.bounds.min[1]
                || obj.y > self.bounds.max[1]
            {
                return inv(format!("object {} outside scene bounds", obj.id));
            }
        }
        Ok(())
    }

    /// Every box in the world with its provenance, walls first.
    pub fn all_boxes(&self) -> Vec<SceneBox> {
        let mut out = Vec::new();
        for wall in &self.walls {
            out.push(SceneBox {
                obox: OrientedBox::from_wall(wall),
                object_id: None,
                part: BoxPart::Wall,
            });
        }
        for obj in &self.objects {
            for (obox, part) in obj.boxes() {
                out.push(SceneBox {
                    obox,
                    object_id: Some(obj.id),
                    part,
                });
            }
        }
        out
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }
}

/// Maximal horizontal cross-section of an object, as a CCW map-frame
/// polygon: the slab extent for hollow and partly-hollow pieces, the base
/// for solid ones.
pub fn object_footprint(obj: &SceneObject) -> Polygon {
    let s = obj.shape();
    let (hw, hd) = (s.slab_width / 2.0, s.slab_depth / 2.0);
    let (sin, cos) = obj.yaw.sin_cos();
    let rot = |px: f64, py: f64| {
        [
            obj.x + px * cos - py * sin,
            obj.y + px * sin + py * cos,
        ]
    };
    Polygon::from_ccw_vertices(vec![
        rot(-hw, -hd),
        rot(hw, -hd),
        rot(hw, hd),
        rot(-hw, hd),
    ])
}
