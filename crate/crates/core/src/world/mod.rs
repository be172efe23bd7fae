//! Synthetic 2.5D environment: vertical-prism obstacles tagged as object
//! instances, a pinhole instance/depth renderer, unicycle stepping with
//! clamping or sliding contact, and a grid-based geodesic distance oracle.

mod gen;
mod motion;
mod nav;
mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Footprint, Point2, Pose, Rect};
use crate::mask::Mask;

pub use gen::{generate_world, WorldGenParams};
pub use motion::{step_agent, step_agent_with, ContactModel};
pub use nav::{
    discretize_path, geodesic_distance, rotation_poses, shortest_path_trajectory, DistanceField, NavGrid,
    ROTATION_STEP, TRANSLATION_STEP,
};
pub use render::{render, render_indexed};

pub type InstanceId = u32;

pub const WORLD_FORMAT_VERSION: u32 = 1;

pub const CATEGORY_WALL: &str = "wall";
pub const CATEGORY_FLOOR: &str = "floor";
pub const CATEGORY_CEILING: &str = "ceiling";

/// One object instance: a vertical prism `footprint x [z_min, z_max]`.
///
/// Floor and ceiling instances are horizontal surfaces: they are rendered but
/// never block motion. Floors render at `z_max`, ceilings at `z_min`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: InstanceId,
    pub category: String,
    pub footprint: Footprint,
    pub z_min: f64,
    pub z_max: f64,
}

impl ObjectInstance {
    pub fn is_floor(&self) -> bool {
        self.category == CATEGORY_FLOOR
    }

    pub fn is_ceiling(&self) -> bool {
        self.category == CATEGORY_CEILING
    }

    pub fn blocks_motion(&self) -> bool {
        !self.is_floor() && !self.is_ceiling()
    }

    /// Anything that is not part of the room shell can be a navigation goal.
    pub fn is_goalable(&self) -> bool {
        self.blocks_motion() && self.category != CATEGORY_WALL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    bounds: Rect,
    resolution: f64,
    obstacles: Vec<ObjectInstance>,
    index: BTreeMap<InstanceId, usize>,
}

impl World {
    pub fn new(bounds: Rect, resolution: f64, obstacles: Vec<ObjectInstance>) -> Result<Self> {
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(Error::InvalidWorld("bounds must have positive extent".into()));
        }
        if !(resolution > 0.0) {
            return Err(Error::InvalidWorld("resolution must be positive".into()));
        }
        let mut index = BTreeMap::new();
        for (i, o) in obstacles.iter().enumerate() {
            if o.id == 0 {
                return Err(Error::InvalidWorld("instance id 0 is reserved for background".into()));
            }
            if index.insert(o.id, i).is_some() {
                return Err(Error::InvalidWorld(format!("duplicate instance id {}", o.id)));
            }
            if !(o.z_min < o.z_max) {
                return Err(Error::InvalidWorld(format!("instance {}: z_min >= z_max", o.id)));
            }
            if !(o.footprint.area() > 0.0) {
                return Err(Error::InvalidWorld(format!("instance {}: degenerate footprint", o.id)));
            }
            if !bounds.expand(1e-9).contains_rect(&o.footprint.bbox()) {
                return Err(Error::InvalidWorld(format!(
                    "instance {}: footprint outside bounds",
                    o.id
                )));
            }
        }
        Ok(Self {
            bounds,
            resolution,
            obstacles,
            index,
        })
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn obstacles(&self) -> &[ObjectInstance] {
        &self.obstacles
    }

    pub fn instance(&self, id: InstanceId) -> Option<&ObjectInstance> {
        self.index.get(&id).map(|&i| &self.obstacles[i])
    }

    pub fn blocking(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.obstacles.iter().filter(|o| o.blocks_motion())
    }

    pub fn goalable(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.obstacles.iter().filter(|o| o.is_goalable())
    }

    /// Distance from `p` to the nearest blocking footprint.
    pub fn clearance(&self, p: Point2) -> f64 {
        self.blocking()
            .map(|o| o.footprint.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// True when `p` lies inside a blocking footprint.
    pub fn in_collision(&self, p: Point2) -> bool {
        self.blocking().any(|o| o.footprint.contains(p))
    }

    /// Whether a disc of `radius` centered at `p` fits in free space.
    pub fn is_free(&self, p: Point2, radius: f64) -> bool {
        self.bounds.contains(p) && self.clearance(p) >= radius - CONTACT_EPS
    }

    pub fn to_json(&self) -> Result<String> {
        let file = WorldFile {
            version: WORLD_FORMAT_VERSION,
            bounds: self.bounds,
            resolution: self.resolution,
            obstacles: self.obstacles.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: WorldFile = serde_json::from_str(s)?;
        if file.version != WORLD_FORMAT_VERSION {
            return Err(Error::Version(file.version));
        }
        World::new(file.bounds, file.resolution, file.obstacles)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        World::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Slack for touching contact between the agent disc and an obstacle.
pub(crate) const CONTACT_EPS: f64 = 1e-9;

#[derive(Serialize, Deserialize)]
struct WorldFile {
    version: u32,
    bounds: Rect,
    resolution: f64,
    obstacles: Vec<ObjectInstance>,
}

/// Pinhole camera with square pixels. The horizontal field of view spans the
/// image width exactly; the vertical one follows from the aspect ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraParams {
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
    pub sensor_height: f64,
    pub max_range: f64,
}

impl Default for CameraParams {
    fn default() -> Self {
        Self {
            fov_deg: 120.0,
            width: 85,
            height: 64,
            sensor_height: 1.3,
            max_range: 20.0,
        }
    }
}

impl CameraParams {
    pub fn with_height(self, sensor_height: f64) -> Self {
        Self { sensor_height, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera("image must be at least 1x1".into()));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::InvalidCamera("fov must be in (0, 180) degrees".into()));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::InvalidCamera("max_range must be positive".into()));
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal_length(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.fov_deg.to_radians() / 2.0).tan()
    }

    pub fn cx(&self) -> f64 {
        self.width as f64 / 2.0
    }

    pub fn cy(&self) -> f64 {
        self.height as f64 / 2.0
    }

    /// Bearing of column `col` relative to the optical axis, counter-clockwise positive.
    pub fn column_bearing(&self, col: usize) -> f64 {
        -((col as f64 + 0.5 - self.cx()) / self.focal_length()).atan()
    }
}

/// One rendered observation.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub frame_index: usize,
    pub pose: Pose,
    pub camera: CameraParams,
    /// Row-major instance ids, 0 = background.
    pub instance_ids: Vec<InstanceId>,
    /// Row-major z-depth in meters, `+inf` where nothing was hit.
    pub depth: Vec<f64>,
    /// Semantic category of every instance present in the frame.
    pub categories: BTreeMap<InstanceId, String>,
}

impl Frame {
    pub fn height(&self) -> usize {
        self.camera.height
    }

    pub fn width(&self) -> usize {
        self.camera.width
    }

    pub fn instance_at(&self, row: usize, col: usize) -> InstanceId {
        self.instance_ids[row * self.camera.width + col]
    }

    pub fn depth_at(&self, row: usize, col: usize) -> f64 {
        self.depth[row * self.camera.width + col]
    }

    /// Distinct non-background instance ids, ascending.
    pub fn instances(&self) -> BTreeSet<InstanceId> {
        self.instance_ids.iter().copied().filter(|&i| i != 0).collect()
    }

    pub fn contains(&self, id: InstanceId) -> bool {
        id != 0 && self.instance_ids.contains(&id)
    }

    pub fn mask(&self, id: InstanceId) -> Mask {
        let (h, w) = (self.height(), self.width());
        Mask::from_fn(h, w, |r, c| self.instance_ids[r * w + c] == id)
    }

    /// Every instance mask in one pass, keyed by id.
    pub fn masks(&self) -> BTreeMap<InstanceId, Mask> {
        let (h, w) = (self.height(), self.width());
        let mut out: BTreeMap<InstanceId, Mask> = BTreeMap::new();
        for (i, &id) in self.instance_ids.iter().enumerate() {
            if id != 0 {
                out.entry(id).or_insert_with(|| Mask::new(h, w)).set_index(i, true);
            }
        }
        out
    }

    pub fn category(&self, id: InstanceId) -> &str {
        self.categories.get(&id).map(String::as_str).unwrap_or("")
    }
}
