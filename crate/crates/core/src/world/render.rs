use std::collections::BTreeMap;

use super::{CameraParams, Frame, InstanceId, World};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose};

struct Hit {
    depth: f64,
    id: InstanceId,
    z_min: f64,
    z_max: f64,
}

/// Renders the instance-id and z-depth images seen from `pose`.
///
/// One ray per column; each obstacle the ray enters within `max_range`
/// occupies the rows whose viewing ray meets its vertical extent at the entry
/// depth. Floors and ceilings are horizontal planes limited to their
/// footprints. Per pixel the nearest surface wins.
pub fn render(world: &World, pose: &Pose, cam: &CameraParams) -> Result<Frame> {
    render_indexed(world, pose, cam, 0)
}

/// [`render`] with an explicit frame index.
pub fn render_indexed(world: &World, pose: &Pose, cam: &CameraParams, frame_index: usize) -> Result<Frame> {
    cam.validate()?;
    let origin = pose.position();
    if !world.bounds().contains(origin) {
        return Err(Error::OutOfBounds { x: pose.x, y: pose.y });
    }
    if world.in_collision(origin) {
        return Err(Error::InCollision { x: pose.x, y: pose.y });
    }

    let (h, w) = (cam.height, cam.width);
    let f = cam.focal_length();
    let cy = cam.cy();
    let eye = cam.sensor_height;
    let mut ids = vec![0u32; h * w];
    let mut depth = vec![f64::INFINITY; h * w];

    let blocking: Vec<_> = world.blocking().collect();
    let floors: Vec<_> = world.obstacles().iter().filter(|o| o.is_floor()).collect();
    let ceilings: Vec<_> = world.obstacles().iter().filter(|o| o.is_ceiling()).collect();

    let mut hits: Vec<Hit> = Vec::with_capacity(blocking.len());
    for col in 0..w {
        let offset = cam.column_bearing(col);
        let cos_off = offset.cos();
        let dir = Point2::from_angle(pose.yaw + offset);

        hits.clear();
        for o in &blocking {
            if let Some(t) = o.footprint.ray_entry(origin, dir) {
                if t <= cam.max_range {
                    hits.push(Hit {
                        depth: t * cos_off,
                        id: o.id,
                        z_min: o.z_min,
                        z_max: o.z_max,
                    });
                }
            }
        }
        hits.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.id.cmp(&b.id)));

        for row in 0..h {
            // tangent of the downward viewing angle
            let tan_down = (row as f64 + 0.5 - cy) / f;
            let mut best: Option<(f64, InstanceId)> = hits
                .iter()
                .find(|hit| {
                    let z = eye - tan_down * hit.depth;
                    z >= hit.z_min && z <= hit.z_max
                })
                .map(|hit| (hit.depth, hit.id));

            let surfaces: &[_] = if tan_down > 0.0 {
                &floors
            } else if tan_down < 0.0 {
                &ceilings
            } else {
                &[]
            };
            for s in surfaces {
                let plane = if s.is_floor() { s.z_max } else { s.z_min };
                let zd = (eye - plane) / tan_down;
                if !(zd > 0.0) {
                    continue;
                }
                let t = zd / cos_off;
                if t > cam.max_range {
                    continue;
                }
                if best.is_some_and(|(d, _)| d <= zd) {
                    continue;
                }
                if s.footprint.contains(origin + dir * t) {
                    best = Some((zd, s.id));
                }
            }

            if let Some((d, id)) = best {
                ids[row * w + col] = id;
                depth[row * w + col] = d;
            }
        }
    }

    let categories: BTreeMap<InstanceId, String> = ids
        .iter()
        .filter(|&&i| i != 0)
        .map(|&i| (i, world.instance(i).map(|o| o.category.clone()).unwrap_or_default()))
        .collect();

    Ok(Frame {
        frame_index,
        pose: *pose,
        camera: *cam,
        instance_ids: ids,
        depth,
        categories,
    })
}
