use serde::{Deserialize, Serialize};

use super::World;
use crate::controller::ControlCommand;
use crate::geometry::{Point2, Pose};

/// Sampling interval along a swept translation, meters.
const SWEEP_STEP: f64 = 0.005;
const CONTACT_BISECTIONS: usize = 40;
/// Finite-difference step for the obstacle normal.
const NORMAL_STEP: f64 = 1e-6;

/// What happens to the rest of a translation after the disc touches an
/// obstacle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContactModel {
    /// Stop at the contact point.
    Clamp,
    /// Stop at the contact point, then spend the remainder along the
    /// obstacle surface (its component into the surface is dropped).
    #[default]
    Slide,
}

impl std::str::FromStr for ContactModel {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clamp" => Ok(ContactModel::Clamp),
            "slide" => Ok(ContactModel::Slide),
            _ => Err(crate::Error::InvalidInput(format!("unknown contact model {s:?}"))),
        }
    }
}

/// Unicycle step: the heading integrates first, then the agent advances
/// `v * dt` along the new heading. A translation that would bring the agent
/// disc into an obstacle stops at the contact point and reports `collided`;
/// the heading change is kept either way.
pub fn step_agent(world: &World, pose: &Pose, cmd: &ControlCommand, dt: f64, agent_radius: f64) -> (Pose, bool) {
    step_agent_with(world, pose, cmd, dt, agent_radius, ContactModel::Clamp)
}

/// [`step_agent`] with a choice of what happens after contact.
pub fn step_agent_with(
    world: &World,
    pose: &Pose,
    cmd: &ControlCommand,
    dt: f64,
    agent_radius: f64,
    contact: ContactModel,
) -> (Pose, bool) {
    let turned = pose.with_yaw(pose.yaw + cmd.omega * dt);
    let dist = cmd.v * dt;
    if dist == 0.0 {
        return (turned, false);
    }
    let from = pose.position();
    let delta = Point2::from_angle(turned.yaw) * dist;
    let (s, hit) = sweep(world, from, delta, agent_radius);
    let at = from + delta * s;
    if !hit || contact == ContactModel::Clamp {
        return (turned.with_position(at), hit);
    }
    let rest = delta * (1.0 - s);
    let n = surface_normal(world, at);
    let into = rest.dot(n);
    let along = if into < 0.0 { rest - n * into } else { rest };
    let (t, _) = sweep(world, at, along, agent_radius);
    (turned.with_position(at + along * t), true)
}

/// Largest fraction `s` of `delta` the disc can travel from `from` without
/// entering an obstacle, and whether it was stopped short.
fn sweep(world: &World, from: Point2, delta: Point2, radius: f64) -> (f64, bool) {
    let ok = |s: f64| world.is_free(from + delta * s, radius);
    let samples = ((delta.norm() / SWEEP_STEP).ceil() as usize).max(1);
    let mut last_free = 0.0;
    for k in 1..=samples {
        let s = k as f64 / samples as f64;
        if ok(s) {
            last_free = s;
            continue;
        }
        // refine the contact between the last free sample and this one
        let (mut lo, mut hi) = (last_free, s);
        for _ in 0..CONTACT_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return (lo, true);
    }
    (1.0, false)
}

/// Unit direction of steepest clearance increase at `p`.
fn surface_normal(world: &World, p: Point2) -> Point2 {
    let h = NORMAL_STEP;
    let dx = world.clearance(p + Point2::new(h, 0.0)) - world.clearance(p - Point2::new(h, 0.0));
    let dy = world.clearance(p + Point2::new(0.0, h)) - world.clearance(p - Point2::new(0.0, h));
    let g = Point2::new(dx, dy);
    let n = g.norm();
    if n > 0.0 {
        g * (1.0 / n)
    } else {
        Point2::new(0.0, 0.0)
    }
}
