//! Zero-shot object-relative steering.
//!
//! The steering offset is a softmax-weighted mean of segment centroid columns
//! relative to the image center, with segments nearer the goal (higher
//! rescaled level `l`) weighted up. The offset is in image coordinates:
//! positive means the weighted target lies right of center.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::costmap::{decode_segments, WayObjectCostmap};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    /// Linear velocity, m/s.
    pub v: f64,
    /// Angular velocity, rad/s, counter-clockwise positive.
    pub omega: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerParams {
    pub gain: f64,
    pub beta: f64,
    /// Image width in pixels.
    pub width: f64,
    /// Image center column in pixels.
    pub center: f64,
    pub v_nominal: f64,
    /// Drive at `v_nominal` regardless of the yaw error.
    pub fixed_v: bool,
    /// Weight segments by raw normalized level instead of goal proximity,
    /// i.e. attract to the segment farthest from the goal.
    pub literal_weighting: bool,
    pub window: usize,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self::for_width(85)
    }
}

impl ControllerParams {
    pub fn for_width(width: usize) -> Self {
        Self {
            gain: 0.4,
            beta: 5.0,
            width: width as f64,
            center: width as f64 / 2.0,
            v_nominal: 0.05,
            fixed_v: false,
            literal_weighting: false,
            window: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0) || !(self.beta >= 0.0) || !(self.width >= 1.0) || self.window == 0 {
            return Err(Error::InvalidInput(
                "controller needs gain > 0, beta >= 0, width >= 1, window >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Velocity bounds and control period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommandLimits {
    pub v_max: f64,
    pub omega_max: f64,
    pub dt: f64,
}

impl Default for CommandLimits {
    fn default() -> Self {
        Self {
            v_max: 0.05,
            omega_max: 0.1,
            dt: 1.0,
        }
    }
}

/// Steering offset `(g / w) * sum_j alpha_j (m_j - o)` for segments given as
/// (centroid column, level). Outliers (`l = 0`) take no part.
pub fn reactive_yaw(segments: &[(f64, u32)], params: &ControllerParams) -> Result<f64> {
    let active: Vec<(f64, u32)> = segments.iter().copied().filter(|&(_, l)| l > 0).collect();
    if active.is_empty() {
        return Err(Error::NoGuidance);
    }
    let lo = active.iter().map(|&(_, l)| l).min().unwrap_or(0) as f64;
    let hi = active.iter().map(|&(_, l)| l).max().unwrap_or(0) as f64;
    let d: Vec<f64> = active
        .iter()
        .map(|&(_, l)| {
            let x = if hi > lo { (l as f64 - lo) / (hi - lo) } else { 1.0 };
            if params.literal_weighting && hi > lo {
                1.0 - x
            } else {
                x
            }
        })
        .collect();
    let peak = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = d.iter().map(|&dj| (params.beta * (dj - peak)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let pull: f64 = active
        .iter()
        .zip(&weights)
        .map(|(&(m, _), &a)| (a / total) * (m - params.center))
        .sum();
    Ok(params.gain / params.width * pull)
}

/// Maps a body-frame yaw demand (counter-clockwise positive) to a clipped
/// velocity command.
pub fn to_command(yaw: f64, params: &ControllerParams, limits: &CommandLimits) -> ControlCommand {
    let omega = (yaw / limits.dt).clamp(-limits.omega_max, limits.omega_max);
    let v = if params.fixed_v {
        params.v_nominal
    } else {
        params.v_nominal * yaw.cos().max(0.0)
    };
    ControlCommand {
        v: v.clamp(0.0, limits.v_max),
        omega,
    }
}

/// Moving-window mean over the most recent raw commands.
#[derive(Clone, Debug)]
pub struct CommandSmoother {
    window: usize,
    buf: VecDeque<ControlCommand>,
}

impl CommandSmoother {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            buf: VecDeque::with_capacity(window.max(1)),
        }
    }

    pub fn smooth(&mut self, raw: ControlCommand) -> ControlCommand {
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back(raw);
        let n = self.buf.len() as f64;
        let (v, w) = self.buf.iter().fold((0.0, 0.0), |(v, w), c| (v + c.v, w + c.omega));
        // a mean lies within its inputs; the clamp only removes rounding
        // excursions that would otherwise poke past the command limits
        let span = |f: fn(&ControlCommand) -> f64| {
            self.buf
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        };
        let (vlo, vhi) = span(|c| c.v);
        let (wlo, whi) = span(|c| c.omega);
        ControlCommand {
            v: (v / n).clamp(vlo, vhi),
            omega: (w / n).clamp(wlo, whi),
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

impl Default for CommandSmoother {
    fn default() -> Self {
        Self::new(5)
    }
}

/// Rotate in place when nothing in view can be steered toward.
pub fn fallback_command(limits: &CommandLimits) -> ControlCommand {
    ControlCommand {
        v: 0.0,
        omega: limits.omega_max,
    }
}

/// One controller tick, with the intermediate values kept for logging.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ControlStep {
    /// Image-frame steering offset, `None` when the fallback was used.
    pub delta_phi: Option<f64>,
    pub raw: ControlCommand,
    pub command: ControlCommand,
}

/// decode -> steer -> clip -> smooth. Image columns grow clockwise, so the
/// image-frame offset is negated into a body-frame yaw demand.
pub fn control_step(
    costmap: &WayObjectCostmap,
    params: &ControllerParams,
    limits: &CommandLimits,
    smoother: &mut CommandSmoother,
) -> Result<ControlStep> {
    let segments: Vec<(f64, u32)> = decode_segments(costmap)?
        .into_iter()
        .filter_map(|(mask, l)| mask.centroid().map(|c| (c.x, l)))
        .collect();
    let (delta_phi, raw) = match reactive_yaw(&segments, params) {
        Ok(dphi) => (Some(dphi), to_command(-dphi, params, limits)),
        Err(Error::NoGuidance) => (None, fallback_command(limits)),
        Err(e) => return Err(e),
    };
    Ok(ControlStep {
        delta_phi,
        raw,
        command: smoother.smooth(raw),
    })
}
