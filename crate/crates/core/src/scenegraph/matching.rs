//! Ground-truth association between frames, with a seeded failure model.

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::rng_for;
use crate::world::{Frame, InstanceId};

/// Matcher failure model. Each true correspondence is dropped with
/// probability `p_drop`; a surviving one is rewired to a wrong partner with
/// probability `p_mismatch`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionNoise {
    pub p_drop: f64,
    pub p_mismatch: f64,
    pub seed: u64,
}

impl PerceptionNoise {
    pub fn off() -> Self {
        Self::default()
    }

    pub fn is_off(&self) -> bool {
        self.p_drop == 0.0 && self.p_mismatch == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.p_drop, self.p_mismatch] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput(format!("noise probability {p} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Outcome of the failure model for one correspondence.
pub(crate) enum Fate {
    Keep,
    Drop,
    /// Index into the candidate list of wrong partners.
    Rewire(usize),
}

/// Draws the fate of one correspondence. Always consumes three uniforms so
/// that the subsets dropped at a lower `p_drop` are contained in those
/// dropped at a higher one, for the same stream.
pub(crate) fn draw_fate(rng: &mut impl Rng, noise: &PerceptionNoise, wrong_partners: usize) -> Fate {
    let u_drop: f64 = rng.random();
    let u_mis: f64 = rng.random();
    let u_pick: f64 = rng.random();
    if u_drop < noise.p_drop {
        Fate::Drop
    } else if wrong_partners > 0 && u_mis < noise.p_mismatch {
        Fate::Rewire(((u_pick * wrong_partners as f64) as usize).min(wrong_partners - 1))
    } else {
        Fate::Keep
    }
}

/// Pairs the instances seen in both frames, then applies the noise model.
/// The random stream depends on the noise seed and both frame indices only.
pub fn match_frames_gt(a: &Frame, b: &Frame, noise: &PerceptionNoise) -> Vec<(InstanceId, InstanceId)> {
    let in_a = a.instances();
    let in_b: Vec<InstanceId> = b.instances().into_iter().collect();
    let mut rng = rng_for(&[noise.seed, 1, a.frame_index as u64, b.frame_index as u64]);
    let mut out = Vec::new();
    for &id in in_a.iter().filter(|id| in_b.binary_search(id).is_ok()) {
        let others: Vec<InstanceId> = in_b.iter().copied().filter(|&o| o != id).collect();
        match draw_fate(&mut rng, noise, others.len()) {
            Fate::Keep => out.push((id, id)),
            Fate::Drop => {}
            Fate::Rewire(k) => out.push((id, others[k])),
        }
    }
    out
}
