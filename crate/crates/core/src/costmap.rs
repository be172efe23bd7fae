//! WayObject costmaps: per-image rescaled path lengths, sinusoidal encoding,
//! and the H x W x D tensor that carries one encoding per owned pixel.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::world::InstanceId;

pub const COSTMAP_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_OUTLIER_FRACTION: f64 = 0.3;

/// Matching tolerance when decoding pixel vectors back into levels.
pub const DECODE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostmapConfig {
    /// Encoding dimension `D`.
    pub dim: usize,
    /// Frequency base `Z`.
    pub base: f64,
    /// Rescale ceiling `L`.
    pub levels: u32,
}

impl Default for CostmapConfig {
    fn default() -> Self {
        Self {
            dim: 8,
            base: 10000.0,
            levels: 100,
        }
    }
}

impl CostmapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.dim % 2 != 0 {
            return Err(Error::InvalidInput("encoding dimension must be even and >= 2".into()));
        }
        if !(self.base > 1.0) {
            return Err(Error::InvalidInput("frequency base must exceed 1".into()));
        }
        if self.levels < 2 {
            return Err(Error::InvalidInput("rescale ceiling must be >= 2".into()));
        }
        Ok(())
    }
}

/// Maps raw path lengths to integer levels in `[1, L]`, the shortest length of
/// the image getting `L` and the longest `1`. Outliers (`None`) map to 0. When
/// every finite length is equal they all get `L`.
pub fn rescale(raw: &[Option<f64>], cfg: &CostmapConfig) -> Result<Vec<u32>> {
    for d in raw.iter().flatten() {
        if d.is_nan() || *d < 0.0 {
            return Err(Error::NegativeCost(*d));
        }
    }
    let finite: Vec<f64> = raw.iter().flatten().copied().filter(|d| d.is_finite()).collect();
    let Some(lo) = finite.iter().copied().reduce(f64::min) else {
        return Ok(vec![0; raw.len()]);
    };
    let hi = finite.iter().copied().fold(lo, f64::max);
    let top = cfg.levels;
    Ok(raw
        .iter()
        .map(|d| match d {
            Some(d) if d.is_finite() => {
                if hi == lo {
                    top
                } else {
                    let r = (top - 1) as f64 * (hi - d) / (hi - lo);
                    // settle rounding-noise differences before the half-away rounding
                    let r = (r * 1e9).round() / 1e9;
                    1 + r.round() as u32
                }
            }
            _ => 0,
        })
        .collect())
}

/// `E(l)_i = sin(l / Z^(i/D))` for even `i`, `cos(l / Z^((i-1)/D))` for odd `i`.
pub fn encode(level: u32, cfg: &CostmapConfig) -> Vec<f64> {
    let l = level as f64;
    let d = cfg.dim as f64;
    (0..cfg.dim)
        .map(|i| {
            if i % 2 == 0 {
                (l / cfg.base.powf(i as f64 / d)).sin()
            } else {
                (l / cfg.base.powf((i - 1) as f64 / d)).cos()
            }
        })
        .collect()
}

/// One image segment with its raw path length and rescaled level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentCost {
    pub instance_id: InstanceId,
    pub mask: Mask,
    /// Raw path length in meters, `None` for an outlier.
    pub raw: Option<f64>,
    pub level: u32,
}

impl SegmentCost {
    pub fn new(instance_id: InstanceId, mask: Mask, raw: Option<f64>, level: u32) -> Self {
        Self {
            instance_id,
            mask,
            raw,
            level,
        }
    }

    fn owner_key(&self) -> (f64, InstanceId) {
        (self.raw.unwrap_or(f64::INFINITY), self.instance_id)
    }
}

/// Rescales the raw lengths of one image and pairs them with their masks.
pub fn build_segments(entries: Vec<(InstanceId, Mask, Option<f64>)>, cfg: &CostmapConfig) -> Result<Vec<SegmentCost>> {
    let raw: Vec<Option<f64>> = entries.iter().map(|e| e.2).collect();
    let levels = rescale(&raw, cfg)?;
    Ok(entries
        .into_iter()
        .zip(levels)
        .map(|((id, mask, raw), l)| SegmentCost::new(id, mask, raw, l))
        .collect())
}

/// Replaces the cost of a uniformly drawn `floor(fraction * N)` subset of
/// segments with the outlier cost.
pub fn augment_outliers(segments: &[SegmentCost], fraction: f64, seed: u64) -> Result<Vec<SegmentCost>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidInput(format!(
            "outlier fraction {fraction} not in [0, 1]"
        )));
    }
    let n = segments.len();
    let k = (fraction * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, n, k);
    let mut out = segments.to_vec();
    for i in picked.iter() {
        out[i].raw = None;
        out[i].level = 0;
    }
    Ok(out)
}

/// Storage precision of a costmap tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    F64,
    /// Values went through a float32 dump; decoding compares against
    /// float32-rounded encodings.
    F32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WayObjectCostmap {
    pub height: usize,
    pub width: usize,
    pub config: CostmapConfig,
    /// Row-major `height x width x dim`.
    pub tensor: Vec<f64>,
    pub ledger: Vec<SegmentCost>,
    pub precision: Precision,
}

impl WayObjectCostmap {
    pub fn pixel(&self, row: usize, col: usize) -> &[f64] {
        let d = self.config.dim;
        let at = (row * self.width + col) * d;
        &self.tensor[at..at + d]
    }
}

/// Builds the costmap tensor. Overlapping pixels go to the segment with the
/// smaller raw cost (outliers last), ties to the smaller instance id; pixels
/// owned by no segment stay zero.
pub fn assemble(
    segments: &[SegmentCost],
    cfg: &CostmapConfig,
    height: usize,
    width: usize,
) -> Result<WayObjectCostmap> {
    cfg.validate()?;
    for s in segments {
        if s.mask.height() != height || s.mask.width() != width {
            return Err(Error::MaskShape {
                got_h: s.mask.height(),
                got_w: s.mask.width(),
                h: height,
                w: width,
            });
        }
    }
    let owner = owners(segments, height, width);
    let d = cfg.dim;
    let codes: Vec<Vec<f64>> = segments.iter().map(|s| encode(s.level, cfg)).collect();
    let mut tensor = vec![0.0; height * width * d];
    for (px, o) in owner.iter().enumerate() {
        if let Some(k) = o {
            tensor[px * d..(px + 1) * d].copy_from_slice(&codes[*k]);
        }
    }
    Ok(WayObjectCostmap {
        height,
        width,
        config: *cfg,
        tensor,
        ledger: segments.to_vec(),
        precision: Precision::F64,
    })
}

/// Owning segment of every pixel under the overlap rule of [`assemble`].
fn owners(segments: &[SegmentCost], height: usize, width: usize) -> Vec<Option<usize>> {
    let mut owner: Vec<Option<usize>> = vec![None; height * width];
    for (k, s) in segments.iter().enumerate() {
        for (r, c) in s.mask.pixels() {
            let slot = &mut owner[r * width + c];
            let better = match *slot {
                None => true,
                Some(o) => {
                    let (a, b) = (s.owner_key(), segments[o].owner_key());
                    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
                }
            };
            if better {
                *slot = Some(k);
            }
        }
    }
    owner
}

/// The (mask, level) groups a costmap's ledger predicts: the pixels each
/// segment owns, merged by level, ascending by level. A faithful tensor
/// decodes to exactly this.
pub fn ledger_groups(map: &WayObjectCostmap) -> Vec<(Mask, u32)> {
    let owner = owners(&map.ledger, map.height, map.width);
    let mut groups: BTreeMap<u32, Mask> = BTreeMap::new();
    for (px, o) in owner.iter().enumerate() {
        if let Some(k) = o {
            groups
                .entry(map.ledger[*k].level)
                .or_insert_with(|| Mask::new(map.height, map.width))
                .set_index(px, true);
        }
    }
    groups.into_iter().map(|(l, m)| (m, l)).collect()
}

/// Recovers (mask, level) groups from a costmap tensor. Pixels with identical
/// vectors form one group; the zero vector is background.
pub fn decode_segments(map: &WayObjectCostmap) -> Result<Vec<(Mask, u32)>> {
    let d = map.config.dim;
    let table: Vec<Vec<f64>> = (0..=map.config.levels)
        .map(|l| {
            let e = encode(l, &map.config);
            match map.precision {
                Precision::F64 => e,
                Precision::F32 => e.into_iter().map(|x| x as f32 as f64).collect(),
            }
        })
        .collect();

    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut groups: Vec<(Mask, usize)> = Vec::new();
    for px in 0..map.height * map.width {
        let v = &map.tensor[px * d..(px + 1) * d];
        if v.iter().all(|&x| x == 0.0) {
            continue;
        }
        let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        let g = *index.entry(key).or_insert_with(|| {
            groups.push((Mask::new(map.height, map.width), px));
            groups.len() - 1
        });
        groups[g].0.set_index(px, true);
    }

    groups
        .into_iter()
        .map(|(mask, first)| {
            let v = &map.tensor[first * d..(first + 1) * d];
            let best = table
                .iter()
                .enumerate()
                .map(|(l, e)| {
                    let err = e.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    (err, l)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((err, l)) if err <= DECODE_TOLERANCE => Ok((mask, l as u32)),
                _ => Err(Error::UndecodablePixel {
                    row: first / map.width,
                    col: first % map.width,
                }),
            }
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    version: u32,
    height: usize,
    width: usize,
    config: CostmapConfig,
    ledger: Vec<LedgerRecord>,
}

#[derive(Serialize, Deserialize)]
struct LedgerRecord {
    instance_id: InstanceId,
    raw: Option<f64>,
    level: u32,
    mask: Mask,
}

/// Binary dump: little-endian `H, W, D, L` as u32 and `Z` as f32, then the
/// row-major float32 tensor.
pub fn write_dump(map: &WayObjectCostmap, mut out: impl Write) -> Result<()> {
    let c = &map.config;
    for v in [map.height as u32, map.width as u32, c.dim as u32, c.levels] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&(c.base as f32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(map.tensor.len() * 4);
    for &x in &map.tensor {
        buf.extend_from_slice(&(x as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_dump(mut input: impl Read) -> Result<WayObjectCostmap> {
    let mut head = [0u8; 20];
    input.read_exact(&mut head)?;
    let u = |i: usize| u32::from_le_bytes(head[i * 4..i * 4 + 4].try_into().expect("4 bytes"));
    let (height, width, dim, levels) = (u(0) as usize, u(1) as usize, u(2) as usize, u(3));
    let base = f32::from_le_bytes(head[16..20].try_into().expect("4 bytes")) as f64;
    let config = CostmapConfig { dim, base, levels };
    config.validate()?;
    let n = height * width * dim;
    let mut body = vec![0u8; n * 4];
    input.read_exact(&mut body)?;
    let tensor = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
        .collect();
    Ok(WayObjectCostmap {
        height,
        width,
        config,
        tensor,
        ledger: Vec::new(),
        precision: Precision::F32,
    })
}

pub fn ledger_json(map: &WayObjectCostmap) -> Result<String> {
    let side = Sidecar {
        version: COSTMAP_FORMAT_VERSION,
        height: map.height,
        width: map.width,
        config: map.config,
        ledger: map
            .ledger
            .iter()
            .map(|s| LedgerRecord {
                instance_id: s.instance_id,
                raw: s.raw,
                level: s.level,
                mask: s.mask.clone(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&side)?)
}

pub fn ledger_from_json(s: &str) -> Result<Vec<SegmentCost>> {
    let side: Sidecar = serde_json::from_str(s)?;
    if side.version != COSTMAP_FORMAT_VERSION {
        return Err(Error::Version(side.version));
    }
    Ok(side
        .ledger
        .into_iter()
        .map(|r| SegmentCost::new(r.instance_id, r.mask, r.raw, r.level))
        .collect())
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn save_dump(map: &WayObjectCostmap, stem: impl AsRef<Path>) -> Result<()> {
    let stem = stem.as_ref();
    let bin = std::fs::File::create(stem.with_extension("bin"))?;
    write_dump(map, std::io::BufWriter::new(bin))?;
    std::fs::write(stem.with_extension("json"), ledger_json(map)?)?;
    Ok(())
}

/// Reads a binary dump and, when present, its JSON sidecar.
pub fn load_dump(bin: impl AsRef<Path>) -> Result<WayObjectCostmap> {
    let bin = bin.as_ref();
    let mut map = read_dump(std::io::BufReader::new(std::fs::File::open(bin)?))?;
    let side = bin.with_extension("json");
    if side.exists() {
        map.ledger = ledger_from_json(&std::fs::read_to_string(side)?)?;
    }
    Ok(map)
}

/// Binary PPM (P6) false-color view of the per-pixel levels: black for
/// background, dark red for outliers, blue (far) through yellow (near).
pub fn to_ppm(map: &WayObjectCostmap) -> Result<Vec<u8>> {
    let mut level = vec![None; map.height * map.width];
    for (mask, l) in decode_segments(map)? {
        for (r, c) in mask.pixels() {
            level[r * map.width + c] = Some(l);
        }
    }
    let mut out = format!("P6\n{} {}\n255\n", map.width, map.height).into_bytes();
    let top = map.config.levels.max(1) as f64;
    for l in level {
        let rgb = match l {
            None => [0, 0, 0],
            Some(0) => [110, 0, 0],
            Some(l) => {
                let t = (l as f64 - 1.0) / (top - 1.0).max(1.0);
                [(255.0 * t) as u8, (60.0 + 160.0 * t) as u8, (255.0 * (1.0 - t)) as u8]
            }
        };
        out.extend_from_slice(&rgb);
    }
    Ok(out)
}
