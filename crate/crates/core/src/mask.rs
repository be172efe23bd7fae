//! Binary segmentation masks with run-length encoding for map files.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Row-major binary mask of `height` x `width` pixels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![false; height * width],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![true; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Mask::new(height, width);
        for r in 0..height {
            for c in 0..width {
                m.data[r * width + c] = f(r, c);
            }
        }
        m
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn get_index(&self, idx: usize) -> bool {
        self.data[idx]
    }

    pub fn set_index(&mut self, idx: usize, value: bool) {
        self.data[idx] = value;
    }

    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Set pixels as (row, col), row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / w, i % w))
    }

    /// Pixel-space centroid `(col + 0.5, row + 0.5)` averaged over set pixels,
    /// so a mask symmetric about the image center lands exactly on `width / 2`.
    pub fn centroid(&self) -> Option<Point2> {
        let mut n = 0usize;
        let (mut sc, mut sr) = (0.0, 0.0);
        for (r, c) in self.pixels() {
            n += 1;
            sc += c as f64 + 0.5;
            sr += r as f64 + 0.5;
        }
        (n > 0).then(|| Point2::new(sc / n as f64, sr / n as f64))
    }

    pub fn union_with(&mut self, other: &Mask) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a |= b;
        }
    }

    pub fn intersects(&self, other: &Mask) -> bool {
        self.data.iter().zip(&other.data).any(|(&a, &b)| a && b)
    }

    /// Alternating run lengths starting with a (possibly empty) run of unset pixels.
    pub fn to_rle(&self) -> RleMask {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0u32;
        for &b in &self.data {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        RleMask {
            height: self.height,
            width: self.width,
            runs,
        }
    }

    pub fn from_rle(rle: &RleMask) -> Result<Mask> {
        let total = rle.height * rle.width;
        let mut data = Vec::with_capacity(total);
        let mut value = false;
        for &run in &rle.runs {
            data.extend(std::iter::repeat_n(value, run as usize));
            value = !value;
        }
        if data.len() != total {
            return Err(Error::InvalidInput(format!(
                "run lengths sum to {} but mask has {} pixels",
                data.len(),
                total
            )));
        }
        Ok(Mask {
            height: rle.height,
            width: rle.width,
            data,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub height: usize,
    pub width: usize,
    pub runs: Vec<u32>,
}

impl Serialize for Mask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rle().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rle = RleMask::deserialize(d)?;
        Mask::from_rle(&rle).map_err(serde::de::Error::custom)
    }
}
