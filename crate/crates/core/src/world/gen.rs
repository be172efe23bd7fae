//! Procedural multi-room worlds.
//!
//! Rooms sit on a grid; every pair of grid-adjacent rooms shares a wall with
//! one doorway. Walls are split into panels so that no single wall instance
//! spans a whole room. Furniture is placed against the walls, away from the
//! doorways, leaving the middle of each room open.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ObjectInstance, World, CATEGORY_CEILING, CATEGORY_FLOOR, CATEGORY_WALL};
use crate::error::{Error, Result};
use crate::geometry::{Footprint, Point2, Rect};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldGenParams {
    pub seed: u64,
    pub rooms: usize,
    pub objects_per_room: usize,
    pub room_size_min: f64,
    pub room_size_max: f64,
    pub door_width: f64,
    pub wall_thickness: f64,
    pub wall_height: f64,
    pub panel_length: f64,
    pub resolution: f64,
}

impl Default for WorldGenParams {
    fn default() -> Self {
        Self {
            seed: 0,
            rooms: 3,
            objects_per_room: 4,
            room_size_min: 6.0,
            room_size_max: 7.5,
            door_width: 3.5,
            wall_thickness: 0.15,
            wall_height: 2.5,
            panel_length: 2.0,
            resolution: 0.05,
        }
    }
}

/// Furniture catalog: (category, shape, height). Box sizes are
/// (along the wall, away from the wall).
enum Shape {
    Box(f64, f64),
    Disc(f64),
}

const CATALOG: &[(&str, Shape, f64)] = &[
    ("chair", Shape::Box(0.5, 0.5), 0.9),
    ("table", Shape::Box(1.0, 0.7), 0.75),
    ("sofa", Shape::Box(1.8, 0.8), 0.85),
    ("cabinet", Shape::Box(0.9, 0.45), 1.6),
    ("plant", Shape::Disc(0.25), 1.2),
    ("lamp", Shape::Disc(0.2), 1.6),
    ("bin", Shape::Disc(0.2), 0.5),
    ("tv_stand", Shape::Box(1.2, 0.4), 0.6),
    ("bookshelf", Shape::Box(1.0, 0.35), 1.9),
];

struct Door {
    center: Point2,
}

struct Builder {
    next_id: u32,
    obstacles: Vec<ObjectInstance>,
}

impl Builder {
    fn push(&mut self, category: &str, footprint: Footprint, z_min: f64, z_max: f64) {
        self.obstacles.push(ObjectInstance {
            id: self.next_id,
            category: category.to_string(),
            footprint,
            z_min,
            z_max,
        });
        self.next_id += 1;
    }

    /// Adds a straight wall along one axis, split into panels of at most
    /// `panel` meters. `fixed` is the wall's extent across its axis.
    fn wall(&mut self, horizontal: bool, from: f64, to: f64, fixed: (f64, f64), panel: f64, h: f64) {
        let len = to - from;
        if len <= 1e-6 {
            return;
        }
        let n = (len / panel).ceil().max(1.0) as usize;
        let step = len / n as f64;
        for k in 0..n {
            let a = from + k as f64 * step;
            let b = if k + 1 == n { to } else { a + step };
            let fp = if horizontal {
                Footprint::rect(Point2::new(a, fixed.0), Point2::new(b, fixed.1))
            } else {
                Footprint::rect(Point2::new(fixed.0, a), Point2::new(fixed.1, b))
            };
            self.push(CATEGORY_WALL, fp, 0.0, h);
        }
    }
}

/// Deterministic world for a given parameter set.
pub fn generate_world(params: &WorldGenParams) -> Result<World> {
    if params.rooms == 0 {
        return Err(Error::InvalidInput("at least one room is required".into()));
    }
    let p = params;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let cols = if p.rooms <= 3 {
        p.rooms
    } else {
        (p.rooms as f64).sqrt().ceil() as usize
    };
    let rows = p.rooms.div_ceil(cols);
    let exists = |r: usize, c: usize| r * cols + c < p.rooms;

    let col_w: Vec<f64> = (0..cols)
        .map(|_| rng.random_range(p.room_size_min..=p.room_size_max))
        .collect();
    let row_h: Vec<f64> = (0..rows)
        .map(|_| rng.random_range(p.room_size_min..=p.room_size_max))
        .collect();
    let xs: Vec<f64> = std::iter::once(0.0)
        .chain(col_w.iter().scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        }))
        .collect();
    let ys: Vec<f64> = std::iter::once(0.0)
        .chain(row_h.iter().scan(0.0, |acc, h| {
            *acc += h;
            Some(*acc)
        }))
        .collect();
    let bounds = Rect::new(Point2::new(0.0, 0.0), Point2::new(xs[cols], ys[rows]));
    let t = p.wall_thickness;
    let half = t / 2.0;

    let mut b = Builder {
        next_id: 1,
        obstacles: Vec::new(),
    };
    let mut doors: Vec<Door> = Vec::new();

    // The wall occupying a grid line segment. Outer walls are kept inside the
    // bounds, interior walls straddle the line.
    let across = |line: f64, lo_edge: bool, hi_edge: bool| -> (f64, f64) {
        if lo_edge {
            (line, line + t)
        } else if hi_edge {
            (line - t, line)
        } else {
            (line - half, line + half)
        }
    };

    // vertical lines x = xs[c], between rows r
    for c in 0..=cols {
        for r in 0..rows {
            let left = c > 0 && exists(r, c - 1);
            let right = c < cols && exists(r, c);
            if !left && !right {
                continue;
            }
            let fixed = across(xs[c], c == 0, c == cols);
            let (y0, y1) = (ys[r], ys[r + 1]);
            if left && right {
                let span = y1 - y0;
                let slack = (span / 2.0 - p.door_width / 2.0 - 0.6).max(0.0);
                let mid = y0 + span / 2.0 + rng.random_range(-slack..=slack);
                b.wall(
                    false,
                    y0,
                    mid - p.door_width / 2.0,
                    fixed,
                    p.panel_length,
                    p.wall_height,
                );
                b.wall(
                    false,
                    mid + p.door_width / 2.0,
                    y1,
                    fixed,
                    p.panel_length,
                    p.wall_height,
                );
                doors.push(Door {
                    center: Point2::new(xs[c], mid),
                });
            } else {
                b.wall(false, y0, y1, fixed, p.panel_length, p.wall_height);
            }
        }
    }
    // horizontal lines y = ys[r], between columns c
    for r in 0..=rows {
        for c in 0..cols {
            let below = r > 0 && exists(r - 1, c);
            let above = r < rows && exists(r, c);
            if !below && !above {
                continue;
            }
            let fixed = across(ys[r], r == 0, r == rows);
            let (x0, x1) = (xs[c], xs[c + 1]);
            if below && above {
                let span = x1 - x0;
                let slack = (span / 2.0 - p.door_width / 2.0 - 0.6).max(0.0);
                let mid = x0 + span / 2.0 + rng.random_range(-slack..=slack);
                b.wall(true, x0, mid - p.door_width / 2.0, fixed, p.panel_length, p.wall_height);
                b.wall(true, mid + p.door_width / 2.0, x1, fixed, p.panel_length, p.wall_height);
                doors.push(Door {
                    center: Point2::new(mid, ys[r]),
                });
            } else {
                b.wall(true, x0, x1, fixed, p.panel_length, p.wall_height);
            }
        }
    }

    let cells: Vec<Rect> = (0..p.rooms)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            Rect::new(Point2::new(xs[c], ys[r]), Point2::new(xs[c + 1], ys[r + 1]))
        })
        .collect();

    for cell in &cells {
        b.push(CATEGORY_FLOOR, Footprint::rect(cell.min, cell.max), -0.05, 0.0);
    }
    for cell in &cells {
        b.push(
            CATEGORY_CEILING,
            Footprint::rect(cell.min, cell.max),
            p.wall_height,
            p.wall_height + 0.05,
        );
    }

    let keep_out = p.door_width / 2.0 + 1.0;
    for cell in &cells {
        let inner = cell.expand(-(half + 1e-3));
        let mut placed: Vec<Rect> = Vec::new();
        let mut attempts = 0;
        while placed.len() < p.objects_per_room && attempts < 200 {
            attempts += 1;
            let (cat, shape, height) = &CATALOG[rng.random_range(0..CATALOG.len())];
            let side = rng.random_range(0..4);
            let gap = rng.random_range(0.05..0.3);
            let (along, depth) = match shape {
                Shape::Box(a, d) => (*a, *d),
                Shape::Disc(r) => (2.0 * r, 2.0 * r),
            };
            let horizontal = side < 2;
            let run = if horizontal { inner.width() } else { inner.height() };
            if run < along + 0.2 {
                continue;
            }
            let s = rng.random_range(0.1..(run - along - 0.1));
            let rect = match side {
                0 => Rect::new(
                    Point2::new(inner.min.x + s, inner.min.y + gap),
                    Point2::new(inner.min.x + s + along, inner.min.y + gap + depth),
                ),
                1 => Rect::new(
                    Point2::new(inner.min.x + s, inner.max.y - gap - depth),
                    Point2::new(inner.min.x + s + along, inner.max.y - gap),
                ),
                2 => Rect::new(
                    Point2::new(inner.min.x + gap, inner.min.y + s),
                    Point2::new(inner.min.x + gap + depth, inner.min.y + s + along),
                ),
                _ => Rect::new(
                    Point2::new(inner.max.x - gap - depth, inner.min.y + s),
                    Point2::new(inner.max.x - gap, inner.min.y + s + along),
                ),
            };
            let fp = match shape {
                Shape::Box(..) => Footprint::rect(rect.min, rect.max),
                Shape::Disc(r) => Footprint::disc(
                    Point2::new((rect.min.x + rect.max.x) / 2.0, (rect.min.y + rect.max.y) / 2.0),
                    *r,
                ),
            };
            if doors.iter().any(|d| fp.distance(d.center) < keep_out) {
                continue;
            }
            if placed.iter().any(|o| o.expand(0.3).intersects(&rect)) {
                continue;
            }
            placed.push(rect);
            b.push(cat, fp, 0.0, *height);
        }
    }

    World::new(bounds, p.resolution, b.obstacles)
}
