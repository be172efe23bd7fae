use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("pose ({x:.3}, {y:.3}) is outside the world bounds")]
    OutOfBounds { x: f64, y: f64 },
    #[error("point ({x:.3}, {y:.3}) is in collision")]
    InCollision { x: f64, y: f64 },
    #[error("goal is unreachable from start")]
    Disconnected,
    #[error("empty mask")]
    EmptyMask,
    #[error("mask pixel ({row}, {col}) has no finite depth")]
    InfiniteDepth { row: usize, col: usize },
    #[error("nodes {0} and {1} belong to the same frame")]
    SameFrame(usize, usize),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("goal instance {0} does not appear in the map")]
    GoalNotInMap(u32),
    #[error("negative path length {0}")]
    NegativeCost(f64),
    #[error("mask shape {got_h}x{got_w} does not match costmap {h}x{w}")]
    MaskShape {
        got_h: usize,
        got_w: usize,
        h: usize,
        w: usize,
    },
    #[error("pixel ({row}, {col}) carries a vector that is not a valid encoding")]
    UndecodablePixel { row: usize, col: usize },
    #[error("no non-outlier segment to steer toward")]
    NoGuidance,
    #[error("task infeasible: {0}")]
    TaskInfeasible(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
