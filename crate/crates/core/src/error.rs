use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate segment: both endpoints are ({x}, {y})")]
    DegenerateSegment { x: f64, y: f64 },

    #[error("non-finite coordinate")]
    NonFinite,

    #[error("point ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("junctions {first} and {second} fall into the same grid cell (row {row}, col {col})")]
    CellCollision {
        row: usize,
        col: usize,
        first: usize,
        second: usize,
    },

    #[error("grid configuration mismatch")]
    ConfigMismatch,

    #[error("shape mismatch: expected {expected_w}x{expected_h}, found {found_w}x{found_h}")]
    ShapeMismatch {
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
