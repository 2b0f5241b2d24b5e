//! Grids, bases, curve samples and directions.

mod basis;
mod direction;
mod grid;
mod sample;

pub use basis::{BasisId, BasisKind, BasisSystem, PenaltyNullSpace};
pub use direction::{
    angle_degrees, fix_sign, normalize_l2, normalize_penalized, penalized_norm_sq, Direction,
    NormConvention,
};
pub use grid::Grid;
pub use sample::FunctionalSample;
