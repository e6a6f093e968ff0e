//! Grids, unitary transforms, Fourier multipliers and the pairings used by
//! every other module.

mod embedding;
mod field;
mod grid;
mod symbol;

pub use field::{
    apply_symbol, free_evolve, lp_project, pairing, sharp_truncate, symplectic_form, transform, ComplexField, Direction,
    ProjectionKind, Representation,
};
pub use embedding::WindowEmbedding;
pub use grid::{make_grid, Grid};
pub use symbol::{low_pass_profile, smooth_step, theta, MultiplierSymbol};
