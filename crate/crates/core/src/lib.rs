//! Construction, classification and verification of Beltrami fields,
//! `curl u = f u`, `div u = 0`, on uniform structured grids.

pub mod expr;
pub mod frame;
pub mod frame_pde;
pub mod bessel;
pub mod cauchy;
pub mod grid;
pub mod obstruction;
pub mod reference;
pub mod report;
pub mod symmetric;
pub mod verify;
pub mod ode;

pub use expr::{parse, Bindings, Expr, ExprError, Var};
pub use grid::{CoordSystem, Grid, GridError, ScalarField, Stencil, VectorField};
