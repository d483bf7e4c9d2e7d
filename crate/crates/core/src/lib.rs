//! Convex function intervals on a uniform grid.
//!
//! A convex function interval (CFI) is the set of convex functions squeezed
//! between two convex boundaries with subgradients confined to a slope
//! interval. This crate represents CFIs on a grid, characterizes and
//! falsifies their extreme points, maximizes linear functionals over them
//! (by concavification for affinely bounded intervals and by a dense simplex
//! oracle in general), certifies optimality through convex-order conditions,
//! and wires the machinery into screening, delegation, contest and
//! persuasion pipelines.
//!
//! Grid functions are identified with their piecewise-linear interpolants and
//! measures are carried as node atoms plus a piecewise-constant density. Under
//! that convention `∫ u dμ` is computed exactly by node weights, so the grid
//! linear program is the exact problem being certified.

pub mod apps;
pub mod cfi;
pub mod error;
pub mod grid_fn;
pub mod io;
pub mod lp;
pub mod measure;
pub mod solve;
pub mod tol;

pub use cfi::{Cfi, ExtremeStructure, SaturationKind, SaturationLabel};
pub use error::{Error, Result};
pub use grid_fn::{Grid, GridFunction, Side, SlopeInterval};
pub use measure::{SignedMeasure, Span};
pub use tol::Tolerances;
