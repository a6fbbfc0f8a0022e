//! Anisotropic γ-homogeneous elliptic operators: norm calculus with convex
//! duality, a convex-energy Dirichlet solver on simplicial grids, and
//! numerical checks of the associated regularity estimates (Caccioppoli,
//! local boundedness, weak Harnack, Harnack, oscillation decay).

pub mod error;
pub mod expr;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod maps;
pub mod norms;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::BoxDomain;
pub use grid::{build_grid, DiscreteField, Grid};
pub use linalg::SmallMat;
pub use maps::{ScalarMap, VectorMap};
pub use norms::{DualMode, DualNorm, NormFamily, NormModel};
pub use solver::{classify, solve, Classification, Problem, SolveReport, SolverOptions};
