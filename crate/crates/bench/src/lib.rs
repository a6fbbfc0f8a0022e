//! Fixtures shared by the criterion benchmarks.

use std::sync::Arc;

use aniso_core::{BoxDomain, DiscreteField, Grid, NormModel, Problem};

/// Square `[-1, 1]²` grid with `cells` cells per axis.
pub fn square_grid(cells: usize) -> Arc<Grid> {
    Grid::uniform(&BoxDomain::centered(2, 1.0).expect("valid box"), cells).expect("valid grid")
}

/// A smooth positive Dirichlet problem on [`square_grid`].
pub fn smooth_problem(cells: usize, gamma: f64, norm: NormModel) -> Problem {
    Problem::builder(square_grid(cells), gamma, norm)
        .boundary(Arc::new(|x: &[f64]| 2.0 + (2.0 * x[0]).sin() * x[1]))
        .build()
        .expect("valid problem")
}

/// A non-trivial field to evaluate energies at.
pub fn wavy_field(grid: &Arc<Grid>) -> DiscreteField {
    DiscreteField::from_fn(grid.clone(), |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + x[0] * x[1])
}
