use std::sync::Arc;

use super::Grid;
use crate::linalg::MAX_DIM;
use crate::{Error, Result};

/// Nodal values of a continuous piecewise-linear function on a [`Grid`].
#[derive(Clone)]
pub struct DiscreteField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl std::fmt::Debug for DiscreteField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteField")
            .field("grid", &self.grid)
            .field("len", &self.values.len())
            .finish()
    }
}

impl DiscreteField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_vertices() {
            return Err(Error::config(format!(
                "field has {} values for {} vertices",
                values.len(),
                grid.num_vertices()
            )));
        }
        Ok(DiscreteField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.num_vertices()];
        DiscreteField { grid, values }
    }

    /// Samples `f` at every vertex.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.num_vertices()).map(|v| f(grid.vertex(v))).collect();
        DiscreteField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Constant gradient of the interpolant on `cell`, written into `out`.
    #[inline]
    pub fn cell_gradient_into(&self, cell: usize, out: &mut [f64]) {
        let n = self.grid.dim();
        let verts = self.grid.cell(cell);
        let grads = self.grid.shape_gradients(cell);
        out[..n].iter_mut().for_each(|o| *o = 0.0);
        for (k, &v) in verts.iter().enumerate() {
            let u = self.values[v];
            for i in 0..n {
                out[i] += u * grads[k][i];
            }
        }
    }

    /// Constant gradient of the interpolant on `cell`.
    pub fn cell_gradient(&self, cell: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.dim()];
        self.cell_gradient_into(cell, &mut out);
        out
    }

    /// Interpolated value at barycentric coordinates of `cell`.
    #[inline]
    pub(crate) fn value_in_cell(&self, cell: usize, bary: &[f64; MAX_DIM + 1]) -> f64 {
        self.grid
            .cell(cell)
            .iter()
            .zip(bary)
            .map(|(&v, l)| self.values[v] * l)
            .sum()
    }

    /// Piecewise-linear interpolant at an arbitrary point of the box.
    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        let (c, bary) = self.grid.locate(x)?;
        Ok(self.value_in_cell(c, &bary))
    }

    /// Value at the centroid of `cell`.
    #[inline]
    pub fn centroid_value(&self, cell: usize) -> f64 {
        let verts = self.grid.cell(cell);
        verts.iter().map(|&v| self.values[v]).sum::<f64>() / verts.len() as f64
    }

    /// `λ·u`
    pub fn scaled(&self, lambda: f64) -> Self {
        self.map(|v| lambda * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DiscreteField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Largest absolute nodal difference to another field on the same grid.
    pub fn max_abs_diff(&self, other: &DiscreteField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;

    #[test]
    fn linear_field_gradient_is_exact() {
        for dim in [2, 3] {
            let g = Grid::uniform(&BoxDomain::unit(dim), 5).unwrap();
            let b = [3.0, -1.0, 0.5];
            let u = DiscreteField::from_fn(g.clone(), |x| (0..dim).map(|i| b[i] * x[i]).sum::<f64>() + 2.0);
            for c in 0..g.num_cells() {
                let d = u.cell_gradient(c);
                for i in 0..dim {
                    assert!((d[i] - b[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let g = Grid::uniform(&BoxDomain::unit(2), 4).unwrap();
        let u = DiscreteField::from_fn(g.clone(), |_| 7.0);
        for c in 0..g.num_cells() {
            assert!(u.cell_gradient(c).iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn quadratic_gradient_is_first_order() {
        let g = Grid::uniform(&BoxDomain::unit(2), 64).unwrap();
        let u = DiscreteField::from_fn(g.clone(), |x| x[0] * x[0]);
        let h = 1.0 / 64.0;
        for c in 0..g.num_cells() {
            let d = u.cell_gradient(c);
            let x = g.centroid(c);
            assert!((d[0] - 2.0 * x[0]).abs() <= h + 1e-12);
            assert!(d[1].abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_is_exact_on_vertices() {
        let g = Grid::uniform(&BoxDomain::centered(2, 1.0).unwrap(), 7).unwrap();
        let u = DiscreteField::from_fn(g.clone(), |x| (3.0 * x[0]).sin() * x[1]);
        for v in 0..g.num_vertices() {
            let val = u.value_at(g.vertex(v)).unwrap();
            assert!((val - u.values()[v]).abs() < 1e-14);
        }
    }
}
