//! Structured simplicial meshes of a box.
//!
//! Each axis-aligned cube of the tensor grid is split into `n!` Kuhn
//! simplices, one per ordering of the axes (in 2D: the two triangles on either
//! side of the `(0,0)–(1,1)` diagonal). The split is the same in every cube,
//! so the mesh is conforming.

mod ball;
mod export;
mod field;

use std::fmt;
use std::sync::{Arc, OnceLock};

pub use ball::{ball_integrate, ball_stats, oscillation};
pub use export::{read_field_csv, write_field_csv, FieldCsv, GridMeta};
pub use field::DiscreteField;

use crate::geometry::BoxDomain;
use crate::linalg::MAX_DIM;
use crate::{Error, Result};

/// Sub-samples per axis used to clip cells against balls; each cell gets
/// `SUBDIVISION^n` equal-weight points (16 in 2D).
const SUBDIVISION: usize = 4;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Sample {
    /// Offset inside the cube in units of the spacing, per axis.
    pub local: [f64; MAX_DIM],
    pub bary: [f64; MAX_DIM + 1],
}

pub struct Grid {
    domain: BoxDomain,
    dim: usize,
    resolution: Vec<usize>,
    spacing: Vec<f64>,
    vertices: Vec<[f64; MAX_DIM]>,
    cells: Vec<[usize; MAX_DIM + 1]>,
    cell_perm: Vec<u8>,
    cell_cube: Vec<usize>,
    boundary: Vec<bool>,
    centroids: Vec<[f64; MAX_DIM]>,
    cell_volume: f64,
    perms: Vec<[usize; MAX_DIM]>,
    /// Gradients of the local barycentric coordinates, per permutation.
    shape_grads: Vec<[[f64; MAX_DIM]; MAX_DIM + 1]>,
    samples: Vec<Vec<Sample>>,
    pub(crate) laplacian: OnceLock<Arc<crate::solver::LaplacianFactor>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("domain", &self.domain)
            .field("resolution", &self.resolution)
            .field("vertices", &self.vertices.len())
            .field("cells", &self.cells.len())
            .finish()
    }
}

fn permutations(n: usize) -> Vec<[usize; MAX_DIM]> {
    match n {
        2 => vec![[0, 1, 0], [1, 0, 0]],
        3 => vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]],
        _ => unreachable!("dimension checked by BoxDomain"),
    }
}

/// Barycentric coordinates of local cube coordinates `y` in the Kuhn simplex
/// for `perm`: `λ₀ = 1 − y_{π0}`, `λ_k = y_{π(k-1)} − y_{πk}`, `λₙ = y_{π(n-1)}`.
fn kuhn_barycentric(n: usize, perm: &[usize; MAX_DIM], y: &[f64]) -> [f64; MAX_DIM + 1] {
    let mut l = [0.0; MAX_DIM + 1];
    l[0] = 1.0 - y[perm[0]];
    for k in 1..n {
        l[k] = y[perm[k - 1]] - y[perm[k]];
    }
    l[n] = y[perm[n - 1]];
    l
}

fn in_kuhn_simplex(n: usize, perm: &[usize; MAX_DIM], y: &[f64]) -> bool {
    (1..n).all(|k| y[perm[k - 1]] >= y[perm[k]])
}

/// Equal-weight sample points of a Kuhn simplex: centroids of its `kⁿ`
/// sub-simplices in the `k`-fold refined Kuhn triangulation.
fn kuhn_samples(n: usize, perm: &[usize; MAX_DIM], perms: &[[usize; MAX_DIM]]) -> Vec<Sample> {
    let k = SUBDIVISION;
    let mut out = Vec::new();
    for m in 0..k.pow(n as u32) {
        let mut idx = [0usize; MAX_DIM];
        let mut r = m;
        for i in idx.iter_mut().take(n) {
            *i = r % k;
            r /= k;
        }
        for sigma in perms {
            // centroid of the σ simplex in the unit cube: axis σ(j) gets (n - j)/(n + 1)
            let mut local = [0.0; MAX_DIM];
            for j in 0..n {
                local[sigma[j]] = (idx[sigma[j]] as f64 + (n - j) as f64 / (n + 1) as f64) / k as f64;
            }
            if in_kuhn_simplex(n, perm, &local) {
                out.push(Sample {
                    local,
                    bary: kuhn_barycentric(n, perm, &local),
                });
            }
        }
    }
    debug_assert_eq!(out.len(), k.pow(n as u32));
    out
}

/// Builds the conforming simplicial mesh of `domain` with `resolution[i]`
/// cells along axis `i`.
pub fn build_grid(domain: &BoxDomain, resolution: &[usize]) -> Result<Grid> {
    let n = domain.dim();
    if resolution.len() != n {
        return Err(Error::config(format!(
            "resolution has {} entries for a {n}-dimensional box",
            resolution.len()
        )));
    }
    if resolution.contains(&0) {
        return Err(Error::config("resolution must be at least 1 per axis"));
    }
    let spacing: Vec<f64> = (0..n)
        .map(|i| (domain.hi()[i] - domain.lo()[i]) / resolution[i] as f64)
        .collect();
    let vshape: Vec<usize> = resolution.iter().map(|r| r + 1).collect();
    let nverts: usize = vshape.iter().product();
    let mut vertices = Vec::with_capacity(nverts);
    let mut boundary = Vec::with_capacity(nverts);
    for v in 0..nverts {
        let mut p = [0.0; MAX_DIM];
        let mut on_boundary = false;
        let mut r = v;
        for i in 0..n {
            let j = r % vshape[i];
            r /= vshape[i];
            p[i] = if j == resolution[i] {
                domain.hi()[i]
            } else {
                domain.lo()[i] + j as f64 * spacing[i]
            };
            on_boundary |= j == 0 || j == resolution[i];
        }
        vertices.push(p);
        boundary.push(on_boundary);
    }

    let perms = permutations(n);
    let ncubes: usize = resolution.iter().product();
    let mut cells = Vec::with_capacity(ncubes * perms.len());
    let mut cell_perm = Vec::with_capacity(ncubes * perms.len());
    let mut cell_cube = Vec::with_capacity(ncubes * perms.len());
    let mut centroids = Vec::with_capacity(ncubes * perms.len());
    let strides: Vec<usize> = (0..n).map(|i| vshape[..i].iter().product()).collect();
    for c in 0..ncubes {
        let mut origin = 0;
        let mut r = c;
        for i in 0..n {
            origin += (r % resolution[i]) * strides[i];
            r /= resolution[i];
        }
        for (pi, perm) in perms.iter().enumerate() {
            let mut cell = [0usize; MAX_DIM + 1];
            cell[0] = origin;
            for k in 1..=n {
                cell[k] = cell[k - 1] + strides[perm[k - 1]];
            }
            let mut centroid = [0.0; MAX_DIM];
            for &v in cell.iter().take(n + 1) {
                for i in 0..n {
                    centroid[i] += vertices[v][i] / (n + 1) as f64;
                }
            }
            cells.push(cell);
            cell_perm.push(pi as u8);
            cell_cube.push(c);
            centroids.push(centroid);
        }
    }

    let factorial: usize = (1..=n).product();
    let cell_volume = spacing.iter().product::<f64>() / factorial as f64;
    let shape_grads = perms
        .iter()
        .map(|perm| {
            let mut g = [[0.0; MAX_DIM]; MAX_DIM + 1];
            g[0][perm[0]] = -1.0 / spacing[perm[0]];
            for k in 1..n {
                g[k][perm[k - 1]] = 1.0 / spacing[perm[k - 1]];
                g[k][perm[k]] = -1.0 / spacing[perm[k]];
            }
            g[n][perm[n - 1]] = 1.0 / spacing[perm[n - 1]];
            g
        })
        .collect();
    let samples = perms.iter().map(|p| kuhn_samples(n, p, &perms)).collect();

    Ok(Grid {
        domain: domain.clone(),
        dim: n,
        resolution: resolution.to_vec(),
        spacing,
        vertices,
        cells,
        cell_perm,
        cell_cube,
        boundary,
        centroids,
        cell_volume,
        perms,
        shape_grads,
        samples,
        laplacian: OnceLock::new(),
    })
}

impl Grid {
    /// Same number of cells along every axis.
    pub fn uniform(domain: &BoxDomain, cells_per_axis: usize) -> Result<Arc<Grid>> {
        build_grid(domain, &vec![cells_per_axis; domain.dim()]).map(Arc::new)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Largest mesh spacing.
    pub fn h(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.vertices[v][..self.dim]
    }

    /// Vertex indices of a cell (`n + 1` of them).
    #[inline]
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c][..self.dim + 1]
    }

    #[inline]
    pub fn cell_volume(&self, _c: usize) -> f64 {
        self.cell_volume
    }

    #[inline]
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c][..self.dim]
    }

    /// Gradients of the cell's hat functions, in the order of [`Grid::cell`].
    #[inline]
    pub fn shape_gradients(&self, c: usize) -> &[[f64; MAX_DIM]] {
        &self.shape_grads[self.cell_perm[c] as usize][..self.dim + 1]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub(crate) fn cell_samples(&self, c: usize) -> &[Sample] {
        &self.samples[self.cell_perm[c] as usize]
    }

    /// Physical position of a sample point of cell `c`.
    pub(crate) fn sample_point(&self, c: usize, s: &Sample) -> [f64; MAX_DIM] {
        let origin = self.vertex(self.cells[c][0]);
        let mut p = [0.0; MAX_DIM];
        for i in 0..self.dim {
            p[i] = origin[i] + s.local[i] * self.spacing[i];
        }
        p
    }

    /// Cells whose cube overlaps the axis-aligned box `[lo, hi]`, in
    /// ascending index order.
    pub(crate) fn cells_in_bbox(&self, lo: &[f64], hi: &[f64]) -> Vec<usize> {
        let n = self.dim;
        let mut range = [(0usize, 0usize); MAX_DIM];
        for i in 0..n {
            let a = ((lo[i] - self.domain.lo()[i]) / self.spacing[i]).floor() as i64;
            let b = ((hi[i] - self.domain.lo()[i]) / self.spacing[i]).floor() as i64;
            let max = self.resolution[i] as i64 - 1;
            range[i] = (a.clamp(0, max) as usize, b.clamp(0, max) as usize);
        }
        let per = self.perms.len();
        let mut out = Vec::new();
        let mut idx = [0usize; MAX_DIM];
        for i in 0..n {
            idx[i] = range[i].0;
        }
        // iterate with the last axis outermost so cube indices ascend
        loop {
            let mut cube = 0;
            let mut stride = 1;
            for i in 0..n {
                cube += idx[i] * stride;
                stride *= self.resolution[i];
            }
            out.extend(cube * per..(cube + 1) * per);
            let mut i = 0;
            loop {
                if i == n {
                    return out;
                }
                if idx[i] < range[i].1 {
                    idx[i] += 1;
                    break;
                }
                idx[i] = range[i].0;
                i += 1;
            }
        }
    }

    /// The cell containing `x` and the barycentric coordinates of `x` in it.
    pub fn locate(&self, x: &[f64]) -> Result<(usize, [f64; MAX_DIM + 1])> {
        let n = self.dim;
        if x.len() != n || !self.domain.contains_ball(x, 0.0, 0.0) {
            return Err(Error::domain(format!("point {x:?} is outside the grid box")));
        }
        let mut cube = 0;
        let mut stride = 1;
        let mut y = [0.0; MAX_DIM];
        for i in 0..n {
            let t = (x[i] - self.domain.lo()[i]) / self.spacing[i];
            let j = (t.floor().max(0.0) as usize).min(self.resolution[i] - 1);
            y[i] = (t - j as f64).clamp(0.0, 1.0);
            cube += j * stride;
            stride *= self.resolution[i];
        }
        for (pi, perm) in self.perms.iter().enumerate() {
            if in_kuhn_simplex(n, perm, &y) {
                let c = cube * self.perms.len() + pi;
                debug_assert_eq!(self.cell_cube[c], cube);
                return Ok((c, kuhn_barycentric(n, perm, &y)));
            }
        }
        unreachable!("the Kuhn simplices cover the cube")
    }

    /// Centroid-rule integral `Σ_cells vol · g(cell)` in cell order.
    pub fn integrate_cells(&self, mut g: impl FnMut(usize) -> f64) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_volume(c) * g(c)).sum()
    }
}
