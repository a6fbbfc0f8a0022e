//! Dirichlet problems for the weak equation
//! `∫⟨ρ(x,Du)^{γ-1} Dρ(x,·)(Du), Dφ⟩ = ∫⟨F, Dφ⟩ + fφ`, solved by minimizing
//! the convex energy
//!
//! `J(u) = ∫ (1/γ) ρ(x,Du)^γ − F·Du − f u`
//!
//! over continuous piecewise-linear fields with prescribed values on the fixed
//! nodes. The `1/γ` normalization makes the Euler–Lagrange equation of `J`
//! exactly the weak equation above, so the gradient of the discrete energy at
//! a free node is the weak residual tested against that node's hat function.

mod assemble;
mod descent;
mod precond;

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use assemble::{energy, energy_gradient, residual_pairing};
pub use descent::{solve, solve_from};
pub use precond::LaplacianFactor;

use crate::grid::{DiscreteField, Grid};
use crate::linalg::MAX_DIM;
use crate::maps::{ScalarMap, VectorMap};
use crate::norms::{conjugate, NormModel};
use crate::{Error, Result};

/// A Dirichlet problem on a grid.
#[derive(Clone)]
pub struct Problem {
    grid: Arc<Grid>,
    gamma: f64,
    norm: NormModel,
    q: f64,
    boundary: ScalarMap,
    source_field: Option<VectorMap>,
    source: Option<ScalarMap>,
    hole: Option<(Vec<f64>, f64)>,
    fixed: Arc<Vec<bool>>,
    free: Arc<Vec<usize>>,
    /// `F` and `f` sampled at cell centroids.
    field_at_centroids: Arc<Vec<[f64; MAX_DIM]>>,
    source_at_centroids: Arc<Vec<f64>>,
    /// `‖Dφ_v‖_{L^{γ'}}` per vertex.
    hat_scale: Arc<Vec<f64>>,
    factor: Arc<OnceLock<Arc<LaplacianFactor>>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("grid", &self.grid)
            .field("gamma", &self.gamma)
            .field("norm", &self.norm)
            .field("q", &self.q)
            .field("has_source_field", &self.source_field.is_some())
            .field("has_source", &self.source.is_some())
            .field("hole", &self.hole)
            .finish()
    }
}

pub struct ProblemBuilder {
    grid: Arc<Grid>,
    gamma: f64,
    norm: NormModel,
    q: Option<f64>,
    boundary: Option<ScalarMap>,
    source_field: Option<VectorMap>,
    source: Option<ScalarMap>,
    hole: Option<(Vec<f64>, f64)>,
}

impl ProblemBuilder {
    /// Prescribed values on the fixed nodes.
    pub fn boundary(mut self, g: ScalarMap) -> Self {
        self.boundary = Some(g);
        self
    }

    /// The vector field `F`.
    pub fn source_field(mut self, field: VectorMap) -> Self {
        self.source_field = Some(field);
        self
    }

    /// The scalar source `f`.
    pub fn source(mut self, f: ScalarMap) -> Self {
        self.source = Some(f);
        self
    }

    /// Integrability exponent of the data; defaults to `2n/(γ−1)` (δ = 1/2).
    pub fn q(mut self, q: f64) -> Self {
        self.q = Some(q);
        self
    }

    /// Additionally fixes the nodes in the closed ball `B_radius(center)`,
    /// e.g. to keep a singular point out of the computational domain.
    pub fn hole(mut self, center: &[f64], radius: f64) -> Self {
        self.hole = Some((center.to_vec(), radius));
        self
    }

    pub fn build(self) -> Result<Problem> {
        let grid = self.grid;
        let n = grid.dim();
        if self.norm.dim() != n {
            return Err(Error::config(format!(
                "norm is {}-dimensional but the grid is {n}-dimensional",
                self.norm.dim()
            )));
        }
        crate::norms::check_gamma(self.gamma)
            .map_err(|_| Error::config(format!("gamma must be finite and > 1, got {}", self.gamma)))?;
        let min_q = n as f64 / (self.gamma - 1.0);
        let q = self.q.unwrap_or(2.0 * min_q);
        if q.is_nan() || q <= min_q {
            return Err(Error::config(format!(
                "q must satisfy q > n/(gamma-1) = {min_q}, got {q}"
            )));
        }
        let boundary = self.boundary.unwrap_or_else(|| crate::maps::constant(0.0));

        let mut fixed = grid.boundary_mask().to_vec();
        if let Some((c, r)) = &self.hole {
            if c.len() != n || !(*r > 0.0) {
                return Err(Error::config(
                    "hole needs an n-dimensional center and a positive radius",
                ));
            }
            for (v, f) in fixed.iter_mut().enumerate() {
                let d2: f64 = grid.vertex(v).iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 <= r * r {
                    *f = true;
                }
            }
        }
        let free: Vec<usize> = (0..grid.num_vertices()).filter(|v| !fixed[*v]).collect();
        if free.is_empty() {
            return Err(Error::config("the grid has no free nodes; increase the resolution"));
        }
        for v in 0..grid.num_vertices() {
            if fixed[v] && !boundary(grid.vertex(v)).is_finite() {
                return Err(Error::domain(format!(
                    "boundary data is not finite at {:?}",
                    grid.vertex(v)
                )));
            }
        }

        let field_at_centroids = match &self.source_field {
            Some(fmap) => (0..grid.num_cells())
                .map(|c| {
                    let mut out = [0.0; MAX_DIM];
                    fmap(grid.centroid(c), &mut out[..n]);
                    out
                })
                .collect(),
            None => Vec::new(),
        };
        let source_at_centroids = match &self.source {
            Some(f) => (0..grid.num_cells()).map(|c| f(grid.centroid(c))).collect(),
            None => Vec::new(),
        };

        let gc = conjugate(self.gamma);
        let mut acc = vec![0.0; grid.num_vertices()];
        for c in 0..grid.num_cells() {
            let vol = grid.cell_volume(c);
            for (k, &v) in grid.cell(c).iter().enumerate() {
                let g = &grid.shape_gradients(c)[k][..n];
                acc[v] += vol * crate::linalg::norm2(g).powf(gc);
            }
        }
        let hat_scale = acc.into_iter().map(|a| a.powf(1.0 / gc)).collect();

        Ok(Problem {
            grid,
            gamma: self.gamma,
            norm: self.norm,
            q,
            boundary,
            source_field: self.source_field,
            source: self.source,
            hole: self.hole,
            fixed: Arc::new(fixed),
            free: Arc::new(free),
            field_at_centroids: Arc::new(field_at_centroids),
            source_at_centroids: Arc::new(source_at_centroids),
            hat_scale: Arc::new(hat_scale),
            factor: Arc::new(OnceLock::new()),
        })
    }
}

impl Problem {
    pub fn builder(grid: Arc<Grid>, gamma: f64, norm: NormModel) -> ProblemBuilder {
        ProblemBuilder {
            grid,
            gamma,
            norm,
            q: None,
            boundary: None,
            source_field: None,
            source: None,
            hole: None,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `γ' = γ/(γ−1)`
    pub fn gamma_conjugate(&self) -> f64 {
        conjugate(self.gamma)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `δ = 1 − n/(q(γ−1))`
    pub fn delta(&self) -> f64 {
        delta(self.dim(), self.gamma, self.q)
    }

    pub fn norm(&self) -> &NormModel {
        &self.norm
    }

    pub fn boundary(&self) -> &ScalarMap {
        &self.boundary
    }

    pub fn source_field(&self) -> Option<&VectorMap> {
        self.source_field.as_ref()
    }

    pub fn source(&self) -> Option<&ScalarMap> {
        self.source.as_ref()
    }

    /// Whether `F ≡ 0` and `f ≡ 0`.
    pub fn is_homogeneous(&self) -> bool {
        self.source_field.is_none() && self.source.is_none()
    }

    pub fn hole(&self) -> Option<(&[f64], f64)> {
        self.hole.as_ref().map(|(c, r)| (c.as_slice(), *r))
    }

    /// Nodes whose values are prescribed (box boundary plus the hole).
    pub fn fixed_mask(&self) -> &[bool] {
        &self.fixed
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    /// `‖Dφ_v‖_{L^{γ'}}` of the hat function at `v`.
    pub fn hat_scale(&self, v: usize) -> f64 {
        self.hat_scale[v]
    }

    /// Copy of the problem with `F` and `f` scaled by `s`.
    pub fn with_scaled_data(&self, s: f64) -> Problem {
        let mut p = self.clone();
        if let Some(fm) = &self.source_field {
            let fm = fm.clone();
            p.source_field = Some(Arc::new(move |x: &[f64], out: &mut [f64]| {
                fm(x, out);
                out.iter_mut().for_each(|o| *o *= s);
            }));
            p.field_at_centroids = Arc::new(self.field_at_centroids.iter().map(|v| v.map(|a| a * s)).collect());
        }
        if let Some(f) = &self.source {
            let f = f.clone();
            p.source = Some(Arc::new(move |x: &[f64]| s * f(x)));
            p.source_at_centroids = Arc::new(self.source_at_centroids.iter().map(|a| a * s).collect());
        }
        p
    }

    /// Copy of the problem with the boundary data replaced.
    pub fn with_boundary(&self, g: ScalarMap) -> Result<Problem> {
        for v in 0..self.grid.num_vertices() {
            if self.fixed[v] && !g(self.grid.vertex(v)).is_finite() {
                return Err(Error::domain("boundary data is not finite on a fixed node"));
            }
        }
        let mut p = self.clone();
        p.boundary = g;
        Ok(p)
    }

    /// Field equal to the boundary data on fixed nodes and zero elsewhere.
    pub fn boundary_field(&self) -> DiscreteField {
        let g = &self.boundary;
        let values = (0..self.grid.num_vertices())
            .map(|v| if self.fixed[v] { g(self.grid.vertex(v)) } else { 0.0 })
            .collect();
        DiscreteField::new(self.grid.clone(), values).expect("length matches")
    }

    pub(crate) fn field_at(&self, c: usize) -> Option<&[f64; MAX_DIM]> {
        self.field_at_centroids.get(c)
    }

    pub(crate) fn source_at(&self, c: usize) -> f64 {
        self.source_at_centroids.get(c).copied().unwrap_or(0.0)
    }

    pub(crate) fn laplacian(&self, kind: Preconditioner) -> Arc<LaplacianFactor> {
        let build = || Arc::new(LaplacianFactor::new(&self.grid, &self.fixed, &self.free, kind));
        let cache = if self.hole.is_none() {
            &self.grid.laplacian
        } else {
            &*self.factor
        };
        let cached = cache.get_or_init(build);
        if cached.requested() == kind {
            cached.clone()
        } else {
            build()
        }
    }
}

/// `δ = 1 − n/(q(γ−1))`
pub fn delta(n: usize, gamma: f64, q: f64) -> f64 {
    1.0 - n as f64 / (q * (gamma - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    /// Plain gradient descent.
    None,
    /// Jacobi scaling by the diagonal of the Laplacian stiffness matrix.
    Diagonal,
    /// Inverse of the Laplacian stiffness matrix on the free nodes (banded
    /// Cholesky).
    Laplacian,
    /// `Laplacian` when the band factorization is affordable, else `Diagonal`.
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Stop when the normalized residual drops below `tolerance` times its
    /// initial value.
    pub tolerance: f64,
    /// Absolute residual target used when it is larger than the relative one.
    pub absolute_tolerance: f64,
    pub max_iterations: usize,
    /// `ε` in `ρ_ε = (ρ² + ε²|ξ|²)^{1/2}`; zero disables regularization.
    pub epsilon_regularization: f64,
    /// Nesterov momentum, restarted whenever the energy would increase.
    pub acceleration: bool,
    pub preconditioner: Preconditioner,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-8,
            absolute_tolerance: 0.0,
            max_iterations: 50_000,
            epsilon_regularization: 0.0,
            acceleration: false,
            preconditioner: Preconditioner::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub energy_trace: Vec<f64>,
    pub initial_residual: f64,
    /// Max over free nodes of `|⟨residual, φ_v⟩| / ‖Dφ_v‖_{L^{γ'}}`.
    pub final_residual: f64,
    /// The residual level the run aimed for.
    pub target_residual: f64,
    pub line_search_failures: usize,
    pub restarts: usize,
    pub converged: bool,
    pub preconditioner: Preconditioner,
}

impl SolveReport {
    pub fn summary(&self) -> String {
        format!(
            "{} after {} iterations, residual {:.3e} (target {:.3e}), {} line-search failures",
            if self.converged { "converged" } else { "not converged" },
            self.iterations,
            self.final_residual,
            self.target_residual,
            self.line_search_failures
        )
    }

    pub fn final_energy(&self) -> f64 {
        self.energy_trace.last().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Solution,
    Subsolution,
    Supersolution,
    Neither,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::Solution => "solution",
            Classification::Subsolution => "subsolution",
            Classification::Supersolution => "supersolution",
            Classification::Neither => "neither",
        };
        f.write_str(s)
    }
}

/// Pairings of the weak residual of `u` with every free hat function, each
/// divided by `‖Dφ_v‖_{L^{γ'}}`.
pub fn normalized_pairings(problem: &Problem, u: &DiscreteField) -> Vec<f64> {
    let g = assemble::raw_gradient(problem, u.values(), 0.0);
    problem
        .free_nodes()
        .iter()
        .map(|&v| g[v] / problem.hat_scale(v))
        .collect()
}

/// Sign test of the weak residual against the free hat functions (a
/// nonnegative test basis). `tol` applies to the normalized pairings of
/// [`normalized_pairings`]: all `≤ tol` means subsolution, all `≥ −tol`
/// supersolution, both means solution.
pub fn classify(problem: &Problem, u: &DiscreteField, tol: f64) -> Classification {
    let pairings = normalized_pairings(problem, u);
    let sub = pairings.iter().all(|p| *p <= tol);
    let sup = pairings.iter().all(|p| *p >= -tol);
    match (sub, sup) {
        (true, true) => Classification::Solution,
        (true, false) => Classification::Subsolution,
        (false, true) => Classification::Supersolution,
        (false, false) => Classification::Neither,
    }
}
