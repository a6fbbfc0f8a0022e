use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::decay::{fit_decay, oscillation_profile, DecayFit};
use crate::geometry::BoxDomain;
use crate::grid::{build_grid, oscillation};
use crate::maps::ScalarMap;
use crate::norms::NormModel;
use crate::solver::{solve, Problem, SolverOptions};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiouvilleBoundary {
    /// `A·sin(π x₁ / (2L))` on `[−L, L]ⁿ`.
    Sine,
    /// The constant `A`.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleOptions {
    pub box_sizes: Vec<f64>,
    pub amplitude: f64,
    pub boundary: LiouvilleBoundary,
    /// Cells per axis, the same for every box size.
    pub cells_per_axis: usize,
    pub solver: SolverOptions,
}

impl Default for LiouvilleOptions {
    fn default() -> Self {
        LiouvilleOptions {
            box_sizes: vec![1.0, 2.0, 4.0, 8.0],
            amplitude: 1.0,
            boundary: LiouvilleBoundary::Sine,
            cells_per_axis: 96,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvillePoint {
    pub box_size: f64,
    pub central_oscillation: f64,
    pub iterations: usize,
    pub final_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    pub points: Vec<LiouvillePoint>,
    /// Power-law fit of the oscillation over `B_1, B_{1/2}, B_{1/4}` for the
    /// largest box; predicts `osc(L)/osc(2L) ≈ 2^α`. `None` when the profile
    /// is below the fitting floor (for instance constant data).
    pub decay_fit: Option<DecayFit>,
}

impl LiouvilleReport {
    /// `osc(L_k) / osc(L_{k+1})` for consecutive box sizes.
    pub fn decay_ratios(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| w[0].central_oscillation / w[1].central_oscillation)
            .collect()
    }

    pub fn is_monotone_decreasing(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].central_oscillation < w[0].central_oscillation)
    }
}

/// Solves the homogeneous problem on `[−L, L]ⁿ` for each box size `L` with
/// boundary data bounded by the amplitude, and records the oscillation over
/// the unit ball at the origin.
pub fn liouville_experiment(norm: &NormModel, gamma: f64, options: &LiouvilleOptions) -> Result<LiouvilleReport> {
    let n = norm.dim();
    if options.box_sizes.is_empty() || options.box_sizes.iter().any(|l| !(*l >= 1.0 && l.is_finite())) {
        return Err(Error::config("liouville box sizes must be finite and at least 1"));
    }
    if !options.amplitude.is_finite() {
        return Err(Error::config("liouville amplitude must be finite"));
    }
    let center = vec![0.0; n];
    let mut points = Vec::with_capacity(options.box_sizes.len());
    let mut last = None;
    for &l in &options.box_sizes {
        let domain = BoxDomain::centered(n, l)?;
        let grid = Arc::new(build_grid(&domain, &vec![options.cells_per_axis; n])?);
        let a = options.amplitude;
        let g: ScalarMap = match options.boundary {
            LiouvilleBoundary::Sine => Arc::new(move |x: &[f64]| a * (PI * x[0] / (2.0 * l)).sin()),
            LiouvilleBoundary::Constant => Arc::new(move |_: &[f64]| a),
        };
        let problem = Problem::builder(grid, gamma, norm.clone()).boundary(g).build()?;
        let (u, report) = solve(&problem, &options.solver)?;
        points.push(LiouvillePoint {
            box_size: l,
            central_oscillation: oscillation(&u, &center, 1.0)?,
            iterations: report.iterations,
            final_residual: report.final_residual,
        });
        last = Some(u);
    }
    let u = last.expect("at least one box size");
    let profile = oscillation_profile(&u, &center, 1.0, 3)?;
    let floor = 10.0 * options.solver.tolerance * options.amplitude.abs();
    let decay_fit = fit_decay(&profile, floor).ok();
    Ok(LiouvilleReport { points, decay_fit })
}
