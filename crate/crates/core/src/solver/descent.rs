use super::assemble::{energy_and_raw_gradient, energy_with_magnitude};
use super::precond::LaplacianFactor;
use super::{Problem, SolveReport, SolverOptions};
use crate::grid::DiscreteField;
use crate::linalg::dot;
use crate::{Error, Result};

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const STEP_MIN: f64 = 1e-12;
const STEP_MAX: f64 = 1e3;
/// Multiple of machine epsilon times the gradient's error scale below which
/// residuals are indistinguishable from roundoff.
const ROUNDOFF_FACTOR: f64 = 16.0;

/// Minimizes the energy starting from the discrete harmonic extension of the
/// boundary data.
pub fn solve(problem: &Problem, options: &SolverOptions) -> Result<(DiscreteField, SolveReport)> {
    check_options(options)?;
    let factor = problem.laplacian(options.preconditioner);
    let mut u = problem.boundary_field().into_values();
    factor.harmonic_extension(problem.grid(), &mut u);
    Descent::new(problem, options, &factor).run(u)
}

/// Minimizes the energy starting from `initial`, whose fixed-node values are
/// replaced by the boundary data.
pub fn solve_from(
    problem: &Problem,
    options: &SolverOptions,
    initial: &DiscreteField,
) -> Result<(DiscreteField, SolveReport)> {
    check_options(options)?;
    if initial.values().len() != problem.grid().num_vertices() {
        return Err(Error::config("initial field lives on a different grid"));
    }
    let factor = problem.laplacian(options.preconditioner);
    let boundary = problem.boundary_field();
    let u = initial
        .values()
        .iter()
        .zip(boundary.values())
        .zip(problem.fixed_mask())
        .map(|((a, b), fixed)| if *fixed { *b } else { *a })
        .collect();
    Descent::new(problem, options, &factor).run(u)
}

fn check_options(o: &SolverOptions) -> Result<()> {
    if !(o.tolerance >= 0.0 && o.tolerance.is_finite()) {
        return Err(Error::config(format!(
            "tolerance must be finite and >= 0, got {}",
            o.tolerance
        )));
    }
    if !(o.absolute_tolerance >= 0.0 && o.absolute_tolerance.is_finite()) {
        return Err(Error::config("absolute_tolerance must be finite and >= 0"));
    }
    if !(o.epsilon_regularization >= 0.0 && o.epsilon_regularization.is_finite()) {
        return Err(Error::config("epsilon_regularization must be finite and >= 0"));
    }
    Ok(())
}

struct Point {
    u: Vec<f64>,
    energy: f64,
    grad: Vec<f64>,
    roundoff: Vec<f64>,
}

struct Descent<'a> {
    problem: &'a Problem,
    options: &'a SolverOptions,
    factor: &'a LaplacianFactor,
    eps: f64,
}

impl<'a> Descent<'a> {
    fn new(problem: &'a Problem, options: &'a SolverOptions, factor: &'a LaplacianFactor) -> Self {
        Descent {
            problem,
            options,
            factor,
            eps: options.epsilon_regularization,
        }
    }

    fn evaluate(&self, u: Vec<f64>) -> Point {
        let mut grad = vec![0.0; u.len()];
        let mut roundoff = vec![0.0; u.len()];
        let energy = energy_and_raw_gradient(self.problem, &u, self.eps, &mut grad, Some(&mut roundoff));
        for (g, fixed) in grad.iter_mut().zip(self.problem.fixed_mask()) {
            if *fixed {
                *g = 0.0;
            }
        }
        Point {
            u,
            energy,
            grad,
            roundoff,
        }
    }

    /// (normalized residual, roundoff floor of the same measure)
    fn residual(&self, p: &Point) -> (f64, f64) {
        let mut res: f64 = 0.0;
        let mut floor: f64 = 0.0;
        for &v in self.problem.free_nodes() {
            let s = self.problem.hat_scale(v);
            res = res.max(p.grad[v].abs() / s);
            floor = floor.max(p.roundoff[v] / s);
        }
        (res, ROUNDOFF_FACTOR * f64::EPSILON * floor)
    }

    /// Descent direction `−P⁻¹g` (plain `−g` if the preconditioned one is not
    /// a descent direction) and the slope `g·d`.
    fn direction(&self, g: &[f64]) -> (Vec<f64>, f64) {
        let mut d = vec![0.0; g.len()];
        self.factor.apply(g, &mut d);
        d.iter_mut().for_each(|v| *v = -*v);
        let slope = dot(g, &d);
        if slope < 0.0 {
            return (d, slope);
        }
        let d: Vec<f64> = g.iter().map(|v| -v).collect();
        let slope = -dot(g, g);
        (d, slope)
    }

    /// Backtracking from `step` along `d`. Accepts on the Armijo condition,
    /// or, when the energy change is within rounding noise, on the directional
    /// derivative at the trial point still being below `c·slope`. For convex
    /// energies the latter implies the Armijo condition in exact arithmetic
    /// and stays reliable where energy differences cancel.
    fn line_search(&self, from: &Point, d: &[f64], slope: f64, mut step: f64) -> Option<(Point, f64)> {
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = from.u.iter().zip(d).map(|(u, d)| u + step * d).collect();
            if trial == from.u {
                return None;
            }
            let (e, magnitude) = energy_with_magnitude(self.problem, &trial, self.eps);
            if e <= from.energy + ARMIJO_C * step * slope {
                let p = self.evaluate(trial);
                return Some((p, step));
            }
            let noise = ROUNDOFF_FACTOR * f64::EPSILON * magnitude;
            if e <= from.energy + noise {
                let p = self.evaluate(trial);
                if dot(&p.grad, d) <= ARMIJO_C * slope {
                    return Some((p, step));
                }
            }
            step *= BACKTRACK;
        }
        None
    }

    fn run(&self, u0: Vec<f64>) -> Result<(DiscreteField, SolveReport)> {
        let mut x = self.evaluate(u0);
        let (r0, floor0) = self.residual(&x);
        let relative = self.options.tolerance * r0;
        let base_target = relative.max(self.options.absolute_tolerance);
        let mut report = SolveReport {
            iterations: 0,
            energy_trace: vec![x.energy],
            initial_residual: r0,
            final_residual: r0,
            target_residual: base_target.max(floor0),
            line_search_failures: 0,
            restarts: 0,
            converged: false,
            preconditioner: self.factor.resolved(),
        };
        let mut step = 1.0;
        let mut previous: Option<Vec<f64>> = None;
        let mut momentum_k = 0usize;
        loop {
            let (res, floor) = self.residual(&x);
            report.final_residual = res;
            report.target_residual = base_target.max(floor);
            if res <= report.target_residual {
                report.converged = true;
                break;
            }
            if report.iterations >= self.options.max_iterations {
                break;
            }
            report.iterations += 1;

            // Nesterov extrapolation, abandoned when it does not decrease the energy.
            let mut outcome = None;
            if self.options.acceleration {
                if let Some(prev) = &previous {
                    let beta = momentum_k as f64 / (momentum_k as f64 + 3.0);
                    let y: Vec<f64> = x.u.iter().zip(prev).map(|(a, b)| a + beta * (a - b)).collect();
                    let yp = self.evaluate(y);
                    let (d, slope) = self.direction(&yp.grad);
                    if let Some((cand, s)) = self.line_search(&yp, &d, slope, step) {
                        if cand.energy <= x.energy {
                            outcome = Some((cand, s, yp, d));
                        }
                    }
                    if outcome.is_none() {
                        report.restarts += 1;
                        momentum_k = 0;
                    }
                }
            }
            let (next, s, base, d) = match outcome {
                Some(o) => o,
                None => {
                    let (d, slope) = self.direction(&x.grad);
                    match self.line_search(&x, &d, slope, step) {
                        Some((cand, s)) => {
                            let base = Point {
                                u: Vec::new(),
                                energy: x.energy,
                                grad: x.grad.clone(),
                                roundoff: Vec::new(),
                            };
                            (cand, s, base, d)
                        }
                        None => {
                            report.line_search_failures += 1;
                            break;
                        }
                    }
                }
            };

            // Barzilai–Borwein step in the preconditioner's metric:
            // α = sᵀPs / sᵀy with Ps = −α_prev·g.
            let sy: f64 = d
                .iter()
                .zip(next.grad.iter().zip(&base.grad))
                .map(|(di, (gn, go))| s * di * (gn - go))
                .sum();
            let sps = -s * s * dot(&d, &base.grad);
            step = if sy > 0.0 && sps > 0.0 {
                (sps / sy).clamp(STEP_MIN, STEP_MAX)
            } else {
                1.0
            };
            momentum_k += 1;
            report.energy_trace.push(next.energy);
            previous = Some(std::mem::replace(&mut x, next).u);
        }
        let field = DiscreteField::new(self.problem.grid().clone(), x.u)?;
        if report.converged {
            Ok((field, report))
        } else {
            Err(Error::NotConverged(Box::new((field, report))))
        }
    }
}
