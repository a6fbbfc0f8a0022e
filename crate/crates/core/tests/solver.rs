use std::sync::Arc;

use aniso_core::maps::scalar_map;
use aniso_core::norms::parse_norm;
use aniso_core::solver::{energy, energy_gradient};
use aniso_core::{classify, solve, BoxDomain, Classification, DiscreteField, Grid, NormModel, Problem, SolverOptions};

fn square(cells: usize) -> Arc<Grid> {
    Grid::uniform(&BoxDomain::centered(2, 1.0).unwrap(), cells).unwrap()
}

fn max_abs_diff(a: &DiscreteField, b: &DiscreteField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn affine_data_is_reproduced_for_x_independent_norms() {
    let grid = square(12);
    for (norm, gamma) in [
        (NormModel::euclidean(2, 1.0).unwrap(), 1.5),
        (NormModel::ell_p(2, 3.0).unwrap(), 2.0),
        (NormModel::rotated_ell_p_2d(4.0, 0.3).unwrap(), 3.0),
    ] {
        let g = scalar_map(|x| 0.5 - 0.3 * x[0] + 1.1 * x[1]);
        let problem = Problem::builder(grid.clone(), gamma, norm)
            .boundary(g.clone())
            .build()
            .unwrap();
        let (u, report) = solve(&problem, &SolverOptions::default()).unwrap();
        assert!(report.converged, "{}", report.summary());
        let exact = DiscreteField::from_fn(grid.clone(), |x| g(x));
        assert!(max_abs_diff(&u, &exact) < 1e-10);
    }
}

#[test]
fn energy_trace_is_monotone() {
    let problem = Problem::builder(square(24), 3.0, NormModel::ell_p(2, 4.0).unwrap())
        .boundary(scalar_map(|x| (2.0 * x[0]).sin() + x[1] * x[1]))
        .source(scalar_map(|x| 0.5 * x[0]))
        .build()
        .unwrap();
    let (_, report) = solve(&problem, &SolverOptions::default()).unwrap();
    assert!(report.converged);
    for w in report.energy_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-13 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn solution_is_classified_as_solution_and_satisfies_maximum_principle() {
    let problem = Problem::builder(square(20), 2.5, NormModel::rotated_ell_p_2d(3.0, 0.7).unwrap())
        .boundary(scalar_map(|x| (3.0 * x[0] * x[1]).cos()))
        .build()
        .unwrap();
    let (u, _) = solve(&problem, &SolverOptions::default()).unwrap();
    assert_eq!(classify(&problem, &u, 1e-6), Classification::Solution);
    let fixed = problem.fixed_mask();
    let boundary: Vec<f64> = (0..u.values().len())
        .filter(|&v| fixed[v])
        .map(|v| u.values()[v])
        .collect();
    let lo = boundary.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = boundary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(u.values().iter().all(|&v| v >= lo - 1e-9 && v <= hi + 1e-9));
}

#[test]
fn homogeneous_problem_scales_linearly() {
    let norm = NormModel::ell_p(2, 4.0).unwrap();
    let g = |s: f64| scalar_map(move |x: &[f64]| s * (1.0 + x[0] * x[0] - 0.5 * x[1]));
    let base = Problem::builder(square(16), 3.0, norm.clone())
        .boundary(g(1.0))
        .build()
        .unwrap();
    let scaled = Problem::builder(square(16), 3.0, norm)
        .boundary(g(2.5))
        .build()
        .unwrap();
    let opts = SolverOptions {
        tolerance: 1e-11,
        ..SolverOptions::default()
    };
    let (u, _) = solve(&base, &opts).unwrap();
    let (v, _) = solve(&scaled, &opts).unwrap();
    let err = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| (2.5 * a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-7, "{err}");
}

#[test]
fn gradient_matches_central_differences() {
    let grid = square(6);
    let problem = Problem::builder(grid.clone(), 1.7, parse_norm("varexp(1.5, 3, 1)", 2).unwrap())
        .boundary(scalar_map(|x| x[0] - x[1]))
        .build()
        .unwrap();
    let u = DiscreteField::from_fn(grid, |x| x[0] - x[1] + 0.2 * (x[0] * 4.0).sin());
    let g = energy_gradient(&problem, &u);
    let h = 1e-6;
    for &v in problem.free_nodes() {
        let mut up = u.clone();
        up.values_mut()[v] += h;
        let mut dn = u.clone();
        dn.values_mut()[v] -= h;
        let fd = (energy(&problem, &up) - energy(&problem, &dn)) / (2.0 * h);
        assert!(
            (fd - g[v]).abs() <= 1e-6 * g[v].abs().max(1e-2),
            "{v}: {fd} vs {}",
            g[v]
        );
    }
}
