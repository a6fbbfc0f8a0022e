use super::Problem;
use crate::grid::DiscreteField;
use crate::linalg::{dot, norm2, MAX_DIM};
use crate::norms::pow_abs;
use crate::{Error, Result};

/// Per-cell quantities at the current field.
struct CellState {
    du: [f64; MAX_DIM],
    /// Energy density `(1/γ) ρ_ε^γ − F·Du − f ū` at the centroid.
    density: f64,
    /// `flux − F`
    flux: [f64; MAX_DIM],
    source: f64,
}

#[inline]
fn cell_state(problem: &Problem, u: &[f64], c: usize, eps: f64, want_flux: bool) -> CellState {
    let grid = problem.grid();
    let n = grid.dim();
    let verts = grid.cell(c);
    let grads = grid.shape_gradients(c);
    let mut du = [0.0; MAX_DIM];
    let mut mean = 0.0;
    for (k, &v) in verts.iter().enumerate() {
        let uv = u[v];
        mean += uv;
        for i in 0..n {
            du[i] += uv * grads[k][i];
        }
    }
    mean /= (n + 1) as f64;
    let x = grid.centroid(c);
    let gamma = problem.gamma();
    let norm = problem.norm();
    let mut flux = [0.0; MAX_DIM];
    let rho_eps;
    if eps > 0.0 {
        let zero = du[..n].iter().all(|v| *v == 0.0);
        if zero {
            rho_eps = 0.0;
        } else {
            let mut g = [0.0; MAX_DIM];
            let rho = norm.eval_grad_unchecked(x, &du, &mut g);
            let d2 = dot(&du[..n], &du[..n]);
            rho_eps = (rho * rho + eps * eps * d2).sqrt();
            if want_flux {
                let w = pow_abs(rho_eps, gamma - 2.0);
                for i in 0..n {
                    flux[i] = w * (rho * g[i] + eps * eps * du[i]);
                }
            }
        }
    } else if want_flux {
        rho_eps = norm.flux_unchecked(gamma, x, &du, &mut flux);
    } else {
        rho_eps = norm.eval(x, &du);
    }
    let mut density = if rho_eps == 0.0 {
        0.0
    } else if gamma == 2.0 {
        0.5 * rho_eps * rho_eps
    } else {
        pow_abs(rho_eps, gamma) / gamma
    };
    if let Some(f) = problem.field_at(c) {
        density -= dot(&f[..n], &du[..n]);
        if want_flux {
            for i in 0..n {
                flux[i] -= f[i];
            }
        }
    }
    let source = problem.source_at(c);
    density -= source * mean;
    CellState {
        du,
        density,
        flux,
        source,
    }
}

pub(crate) fn energy_values(problem: &Problem, u: &[f64], eps: f64) -> f64 {
    energy_with_magnitude(problem, u, eps).0
}

/// Energy and `Σ vol·|density|`, the scale of its rounding error.
pub(crate) fn energy_with_magnitude(problem: &Problem, u: &[f64], eps: f64) -> (f64, f64) {
    let grid = problem.grid();
    let mut total = 0.0;
    let mut magnitude = 0.0;
    for c in 0..grid.num_cells() {
        let d = grid.cell_volume(c) * cell_state(problem, u, c, eps, false).density;
        total += d;
        magnitude += d.abs();
    }
    (total, magnitude)
}

/// Energy and its gradient with respect to every nodal value (fixed nodes
/// included). When `roundoff` is given it receives, per node, a magnitude
/// scale of the floating-point error in the gradient entry.
pub(crate) fn energy_and_raw_gradient(
    problem: &Problem,
    u: &[f64],
    eps: f64,
    grad: &mut [f64],
    mut roundoff: Option<&mut [f64]>,
) -> f64 {
    let grid = problem.grid();
    let n = grid.dim();
    let gamma = problem.gamma();
    grad.iter_mut().for_each(|g| *g = 0.0);
    if let Some(r) = roundoff.as_deref_mut() {
        r.iter_mut().for_each(|g| *g = 0.0);
    }
    let share = 1.0 / (n + 1) as f64;
    let mut total = 0.0;
    for c in 0..grid.num_cells() {
        let vol = grid.cell_volume(c);
        let s = cell_state(problem, u, c, eps, true);
        total += vol * s.density;
        let verts = grid.cell(c);
        let grads = grid.shape_gradients(c);
        for (k, &v) in verts.iter().enumerate() {
            grad[v] += vol * (dot(&s.flux[..n], &grads[k][..n]) - s.source * share);
        }
        if let Some(r) = roundoff.as_deref_mut() {
            // Error in Du from cancellation of nodal values, propagated
            // through the (γ−1)-homogeneous flux.
            let umax = verts.iter().map(|&v| u[v].abs()).fold(0.0, f64::max);
            let gsum: f64 = grads.iter().map(|g| norm2(&g[..n])).sum();
            let dnorm = norm2(&s.du[..n]);
            let fnorm = norm2(&s.flux[..n]);
            let amplification = if dnorm > 0.0 {
                1.0 + (gamma - 1.0).abs() * umax * gsum / dnorm
            } else {
                1.0
            };
            let cell_err = fnorm * amplification;
            for (k, &v) in verts.iter().enumerate() {
                r[v] += vol * (cell_err * norm2(&grads[k][..n]) + s.source.abs() * share);
            }
        }
    }
    total
}

pub(crate) fn raw_gradient(problem: &Problem, u: &[f64], eps: f64) -> Vec<f64> {
    let mut g = vec![0.0; u.len()];
    energy_and_raw_gradient(problem, u, eps, &mut g, None);
    g
}

/// Discrete energy
/// `Σ_cells vol·[(1/γ)ρ(x_c, Du)^γ − F(x_c)·Du − f(x_c) u(x_c)]`
/// with centroid quadrature.
pub fn energy(problem: &Problem, field: &DiscreteField) -> f64 {
    energy_values(problem, field.values(), 0.0)
}

/// Gradient of [`energy`] with respect to the nodal values; entries at fixed
/// nodes are zero. Entry `v` is the weak residual tested against the hat
/// function of `v`.
pub fn energy_gradient(problem: &Problem, field: &DiscreteField) -> Vec<f64> {
    let mut g = raw_gradient(problem, field.values(), 0.0);
    for (gv, fixed) in g.iter_mut().zip(problem.fixed_mask()) {
        if *fixed {
            *gv = 0.0;
        }
    }
    g
}

/// `∫⟨ρ^{γ-1}Dρ(Du), Dφ⟩ − ∫⟨F, Dφ⟩ − ∫ fφ` for a test field `φ` vanishing
/// on the fixed nodes.
pub fn residual_pairing(problem: &Problem, u: &DiscreteField, phi: &DiscreteField) -> Result<f64> {
    if phi.values().len() != u.values().len() {
        return Err(Error::config("test field lives on a different grid"));
    }
    if let Some(v) = problem
        .fixed_mask()
        .iter()
        .zip(phi.values())
        .position(|(fixed, p)| *fixed && *p != 0.0)
    {
        return Err(Error::domain(format!(
            "test function must vanish on fixed nodes, but is {} at {:?}",
            phi.values()[v],
            problem.grid().vertex(v)
        )));
    }
    let grid = problem.grid();
    let n = grid.dim();
    let mut total = 0.0;
    let mut dphi = [0.0; MAX_DIM];
    for c in 0..grid.num_cells() {
        let s = cell_state(problem, u.values(), c, 0.0, true);
        phi.cell_gradient_into(c, &mut dphi);
        total += grid.cell_volume(c) * (dot(&s.flux[..n], &dphi[..n]) - s.source * phi.centroid_value(c));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;
    use crate::grid::Grid;
    use crate::maps::{affine, scalar_map};
    use crate::norms::NormModel;

    #[test]
    fn zero_field_has_zero_energy() {
        let g = Grid::uniform(&BoxDomain::unit(2), 6).unwrap();
        let p = Problem::builder(g.clone(), 2.0, NormModel::ell_p(2, 3.0).unwrap())
            .build()
            .unwrap();
        assert_eq!(energy(&p, &DiscreteField::zeros(g)), 0.0);
    }

    #[test]
    fn linear_field_energy_and_gradient() {
        let g = Grid::uniform(&BoxDomain::unit(2), 8).unwrap();
        let norm = NormModel::rotated_ell_p_2d(4.0, 0.3).unwrap();
        let gamma = 3.0;
        let p = Problem::builder(g.clone(), gamma, norm.clone()).build().unwrap();
        let u = DiscreteField::from_fn(g, |x| 0.7 * x[0] - 1.3 * x[1]);
        let expected = norm.eval(&[0.0, 0.0], &[0.7, -1.3]).powf(gamma) / gamma;
        assert!((energy(&p, &u) - expected).abs() < 1e-12);
        let grad = energy_gradient(&p, &u);
        assert!(grad.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn pairing_signs_for_quadratic() {
        let g = Grid::uniform(&BoxDomain::unit(2), 10).unwrap();
        let p = Problem::builder(g.clone(), 2.0, NormModel::euclidean(2, 1.0).unwrap())
            .build()
            .unwrap();
        let u = DiscreteField::from_fn(g.clone(), |x| x[0] * x[0]);
        let mut phi = DiscreteField::zeros(g.clone());
        phi.values_mut()[5 * 11 + 4] = 1.0;
        assert!(residual_pairing(&p, &u, &phi).unwrap() < 0.0);
        assert!(residual_pairing(&p, &u.scaled(-1.0), &phi).unwrap() > 0.0);
        let mut bad = DiscreteField::zeros(g);
        bad.values_mut()[0] = 1.0;
        assert!(matches!(residual_pairing(&p, &u, &bad), Err(Error::Domain(_))));
    }

    #[test]
    fn pairing_matches_gradient_dot_test_field() {
        let g = Grid::uniform(&BoxDomain::unit(2), 6).unwrap();
        let p = Problem::builder(g.clone(), 1.5, NormModel::ell_p(2, 3.0).unwrap())
            .source(affine(&[1.0, -2.0], 0.5))
            .source_field(std::sync::Arc::new(|x: &[f64], out: &mut [f64]| {
                out[0] = x[1];
                out[1] = -x[0] * x[0];
            }))
            .boundary(scalar_map(|x| x[0] * x[1]))
            .build()
            .unwrap();
        let u = DiscreteField::from_fn(g.clone(), |x| (2.0 * x[0]).sin() + x[1] * x[1]);
        let phi = DiscreteField::from_fn(g.clone(), |x| {
            if x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0 {
                x[0] * (1.0 - x[0]) * x[1]
            } else {
                0.0
            }
        });
        let grad = energy_gradient(&p, &u);
        let via_grad: f64 = grad.iter().zip(phi.values()).map(|(a, b)| a * b).sum();
        let direct = residual_pairing(&p, &u, &phi).unwrap();
        assert!((via_grad - direct).abs() < 1e-13);
    }
}
