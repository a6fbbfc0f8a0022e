use super::{DiscreteField, Grid};
use crate::linalg::MAX_DIM;
use crate::{Error, Result};

fn check_ball(grid: &Grid, center: &[f64], r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("ball radius must be positive, got {r}")));
    }
    if !grid.domain().contains_ball(center, r, 0.0) {
        return Err(Error::domain(format!(
            "ball of radius {r} at {center:?} is not contained in the grid box"
        )));
    }
    Ok(())
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `∫_{B_r(center)} g` where `g(cell, x, bary)` is evaluated at the cell
/// sub-samples inside the ball.
pub fn ball_integrate(
    grid: &Grid,
    center: &[f64],
    r: f64,
    mut g: impl FnMut(usize, &[f64], &[f64; MAX_DIM + 1]) -> f64,
) -> Result<f64> {
    check_ball(grid, center, r)?;
    let n = grid.dim();
    let lo: Vec<f64> = center.iter().map(|c| c - r).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + r).collect();
    let r2 = r * r;
    let mut total = 0.0;
    for c in grid.cells_in_bbox(&lo, &hi) {
        let samples = grid.cell_samples(c);
        let w = grid.cell_volume(c) / samples.len() as f64;
        let mut sum = 0.0;
        for s in samples {
            let x = grid.sample_point(c, s);
            if dist2(&x[..n], center) <= r2 {
                sum += g(c, &x[..n], &s.bary);
            }
        }
        total += w * sum;
    }
    Ok(total)
}

fn extremes(field: &DiscreteField, center: &[f64], r: f64) -> Result<(f64, f64)> {
    let grid = field.grid();
    check_ball(grid, center, r)?;
    let n = grid.dim();
    let u = field.values();
    let lo: Vec<f64> = center.iter().map(|c| c - r).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + r).collect();
    let r2 = r * r;
    let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut push = |v: f64| {
        max = max.max(v);
        min = min.min(v);
    };
    for c in grid.cells_in_bbox(&lo, &hi) {
        let verts = grid.cell(c);
        for (a_idx, &a) in verts.iter().enumerate() {
            let pa = grid.vertex(a);
            let da = dist2(pa, center);
            if da <= r2 {
                push(u[a]);
            }
            for &b in &verts[a_idx + 1..] {
                let pb = grid.vertex(b);
                // |pa + t (pb - pa) - center|^2 = r^2
                let mut dd = 0.0;
                let mut bb = 0.0;
                for i in 0..n {
                    let d = pb[i] - pa[i];
                    dd += d * d;
                    bb += (pa[i] - center[i]) * d;
                }
                let disc = bb * bb - dd * (da - r2);
                if disc < 0.0 {
                    continue;
                }
                let sq = disc.sqrt();
                for t in [(-bb - sq) / dd, (-bb + sq) / dd] {
                    if (0.0..=1.0).contains(&t) {
                        push(u[a] + t * (u[b] - u[a]));
                    }
                }
            }
        }
        sphere_critical_points(field, c, center, r, &mut push);
    }
    if max == f64::NEG_INFINITY {
        // The ball misses every edge: it lies inside a single cell, where the
        // interpolant is linear and its extremes are u(center) ± r|Du|.
        let (cell, bary) = grid.locate(center)?;
        let mid = field.value_in_cell(cell, &bary);
        let mut d = [0.0; MAX_DIM];
        field.cell_gradient_into(cell, &mut d);
        let spread = r * crate::linalg::norm2(&d[..n]);
        return Ok((mid + spread, mid - spread));
    }
    Ok((max, min))
}

/// Critical points of the cell's linear function on the sphere: `center ±
/// r·Du/|Du|`, and in 3D the extremes on the circles where the sphere cuts
/// the faces. Only points inside the closed cell are reported.
fn sphere_critical_points(field: &DiscreteField, c: usize, center: &[f64], r: f64, push: &mut impl FnMut(f64)) {
    const INSIDE: f64 = -1e-12;
    let grid = field.grid();
    let n = grid.dim();
    let verts = grid.cell(c);
    let grads = grid.shape_gradients(c);
    let p0 = grid.vertex(verts[0]);
    let u0 = field.values()[verts[0]];
    let mut du = [0.0; MAX_DIM];
    field.cell_gradient_into(c, &mut du);
    let du = &du[..n];
    // Barycentric coordinates and value of the cell's affine extension at x.
    let eval = |x: &[f64]| -> Option<f64> {
        for (i, gi) in grads.iter().enumerate().take(n + 1) {
            let lam = if i == 0 { 1.0 } else { 0.0 } + (0..n).map(|k| gi[k] * (x[k] - p0[k])).sum::<f64>();
            if lam < INSIDE {
                return None;
            }
        }
        Some(u0 + (0..n).map(|k| du[k] * (x[k] - p0[k])).sum::<f64>())
    };
    let gnorm = crate::linalg::norm2(du);
    if gnorm == 0.0 {
        return;
    }
    let mut x = [0.0; MAX_DIM];
    for sign in [1.0, -1.0] {
        for k in 0..n {
            x[k] = center[k] + sign * r * du[k] / gnorm;
        }
        if let Some(v) = eval(&x[..n]) {
            push(v);
        }
    }
    if n != 3 {
        return;
    }
    for (f, gf) in grads.iter().enumerate().take(n + 1) {
        let m_norm = crate::linalg::norm2(&gf[..n]);
        let m: Vec<f64> = gf[..n].iter().map(|v| v / m_norm).collect();
        // λ_f vanishes on the face; its value at the center over |∇λ_f| is
        // the signed distance to the face plane.
        let lam_c = if f == 0 { 1.0 } else { 0.0 } + (0..n).map(|k| gf[k] * (center[k] - p0[k])).sum::<f64>();
        let d = lam_c / m_norm;
        let rho2 = r * r - d * d;
        if rho2 < 0.0 {
            continue;
        }
        let gm: f64 = (0..n).map(|k| du[k] * m[k]).sum();
        let gp: Vec<f64> = (0..n).map(|k| du[k] - gm * m[k]).collect();
        let gp_norm = crate::linalg::norm2(&gp);
        if gp_norm == 0.0 {
            continue;
        }
        let rho = rho2.sqrt();
        for sign in [1.0, -1.0] {
            for k in 0..n {
                x[k] = center[k] - d * m[k] + sign * rho * gp[k] / gp_norm;
            }
            if let Some(v) = eval(&x[..n]) {
                push(v);
            }
        }
    }
}

/// Ball statistic of the piecewise-linear field on `B_r(center)`:
/// `p = +∞` gives the supremum, `p = −∞` the infimum, finite `p > 0` the
/// `L^p` norm `(∫_{B_r} |u|^p)^{1/p}`.
///
/// Extremes are exact for the interpolant: they are taken over the vertices
/// inside the ball, the points where mesh edges cross the sphere and the
/// critical points of each cell's linear function on the sphere; integrals use the equal-weight cell
/// sub-samples that fall inside the ball.
pub fn ball_stats(field: &DiscreteField, center: &[f64], r: f64, p: f64) -> Result<f64> {
    if p == f64::INFINITY {
        return extremes(field, center, r).map(|e| e.0);
    }
    if p == f64::NEG_INFINITY {
        return extremes(field, center, r).map(|e| e.1);
    }
    if !(p > 0.0) {
        return Err(Error::config(format!(
            "ball_stats exponent must be positive or ±inf, got {p}"
        )));
    }
    let integral = ball_integrate(field.grid(), center, r, |c, _, bary| {
        let v = field.value_in_cell(c, bary).abs();
        if p == 1.0 {
            v
        } else {
            v.powf(p)
        }
    })?;
    Ok(integral.powf(1.0 / p))
}

/// `sup_{B_r} u − inf_{B_r} u`.
pub fn oscillation(field: &DiscreteField, center: &[f64], r: f64) -> Result<f64> {
    let (max, min) = extremes(field, center, r)?;
    Ok((max - min).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;
    use std::f64::consts::PI;

    fn square(res: usize) -> std::sync::Arc<Grid> {
        Grid::uniform(&BoxDomain::centered(2, 1.0).unwrap(), res).unwrap()
    }

    #[test]
    fn constant_field() {
        let g = square(16);
        let u = DiscreteField::from_fn(g, |_| 3.0);
        assert_eq!(ball_stats(&u, &[0.1, 0.0], 0.5, f64::INFINITY).unwrap(), 3.0);
        assert_eq!(ball_stats(&u, &[0.1, 0.0], 0.5, f64::NEG_INFINITY).unwrap(), 3.0);
        assert_eq!(oscillation(&u, &[0.0, 0.0], 0.3).unwrap(), 0.0);
    }

    #[test]
    fn linear_extremes() {
        let u = DiscreteField::from_fn(square(16), |x| x[0]);
        assert!((ball_stats(&u, &[0.0, 0.0], 0.5, f64::INFINITY).unwrap() - 0.5).abs() < 1e-12);
        assert!((ball_stats(&u, &[0.0, 0.0], 0.5, f64::NEG_INFINITY).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn l2_norm_of_linear_field() {
        let u = DiscreteField::from_fn(square(128), |x| x[0]);
        let r: f64 = 0.5;
        let exact = r * (PI * r * r / 4.0).sqrt();
        let got = ball_stats(&u, &[0.0, 0.0], r, 2.0).unwrap();
        assert!((got - exact).abs() < 0.01 * exact, "{got} vs {exact}");
    }

    #[test]
    fn linear_extremes_are_exact_off_axis() {
        let u = DiscreteField::from_fn(square(16), |x| 0.6 * x[0] - 0.8 * x[1]);
        for (c, r) in [([0.0, 0.0], 0.5), ([0.03, -0.11], 0.37)] {
            let mid = 0.6 * c[0] - 0.8 * c[1];
            assert!((ball_stats(&u, &c, r, f64::INFINITY).unwrap() - (mid + r)).abs() < 1e-12);
            assert!((ball_stats(&u, &c, r, f64::NEG_INFINITY).unwrap() - (mid - r)).abs() < 1e-12);
        }
        let g3 = Grid::uniform(&BoxDomain::centered(3, 1.0).unwrap(), 8).unwrap();
        let u3 = DiscreteField::from_fn(g3, |x| x[0] + 2.0 * x[1] - 2.0 * x[2]);
        let sup = ball_stats(&u3, &[0.1, 0.0, 0.05], 0.4, f64::INFINITY).unwrap();
        assert!((sup - (0.1 - 0.1 + 0.4 * 3.0)).abs() < 1e-12, "{sup}");
    }

    #[test]
    fn tiny_ball_inside_one_cell() {
        let u = DiscreteField::from_fn(square(4), |x| 2.0 * x[0] + x[1]);
        let s = ball_stats(&u, &[0.1, 0.05], 0.01, f64::INFINITY).unwrap();
        assert!((s - (0.25 + 0.01 * 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn ball_outside_box_is_rejected() {
        let u = DiscreteField::from_fn(square(8), |x| x[0]);
        assert!(matches!(ball_stats(&u, &[0.8, 0.0], 0.5, 2.0), Err(Error::Domain(_))));
        assert!(matches!(oscillation(&u, &[0.0, 0.0], 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn oscillation_is_monotone_in_radius() {
        let u = DiscreteField::from_fn(square(32), |x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let mut prev = 0.0;
        for k in 1..10 {
            let o = oscillation(&u, &[0.05, -0.1], 0.09 * k as f64).unwrap();
            assert!(o >= prev);
            prev = o;
        }
    }

    #[test]
    fn extremes_bracket_lp_averages() {
        let u = DiscreteField::from_fn(square(32), |x| (2.0 * x[0]).cos() - x[1]);
        let (c, r) = ([0.1, 0.2], 0.6);
        let sup_abs = ball_stats(&u, &c, r, f64::INFINITY)
            .unwrap()
            .abs()
            .max(ball_stats(&u, &c, r, f64::NEG_INFINITY).unwrap().abs());
        let measure = ball_integrate(u.grid(), &c, r, |_, _, _| 1.0).unwrap();
        for p in [0.5, 1.0, 2.0, 4.0] {
            let avg = ball_stats(&u, &c, r, p).unwrap() / measure.powf(1.0 / p);
            assert!(avg <= sup_abs + 1e-12);
        }
    }

    #[test]
    fn ball_volume_in_3d() {
        let g = Grid::uniform(&BoxDomain::centered(3, 1.0).unwrap(), 24).unwrap();
        let vol = ball_integrate(&g, &[0.0; 3], 0.7, |_, _, _| 1.0).unwrap();
        let exact = 4.0 / 3.0 * PI * 0.7f64.powi(3);
        assert!((vol - exact).abs() < 0.01 * exact);
    }
}
