use crate::linalg::SmallMat;
use crate::{Error, Result};

/// Hessian of `‖·‖_p²` at `x ≠ 0` for `p > 2`:
///
/// `H_ij = 2(p-1) δ_ij (|x_i|/‖x‖_p)^{p-2} − 2(p-2) s_i s_j`, with
/// `s_i = sign(x_i)(|x_i|/‖x‖_p)^{p-1}`.
///
/// At a standard basis vector `e_k` the Hessian reduces to `2 e_k e_kᵀ`: it
/// vanishes on the orthogonal complement `e_k^⊥` (the energy is not uniformly
/// convex there), while the radial entry equals 2 as required by the
/// 2-homogeneity of `‖·‖_p²`.
pub fn hessian_ellp(p: f64, x: &[f64]) -> Result<SmallMat> {
    if !(p.is_finite() && p > 2.0) {
        return Err(Error::config(format!("hessian_ellp requires p > 2, got {p}")));
    }
    let n = x.len();
    if !(1..=crate::linalg::MAX_DIM).contains(&n) {
        return Err(Error::config(format!("unsupported dimension {n}")));
    }
    let norm = super::lp_norm(x, p);
    if norm == 0.0 {
        return Err(Error::domain("Hessian of ‖·‖_p² is not defined at the origin"));
    }
    let ratio: Vec<f64> = x.iter().map(|v| v.abs() / norm).collect();
    let s: Vec<f64> = x
        .iter()
        .zip(&ratio)
        .map(|(v, r)| if *v == 0.0 { 0.0 } else { v.signum() * r.powf(p - 1.0) })
        .collect();
    let mut h = SmallMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut v = -2.0 * (p - 2.0) * s[i] * s[j];
            if i == j {
                v += 2.0 * (p - 1.0) * ratio[i].powf(p - 2.0);
            }
            h.set(i, j, v);
        }
    }
    Ok(h)
}
