//! Anisotropic norms `ρ(x, ξ)`: evaluation, gradient in `ξ`, the
//! `γ`-homogeneous flux `ρ^{γ-1} Dρ`, convex duals and ellipticity bounds.
//!
//! Every family is positively 1-homogeneous and strictly convex in `ξ` for
//! each fixed `x`, and bounded above and below by multiples of `|ξ|`.

mod bounds;
mod dual;
mod hessian;
mod spec;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use bounds::{ellipticity_bounds, EllipticityBounds};
pub use dual::{DualMode, DualNorm};
pub use hessian::hessian_ellp;
pub use spec::{parse_norm, varexp_profile, VAREXP_PROFILES};

use crate::linalg::{SmallMat, MAX_DIM};
use crate::maps::{MatrixField, MatrixMap, ScalarMap};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormFamily {
    WeightedEuclidean,
    EllP,
    RotatedEllP,
    VariableExponent,
}

impl fmt::Display for NormFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NormFamily::WeightedEuclidean => "weighted_euclidean",
            NormFamily::EllP => "ellp",
            NormFamily::RotatedEllP => "rotated_ellp",
            NormFamily::VariableExponent => "variable_exponent",
        };
        f.write_str(s)
    }
}

#[derive(Clone)]
enum Kind {
    /// `|S(x) ξ|`, `S(x)` symmetric with spectrum in `bounds`.
    WeightedEuclidean { scale: MatrixField, bounds: (f64, f64) },
    /// `‖ξ‖_p`
    EllP { p: f64 },
    /// `‖A ξ‖_p`, `A` orthogonal.
    RotatedEllP { p: f64, rotation: SmallMat },
    /// `‖A(x) ξ‖_{p(x)}` with `p(x)` clamped to `p_range`.
    VariableExponent {
        transform: MatrixField,
        exponent: ScalarMap,
        p_range: (f64, f64),
    },
}

/// An anisotropic norm `ρ(x, ξ)` on `ℝⁿ`, `n ∈ {2, 3}`.
///
/// Immutable after construction; cloning is cheap (maps are shared).
#[derive(Clone)]
pub struct NormModel {
    dim: usize,
    kind: Kind,
    label: Arc<str>,
}

impl fmt::Debug for NormModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NormModel({}, n={})", self.label, self.dim)
    }
}

impl fmt::Display for NormModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::config(format!("norm dimension must be 2 or 3, got {dim}")))
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("norm exponent p must lie in (1, ∞), got {p}")))
    }
}

/// Hölder conjugate `p / (p - 1)`.
#[inline]
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `|a|^p` with a fast path for small integer exponents.
#[inline]
pub(crate) fn pow_abs(a: f64, p: f64) -> f64 {
    let a = a.abs();
    if p == 2.0 {
        a * a
    } else if p.fract() == 0.0 && p <= 16.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// `‖v‖_p`, scaled by the largest entry to avoid overflow.
#[inline]
pub(crate) fn lp_norm(v: &[f64], p: f64) -> f64 {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| pow_abs(x / m, p)).sum();
    m * s.powf(1.0 / p)
}

/// `‖v‖_p` and its gradient `sign(vᵢ)(|vᵢ|/‖v‖_p)^{p-1}`; `v ≠ 0`.
#[inline]
pub(crate) fn lp_norm_grad(v: &[f64], p: f64, out: &mut [f64]) -> f64 {
    let n = lp_norm(v, p);
    for (o, x) in out.iter_mut().zip(v) {
        *o = x.signum() * pow_abs(x / n, p - 1.0);
        if *x == 0.0 {
            *o = 0.0;
        }
    }
    n
}

impl NormModel {
    /// `ρ(x, ξ) = scale·|ξ|`
    pub fn euclidean(dim: usize, scale: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::config(format!("euclidean scale must be positive, got {scale}")));
        }
        Ok(NormModel {
            dim,
            kind: Kind::WeightedEuclidean {
                scale: MatrixField::Constant(SmallMat::scaled_identity(dim, scale)),
                bounds: (scale, scale),
            },
            label: format!("euclidean({scale})").into(),
        })
    }

    /// `ρ(x, ξ) = |S ξ|` for a fixed symmetric positive definite `S`.
    pub fn weighted(scale: SmallMat) -> Result<Self> {
        let dim = scale.dim();
        check_dim(dim)?;
        if !scale.is_symmetric(1e-12 * (1.0 + scale.max_abs())) {
            return Err(Error::config("weighted norm matrix must be symmetric"));
        }
        let ev = scale.symmetric_eigenvalues();
        if ev[0] <= 0.0 {
            return Err(Error::config(format!(
                "weighted norm matrix must be positive definite (smallest eigenvalue {})",
                ev[0]
            )));
        }
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                entries.push(scale.get(i, j).to_string());
            }
        }
        Ok(NormModel {
            dim,
            kind: Kind::WeightedEuclidean {
                scale: MatrixField::Constant(scale),
                bounds: (ev[0], ev[dim - 1]),
            },
            label: format!("weighted({})", entries.join(", ")).into(),
        })
    }

    /// `ρ(x, ξ) = |S(x) ξ|` where `S(x)` is symmetric with spectrum in
    /// `[s_min, s_max]`; the spectrum is checked by [`NormModel::check_at`].
    pub fn weighted_map(dim: usize, scale: MatrixMap, s_min: f64, s_max: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(s_min > 0.0 && s_min <= s_max && s_max.is_finite()) {
            return Err(Error::config(format!(
                "weighted norm bounds must satisfy 0 < s_min ≤ s_max < ∞, got [{s_min}, {s_max}]"
            )));
        }
        Ok(NormModel {
            dim,
            kind: Kind::WeightedEuclidean {
                scale: MatrixField::Varying(scale),
                bounds: (s_min, s_max),
            },
            label: format!("weighted(<map>, {s_min}, {s_max})").into(),
        })
    }

    /// `ρ(x, ξ) = ‖ξ‖_p`
    pub fn ell_p(dim: usize, p: f64) -> Result<Self> {
        check_dim(dim)?;
        check_exponent(p)?;
        Ok(NormModel {
            dim,
            kind: Kind::EllP { p },
            label: format!("ellp({p})").into(),
        })
    }

    /// `ρ(x, ξ) = ‖A ξ‖_p` with `A` orthogonal.
    pub fn rotated_ell_p(p: f64, rotation: SmallMat) -> Result<Self> {
        let dim = rotation.dim();
        check_dim(dim)?;
        check_exponent(p)?;
        if !rotation.is_orthogonal(1e-10) {
            return Err(Error::config("rotated_ellp requires an orthogonal matrix"));
        }
        let label = if dim == 2 {
            let theta = rotation.get(1, 0).atan2(rotation.get(0, 0));
            format!("rotated_ellp({p}, {theta})")
        } else {
            let mut e = Vec::new();
            for i in 0..dim {
                for j in 0..dim {
                    e.push(rotation.get(i, j).to_string());
                }
            }
            format!("rotated_ellp({p}, {})", e.join(", "))
        };
        Ok(NormModel {
            dim,
            kind: Kind::RotatedEllP { p, rotation },
            label: label.into(),
        })
    }

    /// Planar `‖R_θ ξ‖_p` with `R_θ` the rotation by `theta`.
    pub fn rotated_ell_p_2d(p: f64, theta: f64) -> Result<Self> {
        let mut m = Self::rotated_ell_p(p, SmallMat::rotation2(theta))?;
        m.label = format!("rotated_ellp({p}, {theta})").into();
        Ok(m)
    }

    /// `ρ(x, ξ) = ‖A(x) ξ‖_{p(x)}`, with `p(x)` clamped into
    /// `[p_min, p_max] ⊂ (1, ∞)` and `A(x)` invertible.
    pub fn variable_exponent(
        dim: usize,
        transform: MatrixField,
        exponent: ScalarMap,
        p_min: f64,
        p_max: f64,
    ) -> Result<Self> {
        check_dim(dim)?;
        check_exponent(p_min)?;
        check_exponent(p_max)?;
        if p_min > p_max {
            return Err(Error::config(format!(
                "varexp needs p_min ≤ p_max, got [{p_min}, {p_max}]"
            )));
        }
        if let MatrixField::Constant(a) = &transform {
            if a.dim() != dim || a.inverse().is_none() {
                return Err(Error::config(
                    "varexp transform must be an invertible matrix of matching size",
                ));
            }
        }
        Ok(NormModel {
            dim,
            kind: Kind::VariableExponent {
                transform,
                exponent,
                p_range: (p_min, p_max),
            },
            label: format!("varexp({p_min}, {p_max}, <map>)").into(),
        })
    }

    pub(crate) fn with_label(mut self, label: impl Into<Arc<str>>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn family(&self) -> NormFamily {
        match self.kind {
            Kind::WeightedEuclidean { .. } => NormFamily::WeightedEuclidean,
            Kind::EllP { .. } => NormFamily::EllP,
            Kind::RotatedEllP { .. } => NormFamily::RotatedEllP,
            Kind::VariableExponent { .. } => NormFamily::VariableExponent,
        }
    }

    /// True when `ρ(x, ·)` does not depend on `x`.
    pub fn is_x_independent(&self) -> bool {
        match &self.kind {
            Kind::WeightedEuclidean { scale, .. } => scale.is_constant(),
            Kind::EllP { .. } | Kind::RotatedEllP { .. } => true,
            Kind::VariableExponent { .. } => false,
        }
    }

    /// Every family here has a closed-form dual.
    pub fn has_analytic_dual(&self) -> bool {
        true
    }

    /// Validates the point-wise structural assumptions at `x`: spectrum of
    /// `S(x)` inside the configured bounds, invertibility of `A(x)`.
    pub fn check_at(&self, x: &[f64]) -> Result<()> {
        match &self.kind {
            Kind::WeightedEuclidean { scale, bounds } => {
                let s = scale.at(x);
                if s.dim() != self.dim || !s.is_symmetric(1e-10 * (1.0 + s.max_abs())) {
                    return Err(Error::config(format!(
                        "S(x) at {x:?} is not a symmetric {0}×{0} matrix",
                        self.dim
                    )));
                }
                let ev = s.symmetric_eigenvalues();
                let tol = 1e-12 * bounds.1;
                if ev[0] < bounds.0 - tol || ev[self.dim - 1] > bounds.1 + tol {
                    return Err(Error::config(format!(
                        "spectrum of S(x) at {x:?} is [{}, {}], outside [{}, {}]",
                        ev[0],
                        ev[self.dim - 1],
                        bounds.0,
                        bounds.1
                    )));
                }
                Ok(())
            }
            Kind::VariableExponent {
                transform, exponent, ..
            } => {
                let a = transform.at(x);
                if a.dim() != self.dim || a.inverse().is_none() {
                    return Err(Error::config(format!("A(x) at {x:?} is not invertible")));
                }
                if !exponent(x).is_finite() {
                    return Err(Error::config(format!("p(x) at {x:?} is not finite")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The exponent in effect at `x` for the ℓ^p families.
    pub fn exponent_at(&self, x: &[f64]) -> Option<f64> {
        match &self.kind {
            Kind::EllP { p } | Kind::RotatedEllP { p, .. } => Some(*p),
            Kind::VariableExponent { exponent, p_range, .. } => Some(exponent(x).clamp(p_range.0, p_range.1)),
            Kind::WeightedEuclidean { .. } => None,
        }
    }

    /// Known ellipticity constants `(ν, Λ)` where they follow from the
    /// parameters alone.
    pub fn nominal_bounds(&self) -> Option<(f64, f64)> {
        let n = self.dim as f64;
        match &self.kind {
            Kind::WeightedEuclidean { bounds, .. } => Some(*bounds),
            Kind::EllP { p } | Kind::RotatedEllP { p, .. } => {
                // ‖ξ‖_p on the Euclidean sphere ranges over [n^{1/p-1/2}, 1] for p ≥ 2
                let e = n.powf(1.0 / p - 0.5);
                Some((e.min(1.0), e.max(1.0)))
            }
            Kind::VariableExponent { .. } => None,
        }
    }

    /// `ρ(x, ξ)`; zero exactly at `ξ = 0`.
    #[inline]
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        let n = self.dim;
        let mut buf = [0.0; MAX_DIM];
        match &self.kind {
            Kind::WeightedEuclidean { scale, .. } => {
                scale.at(x).mul_vec(xi, &mut buf);
                crate::linalg::norm2(&buf[..n])
            }
            Kind::EllP { p } => lp_norm(&xi[..n], *p),
            Kind::RotatedEllP { p, rotation } => {
                rotation.mul_vec(xi, &mut buf);
                lp_norm(&buf[..n], *p)
            }
            Kind::VariableExponent {
                transform,
                exponent,
                p_range,
            } => {
                let p = exponent(x).clamp(p_range.0, p_range.1);
                transform.at(x).mul_vec(xi, &mut buf);
                lp_norm(&buf[..n], p)
            }
        }
    }

    /// Writes `Dρ(x, ·)(ξ)` into `out` and returns `ρ(x, ξ)`. Requires `ξ ≠ 0`
    /// (not checked).
    #[inline]
    pub(crate) fn eval_grad_unchecked(&self, x: &[f64], xi: &[f64], out: &mut [f64]) -> f64 {
        let n = self.dim;
        let mut buf = [0.0; MAX_DIM];
        let mut g = [0.0; MAX_DIM];
        match &self.kind {
            Kind::WeightedEuclidean { scale, .. } => {
                let s = scale.at(x);
                s.mul_vec(xi, &mut buf);
                let r = crate::linalg::norm2(&buf[..n]);
                s.tr_mul_vec(&buf, out);
                for o in out.iter_mut().take(n) {
                    *o /= r;
                }
                r
            }
            Kind::EllP { p } => lp_norm_grad(&xi[..n], *p, &mut out[..n]),
            Kind::RotatedEllP { p, rotation } => {
                rotation.mul_vec(xi, &mut buf);
                let r = lp_norm_grad(&buf[..n], *p, &mut g[..n]);
                rotation.tr_mul_vec(&g, out);
                r
            }
            Kind::VariableExponent {
                transform,
                exponent,
                p_range,
            } => {
                let p = exponent(x).clamp(p_range.0, p_range.1);
                let a = transform.at(x);
                a.mul_vec(xi, &mut buf);
                let r = lp_norm_grad(&buf[..n], p, &mut g[..n]);
                a.tr_mul_vec(&g, out);
                r
            }
        }
    }

    /// `Dρ(x, ·)(ξ)`, written into `out`.
    pub fn grad_into(&self, x: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        if xi[..self.dim].iter().all(|v| *v == 0.0) {
            return Err(Error::domain("gradient of a norm is undefined at ξ = 0"));
        }
        self.eval_grad_unchecked(x, xi, out);
        Ok(())
    }

    /// `Dρ(x, ·)(ξ)`; 0-homogeneous in `ξ`, with `⟨Dρ(ξ), ξ⟩ = ρ(ξ)`.
    pub fn grad(&self, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.grad_into(x, xi, &mut out)?;
        Ok(out)
    }

    /// Writes the flux `ρ(x, ξ)^{γ-1} Dρ(x, ·)(ξ)` into `out` (zero at
    /// `ξ = 0`) and returns `ρ(x, ξ)`. Does not validate `γ`.
    #[inline]
    pub(crate) fn flux_unchecked(&self, gamma: f64, x: &[f64], xi: &[f64], out: &mut [f64]) -> f64 {
        let n = self.dim;
        if xi[..n].iter().all(|v| *v == 0.0) {
            out[..n].iter_mut().for_each(|o| *o = 0.0);
            return 0.0;
        }
        let r = self.eval_grad_unchecked(x, xi, out);
        let w = if gamma == 2.0 { r } else { pow_abs(r, gamma - 1.0) };
        out[..n].iter_mut().for_each(|o| *o *= w);
        r
    }

    /// `ρ(x, ξ)^{γ-1} Dρ(x, ·)(ξ)`, `(γ-1)`-homogeneous in `ξ` and zero at the
    /// origin.
    pub fn flux(&self, gamma: f64, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        check_gamma(gamma)?;
        let mut out = vec![0.0; self.dim];
        self.flux_unchecked(gamma, x, xi, &mut out);
        Ok(out)
    }

    /// The norm whose value is the convex dual `ρ_*(x, ·)`.
    pub fn dual_model(&self) -> NormModel {
        let n = self.dim;
        let (kind, label) = match &self.kind {
            Kind::WeightedEuclidean { scale, bounds } => {
                let inv = match scale {
                    MatrixField::Constant(s) => MatrixField::Constant(s.inverse().expect("SPD matrix is invertible")),
                    MatrixField::Varying(f) => {
                        let f = f.clone();
                        MatrixField::Varying(Arc::new(move |x: &[f64]| f(x).inverse().expect("S(x) invertible")))
                    }
                };
                (
                    Kind::WeightedEuclidean {
                        scale: inv,
                        bounds: (1.0 / bounds.1, 1.0 / bounds.0),
                    },
                    format!("dual[{}]", self.label),
                )
            }
            Kind::EllP { p } => {
                let q = conjugate(*p);
                (Kind::EllP { p: q }, format!("ellp({q})"))
            }
            Kind::RotatedEllP { p, rotation } => {
                let q = conjugate(*p);
                (
                    Kind::RotatedEllP {
                        p: q,
                        rotation: *rotation,
                    },
                    format!("dual[{}]", self.label),
                )
            }
            Kind::VariableExponent {
                transform,
                exponent,
                p_range,
            } => {
                let inv_t = match transform {
                    MatrixField::Constant(a) => MatrixField::Constant(a.inverse().expect("invertible").transpose()),
                    MatrixField::Varying(f) => {
                        let f = f.clone();
                        MatrixField::Varying(Arc::new(move |x: &[f64]| {
                            f(x).inverse().expect("A(x) invertible").transpose()
                        }))
                    }
                };
                let (lo, hi) = *p_range;
                let e = exponent.clone();
                let dual_exponent: ScalarMap = Arc::new(move |x: &[f64]| conjugate(e(x).clamp(lo, hi)));
                (
                    Kind::VariableExponent {
                        transform: inv_t,
                        exponent: dual_exponent,
                        p_range: (conjugate(hi), conjugate(lo)),
                    },
                    format!("dual[{}]", self.label),
                )
            }
        };
        NormModel {
            dim: n,
            kind,
            label: label.into(),
        }
    }
}

/// Flux and energy exponents must exceed 1.
pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("γ must exceed 1, got {gamma}")))
    }
}
