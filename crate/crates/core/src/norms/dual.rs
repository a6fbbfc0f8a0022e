use serde::{Deserialize, Serialize};

use super::NormModel;
use crate::geometry::{compass_search_on_sphere, sphere_directions};
use crate::linalg::{dot, MAX_DIM};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualMode {
    /// Closed-form dual family.
    Analytic,
    /// Support function `sup_{ρ(x,ξ) ≤ 1} ξ·ζ` by sphere enumeration and
    /// local ascent.
    Numeric,
}

/// The convex dual `ρ_*(x, ζ) = sup_{ρ(x, ξ) < 1} ξ·ζ` of a norm.
#[derive(Clone, Debug)]
pub struct DualNorm {
    base: NormModel,
    mode: DualMode,
    numeric_tolerance: f64,
    directions: usize,
    max_evaluations: usize,
    analytic: NormModel,
}

impl DualNorm {
    pub fn analytic(base: NormModel) -> Self {
        Self::with_mode(base, DualMode::Analytic)
    }

    pub fn numeric(base: NormModel) -> Self {
        Self::with_mode(base, DualMode::Numeric)
    }

    pub fn with_mode(base: NormModel, mode: DualMode) -> Self {
        let analytic = base.dual_model();
        DualNorm {
            base,
            mode,
            numeric_tolerance: 1e-10,
            directions: 4096,
            max_evaluations: 20_000,
            analytic,
        }
    }

    /// Target accuracy of the numeric mode, relative to `|ζ|`.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.numeric_tolerance = tol;
        self
    }

    /// Number of sphere samples for the coarse enumeration.
    pub fn with_directions(mut self, count: usize) -> Self {
        self.directions = count.max(8);
        self
    }

    pub fn with_max_evaluations(mut self, budget: usize) -> Self {
        self.max_evaluations = budget;
        self
    }

    pub fn base(&self) -> &NormModel {
        &self.base
    }

    pub fn mode(&self) -> DualMode {
        self.mode
    }

    pub fn numeric_tolerance(&self) -> f64 {
        self.numeric_tolerance
    }

    /// `ρ_*(x, ζ)`
    pub fn eval(&self, x: &[f64], zeta: &[f64]) -> Result<f64> {
        match self.mode {
            DualMode::Analytic => Ok(self.analytic.eval(x, zeta)),
            DualMode::Numeric => self.eval_numeric(x, zeta),
        }
    }

    fn eval_numeric(&self, x: &[f64], zeta: &[f64]) -> Result<f64> {
        let n = self.base.dim();
        let zn = crate::linalg::norm2(&zeta[..n]);
        if zn == 0.0 {
            return Ok(0.0);
        }
        // ξ·ζ over the unit ρ-sphere equals ζ·d / ρ(x, d) over unit directions d.
        let score = |d: &[f64]| dot(d, &zeta[..n]) / self.base.eval(x, d);
        let mut best = (f64::NEG_INFINITY, [0.0; MAX_DIM]);
        for d in sphere_directions(n, self.directions) {
            let s = score(&d[..n]);
            if s > best.0 {
                best = (s, d);
            }
        }
        if !best.0.is_finite() || best.0 <= 0.0 {
            return Err(Error::Computation {
                message: "support function enumeration found no positive value".into(),
                best_lower_bound: best.0.max(0.0),
            });
        }
        let spacing = match n {
            2 => std::f64::consts::TAU / self.directions as f64,
            _ => (4.0 * std::f64::consts::PI / self.directions as f64).sqrt(),
        };
        // Near the maximizer the score is quadratic in the angle, so an angular
        // resolution of sqrt(tol) is enough for a relative value error of tol.
        let min_step = (self.numeric_tolerance.sqrt() * 1e-3).max(1e-14);
        let ((_, value), ok) =
            compass_search_on_sphere(n, best.1, spacing, min_step, self.max_evaluations, true, score);
        if !ok {
            return Err(Error::Computation {
                message: format!(
                    "numeric dual did not settle within {} evaluations",
                    self.max_evaluations
                ),
                best_lower_bound: value,
            });
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellp_dual_of_basis_vector() {
        let d = DualNorm::analytic(NormModel::ell_p(2, 4.0).unwrap());
        assert_eq!(d.eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        let d = DualNorm::numeric(NormModel::ell_p(2, 4.0).unwrap());
        assert!((d.eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dual_of_zero_is_zero() {
        let d = DualNorm::numeric(NormModel::ell_p(3, 3.0).unwrap());
        assert_eq!(d.eval(&[0.0; 3], &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn exhausted_budget_reports_best_lower_bound() {
        let d = DualNorm::numeric(NormModel::ell_p(2, 4.0).unwrap()).with_max_evaluations(3);
        match d.eval(&[0.0, 0.0], &[0.3, 0.7]) {
            Err(Error::Computation { best_lower_bound, .. }) => {
                let exact = DualNorm::analytic(NormModel::ell_p(2, 4.0).unwrap())
                    .eval(&[0.0, 0.0], &[0.3, 0.7])
                    .unwrap();
                assert!(best_lower_bound > 0.0 && best_lower_bound <= exact + 1e-12);
            }
            other => panic!("expected computation error, got {other:?}"),
        }
    }

    #[test]
    fn numeric_matches_analytic_in_3d() {
        let base = NormModel::ell_p(3, 3.0).unwrap();
        let a = DualNorm::analytic(base.clone());
        let n = DualNorm::numeric(base);
        for zeta in [[1.0, 2.0, -0.5], [0.1, 0.0, 0.3], [-1.0, -1.0, 1.0]] {
            let (va, vn) = (a.eval(&[0.0; 3], &zeta).unwrap(), n.eval(&[0.0; 3], &zeta).unwrap());
            assert!((va - vn).abs() < 1e-8 * va, "{va} vs {vn}");
        }
    }
}
