use serde::{Deserialize, Serialize};

use crate::grid::{oscillation, DiscreteField};
use crate::{Error, Result};

/// Oscillations over the nested balls `B_{R0·2^{-k}}(center)`,
/// `k = 0..levels`, as `(radius, osc)` pairs from the largest ball down.
pub fn oscillation_profile(u: &DiscreteField, center: &[f64], r0: f64, levels: usize) -> Result<Vec<(f64, f64)>> {
    if levels < 3 {
        return Err(Error::config(format!(
            "oscillation_profile needs at least 3 levels, got {levels}"
        )));
    }
    (0..levels)
        .map(|k| {
            let r = r0 * 0.5f64.powi(k as i32);
            oscillation(u, center, r).map(|o| (r, o))
        })
        .collect()
}

/// Least-squares power law `osc ≈ C·r^α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub alpha: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub points_used: usize,
}

/// Slope of `log(osc)` against `log(radius)` over the profile points with
/// `osc > tail_floor`.
pub fn fit_decay(profile: &[(f64, f64)], tail_floor: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(r, o)| *r > 0.0 && *o > tail_floor && *o > 0.0)
        .map(|(r, o)| (r.ln(), o.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} profile points above the floor {tail_floor:e}; need at least 3",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all retained radii coincide".into()));
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - alpha * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(DecayFit {
        alpha,
        residual,
        points_used: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;
    use crate::grid::Grid;

    #[test]
    fn exact_power_law() {
        let profile: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let r = 0.5f64.powi(k);
                (r, 3.0 * r.powf(0.7))
            })
            .collect();
        let fit = fit_decay(&profile, 0.0).unwrap();
        assert!((fit.alpha - 0.7).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn floor_excludes_tail() {
        let profile = vec![(1.0, 1.0), (0.5, 0.5), (0.25, 1e-12), (0.125, 1e-13)];
        assert!(matches!(fit_decay(&profile, 1e-9), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn linear_field_profile() {
        let g = Grid::uniform(&BoxDomain::centered(2, 1.0).unwrap(), 64).unwrap();
        let u = DiscreteField::from_fn(g, |x| 0.6 * x[0] - 0.8 * x[1]);
        let prof = oscillation_profile(&u, &[0.0, 0.0], 0.5, 4).unwrap();
        for (r, o) in &prof {
            assert!((o - 2.0 * r).abs() < 1e-12);
        }
        let fit = fit_decay(&prof, 0.0).unwrap();
        assert!((fit.alpha - 1.0).abs() < 1e-10);
        assert!(oscillation_profile(&u, &[0.0, 0.0], 0.5, 2).is_err());
    }

    #[test]
    fn profile_of_constant_is_zero() {
        let g = Grid::uniform(&BoxDomain::centered(2, 1.0).unwrap(), 16).unwrap();
        let u = DiscreteField::from_fn(g, |_| 1.5);
        assert!(oscillation_profile(&u, &[0.0, 0.0], 0.5, 3)
            .unwrap()
            .iter()
            .all(|p| p.1 == 0.0));
    }
}
