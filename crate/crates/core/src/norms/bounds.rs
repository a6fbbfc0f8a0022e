use serde::{Deserialize, Serialize};

use super::NormModel;
use crate::geometry::{compass_search_on_sphere, sphere_directions, BoxDomain};
use crate::{Error, Result};

/// Sampled ellipticity constants: extrema of `ρ(x, ξ)` over sampled points
/// and unit directions. These are inner estimates of the true `(ν, Λ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityBounds {
    pub nu: f64,
    pub lambda: f64,
    pub point_samples: usize,
    pub sphere_samples: usize,
}

const POINTS_PER_AXIS: usize = 7;

/// Extremes of `ρ(x, ·)` on the Euclidean unit sphere, for `x` on a lattice
/// of the domain, each refined by a local search on the sphere.
pub fn ellipticity_bounds(norm: &NormModel, domain: &BoxDomain, sphere_samples: usize) -> Result<EllipticityBounds> {
    let n = norm.dim();
    if domain.dim() != n {
        return Err(Error::config(format!(
            "domain dimension {} does not match norm dimension {n}",
            domain.dim()
        )));
    }
    if sphere_samples < 2 * n {
        return Err(Error::config(format!(
            "need at least {} sphere samples, got {sphere_samples}",
            2 * n
        )));
    }
    let points = if norm.is_x_independent() {
        vec![domain.center()]
    } else {
        domain.lattice(POINTS_PER_AXIS)
    };
    let dirs = sphere_directions(n, sphere_samples);
    let spacing = match n {
        2 => std::f64::consts::TAU / sphere_samples as f64,
        _ => (4.0 * std::f64::consts::PI / sphere_samples as f64).sqrt(),
    };
    let (mut nu, mut lambda) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in &points {
        let f = |d: &[f64]| norm.eval(x, d);
        let (mut lo, mut hi) = ((f64::INFINITY, dirs[0]), (f64::NEG_INFINITY, dirs[0]));
        for d in &dirs {
            let v = f(&d[..n]);
            if v < lo.0 {
                lo = (v, *d);
            }
            if v > hi.0 {
                hi = (v, *d);
            }
        }
        let ((_, vmin), _) = compass_search_on_sphere(n, lo.1, spacing, 1e-9, 10_000, false, f);
        let ((_, vmax), _) = compass_search_on_sphere(n, hi.1, spacing, 1e-9, 10_000, true, f);
        nu = nu.min(vmin.min(lo.0));
        lambda = lambda.max(vmax.max(hi.0));
    }
    Ok(EllipticityBounds {
        nu,
        lambda,
        point_samples: points.len(),
        sphere_samples,
    })
}
