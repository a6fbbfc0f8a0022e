use serde::{Deserialize, Serialize};

use crate::linalg::MAX_DIM;
use crate::{Error, Result};

/// Axis-aligned box `[lo₁, hi₁] × … × [loₙ, hiₙ]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || !(2..=MAX_DIM).contains(&lo.len()) {
            return Err(Error::config(format!(
                "box must have matching corners in dimension 2 or 3 (got {} and {})",
                lo.len(),
                hi.len()
            )));
        }
        for (a, b) in lo.iter().zip(hi) {
            if !(a.is_finite() && b.is_finite()) || b <= a {
                return Err(Error::config(format!("degenerate box side [{a}, {b}]")));
            }
        }
        Ok(BoxDomain {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        })
    }

    /// `[0, 1]ⁿ`
    pub fn unit(dim: usize) -> Self {
        Self::new(&vec![0.0; dim], &vec![1.0; dim]).expect("unit box")
    }

    /// `[-half, half]ⁿ`
    pub fn centered(dim: usize, half: f64) -> Result<Self> {
        Self::new(&vec![-half; dim], &vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Whether the closed ball `B_r(center)` stays at least `margin` away
    /// from the complement of the box.
    pub fn contains_ball(&self, center: &[f64], r: f64, margin: f64) -> bool {
        let slack = 1e-12 * (1.0 + r);
        center.len() == self.dim()
            && r >= 0.0
            && (0..self.dim())
                .all(|i| center[i] - r - margin >= self.lo[i] - slack && center[i] + r + margin <= self.hi[i] + slack)
    }

    /// Points of a regular lattice with `per_axis` points per axis (cell
    /// midpoints, so they lie strictly inside the box).
    pub fn lattice(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut k| {
                (0..n)
                    .map(|i| {
                        let j = k % per_axis;
                        k /= per_axis;
                        self.lo[i] + (self.hi[i] - self.lo[i]) * (j as f64 + 0.5) / per_axis as f64
                    })
                    .collect()
            })
            .collect()
    }
}

/// Deterministic, roughly uniform directions on the unit sphere: equally
/// spaced angles in 2D, a Fibonacci lattice in 3D.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<[f64; MAX_DIM]> {
    let count = count.max(1);
    match dim {
        2 => (0..count)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / count as f64;
                [t.cos(), t.sin(), 0.0]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let t = golden * j as f64;
                    [rho * t.cos(), rho * t.sin(), z]
                })
                .collect()
        }
        _ => panic!("sphere directions need dimension 2 or 3"),
    }
}

/// Local optimization of `f` on the unit sphere by compass search in the
/// tangent plane, starting from `start` with initial angular step `step`.
///
/// Returns the best direction and value, or `None` if the evaluation budget
/// ran out before the step shrank below `min_step`.
pub(crate) fn compass_search_on_sphere(
    dim: usize,
    start: [f64; MAX_DIM],
    step: f64,
    min_step: f64,
    max_evals: usize,
    maximize: bool,
    mut f: impl FnMut(&[f64]) -> f64,
) -> (([f64; MAX_DIM], f64), bool) {
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut d = start;
    let mut best = sign * f(&d[..dim]);
    let mut t = step;
    let mut evals = 1;
    while t > min_step {
        if evals >= max_evals {
            return ((d, sign * best), false);
        }
        let basis = tangent_basis(dim, &d);
        let mut improved = false;
        for b in basis.iter().take(dim - 1) {
            for s in [1.0, -1.0] {
                let mut c = [0.0; MAX_DIM];
                for i in 0..dim {
                    c[i] = d[i] + s * t * b[i];
                }
                let len = crate::linalg::norm2(&c[..dim]);
                for v in c.iter_mut().take(dim) {
                    *v /= len;
                }
                let v = sign * f(&c[..dim]);
                evals += 1;
                if v > best {
                    best = v;
                    d = c;
                    improved = true;
                }
            }
        }
        if !improved {
            t *= 0.5;
        }
    }
    ((d, sign * best), true)
}

fn tangent_basis(dim: usize, d: &[f64; MAX_DIM]) -> [[f64; MAX_DIM]; 2] {
    if dim == 2 {
        return [[-d[1], d[0], 0.0], [0.0; MAX_DIM]];
    }
    // pick the axis least aligned with d
    let mut axis = 0;
    for i in 1..3 {
        if d[i].abs() < d[axis].abs() {
            axis = i;
        }
    }
    let mut e = [0.0; MAX_DIM];
    e[axis] = 1.0;
    let proj = crate::linalg::dot(&e, d);
    let mut u = [e[0] - proj * d[0], e[1] - proj * d[1], e[2] - proj * d[2]];
    let len = crate::linalg::norm2(&u);
    u.iter_mut().for_each(|v| *v /= len);
    let w = [
        d[1] * u[2] - d[2] * u[1],
        d[2] * u[0] - d[0] * u[2],
        d[0] * u[1] - d[1] * u[0],
    ];
    [u, w]
}
