use serde::{Deserialize, Serialize};

use crate::norms::conjugate;
use crate::{Error, Result};

/// Exponents derived from `(n, γ, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    /// `γ' = γ/(γ−1)`
    pub gamma_conjugate: f64,
    /// `δ = 1 − n/(q(γ−1))`
    pub delta: f64,
    /// `χ = n/(n−γ)`, defined for `γ < n`.
    pub chi: Option<f64>,
}

impl DerivedExponents {
    pub fn new(n: usize, gamma: f64, q: f64) -> Self {
        let nf = n as f64;
        DerivedExponents {
            gamma_conjugate: conjugate(gamma),
            delta: crate::solver::delta(n, gamma, q),
            chi: (gamma < nf).then(|| nf / (nf - gamma)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserRow {
    pub k: usize,
    pub beta: f64,
    /// `β_k + γ`
    pub exponent: f64,
    /// `r_k = r + (R−r)/2^{k+1}`
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserSchedule {
    pub n: usize,
    pub gamma: f64,
    pub chi: f64,
    pub r: f64,
    pub big_r: f64,
    pub rows: Vec<MoserRow>,
}

impl MoserSchedule {
    /// Largest violation of `(β_k+γ)χ = β_{k+1}+γ` over consecutive rows with
    /// `k ≥ 1` (at `k = 0` the schedule starts from `β₀ = 0 = β₁`).
    pub fn max_identity_defect(&self) -> f64 {
        self.rows
            .windows(2)
            .filter(|w| w[0].k >= 1)
            .map(|w| ((w[0].exponent * self.chi) - w[1].exponent).abs() / w[1].exponent)
            .fold(0.0, f64::max)
    }

    /// Partial sum `Σ_{i=0}^{m} χ^{−i}` with enough terms to reach double
    /// precision; converges to `n/γ`.
    pub fn geometric_sum(&self) -> f64 {
        let mut sum: f64 = 0.0;
        let mut term = 1.0;
        while term > 1e-18 * sum.max(1.0) {
            sum += term;
            term /= self.chi;
        }
        sum
    }
}

/// Exponent schedule of the local boundedness iteration with radii between
/// `r = 0` and `R = 1`.
pub fn moser_schedule(n: usize, gamma: f64, k_max: usize) -> Result<MoserSchedule> {
    moser_schedule_between(n, gamma, k_max, 0.0, 1.0)
}

/// `χ = n/(n−γ)`, `β₀ = 0`, `β_k = γ(χ^{k−1} − 1)` for `k ≥ 1`, exponents
/// `β_k + γ` and radii `r_k = r + (R−r)/2^{k+1}` for `k = 0..=k_max`.
pub fn moser_schedule_between(n: usize, gamma: f64, k_max: usize, r: f64, big_r: f64) -> Result<MoserSchedule> {
    let nf = n as f64;
    if n < 2 {
        return Err(Error::config(format!("dimension must be at least 2, got {n}")));
    }
    if !(gamma > 1.0 && gamma < nf) {
        return Err(Error::config(format!(
            "gamma must lie in (1, n) = (1, {n}), got {gamma}"
        )));
    }
    if !(0.0 <= r && r < big_r) {
        return Err(Error::config(format!("radii need 0 <= r < R, got r={r}, R={big_r}")));
    }
    let chi = nf / (nf - gamma);
    let rows = (0..=k_max)
        .map(|k| {
            let beta = if k == 0 {
                0.0
            } else {
                gamma * (chi.powi(k as i32 - 1) - 1.0)
            };
            MoserRow {
                k,
                beta,
                exponent: beta + gamma,
                radius: r + (big_r - r) / 2f64.powi(k as i32 + 1),
            }
        })
        .collect();
    Ok(MoserSchedule {
        n,
        gamma,
        chi,
        r,
        big_r,
        rows,
    })
}
