//! Constant-free ratios for the interior estimates satisfied by solutions:
//! Caccioppoli, local boundedness, weak Harnack, Harnack and oscillation
//! decay. Every check returns `lhs / rhs` with the unknown constant removed;
//! the estimates assert these ratios stay bounded (or, for weak Harnack,
//! bounded away from zero) across instances and mesh refinements.

mod decay;
mod liouville;
mod moser;
pub mod oracle;
mod sweep;

use serde::{Deserialize, Serialize};

pub use decay::{fit_decay, oscillation_profile, DecayFit};
pub use liouville::{liouville_experiment, LiouvilleBoundary, LiouvilleOptions, LiouvillePoint, LiouvilleReport};
pub use moser::{moser_schedule, moser_schedule_between, DerivedExponents, MoserRow, MoserSchedule};
pub use sweep::{
    evaluate_checks, sweep, BoundaryFamily, CheckSummary, DataFamily, DivergenceAlarm, FieldChecks, FittedExponents,
    InstanceData, InstanceRecord, SweepSpec, VerificationConfig, VerificationReport, REPORT_SCHEMA,
};

use crate::grid::{ball_integrate, ball_stats, DiscreteField};
use crate::linalg::MAX_DIM;
use crate::solver::Problem;
use crate::{Error, Result};

/// One evaluated inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub check: String,
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub lhs: f64,
    pub rhs_without_c: f64,
    /// `lhs / rhs_without_c`; `+∞` (serialized as `null`) when the
    /// denominator vanishes.
    pub ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

impl RatioRecord {
    fn new(check: &str, center: &[f64], radii: &[f64], lhs: f64, rhs: f64) -> Self {
        RatioRecord {
            check: check.to_string(),
            center: center.to_vec(),
            radii: radii.to_vec(),
            lhs,
            rhs_without_c: rhs,
            ratio: lhs / rhs,
            flag: None,
        }
    }
}

fn require_ball(u: &DiscreteField, center: &[f64], r: f64, what: &str) -> Result<()> {
    let grid = u.grid();
    if center.len() != grid.dim() {
        return Err(Error::domain(format!("{what}: center has wrong dimension")));
    }
    if !grid.domain().contains_ball(center, r, grid.h()) {
        return Err(Error::domain(format!(
            "{what}: ball of radius {r} at {center:?} does not fit in the grid box with a one-cell margin"
        )));
    }
    Ok(())
}

/// `(∫_B g^q)^{1/q}` over sub-samples of the ball, or the sample maximum for
/// `q = ∞`.
fn lq_over_ball(u: &DiscreteField, center: &[f64], r: f64, q: f64, g: impl Fn(&[f64]) -> f64) -> Result<f64> {
    if q == f64::INFINITY {
        let mut max: f64 = 0.0;
        ball_integrate(u.grid(), center, r, |_, x, _| {
            max = max.max(g(x).abs());
            0.0
        })?;
        return Ok(max);
    }
    Ok(ball_integrate(u.grid(), center, r, |_, x, _| g(x).abs().powf(q))?.powf(1.0 / q))
}

/// `‖ρ_*(·, F)‖_{L^a(B_r)}^{1/(γ−1)}`; zero when `F ≡ 0`.
fn field_term(problem: &Problem, u: &DiscreteField, center: &[f64], r: f64, a: f64) -> Result<f64> {
    let Some(fmap) = problem.source_field() else {
        return Ok(0.0);
    };
    let dual = problem.norm().dual_model();
    let n = problem.dim();
    let v = lq_over_ball(u, center, r, a, |x| {
        let mut f = [0.0; MAX_DIM];
        fmap(x, &mut f[..n]);
        dual.eval(x, &f[..n])
    })?;
    Ok(v.powf(1.0 / (problem.gamma() - 1.0)))
}

/// `‖f‖_{L^a(B_r)}^{1/(γ−1)}`; zero when `f ≡ 0`.
fn source_term(problem: &Problem, u: &DiscreteField, center: &[f64], r: f64, a: f64) -> Result<f64> {
    let Some(f) = problem.source() else {
        return Ok(0.0);
    };
    let v = lq_over_ball(u, center, r, a, |x| f(x))?;
    Ok(v.powf(1.0 / (problem.gamma() - 1.0)))
}

/// The data part `R^δ‖ρ_*(F)‖_{L^q}^{1/(γ−1)} + R^{γ'δ}‖f‖_{L^{q/γ'}}^{1/(γ−1)}`
/// over `B_ball`.
fn data_terms(problem: &Problem, u: &DiscreteField, center: &[f64], big_r: f64, ball: f64) -> Result<f64> {
    let q = problem.q();
    let gc = problem.gamma_conjugate();
    let delta = problem.delta();
    let ff = field_term(problem, u, center, ball, q)?;
    let fs = source_term(problem, u, center, ball, q / gc)?;
    Ok(big_r.powf(delta) * ff + big_r.powf(gc * delta) * fs)
}

fn positive_part_lp(u: &DiscreteField, center: &[f64], r: f64, p: f64) -> Result<f64> {
    let v = ball_integrate(u.grid(), center, r, |c, _, bary| {
        let val = u.value_in_cell(c, bary).max(0.0);
        if p == 1.0 {
            val
        } else {
            val.powf(p)
        }
    })?;
    Ok(v.powf(1.0 / p))
}

/// Caccioppoli ratio
/// `‖ρ(x,Du)‖_{L^γ(B_R)} / [R⁻¹‖u‖_{L^γ(B_2R)} + ‖ρ_*(F)‖_{L^{γ'}(B_2R)}^{1/(γ−1)} + R^{1/(γ−1)}‖f‖_{L^{γ'}(B_2R)}^{1/(γ−1)}]`.
///
/// Returns 0 when both sides vanish.
pub fn caccioppoli_ratio(problem: &Problem, u: &DiscreteField, center: &[f64], big_r: f64) -> Result<RatioRecord> {
    if !(big_r > 0.0 && big_r <= 10.0) {
        return Err(Error::config(format!(
            "caccioppoli radius must lie in (0, 10], got {big_r}"
        )));
    }
    require_ball(u, center, 2.0 * big_r, "caccioppoli_ratio")?;
    let gamma = problem.gamma();
    let gc = problem.gamma_conjugate();
    let norm = problem.norm();
    let n = problem.dim();
    let mut du = [0.0; MAX_DIM];
    let lhs = ball_integrate(u.grid(), center, big_r, |c, x, _| {
        u.cell_gradient_into(c, &mut du);
        norm.eval(x, &du[..n]).powf(gamma)
    })?
    .powf(1.0 / gamma);
    let u_term = ball_stats(u, center, 2.0 * big_r, gamma)? / big_r;
    let ff = field_term(problem, u, center, 2.0 * big_r, gc)?;
    let fs = source_term(problem, u, center, 2.0 * big_r, gc)?;
    let rhs = u_term + ff + big_r.powf(1.0 / (gamma - 1.0)) * fs;
    let mut rec = RatioRecord::new("caccioppoli", center, &[big_r, 2.0 * big_r], lhs, rhs);
    if rhs == 0.0 {
        if lhs == 0.0 {
            rec.ratio = 0.0;
            rec.flag = Some("both sides vanish".into());
        } else {
            rec.ratio = f64::INFINITY;
            rec.flag = Some("vanishing denominator".into());
        }
    }
    Ok(rec)
}

/// Local boundedness ratio
/// `sup_{B_r} u⁺ / [(R−r)^{−n/p}‖u⁺‖_{L^p(B_R)} + R^δ‖ρ_*(F)‖_{L^q(B_R)}^{1/(γ−1)} + R^{γ'δ}‖f‖_{L^{q/γ'}(B_R)}^{1/(γ−1)}]`.
pub fn sup_bound_ratio(
    problem: &Problem,
    u: &DiscreteField,
    center: &[f64],
    r: f64,
    big_r: f64,
    p: f64,
) -> Result<RatioRecord> {
    if !(0.0 < r && r < big_r && big_r < 1.0) {
        return Err(Error::config(format!(
            "sup_bound radii need 0 < r < R < 1, got r={r}, R={big_r}"
        )));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::config(format!(
            "sup_bound exponent p must be positive and finite, got {p}"
        )));
    }
    require_ball(u, center, big_r, "sup_bound_ratio")?;
    let n = problem.dim() as f64;
    let lhs = ball_stats(u, center, r, f64::INFINITY)?.max(0.0);
    let rhs = (big_r - r).powf(-n / p) * positive_part_lp(u, center, big_r, p)?
        + data_terms(problem, u, center, big_r, big_r)?;
    let mut rec = RatioRecord::new("sup_bound", center, &[r, big_r], lhs, rhs);
    if rhs == 0.0 {
        rec.ratio = if lhs == 0.0 { 0.0 } else { f64::INFINITY };
        rec.flag = Some("vanishing denominator".into());
    }
    Ok(rec)
}

/// Largest admissible weak-Harnack exponent `n(γ−1)/(n−γ)` (`∞` for `γ ≥ n`).
pub fn weak_harnack_p_limit(n: usize, gamma: f64) -> f64 {
    let nf = n as f64;
    if gamma >= nf {
        f64::INFINITY
    } else {
        nf * (gamma - 1.0) / (nf - gamma)
    }
}

/// Weak Harnack ratio
/// `[inf_{B_θR} u⁺ + R^δ‖ρ_*(F)‖_{L^q(B_R)}^{1/(γ−1)} + R^{γ'δ}‖f‖_{L^{q/γ'}(B_R)}^{1/(γ−1)}] / [R^{−n/p}‖u⁺‖_{L^p(B_τR)}]`,
/// which the estimate bounds from below. A vanishing denominator gives `+∞`.
pub fn weak_harnack_ratio(
    problem: &Problem,
    u: &DiscreteField,
    center: &[f64],
    big_r: f64,
    theta: f64,
    tau: f64,
    p: f64,
) -> Result<RatioRecord> {
    if !(0.0 < theta && theta < tau && tau < 1.0) {
        return Err(Error::config(format!(
            "weak_harnack needs 0 < theta < tau < 1, got theta={theta}, tau={tau}"
        )));
    }
    let limit = weak_harnack_p_limit(problem.dim(), problem.gamma());
    if !(p > 0.0 && p < limit) {
        return Err(Error::config(format!(
            "weak_harnack exponent p must lie in (0, {limit}), got {p}"
        )));
    }
    require_ball(u, center, 2.0 * big_r, "weak_harnack_ratio")?;
    let n = problem.dim() as f64;
    let num = ball_stats(u, center, theta * big_r, f64::NEG_INFINITY)?.max(0.0)
        + data_terms(problem, u, center, big_r, big_r)?;
    let den = big_r.powf(-n / p) * positive_part_lp(u, center, tau * big_r, p)?;
    let mut rec = RatioRecord::new("weak_harnack", center, &[theta * big_r, tau * big_r, big_r], num, den);
    if den == 0.0 {
        rec.ratio = f64::INFINITY;
        rec.flag = Some("vanishing denominator".into());
    }
    Ok(rec)
}

/// Harnack ratio
/// `sup_{B_R} u / [inf_{B_2R} u + R^δ‖ρ_*(F)‖_{L^q(B_3R)}^{1/(γ−1)} + R^{γ'δ}‖f‖_{L^{q/γ'}(B_3R)}^{1/(γ−1)}]`.
/// `0/0` returns 1 with a flag.
pub fn harnack_ratio(problem: &Problem, u: &DiscreteField, center: &[f64], big_r: f64) -> Result<RatioRecord> {
    if !(big_r > 0.0) {
        return Err(Error::config(format!("harnack radius must be positive, got {big_r}")));
    }
    require_ball(u, center, 3.0 * big_r, "harnack_ratio")?;
    let num = ball_stats(u, center, big_r, f64::INFINITY)?.max(0.0);
    let den = ball_stats(u, center, 2.0 * big_r, f64::NEG_INFINITY)?.max(0.0)
        + data_terms(problem, u, center, big_r, 3.0 * big_r)?;
    let mut rec = RatioRecord::new("harnack", center, &[big_r, 2.0 * big_r, 3.0 * big_r], num, den);
    if den == 0.0 {
        if num == 0.0 {
            rec.ratio = 1.0;
            rec.flag = Some("0/0".into());
        } else {
            rec.ratio = f64::INFINITY;
            rec.flag = Some("vanishing denominator".into());
        }
    }
    Ok(rec)
}

/// `|B_r|` in dimension `n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    match n {
        2 => std::f64::consts::PI * r * r,
        3 => 4.0 / 3.0 * std::f64::consts::PI * r * r * r,
        _ => {
            let nf = n as f64;
            std::f64::consts::PI.powf(nf / 2.0) / gamma_fn(nf / 2.0 + 1.0) * r.powf(nf)
        }
    }
}

/// Γ(x) for half-integer and integer arguments ≥ 1/2.
fn gamma_fn(x: f64) -> f64 {
    if (x - 0.5).abs() < 1e-12 {
        return std::f64::consts::PI.sqrt();
    }
    if (x - 1.0).abs() < 1e-12 {
        return 1.0;
    }
    (x - 1.0) * gamma_fn(x - 1.0)
}
