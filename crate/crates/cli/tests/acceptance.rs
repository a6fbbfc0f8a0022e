//! Acceptance suite: every criterion at its stated tolerance, one PASS/FAIL
//! line each. Criteria that cannot hold for a correct implementation are
//! listed in `KNOWN_UNATTAINABLE`; they still print FAIL, and the process
//! exits nonzero on any other failure.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use aniso_core::maps::scalar_map;
use aniso_core::norms::{hessian_ellp, parse_norm};
use aniso_core::solver::{energy, energy_gradient};
use aniso_core::verify::{
    caccioppoli_ratio, fit_decay, harnack_ratio, liouville_experiment, moser_schedule, oscillation_profile, sweep,
    weak_harnack_ratio, BoundaryFamily, LiouvilleOptions, SweepSpec, VerificationReport,
};
use aniso_core::{
    classify, solve, BoxDomain, Classification, DiscreteField, DualNorm, Grid, NormModel, Problem, SolverOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sub-criteria that contradict another part of the same criterion; see
/// the line printed for each.
const KNOWN_UNATTAINABLE: &[&str] = &["2b"];

struct Outcome {
    id: &'static str,
    title: &'static str,
    passed: bool,
    detail: String,
}

struct Suite {
    outcomes: Vec<Outcome>,
}

impl Suite {
    fn record(&mut self, id: &'static str, title: &'static str, passed: bool, detail: String) {
        println!(
            "criterion {id:<3} {} {title}: {detail}",
            if passed { "PASS" } else { "FAIL" }
        );
        self.outcomes.push(Outcome {
            id,
            title,
            passed,
            detail,
        });
    }

    fn timed<T>(
        &mut self,
        id: &'static str,
        title: &'static str,
        budget: Duration,
        f: impl FnOnce() -> (bool, String, T),
    ) -> T {
        let start = Instant::now();
        let (ok, detail, value) = f();
        let elapsed = start.elapsed();
        let within = elapsed <= budget;
        let detail = format!(
            "{detail}; {:.2}s (budget {:.0}s)",
            elapsed.as_secs_f64(),
            budget.as_secs_f64()
        );
        self.record(id, title, ok && within, detail);
        value
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(r: &mut ChaCha8Rng, n: usize, a: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-a..a)).collect()
}

fn families() -> Vec<(&'static str, NormModel)> {
    vec![
        ("weighted", parse_norm("weighted(2, 0.5, 1)", 2).unwrap()),
        ("ellp", NormModel::ell_p(2, 4.0).unwrap()),
        ("rotated_ellp", NormModel::rotated_ell_p_2d(3.0, PI / 6.0).unwrap()),
        ("varexp", parse_norm("varexp(1.5, 3, 1)", 2).unwrap()),
    ]
}

// 1. Fenchel inequality, eq1 identity, homogeneity.
fn criterion_1(s: &mut Suite) {
    s.timed("1", "norm-calculus identities", Duration::from_secs(5), || {
        let mut r = rng(1);
        let mut worst_fenchel: f64 = f64::NEG_INFINITY;
        let mut worst_eq1: f64 = 0.0;
        let mut worst_hom: f64 = 0.0;
        for (_, norm) in families() {
            let dual = DualNorm::analytic(norm.clone());
            for _ in 0..1000 {
                let x = random_vec(&mut r, 2, 1.0);
                let xi = random_vec(&mut r, 2, 2.0);
                let zeta = random_vec(&mut r, 2, 2.0);
                let lhs: f64 = xi.iter().zip(&zeta).map(|(a, b)| a * b).sum();
                let rhs = norm.eval(&x, &xi) * dual.eval(&x, &zeta).unwrap();
                worst_fenchel = worst_fenchel.max(lhs - rhs);
            }
            for _ in 0..200 {
                let x = random_vec(&mut r, 2, 1.0);
                let xi = random_vec(&mut r, 2, 2.0);
                let g = norm.grad(&x, &xi).unwrap();
                worst_eq1 = worst_eq1.max((dual.eval(&x, &g).unwrap() - 1.0).abs());
            }
            for gamma in [1.5, 2.0, 3.0] {
                for _ in 0..200 {
                    let x = random_vec(&mut r, 2, 1.0);
                    let xi = random_vec(&mut r, 2, 2.0);
                    let lam: f64 = r.random_range(0.1..10.0);
                    let sxi: Vec<f64> = xi.iter().map(|v| lam * v).collect();
                    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
                    worst_hom = worst_hom.max(rel(norm.eval(&x, &sxi), lam * norm.eval(&x, &xi)));
                    let (g1, g2) = (norm.grad(&x, &xi).unwrap(), norm.grad(&x, &sxi).unwrap());
                    let (f1, f2) = (norm.flux(gamma, &x, &xi).unwrap(), norm.flux(gamma, &x, &sxi).unwrap());
                    let gn = g1.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    let fnm = f1.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    for i in 0..2 {
                        worst_hom = worst_hom.max((g2[i] - g1[i]).abs() / gn);
                        worst_hom = worst_hom.max((f2[i] - lam.powf(gamma - 1.0) * f1[i]).abs() / (lam.powf(gamma - 1.0) * fnm));
                    }
                }
            }
        }
        let ok = worst_fenchel <= 1e-9 && worst_eq1 <= 1e-7 && worst_hom <= 1e-10;
        let detail = format!(
            "4 families: max Fenchel violation {worst_fenchel:.2e} (tol 1e-9), max |rho_*(Drho)-1| {worst_eq1:.2e} (tol 1e-7), max homogeneity defect {worst_hom:.2e} (tol 1e-10)"
        );
        (ok, detail, ())
    });
}

fn lp_sq(x: &[f64], p: f64) -> f64 {
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(2.0 / p)
}

// 2. Hessian of the squared l^p norm.
fn criterion_2(s: &mut Suite) {
    s.timed(
        "2a",
        "l^p Hessian vs finite differences",
        Duration::from_secs(1),
        || {
            let mut r = rng(2);
            let p = 4.0;
            let h = 1e-4;
            let mut worst: f64 = 0.0;
            for k in 0..50 {
                let n = if k % 2 == 0 { 2 } else { 3 };
                let x = random_vec(&mut r, n, 2.0);
                let hess = hessian_ellp(p, &x).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        let mut fd = 0.0;
                        for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                            let mut y = x.clone();
                            y[i] += si * h;
                            y[j] += sj * h;
                            fd += w * lp_sq(&y, p);
                        }
                        fd /= 4.0 * h * h;
                        worst = worst.max((hess.get(i, j) - fd).abs());
                    }
                }
            }
            (
                worst <= 1e-5,
                format!("50 points, n in {{2,3}}, p=4: max |H - H_fd| {worst:.2e} (tol 1e-5)"),
                (),
            )
        },
    );
    s.timed("2b", "l^p Hessian exactly zero at basis vectors", Duration::from_secs(1), || {
        let mut max_entry: f64 = 0.0;
        let mut max_complement: f64 = 0.0;
        for n in [2, 3] {
            for k in 0..n {
                let mut e = vec![0.0; n];
                e[k] = 1.0;
                let hess = hessian_ellp(4.0, &e).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        max_entry = max_entry.max(hess.get(i, j).abs());
                        if i != k || j != k {
                            max_complement = max_complement.max(hess.get(i, j).abs());
                        }
                    }
                }
            }
        }
        let detail = format!(
            "max |H(e_k)| = {max_entry} (required 0); the finite-difference oracle of 2a gives H(e_k) = 2 e_k e_k^T by 2-homogeneity, so 2a and 2b cannot both hold; entries off the (k,k) slot are {max_complement} (the Hessian vanishes on e_k^perp)"
        );
        (max_entry == 0.0, detail, ())
    });
}

// 3. Energy gradient vs finite differences.
fn criterion_3(s: &mut Suite) {
    s.timed("3", "energy gradient vs finite differences", Duration::from_secs(30), || {
        let grid = Grid::uniform(&BoxDomain::unit(2), 16).unwrap();
        let mut worst: f64 = 0.0;
        let mut cases = 0;
        for (_, norm) in families() {
            for gamma in [1.5, 2.0, 3.0] {
                let problem = Problem::builder(grid.clone(), gamma, norm.clone())
                    .boundary(scalar_map(|x| 1.0 + x[0] * x[0] + 0.5 * x[1]))
                    .source_field(Arc::new(|x: &[f64], out: &mut [f64]| {
                        out[0] = 0.2 * x[1].sin();
                        out[1] = -0.1 * x[0];
                    }))
                    .source(scalar_map(|x| 0.3 + x[0] * x[1]))
                    .build()
                    .unwrap();
                let u = DiscreteField::from_fn(grid.clone(), |x| {
                    1.0 + x[0] * x[0] + 0.5 * x[1] + 0.3 * (3.0 * x[0]).sin() * (2.0 * x[1]).cos()
                });
                let g = energy_gradient(&problem, &u);
                let h = 1e-6;
                let mut fd = vec![0.0; g.len()];
                for &v in problem.free_nodes() {
                    let mut up = u.clone();
                    up.values_mut()[v] += h;
                    let mut dn = u.clone();
                    dn.values_mut()[v] -= h;
                    fd[v] = (energy(&problem, &up) - energy(&problem, &dn)) / (2.0 * h);
                }
                let scale = problem.free_nodes().iter().map(|&v| fd[v].abs()).fold(0.0, f64::max);
                for &v in problem.free_nodes() {
                    let denom = fd[v].abs().max(1e-3 * scale);
                    worst = worst.max((g[v] - fd[v]).abs() / denom);
                }
                cases += 1;
            }
        }
        let detail = format!(
            "{cases} cases (4 families x gamma in {{1.5,2,3}}, 16x16, F and f nonzero): max relative deviation {worst:.2e} (tol 1e-5; denominators floored at 1e-3 of the largest entry)"
        );
        (worst <= 1e-5, detail, ())
    });
}

// 4. Known-solution oracles.
fn criterion_4(s: &mut Suite) {
    use aniso_core::verify::oracle;
    let opts = SolverOptions::default();
    s.timed("4", "oracle regressions", Duration::from_secs(300), || {
        let lin = oracle::linear_oracle(&[8, 16, 32, 64], &opts).unwrap();
        let harm = oracle::harmonic_oracle(&[16, 32, 64], &opts).unwrap();
        let harm_exp = oracle::harmonic_exp_oracle(&[16, 32, 64], &opts).unwrap();
        let pseudo = oracle::pseudo_p_oracle(&[16, 32, 64], &opts).unwrap();
        let lin_worst = lin.levels.iter().map(|l| l.error).fold(0.0, f64::max);
        let errs = |r: &oracle::OracleResult| {
            r.levels.iter().map(|l| format!("{:.2e}", l.error)).collect::<Vec<_>>().join(", ")
        };
        let orders = |r: &oracle::OracleResult| r.orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(", ");
        let detail = format!(
            "(a) linear worst residual/error {lin_worst:.2e} (tol 1e-10); (b) x1^2-x2^2 errors [{}] reproduced to roundoff by the five-point-equivalent scheme, e^x sin y orders [{}] (min 1.5); (c) pseudo-4-harmonic errors [{}] strictly decreasing",
            errs(&harm),
            orders(&harm_exp),
            errs(&pseudo)
        );
        (lin.passed && harm.passed && harm_exp.passed && pseudo.passed, detail, ())
    });
}

// 5. Classification signs.
fn criterion_5(s: &mut Suite) {
    s.timed("5", "classification signs", Duration::from_secs(5), || {
        let grid = Grid::uniform(&BoxDomain::centered(2, 1.0).unwrap(), 32).unwrap();
        let norm = NormModel::euclidean(2, 1.0).unwrap();
        let mut results = Vec::new();
        for sign in [1.0, -1.0] {
            let problem = Problem::builder(grid.clone(), 2.0, norm.clone())
                .boundary(scalar_map(move |x| sign * x[0] * x[0]))
                .build()
                .unwrap();
            let u = DiscreteField::from_fn(grid.clone(), |x| sign * x[0] * x[0]);
            results.push(classify(&problem, &u, 1e-8));
        }
        let ok = results == [Classification::Subsolution, Classification::Supersolution];
        (
            ok,
            format!("x1^2 -> {}, -x1^2 -> {} (tol 1e-8)", results[0], results[1]),
            (),
        )
    });
}

// 6. Maximum principle.
fn criterion_6(s: &mut Suite) {
    s.timed("6", "maximum principle", Duration::from_secs(120), || {
        let cases = [
            ("euclidean(1)", 2.0),
            ("ellp(4)", 3.0),
            ("rotated_ellp(4, pi/6)", 1.5),
            ("varexp(1.5, 3, 1)", 2.0),
        ];
        let mut worst: f64 = f64::NEG_INFINITY;
        let mut count = 0;
        for (k, (spec, gamma)) in cases.iter().enumerate() {
            let mut sw = SweepSpec::new("mp", parse_norm(spec, 2).unwrap(), *gamma);
            sw.seed = 600 + 10 * k as u64;
            sw.boundary_family = if k % 2 == 0 {
                BoundaryFamily::Trigonometric
            } else {
                BoundaryFamily::Polynomial
            };
            let grid = Grid::uniform(&sw.domain, 32).unwrap();
            for i in 0..5 {
                let problem = sw.instance_problem(grid.clone(), i).unwrap();
                let (u, _) = solve(&problem, &SolverOptions::default()).unwrap();
                let fixed = problem.fixed_mask();
                let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
                for (v, &val) in u.values().iter().enumerate() {
                    if fixed[v] {
                        bmin = bmin.min(val);
                        bmax = bmax.max(val);
                    }
                }
                for &val in u.values() {
                    worst = worst.max(val - bmax).max(bmin - val);
                }
                count += 1;
            }
        }
        (
            worst <= 1e-9,
            format!("{count} instances, 4 norm families: max excursion beyond boundary range {worst:.2e} (tol 1e-9)"),
            (),
        )
    });
}

fn harnack_families() -> Vec<(&'static str, NormModel, f64)> {
    vec![
        ("gamma=2 Euclidean", NormModel::euclidean(2, 1.0).unwrap(), 2.0),
        ("gamma=2 EllP(4)", NormModel::ell_p(2, 4.0).unwrap(), 2.0),
        (
            "gamma=3 RotatedEllP(4, pi/6)",
            NormModel::rotated_ell_p_2d(4.0, PI / 6.0).unwrap(),
            3.0,
        ),
    ]
}

fn relative_change(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs()
}

fn linear_witness(resolution: usize) -> (Problem, DiscreteField) {
    let grid = Grid::uniform(&BoxDomain::centered(2, 2.0).unwrap(), resolution).unwrap();
    let problem = Problem::builder(grid.clone(), 2.0, NormModel::euclidean(2, 1.0).unwrap())
        .boundary(scalar_map(|x| 2.0 + x[0]))
        .build()
        .unwrap();
    let u = DiscreteField::from_fn(grid, |x| 2.0 + x[0]);
    (problem, u)
}

// 7-10 share the sweeps.
fn criteria_7_to_10(s: &mut Suite) {
    let start = Instant::now();
    let mut reports: Vec<(&'static str, VerificationReport)> = Vec::new();
    for (name, norm, gamma) in harnack_families() {
        let mut spec = SweepSpec::new(name, norm, gamma);
        spec.instances = 50;
        spec.resolutions = vec![64, 128];
        spec.seed = 7000;
        let rep = sweep(&spec).unwrap();
        reports.push((name, rep));
    }
    let sweep_time = start.elapsed();
    let summary_of = |rep: &VerificationReport, check: &str, res: usize| {
        rep.summaries
            .iter()
            .find(|x| x.check == check && x.resolution == res)
            .cloned()
            .unwrap()
    };

    // 7. Harnack.
    let mut ok7 = true;
    let mut parts = Vec::new();
    for (name, rep) in &reports {
        let a = summary_of(rep, "harnack", 64).max_ratio;
        let b = summary_of(rep, "harnack", 128).max_ratio;
        let change = relative_change(a, b);
        ok7 &= a.is_finite() && b.is_finite() && change < 0.10 && rep.failed_instances == 0;
        parts.push(format!(
            "{name}: max {a:.5} -> {b:.5} ({:.2}%, {} failed)",
            100.0 * change,
            rep.failed_instances
        ));
    }
    let (p, u) = linear_witness(128);
    let w = harnack_ratio(&p, &u, &[0.0, 0.0], 0.25).unwrap().ratio;
    let w_ok = relative_change(1.5, w) <= 0.02;
    s.record(
        "7",
        "Harnack boundedness",
        ok7 && w_ok && sweep_time <= Duration::from_secs(1200),
        format!(
            "50 instances/family at 64 and 128: {}; witness 2+x1 ratio {w:.6} vs 1.5 (tol 2%); sweeps {:.1}s (budget 1200s)",
            parts.join("; "),
            sweep_time.as_secs_f64()
        ),
    );

    // 8. Weak Harnack.
    let mut ok8 = true;
    let mut parts = Vec::new();
    for (name, rep) in &reports {
        let a = summary_of(rep, "weak_harnack", 64).min_ratio;
        let b = summary_of(rep, "weak_harnack", 128).min_ratio;
        let change = relative_change(a, b);
        ok8 &= a > 0.0 && b > 0.0 && change < 0.10;
        parts.push(format!("{name}: min {a:.5} -> {b:.5} ({:.2}%)", 100.0 * change));
    }
    // inf over B_0.2 of 2+x1 is 1.8; the denominator is R^{-2} times the
    // integral of 2+x1 over B_0.4, i.e. 4 * 2 * pi * 0.16.
    let closed = 1.8 / (4.0 * 2.0 * PI * 0.16);
    let w = weak_harnack_ratio(&p, &u, &[0.0, 0.0], 0.5, 0.4, 0.8, 1.0)
        .unwrap()
        .ratio;
    let w_ok = relative_change(closed, w) <= 0.02;
    s.record(
        "8",
        "weak Harnack lower bound",
        ok8 && w_ok,
        format!(
            "{}; witness 2+x1 ratio {w:.6} vs closed form {closed:.6} (tol 2%)",
            parts.join("; ")
        ),
    );

    // 9. Caccioppoli.
    let mut ok9 = true;
    let mut parts = Vec::new();
    for (name, rep) in &reports {
        let a = summary_of(rep, "caccioppoli", 64).max_ratio;
        let b = summary_of(rep, "caccioppoli", 128).max_ratio;
        let change = relative_change(a, b);
        ok9 &= a.is_finite() && change < 0.10;
        parts.push(format!("{name}: max {a:.5} -> {b:.5} ({:.2}%)", 100.0 * change));
    }
    let grid = Grid::uniform(&BoxDomain::centered(2, 1.0).unwrap(), 32).unwrap();
    let cp = Problem::builder(grid.clone(), 2.0, NormModel::ell_p(2, 4.0).unwrap())
        .build()
        .unwrap();
    let constant = DiscreteField::from_fn(grid, |_| 3.0);
    let c0 = caccioppoli_ratio(&cp, &constant, &[0.0, 0.0], 0.25).unwrap().ratio;
    s.record(
        "9",
        "Caccioppoli boundedness",
        ok9 && c0 == 0.0,
        format!(
            "{}; constant field ratio {c0} (reuses the criterion 7 sweeps)",
            parts.join("; ")
        ),
    );

    // 10. Oscillation decay.
    let mut ok10 = true;
    let mut parts = Vec::new();
    for (name, rep) in &reports {
        let (Some(a), Some(b)) = (rep.fitted_at(64), rep.fitted_at(128)) else {
            ok10 = false;
            parts.push(format!("{name}: no fitted exponent"));
            continue;
        };
        let change = relative_change(a.alpha_oscillation, b.alpha_oscillation);
        ok10 &= a.alpha_holder > 0.0 && b.alpha_holder > 0.0 && change < 0.15;
        ok10 &= a.instance_count == 50 && b.instance_count == 50;
        parts.push(format!(
            "{name}: median alpha {:.4} -> {:.4} ({:.2}%), min {:.4}",
            a.alpha_oscillation,
            b.alpha_oscillation,
            100.0 * change,
            a.alpha_holder.min(b.alpha_holder)
        ));
    }
    let grid = Grid::uniform(&BoxDomain::centered(2, 1.0).unwrap(), 64).unwrap();
    let lin = DiscreteField::from_fn(grid, |x| 0.6 * x[0] - 0.8 * x[1] + 1.0);
    let alpha_lin = fit_decay(&oscillation_profile(&lin, &[0.0, 0.0], 0.5, 4).unwrap(), 0.0)
        .unwrap()
        .alpha;
    let synthetic: Vec<(f64, f64)> = (0..6)
        .map(|k| {
            let r = 0.5f64.powi(k);
            (r, 2.5 * r.powf(0.7))
        })
        .collect();
    let alpha_syn = fit_decay(&synthetic, 0.0).unwrap().alpha;
    let ok_lin = (alpha_lin - 1.0).abs() <= 1e-9;
    let ok_syn = (alpha_syn - 0.7).abs() <= 1e-12;
    s.record(
        "10",
        "oscillation decay",
        ok10 && ok_lin && ok_syn,
        format!(
            "{}; linear field alpha {alpha_lin:.12}; synthetic power law alpha {alpha_syn:.15} (reuses the criterion 7 sweeps)",
            parts.join("; ")
        ),
    );
    let pin = summary_of(&reports[1].1, "harnack", 64).max_ratio;
    println!("info: regression pin, gamma=2 EllP(4) max harnack ratio at resolution 64 = {pin:.6}");
}

// 11. Moser schedule.
fn criterion_11(s: &mut Suite) {
    s.timed("11", "Moser schedule identities", Duration::from_secs(1), || {
        let mut worst_id: f64 = 0.0;
        let mut worst_sum: f64 = 0.0;
        let mut worst_rec: f64 = 0.0;
        for (n, g) in [(3, 1.5), (3, 2.0), (4, 2.0), (5, 3.0)] {
            let sched = moser_schedule(n, g, 20).unwrap();
            worst_id = worst_id.max(sched.max_identity_defect());
            worst_sum = worst_sum.max((sched.geometric_sum() - n as f64 / g).abs());
            // Independent recurrence: beta_{k+1} = (beta_k + gamma) chi - gamma from beta_1 = 0.
            let chi = n as f64 / (n as f64 - g);
            let mut beta = 0.0;
            for row in sched.rows.iter().skip(1) {
                worst_rec = worst_rec.max((row.beta - beta).abs() / (beta + g));
                beta = (beta + g) * chi - g;
            }
        }
        let ok = worst_id <= 1e-12 && worst_sum <= 1e-12 && worst_rec <= 1e-12;
        let detail = format!(
            "k <= 20: max relative defect of (beta_k+gamma)chi = beta_(k+1)+gamma {worst_id:.1e}, max |sum chi^-i - n/gamma| {worst_sum:.1e}, recurrence check {worst_rec:.1e} (tol 1e-12)"
        );
        (ok, detail, ())
    });
}

// 12. Liouville trend.
fn criterion_12(s: &mut Suite) {
    s.timed("12", "Liouville trend", Duration::from_secs(600), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (name, norm, gamma) in [
            ("gamma=2 Euclidean", NormModel::euclidean(2, 1.0).unwrap(), 2.0),
            ("gamma=3 EllP(4)", NormModel::ell_p(2, 4.0).unwrap(), 3.0),
        ] {
            let rep = liouville_experiment(&norm, gamma, &LiouvilleOptions::default()).unwrap();
            ok &= rep.is_monotone_decreasing();
            let oscs: Vec<String> = rep
                .points
                .iter()
                .map(|p| format!("{:.4e}", p.central_oscillation))
                .collect();
            let ratios: Vec<String> = rep.decay_ratios().iter().map(|r| format!("{r:.3}")).collect();
            let predicted = rep.decay_fit.as_ref().map(|f| 2f64.powf(f.alpha)).unwrap_or(f64::NAN);
            parts.push(format!(
                "{name}: osc [{}], consecutive ratios [{}] vs 2^alpha = {predicted:.3}",
                oscs.join(", "),
                ratios.join(", ")
            ));
        }
        (
            ok,
            format!(
                "L in {{1,2,4,8}}, {} cells per axis: {}",
                LiouvilleOptions::default().cells_per_axis,
                parts.join("; ")
            ),
            (),
        )
    });
}

// 13. Determinism of the CLI report.
fn criterion_13(s: &mut Suite) {
    s.timed("13", "determinism", Duration::from_secs(600), || {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(
            &cfg,
            "seed = 42\n[problem]\nnorm = \"rotated_ellp(4, pi/6)\"\ngamma = 3.0\nlo = [-1.0, -1.0]\nhi = [1.0, 1.0]\nresolution = 32\ndata = \"smooth\"\n[sweep]\ninstances = 6\nresolutions = [24, 32]\n",
        )
        .unwrap();
        let mut identical = true;
        let mut sizes = Vec::new();
        for command in ["sweep", "verify", "solve"] {
            let mut outputs = Vec::new();
            for run in 0..2 {
                let out = dir.path().join(format!("{command}{run}"));
                let status = std::process::Command::new(env!("CARGO_BIN_EXE_aniso"))
                    .args([command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
                    .output()
                    .unwrap();
                assert!(status.status.code().is_some());
                outputs.push(std::fs::read(out.join("report.json")).unwrap());
            }
            identical &= outputs[0] == outputs[1];
            sizes.push(format!("{command} {} bytes", outputs[0].len()));
        }
        (identical, format!("two runs per command byte-identical: {identical} ({})", sizes.join(", ")), ())
    });
}

fn main() {
    let start = Instant::now();
    let mut suite = Suite { outcomes: Vec::new() };
    criterion_1(&mut suite);
    criterion_2(&mut suite);
    criterion_3(&mut suite);
    criterion_4(&mut suite);
    criterion_5(&mut suite);
    criterion_6(&mut suite);
    criteria_7_to_10(&mut suite);
    criterion_11(&mut suite);
    criterion_12(&mut suite);
    criterion_13(&mut suite);

    let failed: Vec<&Outcome> = suite.outcomes.iter().filter(|o| !o.passed).collect();
    let unexpected: Vec<&&Outcome> = failed.iter().filter(|o| !KNOWN_UNATTAINABLE.contains(&o.id)).collect();
    println!(
        "acceptance: {} passed, {} failed ({} known unattainable) in {:.1}s",
        suite.outcomes.len() - failed.len(),
        failed.len(),
        failed.len() - unexpected.len(),
        start.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        for o in &unexpected {
            eprintln!("unexpected failure: criterion {} {}: {}", o.id, o.title, o.detail);
        }
        std::process::exit(1);
    }
}
