use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use aniso_core::grid::{read_field_csv, write_field_csv};
use aniso_core::solver::normalized_pairings;
use aniso_core::verify::{
    evaluate_checks, moser_schedule_between, oracle, sweep, BoundaryFamily, SweepSpec, VerificationReport,
};
use aniso_core::{build_grid, classify, solve, Classification, DiscreteField, Error, Grid, Problem, SolveReport};
use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use crate::config::{BoundarySpec, Command, RunConfig};
use crate::output::write_atomic;

/// Result of running one command.
#[derive(Debug)]
pub struct Outcome {
    /// The JSON report as written to disk.
    pub report: String,
    /// Human-readable summary for stdout.
    pub summary: String,
    /// Files written, in order.
    pub files: Vec<PathBuf>,
    /// False when an oracle failed, a divergence alarm fired, or the solver
    /// did not converge.
    pub success: bool,
}

/// Sweep generator equivalent to the configuration. Expression boundary data
/// map to the constant family; callers replace it.
pub fn sweep_spec(cfg: &RunConfig) -> Result<SweepSpec> {
    let p = &cfg.problem;
    let norm = p.norm_model()?;
    let mut spec = SweepSpec::new(format!("{} gamma={}", p.norm, p.gamma), norm, p.gamma);
    spec.q = p.q;
    spec.domain = p.domain()?;
    spec.resolutions = cfg.sweep.resolutions.clone();
    spec.instances = cfg.sweep.instances;
    spec.seed = cfg.seed;
    spec.boundary_family = match p.boundary_spec()? {
        BoundarySpec::Family(f) => f,
        BoundarySpec::Expression(_) => BoundaryFamily::Constant,
    };
    spec.data_family = p.data;
    spec.data_amplitude = cfg.sweep.data_amplitude;
    spec.boundary_scale = cfg.sweep.boundary_scale;
    spec.verification = cfg.verification.clone();
    spec.solver = cfg.solver.clone();
    spec.classify_tolerance = cfg.sweep.classify_tolerance;
    Ok(spec)
}

/// The single problem described by `[problem]` at `problem.resolution`;
/// random families use instance 0 of the seed.
pub fn build_problem(cfg: &RunConfig) -> Result<Problem> {
    let p = &cfg.problem;
    let grid: Arc<Grid> = Arc::new(build_grid(&p.domain()?, &vec![p.resolution; p.dim])?);
    let spec = sweep_spec(cfg)?;
    let mut data = spec.instance_data(0);
    if let BoundarySpec::Expression(e) = p.boundary_spec()? {
        data.boundary = e.to_map();
    }
    if let Some(exprs) = &p.field {
        let comps: Vec<_> = exprs
            .iter()
            .map(|s| aniso_core::expr::scalar_map_from(s, p.dim))
            .collect::<aniso_core::Result<_>>()?;
        data.field = Some(Arc::new(move |x: &[f64], out: &mut [f64]| {
            for (o, c) in out.iter_mut().zip(&comps) {
                *o = c(x);
            }
        }));
    }
    if let Some(s) = &p.source {
        data.source = Some(aniso_core::expr::scalar_map_from(s, p.dim)?);
    }
    let mut b = Problem::builder(grid, p.gamma, spec.norm.clone()).boundary(data.boundary);
    if let Some(q) = p.q {
        b = b.q(q);
    }
    if let Some(f) = data.field {
        b = b.source_field(f);
    }
    if let Some(f) = data.source {
        b = b.source(f);
    }
    if let Some(h) = &p.hole {
        b = b.hole(&h.center, h.radius);
    }
    Ok(b.build()?)
}

fn to_json(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn header(cfg: &RunConfig, command: Command) -> serde_json::Map<String, Value> {
    let p = &cfg.problem;
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(aniso_core::verify::REPORT_SCHEMA));
    m.insert("command".into(), json!(command.to_string()));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert(
        "problem".into(),
        json!({
            "norm": p.norm,
            "dim": p.dim,
            "gamma": p.gamma,
            "q": p.q_or_default(),
            "lo": p.lo,
            "hi": p.hi,
            "resolution": p.resolution,
            "boundary": p.boundary,
            "data": p.data,
        }),
    );
    m.insert("derived".into(), json!(cfg.derived));
    m
}

fn solve_json(r: &SolveReport) -> Value {
    json!({
        "converged": r.converged,
        "iterations": r.iterations,
        "initial_residual": r.initial_residual,
        "final_residual": r.final_residual,
        "target_residual": r.target_residual,
        "final_energy": r.final_energy(),
        "line_search_failures": r.line_search_failures,
        "preconditioner": r.preconditioner,
    })
}

fn field_stats(problem: &Problem, u: &DiscreteField) -> Value {
    let fixed = problem.fixed_mask();
    let (mut bmin, mut bmax, mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (v, &x) in u.values().iter().enumerate() {
        min = min.min(x);
        max = max.max(x);
        if fixed[v] {
            bmin = bmin.min(x);
            bmax = bmax.max(x);
        }
    }
    json!({"min": min, "max": max, "boundary_min": bmin, "boundary_max": bmax})
}

fn write_field(out_dir: &Path, name: &str, u: &DiscreteField, cfg: &RunConfig, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut extra = serde_json::Map::new();
    extra.insert("norm".into(), json!(cfg.problem.norm));
    extra.insert("gamma".into(), json!(cfg.problem.gamma));
    extra.insert("seed".into(), json!(cfg.seed));
    let mut buf = Vec::new();
    write_field_csv(u, extra, &mut buf)?;
    let path = out_dir.join(name);
    write_atomic(&path, &buf).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(())
}

fn write_report(out_dir: &Path, cfg: &RunConfig, report: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = out_dir.join(&cfg.output.report);
    write_atomic(&path, report.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(())
}

/// Solves, writing the field even when the solver stops early.
fn solve_problem(problem: &Problem, cfg: &RunConfig) -> Result<(DiscreteField, SolveReport)> {
    match solve(problem, &cfg.solver) {
        Ok(r) => Ok(r),
        Err(Error::NotConverged(b)) => Ok(*b),
        Err(e) => Err(e.into()),
    }
}

/// Runs `command` with the validated configuration, writing outputs into
/// `out_dir`.
pub fn run(command: Command, cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    if let Some(c) = cfg.command {
        if c != command {
            bail!("config command `{c}` does not match the requested command `{command}`");
        }
    }
    match command {
        Command::Solve => run_solve(cfg, out_dir),
        Command::Classify => run_classify(cfg, out_dir),
        Command::Verify => run_verify(cfg, out_dir),
        Command::Sweep => run_sweep(cfg, out_dir),
        Command::Oracle => run_oracle(cfg, out_dir),
        Command::Schedule => run_schedule(cfg, out_dir),
    }
}

fn run_solve(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let problem = build_problem(cfg)?;
    let (u, rep) = solve_problem(&problem, cfg)?;
    let class = classify(&problem, &u, 10.0 * rep.target_residual);
    let mut m = header(cfg, Command::Solve);
    m.insert("solver".into(), solve_json(&rep));
    m.insert("classification".into(), json!(class));
    m.insert("field".into(), field_stats(&problem, &u));
    let report = to_json(&m);
    let mut files = Vec::new();
    write_report(out_dir, cfg, &report, &mut files)?;
    write_field(out_dir, &cfg.output.field, &u, cfg, &mut files)?;
    Ok(Outcome {
        summary: format!("solve: {}; classified {class}", rep.summary()),
        report,
        files,
        success: rep.converged,
    })
}

fn candidate_field(cfg: &RunConfig, problem: &Problem) -> Result<DiscreteField> {
    let grid = problem.grid().clone();
    match (&cfg.classify.candidate, &cfg.classify.field_csv) {
        (Some(expr), None) => {
            let f = aniso_core::expr::scalar_map_from(expr, cfg.problem.dim)?;
            Ok(DiscreteField::from_fn(grid, |x| f(x)))
        }
        (None, Some(path)) => {
            let file = std::fs::File::open(path).with_context(|| format!("opening {path}"))?;
            let csv = read_field_csv(std::io::BufReader::new(file))?;
            let meta = &csv.meta;
            if meta.dim != grid.dim()
                || meta.resolution != grid.resolution()
                || meta.lo != grid.domain().lo()
                || meta.hi != grid.domain().hi()
            {
                bail!("classify.field_csv {path} was written on a different grid than [problem] describes");
            }
            Ok(DiscreteField::new(grid, csv.values)?)
        }
        _ => bail!("classify needs exactly one of classify.candidate and classify.field_csv"),
    }
}

fn run_classify(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let problem = build_problem(cfg)?;
    let u = candidate_field(cfg, &problem)?;
    let tol = cfg.classify.tolerance;
    let class = classify(&problem, &u, tol);
    let pairings = normalized_pairings(&problem, &u);
    let max = pairings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = pairings.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut m = header(cfg, Command::Classify);
    m.insert(
        "classify".into(),
        json!({"classification": class, "tolerance": tol, "max_pairing": max, "min_pairing": min}),
    );
    let report = to_json(&m);
    let mut files = Vec::new();
    write_report(out_dir, cfg, &report, &mut files)?;
    Ok(Outcome {
        summary: format!("classify: {class} (normalized pairings in [{min:.3e}, {max:.3e}], tolerance {tol:e})"),
        report,
        files,
        success: true,
    })
}

fn profile_csv(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn run_verify(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let problem = build_problem(cfg)?;
    let (u, rep) = solve_problem(&problem, cfg)?;
    let tol = cfg.sweep.classify_tolerance.unwrap_or(10.0 * rep.target_residual);
    let class = classify(&problem, &u, tol);
    let spec = sweep_spec(cfg)?;
    let checks = evaluate_checks(&problem, &u, &cfg.verification, &spec.centers(), cfg.solver.tolerance)?;
    let mut m = header(cfg, Command::Verify);
    m.insert("solver".into(), solve_json(&rep));
    m.insert("classification".into(), json!(class));
    m.insert("field".into(), field_stats(&problem, &u));
    m.insert("verification".into(), json!(cfg.verification));
    m.insert("checks".into(), json!(checks));
    let report = to_json(&m);
    let mut files = Vec::new();
    write_report(out_dir, cfg, &report, &mut files)?;
    write_field(out_dir, &cfg.output.field, &u, cfg, &mut files)?;
    let csv = profile_csv(
        "radius,osc",
        checks.oscillation_profile.iter().map(|(r, o)| format!("{r:?},{o:?}")),
    );
    let path = out_dir.join(&cfg.output.profile);
    write_atomic(&path, csv.as_bytes())?;
    files.push(path);
    let mut summary = format!("verify: {}; classified {class}\n", rep.summary());
    for c in &checks.checks {
        let _ = writeln!(summary, "  {:<13} radii {:?}: ratio {:.6}", c.check, c.radii, c.ratio);
    }
    if let Some(f) = &checks.decay_fit {
        let _ = writeln!(summary, "  fitted oscillation decay exponent {:.4}", f.alpha);
    }
    Ok(Outcome {
        summary: summary.trim_end().to_string(),
        report,
        files,
        success: rep.converged && class == Classification::Solution,
    })
}

/// Writes the sweep report and profile CSV; shared with tests that need the
/// in-memory report.
pub fn sweep_report(cfg: &RunConfig) -> Result<VerificationReport> {
    let spec = sweep_spec(cfg)?;
    if !matches!(cfg.problem.boundary_spec()?, BoundarySpec::Family(_)) {
        bail!("sweep needs a random boundary family in problem.boundary (trigonometric, polynomial or constant)");
    }
    if cfg.problem.field.is_some() || cfg.problem.source.is_some() || cfg.problem.hole.is_some() {
        bail!("sweep instances take F and f from problem.data; remove problem.field, problem.source and problem.hole");
    }
    Ok(sweep(&spec)?)
}

fn run_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let rep = sweep_report(cfg)?;
    let report = to_json(&rep);
    let mut files = Vec::new();
    write_report(out_dir, cfg, &report, &mut files)?;
    let csv = profile_csv(
        "resolution,instance,radius,osc",
        rep.instances.iter().flat_map(|i| {
            i.oscillation_profile
                .iter()
                .map(move |(r, o)| format!("{},{},{r:?},{o:?}", i.resolution, i.instance_id))
        }),
    );
    let path = out_dir.join(&cfg.output.profile);
    write_atomic(&path, csv.as_bytes())?;
    files.push(path);

    let mut summary = format!(
        "sweep: {} instances x {} resolutions, {} failed\n",
        rep.instances_per_resolution,
        rep.resolutions.len(),
        rep.failed_instances
    );
    for s in &rep.summaries {
        let _ = writeln!(
            summary,
            "  {:<40} res {:>4}: max {:.6} min {:.6} median {:.6}",
            s.key, s.resolution, s.max_ratio, s.min_ratio, s.median_ratio
        );
    }
    for f in &rep.fitted {
        let _ = writeln!(
            summary,
            "  alpha res {:>4}: median {:.4}, holder {:.4}",
            f.resolution, f.alpha_oscillation, f.alpha_holder
        );
    }
    for a in &rep.alarms {
        let _ = writeln!(summary, "  DIVERGENCE ALARM {}: {:?}", a.key, a.values);
    }
    Ok(Outcome {
        summary: summary.trim_end().to_string(),
        report,
        files,
        success: rep.alarms.is_empty(),
    })
}

fn run_oracle(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let results = oracle::run_all(&cfg.solver)?;
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(aniso_core::verify::REPORT_SCHEMA));
    m.insert("command".into(), json!("oracle"));
    m.insert("oracles".into(), json!(results));
    let report = to_json(&m);
    let mut files = Vec::new();
    write_report(out_dir, cfg, &report, &mut files)?;
    let mut summary = String::from("oracle:\n");
    for r in &results {
        let errors: Vec<String> = r
            .levels
            .iter()
            .map(|l| format!("{}:{:.3e}", l.resolution, l.error))
            .collect();
        let _ = writeln!(
            summary,
            "  {} {:<18} {} [{}]",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.criterion,
            errors.join(" ")
        );
    }
    Ok(Outcome {
        summary: summary.trim_end().to_string(),
        report,
        files,
        success: results.iter().all(|r| r.passed),
    })
}

fn run_schedule(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let p = &cfg.problem;
    let s = &cfg.schedule;
    let sched = moser_schedule_between(p.dim, p.gamma, s.k_max, s.r, s.big_r)?;
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(aniso_core::verify::REPORT_SCHEMA));
    m.insert("command".into(), json!("schedule"));
    m.insert("schedule".into(), json!(sched));
    m.insert("max_identity_defect".into(), json!(sched.max_identity_defect()));
    m.insert("geometric_sum".into(), json!(sched.geometric_sum()));
    let report = to_json(&m);
    let mut files = Vec::new();
    write_report(out_dir, cfg, &report, &mut files)?;
    let mut summary = format!(
        "schedule: n={} gamma={} chi={}\n  k beta exponent radius\n",
        p.dim, p.gamma, sched.chi
    );
    for r in &sched.rows {
        let _ = writeln!(summary, "  {} {} {} {}", r.k, r.beta, r.exponent, r.radius);
    }
    Ok(Outcome {
        summary: summary.trim_end().to_string(),
        report,
        files,
        success: true,
    })
}
