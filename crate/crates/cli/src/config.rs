//! TOML run configuration.
//!
//! ```toml
//! command = "sweep"          # optional; must match the subcommand if given
//! seed = 7
//!
//! [problem]
//! norm = "ellp(4)"           # norm grammar of aniso_core::norms::parse_norm
//! dim = 2
//! gamma = 2.0
//! q = 8.0                    # optional, defaults to 2n/(gamma-1)
//! lo = [-1.0, -1.0]          # optional box, defaults to [0, 1]^n
//! hi = [1.0, 1.0]
//! resolution = 64
//! boundary = "trigonometric" # preset (trigonometric, polynomial, constant) or expression in x1..xn
//! data = "zero"              # preset for F and f: zero, smooth, singular
//! field = ["0.1*sin(x1)", "0"] # optional F as expressions (data must be "zero")
//! source = "0.5"             # optional f as an expression (data must be "zero")
//! hole = { center = [0.0, 0.0], radius = 0.25 }
//!
//! [solver]        # aniso_core::SolverOptions
//! [verification]  # aniso_core::verify::VerificationConfig
//! [sweep]         # instances, resolutions, data_amplitude, boundary_scale, classify_tolerance
//! [classify]      # candidate expression or field_csv path, tolerance
//! [schedule]      # k_max, r, big_r (dim and gamma come from [problem])
//! [output]        # report, field, profile file names inside --out
//! ```
//!
//! The canonical form printed by [`RunConfig::to_canonical`] spells out every
//! default and appends a `[derived]` table with `gamma_conjugate`, `delta` and
//! `chi`; parsing ignores that table's values and recomputes them.

use std::fmt;

use aniso_core::expr::Expr;
use aniso_core::norms::parse_norm;
use aniso_core::verify::{BoundaryFamily, DataFamily, DerivedExponents, VerificationConfig};
use aniso_core::{BoxDomain, NormModel, SolverOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid TOML configuration: {0}")]
    Syntax(String),
    #[error("{key}: {message}")]
    Constraint { key: String, message: String },
}

fn constraint(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Constraint {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Classify,
    Verify,
    Sweep,
    Oracle,
    Schedule,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Solve => "solve",
            Command::Classify => "classify",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Oracle => "oracle",
            Command::Schedule => "schedule",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleConfig {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub norm: String,
    pub dim: usize,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: usize,
    pub boundary: String,
    pub data: DataFamily,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hole: Option<HoleConfig>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            norm: "euclidean(1)".into(),
            dim: 2,
            gamma: 2.0,
            q: None,
            lo: Vec::new(),
            hi: Vec::new(),
            resolution: 32,
            boundary: "trigonometric".into(),
            data: DataFamily::Zero,
            field: None,
            source: None,
            hole: None,
        }
    }
}

/// Boundary data: a random family or an expression.
#[derive(Clone, Debug)]
pub enum BoundarySpec {
    Family(BoundaryFamily),
    Expression(Expr),
}

impl ProblemConfig {
    pub fn boundary_spec(&self) -> Result<BoundarySpec, ConfigError> {
        let family = match self.boundary.trim() {
            "trigonometric" => Some(BoundaryFamily::Trigonometric),
            "polynomial" => Some(BoundaryFamily::Polynomial),
            "constant" => Some(BoundaryFamily::Constant),
            _ => None,
        };
        if let Some(f) = family {
            return Ok(BoundarySpec::Family(f));
        }
        let e = parse_expr("problem.boundary", &self.boundary, self.dim)?;
        Ok(BoundarySpec::Expression(e))
    }

    pub fn domain(&self) -> Result<BoxDomain, ConfigError> {
        BoxDomain::new(&self.lo, &self.hi).map_err(|e| constraint("problem.lo/hi", e.to_string()))
    }

    pub fn norm_model(&self) -> Result<NormModel, ConfigError> {
        parse_norm(&self.norm, self.dim).map_err(|e| constraint("problem.norm", e.to_string()))
    }

    /// `q`, or its default `2n/(γ−1)`.
    pub fn q_or_default(&self) -> f64 {
        self.q.unwrap_or(2.0 * self.dim as f64 / (self.gamma - 1.0))
    }
}

fn parse_expr(key: &str, source: &str, dim: usize) -> Result<Expr, ConfigError> {
    let e = Expr::parse(source).map_err(|e| constraint(key, e.to_string()))?;
    e.check_dim(dim).map_err(|e| constraint(key, e.to_string()))?;
    Ok(e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub instances: usize,
    /// Defaults to `[problem.resolution]`.
    pub resolutions: Vec<usize>,
    pub data_amplitude: f64,
    pub boundary_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classify_tolerance: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            instances: 5,
            resolutions: Vec::new(),
            data_amplitude: 0.1,
            boundary_scale: 1.0,
            classify_tolerance: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    /// Candidate field as an expression in `x1..xn`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<String>,
    /// Candidate field read from a CSV written by `solve`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_csv: Option<String>,
    pub tolerance: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            candidate: None,
            field_csv: None,
            tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub k_max: usize,
    pub r: f64,
    pub big_r: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            k_max: 5,
            r: 0.0,
            big_r: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub report: String,
    pub field: String,
    pub profile: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            report: "report.json".into(),
            field: "field.csv".into(),
            profile: "profile.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivedSection {
    pub gamma_conjugate: f64,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
}

impl From<DerivedExponents> for DerivedSection {
    fn from(d: DerivedExponents) -> Self {
        DerivedSection {
            gamma_conjugate: d.gamma_conjugate,
            delta: d.delta,
            chi: d.chi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub seed: u64,
    pub problem: ProblemConfig,
    pub solver: SolverOptions,
    pub verification: VerificationConfig,
    pub sweep: SweepConfig,
    pub classify: ClassifyConfig,
    pub schedule: ScheduleConfig,
    pub output: OutputConfig,
    /// Recomputed on every parse.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derived: Option<DerivedSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            seed: 0,
            problem: ProblemConfig::default(),
            solver: SolverOptions::default(),
            verification: VerificationConfig {
                p: 2.0,
                ..Default::default()
            },
            sweep: SweepConfig::default(),
            classify: ClassifyConfig::default(),
            schedule: ScheduleConfig::default(),
            output: OutputConfig::default(),
            derived: None,
        }
    }
}

/// Parses and validates a configuration, filling defaults and the derived
/// exponents.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    cfg.normalize();
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Fills defaults that depend on other keys.
    fn normalize(&mut self) {
        let n = self.problem.dim;
        if self.problem.lo.is_empty() && self.problem.hi.is_empty() {
            self.problem.lo = vec![0.0; n];
            self.problem.hi = vec![1.0; n];
        }
        if self.sweep.resolutions.is_empty() {
            self.sweep.resolutions = vec![self.problem.resolution];
        }
        self.refresh_derived();
    }

    fn refresh_derived(&mut self) {
        let p = &self.problem;
        self.derived =
            (p.gamma > 1.0 && p.dim >= 2).then(|| DerivedExponents::new(p.dim, p.gamma, p.q_or_default()).into());
    }

    /// Applies the `--seed` and `--resolution` overrides, refreshes the
    /// derived exponents and validates again.
    pub fn apply_overrides(&mut self, seed: Option<u64>, resolution: Option<usize>) -> Result<(), ConfigError> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(r) = resolution {
            self.problem.resolution = r;
            self.sweep.resolutions = vec![r];
        }
        self.refresh_derived();
        self.validate()
    }

    /// Checks every constraint; errors name the key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.problem;
        let n = p.dim;
        if !(p.gamma > 1.0 && p.gamma.is_finite()) {
            return Err(constraint(
                "problem.gamma",
                format!("must satisfy gamma > 1, got {}", p.gamma),
            ));
        }
        if self.command == Some(Command::Schedule) {
            // The schedule only needs (n, gamma) and works in any dimension.
            if n < 2 {
                return Err(constraint("problem.dim", format!("must be at least 2, got {n}")));
            }
            if p.gamma >= n as f64 {
                return Err(constraint(
                    "problem.gamma",
                    format!("schedule requires 1 < gamma < n = {n}, got {}", p.gamma),
                ));
            }
            let sc = &self.schedule;
            if !(0.0 <= sc.r && sc.r < sc.big_r) {
                return Err(constraint(
                    "schedule.r",
                    format!("need 0 <= r < big_r, got r={}, big_r={}", sc.r, sc.big_r),
                ));
            }
            return Ok(());
        }
        if !(2..=3).contains(&n) {
            return Err(constraint("problem.dim", format!("must be 2 or 3, got {n}")));
        }
        if let Some(q) = p.q {
            let bound = n as f64 / (p.gamma - 1.0);
            if !(q > bound) {
                return Err(constraint(
                    "problem.q",
                    format!("must satisfy q > n/(gamma-1) = {bound}, got {q}"),
                ));
            }
        }
        if p.lo.len() != n || p.hi.len() != n {
            return Err(constraint("problem.lo/hi", format!("need {n} coordinates each")));
        }
        p.domain()?;
        p.norm_model()?;
        if p.resolution == 0 {
            return Err(constraint("problem.resolution", "must be at least 1"));
        }
        p.boundary_spec()?;
        if let Some(field) = &p.field {
            if field.len() != n {
                return Err(constraint("problem.field", format!("needs {n} component expressions")));
            }
            for s in field {
                parse_expr("problem.field", s, n)?;
            }
        }
        if let Some(s) = &p.source {
            parse_expr("problem.source", s, n)?;
        }
        if (p.field.is_some() || p.source.is_some()) && p.data != DataFamily::Zero {
            return Err(constraint(
                "problem.data",
                "must be \"zero\" when problem.field or problem.source is given",
            ));
        }
        if let Some(h) = &p.hole {
            if h.center.len() != n || !(h.radius > 0.0) {
                return Err(constraint(
                    "problem.hole",
                    "needs an n-dimensional center and a positive radius",
                ));
            }
        }
        let s = &self.solver;
        if !(s.tolerance >= 0.0 && s.tolerance.is_finite()) {
            return Err(constraint("solver.tolerance", "must be finite and >= 0"));
        }
        if !(s.absolute_tolerance >= 0.0 && s.absolute_tolerance.is_finite()) {
            return Err(constraint("solver.absolute_tolerance", "must be finite and >= 0"));
        }
        if !(s.epsilon_regularization >= 0.0 && s.epsilon_regularization.is_finite()) {
            return Err(constraint("solver.epsilon_regularization", "must be finite and >= 0"));
        }
        self.verification.validate(n, p.gamma).map_err(|e| match e {
            aniso_core::Error::Config(m) => match m.split_once(": ") {
                Some((k, msg)) => constraint(k, msg),
                None => constraint("verification", m),
            },
            other => constraint("verification", other.to_string()),
        })?;
        let sw = &self.sweep;
        if sw.instances == 0 {
            return Err(constraint("sweep.instances", "must be at least 1"));
        }
        if sw.resolutions.contains(&0) {
            return Err(constraint("sweep.resolutions", "every resolution must be at least 1"));
        }
        if !sw.data_amplitude.is_finite() || !sw.boundary_scale.is_finite() || sw.boundary_scale <= 0.0 {
            return Err(constraint(
                "sweep.boundary_scale",
                "data_amplitude must be finite and boundary_scale positive",
            ));
        }
        if let Some(c) = &self.classify.candidate {
            parse_expr("classify.candidate", c, n)?;
        }
        if !(self.classify.tolerance >= 0.0) {
            return Err(constraint("classify.tolerance", "must be >= 0"));
        }
        let sc = &self.schedule;
        if !(0.0 <= sc.r && sc.r < sc.big_r) {
            return Err(constraint(
                "schedule.r",
                format!("need 0 <= r < big_r, got r={}, big_r={}", sc.r, sc.big_r),
            ));
        }
        for (key, v) in [
            ("output.report", &self.output.report),
            ("output.field", &self.output.field),
            ("output.profile", &self.output.profile),
        ] {
            if v.trim().is_empty() || v.contains('/') || v.contains('\\') {
                return Err(constraint(key, "must be a plain file name (written inside --out)"));
            }
        }
        Ok(())
    }

    /// TOML with every default spelled out and the derived exponents
    /// appended. Parsing the output gives back this configuration.
    pub fn to_canonical(&self) -> String {
        let mut c = self.clone();
        c.refresh_derived();
        toml::to_string(&c).expect("configuration serializes to TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = parse_config("[problem]\ngamma = 2.0\nresolution = 32\n").unwrap();
        assert_eq!(cfg.derived.as_ref().unwrap().gamma_conjugate, 2.0);
        assert_eq!(cfg.problem.lo, vec![0.0, 0.0]);
        assert_eq!(cfg.sweep.resolutions, vec![32]);
    }

    #[test]
    fn delta_is_echoed() {
        let cfg = parse_config("[problem]\ndim = 3\ngamma = 2.0\nq = 6.0\n").unwrap();
        assert_eq!(cfg.derived.as_ref().unwrap().delta, 0.5);
        assert!(cfg.to_canonical().contains("delta = 0.5"));
    }

    #[test]
    fn critical_q_is_rejected() {
        let err = parse_config("[problem]\ndim = 2\ngamma = 2.0\nq = 2.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("problem.q") && msg.contains("q > n/(gamma-1)"), "{msg}");
    }

    #[test]
    fn constraint_messages_name_keys() {
        let cases = [
            ("[problem]\ngamma = 1.0\n", "problem.gamma"),
            ("command = \"schedule\"\n[problem]\ngamma = 2.5\n", "problem.gamma"),
            ("[verification]\ntheta = 0.9\ntau = 0.8\n", "verification.theta"),
            ("[problem]\nnorm = \"ellp(0.5)\"\n", "problem.norm"),
            ("[problem]\nboundary = \"sin(x3)\"\n", "problem.boundary"),
        ];
        for (text, key) in cases {
            let msg = parse_config(text).unwrap_err().to_string();
            assert!(msg.starts_with(key), "{text}: {msg}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let msg = parse_config("[problem]\ngama = 2.0\n").unwrap_err().to_string();
        assert!(msg.contains("gama"), "{msg}");
        assert!(parse_config("bogus = 1\n").is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let text = r#"
command = "sweep"
seed = 11
[problem]
norm = "rotated_ellp(4, pi/6)"
gamma = 3.0
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
boundary = "1 + x1^2"
source = "0.5"
[sweep]
instances = 3
resolutions = [16, 32]
[verification]
centers = [[0.0, 0.1]]
"#;
        let a = parse_config(text).unwrap();
        let printed = a.to_canonical();
        let b = parse_config(&printed).unwrap();
        assert_eq!(a, b);
        assert_eq!(printed, b.to_canonical());
    }
}
