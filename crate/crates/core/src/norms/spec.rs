//! Text grammar for norms:
//!
//! ```text
//! euclidean(scale)
//! weighted(s11, s12, s22)                 # 2D, upper triangle row by row
//! weighted(s11, s12, s13, s22, s23, s33)  # 3D
//! ellp(p)
//! rotated_ellp(p, theta)                  # 2D rotation angle
//! rotated_ellp(p, a11, a12, …, a33)       # 3D rotation matrix, row major
//! varexp(p_min, p_max, profile_id)
//! ```
//!
//! Arguments may be constant arithmetic expressions such as `pi/6`.

use std::sync::Arc;

use super::NormModel;
use crate::expr::Expr;
use crate::linalg::SmallMat;
use crate::maps::{MatrixField, ScalarMap};
use crate::{Error, Result};

/// Exponent profiles available to `varexp`, by id.
pub const VAREXP_PROFILES: [&str; 4] = [
    "constant midpoint",
    "mid + half·sin(π x₁)",
    "mid + half·cos(π |x|)",
    "mid + half·tanh(4 x₁ x₂)",
];

/// The exponent map `x ↦ p(x)` for a `varexp` profile; values stay inside
/// `[p_min, p_max]`.
pub fn varexp_profile(p_min: f64, p_max: f64, profile: usize) -> Result<ScalarMap> {
    let mid = 0.5 * (p_min + p_max);
    let half = 0.5 * (p_max - p_min);
    let f: ScalarMap = match profile {
        0 => Arc::new(move |_| mid),
        1 => Arc::new(move |x| mid + half * (std::f64::consts::PI * x[0]).sin()),
        2 => Arc::new(move |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            mid + half * (std::f64::consts::PI * r).cos()
        }),
        3 => Arc::new(move |x| mid + half * (4.0 * x[0] * x[1]).tanh()),
        _ => {
            return Err(Error::config(format!(
                "unknown varexp profile {profile} (expected 0..{})",
                VAREXP_PROFILES.len() - 1
            )))
        }
    };
    Ok(f)
}

fn split_call(spec: &str) -> Result<(&str, Vec<&str>)> {
    let spec = spec.trim();
    let open = spec
        .find('(')
        .ok_or_else(|| Error::config(format!("norm spec `{spec}` must look like name(args)")))?;
    if !spec.ends_with(')') {
        return Err(Error::config(format!(
            "norm spec `{spec}` is missing a closing parenthesis"
        )));
    }
    let name = spec[..open].trim();
    let inner = &spec[open + 1..spec.len() - 1];
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    Ok((name, args))
}

fn numbers(args: &[&str]) -> Result<Vec<f64>> {
    args.iter()
        .map(|a| {
            Expr::parse(a)
                .and_then(|e| e.eval_const())
                .map_err(|e| Error::config(format!("bad norm argument `{a}`: {e}")))
        })
        .collect()
}

/// Parses a norm from the grammar above for dimension `dim`.
pub fn parse_norm(spec: &str, dim: usize) -> Result<NormModel> {
    let (name, args) = split_call(spec)?;
    let v = numbers(&args)?;
    let arity = |expected: usize| -> Result<()> {
        if v.len() == expected {
            Ok(())
        } else {
            Err(Error::config(format!(
                "{name} expects {expected} arguments in dimension {dim}, got {}",
                v.len()
            )))
        }
    };
    let canonical = spec.trim().to_string();
    let model = match name {
        "euclidean" => {
            arity(1)?;
            NormModel::euclidean(dim, v[0])?
        }
        "weighted" => {
            arity(dim * (dim + 1) / 2)?;
            let mut s = SmallMat::zeros(dim);
            let mut k = 0;
            for i in 0..dim {
                for j in i..dim {
                    s.set(i, j, v[k]);
                    s.set(j, i, v[k]);
                    k += 1;
                }
            }
            NormModel::weighted(s)?
        }
        "ellp" => {
            arity(1)?;
            NormModel::ell_p(dim, v[0])?
        }
        "rotated_ellp" => {
            if dim == 2 {
                arity(2)?;
                NormModel::rotated_ell_p_2d(v[0], v[1])?
            } else {
                arity(1 + dim * dim)?;
                let mut a = SmallMat::zeros(dim);
                for i in 0..dim {
                    for j in 0..dim {
                        a.set(i, j, v[1 + i * dim + j]);
                    }
                }
                NormModel::rotated_ell_p(v[0], a)?
            }
        }
        "varexp" => {
            arity(3)?;
            if v[2] < 0.0 || v[2].fract() != 0.0 {
                return Err(Error::config(format!(
                    "varexp profile id must be a non-negative integer, got {}",
                    v[2]
                )));
            }
            let profile = varexp_profile(v[0], v[1], v[2] as usize)?;
            NormModel::variable_exponent(dim, MatrixField::Constant(SmallMat::identity(dim)), profile, v[0], v[1])?
        }
        other => return Err(Error::config(format!("unknown norm family `{other}`"))),
    };
    Ok(model.with_label(canonical))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormFamily;

    #[test]
    fn parses_every_family() {
        assert_eq!(
            parse_norm("euclidean(2)", 2).unwrap().family(),
            NormFamily::WeightedEuclidean
        );
        assert_eq!(
            parse_norm("weighted(2, 0.5, 1)", 2).unwrap().family(),
            NormFamily::WeightedEuclidean
        );
        assert_eq!(
            parse_norm("weighted(2, 0, 0, 1, 0, 3)", 3).unwrap().family(),
            NormFamily::WeightedEuclidean
        );
        assert_eq!(parse_norm("ellp(4)", 3).unwrap().family(), NormFamily::EllP);
        let r = parse_norm("rotated_ellp(4, pi/6)", 2).unwrap();
        assert_eq!(r.family(), NormFamily::RotatedEllP);
        assert_eq!(r.label(), "rotated_ellp(4, pi/6)");
        assert_eq!(
            parse_norm("rotated_ellp(3, 0,1,0, 1,0,0, 0,0,1)", 3).unwrap().family(),
            NormFamily::RotatedEllP
        );
        assert_eq!(
            parse_norm("varexp(1.5, 3, 2)", 2).unwrap().family(),
            NormFamily::VariableExponent
        );
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            "ellp(1)",
            "ellp",
            "ellp(4",
            "ellp(4, 5)",
            "taxicab(1)",
            "weighted(1, 2, 1)",
            "rotated_ellp(4, 1,1,0, 0,1,0, 0,0,1)",
            "varexp(1.5, 3, 9)",
            "varexp(3, 1.5, 0)",
            "euclidean(-1)",
        ] {
            let dim = if bad.starts_with("rotated_ellp(4, 1") { 3 } else { 2 };
            assert!(parse_norm(bad, dim).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn profiles_stay_in_range() {
        for id in 0..VAREXP_PROFILES.len() {
            let p = varexp_profile(1.5, 3.0, id).unwrap();
            for x in [[0.3, -0.2], [1.0, 1.0], [-0.7, 0.5]] {
                let v = p(&x);
                assert!((1.5..=3.0).contains(&v));
            }
        }
    }
}
