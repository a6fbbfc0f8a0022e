//! Point-wise maps over the domain used for coefficients, data and boundary
//! values.

use std::sync::Arc;

use crate::linalg::SmallMat;

/// `x ↦ f(x)`
pub type ScalarMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `x ↦ F(x)`, written into the output slice (length = dimension).
pub type VectorMap = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// `x ↦ M(x)`
pub type MatrixMap = Arc<dyn Fn(&[f64]) -> SmallMat + Send + Sync>;

pub fn scalar_map(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> ScalarMap {
    Arc::new(f)
}

pub fn vector_map(f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> VectorMap {
    Arc::new(f)
}

pub fn constant(c: f64) -> ScalarMap {
    Arc::new(move |_| c)
}

/// `x ↦ b·x + c`
pub fn affine(b: &[f64], c: f64) -> ScalarMap {
    let b = b.to_vec();
    Arc::new(move |x| c + b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>())
}

/// A matrix that is either fixed or varies over the domain.
#[derive(Clone)]
pub enum MatrixField {
    Constant(SmallMat),
    Varying(MatrixMap),
}

impl MatrixField {
    #[inline]
    pub fn at(&self, x: &[f64]) -> SmallMat {
        match self {
            MatrixField::Constant(m) => *m,
            MatrixField::Varying(f) => f(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MatrixField::Constant(_))
    }
}

impl std::fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatrixField::Constant(m) => write!(f, "Constant({m:?})"),
            MatrixField::Varying(_) => write!(f, "Varying(<map>)"),
        }
    }
}
