use aniso_core::norms::parse_norm;
use aniso_core::{DualNorm, NormModel};
use proptest::prelude::*;

const SPECS: [&str; 5] = [
    "euclidean(1.5)",
    "weighted(2, 0.5, 1)",
    "ellp(4)",
    "rotated_ellp(3, pi/6)",
    "varexp(1.5, 3, 1)",
];

fn norm(k: usize) -> NormModel {
    parse_norm(SPECS[k], 2).unwrap()
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 2)
}

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 2).prop_filter("nonzero", |v| v.iter().any(|c| c.abs() > 1e-3))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #[test]
    fn positively_homogeneous(k in 0..SPECS.len(), x in point(), xi in vector(), lam in 0.01..50.0f64) {
        let n = norm(k);
        let scaled: Vec<f64> = xi.iter().map(|v| lam * v).collect();
        let a = n.eval(&x, &scaled);
        let b = lam * n.eval(&x, &xi);
        prop_assert!((a - b).abs() <= 1e-12 * b);
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        prop_assert!((n.eval(&x, &neg) - n.eval(&x, &xi)).abs() <= 1e-12 * b / lam);
    }

    #[test]
    fn convex_along_segments(k in 0..SPECS.len(), x in point(), a in vector(), b in vector(), t in 0.0..1.0f64) {
        let n = norm(k);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(u, v)| (1.0 - t) * u + t * v).collect();
        let lhs = n.eval(&x, &mid);
        let rhs = (1.0 - t) * n.eval(&x, &a) + t * n.eval(&x, &b);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn fenchel_and_gradient_normalization(k in 0..SPECS.len(), x in point(), xi in vector(), zeta in vector()) {
        let n = norm(k);
        let dual = DualNorm::analytic(n.clone());
        let rz = dual.eval(&x, &zeta).unwrap();
        prop_assert!(dot(&xi, &zeta) <= n.eval(&x, &xi) * rz * (1.0 + 1e-12) + 1e-12);
        let g = n.grad(&x, &xi).unwrap();
        prop_assert!((dual.eval(&x, &g).unwrap() - 1.0).abs() <= 1e-9);
        prop_assert!((dot(&g, &xi) - n.eval(&x, &xi)).abs() <= 1e-10 * n.eval(&x, &xi));
    }

    #[test]
    fn numeric_dual_matches_analytic(k in 0..SPECS.len(), x in point(), zeta in vector()) {
        let n = norm(k);
        let exact = DualNorm::analytic(n.clone()).eval(&x, &zeta).unwrap();
        let approx = DualNorm::numeric(n).eval(&x, &zeta).unwrap();
        prop_assert!((exact - approx).abs() <= 1e-6 * exact, "{} vs {}", exact, approx);
    }

    #[test]
    fn bidual_recovers_the_norm(k in 0..SPECS.len(), x in point(), xi in vector()) {
        let n = norm(k);
        let bidual = DualNorm::analytic(n.dual_model());
        let a = bidual.eval(&x, &xi).unwrap();
        let b = n.eval(&x, &xi);
        prop_assert!((a - b).abs() <= 1e-10 * b);
    }

    #[test]
    fn gradient_matches_central_differences(k in 0..SPECS.len(), x in point(), xi in vector()) {
        let n = norm(k);
        let g = n.grad(&x, &xi).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut up = xi.clone();
            up[i] += h;
            let mut dn = xi.clone();
            dn[i] -= h;
            let fd = (n.eval(&x, &up) - n.eval(&x, &dn)) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "{} vs {}", fd, g[i]);
        }
    }
}
