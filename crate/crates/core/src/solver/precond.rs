use super::Preconditioner;
use crate::grid::Grid;
use crate::linalg::{dot, BandedCholesky};

/// Largest `free_nodes × bandwidth²` for which `Auto` factorizes the band.
const AUTO_FACTOR_BUDGET: f64 = 4e9;

const NOT_FREE: usize = usize::MAX;

/// The P1 Laplacian stiffness matrix restricted to the free nodes, used as a
/// preconditioner and to build harmonic initial guesses.
#[derive(Debug)]
pub struct LaplacianFactor {
    requested: Preconditioner,
    resolved: Preconditioner,
    index: Vec<usize>,
    free: Vec<usize>,
    diag: Vec<f64>,
    chol: Option<BandedCholesky>,
}

impl LaplacianFactor {
    pub(crate) fn new(grid: &Grid, fixed: &[bool], free: &[usize], kind: Preconditioner) -> Self {
        let n = grid.dim();
        let mut index = vec![NOT_FREE; grid.num_vertices()];
        for (i, &v) in free.iter().enumerate() {
            index[v] = i;
        }
        let mut diag = vec![0.0; free.len()];
        let mut bw = 0;
        for c in 0..grid.num_cells() {
            let verts = grid.cell(c);
            let grads = grid.shape_gradients(c);
            let vol = grid.cell_volume(c);
            for (a, &va) in verts.iter().enumerate() {
                let ia = index[va];
                if ia == NOT_FREE {
                    continue;
                }
                diag[ia] += vol * dot(&grads[a][..n], &grads[a][..n]);
                for &vb in verts {
                    let ib = index[vb];
                    if ib != NOT_FREE {
                        bw = bw.max(ia.abs_diff(ib));
                    }
                }
            }
        }
        let resolved = match kind {
            Preconditioner::Auto => {
                if free.len() as f64 * (bw as f64).powi(2) <= AUTO_FACTOR_BUDGET {
                    Preconditioner::Laplacian
                } else {
                    Preconditioner::Diagonal
                }
            }
            other => other,
        };
        let chol = if resolved == Preconditioner::Laplacian {
            let mut m = BandedCholesky::zeros(free.len(), bw);
            for c in 0..grid.num_cells() {
                let verts = grid.cell(c);
                let grads = grid.shape_gradients(c);
                let vol = grid.cell_volume(c);
                for (a, &va) in verts.iter().enumerate() {
                    let ia = index[va];
                    if ia == NOT_FREE {
                        continue;
                    }
                    for (b, &vb) in verts.iter().enumerate() {
                        let ib = index[vb];
                        if ib != NOT_FREE && ib <= ia {
                            m.add(ia, ib, vol * dot(&grads[a][..n], &grads[b][..n]));
                        }
                    }
                }
            }
            // Every free node couples to a fixed boundary through the grid,
            // so the restricted Laplacian is positive definite.
            Some(m.factorize().expect("restricted Laplacian is positive definite"))
        } else {
            None
        };
        debug_assert_eq!(fixed.iter().filter(|f| !**f).count(), free.len());
        LaplacianFactor {
            requested: kind,
            resolved,
            index,
            free: free.to_vec(),
            diag,
            chol,
        }
    }

    pub(crate) fn requested(&self) -> Preconditioner {
        self.requested
    }

    /// The preconditioner actually applied (`Auto` resolved).
    pub fn resolved(&self) -> Preconditioner {
        self.resolved
    }

    /// `out = P⁻¹ g` on free nodes, zero on fixed nodes.
    pub(crate) fn apply(&self, g: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        match self.resolved {
            Preconditioner::Laplacian => {
                let chol = self.chol.as_ref().expect("factorized");
                let mut b: Vec<f64> = self.free.iter().map(|&v| g[v]).collect();
                chol.solve_in_place(&mut b);
                for (i, &v) in self.free.iter().enumerate() {
                    out[v] = b[i];
                }
            }
            Preconditioner::Diagonal => {
                for (i, &v) in self.free.iter().enumerate() {
                    out[v] = g[v] / self.diag[i];
                }
            }
            _ => {
                for &v in &self.free {
                    out[v] = g[v];
                }
            }
        }
    }

    /// `(K x)_v` for free `v` with the full stiffness matrix `K`; zero on fixed nodes.
    fn stiffness_apply(&self, grid: &Grid, x: &[f64], out: &mut [f64]) {
        let n = grid.dim();
        out.iter_mut().for_each(|o| *o = 0.0);
        for c in 0..grid.num_cells() {
            let verts = grid.cell(c);
            let grads = grid.shape_gradients(c);
            let vol = grid.cell_volume(c);
            let mut du = [0.0; crate::linalg::MAX_DIM];
            for (k, &v) in verts.iter().enumerate() {
                for i in 0..n {
                    du[i] += x[v] * grads[k][i];
                }
            }
            for (k, &v) in verts.iter().enumerate() {
                if self.index[v] != NOT_FREE {
                    out[v] += vol * dot(&du[..n], &grads[k][..n]);
                }
            }
        }
    }

    /// Replaces the free values of `u` by the discrete harmonic extension of
    /// its fixed values.
    pub(crate) fn harmonic_extension(&self, grid: &Grid, u: &mut [f64]) {
        for &v in &self.free {
            u[v] = 0.0;
        }
        let mut r = vec![0.0; u.len()];
        self.stiffness_apply(grid, u, &mut r);
        if let Some(chol) = &self.chol {
            let mut b: Vec<f64> = self.free.iter().map(|&v| -r[v]).collect();
            chol.solve_in_place(&mut b);
            for (i, &v) in self.free.iter().enumerate() {
                u[v] = b[i];
            }
            return;
        }
        // Jacobi-preconditioned conjugate gradients on K_ff x = -K_fb u_b.
        let nf = self.free.len();
        let mut x = vec![0.0; u.len()];
        let mut res: Vec<f64> = r.iter().map(|v| -v).collect();
        let norm0 = self.free.iter().map(|&v| res[v] * res[v]).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            return;
        }
        let mut z: Vec<f64> = vec![0.0; u.len()];
        for (i, &v) in self.free.iter().enumerate() {
            z[v] = res[v] / self.diag[i];
        }
        let mut p = z.clone();
        let mut rz: f64 = self.free.iter().map(|&v| res[v] * z[v]).sum();
        let mut kp = vec![0.0; u.len()];
        for _ in 0..10 * nf.max(10) {
            self.stiffness_apply(grid, &p, &mut kp);
            let pkp: f64 = self.free.iter().map(|&v| p[v] * kp[v]).sum();
            if pkp <= 0.0 {
                break;
            }
            let alpha = rz / pkp;
            for &v in &self.free {
                x[v] += alpha * p[v];
                res[v] -= alpha * kp[v];
            }
            let rn = self.free.iter().map(|&v| res[v] * res[v]).sum::<f64>().sqrt();
            if rn <= 1e-14 * norm0 {
                break;
            }
            for (i, &v) in self.free.iter().enumerate() {
                z[v] = res[v] / self.diag[i];
            }
            let rz_new: f64 = self.free.iter().map(|&v| res[v] * z[v]).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for &v in &self.free {
                p[v] = z[v] + beta * p[v];
            }
        }
        for &v in &self.free {
            u[v] = x[v];
        }
    }
}
