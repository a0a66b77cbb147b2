//! Conjugate gradients for symmetric positive semi-definite operators in a
//! caller-supplied inner product.

use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default, serde::Serialize, serde::Deserialize)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Vector operations CG needs.
pub trait CgVector: Clone {
    fn axpy(&mut self, s: f64, o: &Self);
    fn scaled(&self, s: f64) -> Self;
    fn zeros_like(&self) -> Self;
}

impl CgVector for crate::grid::GridForm {
    fn axpy(&mut self, s: f64, o: &Self) {
        crate::grid::GridForm::axpy(self, s, o)
    }
    fn scaled(&self, s: f64) -> Self {
        self.scale(s)
    }
    fn zeros_like(&self) -> Self {
        Self::zero(&self.grid, self.degree, self.dim)
    }
}

impl CgVector for Vec<f64> {
    fn axpy(&mut self, s: f64, o: &Self) {
        self.iter_mut().zip(o).for_each(|(a, b)| *a += s * b);
    }
    fn scaled(&self, s: f64) -> Self {
        self.iter().map(|v| v * s).collect()
    }
    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
}

/// Solves `L x = b` from `x = 0`. On a consistent singular system the
/// iterates stay in the range of `L`, giving the minimal-norm solution.
pub fn solve<V: CgVector>(
    apply: impl Fn(&V) -> V,
    b: &V,
    inner: impl Fn(&V, &V) -> f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(V, CgStats)> {
    solve_scaled(apply, b, inner, rel_tol, 0.0, max_iter)
}

/// As [`solve`], with residuals measured relative to `max(|b|, scale)`.
/// A right-hand side below `rel_tol * scale` is treated as zero, which keeps
/// round-off in `b` (e.g. `d d w`) from driving CG off the range of `L`.
pub fn solve_scaled<V: CgVector>(
    apply: impl Fn(&V) -> V,
    b: &V,
    inner: impl Fn(&V, &V) -> f64,
    rel_tol: f64,
    scale: f64,
    max_iter: usize,
) -> Result<(V, CgStats)> {
    let mut x = b.zeros_like();
    let braw = inner(b, b).max(0.0).sqrt();
    if braw == 0.0 || braw <= rel_tol * scale {
        return Ok((x, CgStats::default()));
    }
    let bnorm = braw.max(scale);
    if bnorm == 0.0 {
        return Ok((x, CgStats::default()));
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = inner(&r, &r);
    let mut history = Vec::new();
    for it in 0..max_iter {
        let rel = rr.max(0.0).sqrt() / bnorm;
        history.push(rel);
        if rel <= rel_tol {
            return Ok((
                x,
                CgStats {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        let ap = apply(&p);
        let pap = inner(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rr_new = inner(&r, &r);
        let beta = rr_new / rr;
        let mut np = r.clone();
        np.axpy(beta, &p);
        p = np;
        rr = rr_new;
    }
    let rel = rr.max(0.0).sqrt() / bnorm;
    if rel <= rel_tol {
        return Ok((
            x,
            CgStats {
                iterations: history.len(),
                relative_residual: rel,
            },
        ));
    }
    history.push(rel);
    Err(Error::Solver {
        iterations: history.len(),
        residual: rel,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        // tridiagonal 1D Laplacian with Dirichlet ends
        let n = 30;
        let apply = |x: &Vec<f64>| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    2.0 * x[i]
                        - if i > 0 { x[i - 1] } else { 0.0 }
                        - if i + 1 < n { x[i + 1] } else { 0.0 }
                })
                .collect()
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let dot = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (x, st) = solve(apply, &b, dot, 1e-12, 1000).unwrap();
        let r = apply(&x);
        assert!(r.iter().zip(&b).all(|(a, c)| (a - c).abs() < 1e-9));
        assert!(st.iterations <= n + 1);
    }

    #[test]
    fn minimal_norm_on_singular_system() {
        // L = P (projector onto first coordinate), b = e1
        let apply = |x: &Vec<f64>| vec![x[0], 0.0];
        let dot = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (x, _) = solve(apply, &vec![2.0, 0.0], dot, 1e-14, 10).unwrap();
        assert_eq!(x, vec![2.0, 0.0]);
    }

    #[test]
    fn failure_carries_history() {
        let apply = |x: &Vec<f64>| {
            x.iter()
                .enumerate()
                .map(|(i, v)| v * (1.0 + i as f64))
                .collect::<Vec<_>>()
        };
        let dot = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        match solve(apply, &vec![1.0; 10], dot, 1e-14, 2) {
            Err(Error::Solver { history, .. }) => assert!(!history.is_empty()),
            other => panic!("{other:?}"),
        }
    }
}
