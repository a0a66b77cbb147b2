//! Discrete Hodge decomposition `w = d alpha + codiff beta + harmonic` and
//! Gaffney-ratio measurement.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cg::{self, CgStats};
use crate::error::{Error, Result};
use crate::grid::GridForm;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HodgeDiagnostics {
    pub reconstruction: f64,
    pub orth_exact_coexact: f64,
    pub orth_exact_harmonic: f64,
    pub orth_coexact_harmonic: f64,
    pub harmonic_relative: f64,
    pub alpha_solve: CgStats,
    pub beta_solve: CgStats,
}

#[derive(Clone, Debug)]
pub struct HodgeSplit {
    pub alpha: GridForm,
    pub beta: GridForm,
    pub exact: GridForm,
    pub coexact: GridForm,
    pub harmonic: GridForm,
    pub diagnostics: HodgeDiagnostics,
}

fn max_iter(f: &GridForm) -> usize {
    10 * f.data.len().max(1)
}

/// Solves `codiff d x = rhs` (minimal-norm solution). `scale` is the size
/// below which `rhs` counts as zero; see [`cg::solve_scaled`].
pub fn solve_codiff_d(rhs: &GridForm, tol: f64, scale: f64) -> Result<(GridForm, CgStats)> {
    let it = max_iter(rhs);
    cg::solve_scaled(
        |x: &GridForm| x.d().codiff(),
        rhs,
        |a, b| a.dot(b),
        tol,
        scale,
        it,
    )
}

/// Solves `d codiff x = rhs` (minimal-norm solution).
pub fn solve_d_codiff(rhs: &GridForm, tol: f64, scale: f64) -> Result<(GridForm, CgStats)> {
    let it = max_iter(rhs);
    cg::solve_scaled(
        |x: &GridForm| x.codiff().d(),
        rhs,
        |a, b| a.dot(b),
        tol,
        scale,
        it,
    )
}

/// Orthogonal projection onto `{dw = 0, codiff w = 0}`: the constants in
/// degree 0 and zero above (see [`harmonic_dimension`]).
pub fn harmonic_projection(w: &GridForm) -> GridForm {
    let mut out = GridForm::zero(&w.grid, w.degree, w.dim);
    if w.degree > 0 || w.dim == 0 {
        return out;
    }
    let wt = w.grid.weights(0);
    let total: f64 = wt.iter().sum();
    for a in 0..w.dim {
        let mean = wt
            .iter()
            .enumerate()
            .map(|(c, x)| x * w.data[c * w.dim + a])
            .sum::<f64>()
            / total;
        for c in 0..wt.len() {
            out.data[c * w.dim + a] = mean;
        }
    }
    out
}

/// Decomposes `w`; `tol` is the relative CG tolerance. The harmonic part is
/// the projection onto the known harmonic space, so `reconstruction`
/// measures how well the two solves close the decomposition.
pub fn hodge_decompose(w: &GridForm, tol: f64) -> Result<HodgeSplit> {
    if tol <= 0.0 {
        return Err(Error::Precondition(
            "Hodge tolerance must be positive".into(),
        ));
    }
    let g = &w.grid;
    let k = w.degree;
    let scale = 1e-2 * w.l2() / g.h;
    let (alpha, sa) = if k >= 1 {
        solve_codiff_d(&w.codiff(), tol, scale)?
    } else {
        (GridForm::zero(g, 0, w.dim), CgStats::default())
    };
    let (beta, sb) = if k < g.m {
        solve_d_codiff(&w.d(), tol, scale)?
    } else {
        (GridForm::zero(g, g.m, w.dim), CgStats::default())
    };
    let exact = if k >= 1 {
        alpha.d()
    } else {
        GridForm::zero(g, 0, w.dim)
    };
    let coexact = if k < g.m {
        beta.codiff()
    } else {
        GridForm::zero(g, k, w.dim)
    };
    let harmonic = harmonic_projection(w);
    let wn = w.l2().max(f64::MIN_POSITIVE);
    let rel = |x: f64| x.abs() / (wn * wn);
    let recon = w.sub(&exact).sub(&coexact).sub(&harmonic).l2() / wn;
    let diagnostics = HodgeDiagnostics {
        reconstruction: recon,
        orth_exact_coexact: rel(exact.dot(&coexact)),
        orth_exact_harmonic: rel(exact.dot(&harmonic)),
        orth_coexact_harmonic: rel(coexact.dot(&harmonic)),
        harmonic_relative: harmonic.l2() / wn,
        alpha_solve: sa,
        beta_solve: sb,
    };
    Ok(HodgeSplit {
        alpha,
        beta,
        exact,
        coexact,
        harmonic,
        diagnostics,
    })
}

/// `|w|_{W^{1,2}} / (|dw| + |codiff w|)`.
pub fn gaffney_ratio(w: &GridForm, gram: &DMatrix<f64>) -> Result<f64> {
    let den = w.d().l2_norm(gram) + w.codiff().l2_norm(gram);
    let num = w.w12_norm(gram);
    if den == 0.0 {
        if num == 0.0 {
            return Err(Error::Precondition("Gaffney ratio of the zero form".into()));
        }
        return Err(Error::Precondition(format!(
            "harmonic form detected in degree {}: dw = 0 and codiff w = 0 with w != 0",
            w.degree
        )));
    }
    Ok(num / den)
}

/// Dimension of `{w : dw = 0, codiff w = 0}` estimated from what the two
/// solves leave of `probes` random forms.
pub fn harmonic_dimension(
    grid: &std::sync::Arc<crate::grid::Grid>,
    k: usize,
    probes: usize,
    seed: u64,
) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = Vec::new();
    for _ in 0..probes {
        let w = GridForm::random(grid, k, 1, 1.0, &mut rng);
        let s = hodge_decompose(&w, 1e-12)?;
        parts.push((w.sub(&s.exact).sub(&s.coexact), w.l2()));
    }
    let gram = DMatrix::from_fn(probes, probes, |i, j| {
        parts[i].0.dot(&parts[j].0) / (parts[i].1 * parts[j].1)
    });
    let ev = gram.symmetric_eigenvalues();
    Ok(ev.iter().filter(|&&v| v > 1e-8).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::sync::Arc;

    #[test]
    fn zero_form_decomposes_to_zero() {
        let g = Arc::new(Grid::new(3, 4));
        let s = hodge_decompose(&GridForm::zero(&g, 1, 2), 1e-10).unwrap();
        assert_eq!(
            s.exact.max_abs() + s.coexact.max_abs() + s.harmonic.max_abs(),
            0.0
        );
    }

    #[test]
    fn exact_input_is_recovered() {
        let g = Arc::new(Grid::new(3, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = GridForm::random(&g, 0, 1, 1.0, &mut rng);
        let w = phi.d();
        let s = hodge_decompose(&w, 1e-12).unwrap();
        assert!(s.exact.sub(&w).l2() < 1e-9 * w.l2());
        assert!(s.coexact.l2() < 1e-9 * w.l2());
    }

    fn dense(g: &Arc<Grid>, k: usize, f: impl Fn(&GridForm) -> GridForm) -> DMatrix<f64> {
        let n = g.count(k);
        let cols: Vec<_> = (0..n)
            .map(|c| {
                let mut e = GridForm::zero(g, k, 1);
                e.data[c] = 1.0;
                nalgebra::DVector::from_vec(f(&e).data)
            })
            .collect();
        DMatrix::from_columns(&cols)
    }

    #[test]
    fn harmonic_dimension_matches_dense_null_space() {
        for (m, n) in [(2, 3), (3, 2)] {
            let g = Arc::new(Grid::new(m, n));
            for k in 0..=m {
                let d = dense(&g, k, |e| e.d());
                let cd = dense(&g, k, |e| e.codiff());
                let mut stacked = DMatrix::zeros(d.nrows() + cd.nrows(), g.count(k));
                stacked.view_mut((0, 0), d.shape()).copy_from(&d);
                stacked.view_mut((d.nrows(), 0), cd.shape()).copy_from(&cd);
                let oracle = crate::linalg::null_space(&stacked, 1e-10).ncols();
                let est = harmonic_dimension(&g, k, 4, 11).unwrap();
                assert_eq!(est, oracle, "m={m} k={k}");
                assert_eq!(oracle, usize::from(k == 0), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn gaffney_ratio_is_finite_on_random_forms() {
        let g = Arc::new(Grid::new(3, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = GridForm::random(&g, 1, 2, 1.0, &mut rng);
        let r = gaffney_ratio(&w, &DMatrix::identity(2, 2)).unwrap();
        assert!(r.is_finite() && r > 0.0);
        let c = GridForm::zero(&g, 0, 1).add(&{
            let mut z = GridForm::zero(&g, 0, 1);
            z.data.iter_mut().for_each(|v| *v = 1.0);
            z
        });
        assert!(gaffney_ratio(&c, &DMatrix::identity(1, 1)).is_err());
    }
}
