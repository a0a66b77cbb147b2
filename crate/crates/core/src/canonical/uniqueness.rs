//! Comparisons between canonical representatives of one orbit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::grid::GridForm;

/// Scalar cochain of pointwise values `|w(cell)|_gram`.
pub fn magnitude(w: &GridForm, gram: &DMatrix<f64>) -> GridForm {
    let hk = w.grid.h.powi(w.degree as i32);
    let mut out = GridForm::zero(&w.grid, w.degree, 1);
    for (o, v) in out.data.iter_mut().zip(w.pointwise_norm(gram)) {
        *o = v * hk;
    }
    out
}

/// `| |w| - |reference| |_{L2} / |reference|_{L2}`.
pub fn pointwise_norm_error(reference: &GridForm, w: &GridForm, gram: &DMatrix<f64>) -> f64 {
    let a = magnitude(reference, gram);
    let b = magnitude(w, gram);
    b.sub(&a).l2() / a.l2().max(f64::MIN_POSITIVE)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Procrustes {
    /// Orthogonal `R` minimizing `|R from - to|`, row-major.
    pub rotation: Vec<f64>,
    pub dim: usize,
    /// `|R from - to| / |to|`: the size of the leftover field.
    pub residual: f64,
}

/// Constant orthogonal map carrying `from` closest to `to` in the weighted L2 norm.
pub fn procrustes(from: &GridForm, to: &GridForm) -> Procrustes {
    let dim = from.dim;
    let w = from.grid.weights(from.degree);
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for (c, wc) in w.iter().enumerate() {
        let a = from.value(c);
        let b = to.value(c);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += wc * b[i] * a[j];
            }
        }
    }
    let svd = m.svd(true, true);
    let r = svd.u.expect("u") * svd.v_t.expect("v_t");
    let moved = from.map(&r);
    let residual = moved.sub(to).l2() / to.l2().max(f64::MIN_POSITIVE);
    Procrustes {
        rotation: r.transpose().as_slice().to_vec(),
        dim,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::SeedableRng;
    use std::sync::Arc;

    #[test]
    fn recovers_a_constant_rotation() {
        let g = Arc::new(Grid::new(3, 3));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let a = GridForm::random(&g, 2, 3, 1.0, &mut rng);
        let r = crate::linalg::expm(&DMatrix::from_row_slice(
            3,
            3,
            &[0.0, -0.4, 0.1, 0.4, 0.0, -0.3, -0.1, 0.3, 0.0],
        ));
        let b = a.map(&r);
        let p = procrustes(&a, &b);
        assert!(p.residual < 1e-12);
        assert!(pointwise_norm_error(&a, &b, &DMatrix::identity(3, 3)) < 1e-12);
    }
}
