//! Small dense helpers: matrix exponential/logarithm, pseudo-inverses,
//! null spaces. Everything here works on `nalgebra::DMatrix<f64>`.

use nalgebra::{DMatrix, DVector};

/// Scaling-and-squaring exponential with a diagonal Pade(6,6) core; the
/// scaled matrix has 1-norm at most 1/2, where the truncation error is
/// below 1e-16 relative.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    const C: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let x = a * scale;
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let id = DMatrix::<f64>::identity(n, n);
    let even = &id * C[0] + &x2 * C[2] + &x4 * C[4] + &x6 * C[6];
    let odd = &x * (&id * C[1] + &x2 * C[3] + &x4 * C[5]);
    let num = &even + &odd;
    let den = even - odd;
    let mut result = match den.lu().solve(&num) {
        Some(r) => r,
        None => return DMatrix::from_element(n, n, f64::NAN),
    };
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Principal matrix logarithm by inverse scaling and squaring
/// (Denman-Beavers square roots) followed by the atanh series.
pub fn logm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let id = DMatrix::<f64>::identity(n, n);
    let mut m = a.clone();
    let mut roots = 0u32;
    while (&m - &id)
        .column_iter()
        .map(|c| c.lp_norm(1))
        .fold(0.0, f64::max)
        > 0.5
        && roots < 40
    {
        m = sqrtm(&m);
        roots += 1;
    }
    // log(M) = 2 atanh(Z), Z = (M - I)(M + I)^{-1}
    let plus = &m + &id;
    let minus = &m - &id;
    let z = match plus.try_inverse() {
        Some(inv) => minus * inv,
        None => return DMatrix::from_element(n, n, f64::NAN),
    };
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z.clone();
    for k in 1..40 {
        term = &term * &z2;
        let contrib = &term / (2 * k + 1) as f64;
        sum += &contrib;
        if contrib.amax() < 1e-18 {
            break;
        }
    }
    sum * (2.0 * (1u64 << roots) as f64)
}

/// Principal square root by the Denman-Beavers iteration.
pub fn sqrtm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let (yi, zi) = match (y.clone().try_inverse(), z.clone().try_inverse()) {
            (Some(yi), Some(zi)) => (yi, zi),
            _ => break,
        };
        let ny = (&y + &zi) * 0.5;
        let nz = (&z + &yi) * 0.5;
        let delta = (&ny - &y).amax();
        y = ny;
        z = nz;
        if delta < 1e-15 * (1.0 + y.amax()) {
            break;
        }
    }
    y
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pinv(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = rel_tol * smax.max(1e-300);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && smax > 0.0 {
            let v = vt.row(k).transpose();
            let uk = u.column(k);
            out += (v * uk.transpose()) / s;
        }
    }
    out
}

/// Numerical rank with a relative cutoff.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal (Euclidean) basis of the null space, as columns.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to a square-or-tall matrix so the SVD yields a full V.
    let rows = a.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.max();
    let cutoff = rel_tol * smax.max(1e-300);
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax == 0.0 || s <= cutoff)
        .map(|(k, _)| vt.row(k).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis (w.r.t. the Gram matrix `gram`) of the column span of
/// `span`. Returned as columns in coefficient space.
pub fn gram_orthonormal_basis(
    span: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    rel_tol: f64,
) -> DMatrix<f64> {
    let n = span.nrows();
    let mut out: Vec<DVector<f64>> = Vec::new();
    let scale = max_abs(span).max(1e-300);
    for j in 0..span.ncols() {
        let mut v = span.column(j).into_owned();
        for _ in 0..2 {
            for q in &out {
                let c = (q.transpose() * gram * &v)[(0, 0)];
                v -= q * c;
            }
        }
        let nrm = (v.transpose() * gram * &v)[(0, 0)].max(0.0).sqrt();
        if nrm > rel_tol * scale {
            out.push(v / nrm);
        }
    }
    if out.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&out)
    }
}

/// Max-abs entry, with 0 for empty matrices.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_log_roundtrip() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, -0.7, 0.2, 0.7, 0.0, -1.1, -0.2, 1.1, 0.0]);
        let e = expm(&a);
        let back = logm(&e);
        assert!(max_abs(&(back - &a)) < 1e-12);
        let id = &e * expm(&(-&a));
        assert!(max_abs(&(id - DMatrix::identity(3, 3))) < 1e-13);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = DMatrix::zeros(4, 4);
        assert_eq!(expm(&z), DMatrix::identity(4, 4));
    }

    #[test]
    fn pinv_and_null_space() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(rank(&a, 1e-12), 1);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!(max_abs(&(&a * &ns)) < 1e-12);
        let p = pinv(&a, 1e-12);
        assert!(max_abs(&(&a * &p * &a - &a)) < 1e-12);
    }
}
