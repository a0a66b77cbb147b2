use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use super::space::{next_index, Grid};
use crate::jet::{shuffle_sign, JetForm};
use crate::lie::Bilinear;

/// Algebra-valued `degree`-cochain: `data[cell * dim + a]`, cells in block order.
#[derive(Clone, Debug)]
pub struct GridForm {
    pub grid: Arc<Grid>,
    pub degree: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

/// Values of a primal `k`-cochain's Hodge dual, stored on the primal layout:
/// entry of cell `(K, x)` is the value on its dual `(m-k)`-cell.
#[derive(Clone, Debug)]
pub struct DualCochain {
    pub primal: GridForm,
}

impl GridForm {
    pub fn zero(grid: &Arc<Grid>, degree: usize, dim: usize) -> Self {
        Self {
            grid: grid.clone(),
            degree,
            dim,
            data: vec![0.0; grid.count(degree) * dim],
        }
    }

    pub fn random(
        grid: &Arc<Grid>,
        degree: usize,
        dim: usize,
        amp: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut f = Self::zero(grid, degree, dim);
        f.data
            .iter_mut()
            .for_each(|v| *v = rng.gen_range(-amp..=amp));
        f
    }

    /// De Rham map by midpoint quadrature: component value at the cell
    /// barycenter times `h^k`.
    pub fn sample(grid: &Arc<Grid>, field: &JetForm) -> Self {
        let k = field.degree;
        let mut out = Self::zero(grid, k, field.dim);
        let sp = field.space.clone();
        let hk = grid.h.powi(k as i32);
        let m = grid.m;
        assert_eq!(sp.m, m, "field dimension");
        let mut x = vec![0usize; m];
        let mut p = vec![0.0; m];
        let mut pows = vec![1.0; sp.len()];
        for b in grid.blocks(k) {
            let comp = sp.mask_pos(b.mask);
            x.iter_mut().for_each(|v| *v = 0);
            let mut cell = b.offset;
            loop {
                grid.barycenter(b.mask, &x, &mut p);
                for (i, pw) in pows.iter_mut().enumerate() {
                    *pw = sp
                        .monomial(i)
                        .iter()
                        .zip(&p)
                        .map(|(&e, &c)| c.powi(e as i32))
                        .product();
                }
                for a in 0..field.dim {
                    let v: f64 = field
                        .comp(comp, a)
                        .iter()
                        .zip(&pows)
                        .map(|(c, w)| c * w)
                        .sum();
                    out.data[cell * field.dim + a] = v * hk;
                }
                cell += 1;
                if !next_index(&mut x, &b.ext) {
                    break;
                }
            }
        }
        out
    }

    pub fn cells(&self) -> usize {
        self.grid.count(self.degree)
    }

    #[inline]
    pub fn value(&self, cell: usize) -> &[f64] {
        &self.data[cell * self.dim..(cell + 1) * self.dim]
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(
            (self.degree, self.dim),
            (o.degree, o.dim),
            "cochain shape mismatch"
        );
        let mut r = self.clone();
        r.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a += b);
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(
            (self.degree, self.dim),
            (o.degree, o.dim),
            "cochain shape mismatch"
        );
        let mut r = self.clone();
        r.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a -= b);
        r
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut r = self.clone();
        r.data.iter_mut().for_each(|a| *a *= s);
        r
    }

    pub fn axpy(&mut self, s: f64, o: &Self) {
        self.data
            .iter_mut()
            .zip(&o.data)
            .for_each(|(a, b)| *a += s * b);
    }

    pub fn map(&self, mat: &DMatrix<f64>) -> Self {
        assert_eq!(mat.ncols(), self.dim, "map dimension");
        let mut out = Self::zero(&self.grid, self.degree, mat.nrows());
        let (p, q) = (mat.nrows(), self.dim);
        for c in 0..self.cells() {
            let v = &self.data[c * q..(c + 1) * q];
            let o = &mut out.data[c * p..(c + 1) * p];
            for (i, oi) in o.iter_mut().enumerate() {
                *oi = (0..q).map(|j| mat[(i, j)] * v[j]).sum();
            }
        }
        out
    }

    /// Coboundary: `(dw)_K(x) = sum_{i in K} (-1)^{#{j in K, j < i}} [w_{K-i}(x + e_i) - w_{K-i}(x)]`.
    pub fn d(&self) -> Self {
        let g = &self.grid;
        let m = g.m;
        let k = self.degree;
        if k >= m {
            return Self::zero(&self.grid, m, self.dim);
        }
        let dim = self.dim;
        let mut out = Self::zero(&self.grid, k + 1, dim);
        let mut x = vec![0usize; m];
        for tb in g.blocks(k + 1) {
            for i in 0..m {
                if tb.mask & (1 << i) == 0 {
                    continue;
                }
                let sb = g.block_of(tb.mask & !(1 << i));
                let sign = if (tb.mask & ((1 << i) - 1)).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                x.iter_mut().for_each(|v| *v = 0);
                let mut t = tb.offset;
                loop {
                    let s0 = sb.offset + sb.index(&x);
                    let s1 = s0 + sb.stride[i];
                    for a in 0..dim {
                        out.data[t * dim + a] +=
                            sign * (self.data[s1 * dim + a] - self.data[s0 * dim + a]);
                    }
                    t += 1;
                    if !next_index(&mut x, &tb.ext) {
                        break;
                    }
                }
            }
        }
        out
    }

    /// Transpose of the coboundary into degree `k - 1`.
    pub fn d_transpose(&self) -> Self {
        let g = &self.grid;
        let m = g.m;
        let k = self.degree;
        if k == 0 {
            return Self::zero(&self.grid, 0, self.dim);
        }
        let dim = self.dim;
        let mut out = Self::zero(&self.grid, k - 1, dim);
        let mut x = vec![0usize; m];
        for tb in g.blocks(k) {
            for i in 0..m {
                if tb.mask & (1 << i) == 0 {
                    continue;
                }
                let sb = g.block_of(tb.mask & !(1 << i));
                let sign = if (tb.mask & ((1 << i) - 1)).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                x.iter_mut().for_each(|v| *v = 0);
                let mut t = tb.offset;
                loop {
                    let s0 = sb.offset + sb.index(&x);
                    let s1 = s0 + sb.stride[i];
                    for a in 0..dim {
                        let v = sign * self.data[t * dim + a];
                        out.data[s1 * dim + a] += v;
                        out.data[s0 * dim + a] -= v;
                    }
                    t += 1;
                    if !next_index(&mut x, &tb.ext) {
                        break;
                    }
                }
            }
        }
        out
    }

    /// Codifferential: the adjoint of `d` in the weighted inner product,
    /// `M_{k-1}^{-1} d^T M_k`.
    pub fn codiff(&self) -> Self {
        if self.degree == 0 {
            return Self::zero(&self.grid, 0, self.dim);
        }
        let mut w = self.clone();
        w.apply_weights(1.0);
        let mut r = w.d_transpose();
        r.apply_weights(-1.0);
        r
    }

    /// Multiplies by the mass weights raised to `power` (`1` or `-1`).
    pub fn apply_weights(&mut self, power: f64) {
        let w = self.grid.weights(self.degree);
        let dim = self.dim;
        for (c, wc) in w.iter().enumerate() {
            let f = if power > 0.0 { *wc } else { 1.0 / wc };
            self.data[c * dim..(c + 1) * dim]
                .iter_mut()
                .for_each(|v| *v *= f);
        }
    }

    /// Weighted inner product with Gram matrix `gram` on the values.
    pub fn inner(&self, o: &Self, gram: &DMatrix<f64>) -> f64 {
        let w = self.grid.weights(self.degree);
        let dim = self.dim;
        let diag = (0..dim).all(|i| (0..dim).all(|j| i == j || gram[(i, j)] == 0.0));
        let mut s = 0.0;
        for (c, wc) in w.iter().enumerate() {
            let a = &self.data[c * dim..(c + 1) * dim];
            let b = &o.data[c * dim..(c + 1) * dim];
            let v = if diag {
                (0..dim).map(|i| a[i] * gram[(i, i)] * b[i]).sum::<f64>()
            } else {
                let mut t = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        t += a[i] * gram[(i, j)] * b[j];
                    }
                }
                t
            };
            s += wc * v;
        }
        s
    }

    /// Inner product with identity Gram matrix.
    pub fn dot(&self, o: &Self) -> f64 {
        let w = self.grid.weights(self.degree);
        let dim = self.dim;
        let mut s = 0.0;
        for (c, wc) in w.iter().enumerate() {
            let a = &self.data[c * dim..(c + 1) * dim];
            let b = &o.data[c * dim..(c + 1) * dim];
            s += wc * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        }
        s
    }

    pub fn l2_norm(&self, gram: &DMatrix<f64>) -> f64 {
        self.inner(self, gram).max(0.0).sqrt()
    }

    /// L2 norm with identity Gram matrix.
    pub fn l2(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }

    /// `sqrt(l2^2 + |grad|^2)` with componentwise forward differences.
    pub fn w12_norm(&self, gram: &DMatrix<f64>) -> f64 {
        let g = &self.grid;
        let dim = self.dim;
        let base = g.h.powi(g.m as i32 - 2 * self.degree as i32) / (g.h * g.h);
        let mut grad = 0.0;
        let mut x = vec![0usize; g.m];
        let mut diff = vec![0.0; dim];
        for b in g.blocks(self.degree) {
            x.iter_mut().for_each(|v| *v = 0);
            let mut c = b.offset;
            loop {
                for j in 0..g.m {
                    if x[j] + 1 < b.ext[j] {
                        let c1 = c + b.stride[j];
                        for a in 0..dim {
                            diff[a] = self.data[c1 * dim + a] - self.data[c * dim + a];
                        }
                        let mut t = 0.0;
                        for p in 0..dim {
                            for q in 0..dim {
                                t += diff[p] * gram[(p, q)] * diff[q];
                            }
                        }
                        grad += base * t;
                    }
                }
                c += 1;
                if !next_index(&mut x, &b.ext) {
                    break;
                }
            }
        }
        let l2 = self.inner(self, gram);
        (l2 + grad).max(0.0).sqrt()
    }

    /// Componentwise forward difference quotient along `axis`, zero on the
    /// last layer of each block.
    pub fn diff(&self, axis: usize) -> Self {
        let g = &self.grid;
        let dim = self.dim;
        let mut out = Self::zero(g, self.degree, dim);
        let mut x = vec![0usize; g.m];
        for b in g.blocks(self.degree) {
            x.iter_mut().for_each(|v| *v = 0);
            let mut c = b.offset;
            loop {
                if x[axis] + 1 < b.ext[axis] {
                    let c1 = c + b.stride[axis];
                    for a in 0..dim {
                        out.data[c * dim + a] =
                            (self.data[c1 * dim + a] - self.data[c * dim + a]) / g.h;
                    }
                }
                c += 1;
                if !next_index(&mut x, &b.ext) {
                    break;
                }
            }
        }
        out
    }

    /// Discrete `W^{s,2}` norm from iterated forward differences.
    pub fn sobolev_norm(&self, s: usize, gram: &DMatrix<f64>) -> f64 {
        fn acc(w: &GridForm, s: usize, gram: &DMatrix<f64>) -> f64 {
            let mut t = w.inner(w, gram);
            if s > 0 {
                for j in 0..w.grid.m {
                    t += acc(&w.diff(j), s - 1, gram);
                }
            }
            t
        }
        acc(self, s, gram).max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise-norm field: per cell `|value|_gram / h^k`, as a scalar cochain.
    pub fn pointwise_norm(&self, gram: &DMatrix<f64>) -> Vec<f64> {
        let dim = self.dim;
        let hk = self.grid.h.powi(self.degree as i32);
        (0..self.cells())
            .map(|c| {
                let v = &self.data[c * dim..(c + 1) * dim];
                let mut t = 0.0;
                for p in 0..dim {
                    for q in 0..dim {
                        t += v[p] * gram[(p, q)] * v[q];
                    }
                }
                t.max(0.0).sqrt() / hk
            })
            .collect()
    }

    /// Averages the `mask_from` block onto the cells of the `mask_to` block
    /// (`mask_from` a subset of `mask_to`), one separable pass per added axis.
    pub fn average_block(&self, mask_from: u32, mask_to: u32) -> Vec<f64> {
        let g = &self.grid;
        let dim = self.dim;
        let sb = g.block_of(mask_from);
        let mut ext = sb.ext.clone();
        let mut cur: Vec<f64> = self.data[sb.offset * dim..(sb.offset + sb.len) * dim].to_vec();
        for j in 0..g.m {
            if (mask_to & !mask_from) & (1 << j) == 0 {
                continue;
            }
            let mut next_ext = ext.clone();
            next_ext[j] -= 1;
            let stride_in = |e: &[usize], axis: usize| e[axis + 1..].iter().product::<usize>();
            let sj = stride_in(&ext, j);
            let outer: usize = ext[..j].iter().product();
            let inner = sj;
            let mut out = vec![0.0; next_ext.iter().product::<usize>() * dim];
            for o in 0..outer {
                for t in 0..next_ext[j] {
                    let src = (o * ext[j] + t) * inner;
                    let dst = (o * next_ext[j] + t) * inner;
                    for i in 0..inner * dim {
                        out[dst * dim + i] = 0.5 * (cur[src * dim + i] + cur[(src + sj) * dim + i]);
                    }
                }
            }
            cur = out;
            ext = next_ext;
        }
        cur
    }

    /// Barycentric-collocation wedge `sum V^i ^ W^j (x) P(e_i, e_j)`.
    pub fn wedge(&self, w: &Self, p: &Bilinear) -> Self {
        assert_eq!(p.left, self.dim, "pairing left dimension");
        assert_eq!(p.right, w.dim, "pairing right dimension");
        let g = self.grid.clone();
        let deg = self.degree + w.degree;
        if deg > g.m {
            return Self::zero(&g, g.m, p.out);
        }
        let mut out = Self::zero(&g, deg, p.out);
        let support = p.support();
        if support.is_empty() {
            return out;
        }
        let (dv, dw, dout) = (self.dim, w.dim, p.out);
        for tb in g.blocks(deg) {
            let kmask = tb.mask;
            // enumerate sub-masks I of K with |I| = deg V
            let mut sub = kmask;
            loop {
                if sub.count_ones() as usize == self.degree {
                    let i_mask = sub;
                    let j_mask = kmask & !sub;
                    let sign = shuffle_sign(i_mask, j_mask);
                    let va = self.average_block(i_mask, kmask);
                    let wa = w.average_block(j_mask, kmask);
                    for c in 0..tb.len {
                        let vv = &va[c * dv..(c + 1) * dv];
                        let ww = &wa[c * dw..(c + 1) * dw];
                        let o = &mut out.data[(tb.offset + c) * dout..(tb.offset + c + 1) * dout];
                        for &(a, b) in &support {
                            let s = sign * vv[a] * ww[b];
                            if s == 0.0 {
                                continue;
                            }
                            for (oc, t) in o.iter_mut().zip(p.pair_slice(a, b)) {
                                *oc += s * t;
                            }
                        }
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & kmask;
            }
        }
        out
    }

    /// Diagonal Hodge star to the dual complex: `(*w)(K, x) = eps(K, K^c) h^{m-2k} w(K, x)`.
    pub fn star(&self) -> DualCochain {
        let g = &self.grid;
        let f = g.h.powi(g.m as i32 - 2 * self.degree as i32);
        let mut out = self.clone();
        let dim = self.dim;
        for b in g.blocks(self.degree) {
            let s = g.complement_sign(b.mask) * f;
            out.data[b.offset * dim..(b.offset + b.len) * dim]
                .iter_mut()
                .for_each(|v| *v *= s);
        }
        DualCochain { primal: out }
    }
}

impl DualCochain {
    /// Degree of the dual cochain, `m - k`.
    pub fn degree(&self) -> usize {
        self.primal.grid.m - self.primal.degree
    }

    /// Star back to the primal complex; `star(star(w)) = (-1)^{k(m-k)} w`.
    pub fn star(&self) -> GridForm {
        let g = &self.primal.grid;
        let k = self.primal.degree;
        let f = g.h.powi(g.m as i32 - 2 * (g.m - k) as i32);
        let mut out = self.primal.clone();
        let dim = out.dim;
        for b in g.blocks(k) {
            let comp = g.full_mask() & !b.mask;
            let s = shuffle_sign(comp, b.mask) * f;
            out.data[b.offset * dim..(b.offset + b.len) * dim]
                .iter_mut()
                .for_each(|v| *v *= s);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dd_is_zero_exactly() {
        let g = Arc::new(Grid::new(4, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..3 {
            let w = GridForm::random(&g, k, 2, 1.0, &mut rng);
            assert!(w.d().d().max_abs() < 1e-14);
        }
    }

    #[test]
    fn codiff_is_adjoint() {
        let g = Arc::new(Grid::new(3, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 0..3 {
            let a = GridForm::random(&g, k, 1, 1.0, &mut rng);
            let b = GridForm::random(&g, k + 1, 1, 1.0, &mut rng);
            let lhs = a.d().dot(&b);
            let rhs = a.dot(&b.codiff());
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn constant_one_form_samples_to_h() {
        let g = Arc::new(Grid::new(2, 4));
        let sp = Arc::new(JetSpace::new(2, 2));
        let mut f = JetForm::zero(&sp, 1, 1);
        f.comp_mut(sp.mask_pos(0b01), 0)[0] = 1.0;
        let s = GridForm::sample(&g, &f);
        let b0 = g.block_of(0b01);
        let b1 = g.block_of(0b10);
        assert!(s.data[b0.offset..b0.offset + b0.len]
            .iter()
            .all(|v| (v - 0.25).abs() < 1e-15));
        assert!(s.data[b1.offset..b1.offset + b1.len]
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn star_properties() {
        let g = Arc::new(Grid::new(4, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..=4 {
            let w = GridForm::random(&g, k, 1, 1.0, &mut rng);
            let sign = if (k * (4 - k)) % 2 == 0 { 1.0 } else { -1.0 };
            assert!(w.star().star().sub(&w.scale(sign)).max_abs() < 1e-12);
        }
        // volume form -> constant 1
        let sp = Arc::new(JetSpace::new(4, 1));
        let mut vol = JetForm::zero(&sp, 4, 1);
        vol.comp_mut(0, 0)[0] = 1.0;
        let s = GridForm::sample(&g, &vol).star();
        assert!(s.primal.data.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn constant_wedge_is_exact() {
        let g = Arc::new(Grid::new(2, 3));
        let sp = Arc::new(JetSpace::new(2, 1));
        let mut a = JetForm::zero(&sp, 1, 1);
        a.comp_mut(sp.mask_pos(0b01), 0)[0] = 1.0;
        let mut b = JetForm::zero(&sp, 1, 1);
        b.comp_mut(sp.mask_pos(0b10), 0)[0] = 1.0;
        let p = Bilinear::from_fn(1, 1, 1, |_, _, _| 1.0);
        let w = GridForm::sample(&g, &a).wedge(&GridForm::sample(&g, &b), &p);
        let expect = GridForm::sample(&g, &a.wedge(&b, &p));
        assert!(w.sub(&expect).max_abs() < 1e-15);
    }
}
