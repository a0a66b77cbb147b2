use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use super::space::{shuffle_sign, JetSpace};
use crate::lie::Bilinear;

/// An algebra-valued differential form whose components are jets.
///
/// Layout: `data[(comp * dim + a) * n + mono]` where `comp` enumerates the
/// sorted `degree`-subsets of the coordinates.
#[derive(Clone, Debug)]
pub struct JetForm {
    pub space: Arc<JetSpace>,
    pub degree: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl JetForm {
    pub fn zero(space: &Arc<JetSpace>, degree: usize, dim: usize) -> Self {
        let len = space.n_components(degree) * dim * space.len();
        Self {
            space: space.clone(),
            degree,
            dim,
            data: vec![0.0; len],
        }
    }

    /// The coordinate function `x_i` as a scalar 0-form.
    pub fn coordinate(space: &Arc<JetSpace>, i: usize) -> Self {
        let mut f = Self::zero(space, 0, 1);
        let mut e = vec![0u8; space.m];
        e[i] = 1;
        if let Some(p) = space.index_of(&e) {
            f.data[p] = 1.0;
        }
        f
    }

    /// Random coefficients, uniform in `[-amp, amp]` on every stored monomial.
    pub fn random(
        space: &Arc<JetSpace>,
        degree: usize,
        dim: usize,
        amp: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut f = Self::zero(space, degree, dim);
        for v in f.data.iter_mut() {
            *v = rng.gen_range(-amp..=amp);
        }
        f
    }

    /// Values at `point` of the polynomial components, laid out `[comp * dim + a]`.
    pub fn eval(&self, point: &[f64]) -> Vec<f64> {
        let sp = &self.space;
        let pows: Vec<f64> = (0..sp.len())
            .map(|i| {
                sp.monomial(i)
                    .iter()
                    .zip(point)
                    .map(|(&e, &c)| c.powi(e as i32))
                    .product()
            })
            .collect();
        (0..self.n_components() * self.dim)
            .map(|ca| {
                let n = self.n();
                self.data[ca * n..(ca + 1) * n]
                    .iter()
                    .zip(&pows)
                    .map(|(c, w)| c * w)
                    .sum()
            })
            .collect()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.space.len()
    }

    #[inline]
    pub fn comp(&self, c: usize, a: usize) -> &[f64] {
        let n = self.n();
        let s = (c * self.dim + a) * n;
        &self.data[s..s + n]
    }

    #[inline]
    pub fn comp_mut(&mut self, c: usize, a: usize) -> &mut [f64] {
        let n = self.n();
        let s = (c * self.dim + a) * n;
        &mut self.data[s..s + n]
    }

    pub fn n_components(&self) -> usize {
        self.space.n_components(self.degree)
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(
            (self.degree, self.dim),
            (o.degree, o.dim),
            "form shape mismatch"
        );
        let mut r = self.clone();
        r.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a += b);
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(
            (self.degree, self.dim),
            (o.degree, o.dim),
            "form shape mismatch"
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

    pub fn d(&self) -> Self {
        let sp = self.space.clone();
        let m = sp.m;
        if self.degree >= m {
            return Self::zero(&sp, m.min(self.degree + 1), self.dim);
        }
        let mut out = Self::zero(&sp, self.degree + 1, self.dim);
        for (c, &mask) in sp.masks(self.degree).iter().enumerate() {
            for i in 0..m {
                if mask & (1 << i) != 0 {
                    continue;
                }
                let dst = mask | (1 << i);
                let sign = if (mask & ((1 << i) - 1)).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let dc = sp.mask_pos(dst);
                for a in 0..self.dim {
                    let src = self.comp(c, a).to_vec();
                    sp.deriv_acc(i, &src, sign, out.comp_mut(dc, a));
                }
            }
        }
        out
    }

    /// `sum_{i,j} V^i ^ W^j (x) P(e_i, e_j)`.
    pub fn wedge(&self, w: &Self, p: &Bilinear) -> Self {
        assert_eq!(p.left, self.dim, "pairing left dimension");
        assert_eq!(p.right, w.dim, "pairing right dimension");
        let sp = self.space.clone();
        let deg = self.degree + w.degree;
        if deg > sp.m {
            return Self::zero(&sp, sp.m, p.out);
        }
        let mut out = Self::zero(&sp, deg, p.out);
        let support = p.support();
        let n = sp.len();
        let mut prod = vec![0.0; n];
        for (ci, &mi) in sp.masks(self.degree).iter().enumerate() {
            for (cj, &mj) in sp.masks(w.degree).iter().enumerate() {
                if mi & mj != 0 {
                    continue;
                }
                let sign = shuffle_sign(mi, mj);
                let dc = sp.mask_pos(mi | mj);
                for &(a, b) in &support {
                    let va = self.comp(ci, a);
                    let wb = w.comp(cj, b);
                    if va.iter().all(|v| *v == 0.0) || wb.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    prod.iter_mut().for_each(|v| *v = 0.0);
                    sp.mul_acc(va, wb, sign, &mut prod);
                    for (k, t) in p.pair_slice(a, b).iter().enumerate() {
                        if *t != 0.0 {
                            let o = out.comp_mut(dc, k);
                            o.iter_mut().zip(&prod).for_each(|(x, y)| *x += t * y);
                        }
                    }
                }
            }
        }
        out
    }

    /// Applies a constant linear map to the algebra values.
    pub fn map(&self, mat: &DMatrix<f64>) -> Self {
        assert_eq!(mat.ncols(), self.dim, "map dimension");
        let mut out = Self::zero(&self.space, self.degree, mat.nrows());
        for c in 0..self.n_components() {
            for a in 0..self.dim {
                for b in 0..mat.nrows() {
                    let t = mat[(b, a)];
                    if t == 0.0 {
                        continue;
                    }
                    let src = self.comp(c, a).to_vec();
                    out.comp_mut(c, b)
                        .iter_mut()
                        .zip(&src)
                        .for_each(|(x, y)| *x += t * y);
                }
            }
        }
        out
    }

    /// Euclidean Hodge star, `*dx_I = eps(I, I^c) dx_{I^c}`.
    pub fn star(&self) -> Self {
        let sp = self.space.clone();
        let full = (1u32 << sp.m) - 1;
        let mut out = Self::zero(&sp, sp.m - self.degree, self.dim);
        for (c, &mask) in sp.masks(self.degree).iter().enumerate() {
            let comp = full & !mask;
            let sign = shuffle_sign(mask, comp);
            let dc = sp.mask_pos(comp);
            for a in 0..self.dim {
                let src = self.comp(c, a).to_vec();
                out.comp_mut(dc, a)
                    .iter_mut()
                    .zip(&src)
                    .for_each(|(x, y)| *x += sign * y);
            }
        }
        out
    }

    /// `d* = (-1)^{m(k+1)+1} * d *` on `k`-forms.
    pub fn codiff(&self) -> Self {
        let m = self.space.m;
        let k = self.degree;
        if k == 0 {
            return Self::zero(&self.space, 0, self.dim);
        }
        let sign = if (m * (k + 1) + 1) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        self.star().d().star().scale(sign)
    }

    /// Max-abs coefficient among monomials of total degree `<= max_deg`.
    pub fn max_abs_to(&self, max_deg: usize) -> f64 {
        let sp = &self.space;
        let n = sp.len();
        let mut r = 0.0f64;
        for (i, v) in self.data.iter().enumerate() {
            if sp.degree_of(i % n) <= max_deg {
                r = r.max(v.abs());
            }
        }
        r
    }

    /// Residual measure used by the identity suites: coefficients of degree `<= K - 2`.
    pub fn residual(&self) -> f64 {
        self.max_abs_to(self.space.order.saturating_sub(2))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Coefficient of `x^exps` in component `(comp_mask, a)`.
    pub fn coeff(&self, mask: u32, a: usize, exps: &[u8]) -> f64 {
        match self.space.index_of(exps) {
            Some(i) => self.comp(self.space.mask_pos(mask), a)[i],
            None => 0.0,
        }
    }

    /// Sets every coefficient of total degree `> max_deg` to zero.
    pub fn truncate(&self, max_deg: usize) -> Self {
        let mut r = self.clone();
        let n = self.n();
        for (i, v) in r.data.iter_mut().enumerate() {
            if self.space.degree_of(i % n) > max_deg {
                *v = 0.0;
            }
        }
        r
    }

    /// Pointwise `sum_ab w^a G_ab w^b` as a scalar jet (0-form, dim 1),
    /// summed over components.
    pub fn pointwise_norm2(&self, gram: &DMatrix<f64>) -> Self {
        let sp = self.space.clone();
        let mut out = Self::zero(&sp, 0, 1);
        for c in 0..self.n_components() {
            for a in 0..self.dim {
                for b in 0..self.dim {
                    let g = gram[(a, b)];
                    if g == 0.0 {
                        continue;
                    }
                    let (x, y) = (self.comp(c, a).to_vec(), self.comp(c, b).to_vec());
                    sp.mul_acc(&x, &y, g, out.comp_mut(0, 0));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_pairing() -> Bilinear {
        Bilinear::from_fn(1, 1, 1, |_, _, _| 1.0)
    }

    #[test]
    fn d_of_coordinate_is_unit_one_form() {
        let sp = Arc::new(JetSpace::new(3, 4));
        let x1 = JetForm::coordinate(&sp, 0);
        let dx = x1.d();
        assert_eq!(dx.coeff(0b001, 0, &[0, 0, 0]), 1.0);
        assert_eq!(dx.max_abs(), 1.0);
        let c = JetForm::zero(&sp, 0, 2);
        assert_eq!(c.d().max_abs(), 0.0);
    }

    #[test]
    fn dd_vanishes() {
        let sp = Arc::new(JetSpace::new(4, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..3 {
            let w = JetForm::random(&sp, k, 2, 1.0, &mut rng);
            assert!(w.d().d().residual() < 1e-12);
        }
    }

    #[test]
    fn star_star_sign() {
        for (m, k, s) in [(4, 2, 1.0), (6, 2, 1.0), (6, 3, -1.0), (5, 2, 1.0)] {
            let sp = Arc::new(JetSpace::new(m, 2));
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let w = JetForm::random(&sp, k, 1, 1.0, &mut rng);
            assert!(
                w.star().star().sub(&w.scale(s)).max_abs() < 1e-15,
                "m={m} k={k}"
            );
        }
    }

    #[test]
    fn leibniz_and_graded_commutativity() {
        let sp = Arc::new(JetSpace::new(4, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = scalar_pairing();
        let a = JetForm::random(&sp, 1, 1, 1.0, &mut rng);
        let b = JetForm::random(&sp, 2, 1, 1.0, &mut rng);
        // a^b = (-1)^{1*2} b^a
        assert!(a.wedge(&b, &p).sub(&b.wedge(&a, &p)).residual() < 1e-12);
        // d(a^b) = da^b - a^db
        let lhs = a.wedge(&b, &p).d();
        let rhs = a.d().wedge(&b, &p).sub(&a.wedge(&b.d(), &p));
        assert!(lhs.sub(&rhs).residual() < 1e-12);
    }

    #[test]
    fn codiff_squares_to_zero() {
        let sp = Arc::new(JetSpace::new(5, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = JetForm::random(&sp, 3, 1, 1.0, &mut rng);
        assert!(w.codiff().codiff().residual() < 1e-12);
    }
}
