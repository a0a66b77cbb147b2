use std::sync::Arc;

use nalgebra::DMatrix;

use super::form::JetForm;
use super::space::JetSpace;
use crate::xmod::{CrossedModule, Rep};

/// Square matrix of jets, `data[(r * n + c) * len + mono]`.
#[derive(Clone, Debug)]
pub struct JetMatrix {
    pub space: Arc<JetSpace>,
    pub n: usize,
    pub data: Vec<f64>,
}

impl JetMatrix {
    pub fn zeros(space: &Arc<JetSpace>, n: usize) -> Self {
        Self {
            space: space.clone(),
            n,
            data: vec![0.0; n * n * space.len()],
        }
    }

    pub fn constant(space: &Arc<JetSpace>, m: &DMatrix<f64>) -> Self {
        let mut r = Self::zeros(space, m.nrows());
        let len = space.len();
        for i in 0..r.n {
            for j in 0..r.n {
                r.data[(i * r.n + j) * len] = m[(i, j)];
            }
        }
        r
    }

    pub fn identity(space: &Arc<JetSpace>, n: usize) -> Self {
        Self::constant(space, &DMatrix::identity(n, n))
    }

    /// `sum_a gamma^a(x) gens[a]` for a 0-form `gamma`.
    pub fn from_generators(gamma: &JetForm, gens: &[DMatrix<f64>], n: usize) -> Self {
        assert_eq!(gamma.degree, 0);
        assert_eq!(gamma.dim, gens.len());
        let sp = &gamma.space;
        let len = sp.len();
        let mut r = Self::zeros(sp, n);
        for (a, g) in gens.iter().enumerate() {
            let ga = gamma.comp(0, a);
            for i in 0..n {
                for j in 0..n {
                    let t = g[(i, j)];
                    if t != 0.0 {
                        let s = (i * n + j) * len;
                        r.data[s..s + len]
                            .iter_mut()
                            .zip(ga)
                            .for_each(|(x, y)| *x += t * y);
                    }
                }
            }
        }
        r
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        let len = self.space.len();
        let s = (i * self.n + j) * len;
        &self.data[s..s + len]
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let len = self.space.len();
        let mut r = Self::zeros(&self.space, n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entry(i, k);
                if a.iter().all(|v| *v == 0.0) {
                    continue;
                }
                for j in 0..n {
                    let b = o.entry(k, j);
                    if b.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    let s = (i * n + j) * len;
                    self.space.mul_acc(a, b, 1.0, &mut r.data[s..s + len]);
                }
            }
        }
        r
    }

    pub fn add_scaled(&mut self, o: &Self, s: f64) {
        self.data
            .iter_mut()
            .zip(&o.data)
            .for_each(|(x, y)| *x += s * y);
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut r = self.clone();
        r.data.iter_mut().for_each(|x| *x *= s);
        r
    }

    pub fn partial(&self, axis: usize) -> Self {
        let len = self.space.len();
        let mut r = Self::zeros(&self.space, self.n);
        for e in 0..self.n * self.n {
            let src = &self.data[e * len..(e + 1) * len];
            self.space
                .deriv_acc(axis, src, 1.0, &mut r.data[e * len..(e + 1) * len]);
        }
        r
    }

    /// Constant term.
    pub fn value(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j)[0])
    }

    /// Scaling and squaring with a Horner Taylor core, in jet arithmetic.
    pub fn exp(&self) -> Self {
        let n = self.n;
        if n == 0 {
            return self.clone();
        }
        let norm = self.value().abs().row_sum().max();
        let mut s = 0u32;
        while norm / f64::powi(2.0, s as i32) > 0.5 {
            s += 1;
        }
        let x = self.scale(1.0 / f64::powi(2.0, s as i32));
        let id = Self::identity(&self.space, n);
        let terms = 18;
        let mut p = id.clone();
        for k in (1..=terms).rev() {
            let mut t = x.mul(&p).scale(1.0 / k as f64);
            t.add_scaled(&id, 1.0);
            p = t;
        }
        for _ in 0..s {
            p = p.mul(&p);
        }
        p
    }

    /// `out^j_I = sum_i M_{ji} w^i_I`.
    pub fn apply(&self, w: &JetForm) -> JetForm {
        assert_eq!(self.n, w.dim, "matrix/form dimension");
        let sp = &self.space;
        let mut out = JetForm::zero(sp, w.degree, w.dim);
        for c in 0..w.n_components() {
            for j in 0..self.n {
                for i in 0..self.n {
                    let mji = self.entry(j, i);
                    if mji.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    let src = w.comp(c, i).to_vec();
                    sp.mul_acc(mji, &src, 1.0, out.comp_mut(c, j));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct JetReps {
    pub fund: JetMatrix,
    pub ad: JetMatrix,
    pub alpha: JetMatrix,
    pub beta: JetMatrix,
}

impl JetReps {
    fn mul(&self, o: &Self) -> Self {
        Self {
            fund: self.fund.mul(&o.fund),
            ad: self.ad.mul(&o.ad),
            alpha: self.alpha.mul(&o.alpha),
            beta: self.beta.mul(&o.beta),
        }
    }

    pub fn rep(&self, r: Rep) -> &JetMatrix {
        match r {
            Rep::Ad => &self.ad,
            Rep::Alpha => &self.alpha,
            Rep::Beta => &self.beta,
        }
    }
}

/// A group-valued jet field together with its pointwise inverse, in every
/// representation the gauge formulas use.
#[derive(Clone, Debug)]
pub struct JetGroupField {
    pub fwd: JetReps,
    pub inv: JetReps,
}

fn reps_exp(module: &CrossedModule, gamma: &JetForm) -> JetReps {
    let g = &module.g;
    let ad_gens: Vec<DMatrix<f64>> = (0..g.dim).map(|i| g.ad_basis(i)).collect();
    JetReps {
        fund: JetMatrix::from_generators(gamma, &g.basis, g.mat_size).exp(),
        ad: JetMatrix::from_generators(gamma, &ad_gens, g.dim).exp(),
        alpha: JetMatrix::from_generators(gamma, &module.alpha_hat.generators, module.h.dim).exp(),
        beta: JetMatrix::from_generators(gamma, &module.beta_hat.generators, module.l.dim).exp(),
    }
}

impl JetGroupField {
    /// `g = exp(gamma)` for a `g`-valued jet 0-form.
    pub fn exp(module: &CrossedModule, gamma: &JetForm) -> Self {
        Self {
            fwd: reps_exp(module, gamma),
            inv: reps_exp(module, &gamma.scale(-1.0)),
        }
    }

    pub fn identity(module: &CrossedModule, space: &Arc<JetSpace>) -> Self {
        let id = JetReps {
            fund: JetMatrix::identity(space, module.g.mat_size),
            ad: JetMatrix::identity(space, module.g.dim),
            alpha: JetMatrix::identity(space, module.h.dim),
            beta: JetMatrix::identity(space, module.l.dim),
        };
        Self {
            fwd: id.clone(),
            inv: id,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            fwd: self.fwd.mul(&o.fwd),
            inv: o.inv.mul(&self.inv),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            fwd: self.inv.clone(),
            inv: self.fwd.clone(),
        }
    }

    /// `g^{-1} dg` as a `g`-valued 1-form, read off the matrix realization.
    pub fn maurer_cartan(&self, module: &CrossedModule) -> JetForm {
        let sp = self.fwd.fund.space.clone();
        let g = &module.g;
        let d = g.mat_size;
        let len = sp.len();
        let cmap = g.coord_map();
        let mut out = JetForm::zero(&sp, 1, g.dim);
        for axis in 0..sp.m {
            let mc = self.inv.fund.mul(&self.fwd.fund.partial(axis));
            let comp = sp.mask_pos(1 << axis);
            for a in 0..g.dim {
                let o = out.comp_mut(comp, a);
                for r in 0..d {
                    for c in 0..d {
                        // column-major flattening
                        let t = cmap[(a, c * d + r)];
                        if t == 0.0 {
                            continue;
                        }
                        let e = &mc.data[(r * d + c) * len..(r * d + c + 1) * len];
                        o.iter_mut().zip(e).for_each(|(x, y)| *x += t * y);
                    }
                }
            }
        }
        out
    }

    /// Pointwise group-membership defect `|g g^{-1} - I|` (max coefficient).
    pub fn inverse_defect(&self) -> f64 {
        let p = self.fwd.fund.mul(&self.inv.fund);
        let id = JetMatrix::identity(&p.space, p.n);
        p.data
            .iter()
            .zip(&id.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xmod;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exp_times_inverse_is_identity() {
        let m = xmod::identity_su2();
        let sp = Arc::new(JetSpace::new(3, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gamma = JetForm::random(&sp, 0, 3, 0.8, &mut rng);
        let g = JetGroupField::exp(&m, &gamma);
        assert!(g.inverse_defect() < 1e-13);
    }

    #[test]
    fn constant_part_matches_dense_exp() {
        let m = xmod::product();
        let sp = Arc::new(JetSpace::new(2, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let gamma = JetForm::random(&sp, 0, m.g.dim, 1.0, &mut rng);
        let g = JetGroupField::exp(&m, &gamma);
        let x = nalgebra::DVector::from_fn(m.g.dim, |a, _| gamma.comp(0, a)[0]);
        let dense = m.group_exp(&x);
        assert!((g.fwd.alpha.value() - dense.alpha).amax() < 1e-13);
        assert!((g.fwd.fund.value() - dense.fund).amax() < 1e-13);
    }

    #[test]
    fn maurer_cartan_of_linear_path() {
        // g = exp(x_1 X) has g^{-1} dg = X dx_1.
        let m = xmod::identity_su2();
        let sp = Arc::new(JetSpace::new(2, 4));
        let mut gamma = JetForm::zero(&sp, 0, 3);
        let x1 = JetForm::coordinate(&sp, 0);
        gamma.comp_mut(0, 1).copy_from_slice(x1.comp(0, 0));
        let mc = JetGroupField::exp(&m, &gamma).maurer_cartan(&m);
        assert!((mc.coeff(0b01, 1, &[0, 0]) - 1.0).abs() < 1e-14);
        let mut expect = JetForm::zero(&sp, 1, 3);
        expect.comp_mut(0, 1)[0] = 1.0;
        assert!(mc.sub(&expect).max_abs_to(3) < 1e-13);
    }
}
