use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use super::{JetForm, JetGroupField, JetSpace};
use crate::gauge::{Calculus, ThreeConnection, ThreeGauge, TwoConnection, TwoGauge};
use crate::lie::Bilinear;
use crate::xmod::{CrossedModule, Rep};

/// Jet backend for the gauge engine.
pub struct JetCalculus {
    pub space: Arc<JetSpace>,
    pub module: CrossedModule,
}

impl JetCalculus {
    pub fn new(module: &CrossedModule, m: usize, order: usize) -> Self {
        Self {
            space: Arc::new(JetSpace::new(m, order)),
            module: module.clone(),
        }
    }

    pub fn random_form(&self, degree: usize, dim: usize, amp: f64, rng: &mut impl Rng) -> JetForm {
        JetForm::random(&self.space, degree, dim, amp, rng)
    }

    /// Random form with values in the column span of `basis`.
    pub fn random_in(
        &self,
        degree: usize,
        basis: &DMatrix<f64>,
        amp: f64,
        rng: &mut impl Rng,
    ) -> JetForm {
        let raw = JetForm::random(&self.space, degree, basis.ncols(), amp, rng);
        raw.map(basis)
    }

    pub fn random_group(&self, amp: f64, rng: &mut impl Rng) -> JetGroupField {
        let gamma = JetForm::random(&self.space, 0, self.module.g.dim, amp, rng);
        JetGroupField::exp(&self.module, &gamma)
    }

    pub fn random_gauge2(&self, amp: f64, rng: &mut impl Rng) -> TwoGauge<JetGroupField, JetForm> {
        TwoGauge {
            g: self.random_group(amp, rng),
            chi: self.random_form(1, self.module.h.dim, amp, rng),
        }
    }

    pub fn random_gauge3(
        &self,
        amp: f64,
        rng: &mut impl Rng,
    ) -> ThreeGauge<JetGroupField, JetForm> {
        ThreeGauge {
            g: self.random_group(amp, rng),
            chi: self.random_form(1, self.module.h.dim, amp, rng),
            lambda: self.random_form(2, self.module.l.dim, amp, rng),
        }
    }

    /// A fake-flat pair `(t(eta), d eta + eta ^ eta + kappa)` with `kappa` in Ker t,
    /// which satisfies `F_A = t(B)` identically.
    pub fn random_fake_flat2(&self, amp: f64, rng: &mut impl Rng) -> TwoConnection<JetForm> {
        let m = &self.module;
        let eta = self.random_form(1, m.h.dim, amp, rng);
        let kappa = self.random_in(2, &m.t_hat.kernel_basis, amp, rng);
        let ee = eta.wedge(&eta, &m.h.structure).scale(0.5);
        TwoConnection {
            a: eta.map(&m.t_hat.matrix),
            b: eta.d().add(&ee).add(&kappa),
        }
    }

    /// A fake-flat triple `(0, tau(mu) + d nu, d mu + kappa)` with `nu` in Ker t
    /// and `kappa` in Ker tau.
    pub fn random_fake_flat3(&self, amp: f64, rng: &mut impl Rng) -> ThreeConnection<JetForm> {
        let m = &self.module;
        let mu = self.random_form(2, m.l.dim, amp, rng);
        let nu = self.random_in(1, &m.t_hat.kernel_basis, amp, rng);
        let kappa = self.random_in(3, &m.tau_hat.kernel_basis, amp, rng);
        ThreeConnection {
            a: JetForm::zero(&self.space, 1, m.g.dim),
            b: mu.map(&m.tau_hat.matrix).add(&nu.d()),
            c: mu.d().add(&kappa),
        }
    }
}

impl Calculus for JetCalculus {
    type Form = JetForm;
    type Group = JetGroupField;

    fn ambient_dim(&self) -> usize {
        self.space.m
    }
    fn zero(&self, degree: usize, dim: usize) -> JetForm {
        JetForm::zero(&self.space, degree, dim)
    }
    fn degree(&self, f: &JetForm) -> usize {
        f.degree
    }
    fn add(&self, a: &JetForm, b: &JetForm) -> JetForm {
        a.add(b)
    }
    fn sub(&self, a: &JetForm, b: &JetForm) -> JetForm {
        a.sub(b)
    }
    fn scale(&self, a: &JetForm, s: f64) -> JetForm {
        a.scale(s)
    }
    fn d(&self, a: &JetForm) -> JetForm {
        a.d()
    }
    fn wedge(&self, a: &JetForm, b: &JetForm, p: &Bilinear) -> JetForm {
        a.wedge(b, p)
    }
    fn map(&self, m: &DMatrix<f64>, a: &JetForm) -> JetForm {
        a.map(m)
    }
    fn act_inv(&self, g: &JetGroupField, rep: Rep, a: &JetForm) -> JetForm {
        g.inv.rep(rep).apply(a)
    }
    fn act(&self, g: &JetGroupField, rep: Rep, a: &JetForm) -> JetForm {
        g.fwd.rep(rep).apply(a)
    }
    fn gauge_connection(&self, g: &JetGroupField, a: &JetForm) -> JetForm {
        g.inv.ad.apply(a).add(&g.maurer_cartan(&self.module))
    }
    fn group_identity(&self) -> JetGroupField {
        JetGroupField::identity(&self.module, &self.space)
    }
    fn group_mul(&self, a: &JetGroupField, b: &JetGroupField) -> JetGroupField {
        a.mul(b)
    }
    fn group_inv(&self, a: &JetGroupField) -> JetGroupField {
        a.inverse()
    }
    fn norm(&self, a: &JetForm) -> f64 {
        a.residual()
    }
}
