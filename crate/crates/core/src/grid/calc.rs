use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Grid, GridForm, GridGroupField};
use crate::gauge::Calculus;
use crate::lie::Bilinear;
use crate::xmod::{CrossedModule, Rep};

/// Grid backend for the gauge engine. Norms are weighted L2 norms with the
/// identity Gram matrix on coefficients.
pub struct GridCalculus {
    pub grid: Arc<Grid>,
    pub module: Arc<CrossedModule>,
}

impl GridCalculus {
    pub fn new(module: &CrossedModule, m: usize, n: usize) -> Self {
        Self {
            grid: Arc::new(Grid::new(m, n)),
            module: Arc::new(module.clone()),
        }
    }
}

impl Calculus for GridCalculus {
    type Form = GridForm;
    type Group = GridGroupField;

    fn ambient_dim(&self) -> usize {
        self.grid.m
    }
    fn zero(&self, degree: usize, dim: usize) -> GridForm {
        GridForm::zero(&self.grid, degree, dim)
    }
    fn degree(&self, f: &GridForm) -> usize {
        f.degree
    }
    fn add(&self, a: &GridForm, b: &GridForm) -> GridForm {
        a.add(b)
    }
    fn sub(&self, a: &GridForm, b: &GridForm) -> GridForm {
        a.sub(b)
    }
    fn scale(&self, a: &GridForm, s: f64) -> GridForm {
        a.scale(s)
    }
    fn d(&self, a: &GridForm) -> GridForm {
        a.d()
    }
    fn wedge(&self, a: &GridForm, b: &GridForm, p: &Bilinear) -> GridForm {
        a.wedge(b, p)
    }
    fn map(&self, m: &DMatrix<f64>, a: &GridForm) -> GridForm {
        a.map(m)
    }
    fn act_inv(&self, g: &GridGroupField, rep: Rep, a: &GridForm) -> GridForm {
        g.act(rep, a, true)
    }
    fn act(&self, g: &GridGroupField, rep: Rep, a: &GridForm) -> GridForm {
        g.act(rep, a, false)
    }
    fn gauge_connection(&self, g: &GridGroupField, a: &GridForm) -> GridForm {
        g.gauge_connection(a)
    }
    fn group_identity(&self) -> GridGroupField {
        GridGroupField::identity(&self.grid, &self.module)
    }
    fn group_mul(&self, a: &GridGroupField, b: &GridGroupField) -> GridGroupField {
        a.mul(b)
    }
    fn group_inv(&self, a: &GridGroupField) -> GridGroupField {
        a.inverse()
    }
    fn norm(&self, a: &GridForm) -> f64 {
        a.l2()
    }
}
