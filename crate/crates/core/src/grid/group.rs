use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use super::cochain::GridForm;
use super::space::{next_index, Grid};
use crate::jet::JetForm;
use crate::linalg;
use crate::xmod::{CrossedModule, GroupElement};

/// Group elements at cells of one degree, with inverses.
#[derive(Debug)]
pub struct CellGroups {
    pub fwd: Vec<GroupElement>,
    pub inv: Vec<GroupElement>,
}

/// One group element per grid node, in every representation.
#[derive(Clone, Debug)]
pub struct GridGroupField {
    pub grid: Arc<Grid>,
    pub module: Arc<CrossedModule>,
    pub nodes: Vec<GroupElement>,
    cells: Vec<Arc<OnceLock<Arc<CellGroups>>>>,
}

/// One separable pass combining neighbours along `axis`.
pub fn pass<T>(
    cur: &[T],
    ext: &[usize],
    axis: usize,
    f: impl Fn(&T, &T) -> T,
) -> (Vec<T>, Vec<usize>) {
    let mut next_ext = ext.to_vec();
    next_ext[axis] -= 1;
    let inner: usize = ext[axis + 1..].iter().product();
    let outer: usize = ext[..axis].iter().product();
    let mut out = Vec::with_capacity(next_ext.iter().product());
    for o in 0..outer {
        for t in 0..next_ext[axis] {
            let src = (o * ext[axis] + t) * inner;
            for i in 0..inner {
                out.push(f(&cur[src + i], &cur[src + inner + i]));
            }
        }
    }
    (out, next_ext)
}

/// Coefficients of `log(m)` in the algebra `g`, with the expansion residual.
pub fn log_coords(module: &CrossedModule, m: &DMatrix<f64>) -> (DVector<f64>, f64) {
    module.g.coords(&linalg::logm(m))
}

impl GridGroupField {
    pub fn from_nodes(
        grid: &Arc<Grid>,
        module: &Arc<CrossedModule>,
        nodes: Vec<GroupElement>,
    ) -> Self {
        assert_eq!(nodes.len(), grid.node_count());
        Self {
            grid: grid.clone(),
            module: module.clone(),
            nodes,
            cells: (0..=grid.m).map(|_| Arc::new(OnceLock::new())).collect(),
        }
    }

    pub fn identity(grid: &Arc<Grid>, module: &Arc<CrossedModule>) -> Self {
        let e = GroupElement::identity(module);
        Self::from_nodes(grid, module, vec![e; grid.node_count()])
    }

    /// `g(x) = exp(gamma(x))` for a polynomial `g`-valued 0-form.
    pub fn exp_of(grid: &Arc<Grid>, module: &Arc<CrossedModule>, gamma: &JetForm) -> Self {
        let s = GridForm::sample(grid, gamma);
        let dim = module.g.dim;
        let nodes = (0..grid.node_count())
            .map(|i| module.group_exp(&DVector::from_column_slice(&s.data[i * dim..(i + 1) * dim])))
            .collect();
        Self::from_nodes(grid, module, nodes)
    }

    pub fn constant(grid: &Arc<Grid>, module: &Arc<CrossedModule>, g: &GroupElement) -> Self {
        Self::from_nodes(grid, module, vec![g.clone(); grid.node_count()])
    }

    pub fn mul(&self, o: &Self) -> Self {
        let nodes = self
            .nodes
            .iter()
            .zip(&o.nodes)
            .map(|(a, b)| a.mul(b))
            .collect();
        Self::from_nodes(&self.grid, &self.module, nodes)
    }

    pub fn inverse(&self) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|a| a.inverse().expect("group element invertible"))
            .collect();
        Self::from_nodes(&self.grid, &self.module, nodes)
    }

    /// Geodesic midpoint `a exp(log(a^{-1} b) / 2)`.
    pub fn midpoint(module: &CrossedModule, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let ainv = a
            .fund
            .clone()
            .try_inverse()
            .expect("group element invertible");
        let (x, _) = log_coords(module, &(ainv * &b.fund));
        a.mul(&module.group_exp(&(x * 0.5)))
    }

    /// Group evaluated at the barycenters of all `k`-cells by hierarchical
    /// geodesic midpoints of the corner values, taking axes in increasing
    /// order; each orientation is one pass over its parent of degree `k - 1`.
    /// Cached.
    pub fn at_cells(&self, k: usize) -> Arc<CellGroups> {
        self.cells[k]
            .get_or_init(|| {
                let g = &self.grid;
                let fwd = if k == 0 {
                    self.nodes.clone()
                } else if let Some(c) = self.constant_value() {
                    vec![c.clone(); g.count(k)]
                } else {
                    let lower = self.at_cells(k - 1);
                    let mut fwd = Vec::with_capacity(g.count(k));
                    for b in g.blocks(k) {
                        let top = 31 - b.mask.leading_zeros() as usize;
                        let pb = g.block_of(b.mask & !(1 << top));
                        let parent = &lower.fwd[pb.offset..pb.offset + pb.len];
                        let (c, _) = pass(parent, &pb.ext, top, |x, y| {
                            Self::midpoint(&self.module, x, y)
                        });
                        fwd.extend(c);
                    }
                    fwd
                };
                let inv = match self.constant_value() {
                    Some(c) if k > 0 => {
                        vec![c.inverse().expect("group element invertible"); fwd.len()]
                    }
                    _ => fwd
                        .iter()
                        .map(|x| x.inverse().expect("group element invertible"))
                        .collect(),
                };
                Arc::new(CellGroups { fwd, inv })
            })
            .clone()
    }

    /// The common value when every node carries the same matrix.
    pub fn constant_value(&self) -> Option<&GroupElement> {
        let first = self.nodes.first()?;
        self.nodes
            .iter()
            .all(|n| n.fund == first.fund)
            .then_some(first)
    }

    /// Max over nodes of the residual of expanding `log g` in the algebra.
    pub fn membership_residual(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| log_coords(&self.module, &n.fund).1)
            .fold(0.0, f64::max)
    }

    /// `g^{-1} A g + g^{-1} dg` on edges: `log(g(x)^{-1} exp(A_e) g(x + h e_i))`.
    pub fn gauge_connection(&self, a: &GridForm) -> GridForm {
        assert_eq!(a.degree, 1);
        if let Some(c) = self.constant_value() {
            if c.fund.is_identity(0.0) {
                return a.clone();
            }
        }
        let g = &self.grid;
        let module = &self.module;
        let dim = module.g.dim;
        let mut out = GridForm::zero(g, 1, dim);
        let node_block = g.block_of(0);
        let mut x = vec![0usize; g.m];
        for b in g.blocks(1) {
            let i = b.mask.trailing_zeros() as usize;
            x.iter_mut().for_each(|v| *v = 0);
            let mut c = b.offset;
            loop {
                let n0 = node_block.index(&x);
                let n1 = n0 + node_block.stride[i];
                let ginv = self.nodes[n0]
                    .fund
                    .clone()
                    .try_inverse()
                    .expect("group element invertible");
                let ae = DVector::from_column_slice(a.value(c));
                let ea = linalg::expm(&module.g.to_matrix(&ae));
                let (v, _) = log_coords(module, &(ginv * ea * &self.nodes[n1].fund));
                out.data[c * dim..(c + 1) * dim].copy_from_slice(v.as_slice());
                c += 1;
                if !next_index(&mut x, &b.ext) {
                    break;
                }
            }
        }
        out
    }

    /// `rho(g^{-1})` (or `rho(g)`) applied cellwise.
    pub fn act(&self, rep: crate::xmod::Rep, w: &GridForm, inverse: bool) -> GridForm {
        let cg = self.at_cells(w.degree);
        let list = if inverse { &cg.inv } else { &cg.fwd };
        let dim = w.dim;
        let mut out = GridForm::zero(&w.grid, w.degree, dim);
        if dim == 0 {
            return out;
        }
        for (c, ge) in list.iter().enumerate() {
            let m = ge.rep(rep);
            let v = &w.data[c * dim..(c + 1) * dim];
            let o = &mut out.data[c * dim..(c + 1) * dim];
            for (i, oi) in o.iter_mut().enumerate() {
                *oi = (0..dim).map(|j| m[(i, j)] * v[j]).sum();
            }
        }
        out
    }
}
