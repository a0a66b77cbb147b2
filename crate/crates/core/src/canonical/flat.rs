use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::Engine;
use crate::grid::{next_index, GridCalculus, GridForm, GridGroupField};
use crate::linalg;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FlatReport {
    /// `|F_A|` in L2.
    pub curvature: f64,
    pub cap: f64,
    /// Max over plaquettes of `|U - 1|` for the holonomy `U` around it.
    pub holonomy_max: f64,
    /// `|g*A|` in L2 after trivialization.
    pub residual: f64,
}

fn edge_exp(calc: &GridCalculus, a: &GridForm, cell: usize, sign: f64) -> DMatrix<f64> {
    let v = DVector::from_column_slice(a.value(cell)) * sign;
    linalg::expm(&calc.module.g.to_matrix(&v))
}

/// Max plaquette holonomy deviation of the link field `exp(A_e)`.
pub fn holonomy_defect(calc: &GridCalculus, a: &GridForm) -> f64 {
    let g = &calc.grid;
    let m = g.m;
    let mut worst = 0.0f64;
    let mut x = vec![0usize; m];
    for b in g.blocks(2) {
        let i = b.mask.trailing_zeros() as usize;
        let j = 31 - b.mask.leading_zeros() as usize;
        let bi = g.block_of(1 << i);
        let bj = g.block_of(1 << j);
        x.iter_mut().for_each(|v| *v = 0);
        loop {
            let e1 = bi.offset + bi.index(&x);
            let e4 = bj.offset + bj.index(&x);
            let e2 = e4 + bj.stride[i];
            let e3 = e1 + bi.stride[j];
            let u = edge_exp(calc, a, e1, 1.0)
                * edge_exp(calc, a, e2, 1.0)
                * edge_exp(calc, a, e3, -1.0)
                * edge_exp(calc, a, e4, -1.0);
            let n = u.nrows();
            worst = worst.max(linalg::max_abs(&(u - DMatrix::identity(n, n))));
            if !next_index(&mut x, &b.ext) {
                break;
            }
        }
    }
    worst
}

/// Integrates `dg = -A g` from the origin: each node is reached from its
/// neighbour below along the highest axis with a nonzero index, so axis 0 is
/// swept first, then axis 1 from every point of that line, and so on.
pub fn flat_trivialize(
    calc: &GridCalculus,
    a: &GridForm,
    cap: f64,
) -> Result<(GridGroupField, FlatReport)> {
    let eng = Engine::new(calc, &calc.module);
    let curvature = eng.curvature(a).l2();
    if curvature > cap {
        return Err(Error::Precondition(format!(
            "connection is not flat: |F_A| = {curvature:.3e} exceeds the cap {cap:.3e}"
        )));
    }
    let g = &calc.grid;
    let module = &calc.module;
    let nb = g.block_of(0);
    let mut nodes = vec![crate::xmod::GroupElement::identity(module); g.node_count()];
    let mut x = vec![0usize; g.m];
    loop {
        if let Some(j) = (0..g.m).rev().find(|&j| x[j] > 0) {
            let mut prev = x.clone();
            prev[j] -= 1;
            let eb = g.block_of(1 << j);
            let e = eb.offset + eb.index(&prev);
            let v = DVector::from_column_slice(a.value(e)) * -1.0;
            let step = module.group_exp(&v);
            let here = nb.index(&x);
            nodes[here] = step.mul(&nodes[nb.index(&prev)]);
        }
        if !next_index(&mut x, &nb.ext) {
            break;
        }
    }
    let field = GridGroupField::from_nodes(g, module, nodes);
    let residual = field.gauge_connection(a).l2();
    let report = FlatReport {
        curvature,
        cap,
        holonomy_max: holonomy_defect(calc, a),
        residual,
    };
    Ok((field, report))
}
