use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cg::{self, CgStats};
use crate::error::{Error, Result};
use crate::grid::{next_index, Grid, GridForm};

/// Largest grid per dimension for which the stacked system fits in memory.
pub fn max_grid(m: usize) -> Option<usize> {
    match m {
        4 => Some(32),
        6 => Some(6),
        8 => Some(4),
        _ => None,
    }
}

/// Cells not contained in the boundary of the cube: every unspanned
/// coordinate lies strictly between 0 and `n`.
pub fn interior_cells(grid: &Grid, k: usize) -> Vec<bool> {
    let mut out = vec![false; grid.count(k)];
    let mut x = vec![0usize; grid.m];
    for b in grid.blocks(k) {
        x.iter_mut().for_each(|v| *v = 0);
        let mut c = b.offset;
        loop {
            out[c] = (0..grid.m).all(|j| b.mask & (1 << j) != 0 || (x[j] > 0 && x[j] < grid.n));
            c += 1;
            if !next_index(&mut x, &b.ext) {
                break;
            }
        }
    }
    out
}

/// Cells spanning some axis from within the boundary layer of that axis.
pub fn normal_trace_cells(grid: &Grid, k: usize) -> Vec<bool> {
    let mut out = vec![false; grid.count(k)];
    let mut x = vec![0usize; grid.m];
    for b in grid.blocks(k) {
        x.iter_mut().for_each(|v| *v = 0);
        let mut c = b.offset;
        loop {
            out[c] =
                (0..grid.m).any(|j| b.mask & (1 << j) != 0 && (x[j] == 0 || x[j] + 1 == grid.n));
            c += 1;
            if !next_index(&mut x, &b.ext) {
                break;
            }
        }
    }
    out
}

/// Complement on the cubical lattice with a shift that makes it exact:
/// `(S w)(K^c, x - 1_{K^c}) = eps(K, K^c) w(K, x)` where the target exists.
/// On cells off the boundary `d^T = +- S^T d S` holds identically, which
/// is what turns self-duality plus `codiff = 0` into harmonicity.
pub fn shifted_complement(w: &GridForm) -> GridForm {
    complement_impl(w, false)
}

/// Transpose of [`shifted_complement`] (its inverse where both are defined).
pub fn shifted_complement_transpose(w: &GridForm) -> GridForm {
    complement_impl(w, true)
}

fn complement_impl(w: &GridForm, transpose: bool) -> GridForm {
    let g = &w.grid;
    let full = g.full_mask();
    let dim = w.dim;
    let mut out = GridForm::zero(g, g.m - w.degree, dim);
    let mut x = vec![0usize; g.m];
    let mut y = vec![0usize; g.m];
    for b in g.blocks(w.degree) {
        let comp = full & !b.mask;
        let tb = g.block_of(comp);
        // the forward map lowers the coordinates the source leaves unspanned
        let (src_mask, sign) = if transpose {
            (comp, g.complement_sign(comp))
        } else {
            (b.mask, g.complement_sign(b.mask))
        };
        let lowered = full & !src_mask;
        x.iter_mut().for_each(|v| *v = 0);
        let mut c = b.offset;
        loop {
            let mut ok = true;
            for j in 0..g.m {
                let shift = lowered & (1 << j) != 0;
                y[j] = match (transpose, shift) {
                    (false, true) if x[j] == 0 => {
                        ok = false;
                        0
                    }
                    (false, true) => x[j] - 1,
                    (true, true) => x[j] + 1,
                    _ => x[j],
                };
                if y[j] >= tb.ext[j] {
                    ok = false;
                }
            }
            if ok {
                let t = tb.offset + tb.index(&y);
                for a in 0..dim {
                    out.data[t * dim + a] = sign * w.data[c * dim + a];
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

fn masked(w: &GridForm, mask: &[bool]) -> GridForm {
    let mut out = w.clone();
    for (c, &keep) in mask.iter().enumerate() {
        if !keep {
            out.data[c * w.dim..(c + 1) * w.dim]
                .iter_mut()
                .for_each(|v| *v = 0.0);
        }
    }
    out
}

/// Stacked constraints on a `(p-1)`-form, `p = m/2`: self-duality of `d w`
/// on interior `p`-cells and `h^2 codiff w = 0`. The codifferential is the
/// exact adjoint of `d`, so the second block also carries `w_N = 0` weakly;
/// imposing the geometric trace cellwise as well leaves only fields with
/// `d w = 0` inside.
struct Constraints {
    sign: f64,
    interior: Vec<bool>,
    h2: f64,
    lens: [usize; 2],
    grid: Arc<Grid>,
    degree: usize,
    dim: usize,
}

impl Constraints {
    fn new(grid: &Arc<Grid>, sign: f64, dim: usize) -> Self {
        let p = grid.m / 2;
        Self {
            sign,
            interior: interior_cells(grid, p),
            h2: grid.h * grid.h,
            lens: [grid.count(p) * dim, grid.count(p - 2) * dim],
            grid: grid.clone(),
            degree: p - 1,
            dim,
        }
    }

    fn selfduality(&self, w: &GridForm) -> GridForm {
        let dw = w.d();
        masked(
            &dw.sub(&shifted_complement(&dw).scale(self.sign)),
            &self.interior,
        )
    }

    fn apply(&self, w: &GridForm) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.lens.iter().sum());
        out.extend(self.selfduality(w).data);
        out.extend(w.codiff().scale(self.h2).data);
        out
    }

    fn adjoint(&self, r: &[f64]) -> GridForm {
        let g = &self.grid;
        let p = self.degree + 1;
        let (r1, r2) = r.split_at(self.lens[0]);
        let mut e = GridForm::zero(g, p, self.dim);
        e.data.copy_from_slice(r1);
        let e = masked(&e, &self.interior);
        let mut out = e
            .sub(&shifted_complement_transpose(&e).scale(self.sign))
            .d_transpose();
        let mut c = GridForm::zero(g, p - 2, self.dim);
        c.data.copy_from_slice(r2);
        c.apply_weights(-1.0);
        let mut dc = c.d();
        dc.apply_weights(1.0);
        out.axpy(self.h2, &dc);
        out
    }
}

/// Interior `(m/2 - 1)`-cells where `codiff d w` only reads `d w` on interior
/// `m/2`-cells through the identity above, so the Laplacian of a
/// constrained field vanishes there identically. Found by probing the
/// operator with random data outside the interior.
pub fn harmonic_region(grid: &Arc<Grid>) -> Vec<bool> {
    let p = grid.m / 2;
    let inside = interior_cells(grid, p);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5d);
    let mut probe = GridForm::random(grid, p, 1, 1.0, &mut rng);
    for (c, &i) in inside.iter().enumerate() {
        if i {
            probe.data[c] = 0.0;
        }
    }
    let reach = shifted_complement_transpose(&shifted_complement(&probe).d());
    let eta = GridForm::random(grid, p, 1, 1.0, &mut rng);
    let lhs = eta.d_transpose();
    let rhs = shifted_complement_transpose(&shifted_complement(&eta).d());
    interior_cells(grid, p - 1)
        .into_iter()
        .enumerate()
        .map(|(c, i)| {
            let exact = (lhs.data[c] - rhs.data[c]).abs() < 1e-12
                || (lhs.data[c] + rhs.data[c]).abs() < 1e-12;
            i && exact && reach.data[c] == 0.0
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelfDualResiduals {
    /// `|d w -+ S d w|` on interior cells over `|d w|`.
    pub selfduality: f64,
    /// `|codiff w|` over `|d w|`.
    pub codiff: f64,
    /// Geometric `|w_N|` over `|w|`; diagnostic only.
    pub normal_trace: f64,
    /// Share of `|d w|` carried by interior cells, where self-duality binds.
    pub interior_share: f64,
}

#[derive(Clone, Debug)]
pub struct SelfDualField {
    pub m: usize,
    pub n: usize,
    pub sign: i32,
    pub seed: u64,
    pub attempts: usize,
    pub omega: GridForm,
    pub residuals: SelfDualResiduals,
    pub solve: CgStats,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn residuals(w: &GridForm, sign: i32) -> SelfDualResiduals {
    let g = &w.grid;
    let dw = w.d();
    let dn = dw.l2();
    let inside = interior_cells(g, dw.degree);
    let sd = masked(
        &dw.sub(&shifted_complement(&dw).scale(sign as f64)),
        &inside,
    );
    SelfDualResiduals {
        interior_share: ratio(masked(&dw, &inside).l2(), dn),
        selfduality: ratio(sd.l2(), dn),
        codiff: ratio(w.codiff().l2(), dn),
        normal_trace: ratio(masked(w, &normal_trace_cells(g, w.degree)).l2(), w.l2()),
    }
}

/// A scalar `(m/2 - 1)`-form `w` with `d w = sign S d w` off the boundary
/// and `codiff w = 0`, normalized to unit L2 norm. Built by
/// projecting a random start onto the constraint kernel.
pub fn make_selfdual(m: usize, n: usize, sign: i32, seed: u64, tol: f64) -> Result<SelfDualField> {
    let cap = max_grid(m).ok_or_else(|| {
        Error::Precondition(format!("self-dual fields need m in {{4, 6, 8}}, got {m}"))
    })?;
    if n > cap || n < 2 {
        return Err(Error::Size(format!(
            "self-dual construction at m = {m} supports 2 <= N <= {cap}, got {n}"
        )));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::Precondition(format!(
            "sign must be +1 or -1, got {sign}"
        )));
    }
    let grid = Arc::new(Grid::new(m, n));
    let cons = Constraints::new(&grid, sign as f64, 1);
    let dot = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for attempt in 0..4u64 {
        let s = seed.wrapping_add(attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let w0 = GridForm::random(&grid, cons.degree, 1, 1.0, &mut rng);
        let rhs = cons.apply(&w0);
        let max_iter = 20 * rhs.len().min(50_000);
        let (y, stats) = cg::solve(
            |v: &Vec<f64>| cons.apply(&cons.adjoint(v)),
            &rhs,
            dot,
            tol,
            max_iter,
        )?;
        let mut w = w0.sub(&cons.adjoint(&y));
        let norm = w.l2();
        if norm < 1e-6 * w0.l2() {
            continue;
        }
        w = w.scale(1.0 / norm);
        return Ok(SelfDualField {
            m,
            n,
            sign,
            seed: s,
            attempts: attempt as usize + 1,
            residuals: residuals(&w, sign),
            omega: w,
            solve: stats,
        });
    }
    Err(Error::Precondition(format!(
        "self-dual constraints at m = {m}, N = {n} admit no nonzero solution from four starts"
    )))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct YangMillsCheck {
    pub residuals: SelfDualResiduals,
    /// `|(d codiff + codiff d) w|` on interior cells over `|w|`.
    pub laplacian: f64,
    pub tol: f64,
    pub preconditions_met: bool,
    /// `None` when the preconditions fail: the residual is then only reported.
    pub passed: Option<bool>,
}

pub fn check_selfdual_ym(w: &GridForm, sign: i32, tol: f64) -> YangMillsCheck {
    let residuals = residuals(w, sign);
    let lap = w.d().codiff().add(&w.codiff().d());
    let lap = masked(&lap, &interior_cells(&w.grid, w.degree));
    let laplacian = ratio(lap.l2(), w.l2());
    let preconditions_met = residuals.selfduality <= tol && residuals.codiff <= tol;
    YangMillsCheck {
        residuals,
        laplacian,
        tol,
        preconditions_met,
        passed: preconditions_met.then_some(laplacian <= 10.0 * tol),
    }
}
