use super::cochain::GridForm;
use super::space::next_index;

/// Split of a cochain's values near one face `x_axis = side` of the cube.
/// Tangential cells lie in the face and do not span `axis`; normal cells
/// span `axis` and sit in the layer adjacent to the face.
#[derive(Clone, Debug)]
pub struct FaceTrace {
    pub axis: usize,
    pub side: usize,
    pub tangential: GridForm,
    pub normal: GridForm,
}

impl FaceTrace {
    /// The cochain restricted to every cell touching the face.
    pub fn restriction(&self) -> GridForm {
        self.tangential.add(&self.normal)
    }
}

impl GridForm {
    /// `(w_T, w_N)` on each of the `2m` faces, zero-padded to full cochains.
    pub fn boundary_traces(&self) -> Vec<FaceTrace> {
        let g = &self.grid;
        let (m, n, dim) = (g.m, g.n, self.dim);
        let mut out = Vec::with_capacity(2 * m);
        let mut x = vec![0usize; m];
        for axis in 0..m {
            for side in 0..2 {
                let mut t = GridForm::zero(g, self.degree, dim);
                let mut nn = t.clone();
                for b in g.blocks(self.degree) {
                    let spans = b.mask & (1 << axis) != 0;
                    x.iter_mut().for_each(|v| *v = 0);
                    let mut c = b.offset;
                    loop {
                        let target = if spans {
                            let layer = if side == 0 { 0 } else { n - 1 };
                            (x[axis] == layer).then_some(&mut nn)
                        } else {
                            (x[axis] == side * n).then_some(&mut t)
                        };
                        if let Some(f) = target {
                            f.data[c * dim..(c + 1) * dim]
                                .copy_from_slice(&self.data[c * dim..(c + 1) * dim]);
                        }
                        c += 1;
                        if !next_index(&mut x, &b.ext) {
                            break;
                        }
                    }
                }
                out.push(FaceTrace {
                    axis,
                    side,
                    tangential: t,
                    normal: nn,
                });
            }
        }
        out
    }

    /// `sqrt(sum over faces |w_N|^2)` in the weighted norm.
    pub fn normal_trace_norm(&self) -> f64 {
        self.boundary_traces()
            .iter()
            .map(|f| f.normal.dot(&f.normal))
            .sum::<f64>()
            .sqrt()
    }

    /// `sqrt(sum over faces |w_T|^2)` in the weighted norm.
    pub fn tangential_trace_norm(&self) -> f64 {
        self.boundary_traces()
            .iter()
            .map(|f| f.tangential.dot(&f.tangential))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::jet::{JetForm, JetSpace};
    use rand::SeedableRng;
    use std::sync::Arc;

    #[test]
    fn axis_aligned_constants() {
        let g = Arc::new(Grid::new(3, 4));
        let sp = Arc::new(JetSpace::new(3, 2));
        let dx1 = GridForm::sample(&g, &JetForm::coordinate(&sp, 0).d());
        let dx2 = GridForm::sample(&g, &JetForm::coordinate(&sp, 1).d());
        for f in dx1.boundary_traces().iter().filter(|f| f.axis == 0) {
            assert_eq!(f.tangential.max_abs(), 0.0);
            assert!(f.normal.max_abs() > 0.0);
        }
        for f in dx2.boundary_traces().iter().filter(|f| f.axis == 0) {
            assert_eq!(f.normal.max_abs(), 0.0);
        }
    }

    #[test]
    fn pythagoras_per_face() {
        let g = Arc::new(Grid::new(3, 5));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for k in 0..=3 {
            let w = GridForm::random(&g, k, 2, 1.0, &mut rng);
            for f in w.boundary_traces() {
                let r = f.restriction();
                let lhs = f.tangential.dot(&f.tangential) + f.normal.dot(&f.normal);
                assert!((lhs - r.dot(&r)).abs() <= 1e-12 * r.dot(&r).max(1.0));
                assert_eq!(f.tangential.dot(&f.normal), 0.0);
            }
        }
    }
}
