//! Dense matrix Lie algebras, linear maps between them and actions.
//!
//! Elements are coefficient vectors over the declared basis. Matrices are
//! only touched at construction time and for group-level evaluation
//! (`group_exp`, `group_conj`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// Closure / invariance tolerance used when building algebras.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// A bilinear map `U x V -> W`, stored densely as `out_k = sum T[i][j][k] u_i v_j`
/// together with its nonzero entries for fast contraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bilinear {
    pub left: usize,
    pub right: usize,
    pub out: usize,
    data: Vec<f64>,
}

impl Bilinear {
    pub fn zeros(left: usize, right: usize, out: usize) -> Self {
        Self {
            left,
            right,
            out,
            data: vec![0.0; left * right * out],
        }
    }

    pub fn from_fn(
        left: usize,
        right: usize,
        out: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Self {
        let mut b = Self::zeros(left, right, out);
        for i in 0..left {
            for j in 0..right {
                for k in 0..out {
                    b.data[(i * right + j) * out + k] = f(i, j, k);
                }
            }
        }
        b
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.right + j) * self.out + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.right + j) * self.out + k] = v;
    }

    /// Output vector of `B(e_i, e_j)`.
    pub fn pair_slice(&self, i: usize, j: usize) -> &[f64] {
        let s = (i * self.right + j) * self.out;
        &self.data[s..s + self.out]
    }

    pub fn apply(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.out);
        for i in 0..self.left {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..self.right {
                let c = u[i] * v[j];
                if c == 0.0 {
                    continue;
                }
                for (k, t) in self.pair_slice(i, j).iter().enumerate() {
                    out[k] += c * t;
                }
            }
        }
        out
    }

    /// Pairs `(i, j)` with a nonzero output.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut s = Vec::new();
        for i in 0..self.left {
            for j in 0..self.right {
                if self.pair_slice(i, j).iter().any(|v| *v != 0.0) {
                    s.push((i, j));
                }
            }
        }
        s
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// `(u, v) -> M B(u, v)`.
    pub fn then(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.ncols(), self.out);
        Self::from_fn(self.left, self.right, m.nrows(), |i, j, k| {
            self.pair_slice(i, j)
                .iter()
                .enumerate()
                .map(|(o, t)| m[(k, o)] * t)
                .sum()
        })
    }

    /// `(u, v) -> B(P u, Q v)`.
    pub fn precompose(&self, p: &DMatrix<f64>, q: &DMatrix<f64>) -> Self {
        assert_eq!(p.nrows(), self.left);
        assert_eq!(q.nrows(), self.right);
        Self::from_fn(p.ncols(), q.ncols(), self.out, |a, b, k| {
            let mut s = 0.0;
            for i in 0..self.left {
                if p[(i, a)] == 0.0 {
                    continue;
                }
                for j in 0..self.right {
                    s += p[(i, a)] * q[(j, b)] * self.get(i, j, k);
                }
            }
            s
        })
    }

    /// `(v, u) -> B(u, v)`.
    pub fn swapped(&self) -> Self {
        Self::from_fn(self.right, self.left, self.out, |i, j, k| self.get(j, i, k))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.left)
            .map(|i| {
                (0..self.right)
                    .map(|j| self.pair_slice(i, j).to_vec())
                    .collect()
            })
            .collect()
    }

    /// Block-diagonal sum of two bilinear maps.
    pub fn direct_sum(a: &Self, b: &Self) -> Self {
        let mut s = Self::zeros(a.left + b.left, a.right + b.right, a.out + b.out);
        for i in 0..a.left {
            for j in 0..a.right {
                for k in 0..a.out {
                    s.set(i, j, k, a.get(i, j, k));
                }
            }
        }
        for i in 0..b.left {
            for j in 0..b.right {
                for k in 0..b.out {
                    s.set(a.left + i, a.right + j, a.out + k, b.get(i, j, k));
                }
            }
        }
        s
    }
}

/// How to choose the invariant inner product.
#[derive(Clone, Debug)]
pub enum InnerProduct {
    /// Negative Killing form when positive definite, trace form otherwise.
    Default,
    /// `<X, Y> = tr(X^T Y)` on the matrix realization.
    Trace,
    NegKilling,
    Explicit(DMatrix<f64>),
}

/// A real matrix Lie algebra with an ad-invariant inner product.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    pub name: String,
    pub dim: usize,
    pub mat_size: usize,
    pub basis: Vec<DMatrix<f64>>,
    /// Gram matrix of the invariant inner product.
    pub gram: DMatrix<f64>,
    /// Structure constants `[X_i, X_j] = sum_k c_ijk X_k`.
    pub structure: Bilinear,
    coord_map: DMatrix<f64>,
    pub closure_residual: f64,
    pub invariance_residual: f64,
}

fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.iter().copied())
}

impl LieAlgebra {
    pub fn new(name: &str, basis: Vec<DMatrix<f64>>, ip: InnerProduct) -> Result<Self> {
        let dim = basis.len();
        let mat_size = basis.first().map(|b| b.nrows()).unwrap_or(1);
        for (i, b) in basis.iter().enumerate() {
            if b.nrows() != mat_size || b.ncols() != mat_size {
                return Err(Error::Construction(format!(
                    "algebra {name}: basis matrix {i} is {}x{}, expected {mat_size}x{mat_size}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        let d2 = mat_size * mat_size;
        let span = if dim == 0 {
            DMatrix::zeros(d2, 0)
        } else {
            DMatrix::from_columns(&basis.iter().map(vec_of).collect::<Vec<_>>())
        };
        if dim > 0 && linalg::rank(&span, 1e-12) < dim {
            return Err(Error::Construction(format!(
                "algebra {name}: basis is linearly dependent"
            )));
        }
        let coord_map = linalg::pinv(&span, 1e-13);
        let mut alg = Self {
            name: name.to_string(),
            dim,
            mat_size,
            basis,
            gram: DMatrix::identity(dim, dim),
            structure: Bilinear::zeros(dim, dim, dim),
            coord_map,
            closure_residual: 0.0,
            invariance_residual: 0.0,
        };
        let scale = alg.basis.iter().map(linalg::max_abs).fold(1.0f64, f64::max);
        let mut closure = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let c = &alg.basis[i] * &alg.basis[j] - &alg.basis[j] * &alg.basis[i];
                let (coef, res) = alg.coords(&c);
                closure = closure.max(res);
                for k in 0..dim {
                    alg.structure.set(i, j, k, coef[k]);
                }
            }
        }
        alg.closure_residual = closure;
        if closure > STRUCTURE_TOL * scale * scale {
            return Err(Error::Structure(format!(
                "algebra {name}: basis not closed under the bracket (residual {closure:.3e})"
            )));
        }
        alg.gram = match ip {
            InnerProduct::Trace => alg.trace_form(),
            InnerProduct::NegKilling => -alg.killing(),
            InnerProduct::Explicit(g) => {
                check_dim("explicit Gram matrix", dim, g.nrows())?;
                check_dim("explicit Gram matrix", dim, g.ncols())?;
                g
            }
            InnerProduct::Default => {
                let nk = -alg.killing();
                if dim > 0 && nk.clone().cholesky().is_some() {
                    nk
                } else {
                    alg.trace_form()
                }
            }
        };
        if dim > 0 {
            let sym = linalg::max_abs(&(&alg.gram - alg.gram.transpose()));
            if sym > 1e-12 * linalg::max_abs(&alg.gram).max(1.0)
                || alg.gram.clone().cholesky().is_none()
            {
                return Err(Error::Structure(format!(
                    "algebra {name}: inner product is not symmetric positive definite"
                )));
            }
        }
        alg.invariance_residual = alg.ad_invariance_residual();
        if alg.invariance_residual
            > STRUCTURE_TOL * linalg::max_abs(&alg.gram).max(1.0) * scale.max(1.0)
        {
            return Err(Error::Structure(format!(
                "algebra {name}: inner product is not ad-invariant (residual {:.3e})",
                alg.invariance_residual
            )));
        }
        Ok(alg)
    }

    /// The zero algebra.
    pub fn trivial(name: &str) -> Self {
        Self::new(name, Vec::new(), InnerProduct::Trace).expect("trivial algebra")
    }

    /// `R^n` with zero bracket, realized by diagonal matrices.
    pub fn abelian(name: &str, n: usize) -> Self {
        let basis = (0..n)
            .map(|i| {
                let mut m = DMatrix::zeros(n, n);
                m[(i, i)] = 1.0;
                m
            })
            .collect();
        Self::new(name, basis, InnerProduct::Trace).expect("abelian algebra")
    }

    /// `so(3)` with `(L_a)_{bc} = -eps_{abc}`, so `[L_1, L_2] = L_3`.
    pub fn so3() -> Self {
        let basis = (0..3)
            .map(|a| DMatrix::from_fn(3, 3, |b, c| -levi_civita(a, b, c)))
            .collect();
        Self::new("so3", basis, InnerProduct::Trace).expect("so3")
    }

    /// `su(2)` in the basis `-i sigma_a / 2`, realized as real 4x4 matrices
    /// through `A + iB -> [[A, -B], [B, A]]`. `[e_1, e_2] = e_3`.
    pub fn su2() -> Self {
        let realify = |re: [[f64; 2]; 2], im: [[f64; 2]; 2]| {
            DMatrix::from_fn(4, 4, |r, c| {
                let (br, bc) = (r / 2, c / 2);
                let (i, j) = (r % 2, c % 2);
                match (br, bc) {
                    (0, 0) | (1, 1) => re[i][j],
                    (0, 1) => -im[i][j],
                    _ => im[i][j],
                }
            })
        };
        let basis = vec![
            realify([[0.0, 0.0], [0.0, 0.0]], [[0.0, -0.5], [-0.5, 0.0]]),
            realify([[0.0, -0.5], [0.5, 0.0]], [[0.0, 0.0], [0.0, 0.0]]),
            realify([[0.0, 0.0], [0.0, 0.0]], [[-0.5, 0.0], [0.0, 0.5]]),
        ];
        Self::new("su2", basis, InnerProduct::Trace).expect("su2")
    }

    /// Block-diagonal direct sum. The inner product is the orthogonal sum.
    pub fn direct_sum(name: &str, a: &Self, b: &Self) -> Self {
        let ma = if a.dim == 0 { 0 } else { a.mat_size };
        let mb = if b.dim == 0 { 0 } else { b.mat_size };
        let n = (ma + mb).max(1);
        let mut basis = Vec::new();
        for x in &a.basis {
            let mut m = DMatrix::zeros(n, n);
            m.view_mut((0, 0), (ma, ma)).copy_from(x);
            basis.push(m);
        }
        for x in &b.basis {
            let mut m = DMatrix::zeros(n, n);
            m.view_mut((ma, ma), (mb, mb)).copy_from(x);
            basis.push(m);
        }
        let mut gram = DMatrix::zeros(a.dim + b.dim, a.dim + b.dim);
        gram.view_mut((0, 0), (a.dim, a.dim)).copy_from(&a.gram);
        gram.view_mut((a.dim, a.dim), (b.dim, b.dim))
            .copy_from(&b.gram);
        Self::new(name, basis, InnerProduct::Explicit(gram)).expect("direct sum of valid algebras")
    }

    pub fn trace_form(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            (self.basis[i].transpose() * &self.basis[j]).trace()
        })
    }

    pub fn killing(&self) -> DMatrix<f64> {
        let ads: Vec<_> = (0..self.dim).map(|i| self.ad_basis(i)).collect();
        DMatrix::from_fn(self.dim, self.dim, |i, j| (&ads[i] * &ads[j]).trace())
    }

    /// Matrix of `ad(X_i)` acting on coefficient vectors.
    pub fn ad_basis(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |k, j| self.structure.get(i, j, k))
    }

    pub fn ad(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            if x[i] != 0.0 {
                m += self.ad_basis(i) * x[i];
            }
        }
        m
    }

    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("bracket (left)", self.dim, x.len())?;
        check_dim("bracket (right)", self.dim, y.len())?;
        Ok(self.structure.apply(x, y))
    }

    pub fn to_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.mat_size, self.mat_size);
        for (i, b) in self.basis.iter().enumerate() {
            if x[i] != 0.0 {
                m += b * x[i];
            }
        }
        m
    }

    /// Expands a matrix in the basis; returns the coefficients and the
    /// max-abs residual of the expansion.
    pub fn coords(&self, m: &DMatrix<f64>) -> (DVector<f64>, f64) {
        let v = vec_of(m);
        let c = &self.coord_map * &v;
        let back = if self.dim == 0 {
            DVector::zeros(v.len())
        } else {
            DMatrix::from_columns(&self.basis.iter().map(vec_of).collect::<Vec<_>>()) * &c
        };
        let res = (back - v).amax();
        (c, res)
    }

    /// Linear map from flattened (column-major) matrices to coefficients.
    pub fn coord_map(&self) -> &DMatrix<f64> {
        &self.coord_map
    }

    pub fn ip(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.gram * y)[(0, 0)]
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.ip(x, x).max(0.0).sqrt()
    }

    fn ad_invariance_residual(&self) -> f64 {
        let mut r = 0.0f64;
        for z in 0..self.dim {
            let ad = self.ad_basis(z);
            // <[z,x],y> + <x,[z,y]> = (ad^T G + G ad)_{xy}
            let m = ad.transpose() * &self.gram + &self.gram * &ad;
            r = r.max(linalg::max_abs(&m));
        }
        r
    }

    /// Max Jacobi residual over all basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let e = |i: usize| {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            v
        };
        let br = |x: &DVector<f64>, y: &DVector<f64>| self.structure.apply(x, y);
        let mut r = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (a, b, c) = (e(i), e(j), e(k));
                    let s = br(&a, &br(&b, &c)) + br(&b, &br(&c, &a)) + br(&c, &br(&a, &b));
                    r = r.max(s.amax());
                }
            }
        }
        r
    }
}

pub(crate) fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// A linear map between Lie algebras (expected to be a homomorphism),
/// with its image projector and minimal-norm right inverse.
#[derive(Clone, Debug)]
pub struct LinearLieMap {
    /// `target.dim x source.dim`.
    pub matrix: DMatrix<f64>,
    pub homomorphism_residual: f64,
    image_projector: DMatrix<f64>,
    right_inverse: DMatrix<f64>,
    /// Gram-orthonormal basis of the kernel (columns, source coefficients).
    pub kernel_basis: DMatrix<f64>,
    /// Gram-orthonormal basis of the image (columns, target coefficients).
    pub image_basis: DMatrix<f64>,
}

impl LinearLieMap {
    pub fn new(source: &LieAlgebra, target: &LieAlgebra, matrix: DMatrix<f64>) -> Result<Self> {
        check_dim("linear map rows", target.dim, matrix.nrows())?;
        check_dim("linear map columns", source.dim, matrix.ncols())?;
        let mut hom = 0.0f64;
        for i in 0..source.dim {
            for j in 0..source.dim {
                let lhs = &matrix * DVector::from_column_slice(source.structure.pair_slice(i, j));
                let rhs = target.structure.apply(
                    &matrix.column(i).into_owned(),
                    &matrix.column(j).into_owned(),
                );
                hom = hom.max((lhs - rhs).amax());
            }
        }
        let gs = &source.gram;
        let gt = &target.gram;
        let (image_projector, right_inverse) = if source.dim == 0 || target.dim == 0 {
            (
                DMatrix::zeros(target.dim, target.dim),
                DMatrix::zeros(source.dim, target.dim),
            )
        } else {
            // P = F (F^T G_t F)^+ F^T G_t ;  R = G_s^{-1} F^T (F G_s^{-1} F^T)^+
            let ftgf = matrix.transpose() * gt * &matrix;
            let p = &matrix * linalg::pinv(&ftgf, 1e-12) * matrix.transpose() * gt;
            let gs_inv = gs
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Structure("singular Gram".into()))?;
            let fgf = &matrix * &gs_inv * matrix.transpose();
            let r = &gs_inv * matrix.transpose() * linalg::pinv(&fgf, 1e-12);
            (p, r)
        };
        let kernel = linalg::null_space(&matrix, 1e-10);
        let kernel_basis = linalg::gram_orthonormal_basis(&kernel, gs, 1e-10);
        let image_basis = linalg::gram_orthonormal_basis(&matrix, gt, 1e-10);
        Ok(Self {
            matrix,
            homomorphism_residual: hom,
            image_projector,
            right_inverse,
            kernel_basis,
            image_basis,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// ip-orthogonal projector of the target onto the image.
    pub fn image_projector(&self) -> &DMatrix<f64> {
        &self.image_projector
    }

    /// `x = x_top + x_perp` with `x_top` in the image and `x_perp` ip-orthogonal to it.
    pub fn split_by_image(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        check_dim("split_by_image", self.target_dim(), x.len())?;
        let top = &self.image_projector * x;
        let perp = x - &top;
        Ok((top, perp))
    }

    /// Minimal-ip-norm right inverse on the image (`target -> source`).
    pub fn right_inverse(&self) -> &DMatrix<f64> {
        &self.right_inverse
    }
}

/// A Lie algebra action `g -> der(V)` given by generator matrices.
#[derive(Clone, Debug)]
pub struct LieAction {
    pub actor_dim: usize,
    pub acted_dim: usize,
    /// `generators[a]` is the matrix of `act(x_a)` on coefficient vectors.
    pub generators: Vec<DMatrix<f64>>,
    pub derivation_residual: f64,
    pub representation_residual: f64,
}

impl LieAction {
    /// `tensor[a][i][j]`: `act(x_a)(xi_i) = sum_j tensor[a][i][j] xi_j`.
    pub fn from_tensor(
        actor: &LieAlgebra,
        acted: &LieAlgebra,
        tensor: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        check_dim("action tensor (actor)", actor.dim, tensor.len())?;
        let mut gens = Vec::with_capacity(actor.dim);
        for t in tensor {
            check_dim("action tensor (acted)", acted.dim, t.len())?;
            let mut m = DMatrix::zeros(acted.dim, acted.dim);
            for (i, row) in t.iter().enumerate() {
                check_dim("action tensor (image)", acted.dim, row.len())?;
                for (j, v) in row.iter().enumerate() {
                    m[(j, i)] = *v;
                }
            }
            gens.push(m);
        }
        Self::from_generators(actor, acted, gens)
    }

    pub fn from_generators(
        actor: &LieAlgebra,
        acted: &LieAlgebra,
        generators: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        check_dim("action generators", actor.dim, generators.len())?;
        for g in &generators {
            check_dim("action generator size", acted.dim, g.nrows())?;
            check_dim("action generator size", acted.dim, g.ncols())?;
        }
        let mut der = 0.0f64;
        for g in &generators {
            for i in 0..acted.dim {
                for j in 0..acted.dim {
                    let br = DVector::from_column_slice(acted.structure.pair_slice(i, j));
                    let lhs = g * br;
                    let rhs = acted.structure.apply(
                        &g.column(i).into_owned(),
                        &DVector::from_fn(acted.dim, |k, _| (k == j) as u8 as f64),
                    ) + acted.structure.apply(
                        &DVector::from_fn(acted.dim, |k, _| (k == i) as u8 as f64),
                        &g.column(j).into_owned(),
                    );
                    der = der.max((lhs - rhs).amax());
                }
            }
        }
        let mut rep = 0.0f64;
        for a in 0..actor.dim {
            for b in 0..actor.dim {
                let mut lhs = DMatrix::zeros(acted.dim, acted.dim);
                for (c, g) in generators.iter().enumerate() {
                    lhs += g * actor.structure.get(a, b, c);
                }
                let rhs = &generators[a] * &generators[b] - &generators[b] * &generators[a];
                rep = rep.max(linalg::max_abs(&(lhs - rhs)));
            }
        }
        Ok(Self {
            actor_dim: actor.dim,
            acted_dim: acted.dim,
            generators,
            derivation_residual: der,
            representation_residual: rep,
        })
    }

    pub fn zero(actor: &LieAlgebra, acted: &LieAlgebra) -> Self {
        Self::from_generators(
            actor,
            acted,
            vec![DMatrix::zeros(acted.dim, acted.dim); actor.dim],
        )
        .expect("zero action")
    }

    /// The adjoint action of an algebra on itself.
    pub fn adjoint(alg: &LieAlgebra) -> Self {
        Self::from_generators(alg, alg, (0..alg.dim).map(|i| alg.ad_basis(i)).collect())
            .expect("adjoint action")
    }

    pub fn rep(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.acted_dim, self.acted_dim);
        for (a, g) in self.generators.iter().enumerate() {
            if x[a] != 0.0 {
                m += g * x[a];
            }
        }
        m
    }

    pub fn apply(&self, x: &DVector<f64>, xi: &DVector<f64>) -> DVector<f64> {
        self.rep(x) * xi
    }

    /// As a bilinear map `actor x acted -> acted`.
    pub fn as_bilinear(&self) -> Bilinear {
        Bilinear::from_fn(self.actor_dim, self.acted_dim, self.acted_dim, |a, i, j| {
            self.generators[a][(j, i)]
        })
    }

    pub fn tensor(&self) -> Vec<Vec<Vec<f64>>> {
        self.as_bilinear().to_nested()
    }

    /// Block-diagonal sum of two actions.
    pub fn direct_sum(a: &Self, b: &Self) -> Self {
        let n = a.acted_dim + b.acted_dim;
        let mut gens = Vec::new();
        for g in &a.generators {
            let mut m = DMatrix::zeros(n, n);
            m.view_mut((0, 0), (a.acted_dim, a.acted_dim)).copy_from(g);
            gens.push(m);
        }
        for g in &b.generators {
            let mut m = DMatrix::zeros(n, n);
            m.view_mut((a.acted_dim, a.acted_dim), (b.acted_dim, b.acted_dim))
                .copy_from(g);
            gens.push(m);
        }
        Self {
            actor_dim: a.actor_dim + b.actor_dim,
            acted_dim: n,
            generators: gens,
            derivation_residual: a.derivation_residual.max(b.derivation_residual),
            representation_residual: a.representation_residual.max(b.representation_residual),
        }
    }
}

/// `exp` of an algebra element in the matrix realization.
pub fn group_exp(alg: &LieAlgebra, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_dim("group_exp", alg.dim, x.len())?;
    Ok(linalg::expm(&alg.to_matrix(x)))
}

/// `g xi g^{-1}` re-expanded in the basis of `acted`.
pub fn group_conj(acted: &LieAlgebra, g: &DMatrix<f64>, xi: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("group_conj", acted.dim, xi.len())?;
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Data("group element is not invertible".into()))?;
    let m = g * acted.to_matrix(xi) * ginv;
    let (c, res) = acted.coords(&m);
    if res > 1e-10 * (1.0 + linalg::max_abs(&m)) {
        return Err(Error::Structure(format!(
            "conjugate leaves the algebra {} (residual {res:.3e})",
            acted.name
        )));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn su2_bracket_matches_matrix_commutator() {
        let su2 = LieAlgebra::su2();
        let b = su2.bracket(&e(3, 0), &e(3, 1)).unwrap();
        let direct = &su2.basis[0] * &su2.basis[1] - &su2.basis[1] * &su2.basis[0];
        assert!(linalg::max_abs(&(su2.to_matrix(&b) - direct)) < 1e-15);
        assert!((b - e(3, 2)).amax() < 1e-14);
    }

    #[test]
    fn bracket_with_zero_and_self() {
        let so3 = LieAlgebra::so3();
        let x = DVector::from_vec(vec![0.3, -1.2, 0.5]);
        assert_eq!(so3.bracket(&DVector::zeros(3), &x).unwrap().amax(), 0.0);
        assert!(so3.bracket(&x, &x).unwrap().amax() < 1e-15);
        assert!(so3.bracket(&x, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn jacobi_and_invariance() {
        for alg in [
            LieAlgebra::su2(),
            LieAlgebra::so3(),
            LieAlgebra::abelian("r3", 3),
        ] {
            assert!(alg.jacobi_residual() < 1e-12, "{}", alg.name);
            assert!(alg.invariance_residual < 1e-12);
        }
    }

    #[test]
    fn non_invariant_inner_product_rejected() {
        let so3 = LieAlgebra::so3();
        let gram = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let r = LieAlgebra::new("bad", so3.basis.clone(), InnerProduct::Explicit(gram));
        assert!(matches!(r, Err(Error::Structure(_))));
    }

    #[test]
    fn default_inner_product_is_negative_killing_on_semisimple() {
        let su2 = LieAlgebra::su2();
        let d = LieAlgebra::new("su2k", su2.basis.clone(), InnerProduct::Default).unwrap();
        assert!(linalg::max_abs(&(&d.gram + d.killing())) < 1e-14);
        let ab = LieAlgebra::new(
            "ab",
            LieAlgebra::abelian("x", 2).basis,
            InnerProduct::Default,
        )
        .unwrap();
        assert!(linalg::max_abs(&(&ab.gram - DMatrix::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn split_trivial_maps() {
        let so3 = LieAlgebra::so3();
        let x = DVector::from_vec(vec![0.2, 0.4, -0.9]);
        let zero = LinearLieMap::new(&so3, &so3, DMatrix::zeros(3, 3)).unwrap();
        let (t, p) = zero.split_by_image(&x).unwrap();
        assert_eq!(t.amax(), 0.0);
        assert_eq!(p, x);
        assert_eq!(zero.right_inverse().amax(), 0.0);
        let id = LinearLieMap::new(&so3, &so3, DMatrix::identity(3, 3)).unwrap();
        let (t, p) = id.split_by_image(&x).unwrap();
        assert!((t - &x).amax() < 1e-15 && p.amax() < 1e-15);
        assert!(linalg::max_abs(&(id.right_inverse() - DMatrix::identity(3, 3))) < 1e-14);
    }

    #[test]
    fn group_conj_identity_and_derivative() {
        let su2 = LieAlgebra::su2();
        let xi = DVector::from_vec(vec![0.1, -0.7, 0.3]);
        let id = DMatrix::identity(4, 4);
        assert!((group_conj(&su2, &id, &xi).unwrap() - &xi).amax() < 1e-15);
        let x = DVector::from_vec(vec![0.5, 0.2, -0.4]);
        let r = 1e-4;
        let plus = group_conj(&su2, &group_exp(&su2, &(&x * r)).unwrap(), &xi).unwrap();
        let minus = group_conj(&su2, &group_exp(&su2, &(&x * -r)).unwrap(), &xi).unwrap();
        let fd = (plus - minus) / (2.0 * r);
        let exact = su2.bracket(&x, &xi).unwrap();
        assert!((fd - exact).amax() < 1e-6);
    }
}
