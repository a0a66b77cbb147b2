//! Differential crossed modules and differential 2-crossed modules.
//!
//! Both are held by one type: a crossed module is stored with `l = 0`.
//! `Kind` decides which axiom set `validate` runs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{Bilinear, LieAction, LieAlgebra, LinearLieMap};
use crate::linalg;

/// Pass threshold for every axiom residual.
pub const AXIOM_TOL: f64 = 1e-10;
/// Group elements sampled for the group-level laws.
pub const GROUP_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "crossed")]
    Crossed,
    #[serde(rename = "2-crossed")]
    TwoCrossed,
}

#[derive(Clone, Debug)]
pub struct CrossedModule {
    pub name: String,
    pub kind: Kind,
    pub g: LieAlgebra,
    pub h: LieAlgebra,
    pub l: LieAlgebra,
    pub t_hat: LinearLieMap,
    pub alpha_hat: LieAction,
    pub tau_hat: LinearLieMap,
    pub beta_hat: LieAction,
    /// `{u, v}` for `u, v` in `h`, valued in `l`.
    pub peiffer: Bilinear,
}

/// A group element `exp(x)` carried simultaneously in every representation
/// the gauge formulas need.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    /// Matrix realization of `G`.
    pub fund: DMatrix<f64>,
    /// Conjugation `X -> g X g^{-1}` on `g` coefficients.
    pub ad: DMatrix<f64>,
    /// `alpha(g)` on `h` coefficients.
    pub alpha: DMatrix<f64>,
    /// `beta(g)` on `l` coefficients.
    pub beta: DMatrix<f64>,
}

impl GroupElement {
    pub fn identity(m: &CrossedModule) -> Self {
        Self {
            fund: DMatrix::identity(m.g.mat_size, m.g.mat_size),
            ad: DMatrix::identity(m.g.dim, m.g.dim),
            alpha: DMatrix::identity(m.h.dim, m.h.dim),
            beta: DMatrix::identity(m.l.dim, m.l.dim),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            fund: &self.fund * &o.fund,
            ad: &self.ad * &o.ad,
            alpha: &self.alpha * &o.alpha,
            beta: &self.beta * &o.beta,
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = |m: &DMatrix<f64>| {
            if m.nrows() == 0 {
                return Ok(m.clone());
            }
            m.clone()
                .try_inverse()
                .ok_or_else(|| Error::Data("group element is not invertible".into()))
        };
        Ok(Self {
            fund: inv(&self.fund)?,
            ad: inv(&self.ad)?,
            alpha: inv(&self.alpha)?,
            beta: inv(&self.beta)?,
        })
    }
}

/// Which representation of `G` to act through.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rep {
    Ad,
    Alpha,
    Beta,
}

impl GroupElement {
    pub fn rep(&self, r: Rep) -> &DMatrix<f64> {
        match r {
            Rep::Ad => &self.ad,
            Rep::Alpha => &self.alpha,
            Rep::Beta => &self.beta,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomResidual {
    pub axiom: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub module: String,
    pub kind: Kind,
    pub axioms: Vec<AxiomResidual>,
    pub valid: bool,
}

impl ValidationReport {
    pub fn residual(&self, axiom: &str) -> Option<f64> {
        self.axioms
            .iter()
            .find(|a| a.axiom == axiom)
            .map(|a| a.residual)
    }

    pub fn worst(&self) -> f64 {
        self.axioms.iter().fold(0.0, |m, a| m.max(a.residual))
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

impl CrossedModule {
    /// Differential crossed module `(g, h, t_hat, alpha_hat)`.
    pub fn crossed(
        name: &str,
        g: LieAlgebra,
        h: LieAlgebra,
        t_hat: DMatrix<f64>,
        alpha_hat: LieAction,
    ) -> Result<Self> {
        let l = LieAlgebra::trivial("0");
        let peiffer = Bilinear::zeros(h.dim, h.dim, 0);
        Self::build(
            name,
            Kind::Crossed,
            g,
            h,
            l,
            t_hat,
            alpha_hat,
            DMatrix::zeros(h_dim_of(&peiffer), 0),
            None,
            peiffer,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn two_crossed(
        name: &str,
        g: LieAlgebra,
        h: LieAlgebra,
        l: LieAlgebra,
        t_hat: DMatrix<f64>,
        alpha_hat: LieAction,
        tau_hat: DMatrix<f64>,
        beta_hat: LieAction,
        peiffer: Bilinear,
    ) -> Result<Self> {
        Self::build(
            name,
            Kind::TwoCrossed,
            g,
            h,
            l,
            t_hat,
            alpha_hat,
            tau_hat,
            Some(beta_hat),
            peiffer,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        name: &str,
        kind: Kind,
        g: LieAlgebra,
        h: LieAlgebra,
        l: LieAlgebra,
        t_hat: DMatrix<f64>,
        alpha_hat: LieAction,
        tau_hat: DMatrix<f64>,
        beta_hat: Option<LieAction>,
        peiffer: Bilinear,
    ) -> Result<Self> {
        let dim_err = |what: &str, expected: usize, got: usize| {
            Error::Construction(format!(
                "module {name}: {what} has size {got}, expected {expected}"
            ))
        };
        if alpha_hat.actor_dim != g.dim || alpha_hat.acted_dim != h.dim {
            return Err(dim_err(
                "alpha_hat",
                g.dim * 1000 + h.dim,
                alpha_hat.actor_dim * 1000 + alpha_hat.acted_dim,
            ));
        }
        if peiffer.left != h.dim || peiffer.right != h.dim {
            return Err(dim_err(
                "peiffer (arguments)",
                h.dim,
                peiffer.left.max(peiffer.right),
            ));
        }
        if peiffer.out != l.dim {
            return Err(dim_err("peiffer (values)", l.dim, peiffer.out));
        }
        let t = LinearLieMap::new(&h, &g, t_hat)
            .map_err(|e| Error::Construction(format!("module {name}: t_hat: {e}")))?;
        let tau = LinearLieMap::new(&l, &h, tau_hat)
            .map_err(|e| Error::Construction(format!("module {name}: tau_hat: {e}")))?;
        let beta_hat = match beta_hat {
            Some(b) => {
                if b.actor_dim != g.dim || b.acted_dim != l.dim {
                    return Err(dim_err("beta_hat", l.dim, b.acted_dim));
                }
                b
            }
            None => LieAction::zero(&g, &l),
        };
        Ok(Self {
            name: name.to_string(),
            kind,
            g,
            h,
            l,
            t_hat: t,
            alpha_hat,
            tau_hat: tau,
            beta_hat,
            peiffer,
        })
    }

    pub fn is_two_crossed(&self) -> bool {
        self.kind == Kind::TwoCrossed
    }

    /// `exp(x)` in all representations.
    pub fn group_exp(&self, x: &DVector<f64>) -> GroupElement {
        GroupElement {
            fund: linalg::expm(&self.g.to_matrix(x)),
            ad: linalg::expm(&self.g.ad(x)),
            alpha: linalg::expm(&self.alpha_hat.rep(x)),
            beta: linalg::expm(&self.beta_hat.rep(x)),
        }
    }

    /// Peiffer lifting `{u, v}` of two `h` elements.
    pub fn lift(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.peiffer.apply(u, v)
    }

    /// Mixed lifting `{h, v}` and `{v, h}` for `h = exp(eta)`, realized by
    /// contracting the tensor with `eta = log h`.
    pub fn mixed_lift_sym(&self, eta: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.peiffer.apply(eta, v) + self.peiffer.apply(v, eta)
    }

    /// Canonical JSON-equivalent digest of the defining tensors.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let desc = crate::xmod::ModuleDesc::from_module(self);
        let bytes = serde_json::to_vec(&desc).expect("module description serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut axioms = Vec::new();
        let mut push = |name: &str, r: f64| {
            axioms.push(AxiomResidual {
                axiom: name.to_string(),
                residual: r,
                pass: r <= AXIOM_TOL,
            })
        };
        let (g, h, l) = (&self.g, &self.h, &self.l);
        let t = &self.t_hat.matrix;
        let ah = &self.alpha_hat;

        push("jacobi(g)", g.jacobi_residual());
        push("jacobi(h)", h.jacobi_residual());
        push("t_hat homomorphism", self.t_hat.homomorphism_residual);
        push("alpha_hat derivation", ah.derivation_residual);
        push("alpha_hat representation", ah.representation_residual);

        // dcm1: t(alpha(x) xi) = [x, t xi]
        let mut r = 0.0f64;
        for a in 0..g.dim {
            for i in 0..h.dim {
                let (x, xi) = (unit(g.dim, a), unit(h.dim, i));
                let lhs = t * ah.apply(&x, &xi);
                let rhs = g.structure.apply(&x, &(t * &xi));
                r = r.max((lhs - rhs).amax());
            }
        }
        push("dcm1", r);

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        let samples: Vec<(DVector<f64>, DVector<f64>, DVector<f64>)> = (0..GROUP_SAMPLES)
            .map(|_| {
                (
                    random_vec(&mut rng, g.dim),
                    random_vec(&mut rng, h.dim),
                    random_vec(&mut rng, h.dim),
                )
            })
            .collect();

        // mr1: t(alpha(g) xi) = g t(xi) g^{-1}
        let mut r = 0.0f64;
        let mut cm1 = 0.0f64;
        let mut norm_inv = 0.0f64;
        for (x, eta, xi) in &samples {
            let ge = self.group_exp(x);
            r = r.max((t * (&ge.alpha * xi) - &ge.ad * (t * xi)).amax());
            // cm1 on matrices: t(alpha(g)(exp eta)) = g t(exp eta) g^{-1}
            let lhs = linalg::expm(&g.to_matrix(&(t * (&ge.alpha * eta))));
            let ginv = ge
                .fund
                .clone()
                .try_inverse()
                .unwrap_or_else(|| ge.fund.clone());
            let rhs = &ge.fund * linalg::expm(&g.to_matrix(&(t * eta))) * ginv;
            cm1 = cm1.max(linalg::max_abs(&(lhs - rhs)));
            norm_inv = norm_inv.max((h.norm(&(&ge.alpha * xi)) - h.norm(xi)).abs());
            if l.dim > 0 {
                let y = random_vec(&mut rng, l.dim);
                norm_inv = norm_inv.max((l.norm(&(&ge.beta * &y)) - l.norm(&y)).abs());
            }
            let xg = t * xi;
            norm_inv = norm_inv.max((g.norm(&(&ge.ad * &xg)) - g.norm(&xg)).abs());
        }
        push("mr1", r);
        push("cm1", cm1);
        push("norm invariance", norm_inv);

        match self.kind {
            Kind::Crossed => {
                // dcm2: alpha(t xi) nu = [xi, nu]
                let mut r = 0.0f64;
                for i in 0..h.dim {
                    for j in 0..h.dim {
                        let (xi, nu) = (unit(h.dim, i), unit(h.dim, j));
                        let lhs = ah.apply(&(t * &xi), &nu);
                        r = r.max((lhs - h.structure.apply(&xi, &nu)).amax());
                    }
                }
                push("dcm2", r);
                // mr2: alpha(t(exp eta)) xi = exp(eta) xi exp(-eta), on coefficients and matrices
                let mut r = 0.0f64;
                let mut cm2 = 0.0f64;
                for (_, eta, xi) in &samples {
                    let lhs = linalg::expm(&ah.rep(&(t * eta))) * xi;
                    let hm = linalg::expm(&h.to_matrix(eta));
                    let rhs = match crate::lie::group_conj(h, &hm, xi) {
                        Ok(v) => v,
                        Err(_) => DVector::from_element(h.dim, f64::INFINITY),
                    };
                    r = r.max((lhs - rhs).amax());
                    // cm2: alpha(t(h1))(h2) = h1 h2 h1^{-1} with h2 = exp(xi)
                    let lhs = linalg::expm(&h.to_matrix(&(linalg::expm(&ah.rep(&(t * eta))) * xi)));
                    let hinv = linalg::expm(&h.to_matrix(&-eta));
                    let rhs = &hm * linalg::expm(&h.to_matrix(xi)) * hinv;
                    cm2 = cm2.max(linalg::max_abs(&(lhs - rhs)));
                }
                push("mr2", r);
                push("cm2", cm2);
                // Ker t is abelian
                let k = &self.t_hat.kernel_basis;
                let mut r = 0.0f64;
                for i in 0..k.ncols() {
                    for j in 0..k.ncols() {
                        let b = h
                            .structure
                            .apply(&k.column(i).into_owned(), &k.column(j).into_owned());
                        r = r.max(b.amax());
                    }
                }
                push("ker t_hat abelian", r);
            }
            Kind::TwoCrossed => self.validate_two(&mut push, &samples),
        }
        let valid = axioms.iter().all(|a| a.pass);
        ValidationReport {
            module: self.name.clone(),
            kind: self.kind,
            axioms,
            valid,
        }
    }

    fn validate_two(
        &self,
        push: &mut impl FnMut(&str, f64),
        samples: &[(DVector<f64>, DVector<f64>, DVector<f64>)],
    ) {
        let (g, h, l) = (&self.g, &self.h, &self.l);
        let t = &self.t_hat.matrix;
        let tau = &self.tau_hat.matrix;
        let ah = &self.alpha_hat;
        let bh = &self.beta_hat;
        let br_h = |u: &DVector<f64>, v: &DVector<f64>| h.structure.apply(u, v);
        let br_l = |u: &DVector<f64>, v: &DVector<f64>| l.structure.apply(u, v);
        let lift = |u: &DVector<f64>, v: &DVector<f64>| self.peiffer.apply(u, v);

        push("jacobi(l)", l.jacobi_residual());
        push("tau_hat homomorphism", self.tau_hat.homomorphism_residual);
        push("beta_hat derivation", bh.derivation_residual);
        push("beta_hat representation", bh.representation_residual);
        push(
            "complex t_hat tau_hat = 0",
            if tau.ncols() == 0 {
                0.0
            } else {
                linalg::max_abs(&(t * tau))
            },
        );

        // tau is g-equivariant: tau(beta(a) x) = alpha(a) tau(x)
        let mut r = 0.0f64;
        for a in 0..g.dim {
            for i in 0..l.dim {
                let (x, y) = (unit(g.dim, a), unit(l.dim, i));
                r = r.max((tau * bh.apply(&x, &y) - ah.apply(&x, &(tau * &y))).amax());
            }
        }
        push("tau_hat equivariance", r);

        let (mut p1, mut p4, mut p3, mut equi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..h.dim {
            for j in 0..h.dim {
                let (u, v) = (unit(h.dim, i), unit(h.dim, j));
                let lhs = tau * lift(&u, &v);
                let rhs = br_h(&u, &v) - ah.apply(&(t * &u), &v);
                p1 = p1.max((lhs - rhs).amax());
                for k in 0..h.dim {
                    let w = unit(h.dim, k);
                    // p3 with the action on l read as beta_hat
                    let lhs = lift(&br_h(&u, &v), &w);
                    let rhs = bh.apply(&(t * &u), &lift(&v, &w)) + lift(&u, &br_h(&v, &w))
                        - bh.apply(&(t * &v), &lift(&u, &w))
                        - lift(&v, &br_h(&u, &w));
                    p3 = p3.max((lhs - rhs).amax());
                    let lhs = lift(&u, &br_h(&v, &w));
                    let rhs = lift(&(tau * lift(&u, &v)), &w) - lift(&(tau * lift(&u, &w)), &v);
                    p4 = p4.max((lhs - rhs).amax());
                }
                for a in 0..g.dim {
                    let x = unit(g.dim, a);
                    let lhs = bh.apply(&x, &lift(&u, &v));
                    let rhs = lift(&ah.apply(&x, &u), &v) + lift(&u, &ah.apply(&x, &v));
                    equi = equi.max((lhs - rhs).amax());
                }
            }
        }
        push("p1", p1);
        push("p3", p3);
        push("p4", p4);
        push("lifting equivariance", equi);

        let (mut p2, mut p5) = (0.0f64, 0.0f64);
        for i in 0..l.dim {
            let x = unit(l.dim, i);
            for j in 0..l.dim {
                let y = unit(l.dim, j);
                p2 = p2.max((br_l(&x, &y) - lift(&(tau * &x), &(tau * &y))).amax());
            }
            for k in 0..h.dim {
                let u = unit(h.dim, k);
                let lhs = lift(&(tau * &x), &u) + lift(&u, &(tau * &x));
                p5 = p5.max((lhs + bh.apply(&(t * &u), &x)).amax());
            }
        }
        push("p2", p2);
        push("p5", p5);

        // mr3 with h = exp(eta); also beta(t(h)) fixes Ker tau, and the
        // derivative at eta = 0 reproduces p5.
        let mut mr3 = 0.0f64;
        let mut ker_fix = 0.0f64;
        let mut lin = 0.0f64;
        let kt = &self.tau_hat.kernel_basis;
        for (_, eta, _) in samples.iter().take(GROUP_SAMPLES) {
            if l.dim == 0 {
                break;
            }
            let bt = linalg::expm(&bh.rep(&(t * eta)));
            for i in 0..l.dim {
                let x = unit(l.dim, i);
                let rhs = &x - self.mixed_lift_sym(eta, &(tau * &x));
                mr3 = mr3.max((&bt * &x - rhs).amax());
            }
            for c in 0..kt.ncols() {
                let x = kt.column(c).into_owned();
                ker_fix = ker_fix.max((&bt * &x - &x).amax());
            }
            let r = 1e-5;
            let bp = linalg::expm(&bh.rep(&(t * (eta * r))));
            let bm = linalg::expm(&bh.rep(&(t * (eta * -r))));
            for i in 0..l.dim {
                let x = unit(l.dim, i);
                let fd = (&bp * &x - &bm * &x) / (2.0 * r);
                let exact = -self.mixed_lift_sym(eta, &(tau * &x));
                lin = lin.max((fd - exact).amax());
            }
        }
        push("mr3", mr3);
        push("mr3 fixes ker tau_hat", ker_fix);
        // finite differences carry O(r^2) truncation and O(eps/r) rounding
        push("mr3 linearization (scaled 1e-3)", lin * 1e-3);

        let k = kt;
        let mut r = 0.0f64;
        for i in 0..k.ncols() {
            for j in 0..k.ncols() {
                let b = br_l(&k.column(i).into_owned(), &k.column(j).into_owned());
                r = r.max(b.amax());
            }
        }
        push("ker tau_hat abelian", r);
    }

    /// Block direct sum of two modules of the same kind.
    pub fn direct_sum(name: &str, a: &Self, b: &Self) -> Result<Self> {
        let kind = if a.is_two_crossed() || b.is_two_crossed() {
            Kind::TwoCrossed
        } else {
            Kind::Crossed
        };
        let g = LieAlgebra::direct_sum(&format!("{}+{}", a.g.name, b.g.name), &a.g, &b.g);
        let h = LieAlgebra::direct_sum(&format!("{}+{}", a.h.name, b.h.name), &a.h, &b.h);
        let l = LieAlgebra::direct_sum(&format!("{}+{}", a.l.name, b.l.name), &a.l, &b.l);
        let block = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(x.nrows() + y.nrows(), x.ncols() + y.ncols());
            m.view_mut((0, 0), (x.nrows(), x.ncols())).copy_from(x);
            m.view_mut((x.nrows(), x.ncols()), (y.nrows(), y.ncols()))
                .copy_from(y);
            m
        };
        let alpha = LieAction::from_generators(
            &g,
            &h,
            LieAction::direct_sum(&a.alpha_hat, &b.alpha_hat).generators,
        )?;
        let beta = LieAction::from_generators(
            &g,
            &l,
            LieAction::direct_sum(&a.beta_hat, &b.beta_hat).generators,
        )?;
        Self::build(
            name,
            kind,
            g,
            h,
            l,
            block(&a.t_hat.matrix, &b.t_hat.matrix),
            alpha,
            block(&a.tau_hat.matrix, &b.tau_hat.matrix),
            Some(beta),
            Bilinear::direct_sum(&a.peiffer, &b.peiffer),
        )
    }
}

fn h_dim_of(p: &Bilinear) -> usize {
    p.left
}

// ---------------------------------------------------------------------------
// JSON description

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InnerProductDesc {
    Named(String),
    Gram(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDesc {
    pub name: String,
    /// Row-major square matrices.
    pub basis: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_product: Option<InnerProductDesc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDesc {
    pub name: String,
    pub kind: Kind,
    pub g: AlgebraDesc,
    pub h: AlgebraDesc,
    /// `g.dim x h.dim`, row-major.
    pub t_hat: Vec<Vec<f64>>,
    /// `alpha_hat[a][i][j]`: coefficient of `xi_j` in `alpha_hat(x_a)(xi_i)`.
    pub alpha_hat: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<AlgebraDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_hat: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_hat: Option<Vec<Vec<Vec<f64>>>>,
    /// `peiffer[i][j][k]`: coefficient of `y_k` in `{xi_i, xi_j}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peiffer: Option<Vec<Vec<Vec<f64>>>>,
}

fn mat_from_rows(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    what: &str,
) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Construction(format!(
            "{what}: expected a {nrows}x{ncols} matrix, got {} rows of lengths {:?}",
            rows.len(),
            rows.iter().map(|r| r.len()).collect::<Vec<_>>()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn mat_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl AlgebraDesc {
    pub fn build(&self) -> Result<LieAlgebra> {
        use crate::lie::InnerProduct;
        let mut basis = Vec::new();
        for (i, b) in self.basis.iter().enumerate() {
            let n = b.len();
            basis.push(mat_from_rows(
                b,
                n,
                n,
                &format!("algebra {} basis[{i}]", self.name),
            )?);
        }
        let ip = match &self.inner_product {
            None => InnerProduct::Default,
            Some(InnerProductDesc::Named(s)) => match s.as_str() {
                "default" => InnerProduct::Default,
                "trace" => InnerProduct::Trace,
                "neg_killing" => InnerProduct::NegKilling,
                other => {
                    return Err(Error::Construction(format!(
                        "algebra {}: unknown inner product {other:?}",
                        self.name
                    )))
                }
            },
            Some(InnerProductDesc::Gram(rows)) => InnerProduct::Explicit(mat_from_rows(
                rows,
                basis.len(),
                basis.len(),
                &format!("algebra {} inner_product", self.name),
            )?),
        };
        LieAlgebra::new(&self.name, basis, ip)
    }

    pub fn from_algebra(a: &LieAlgebra) -> Self {
        Self {
            name: a.name.clone(),
            basis: a.basis.iter().map(mat_to_rows).collect(),
            inner_product: Some(InnerProductDesc::Gram(mat_to_rows(&a.gram))),
        }
    }
}

impl ModuleDesc {
    pub fn build(&self) -> Result<CrossedModule> {
        let g = self.g.build()?;
        let h = self.h.build()?;
        let t = mat_from_rows(&self.t_hat, g.dim, h.dim, "t_hat")?;
        let alpha = LieAction::from_tensor(&g, &h, &self.alpha_hat)?;
        match self.kind {
            Kind::Crossed => {
                if self.l.is_some()
                    || self.tau_hat.is_some()
                    || self.beta_hat.is_some()
                    || self.peiffer.is_some()
                {
                    return Err(Error::Construction(format!(
                        "module {}: a crossed module takes no l, tau_hat, beta_hat or peiffer",
                        self.name
                    )));
                }
                CrossedModule::crossed(&self.name, g, h, t, alpha)
            }
            Kind::TwoCrossed => {
                let missing = |f: &str| {
                    Error::Construction(format!(
                        "module {}: 2-crossed module needs `{f}`",
                        self.name
                    ))
                };
                let l = self.l.as_ref().ok_or_else(|| missing("l"))?.build()?;
                let tau = mat_from_rows(
                    self.tau_hat.as_ref().ok_or_else(|| missing("tau_hat"))?,
                    h.dim,
                    l.dim,
                    "tau_hat",
                )?;
                let beta = LieAction::from_tensor(
                    &g,
                    &l,
                    self.beta_hat.as_ref().ok_or_else(|| missing("beta_hat"))?,
                )?;
                let p = self.peiffer.as_ref().ok_or_else(|| missing("peiffer"))?;
                if p.len() != h.dim
                    || p.iter()
                        .any(|r| r.len() != h.dim || r.iter().any(|v| v.len() != l.dim))
                {
                    return Err(Error::Construction(format!(
                        "module {}: peiffer must be {}x{}x{}",
                        self.name, h.dim, h.dim, l.dim
                    )));
                }
                let peiffer = Bilinear::from_fn(h.dim, h.dim, l.dim, |i, j, k| p[i][j][k]);
                CrossedModule::two_crossed(&self.name, g, h, l, t, alpha, tau, beta, peiffer)
            }
        }
    }

    pub fn from_module(m: &CrossedModule) -> Self {
        let two = m.is_two_crossed();
        Self {
            name: m.name.clone(),
            kind: m.kind,
            g: AlgebraDesc::from_algebra(&m.g),
            h: AlgebraDesc::from_algebra(&m.h),
            t_hat: mat_to_rows(&m.t_hat.matrix),
            alpha_hat: m.alpha_hat.tensor(),
            l: two.then(|| AlgebraDesc::from_algebra(&m.l)),
            tau_hat: two.then(|| mat_to_rows(&m.tau_hat.matrix)),
            beta_hat: two.then(|| m.beta_hat.tensor()),
            peiffer: two.then(|| m.peiffer.to_nested()),
        }
    }
}

/// Parses a module description; errors name the offending JSON path.
pub fn parse_module(json: &str, origin: &str) -> Result<CrossedModule> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let desc: ModuleDesc = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: format!("{origin}: {}", e.path()),
        message: e.inner().to_string(),
    })?;
    desc.build()
}

pub fn load_module(path: &std::path::Path) -> Result<CrossedModule> {
    let text = std::fs::read_to_string(path)?;
    parse_module(&text, &path.display().to_string())
}

pub fn module_to_json(m: &CrossedModule) -> String {
    serde_json::to_string_pretty(&ModuleDesc::from_module(m))
        .expect("module description serializes")
}

// ---------------------------------------------------------------------------
// Registry

/// so(3) acting on R^3 by its defining representation, `t_hat = 0`.
pub fn so3_vector() -> CrossedModule {
    let g = LieAlgebra::so3();
    let h = LieAlgebra::abelian("r3", 3);
    let alpha = LieAction::from_generators(&g, &h, g.basis.clone()).expect("so3 rep");
    CrossedModule::crossed("so3-vector", g, h, DMatrix::zeros(3, 3), alpha).expect("so3-vector")
}

/// `(su2, su2, id, ad)`.
pub fn identity_su2() -> CrossedModule {
    let g = LieAlgebra::su2();
    let h = LieAlgebra::su2();
    let alpha = LieAction::adjoint(&g);
    CrossedModule::crossed("identity-su2", g, h, DMatrix::identity(3, 3), alpha)
        .expect("identity-su2")
}

/// Product of `so3-vector` and `identity-su2`: `t_hat` has kernel R^3 and image su2.
pub fn product() -> CrossedModule {
    CrossedModule::direct_sum("product", &so3_vector(), &identity_su2()).expect("product")
}

/// `g = su2 + so3`, `h = su2` mapped onto the first factor, `l = R^3`
/// carrying the so(3) representation, `tau_hat = 0`, zero lifting.
pub fn rep_two_crossed() -> CrossedModule {
    let su2 = LieAlgebra::su2();
    let so3 = LieAlgebra::so3();
    let g = LieAlgebra::direct_sum("su2+so3", &su2, &so3);
    let h = LieAlgebra::su2();
    let l = LieAlgebra::abelian("r3", 3);
    let mut t = DMatrix::zeros(6, 3);
    t.view_mut((0, 0), (3, 3)).fill_with_identity();
    let mut agens: Vec<DMatrix<f64>> = (0..3).map(|i| h.ad_basis(i)).collect();
    agens.extend((0..3).map(|_| DMatrix::zeros(3, 3)));
    let alpha = LieAction::from_generators(&g, &h, agens).expect("alpha");
    let mut bgens: Vec<DMatrix<f64>> = (0..3).map(|_| DMatrix::zeros(3, 3)).collect();
    bgens.extend(so3.basis.iter().cloned());
    let beta = LieAction::from_generators(&g, &l, bgens).expect("beta");
    CrossedModule::two_crossed(
        "rep-2crossed",
        g,
        h,
        l,
        t,
        alpha,
        DMatrix::zeros(3, 3),
        beta,
        Bilinear::zeros(3, 3, 3),
    )
    .expect("rep-2crossed")
}

/// `g = h = l = su2`, `t_hat = 0`, `tau_hat = id`, both actions adjoint,
/// lifting `{u, v} = [u, v]`.
pub fn peiffer_su2() -> CrossedModule {
    let su2 = LieAlgebra::su2();
    let alpha = LieAction::adjoint(&su2);
    let beta = LieAction::adjoint(&su2);
    let p = su2.structure.clone();
    CrossedModule::two_crossed(
        "peiffer-su2",
        su2.clone(),
        su2.clone(),
        su2,
        DMatrix::zeros(3, 3),
        alpha,
        DMatrix::identity(3, 3),
        beta,
        p,
    )
    .expect("peiffer-su2")
}

/// A crossed module seen as a 2-crossed module with `l = 0`.
pub fn as_two_crossed(m: &CrossedModule) -> CrossedModule {
    let mut m = m.clone();
    m.kind = Kind::TwoCrossed;
    m
}

/// Sum of `rep-2crossed`, `peiffer-su2` and `so3-vector` (with `l = 0`).
pub fn mixed() -> CrossedModule {
    let a = CrossedModule::direct_sum("tmp", &rep_two_crossed(), &peiffer_su2()).expect("mixed");
    CrossedModule::direct_sum("mixed", &a, &as_two_crossed(&so3_vector())).expect("mixed")
}

/// All registered modules, by name.
pub fn registry() -> Vec<(&'static str, fn() -> CrossedModule)> {
    vec![
        ("so3-vector", so3_vector as fn() -> CrossedModule),
        ("identity-su2", identity_su2),
        ("product", product),
        ("rep-2crossed", rep_two_crossed),
        ("peiffer-su2", peiffer_su2),
        ("mixed", mixed),
    ]
}

pub fn registry_get(name: &str) -> Option<CrossedModule> {
    registry()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f())
}
