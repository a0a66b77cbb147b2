//! Instances with known ground truth: canonical representatives, gauge
//! scrambles of them, exact pure gauges and self-dual fields.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::uniqueness::magnitude;
use crate::error::{Error, Result};
use crate::gauge::{Engine, ThreeConnection, ThreeGauge, TwoConnection, TwoGauge};
use crate::grid::{next_index, GridCalculus, GridForm, GridGroupField};
use crate::hodge;
use crate::jet::{JetForm, JetSpace};
use crate::xmod::{registry_get, CrossedModule};

pub use crate::canonical::selfdual::make_selfdual;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Jet,
    Grid,
}

fn default_backend() -> Backend {
    Backend::Grid
}
fn default_n() -> usize {
    8
}
fn default_order() -> usize {
    4
}
fn default_amplitude() -> f64 {
    0.3
}
fn default_degree() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub module: String,
    #[serde(default = "default_backend")]
    pub backend: Backend,
    pub m: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_order")]
    pub order: usize,
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_degree")]
    pub degree: usize,
}

impl InstanceSpec {
    pub fn grid(module: &str, m: usize, n: usize, seed: u64) -> Self {
        Self {
            module: module.into(),
            backend: Backend::Grid,
            m,
            n,
            order: default_order(),
            seed,
            amplitude: default_amplitude(),
            degree: default_degree(),
        }
    }

    pub fn module(&self) -> Result<CrossedModule> {
        registry_get(&self.module)
            .ok_or_else(|| Error::Data(format!("unknown module '{}'", self.module)))
    }

    pub fn calculus(&self) -> Result<GridCalculus> {
        if !(2..=8).contains(&self.m) || self.n < 1 {
            return Err(Error::Precondition(format!(
                "grid m={} N={} out of range",
                self.m, self.n
            )));
        }
        Ok(GridCalculus::new(&self.module()?, self.m, self.n))
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

/// Random polynomial `k`-form of total degree `degree` in the coordinates.
pub fn random_poly(
    m: usize,
    k: usize,
    dim: usize,
    degree: usize,
    amp: f64,
    rng: &mut ChaCha8Rng,
) -> JetForm {
    let sp = Arc::new(JetSpace::new(m, degree));
    JetForm::random(&sp, k, dim, amp, rng)
}

fn sample_poly(
    calc: &GridCalculus,
    k: usize,
    dim: usize,
    degree: usize,
    amp: f64,
    rng: &mut ChaCha8Rng,
) -> GridForm {
    GridForm::sample(
        &calc.grid,
        &random_poly(calc.grid.m, k, dim, degree, amp, rng),
    )
}

/// Co-exact part of a random form valued in the span of `basis`.
fn coexact_in(
    calc: &GridCalculus,
    k: usize,
    basis: &DMatrix<f64>,
    spec: &InstanceSpec,
    rng: &mut ChaCha8Rng,
) -> Result<GridForm> {
    let raw = sample_poly(calc, k, basis.ncols(), spec.degree, spec.amplitude, rng);
    let split = hodge::hodge_decompose(&raw, 1e-12)?;
    Ok(split.coexact.map(basis))
}

/// `(0, B0)` with `B0` in Ker t, co-closed, normalized to unit L2 times the amplitude.
pub fn random_canonical2(
    calc: &GridCalculus,
    spec: &InstanceSpec,
) -> Result<TwoConnection<GridForm>> {
    let m = &calc.module;
    let mut b = GridForm::zero(&calc.grid, 2, m.h.dim);
    if m.t_hat.kernel_basis.ncols() > 0 && spec.amplitude != 0.0 {
        b = coexact_in(calc, 2, &m.t_hat.kernel_basis, spec, &mut spec.rng(1))?;
    }
    Ok(TwoConnection {
        a: GridForm::zero(&calc.grid, 1, m.g.dim),
        b,
    })
}

/// `(0, 0, C0)` with `C0` in Ker tau and co-closed.
pub fn random_canonical3(
    calc: &GridCalculus,
    spec: &InstanceSpec,
) -> Result<ThreeConnection<GridForm>> {
    let m = &calc.module;
    let mut c = GridForm::zero(&calc.grid, 3, m.l.dim);
    if m.tau_hat.kernel_basis.ncols() > 0 && spec.amplitude != 0.0 {
        c = coexact_in(calc, 3, &m.tau_hat.kernel_basis, spec, &mut spec.rng(1))?;
    }
    Ok(ThreeConnection {
        a: GridForm::zero(&calc.grid, 1, m.g.dim),
        b: GridForm::zero(&calc.grid, 2, m.h.dim),
        c,
    })
}

fn random_group(calc: &GridCalculus, spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> GridGroupField {
    let gamma = random_poly(
        calc.grid.m,
        0,
        calc.module.g.dim,
        spec.degree,
        spec.amplitude,
        rng,
    );
    GridGroupField::exp_of(&calc.grid, &calc.module, &gamma)
}

pub fn random_gauge2(
    calc: &GridCalculus,
    spec: &InstanceSpec,
) -> TwoGauge<GridGroupField, GridForm> {
    let mut rng = spec.rng(2);
    let g = random_group(calc, spec, &mut rng);
    let chi = sample_poly(
        calc,
        1,
        calc.module.h.dim,
        spec.degree,
        spec.amplitude,
        &mut rng,
    );
    TwoGauge { g, chi }
}

pub fn random_gauge3(
    calc: &GridCalculus,
    spec: &InstanceSpec,
) -> ThreeGauge<GridGroupField, GridForm> {
    let mut rng = spec.rng(3);
    let g = random_group(calc, spec, &mut rng);
    let chi = sample_poly(
        calc,
        1,
        calc.module.h.dim,
        spec.degree,
        spec.amplitude,
        &mut rng,
    );
    let lambda = sample_poly(
        calc,
        2,
        calc.module.l.dim,
        spec.degree,
        spec.amplitude,
        &mut rng,
    );
    ThreeGauge { g, chi, lambda }
}

/// Applies a random 2-gauge drawn from `spec`; returns it with the result.
pub fn scramble2(
    calc: &GridCalculus,
    conn: &TwoConnection<GridForm>,
    spec: &InstanceSpec,
) -> (TwoConnection<GridForm>, TwoGauge<GridGroupField, GridForm>) {
    let gauge = random_gauge2(calc, spec);
    let out = Engine::new(calc, &calc.module).apply_gauge2(&gauge, conn);
    (out, gauge)
}

pub fn scramble3(
    calc: &GridCalculus,
    conn: &ThreeConnection<GridForm>,
    spec: &InstanceSpec,
) -> (
    ThreeConnection<GridForm>,
    ThreeGauge<GridGroupField, GridForm>,
) {
    let gauge = random_gauge3(calc, spec);
    let out = Engine::new(calc, &calc.module).apply_gauge3(&gauge, conn);
    (out, gauge)
}

/// Relative L2 distance between `apply(gauge^{-1}, scrambled)` and `original`.
pub fn inverse_round_trip2(
    calc: &GridCalculus,
    original: &TwoConnection<GridForm>,
    scrambled: &TwoConnection<GridForm>,
    gauge: &TwoGauge<GridGroupField, GridForm>,
) -> f64 {
    let eng = Engine::new(calc, &calc.module);
    let back = eng.apply_gauge2(&eng.inverse_gauge2(gauge), scrambled);
    let num = (back.a.sub(&original.a).l2().powi(2) + back.b.sub(&original.b).l2().powi(2)).sqrt();
    let den = (scrambled.a.l2().powi(2) + scrambled.b.l2().powi(2))
        .sqrt()
        .max(f64::MIN_POSITIVE);
    num / den
}

/// Scrambled 3-connections carry no closed inverse gauge; they are checked
/// through the covariance of `Y` instead: `| |Y'| - |Y| |_{L2}` relative to
/// `max(|Y|, |A'| + |B'| + |C'|)`.
pub fn covariance_defect3(
    calc: &GridCalculus,
    original: &ThreeConnection<GridForm>,
    scrambled: &ThreeConnection<GridForm>,
) -> f64 {
    let eng = Engine::new(calc, &calc.module);
    let gram = &calc.module.l.gram;
    let y0 = magnitude(&eng.curvature3(original), gram);
    let y1 = magnitude(&eng.curvature3(scrambled), gram);
    let size = scrambled.a.l2() + scrambled.b.l2() + scrambled.c.l2();
    y1.sub(&y0).l2() / y0.l2().max(size).max(f64::MIN_POSITIVE)
}

/// Admission cap on ground-truth defects, in units of `h`.
pub const ADMISSION_FACTOR: f64 = 0.1;

/// Ground-truth check run before an instance is used.
pub fn admit(defect: f64, calc: &GridCalculus) -> Result<f64> {
    let cap = ADMISSION_FACTOR * calc.grid.h;
    if defect.is_finite() && defect <= cap {
        Ok(defect)
    } else {
        Err(Error::Precondition(format!(
            "scrambled instance fails its ground-truth check: defect {defect:.3e} exceeds {cap:.3e}"
        )))
    }
}

/// Midpoint samples of `g^{-1} dg` for `g = exp(gamma)`, evaluated through
/// the series `sum_n (-ad gamma)^n / (n+1)!` applied to `d gamma`.
pub fn pure_gauge(calc: &GridCalculus, gamma: &JetForm) -> GridForm {
    let g = &calc.grid;
    let alg = &calc.module.g;
    let dim = alg.dim;
    let dgamma = gamma.d();
    let mut out = GridForm::zero(g, 1, dim);
    let mut x = vec![0usize; g.m];
    let mut p = vec![0.0; g.m];
    for b in g.blocks(1) {
        let comp = dgamma.space.mask_pos(b.mask);
        x.iter_mut().for_each(|v| *v = 0);
        let mut c = b.offset;
        loop {
            g.barycenter(b.mask, &x, &mut p);
            let gv = DVector::from_vec(gamma.eval(&p));
            let dv = dgamma.eval(&p);
            let mut term = DVector::from_column_slice(&dv[comp * dim..(comp + 1) * dim]);
            let ad = alg.ad(&gv) * -1.0;
            let mut acc = term.clone();
            for n in 1..40 {
                term = &ad * term / (n as f64 + 1.0);
                acc += &term;
                if term.amax() < 1e-18 {
                    break;
                }
            }
            for a in 0..dim {
                out.data[c * dim + a] = acc[a] * g.h;
            }
            c += 1;
            if !next_index(&mut x, &b.ext) {
                break;
            }
        }
    }
    out
}
