//! Randomized identity suite on jets: every gauge-theoretic identity the
//! pipelines rely on, checked coefficientwise up to order `K - 2`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gauge::{Engine, ThreeGauge, TwoGauge};
use crate::jet::{JetCalculus, JetForm};
use crate::lie::{Bilinear, LieAlgebra};
use crate::xmod::{CrossedModule, Rep};

pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub module: String,
    pub m: usize,
    pub order: usize,
    pub seeds: u64,
    pub amplitude: f64,
    /// Max residual per identity over all seeds.
    pub residuals: BTreeMap<String, f64>,
    pub tol: f64,
    pub passed: bool,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        self.residuals.values().fold(0.0, |m, v| m.max(*v))
    }
}

/// `v ^ w` with the matrix product of the basis matrices, in `gl(n)` entries.
fn matrix_product_pairing(alg: &LieAlgebra) -> (Bilinear, DMatrix<f64>) {
    let n = alg.basis.first().map_or(0, |b| b.nrows());
    let prod = Bilinear::from_fn(alg.dim, alg.dim, n * n, |a, b, k| {
        (&alg.basis[a] * &alg.basis[b])[(k / n, k % n)]
    });
    let embed = DMatrix::from_fn(n * n, alg.dim, |k, a| alg.basis[a][(k / n, k % n)]);
    (prod, embed)
}

fn record(map: &mut BTreeMap<String, f64>, name: &str, f: &JetForm) {
    let r = f.residual();
    let e = map.entry(name.to_string()).or_insert(0.0);
    *e = e.max(r);
}

fn two_suite(calc: &JetCalculus, amp: f64, rng: &mut ChaCha8Rng, out: &mut BTreeMap<String, f64>) {
    let module = &calc.module;
    let eng = Engine::new(calc, module);
    let conn = calc.random_fake_flat2(amp, rng);
    let a = calc.random_gauge2(amp, rng);
    let b = calc.random_gauge2(amp, rng);
    record(
        out,
        "fake curvature of input",
        &eng.fake_curvature(&conn.a, &conn.b),
    );

    let c1 = eng.apply_gauge2(&a, &conn);
    record(
        out,
        "fake curvature preserved",
        &eng.fake_curvature(&c1.a, &c1.b),
    );
    let (_, z) = eng.curvature2(&conn);
    let (_, z1) = eng.curvature2(&c1);
    record(
        out,
        "Z covariance",
        &z1.sub(&a.g.inv.rep(Rep::Alpha).apply(&z)),
    );
    record(out, "t(Z) = 0", &eng.t_hat(&z1));

    let seq = eng.apply_gauge2(&b, &c1);
    let comp = eng.apply_gauge2(&eng.compose_gauge2(&a, &b), &conn);
    record(out, "composition contract", &seq.a.sub(&comp.a));
    record(out, "composition contract", &seq.b.sub(&comp.b));
    let back = eng.apply_gauge2(&eng.compose_gauge2(&a, &eng.inverse_gauge2(&a)), &conn);
    record(out, "composition with inverse", &back.a.sub(&conn.a));
    record(out, "composition with inverse", &back.b.sub(&conn.b));
    let id = eng.apply_gauge2(&eng.identity2(), &conn);
    record(out, "identity gauge", &id.a.sub(&conn.a));
    record(out, "identity gauge", &id.b.sub(&conn.b));

    let (bf, bz) = eng.bianchi(&conn);
    record(out, "Bianchi", &bf);
    record(out, "Bianchi", &bz);

    let (prod, embed) = matrix_product_pairing(&module.h);
    record(
        out,
        "chi ^ chi = 1/2 [chi ^ chi]",
        &a.chi
            .wedge(&a.chi, &prod)
            .sub(&eng.chi_wedge_chi(&a.chi).map(&embed)),
    );
}

fn three_suite(
    calc: &JetCalculus,
    amp: f64,
    rng: &mut ChaCha8Rng,
    out: &mut BTreeMap<String, f64>,
) {
    let module = &calc.module;
    let eng = Engine::new(calc, module);
    let conn = calc.random_fake_flat3(amp, rng);
    let gauge = calc.random_gauge3(amp, rng);
    record(
        out,
        "fake curvature of input",
        &eng.fake_curvature(&conn.a, &conn.b),
    );
    record(
        out,
        "second fake curvature of input",
        &eng.fake_curvature3(&conn),
    );

    let c1 = eng.apply_gauge3(&gauge, &conn);
    record(
        out,
        "fake curvature preserved",
        &eng.fake_curvature(&c1.a, &c1.b),
    );
    record(
        out,
        "second fake curvature preserved",
        &eng.fake_curvature3(&c1),
    );
    let y = eng.curvature3(&conn);
    let y1 = eng.curvature3(&c1);
    record(
        out,
        "Y covariance",
        &y1.sub(&gauge.g.inv.rep(Rep::Beta).apply(&y)),
    );
    record(out, "tau(Y) = 0", &eng.tau_hat(&y1));
    let z1 = eng
        .curvature2(&crate::gauge::TwoConnection {
            a: c1.a.clone(),
            b: c1.b.clone(),
        })
        .1;
    record(out, "t(Z) = 0", &eng.t_hat(&z1));

    let id = eng.identity3();
    let zero_chi = id.chi.clone();
    let zero_lambda = id.lambda.clone();
    let g_only = ThreeGauge {
        g: gauge.g.clone(),
        chi: zero_chi.clone(),
        lambda: zero_lambda.clone(),
    };
    let chi_only = ThreeGauge {
        g: id.g.clone(),
        chi: gauge.chi.clone(),
        lambda: zero_lambda,
    };
    let lambda_only = ThreeGauge {
        g: id.g.clone(),
        chi: zero_chi,
        lambda: gauge.lambda.clone(),
    };
    for (name, special, general) in [
        (
            "special action (g,0,0)",
            eng.special_g(&gauge.g, &conn),
            eng.apply_gauge3(&g_only, &conn),
        ),
        (
            "special action (e,chi,0)",
            eng.special_chi(&gauge.chi, &conn),
            eng.apply_gauge3(&chi_only, &conn),
        ),
        (
            "special action (e,0,lambda)",
            eng.special_lambda(&gauge.lambda, &conn),
            eng.apply_gauge3(&lambda_only, &conn),
        ),
    ] {
        record(out, name, &special.a.sub(&general.a));
        record(out, name, &special.b.sub(&general.b));
        record(out, name, &special.c.sub(&general.c));
    }
    let yl = eng.curvature3(&eng.special_lambda(&gauge.lambda, &conn));
    record(out, "Y invariant under (e,0,lambda)", &yl.sub(&y));
    let same = eng.apply_gauge3(&id, &conn);
    record(out, "identity gauge", &same.c.sub(&conn.c));

    let (prod, embed) = matrix_product_pairing(&module.h);
    record(
        out,
        "chi ^ chi = 1/2 [chi ^ chi]",
        &gauge
            .chi
            .wedge(&gauge.chi, &prod)
            .sub(&eng.chi_wedge_chi(&gauge.chi).map(&embed)),
    );
}

/// Runs the 2-gauge suite for crossed modules and the 3-gauge suite for
/// 2-crossed modules, `seeds` random instances each.
pub fn identity_suite(
    module: &CrossedModule,
    m: usize,
    order: usize,
    seeds: u64,
    amplitude: f64,
) -> IdentityReport {
    let calc = JetCalculus::new(module, m, order);
    let mut residuals = BTreeMap::new();
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if module.is_two_crossed() {
            three_suite(&calc, amplitude, &mut rng, &mut residuals);
        } else {
            two_suite(&calc, amplitude, &mut rng, &mut residuals);
        }
    }
    let passed = residuals.values().all(|v| *v <= IDENTITY_TOL);
    IdentityReport {
        module: module.name.clone(),
        m,
        order,
        seeds,
        amplitude,
        residuals,
        tol: IDENTITY_TOL,
        passed,
    }
}

/// Sequential application versus one composed gauge, for the composition
/// coefficient as printed and as verified.
pub fn composition_finding(
    module: &CrossedModule,
    m: usize,
    order: usize,
    seed: u64,
) -> (f64, f64) {
    let calc = JetCalculus::new(module, m, order);
    let eng = Engine::new(&calc, module);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let conn = calc.random_fake_flat2(0.5, &mut rng);
    let a: TwoGauge<_, _> = calc.random_gauge2(0.5, &mut rng);
    let b = calc.random_gauge2(0.5, &mut rng);
    let seq = eng.apply_gauge2(&b, &eng.apply_gauge2(&a, &conn));
    let verified = eng.apply_gauge2(&eng.compose_gauge2(&a, &b), &conn);
    let printed = eng.apply_gauge2(&eng.compose_gauge2_printed(&a, &b), &conn);
    (
        seq.b.sub(&verified.b).residual(),
        seq.b.sub(&printed.b).residual(),
    )
}
