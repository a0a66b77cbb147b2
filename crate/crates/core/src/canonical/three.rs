use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::two::{calc_identity, check_form, projector, pure_gauge_norm, report_header};
use super::{flat_trivialize, FinalChecks, FixConfig, GaffneyStep, GaugeFixReport, StepReport};
use crate::error::{Error, Result};
use crate::gauge::{Engine, ThreeConnection, ThreeGauge};
use crate::grid::{GridCalculus, GridForm, GridGroupField};
use crate::hodge;

pub struct Canonical3 {
    /// Applied left to right.
    pub steps: Vec<ThreeGauge<GridGroupField, GridForm>>,
    pub c: GridForm,
    pub report: GaugeFixReport,
}

/// Largest Gaffney ratio over `probes` random co-exact scalar `k`-forms.
pub fn measured_gaffney_constant(
    grid: &std::sync::Arc<crate::grid::Grid>,
    k: usize,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = DMatrix::identity(1, 1);
    let mut c = 0.0f64;
    for _ in 0..probes {
        let w = GridForm::random(grid, k, 1, 1.0, &mut rng);
        let s = hodge::hodge_decompose(&w, 1e-10)?;
        c = c.max(hodge::gaffney_ratio(&s.coexact, &id)?);
    }
    Ok(c)
}

pub fn canonical_gauge3(
    calc: &GridCalculus,
    conn: &ThreeConnection<GridForm>,
    cfg: &FixConfig,
) -> Result<Canonical3> {
    let module = &calc.module;
    let (gd, hd, ld) = (module.g.dim, module.h.dim, module.l.dim);
    check_form(&conn.a, calc, 1, gd, "A")?;
    check_form(&conn.b, calc, 2, hd, "B")?;
    check_form(&conn.c, calc, 3, ld, "C")?;
    let eng = Engine::new(calc, module);
    let grid = &calc.grid;
    let h = grid.h;
    let (gram_h, gram_l) = (&module.h.gram, &module.l.gram);
    let mut rep = report_header(calc, "canonical3", cfg);

    let fc1 = |c: &ThreeConnection<GridForm>| eng.fake_curvature(&c.a, &c.b).l2();
    let fc2 = |c: &ThreeConnection<GridForm>| eng.fake_curvature3(c).l2();
    let (f1, f2) = (fc1(conn), fc2(conn));
    let cap = cfg.fake_curvature_cap * h * (conn.a.l2() + conn.b.l2() + conn.c.l2() + 1.0);
    rep.input.insert("fake_curvature".into(), f1);
    rep.input.insert("fake_curvature2".into(), f2);
    rep.input.insert("fake_curvature_cap".into(), cap);
    rep.input.insert("ym3".into(), eng.ym3(conn));
    rep.input.insert("a_l2".into(), conn.a.l2());
    rep.input.insert("b_l2".into(), conn.b.l2());
    rep.input.insert("c_l2".into(), conn.c.l2());
    if f1 > cap || f2 > cap {
        return Err(Error::Precondition(format!(
            "input violates fake flatness: residuals {f1:.3e} and {f2:.3e}, cap {cap:.3e}"
        )));
    }
    let step =
        |name: &str, c: &ThreeConnection<GridForm>, values: BTreeMap<String, f64>| StepReport {
            name: name.into(),
            fake_curvature: fc1(c),
            fake_curvature2: Some(fc2(c)),
            values,
        };
    let gauge =
        |g: Option<GridGroupField>, chi: Option<GridForm>, lambda: Option<GridForm>| ThreeGauge {
            g: g.unwrap_or_else(|| calc_identity(calc)),
            chi: chi.unwrap_or_else(|| GridForm::zero(grid, 1, hd)),
            lambda: lambda.unwrap_or_else(|| GridForm::zero(grid, 2, ld)),
        };
    let mut steps = Vec::new();

    // The 2-gauge stage, as 3-gauges with lambda = 0.
    let t = &module.t_hat;
    let g1 = gauge(
        None,
        Some(conn.a.map(&(t.right_inverse() * t.image_projector()))),
        None,
    );
    let c1 = eng.apply_gauge3(&g1, conn);
    let mut v = BTreeMap::new();
    v.insert("curvature_a1".into(), eng.curvature(&c1.a).l2());
    rep.steps.push(step("split A along t(h)", &c1, v));
    steps.push(g1);

    let flat_cap = cfg.flat_factor * f1 + cfg.flat_slack * h * (c1.a.l2() + 1.0);
    let (g2field, flat) = flat_trivialize(calc, &c1.a, flat_cap)?;
    rep.flat = flat;
    let g2 = gauge(Some(g2field), None, None);
    let c2raw = eng.apply_gauge3(&g2, &c1);
    let mut v = BTreeMap::new();
    v.insert("a2_dropped".into(), c2raw.a.l2());
    let bn = c2raw.b.l2().max(f64::MIN_POSITIVE);
    v.insert("t_b2_relative".into(), eng.t_hat(&c2raw.b).l2() / bn);
    let pk = projector(&t.kernel_basis, gram_h);
    let c2 = ThreeConnection {
        a: GridForm::zero(grid, 1, gd),
        b: c2raw.b.map(&pk),
        c: c2raw.c,
    };
    rep.steps.push(step("flat trivialization", &c2, v));
    steps.push(g2);

    // Remove the tau(l) part of B2.
    let tau = &module.tau_hat;
    let lambda3 = c2.b.map(&(tau.right_inverse() * tau.image_projector()));
    let g3 = gauge(None, None, Some(lambda3));
    let c3 = eng.apply_gauge3(&g3, &c2);
    rep.steps
        .push(step("split B along tau(l)", &c3, BTreeMap::new()));
    steps.push(g3);

    // B3 = da + codiff b, then (e, a, 0).
    let q = (DMatrix::identity(hd, hd) - tau.image_projector()) * &pk;
    let b3 = c3.b.map(&q);
    let split = hodge::hodge_decompose(&b3, cfg.cg_tol)?;
    rep.hodge.push(split.diagnostics.clone());
    let a_pot = split.alpha.map(&q);
    let g4 = gauge(None, Some(a_pot.clone()), None);
    let c4raw = eng.apply_gauge3(
        &g4,
        &ThreeConnection {
            a: c3.a.clone(),
            b: b3,
            c: c3.c.clone(),
        },
    );
    let mut v = BTreeMap::new();
    v.insert("a4_dropped".into(), c4raw.a.l2());
    v.insert(
        "harmonic_relative".into(),
        split.diagnostics.harmonic_relative,
    );
    let c4 = ThreeConnection {
        a: GridForm::zero(grid, 1, gd),
        ..c4raw
    };
    rep.steps.push(step("hodge gauge on B", &c4, v));
    steps.push(g4);

    // (e, 0, -1/2 {a ^ a}) removes a ^ a = 1/2 tau({a ^ a}).
    let lift = eng.lift_wedge(&a_pot, &a_pot);
    let ident = eng
        .chi_wedge_chi(&a_pot)
        .sub(&eng.tau_hat(&lift).scale(0.5))
        .l2();
    let g5 = gauge(None, None, Some(lift.scale(-0.5)));
    let c5 = eng.apply_gauge3(&g5, &c4);
    let mut v = BTreeMap::new();
    v.insert("a_wedge_a_identity".into(), ident);
    rep.steps.push(step("lifting correction", &c5, v));
    steps.push(g5);

    // B5 vanishes by Gaffney; measure, then drop it.
    let b5 = &c5.b;
    let r = b5.d().l2() + b5.codiff().l2() + b5.normal_trace_norm();
    let constant = measured_gaffney_constant(grid, 2, cfg.gaffney_probes, 0x6aff)?;
    rep.gaffney = Some(GaffneyStep {
        r,
        constant,
        bound: r * constant,
        dropped_norm: b5.l2(),
    });
    let pkt = projector(&tau.kernel_basis, gram_l);
    let cn = c5.c.l2().max(f64::MIN_POSITIVE);
    let mut v = BTreeMap::new();
    v.insert("tau_c5_relative".into(), eng.tau_hat(&c5.c).l2() / cn);
    let c5z = ThreeConnection {
        a: c5.a.clone(),
        b: GridForm::zero(grid, 2, hd),
        c: c5.c.map(&pkt),
    };
    rep.steps.push(step("drop B5", &c5z, v));

    // C5 = dp + codiff q, then (e, 0, p).
    let split = hodge::hodge_decompose(&c5z.c, cfg.cg_tol)?;
    rep.hodge.push(split.diagnostics.clone());
    let p = split.alpha.map(&pkt);
    let g6 = gauge(None, None, Some(p));
    let c6 = eng.apply_gauge3(&g6, &c5z);
    let mut v = BTreeMap::new();
    v.insert("b6_dropped".into(), c6.b.l2());
    v.insert(
        "harmonic_relative".into(),
        split.diagnostics.harmonic_relative,
    );
    rep.steps.push(step("hodge gauge on C", &c6, v));
    steps.push(g6);
    let c_final = c6.c;

    let check = eng.apply_sequence3(&steps, conn);
    let scale = (conn.a.l2() + conn.b.l2() + conn.c.l2()).max(f64::MIN_POSITIVE);
    let mut v = BTreeMap::new();
    v.insert("a_relative".into(), check.a.l2() / scale);
    v.insert("b_relative".into(), check.b.l2() / scale);
    v.insert("c_relative".into(), check.c.sub(&c_final).l2() / scale);
    rep.steps
        .push(step("gauge sequence applied to the input", &check, v));

    let cf = c_final.l2();
    let y = c_final.d();
    let w12 = c_final.w12_norm(gram_l);
    rep.final_checks = FinalChecks {
        a_norm: 0.0,
        b_norm: Some(0.0),
        kernel_relative: eng.tau_hat(&c_final).l2() / cf.max(f64::MIN_POSITIVE),
        codiff_relative: c_final.codiff().l2() / (c5z.c.l2() / h).max(f64::MIN_POSITIVE),
        normal_trace_relative: c_final.normal_trace_norm() / cf.max(f64::MIN_POSITIVE),
        top_norm: cf,
        top_w12: w12,
        curvature_l2: y.l2(),
        w12_over_curvature: (y.l2() > 0.0).then(|| w12 / y.l2()),
    };
    let gm = &module.g.gram;
    let sum = |fs: Vec<&GridForm>, gram: &DMatrix<f64>| {
        fs.iter().map(|f| f.sobolev_norm(2, gram)).sum::<f64>()
    };
    rep.estimates
        .insert("a_w22".into(), conn.a.sobolev_norm(2, gm));
    rep.estimates
        .insert("b_w22".into(), conn.b.sobolev_norm(2, gram_h));
    rep.estimates
        .insert("c_w22".into(), conn.c.sobolev_norm(2, gram_l));
    rep.estimates.insert(
        "dg_w22".into(),
        pure_gauge_norm(&steps[1].g, gd).sobolev_norm(2, gm),
    );
    rep.estimates.insert(
        "chi_w22".into(),
        sum(steps.iter().map(|s| &s.chi).collect(), gram_h),
    );
    rep.estimates.insert(
        "lambda_w22".into(),
        sum(steps.iter().map(|s| &s.lambda).collect(), gram_l),
    );
    rep.bound("A' = 0", 0.0, 0.0);
    rep.bound("B' = 0", 0.0, 0.0);
    rep.bound(
        "|tau(C')| / |C'|",
        rep.final_checks.kernel_relative,
        cfg.tol_alg,
    );
    rep.bound(
        "|codiff C'| relative",
        rep.final_checks.codiff_relative,
        cfg.tol_solver,
    );
    Ok(Canonical3 {
        steps,
        c: c_final,
        report: rep,
    })
}
