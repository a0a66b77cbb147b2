use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{flat_trivialize, FinalChecks, FixConfig, GaugeFixReport, StepReport};
use crate::error::{Error, Result};
use crate::gauge::{Engine, TwoConnection, TwoGauge};
use crate::grid::{GridCalculus, GridForm, GridGroupField};
use crate::hodge;

pub struct Canonical2 {
    /// The three steps composed by the verified composition law.
    pub gauge: TwoGauge<GridGroupField, GridForm>,
    pub steps: Vec<TwoGauge<GridGroupField, GridForm>>,
    pub b: GridForm,
    pub report: GaugeFixReport,
}

pub(crate) fn check_form(
    f: &GridForm,
    calc: &GridCalculus,
    degree: usize,
    dim: usize,
    what: &str,
) -> Result<()> {
    if f.degree != degree || f.dim != dim || f.grid.m != calc.grid.m || f.grid.n != calc.grid.n {
        return Err(Error::Dimension {
            context: format!("{what}: expected a degree-{degree} form with {dim} components on the calculus grid"),
            expected: degree * 1000 + dim,
            got: f.degree * 1000 + f.dim,
        });
    }
    Ok(())
}

/// Gram-orthogonal projector onto the span of the Gram-orthonormal columns of `k`.
pub(crate) fn projector(k: &DMatrix<f64>, gram: &DMatrix<f64>) -> DMatrix<f64> {
    k * k.transpose() * gram
}

pub(crate) fn report_header(
    calc: &GridCalculus,
    pipeline: &str,
    cfg: &FixConfig,
) -> GaugeFixReport {
    GaugeFixReport {
        pipeline: pipeline.into(),
        module: calc.module.name.clone(),
        module_hash: calc.module.hash(),
        m: calc.grid.m,
        n: calc.grid.n,
        config: cfg.clone(),
        ..Default::default()
    }
}

pub(crate) fn pure_gauge_norm(g: &GridGroupField, dim: usize) -> GridForm {
    g.gauge_connection(&GridForm::zero(&g.grid, 1, dim))
}

pub fn canonical_gauge2(
    calc: &GridCalculus,
    conn: &TwoConnection<GridForm>,
    cfg: &FixConfig,
) -> Result<Canonical2> {
    let module = &calc.module;
    let (gd, hd) = (module.g.dim, module.h.dim);
    check_form(&conn.a, calc, 1, gd, "A")?;
    check_form(&conn.b, calc, 2, hd, "B")?;
    let eng = Engine::new(calc, module);
    let h = calc.grid.h;
    let gram_h = &module.h.gram;
    let mut rep = report_header(calc, "canonical2", cfg);

    let fc_in = eng.fake_curvature(&conn.a, &conn.b).l2();
    let cap = cfg.fake_curvature_cap * h * (conn.a.l2() + conn.b.l2() + 1.0);
    rep.input.insert("fake_curvature".into(), fc_in);
    rep.input.insert("fake_curvature_cap".into(), cap);
    rep.input.insert("ym2".into(), eng.ym2(conn));
    rep.input.insert("a_l2".into(), conn.a.l2());
    rep.input.insert("b_l2".into(), conn.b.l2());
    if fc_in > cap {
        return Err(Error::Precondition(format!(
            "input violates fake flatness: |F_A - t(B)| = {fc_in:.3e} exceeds the cap {cap:.3e}"
        )));
    }
    let step =
        |name: &str, c: &TwoConnection<GridForm>, values: BTreeMap<String, f64>| StepReport {
            name: name.into(),
            fake_curvature: eng.fake_curvature(&c.a, &c.b).l2(),
            fake_curvature2: None,
            values,
        };

    // A = A_top + A_perp along t(h); chi1 = t^{-1}(A_top) moves A onto A_perp.
    let t = &module.t_hat;
    let chi1 = conn.a.map(&(t.right_inverse() * t.image_projector()));
    let g1 = TwoGauge {
        g: calc_identity(calc),
        chi: chi1,
    };
    let c1 = eng.apply_gauge2(&g1, conn);
    let f1 = eng.curvature(&c1.a).l2();
    let mut v = BTreeMap::new();
    v.insert("curvature_a1".into(), f1);
    rep.steps.push(step("split A along t(h)", &c1, v));

    // Trivialize the flat A1.
    let flat_cap = cfg.flat_factor * fc_in + cfg.flat_slack * h * (c1.a.l2() + 1.0);
    let (g2field, flat) = flat_trivialize(calc, &c1.a, flat_cap)?;
    let g2 = TwoGauge {
        g: g2field,
        chi: GridForm::zero(&calc.grid, 1, hd),
    };
    let c2raw = eng.apply_gauge2(&g2, &c1);
    let mut v = BTreeMap::new();
    v.insert("a2_dropped".into(), c2raw.a.l2());
    rep.flat = flat;
    let c2 = TwoConnection {
        a: GridForm::zero(&calc.grid, 1, gd),
        b: c2raw.b,
    };
    let bn = c2.b.l2().max(f64::MIN_POSITIVE);
    v.insert("t_b2_relative".into(), eng.t_hat(&c2.b).l2() / bn);
    rep.steps.push(step("flat trivialization", &c2, v));

    // B2 into Ker t, then B2 = da + codiff b.
    let pk = projector(&t.kernel_basis, gram_h);
    let b2 = c2.b.map(&pk);
    let split = hodge::hodge_decompose(&b2, cfg.cg_tol)?;
    let a_pot = split.alpha.map(&pk);
    rep.hodge.push(split.diagnostics.clone());
    let g3 = TwoGauge {
        g: calc_identity(calc),
        chi: a_pot,
    };
    let c3 = eng.apply_gauge2(
        &g3,
        &TwoConnection {
            a: c2.a.clone(),
            b: b2.clone(),
        },
    );
    let mut v = BTreeMap::new();
    v.insert("a3_dropped".into(), c3.a.l2());
    v.insert(
        "harmonic_relative".into(),
        split.diagnostics.harmonic_relative,
    );
    rep.steps.push(step("hodge gauge", &c3, v));
    let b_final = c3.b;

    let total = eng.compose_gauge2(&eng.compose_gauge2(&g1, &g2), &g3);
    let check = eng.apply_gauge2(&total, conn);
    let mut v = BTreeMap::new();
    let scale = (conn.a.l2() + conn.b.l2()).max(f64::MIN_POSITIVE);
    v.insert("a_relative".into(), check.a.l2() / scale);
    v.insert("b_relative".into(), check.b.sub(&b_final).l2() / scale);
    rep.steps
        .push(step("composed gauge applied to the input", &check, v));

    let bf = b_final.l2();
    let z = b_final.d();
    let w12 = b_final.w12_norm(gram_h);
    rep.final_checks = FinalChecks {
        a_norm: 0.0,
        b_norm: None,
        kernel_relative: eng.t_hat(&b_final).l2() / bf.max(f64::MIN_POSITIVE),
        codiff_relative: b_final.codiff().l2() / (b2.l2() / h).max(f64::MIN_POSITIVE),
        normal_trace_relative: b_final.normal_trace_norm() / bf.max(f64::MIN_POSITIVE),
        top_norm: bf,
        top_w12: w12,
        curvature_l2: z.l2(),
        w12_over_curvature: (z.l2() > 0.0).then(|| w12 / z.l2()),
    };
    let gm = &module.g.gram;
    rep.estimates
        .insert("a_w22".into(), conn.a.sobolev_norm(2, gm));
    rep.estimates
        .insert("b_w22".into(), conn.b.sobolev_norm(2, gram_h));
    rep.estimates.insert(
        "dg_w22".into(),
        pure_gauge_norm(&total.g, gd).sobolev_norm(2, gm),
    );
    rep.estimates
        .insert("chi_w22".into(), total.chi.sobolev_norm(2, gram_h));
    rep.bound("A' = 0", 0.0, 0.0);
    rep.bound(
        "|t(B')| / |B'|",
        rep.final_checks.kernel_relative,
        cfg.tol_alg,
    );
    rep.bound(
        "|codiff B'| relative",
        rep.final_checks.codiff_relative,
        cfg.tol_solver,
    );
    Ok(Canonical2 {
        gauge: total,
        steps: vec![g1, g2, g3],
        b: b_final,
        report: rep,
    })
}

pub(crate) fn calc_identity(calc: &GridCalculus) -> GridGroupField {
    GridGroupField::identity(&calc.grid, &calc.module)
}
