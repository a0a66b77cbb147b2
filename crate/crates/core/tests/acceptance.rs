//! One line per acceptance criterion. Run with
//! `cargo test -p hgt-core --test acceptance`; exits nonzero on any failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use hgt_core::canonical::selfdual::{check_selfdual_ym, make_selfdual};
use hgt_core::canonical::survey::{summarize, SurveyRow};
use hgt_core::canonical::uniqueness::pointwise_norm_error;
use hgt_core::canonical::{canonical_gauge2, canonical_gauge3, FixConfig};
use hgt_core::gauge::{ThreeConnection, TwoConnection};
use hgt_core::generators::{
    admit, covariance_defect3, inverse_round_trip2, random_canonical2, random_canonical3,
    scramble2, scramble3, InstanceSpec,
};
use hgt_core::grid::{Grid, GridForm};
use hgt_core::hodge::{harmonic_dimension, hodge_decompose};
use hgt_core::identities::identity_suite;
use hgt_core::xmod;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const SEEDS: u64 = 20;
const IDENTITY_SEEDS: u64 = 50;
const IDENTITY_AMPLITUDE: f64 = 0.5;

struct Outcome {
    passed: bool,
    detail: String,
    data: Value,
}

fn max(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

fn c1_axioms() -> Outcome {
    let mut data = BTreeMap::new();
    for (name, f) in xmod::registry() {
        let rep = f().validate();
        data.insert(name.to_string(), (rep.valid, rep.worst()));
    }
    let worst = max(data.values().map(|v| v.1));
    Outcome {
        passed: data.values().all(|v| v.0) && worst <= 1e-10,
        detail: format!(
            "{} modules, worst residual {worst:.2e} (tol 1e-10)",
            data.len()
        ),
        data: json!(data),
    }
}

fn identities(name: &str, m: usize) -> hgt_core::identities::IdentityReport {
    let module = xmod::registry_get(name).unwrap();
    identity_suite(&module, m, 4, IDENTITY_SEEDS, IDENTITY_AMPLITUDE)
}

fn c2_identities() -> Outcome {
    let mut reports = Vec::new();
    for (name, _) in xmod::registry() {
        for m in 3..=6 {
            reports.push(identities(name, m));
        }
    }
    let worst = max(reports.iter().map(|r| r.worst()));
    Outcome {
        passed: reports.iter().all(|r| r.passed),
        detail: format!(
            "{} suites x {IDENTITY_SEEDS} seeds, K = 4, worst residual {worst:.2e} (tol 1e-9)",
            reports.len()
        ),
        data: json!(reports),
    }
}

fn hodge_case(m: usize, n: usize) -> Value {
    let g = std::sync::Arc::new(Grid::new(m, n));
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + 10 * m as u64 + n as u64);
    let mut rows = Vec::new();
    for k in 0..=m {
        let w = GridForm::random(&g, k, 1, 1.0, &mut rng);
        let d = hodge_decompose(&w, 1e-12).unwrap().diagnostics;
        let orth = max([
            d.orth_exact_coexact,
            d.orth_exact_harmonic,
            d.orth_coexact_harmonic,
        ]);
        let hdim = harmonic_dimension(&g, k, 3, 7).unwrap();
        rows.push(json!({"k": k, "reconstruction": d.reconstruction, "orthogonality": orth, "harmonic_dimension": hdim}));
    }
    json!({"m": m, "n": n, "degrees": rows})
}

fn c3_hodge() -> Outcome {
    let cases: Vec<Value> = [(3, 8), (3, 16), (4, 8)]
        .iter()
        .map(|&(m, n)| hodge_case(m, n))
        .collect();
    let rows: Vec<&Value> = cases
        .iter()
        .flat_map(|c| c["degrees"].as_array().unwrap())
        .collect();
    let recon = max(rows.iter().map(|r| r["reconstruction"].as_f64().unwrap()));
    let orth = max(rows.iter().map(|r| r["orthogonality"].as_f64().unwrap()));
    let harmonic_ok = rows
        .iter()
        .all(|r| r["k"] == 0 || r["harmonic_dimension"] == 0);
    Outcome {
        passed: recon <= 1e-7 && orth <= 1e-6 && harmonic_ok,
        detail: format!(
            "reconstruction {recon:.2e} (tol 1e-7), orthogonality {orth:.2e} (tol 1e-6), harmonic dim 0 for k >= 1: {harmonic_ok}"
        ),
        data: json!(cases),
    }
}

fn flat2(seed: u64) -> f64 {
    let spec = InstanceSpec::grid("product", 3, 16, seed);
    let calc = spec.calculus().unwrap();
    let zero = TwoConnection {
        a: GridForm::zero(&calc.grid, 1, 6),
        b: GridForm::zero(&calc.grid, 2, 6),
    };
    let (s, g) = scramble2(&calc, &zero, &spec);
    admit(inverse_round_trip2(&calc, &zero, &s, &g), &calc).unwrap();
    let out = canonical_gauge2(&calc, &s, &FixConfig::default()).unwrap();
    out.b.l2() / s.b.l2()
}

fn flat3(seed: u64) -> f64 {
    let spec = InstanceSpec::grid("rep-2crossed", 4, 8, seed);
    let calc = spec.calculus().unwrap();
    let module = &calc.module;
    let zero = ThreeConnection {
        a: GridForm::zero(&calc.grid, 1, module.g.dim),
        b: GridForm::zero(&calc.grid, 2, module.h.dim),
        c: GridForm::zero(&calc.grid, 3, module.l.dim),
    };
    let (s, _) = scramble3(&calc, &zero, &spec);
    admit(covariance_defect3(&calc, &zero, &s), &calc).unwrap();
    let out = canonical_gauge3(&calc, &s, &FixConfig::default()).unwrap();
    out.c.l2() / s.c.l2()
}

fn c4_poincare() -> Outcome {
    let r2: Vec<f64> = (0..SEEDS).map(flat2).collect();
    let r3: Vec<f64> = (0..SEEDS).map(flat3).collect();
    let (m2, m3) = (max(r2.iter().copied()), max(r3.iter().copied()));
    Outcome {
        passed: m2 <= 0.02 && m3 <= 0.05,
        detail: format!(
            "max |B'|/|B| {m2:.2e} (tol 0.02, m=3 N=16), max |C'|/|C| {m3:.2e} (tol 0.05, m=4 N=8)"
        ),
        data: json!({"two": r2, "three": r3}),
    }
}

/// One round trip: planted canonical field, scramble, pipeline.
fn round_trip(pipeline: u8, n: usize, seed: u64) -> (f64, SurveyRow, Value) {
    let cfg = FixConfig::default();
    if pipeline == 2 {
        let spec = InstanceSpec::grid("product", 3, n, seed);
        let calc = spec.calculus().unwrap();
        let c0 = random_canonical2(&calc, &spec).unwrap();
        let (s, g) = scramble2(&calc, &c0, &spec);
        admit(inverse_round_trip2(&calc, &c0, &s, &g), &calc).unwrap();
        let out = canonical_gauge2(&calc, &s, &cfg).unwrap();
        let err = pointwise_norm_error(&c0.b, &out.b, &calc.module.h.gram);
        let row = SurveyRow::from_report(n, seed, spec.amplitude, &out.report);
        (err, row, serde_json::to_value(&out.report).unwrap())
    } else {
        let spec = InstanceSpec::grid("rep-2crossed", 4, n, seed);
        let calc = spec.calculus().unwrap();
        let c0 = random_canonical3(&calc, &spec).unwrap();
        let (s, _) = scramble3(&calc, &c0, &spec);
        admit(covariance_defect3(&calc, &c0, &s), &calc).unwrap();
        let out = canonical_gauge3(&calc, &s, &cfg).unwrap();
        let err = pointwise_norm_error(&c0.c, &out.c, &calc.module.l.gram);
        let row = SurveyRow::from_report(n, seed, spec.amplitude, &out.report);
        (err, row, serde_json::to_value(&out.report).unwrap())
    }
}

struct RoundTrips {
    errors: BTreeMap<(u8, usize), Vec<f64>>,
    rows: BTreeMap<u8, Vec<SurveyRow>>,
    reports: BTreeMap<(u8, usize, u64), Value>,
}

fn run_round_trips() -> RoundTrips {
    let mut rt = RoundTrips {
        errors: BTreeMap::new(),
        rows: BTreeMap::new(),
        reports: BTreeMap::new(),
    };
    for (pipeline, sizes) in [(2u8, [8usize, 16]), (3, [6, 12])] {
        for n in sizes {
            for seed in 0..SEEDS {
                let (err, row, report) = round_trip(pipeline, n, seed);
                rt.errors.entry((pipeline, n)).or_default().push(err);
                rt.rows.entry(pipeline).or_default().push(row);
                rt.reports.insert((pipeline, n, seed), report);
            }
        }
    }
    rt
}

fn c5_uniqueness(rt: &RoundTrips) -> Outcome {
    let e = |p: u8, n: usize| max(rt.errors[&(p, n)].iter().copied());
    let (e8, e16, e6, e12) = (e(2, 8), e(2, 16), e(3, 6), e(3, 12));
    let rate2 = (e8 / e16).log2();
    let rate3 = (e6 / e12).log2();
    let all_passed = rt.rows.values().flatten().all(|r| r.pipeline_passed);
    Outcome {
        passed: e16 <= 0.05 && rate2 >= 0.8 && e12 <= 0.08 && all_passed,
        detail: format!(
            "2-gauge max error {e8:.3e} (N=8) {e16:.3e} (N=16, tol 0.05), rate {rate2:.2} (min 0.8); \
             3-gauge {e6:.3e} (N=6) {e12:.3e} (N=12, tol 0.08), rate {rate3:.2}; pipeline bounds met: {all_passed}"
        ),
        data: json!({"errors": rt.errors.iter().map(|((p, n), v)| json!({"pipeline": p, "n": n, "errors": v})).collect::<Vec<_>>()}),
    }
}

fn c6_estimates(rt: &RoundTrips) -> Outcome {
    let mut parts = Vec::new();
    let mut passed = true;
    let mut data = BTreeMap::new();
    for (pipeline, sizes) in [(2u8, vec![8usize, 16]), (3, vec![6, 12])] {
        let (summary, finite, stable) = summarize(&sizes, &rt.rows[&pipeline]);
        let gaffney: Vec<f64> = summary
            .iter()
            .map(|s| s.max_gaffney.unwrap_or(f64::INFINITY))
            .collect();
        let ok = finite && stable && (pipeline == 3 || gaffney.iter().all(|g| *g <= 20.0));
        passed &= ok;
        let ratios: Vec<String> = summary
            .iter()
            .map(|s| {
                let r: Vec<String> = s
                    .max_ratio
                    .iter()
                    .map(|(k, v)| format!("{k} {v:.2}"))
                    .collect();
                format!("N={}: {}", s.n, r.join(", "))
            })
            .collect();
        parts.push(format!(
            "{pipeline}-gauge max W12/curvature {} ; ratios [{}] finite {finite} stable {stable}",
            gaffney
                .iter()
                .map(|g| format!("{g:.2}"))
                .collect::<Vec<_>>()
                .join(" / "),
            ratios.join("; ")
        ));
        data.insert(
            pipeline.to_string(),
            json!({"summary": summary, "finite": finite, "stable": stable}),
        );
    }
    Outcome {
        passed,
        detail: format!("{} (2-gauge Gaffney bound 20)", parts.join(" | ")),
        data: json!(data),
    }
}

fn selfdual_case(m: usize, n: usize, sign: i32) -> Value {
    let f = make_selfdual(m, n, sign, 1, 1e-10).unwrap();
    let chk = check_selfdual_ym(&f.omega, sign, 1e-7);
    json!({
        "m": m, "n": n, "sign": sign,
        "selfduality": chk.residuals.selfduality,
        "codiff": chk.residuals.codiff,
        "interior_share": chk.residuals.interior_share,
        "laplacian": chk.laplacian,
        "constraints_met": chk.preconditions_met,
        "cg_iterations": f.solve.iterations,
    })
}

fn c7_selfdual() -> Outcome {
    let cases: Vec<Value> = [(4, 4, 1), (4, 4, -1), (6, 4, 1), (6, 4, -1), (8, 3, 1)]
        .iter()
        .map(|&(m, n, s)| selfdual_case(m, n, s))
        .collect();
    let f = |c: &Value, k: &str| c[k].as_f64().unwrap();
    let constraints = max(cases
        .iter()
        .map(|c| f(c, "selfduality").max(f(c, "codiff"))));
    let lap = max(cases.iter().map(|c| f(c, "laplacian")));
    let share = cases
        .iter()
        .map(|c| f(c, "interior_share"))
        .fold(f64::INFINITY, f64::min);
    Outcome {
        passed: constraints <= 1e-7 && lap <= 1e-6 && share > 0.1,
        detail: format!(
            "m=4 N=4, m=6 N=4 (both signs), m=8 N=3: constraints {constraints:.2e} (tol 1e-7), |Lap w|/|w| {lap:.2e} (tol 1e-6), min interior share {share:.2}"
        ),
        data: json!(cases),
    }
}

fn c8_determinism(first: &BTreeMap<u8, Value>, rt: &RoundTrips) -> Outcome {
    let mut same = Vec::new();
    same.push(("axioms", c1_axioms().data == first[&1]));
    let ids = json!(identities("peiffer-su2", 4));
    let first_ids = first[&2]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["module"] == "peiffer-su2" && r["m"] == 4)
        .unwrap();
    same.push(("identities", &ids == first_ids));
    same.push(("hodge", hodge_case(3, 8) == first[&3][0]));
    same.push((
        "round trip 2",
        round_trip(2, 8, 0).2 == rt.reports[&(2, 8, 0)],
    ));
    same.push((
        "round trip 3",
        round_trip(3, 6, 0).2 == rt.reports[&(3, 6, 0)],
    ));
    same.push(("self-dual", selfdual_case(6, 4, 1) == first[&7][2]));
    let failed: Vec<&str> = same.iter().filter(|s| !s.1).map(|s| s.0).collect();
    Outcome {
        passed: failed.is_empty(),
        detail: format!(
            "{} reruns compared field by field, mismatches: {failed:?}",
            same.len()
        ),
        data: Value::Null,
    }
}

fn main() {
    let names = [
        "axiom suite",
        "jet identity suite",
        "discrete Hodge suite",
        "higher Poincare lemma",
        "round-trip uniqueness",
        "norm estimates",
        "self-dual implies Yang-Mills",
        "determinism",
    ];
    let budgets = [
        10.0,
        60.0,
        300.0,
        600.0,
        1800.0,
        f64::INFINITY,
        1200.0,
        f64::INFINITY,
    ];
    let mut out = std::io::stdout().lock();
    let mut data = BTreeMap::new();
    let mut all = true;
    let mut report = |id: u8, o: Outcome, secs: f64, data: &mut BTreeMap<u8, Value>| {
        let within = secs <= budgets[id as usize - 1];
        let ok = o.passed && within;
        all &= ok;
        let budget = if budgets[id as usize - 1].is_finite() {
            format!(" (budget {:.0} s)", budgets[id as usize - 1])
        } else {
            String::new()
        };
        writeln!(
            out,
            "[{}] criterion {id} {}: {} [{secs:.1} s{budget}]",
            if ok { "PASS" } else { "FAIL" },
            names[id as usize - 1],
            o.detail
        )
        .unwrap();
        out.flush().unwrap();
        data.insert(id, o.data);
    };
    let timed = |f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed().as_secs_f64())
    };
    let (o, s) = timed(&mut c1_axioms);
    report(1, o, s, &mut data);
    let (o, s) = timed(&mut c2_identities);
    report(2, o, s, &mut data);
    let (o, s) = timed(&mut c3_hodge);
    report(3, o, s, &mut data);
    let (o, s) = timed(&mut c4_poincare);
    report(4, o, s, &mut data);
    let t = Instant::now();
    let rt = run_round_trips();
    let rt_secs = t.elapsed().as_secs_f64();
    let (o, s) = timed(&mut || c5_uniqueness(&rt));
    report(5, o, s + rt_secs, &mut data);
    let (o, s) = timed(&mut || c6_estimates(&rt));
    report(6, o, s, &mut data);
    let (o, s) = timed(&mut c7_selfdual);
    report(7, o, s, &mut data);
    let snapshot = data.clone();
    let (o, s) = timed(&mut || c8_determinism(&snapshot, &rt));
    report(8, o, s, &mut data);
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance.json");
    let text = serde_json::to_string_pretty(&data).unwrap();
    std::fs::write(&path, text).unwrap();
    writeln!(out, "acceptance data written to {}", path.display()).unwrap();
    if !all {
        std::process::exit(1);
    }
}
