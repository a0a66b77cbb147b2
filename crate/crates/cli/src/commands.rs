use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hgt_core::canonical::selfdual::{check_selfdual_ym, make_selfdual};
use hgt_core::canonical::survey::{estimate_survey, SurveyConfig};
use hgt_core::canonical::uniqueness::pointwise_norm_error;
use hgt_core::canonical::{canonical_gauge2, canonical_gauge3};
use hgt_core::gauge::{ThreeConnection, TwoConnection};
use hgt_core::generators::{
    admit, covariance_defect3, inverse_round_trip2, random_canonical2, random_canonical3,
    scramble2, scramble3, InstanceSpec,
};
use hgt_core::grid::{GridCalculus, GridForm};
use hgt_core::identities::identity_suite;
use hgt_core::xmod::{self, CrossedModule};
use hgt_core::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::files::{self, Format, Manifest};
use crate::{Command, PoincareArgs, RegistryAction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Canonical2,
    Scramble2,
    Canonical3,
    Scramble3,
    Selfdual,
}

pub struct Outcome {
    pub passed: bool,
    pub module_hash: Option<String>,
    pub result: Value,
}

fn progress(cfg: &RunConfig, msg: impl FnOnce() -> String) {
    if cfg.verbosity > 0 {
        eprintln!("hgt: {}", msg());
    }
}

fn required<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::Precondition(format!("missing {what}")))
}

fn module_of(cfg: &RunConfig, default: Option<&str>) -> Result<CrossedModule> {
    match (&cfg.module, default) {
        (Some(m), _) => files::resolve_module(m),
        (None, Some(d)) => files::resolve_module(d),
        (None, None) => Err(Error::Precondition(
            "missing module (--module or \"module\" in the config)".into(),
        )),
    }
}

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Command::ValidateModule { .. } => validate(cfg),
        Command::CheckIdentities {
            dim,
            order,
            seeds,
            amplitude,
            ..
        } => identities(cfg, *dim, *order, *seeds, *amplitude),
        Command::Gen {
            kind,
            spec,
            format,
            sign,
            ..
        } => generate(cfg, *kind, spec.as_deref(), *format, *sign),
        Command::FixGauge2(a) => fix(cfg, 2, a.emit_canonical.as_deref()),
        Command::FixGauge3(a) => fix(cfg, 3, a.emit_canonical.as_deref()),
        Command::Poincare2(a) => poincare(cfg, 2, a),
        Command::Poincare3(a) => poincare(cfg, 3, a),
        Command::Selfdual {
            dim,
            grid,
            sign,
            emit,
            ..
        } => selfdual(cfg, *dim, *grid, *sign, emit.as_deref()),
        Command::Survey {
            seeds,
            survey,
            pipeline,
            dim,
            sizes,
            amplitudes,
            ..
        } => {
            let mut sc = match survey {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| Error::Data(format!("cannot read {}: {e}", p.display())))?;
                    let de = &mut serde_json::Deserializer::from_str(&text);
                    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
                        path: format!("{}: {}", p.display(), e.path()),
                        message: e.inner().to_string(),
                    })?
                }
                None => SurveyConfig::default(),
            };
            if let Some(m) = &cfg.module {
                sc.module = m.clone();
            }
            sc.seeds = seeds.unwrap_or(sc.seeds);
            sc.pipeline = pipeline.unwrap_or(sc.pipeline);
            sc.m = dim.unwrap_or(sc.m);
            if let Some(s) = sizes {
                sc.sizes = s.clone();
            }
            if let Some(a) = amplitudes {
                sc.amplitudes = a.clone();
            }
            sc.fix = cfg.tolerances.fix.clone();
            survey_run(cfg, &sc)
        }
        Command::Registry {
            action: RegistryAction::Export { out },
        } => export(out),
    }
}

fn validate(cfg: &RunConfig) -> Result<Outcome> {
    let module = module_of(cfg, None)?;
    let rep = module.validate();
    let tol = cfg.tolerances.module;
    Ok(Outcome {
        passed: rep.valid && rep.worst() <= tol,
        module_hash: Some(module.hash()),
        result: json!({ "worst": rep.worst(), "tol": tol, "validation": rep }),
    })
}

fn identities(
    cfg: &RunConfig,
    dim: usize,
    order: usize,
    seeds: u64,
    amplitude: f64,
) -> Result<Outcome> {
    let module = module_of(cfg, None)?;
    if !(1..=8).contains(&dim) || order < 2 {
        return Err(Error::Precondition(format!(
            "need 1 <= dim <= 8 and order >= 2, got dim {dim}, order {order}"
        )));
    }
    progress(cfg, || {
        format!("{seeds} seeds on {} at m = {dim}, K = {order}", module.name)
    });
    let rep = identity_suite(&module, dim, order, seeds, amplitude);
    let tol = cfg.tolerances.identity;
    Ok(Outcome {
        passed: rep.worst() <= tol,
        module_hash: Some(module.hash()),
        result: json!({ "worst": rep.worst(), "tol": tol, "identities": rep }),
    })
}

fn spec_of(cfg: &RunConfig, path: Option<&Path>) -> Result<InstanceSpec> {
    if let Some(p) = path {
        let text = std::fs::read_to_string(p)
            .map_err(|e| Error::Data(format!("cannot read spec {}: {e}", p.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        return serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: format!("{}: {}", p.display(), e.path()),
            message: e.inner().to_string(),
        });
    }
    required(
        &cfg.spec,
        "instance spec (--spec or \"spec\" in the config)",
    )
    .cloned()
}

fn manifest(kind: &str, calc: &GridCalculus, spec: Option<&InstanceSpec>) -> Manifest {
    Manifest {
        kind: kind.into(),
        module: calc.module.name.clone(),
        module_hash: calc.module.hash(),
        m: calc.grid.m,
        n: calc.grid.n,
        spec: spec.cloned(),
        forms: BTreeMap::new(),
        ground_truth: BTreeMap::new(),
        extra: BTreeMap::new(),
    }
}

fn put(
    dir: &Path,
    map: &mut BTreeMap<String, PathBuf>,
    role: &str,
    w: &GridForm,
    algebra: &str,
    format: Format,
) -> Result<()> {
    map.insert(
        role.into(),
        files::write_form(dir, role, w, algebra, format)?,
    );
    Ok(())
}

fn generate(
    cfg: &RunConfig,
    kind: Kind,
    spec_path: Option<&Path>,
    format: Format,
    sign: i32,
) -> Result<Outcome> {
    let dir = required(&cfg.output, "output directory")?.clone();
    let spec = spec_of(cfg, spec_path)?;
    if kind == Kind::Selfdual {
        let f = make_selfdual(
            spec.m,
            spec.n,
            sign,
            spec.seed,
            cfg.tolerances.selfdual * 1e-3,
        )?;
        let mut man = Manifest {
            kind: "selfdual".into(),
            module: "scalar".into(),
            module_hash: String::new(),
            m: spec.m,
            n: spec.n,
            spec: Some(spec.clone()),
            forms: BTreeMap::new(),
            ground_truth: BTreeMap::new(),
            extra: BTreeMap::new(),
        };
        put(&dir, &mut man.forms, "omega", &f.omega, "scalar", format)?;
        man.extra.insert("sign".into(), sign as f64);
        man.extra
            .insert("selfduality".into(), f.residuals.selfduality);
        man.extra.insert("codiff".into(), f.residuals.codiff);
        let path = files::write_manifest(&dir, &man)?;
        return Ok(Outcome {
            passed: true,
            module_hash: None,
            result: json!({ "manifest": path, "instance": man, "residuals": f.residuals }),
        });
    }
    let calc = spec.calculus()?;
    let module = calc.module.clone();
    let (gn, hn, ln) = (
        module.g.name.clone(),
        module.h.name.clone(),
        module.l.name.clone(),
    );
    let mut man = manifest(&format!("{kind:?}").to_lowercase(), &calc, Some(&spec));
    match kind {
        Kind::Canonical2 | Kind::Scramble2 => {
            if module.is_two_crossed() {
                return Err(Error::Precondition(format!(
                    "{} is a 2-crossed module; use the 3-gauge kinds",
                    module.name
                )));
            }
            let c0 = random_canonical2(&calc, &spec)?;
            let conn = if kind == Kind::Scramble2 {
                let (s, g) = scramble2(&calc, &c0, &spec);
                let defect = admit(inverse_round_trip2(&calc, &c0, &s, &g), &calc)?;
                man.extra.insert("inverse_round_trip".into(), defect);
                put(&dir, &mut man.ground_truth, "B0", &c0.b, &hn, format)?;
                s
            } else {
                c0
            };
            put(&dir, &mut man.forms, "A", &conn.a, &gn, format)?;
            put(&dir, &mut man.forms, "B", &conn.b, &hn, format)?;
        }
        Kind::Canonical3 | Kind::Scramble3 => {
            if !module.is_two_crossed() {
                return Err(Error::Precondition(format!(
                    "{} is a crossed module; use the 2-gauge kinds",
                    module.name
                )));
            }
            let c0 = random_canonical3(&calc, &spec)?;
            let conn = if kind == Kind::Scramble3 {
                let (s, _) = scramble3(&calc, &c0, &spec);
                let defect = admit(covariance_defect3(&calc, &c0, &s), &calc)?;
                man.extra.insert("curvature_covariance".into(), defect);
                put(&dir, &mut man.ground_truth, "C0", &c0.c, &ln, format)?;
                s
            } else {
                c0
            };
            put(&dir, &mut man.forms, "A", &conn.a, &gn, format)?;
            put(&dir, &mut man.forms, "B", &conn.b, &hn, format)?;
            put(&dir, &mut man.forms, "C", &conn.c, &ln, format)?;
        }
        Kind::Selfdual => unreachable!(),
    }
    let path = files::write_manifest(&dir, &man)?;
    Ok(Outcome {
        passed: true,
        module_hash: Some(man.module_hash.clone()),
        result: json!({ "manifest": path, "instance": man }),
    })
}

fn fix(cfg: &RunConfig, pipeline: u8, emit: Option<&Path>) -> Result<Outcome> {
    let inst = required(
        &cfg.instance,
        "instance (--conn or \"instance\" in the config)",
    )?;
    let (man, dir) = files::read_manifest(inst)?;
    let module = match &cfg.module {
        Some(m) => files::resolve_module(m)?,
        None => files::resolve_module(&man.module)?,
    };
    if module.hash() != man.module_hash {
        return Err(Error::Precondition(format!(
            "instance was generated for module '{}' ({}), not '{}' ({})",
            man.module,
            man.module_hash,
            module.name,
            module.hash()
        )));
    }
    if module.is_two_crossed() != (pipeline == 3) {
        return Err(Error::Precondition(format!(
            "fix-gauge{pipeline} does not apply to module '{}'",
            module.name
        )));
    }
    let calc = GridCalculus::new(&module, man.m, man.n);
    let g = &calc.grid;
    let a = files::read_form(&dir, man.form("A")?, g, 1, module.g.dim, "A")?;
    let b = files::read_form(&dir, man.form("B")?, g, 2, module.h.dim, "B")?;
    progress(cfg, || {
        format!(
            "fix-gauge{pipeline} on {} (m = {}, N = {})",
            module.name, man.m, man.n
        )
    });
    let tol = &cfg.tolerances.fix;
    let (report, top, truth_role, gram) = if pipeline == 2 {
        let out = canonical_gauge2(&calc, &TwoConnection { a, b }, tol)?;
        (out.report, out.b, "B0", module.h.gram.clone())
    } else {
        let c = files::read_form(&dir, man.form("C")?, g, 3, module.l.dim, "C")?;
        let out = canonical_gauge3(&calc, &ThreeConnection { a, b, c }, tol)?;
        (out.report, out.c, "C0", module.l.gram.clone())
    };
    let mut result = json!({ "instance": man, "pipeline": report });
    if let Some(rel) = man.ground_truth.get(truth_role) {
        let degree = pipeline as usize;
        let planted = files::read_form(&dir, rel, g, degree, top.dim, truth_role)?;
        result["ground_truth_pointwise_norm_error"] =
            json!(pointwise_norm_error(&planted, &top, &gram));
    }
    if let Some(out_dir) = emit {
        let role = if pipeline == 2 { "B" } else { "C" };
        let mut m = man.clone();
        m.kind = format!("canonical{pipeline}");
        m.forms.clear();
        m.ground_truth.clear();
        m.extra.clear();
        let algebra = if pipeline == 2 {
            &module.h.name
        } else {
            &module.l.name
        };
        put(
            out_dir,
            &mut m.forms,
            "A",
            &GridForm::zero(g, 1, module.g.dim),
            &module.g.name,
            Format::Binary,
        )?;
        if pipeline == 3 {
            put(
                out_dir,
                &mut m.forms,
                "B",
                &GridForm::zero(g, 2, module.h.dim),
                &module.h.name,
                Format::Binary,
            )?;
        }
        put(out_dir, &mut m.forms, role, &top, algebra, Format::Binary)?;
        result["canonical"] = json!(files::write_manifest(out_dir, &m)?);
    }
    Ok(Outcome {
        passed: report.passed,
        module_hash: Some(module.hash()),
        result,
    })
}

fn poincare(cfg: &RunConfig, pipeline: u8, a: &PoincareArgs) -> Result<Outcome> {
    let (default_module, default_m, default_n, tol) = if pipeline == 2 {
        ("product", 3, 16, cfg.tolerances.poincare2)
    } else {
        ("rep-2crossed", 4, 8, cfg.tolerances.poincare3)
    };
    let module_name = cfg.module.clone().unwrap_or_else(|| default_module.into());
    let mut spec = InstanceSpec::grid(
        &module_name,
        a.dim.unwrap_or(default_m),
        a.grid.unwrap_or(default_n),
        cfg.seed.unwrap_or(0),
    );
    if let Some(amp) = a.amplitude {
        spec.amplitude = amp;
    }
    let calc = GridCalculus::new(&module_of(cfg, Some(default_module))?, spec.m, spec.n);
    let module = calc.module.clone();
    if module.is_two_crossed() != (pipeline == 3) {
        return Err(Error::Precondition(format!(
            "poincare{pipeline} does not apply to module '{}'",
            module.name
        )));
    }
    let g = &calc.grid;
    progress(cfg, || {
        format!(
            "poincare{pipeline} seed {} on {} (m = {}, N = {})",
            spec.seed, module.name, spec.m, spec.n
        )
    });
    let (ratio, defect, report) = if pipeline == 2 {
        let zero = TwoConnection {
            a: GridForm::zero(g, 1, module.g.dim),
            b: GridForm::zero(g, 2, module.h.dim),
        };
        let (s, gauge) = scramble2(&calc, &zero, &spec);
        let defect = admit(inverse_round_trip2(&calc, &zero, &s, &gauge), &calc)?;
        let out = canonical_gauge2(&calc, &s, &cfg.tolerances.fix)?;
        (
            out.b.l2() / s.b.l2().max(f64::MIN_POSITIVE),
            defect,
            out.report,
        )
    } else {
        let zero = ThreeConnection {
            a: GridForm::zero(g, 1, module.g.dim),
            b: GridForm::zero(g, 2, module.h.dim),
            c: GridForm::zero(g, 3, module.l.dim),
        };
        let (s, _) = scramble3(&calc, &zero, &spec);
        let defect = admit(covariance_defect3(&calc, &zero, &s), &calc)?;
        let out = canonical_gauge3(&calc, &s, &cfg.tolerances.fix)?;
        (
            out.c.l2() / s.c.l2().max(f64::MIN_POSITIVE),
            defect,
            out.report,
        )
    };
    Ok(Outcome {
        passed: ratio <= tol && report.passed,
        module_hash: Some(module.hash()),
        result: json!({ "spec": spec, "ratio": ratio, "tol": tol, "admission_defect": defect, "pipeline": report }),
    })
}

fn selfdual(
    cfg: &RunConfig,
    m: usize,
    n: usize,
    sign: i32,
    emit: Option<&Path>,
) -> Result<Outcome> {
    let tol = cfg.tolerances.selfdual;
    let seed = cfg.seed.unwrap_or(1);
    progress(cfg, || format!("self-dual field at m = {m}, N = {n}"));
    let f = make_selfdual(m, n, sign, seed, tol * 1e-3)?;
    let check = check_selfdual_ym(&f.omega, sign, tol);
    let mut result = json!({
        "m": m, "n": n, "sign": sign, "seed": f.seed, "attempts": f.attempts,
        "solve": f.solve, "check": check,
    });
    if let Some(path) = emit {
        let cf = hgt_core::grid::io::to_file(&f.omega, "scalar");
        let mut buf = Vec::new();
        hgt_core::grid::io::write_binary(&mut buf, &cf)?;
        files::write_atomic(path, &buf)?;
        result["field"] = json!(path);
    }
    Ok(Outcome {
        passed: check.passed == Some(true),
        module_hash: None,
        result,
    })
}

fn survey_run(cfg: &RunConfig, sc: &SurveyConfig) -> Result<Outcome> {
    progress(cfg, || {
        format!("survey over {:?} with {} seeds", sc.sizes, sc.seeds)
    });
    let rep = estimate_survey(sc)?;
    let hash = xmod::registry_get(&sc.module).map(|m| m.hash());
    Ok(Outcome {
        passed: rep.finite && rep.stable,
        module_hash: hash,
        result: serde_json::to_value(&rep)?,
    })
}

fn export(dir: &Path) -> Result<Outcome> {
    let mut written = Vec::new();
    for (name, f) in xmod::registry() {
        let path = dir.join(format!("{name}.json"));
        files::write_atomic(&path, xmod::module_to_json(&f()).as_bytes())?;
        written.push(path);
    }
    Ok(Outcome {
        passed: true,
        module_hash: None,
        result: json!({ "written": written }),
    })
}
