use std::path::PathBuf;

use hgt_core::canonical::FixConfig;
use hgt_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Environment variable holding a JSON object of tolerance overrides.
pub const TOL_ENV: &str = "HGT_TOLERANCES";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Module axiom residuals.
    pub module: f64,
    /// Jet identity residuals.
    pub identity: f64,
    /// `|B'| / |B|` after fixing a scrambled flat 2-connection.
    pub poincare2: f64,
    /// `|C'| / |C|` for the 3-gauge analogue.
    pub poincare3: f64,
    /// Self-dual constraint residuals; the Laplacian may reach ten times this.
    pub selfdual: f64,
    pub fix: FixConfig,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            module: 1e-10,
            identity: hgt_core::identities::IDENTITY_TOL,
            poincare2: 0.02,
            poincare3: 0.05,
            selfdual: 1e-7,
            fix: FixConfig::default(),
        }
    }
}

impl Tolerances {
    pub fn check(&self) -> Result<()> {
        let f = &self.fix;
        let named = [
            ("module", self.module),
            ("identity", self.identity),
            ("poincare2", self.poincare2),
            ("poincare3", self.poincare3),
            ("selfdual", self.selfdual),
            ("fix.tol_alg", f.tol_alg),
            ("fix.tol_solver", f.tol_solver),
            ("fix.cg_tol", f.cg_tol),
            ("fix.fake_curvature_cap", f.fake_curvature_cap),
            ("fix.flat_factor", f.flat_factor),
            ("fix.flat_slack", f.flat_slack),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!(
                    "tolerance {name} must be positive, got {v}"
                )));
            }
        }
        if f.gaffney_probes == 0 {
            return Err(Error::Precondition(
                "fix.gaffney_probes must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Everything that determines a run. Echoed into every report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub subcommand: String,
    /// Registry name or path to a module description.
    pub module: Option<String>,
    /// Instance manifest written by `gen`.
    pub instance: Option<PathBuf>,
    pub spec: Option<hgt_core::generators::InstanceSpec>,
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub verbosity: u8,
}

/// Recursively overlays `patch` on `base`.
fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

fn parse<T: serde::de::DeserializeOwned>(v: Value, origin: &str) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| Error::Parse {
        path: format!("{origin}: {}", e.path()),
        message: e.inner().to_string(),
    })
}

pub fn parse_json_text(text: &str, origin: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })
}

/// Resolved configuration plus the raw sources it came from.
pub struct Loaded {
    pub config: RunConfig,
    pub file: Option<Value>,
    pub env: Option<String>,
}

/// Defaults, then the environment overrides, then the config file, then
/// the command-line values in `flags`.
pub fn load(path: Option<&PathBuf>, env: Option<String>, flags: Value) -> Result<Loaded> {
    let mut merged = serde_json::to_value(RunConfig::default())?;
    if let Some(text) = &env {
        let patch = parse_json_text(text, TOL_ENV)?;
        let _: Tolerances = parse(patch.clone(), TOL_ENV)?;
        merge(&mut merged, &serde_json::json!({ "tolerances": patch }));
    }
    let file = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Data(format!("cannot read config {}: {e}", p.display())))?;
            let v = parse_json_text(&text, &p.display().to_string())?;
            let _: RunConfig = parse(v.clone(), &p.display().to_string())?;
            merge(&mut merged, &v);
            Some(v)
        }
        None => None,
    };
    merge(&mut merged, &flags);
    let config: RunConfig = parse(merged, "run config")?;
    config.tolerances.check()?;
    Ok(Loaded { config, file, env })
}
