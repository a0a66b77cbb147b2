//! Canonical gauges for 2- and 3-connections on the grid, flat
//! trivialization, self-dual fields and estimate surveys.

pub mod flat;
pub mod selfdual;
pub mod survey;
mod three;
mod two;
pub mod uniqueness;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::hodge::HodgeDiagnostics;

pub use flat::{flat_trivialize, holonomy_defect, FlatReport};
pub use three::{canonical_gauge3, Canonical3};
pub use two::{canonical_gauge2, Canonical2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixConfig {
    /// Algebraic identities (kernel membership), relative.
    pub tol_alg: f64,
    /// Solver-level conditions (co-closedness), relative.
    pub tol_solver: f64,
    /// Relative CG tolerance of the Hodge solves.
    pub cg_tol: f64,
    /// Input fake-curvature cap, in units of `h * (|A| + |B| + |C| + 1)`.
    pub fake_curvature_cap: f64,
    /// The flatness cap is `flat_factor * input residual + flat_slack * h * (|A| + 1)`.
    pub flat_factor: f64,
    pub flat_slack: f64,
    /// Gaffney constants are measured with this many random co-exact probes.
    pub gaffney_probes: usize,
}

impl Default for FixConfig {
    fn default() -> Self {
        Self {
            tol_alg: 1e-9,
            tol_solver: 1e-8,
            cg_tol: 1e-10,
            fake_curvature_cap: 1.0,
            flat_factor: 10.0,
            flat_slack: 1.0,
            gaffney_probes: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepReport {
    pub name: String,
    /// `|F_A - t(B)|` after the step.
    pub fake_curvature: f64,
    /// `|dB + alpha(A) ^ B - tau(C)|` after the step (3-gauge pipeline).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fake_curvature2: Option<f64>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bound {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FinalChecks {
    /// Stored `A'`, zero by construction.
    pub a_norm: f64,
    /// `|B'|` for the 3-gauge pipeline, zero by construction.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b_norm: Option<f64>,
    /// `|t(B')| / |B'|` or `|tau(C')| / |C'|`.
    pub kernel_relative: f64,
    /// `|codiff w'| / (|w_hodge| / h)` with `w_hodge` the form fed to the last Hodge step.
    pub codiff_relative: f64,
    /// Weighted L2 norm of the values on normal boundary cells, relative to `|w'|`.
    pub normal_trace_relative: f64,
    pub top_norm: f64,
    pub top_w12: f64,
    /// `|Z_{0,B'}|` or `|Y_{0,0,C'}|`.
    pub curvature_l2: f64,
    /// `top_w12 / curvature_l2`, absent when the curvature vanishes.
    pub w12_over_curvature: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GaffneyStep {
    /// `|dB5| + |codiff B5| + |(B5)_N|`.
    pub r: f64,
    pub constant: f64,
    pub bound: f64,
    /// `|B5|` before it is set to zero.
    pub dropped_norm: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GaugeFixReport {
    pub pipeline: String,
    pub module: String,
    pub module_hash: String,
    pub m: usize,
    pub n: usize,
    pub config: FixConfig,
    pub input: BTreeMap<String, f64>,
    pub steps: Vec<StepReport>,
    pub flat: FlatReport,
    pub hodge: Vec<HodgeDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gaffney: Option<GaffneyStep>,
    pub final_checks: FinalChecks,
    /// Discrete Sobolev norms of the gauge pieces and of the input.
    pub estimates: BTreeMap<String, f64>,
    pub bounds: Vec<Bound>,
    pub passed: bool,
}

impl GaugeFixReport {
    pub(crate) fn bound(&mut self, name: &str, value: f64, limit: f64) {
        let pass = value.is_finite() && value <= limit;
        self.bounds.push(Bound {
            name: name.into(),
            value,
            limit,
            pass,
        });
        self.passed = self.bounds.iter().all(|b| b.pass);
    }
}
