use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{canonical_gauge2, canonical_gauge3, FixConfig, GaugeFixReport};
use crate::error::{Error, Result};
use crate::generators::{
    admit, covariance_defect3, inverse_round_trip2, random_canonical2, random_canonical3,
    scramble2, scramble3, InstanceSpec,
};

/// A finer grid may raise the largest ratio by at most this factor.
pub const STABILITY_FACTOR: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurveyConfig {
    pub module: String,
    /// 2 or 3.
    pub pipeline: u8,
    pub m: usize,
    pub sizes: Vec<usize>,
    pub seeds: u64,
    pub amplitudes: Vec<f64>,
    pub fix: FixConfig,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            module: "product".into(),
            pipeline: 2,
            m: 3,
            sizes: vec![8, 16],
            seeds: 50,
            amplitudes: vec![0.3],
            fix: FixConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub n: usize,
    pub seed: u64,
    pub amplitude: f64,
    /// Gauge-side W^{2,2} norms: `dg`, `chi` and (3-gauge) `lambda`.
    pub lhs: BTreeMap<String, f64>,
    /// Connection-side bounds in the matching estimate.
    pub rhs: BTreeMap<String, f64>,
    /// `lhs / rhs`, absent when both sides vanish.
    pub ratio: BTreeMap<String, f64>,
    /// `|B'|_{W^{1,2}} / |Z|` or `|C'|_{W^{1,2}} / |Y|`.
    pub gaffney: Option<f64>,
    pub pipeline_passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub max_ratio: BTreeMap<String, f64>,
    pub max_gaffney: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub config: SurveyConfig,
    pub rows: Vec<SurveyRow>,
    pub summary: Vec<SizeSummary>,
    pub finite: bool,
    /// Each size's maxima stay within `STABILITY_FACTOR` of the previous size's.
    pub stable: bool,
}

/// Both sides of the gauge estimates from a pipeline report:
/// `|dg| <= c |A|`, `|chi| <= c (|A| + |A|^3 + |B| + |B|^{3/2})` and
/// `|lambda| <= c (... + |C| + |C|^{4/3})`, all in W^{2,2}.
pub fn estimate_sides(report: &GaugeFixReport) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let e = |k: &str| report.estimates.get(k).copied().unwrap_or(0.0);
    let (a, b, c) = (e("a_w22"), e("b_w22"), e("c_w22"));
    let chi_rhs = a + a.powi(3) + b + b.powf(1.5);
    let mut lhs = BTreeMap::new();
    let mut rhs = BTreeMap::new();
    lhs.insert("dg".to_string(), e("dg_w22"));
    rhs.insert("dg".to_string(), a);
    lhs.insert("chi".to_string(), e("chi_w22"));
    rhs.insert("chi".to_string(), chi_rhs);
    if report.estimates.contains_key("lambda_w22") {
        lhs.insert("lambda".to_string(), e("lambda_w22"));
        rhs.insert("lambda".to_string(), chi_rhs + c + c.powf(4.0 / 3.0));
    }
    (lhs, rhs)
}

fn row(cfg: &SurveyConfig, n: usize, seed: u64, amplitude: f64) -> Result<SurveyRow> {
    let mut spec = InstanceSpec::grid(&cfg.module, cfg.m, n, seed);
    spec.amplitude = amplitude;
    let calc = spec.calculus()?;
    let report = match cfg.pipeline {
        2 => {
            let c0 = random_canonical2(&calc, &spec)?;
            let (s, g) = scramble2(&calc, &c0, &spec);
            admit(inverse_round_trip2(&calc, &c0, &s, &g), &calc)?;
            canonical_gauge2(&calc, &s, &cfg.fix)?.report
        }
        3 => {
            let c0 = random_canonical3(&calc, &spec)?;
            let (s, _) = scramble3(&calc, &c0, &spec);
            admit(covariance_defect3(&calc, &c0, &s), &calc)?;
            canonical_gauge3(&calc, &s, &cfg.fix)?.report
        }
        p => {
            return Err(Error::Precondition(format!(
                "pipeline must be 2 or 3, got {p}"
            )))
        }
    };
    Ok(SurveyRow::from_report(n, seed, amplitude, &report))
}

impl SurveyRow {
    pub fn from_report(n: usize, seed: u64, amplitude: f64, report: &GaugeFixReport) -> Self {
        let (lhs, rhs) = estimate_sides(report);
        let ratio = lhs
            .iter()
            .filter(|(k, _)| rhs[*k] > 0.0)
            .map(|(k, v)| (k.clone(), v / rhs[k]))
            .collect();
        SurveyRow {
            n,
            seed,
            amplitude,
            lhs,
            rhs,
            ratio,
            gaffney: report.final_checks.w12_over_curvature,
            pipeline_passed: report.passed,
        }
    }
}

pub fn summarize(sizes: &[usize], rows: &[SurveyRow]) -> (Vec<SizeSummary>, bool, bool) {
    let mut summary = Vec::new();
    for &n in sizes {
        let mut max_ratio: BTreeMap<String, f64> = BTreeMap::new();
        let mut max_gaffney: Option<f64> = None;
        for r in rows.iter().filter(|r| r.n == n) {
            for (k, v) in &r.ratio {
                let e = max_ratio.entry(k.clone()).or_insert(*v);
                *e = e.max(*v);
            }
            if let Some(g) = r.gaffney {
                max_gaffney = Some(max_gaffney.map_or(g, |m| m.max(g)));
            }
        }
        summary.push(SizeSummary {
            n,
            max_ratio,
            max_gaffney,
        });
    }
    let finite = rows.iter().all(|r| {
        r.ratio
            .values()
            .chain(r.gaffney.iter())
            .all(|v| v.is_finite())
    });
    let stable = summary.windows(2).all(|w| {
        w[1].max_ratio.iter().all(|(k, v)| {
            w[0].max_ratio
                .get(k)
                .is_none_or(|p| *v <= STABILITY_FACTOR * p)
        })
    });
    (summary, finite, stable)
}

/// Runs the chosen pipeline on scrambled canonical instances for every
/// size, seed and amplitude, and tabulates the empirical estimate constants.
pub fn estimate_survey(cfg: &SurveyConfig) -> Result<SurveyReport> {
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        for seed in 0..cfg.seeds {
            for &amp in &cfg.amplitudes {
                rows.push(row(cfg, n, seed, amp)?);
            }
        }
    }
    let (summary, finite, stable) = summarize(&cfg.sizes, &rows);
    Ok(SurveyReport {
        config: cfg.clone(),
        rows,
        summary,
        finite,
        stable,
    })
}
