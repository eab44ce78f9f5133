//! Per-test records, the run manifest and CSV emission.

use std::io::Write;
use std::path::Path;

use anyhow::{Context as _, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Residuals at or below this level count as converged to round-off in order checks.
pub const ROUND_OFF: f64 = 1e-12;

/// One level of a refinement study. `h` is the refined parameter (grid spacing, time step or
/// `α`); `value` is the raw measurement at that level and `residual` the checked error, which
/// coincide for relative residuals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub h: f64,
    pub value: f64,
    pub residual: f64,
}

/// Acceptance rule of a test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Tolerance {
    /// Fitted order within `target ± band`, or every residual at round-off.
    Order { target: f64, band: f64 },
    /// Fitted order at least `min`.
    MinOrder { min: f64 },
    /// `value ≤ max`.
    AtMost { max: f64 },
    /// `value == 0` exactly.
    Zero,
    /// Residuals strictly decrease along the series.
    Decreasing,
    /// `value ≤ max` and residuals strictly decrease along the series.
    AtMostDecreasing { max: f64 },
}

/// What a test measured.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Measurement {
    /// Checked quantity for the non-order rules.
    pub value: f64,
    pub series: Vec<Level>,
    pub order: Option<f64>,
}

impl Measurement {
    /// A single number with no series.
    pub fn scalar(value: f64) -> Self {
        Measurement { value, series: Vec::new(), order: None }
    }

    /// A refinement series with its least-squares order; `value` is the finest residual.
    pub fn convergence(series: Vec<Level>) -> Self {
        let hs: Vec<f64> = series.iter().map(|l| l.h).collect();
        let rs: Vec<f64> = series.iter().map(|l| l.residual).collect();
        let order = if series.len() >= 2 { Some(fitted_order(&hs, &rs)) } else { None };
        Measurement { value: rs.last().copied().unwrap_or(f64::NAN), series, order }
    }

    /// A series without an order fit; `value` is the largest residual.
    pub fn series(series: Vec<Level>) -> Self {
        let value = series.iter().map(|l| l.residual).fold(0.0, f64::max);
        Measurement { value, series, order: None }
    }
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

impl Tolerance {
    pub fn check(&self, m: &Measurement) -> bool {
        let decreasing = m.series.len() >= 2 && m.series.windows(2).all(|w| w[1].residual < w[0].residual);
        match *self {
            Tolerance::Order { target, band } => {
                let round_off = !m.series.is_empty() && m.series.iter().all(|l| l.residual.abs() <= ROUND_OFF);
                round_off || m.order.is_some_and(|p| (p - target).abs() <= band)
            }
            Tolerance::MinOrder { min } => m.order.is_some_and(|p| p >= min),
            Tolerance::AtMost { max } => m.value <= max,
            Tolerance::Zero => m.value == 0.0,
            Tolerance::Decreasing => decreasing,
            Tolerance::AtMostDecreasing { max } => m.value <= max && decreasing,
        }
    }
}

/// Outcome of one suite test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub suite: String,
    pub name: String,
    /// The property the test exercises.
    pub tag: String,
    pub value: Option<f64>,
    pub tolerance: Tolerance,
    pub pass: bool,
    pub order: Option<f64>,
    pub series: Vec<Level>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl TestRecord {
    pub fn from_measurement(suite: &str, name: &str, tag: &str, tolerance: Tolerance, m: Measurement) -> Self {
        // A NaN anywhere fails the test and serializes as null.
        let finite = m.value.is_finite() || m.series.iter().all(|l| l.residual.is_finite()) && m.order.is_some_and(f64::is_finite);
        TestRecord {
            suite: suite.into(),
            name: name.into(),
            tag: tag.into(),
            value: Some(m.value).filter(|v| v.is_finite()),
            tolerance,
            pass: finite && tolerance.check(&m),
            order: m.order.filter(|v| v.is_finite()),
            series: m.series,
            error: None,
        }
    }

    pub fn failed(suite: &str, name: &str, tag: &str, tolerance: Tolerance, error: String) -> Self {
        TestRecord {
            suite: suite.into(),
            name: name.into(),
            tag: tag.into(),
            value: None,
            tolerance,
            pass: false,
            order: None,
            series: Vec::new(),
            error: Some(error),
        }
    }
}

/// Deterministic record of a run; wall-clock data lives in a separate timing file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// Grid ladder of each suite that ran.
    pub ladders: Vec<(String, Vec<usize>)>,
    pub tests: Vec<TestRecord>,
}

impl RunManifest {
    pub fn all_passed(&self) -> bool {
        self.tests.iter().all(|t| t.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes `manifest.json` and `results.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("manifest.json"), self.to_json()?)?;
        let f = std::fs::File::create(dir.join("results.csv"))?;
        self.write_csv(f)
    }

    /// One row per series level, or one row per test without a series; columns
    /// `test, h, value, residual, order`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["test", "h", "value", "residual", "order"])?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for t in &self.tests {
            let name = format!("{}/{}", t.suite, t.name);
            if t.series.is_empty() {
                out.write_record([name.as_str(), "", &fmt(t.value), "", &fmt(t.order)])?;
            }
            for l in &t.series {
                out.write_record([name.as_str(), &fmt(Some(l.h)), &fmt(Some(l.value)), &fmt(Some(l.residual)), &fmt(t.order)])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Wall-clock seconds per test.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: u64,
    pub tests: Vec<(String, f64)>,
    pub total_seconds: f64,
}
