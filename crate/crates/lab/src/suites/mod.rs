//! Test suites and the runner that turns them into a manifest.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Result};
use laelab_core::dynamics::LaeModel;
use laelab_core::{testfields, ConformalMetric, DomainSpec, Grid, MetricPreset, VectorField};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, InitialPreset};
use crate::record::{Level, Measurement, RunManifest, TestRecord, Timing, Tolerance};

pub mod dynamics;
pub mod elliptic;
pub mod identities;
pub mod material;
pub mod poisson;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Elliptic,
    Dynamics,
    Material,
    Poisson,
}

pub const ALL: [Suite; 5] = [Suite::Identities, Suite::Elliptic, Suite::Dynamics, Suite::Material, Suite::Poisson];

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Elliptic => "elliptic",
            Suite::Dynamics => "dynamics",
            Suite::Material => "material",
            Suite::Poisson => "poisson",
        }
    }

    /// A suite name or `all`.
    pub fn parse(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(ALL.to_vec());
        }
        match ALL.iter().find(|x| x.name() == s) {
            Some(x) => Ok(vec![*x]),
            None => bail!("unknown suite {s:?}: expected all, identities, elliptic, dynamics, material or poisson"),
        }
    }

    /// Names of the tests of the suite, in run order.
    pub fn test_names(self) -> Vec<&'static str> {
        let cfg = ExperimentConfig::default();
        let ctx = Ctx::new(&cfg, self).expect("defaults are valid");
        let names = self.cases(&ctx).iter().map(|c| c.name).collect();
        names
    }

    fn default_ladder(self) -> Vec<usize> {
        match self {
            Suite::Poisson => vec![16, 24, 32],
            _ => vec![16, 32, 64],
        }
    }

    fn cases<'a>(self, ctx: &'a Ctx<'a>) -> Vec<TestCase<'a>> {
        match self {
            Suite::Identities => identities::cases(ctx),
            Suite::Elliptic => elliptic::cases(ctx),
            Suite::Dynamics => dynamics::cases(ctx),
            Suite::Material => material::cases(ctx),
            Suite::Poisson => poisson::cases(ctx),
        }
    }
}

/// Shared inputs of the tests of one suite.
pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub spec: DomainSpec,
    pub preset: MetricPreset,
    pub alpha: f64,
    pub ladder: Vec<usize>,
    pub seed: u64,
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: &'a ExperimentConfig, suite: Suite) -> Result<Self> {
        Ok(Ctx {
            cfg,
            spec: cfg.domain_spec()?,
            preset: cfg.metric_preset()?,
            alpha: cfg.solver.alpha,
            ladder: cfg.grid_ladder.clone().unwrap_or_else(|| suite.default_ladder()),
            seed: cfg.seed,
        })
    }

    /// Metric on an `n × n` grid.
    pub fn metric(&self, n: usize) -> Result<Arc<ConformalMetric>> {
        self.metric_on(n, n)
    }

    pub fn metric_on(&self, nx: usize, ny: usize) -> Result<Arc<ConformalMetric>> {
        let g = Grid::new(self.spec, nx, ny)?;
        Ok(Arc::new(ConformalMetric::from_preset(&g, self.preset)?))
    }

    /// Metric on the configured base grid.
    pub fn base_metric(&self) -> Result<Arc<ConformalMetric>> {
        self.metric_on(self.cfg.domain.nx, self.cfg.domain.ny)
    }

    pub fn model(&self, m: &Arc<ConformalMetric>) -> Result<LaeModel> {
        Ok(LaeModel::for_domain(m.clone(), self.alpha)?)
    }

    /// Seed of the `k`-th random field of a test.
    pub fn seed(&self, k: u64) -> u64 {
        self.seed.wrapping_mul(1000).wrapping_add(k)
    }

    /// Configured initial velocity, projected into the constrained space and scaled to unit
    /// maximum.
    pub fn initial(&self, model: &LaeModel) -> Result<VectorField> {
        let m = model.metric();
        let u = match self.cfg.initial_preset()? {
            InitialPreset::TaylorGreen => testfields::taylor_green(m),
            InitialPreset::Eigenfield => testfields::shear_eigenfield(m),
            InitialPreset::Random { seed } => testfields::random_div_free(m, seed, 2),
        };
        let u = model.projector().project(&u)?;
        let s = u.max_abs();
        Ok(if s == 0.0 { u } else { u.scale(1.0 / s) })
    }

    /// Runs `level` at each ladder size and fits the order against `h`.
    pub fn ladder_study(&self, level: impl Fn(usize) -> Result<Level>) -> Result<Measurement> {
        let series = self.ladder.iter().map(|&n| level(n)).collect::<Result<Vec<_>>>()?;
        Ok(Measurement::convergence(series))
    }
}

type Body<'a> = Box<dyn Fn() -> Result<Measurement> + Send + Sync + 'a>;

/// A named check with its acceptance rule.
pub struct TestCase<'a> {
    pub name: &'static str,
    pub tag: &'static str,
    pub tolerance: Tolerance,
    pub body: Body<'a>,
}

impl<'a> TestCase<'a> {
    pub fn new(name: &'static str, tag: &'static str, tolerance: Tolerance, body: impl Fn() -> Result<Measurement> + Send + Sync + 'a) -> Self {
        TestCase { name, tag, tolerance, body: Box::new(body) }
    }
}

/// Second-order convergence rule.
pub const SECOND_ORDER: Tolerance = Tolerance::Order { target: 2.0, band: 0.5 };

fn run_case(suite: Suite, case: &TestCase) -> (TestRecord, f64) {
    let start = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(|| (case.body)()));
    let rec = match out {
        Ok(Ok(m)) => TestRecord::from_measurement(suite.name(), case.name, case.tag, case.tolerance, m),
        Ok(Err(e)) => TestRecord::failed(suite.name(), case.name, case.tag, case.tolerance, format!("{e:#}")),
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            TestRecord::failed(suite.name(), case.name, case.tag, case.tolerance, format!("panic: {}", msg.unwrap_or_default()))
        }
    };
    (rec, start.elapsed().as_secs_f64())
}

/// Runs the configured suites. Records come out in declaration order with or without
/// `cfg.parallel`.
pub fn run(cfg: &ExperimentConfig) -> Result<(RunManifest, Timing)> {
    cfg.validate()?;
    let started = Instant::now();
    let started_unix = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut tests = Vec::new();
    let mut ladders = Vec::new();
    let mut timing = Vec::new();
    for suite in Suite::parse(&cfg.suite)? {
        let ctx = Ctx::new(cfg, suite)?;
        let mut cases = suite.cases(&ctx);
        if let Some(only) = &cfg.only {
            cases.retain(|c| only.iter().any(|n| n == c.name));
            if cases.is_empty() {
                continue;
            }
        }
        let results: Vec<(TestRecord, f64)> = if cfg.parallel {
            cases.par_iter().map(|c| run_case(suite, c)).collect()
        } else {
            cases.iter().map(|c| run_case(suite, c)).collect()
        };
        for (rec, secs) in results {
            timing.push((format!("{}/{}", rec.suite, rec.name), secs));
            tests.push(rec);
        }
        ladders.push((suite.name().to_string(), ctx.ladder.clone()));
    }
    let manifest = RunManifest { version: format!("laelab {}", env!("CARGO_PKG_VERSION")), seed: cfg.seed, config: cfg.clone(), ladders, tests };
    Ok((manifest, Timing { started_unix, tests: timing, total_seconds: started.elapsed().as_secs_f64() }))
}
