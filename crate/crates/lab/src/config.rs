//! Experiment configuration: TOML tables with `key = value` entries, environment overrides
//! and validation before any compute.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use laelab_core::dynamics::{Integrator, SolverConfig};
use laelab_core::grid::MIN_NODES;
use laelab_core::{DomainSpec, MetricPreset, WallCondition};
use serde::{Deserialize, Serialize};

/// Prefix of environment overrides: `LAELAB_DOMAIN__NX=32` sets `domain.nx`.
pub const ENV_PREFIX: &str = "LAELAB_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_suite")]
    pub suite: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Square grid sizes of convergence studies; each suite has its own default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_ladder: Option<Vec<usize>>,
    /// Names of the tests to run; all tests of the selected suites when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<String>>,
    /// Run the tests of a suite concurrently; outputs are identical either way.
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub material: MaterialSection,
    #[serde(default)]
    pub poisson: PoissonSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

fn default_suite() -> String {
    "all".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("laelab-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    /// `torus` or `channel`.
    pub kind: String,
    #[serde(rename = "Lx", alias = "lx")]
    pub lx: f64,
    #[serde(rename = "Ly", alias = "ly")]
    pub ly: f64,
    /// Base resolution of the fixed-grid tests.
    pub nx: usize,
    pub ny: usize,
    /// `flat`, `wave_x:a`, `bump:a` or `sinusoidal:a,kx,ky`.
    pub phi: String,
    /// Conditions of the bottom and top walls, `dirichlet` or `neumann`.
    pub wall_roles: [String; 2],
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            kind: "torus".into(),
            lx: 1.0,
            ly: 1.0,
            nx: 16,
            ny: 16,
            phi: "bump:0.2".into(),
            wall_roles: ["dirichlet".into(), "neumann".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub alpha: f64,
    /// Only `direct` (sparse LU) is available.
    pub method: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { alpha: 0.3, method: "direct".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Step at the coarsest ladder level; refined levels scale it with `h`.
    pub dt: f64,
    pub t_end: f64,
    pub integrator: String,
    pub cfl_factor: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { dt: 0.01, t_end: 0.4, integrator: "rk4".into(), cfl_factor: laelab_core::dynamics::DEFAULT_CFL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub every_n_steps: u64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection { every_n_steps: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    /// `taylor_green_like`, `eigenfield` or `random_bandlimited:<seed>`.
    pub preset: String,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection { preset: "taylor_green_like".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSection {
    /// Only `bicubic` is available.
    pub interp: String,
}

impl Default for MaterialSection {
    fn default() -> Self {
        MaterialSection { interp: "bicubic".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoissonSection {
    /// Observable catalog; the first two entries are the pair of the flow check.
    pub observables: Vec<ObservableSpec>,
    pub flow_check: FlowCheckSection,
}

impl Default for PoissonSection {
    fn default() -> Self {
        PoissonSection {
            observables: vec![
                ObservableSpec::Linear { field: LinearField::CrossWave, phase: [0.0, 0.0], k: 1.0 },
                ObservableSpec::Linear { field: LinearField::CrossWave, phase: [-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2], k: 1.0 },
                ObservableSpec::Quadratic { amplitude: 0.4 },
                ObservableSpec::Hamiltonian,
            ],
            flow_check: FlowCheckSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowCheckSection {
    /// Cap on the dimension of the dense constrained basis.
    pub max_dim: usize,
}

impl Default for FlowCheckSection {
    fn default() -> Self {
        FlowCheckSection { max_dim: 1200 }
    }
}

/// Test field of a linear observable `⟨w, u⟩₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearField {
    /// `w = (cos(2πk y/Ly + p₀), sin(2πk x/Lx + p₁))`.
    CrossWave,
    /// `w = (cos(2π(x/Lx + p₀)) sin(πk y/Ly), sin(2πk(x/Lx - y/Ly) + p₁))`.
    Oblique,
}

/// Catalog entry of an observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    Linear {
        field: LinearField,
        #[serde(default)]
        phase: [f64; 2],
        #[serde(default = "one")]
        k: f64,
    },
    /// `½⟨χu, u⟩₀` with `χ = ½ + a cos(2πx/Lx) sin(πy/Ly)`.
    Quadratic { amplitude: f64 },
    Hamiltonian,
    Product { factors: Vec<ObservableSpec> },
}

fn one() -> f64 {
    1.0
}

/// Parsed initial-condition preset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialPreset {
    TaylorGreen,
    Eigenfield,
    Random { seed: u64 },
}

impl ExperimentConfig {
    /// Reads a config file and applies `LAELAB_*` overrides from `env`.
    pub fn load(path: &Path, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, env)
    }

    /// Parses config text, applies overrides and validates.
    pub fn parse(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).context("config is not valid key = value text")?;
        for (k, v) in env {
            if let Some(key) = k.strip_prefix(ENV_PREFIX) {
                apply_override(&mut table, key, &v).with_context(|| format!("override {k}"))?;
            }
        }
        let cfg: ExperimentConfig = toml::Value::Table(table).try_into().context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rejects values the runner cannot honor.
    pub fn validate(&self) -> Result<()> {
        let suites = crate::suites::Suite::parse(&self.suite)?;
        if let Some(only) = &self.only {
            let known: Vec<&str> = suites.iter().flat_map(|&s| s.test_names()).collect();
            if let Some(bad) = only.iter().find(|n| !known.contains(&n.as_str())) {
                bail!("only: no test named {bad:?} in suite {:?}", self.suite);
            }
        }
        self.domain_spec()?;
        self.metric_preset()?;
        let d = &self.domain;
        if d.nx < MIN_NODES || d.ny < MIN_NODES {
            bail!("domain.nx and domain.ny must be at least {MIN_NODES}");
        }
        if let Some(l) = &self.grid_ladder {
            if l.is_empty() || l.iter().any(|&n| n < MIN_NODES) {
                bail!("grid_ladder entries must be at least {MIN_NODES}");
            }
        }
        if !(self.solver.alpha.is_finite() && self.solver.alpha >= 0.0) {
            bail!("solver.alpha must be finite and non-negative");
        }
        if self.solver.method != "direct" {
            bail!("solver.method = {:?}: only \"direct\" is available", self.solver.method);
        }
        self.integrator()?;
        self.solver_config().validate().map_err(|e| anyhow!("run: {e}"))?;
        if !(self.run.t_end > 0.0 && self.run.dt > 0.0) {
            bail!("run.dt and run.t_end must be positive");
        }
        self.initial_preset()?;
        if self.material.interp != "bicubic" {
            bail!("material.interp = {:?}: only \"bicubic\" is available", self.material.interp);
        }
        if self.poisson.observables.len() < 3 {
            bail!("poisson.observables needs at least three entries");
        }
        for o in &self.poisson.observables {
            if observable_depth(o)? > laelab_core::poisson::MAX_PRODUCT_DEPTH {
                bail!("product nesting exceeds depth {}", laelab_core::poisson::MAX_PRODUCT_DEPTH);
            }
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        let d = &self.domain;
        if !(d.lx > 0.0 && d.ly > 0.0 && d.lx.is_finite() && d.ly.is_finite()) {
            bail!("domain.Lx and domain.Ly must be positive");
        }
        match d.kind.as_str() {
            "torus" => Ok(DomainSpec::torus(d.lx, d.ly)),
            "channel" => Ok(DomainSpec::channel(d.lx, d.ly, wall(&d.wall_roles[0])?, wall(&d.wall_roles[1])?)),
            k => bail!("domain.kind = {k:?}: expected \"torus\" or \"channel\""),
        }
    }

    pub fn metric_preset(&self) -> Result<MetricPreset> {
        parse_phi(&self.domain.phi)
    }

    pub fn integrator(&self) -> Result<Integrator> {
        Integrator::parse(&self.run.integrator).ok_or_else(|| anyhow!("run.integrator = {:?}: expected rk4 or midpoint", self.run.integrator))
    }

    /// Time stepping at the coarsest level. An unknown integrator name, rejected by
    /// [`Self::validate`], maps to RK4.
    pub fn solver_config(&self) -> SolverConfig {
        let mut c = SolverConfig::new(self.run.dt, self.run.t_end);
        c.cfl_factor = self.run.cfl_factor;
        c.integrator = Integrator::parse(&self.run.integrator).unwrap_or(Integrator::Rk4);
        c
    }

    pub fn initial_preset(&self) -> Result<InitialPreset> {
        let p = self.initial.preset.as_str();
        match p {
            "taylor_green_like" => Ok(InitialPreset::TaylorGreen),
            "eigenfield" => Ok(InitialPreset::Eigenfield),
            _ => match p.strip_prefix("random_bandlimited:") {
                Some(s) => Ok(InitialPreset::Random { seed: s.trim().parse().with_context(|| format!("initial.preset = {p:?}"))? }),
                None => bail!("initial.preset = {p:?}"),
            },
        }
    }
}

fn wall(s: &str) -> Result<WallCondition> {
    match s {
        "dirichlet" => Ok(WallCondition::Dirichlet),
        "neumann" => Ok(WallCondition::Neumann),
        _ => bail!("wall role {s:?}: expected \"dirichlet\" or \"neumann\""),
    }
}

/// Parses a named conformal factor.
pub fn parse_phi(s: &str) -> Result<MetricPreset> {
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let nums = || -> Result<Vec<f64>> {
        args.split(',').map(|a| a.trim().parse::<f64>().with_context(|| format!("domain.phi = {s:?}"))).collect()
    };
    let preset = match name {
        "flat" if args.is_empty() => MetricPreset::Flat,
        "wave_x" | "bump" => {
            let v = nums()?;
            if v.len() != 1 {
                bail!("domain.phi = {s:?}: expected one amplitude");
            }
            if name == "wave_x" {
                MetricPreset::WaveX { amplitude: v[0] }
            } else {
                MetricPreset::Bump { amplitude: v[0] }
            }
        }
        "sinusoidal" => {
            let v = nums()?;
            let integral = |x: f64| x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64;
            if v.len() != 3 || !integral(v[1]) || !integral(v[2]) {
                bail!("domain.phi = {s:?}: expected amplitude and two non-negative integer wavenumbers");
            }
            MetricPreset::Sinusoidal { amplitude: v[0], kx: v[1] as u32, ky: v[2] as u32 }
        }
        _ => bail!("domain.phi = {s:?}"),
    };
    Ok(preset)
}

/// Product nesting depth, checking that every product has two factors.
fn observable_depth(o: &ObservableSpec) -> Result<usize> {
    match o {
        ObservableSpec::Product { factors } => {
            if factors.len() != 2 {
                bail!("product observables take exactly two factors");
            }
            Ok(1 + observable_depth(&factors[0])?.max(observable_depth(&factors[1])?))
        }
        _ => Ok(0),
    }
}

/// Sets `section__key` (matched case-insensitively against existing keys) to `raw`, read as a
/// TOML value when it parses as one and as a string otherwise.
fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let path: Vec<String> = key.split("__").map(|p| p.to_ascii_lowercase()).collect();
    if path.iter().any(|p| p.is_empty()) {
        bail!("malformed key");
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cur = table;
    for (i, part) in path.iter().enumerate() {
        let existing = cur.keys().find(|k| k.to_ascii_lowercase() == *part).cloned();
        let name = existing.unwrap_or_else(|| part.clone());
        if i + 1 == path.len() {
            cur.insert(name, value);
            return Ok(());
        }
        let entry = cur.entry(name).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| anyhow!("{part} is not a section"))?;
    }
    unreachable!("path is non-empty")
}
