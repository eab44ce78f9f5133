use laelab::config::{parse_phi, InitialPreset, LinearField, ObservableSpec};
use laelab::ExperimentConfig;
use laelab_core::{DomainKind, MetricPreset, WallCondition};

fn parse(text: &str) -> anyhow::Result<ExperimentConfig> {
    ExperimentConfig::parse(text, std::iter::empty())
}

fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn empty_config_takes_defaults() {
    let c = parse("").unwrap();
    assert_eq!(c, ExperimentConfig::default());
    assert_eq!(c.suite, "all");
    assert_eq!(c.domain_spec().unwrap().kind, DomainKind::Torus);
    assert_eq!(c.poisson.observables.len(), 4);
}

#[test]
fn sections_and_keys_are_read() {
    let c = parse(
        r#"
        suite = "poisson"
        seed = 7
        grid_ladder = [16, 24]
        [domain]
        kind = "channel"
        Lx = 2.0
        ly = 1.5
        nx = 20
        phi = "sinusoidal:0.1,1,2"
        wall_roles = ["neumann", "dirichlet"]
        [initial]
        preset = "random_bandlimited:42"
        [[poisson.observables]]
        kind = "linear"
        field = "oblique"
        phase = [0.1, 0.2]
        [[poisson.observables]]
        kind = "product"
        factors = [{ kind = "hamiltonian" }, { kind = "quadratic", amplitude = 0.3 }]
        [[poisson.observables]]
        kind = "hamiltonian"
        "#,
    )
    .unwrap();
    assert_eq!(c.seed, 7);
    assert_eq!(c.grid_ladder, Some(vec![16, 24]));
    let spec = c.domain_spec().unwrap();
    assert_eq!((spec.lx, spec.ly), (2.0, 1.5));
    assert_eq!(spec.kind, DomainKind::Channel { bottom: WallCondition::Neumann, top: WallCondition::Dirichlet });
    assert_eq!(c.metric_preset().unwrap(), MetricPreset::Sinusoidal { amplitude: 0.1, kx: 1, ky: 2 });
    assert_eq!(c.initial_preset().unwrap(), InitialPreset::Random { seed: 42 });
    assert_eq!(c.poisson.observables[0], ObservableSpec::Linear { field: LinearField::Oblique, phase: [0.1, 0.2], k: 1.0 });
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(parse("colour = 1").is_err());
    assert!(parse("[domain]\nnz = 3").is_err());
    assert!(parse("[solver]\nlinear_tol = 1e-9").is_err());
    assert!(parse("[plot]\nx = 1").is_err());
}

#[test]
fn invalid_values_are_rejected() {
    for bad in [
        "suite = \"everything\"",
        "[domain]\nkind = \"sphere\"",
        "[domain]\nLx = -1.0",
        "[domain]\nnx = 2",
        "[domain]\nkind = \"channel\"\nwall_roles = [\"dirichlet\", \"slip\"]",
        "[domain]\nphi = \"bump\"",
        "[solver]\nalpha = -0.1",
        "[solver]\nmethod = \"cg\"",
        "[run]\nintegrator = \"euler\"",
        "[run]\ndt = 0.0",
        "[run]\ncfl_factor = 0.0",
        "[initial]\npreset = \"random_bandlimited:x\"",
        "[material]\ninterp = \"linear\"",
        "grid_ladder = []",
        "grid_ladder = [6, 12]",
        "only = [\"no_such_test\"]",
        "[[poisson.observables]]\nkind = \"hamiltonian\"",
    ] {
        assert!(parse(bad).is_err(), "{bad}");
    }
}

#[test]
fn environment_overrides_apply_before_validation() {
    let c = ExperimentConfig::parse(
        "[domain]\nnx = 16",
        env(&[("LAELAB_DOMAIN__NX", "32"), ("LAELAB_DOMAIN__LX", "2.5"), ("LAELAB_SUITE", "elliptic"), ("OTHER_VAR", "1"), ("LAELAB_RUN__DT", "0.002")]),
    )
    .unwrap();
    assert_eq!(c.domain.nx, 32);
    assert_eq!(c.domain.lx, 2.5);
    assert_eq!(c.suite, "elliptic");
    assert_eq!(c.run.dt, 0.002);
    assert!(ExperimentConfig::parse("", env(&[("LAELAB_DOMAIN__BOGUS", "1")])).is_err());
    assert!(ExperimentConfig::parse("", env(&[("LAELAB_SOLVER__ALPHA", "\"big\"")])).is_err());
}

#[test]
fn phi_presets() {
    assert_eq!(parse_phi("flat").unwrap(), MetricPreset::Flat);
    assert_eq!(parse_phi("wave_x:0.25").unwrap(), MetricPreset::WaveX { amplitude: 0.25 });
    assert_eq!(parse_phi("bump:0.2").unwrap(), MetricPreset::Bump { amplitude: 0.2 });
    for bad in ["flat:1", "sinusoidal:0.1,1.5,2", "sinusoidal:0.1,1", "bump:a", "torus"] {
        assert!(parse_phi(bad).is_err(), "{bad}");
    }
}

#[test]
fn config_round_trips_through_toml() {
    let c = parse("seed = 3\n[domain]\nkind = \"channel\"").unwrap();
    let text = toml::to_string(&c).unwrap();
    assert_eq!(parse(&text).unwrap(), c);
}
