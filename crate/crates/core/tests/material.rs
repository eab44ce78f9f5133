use std::f64::consts::PI;
use std::sync::Arc;

use laelab_core::dynamics::{self, LaeModel};
use laelab_core::elliptic::BcRegime;
use laelab_core::material::{self, FlowMap, Interpolator, MaterialState};
use laelab_core::testfields;
use laelab_core::{ConformalMetric, DomainSpec, Grid, MetricPreset, VectorField, WallCondition};

fn model(spec: DomainSpec, n: usize, preset: MetricPreset, alpha: f64) -> LaeModel {
    let g = Grid::new(spec, n, n).unwrap();
    LaeModel::for_domain(Arc::new(ConformalMetric::from_preset(&g, preset).unwrap()), alpha).unwrap()
}

fn torus() -> DomainSpec {
    DomainSpec::torus(1.0, 1.0)
}

fn mixed() -> DomainSpec {
    DomainSpec::channel(1.0, 1.0, WallCondition::Dirichlet, WallCondition::Neumann)
}

fn w_field(x: f64, y: f64) -> [f64; 2] {
    [(2.0 * PI * x).sin() * (2.0 * PI * y).cos(), 0.5 * (2.0 * PI * (x + y)).cos()]
}

#[test]
fn identity_map_returns_material_velocity() {
    let md = model(mixed(), 16, MetricPreset::Bump { amplitude: 0.2 }, 0.3);
    let g = md.metric().grid();
    let v = md.projector().project(&testfields::random_div_free(md.metric(), 1, 2)).unwrap();
    let u = material::pi_r(&md, &MaterialState::from_spatial(g, &v)).unwrap();
    assert!(u.sub(&v).max_abs() <= 1e-14 * v.max_abs());
}

#[test]
fn translation_is_undone_to_interpolation_order() {
    let c = [0.013, -0.021];
    let mut errs = Vec::new();
    for &n in &[16usize, 32] {
        let md = model(torus(), n, MetricPreset::Flat, 0.3);
        let g = md.metric().grid();
        let d = VectorField::from_fn(g, |_, _| c);
        let v = VectorField::from_fn(g, |x, y| w_field(x + c[0], y + c[1]));
        let ms = MaterialState { eta: FlowMap { displacement: d }, v, t: 0.0, step: 0 };
        let u = material::pi_r(&md, &ms).unwrap();
        let want = VectorField::from_fn(g, w_field);
        errs.push(u.sub(&want).max_abs());
    }
    assert!(errs[1] < errs[0] / 11.0, "{errs:?}");
}

#[test]
fn composition_round_trip_converges() {
    let mut errs = Vec::new();
    for &n in &[16usize, 32] {
        let md = model(torus(), n, MetricPreset::WaveX { amplitude: 0.2 }, 0.3);
        let g = md.metric().grid();
        let d = VectorField::from_fn(g, |x, y| [0.03 * (2.0 * PI * y).sin(), 0.02 * (2.0 * PI * x).cos()]);
        let eta = FlowMap { displacement: d };
        let u = VectorField::from_fn(g, w_field);
        let v = Interpolator::new(g).sample(&u, &eta.positions(g));
        let back = material::pi_r(&md, &MaterialState { eta, v, t: 0.0, step: 0 }).unwrap();
        errs.push(back.sub(&u).max_abs());
    }
    assert!(errs[1] < errs[0] / 8.0, "{errs:?}");
}

#[test]
fn flow_map_inverse_solves_to_tolerance() {
    let md = model(mixed(), 16, MetricPreset::Flat, 0.3);
    let g = md.metric().grid();
    let d = VectorField::from_fn(g, |x, y| [0.02 * (2.0 * PI * x).sin() * (PI * y).sin(), 0.01 * (PI * y).sin() * (2.0 * PI * x).cos()]);
    let eta = FlowMap { displacement: d.clone() };
    let inv = eta.inverse_points(g).unwrap();
    let ip = Interpolator::new(g);
    for n in 0..g.len() {
        let (x, y) = g.xy(n);
        let p = inv[n];
        let r = [p[0] + ip.eval(&d.c[0], p[0], p[1]) - x, p[1] + ip.eval(&d.c[1], p[0], p[1]) - y];
        assert!(r[0].abs().max(r[1].abs()) <= 1e-12);
    }
}

#[test]
fn zero_velocity_freezes_the_map() {
    let md = model(mixed(), 12, MetricPreset::Bump { amplitude: 0.2 }, 0.3);
    let g = md.metric().grid();
    let ms = MaterialState::from_spatial(g, &VectorField::zeros(g));
    let next = material::spray_advance(&md, 0.01, &ms).unwrap();
    assert_eq!(next.eta, ms.eta);
    assert_eq!(next.v.max_abs(), 0.0);
}

#[test]
fn steady_shear_moves_along_streamlines() {
    let md = model(torus(), 16, MetricPreset::Flat, 0.3);
    let g = md.metric().grid();
    let u0 = testfields::shear_eigenfield(md.metric());
    let r = dynamics::rhs(&md, &u0).unwrap();
    assert!(r.max_abs() <= 1e-10 * u0.max_abs(), "{:e}", r.max_abs());
    let mut ms = MaterialState::from_spatial(g, &u0);
    let dt = 0.01;
    for _ in 0..10 {
        ms = material::spray_advance(&md, dt, &ms).unwrap();
    }
    let want = u0.scale(ms.t);
    assert!(ms.eta.displacement.sub(&want).max_abs() <= 1e-9);
    assert!(material::pi_r(&md, &ms).unwrap().sub(&u0).max_abs() <= 1e-9);
    assert!(material::volume_distortion(&md, &ms.eta) <= 1e-12);
}

#[test]
fn material_energy_drift_decreases_under_refinement() {
    let mut drifts = Vec::new();
    for &(n, dt) in &[(16usize, 0.01), (32, 0.005)] {
        let md = model(torus(), n, MetricPreset::Bump { amplitude: 0.2 }, 0.3);
        let g = md.metric().grid();
        let u0 = md.projector().project(&testfields::taylor_green(md.metric())).unwrap();
        let mut ms = MaterialState::from_spatial(g, &u0);
        let e0 = material::material_energy(&md, &ms).unwrap();
        while ms.t < 0.1 - 1e-12 {
            ms = material::spray_advance(&md, dt, &ms).unwrap();
        }
        drifts.push((material::material_energy(&md, &ms).unwrap() - e0).abs() / e0);
    }
    assert!(drifts[1] < drifts[0] / 2.8, "{drifts:?}");
}

#[test]
fn advancing_commutes_with_integer_shifts() {
    let md = model(torus(), 16, MetricPreset::Bump { amplitude: 0.2 }, 0.3);
    let g = md.metric().grid();
    let u0 = md.projector().project(&testfields::taylor_green(md.metric())).unwrap();
    let ms = material::spray_advance(&md, 0.01, &MaterialState::from_spatial(g, &u0)).unwrap();
    let (si, sj) = (3usize, 5usize);
    let shift = |n: usize| {
        let (i, j) = g.ij(n);
        g.node((i + si) % g.nx(), (j + sj) % g.ny())
    };
    let offset = [si as f64 * g.hx(), sj as f64 * g.hy()];
    let compose = |s: &MaterialState| MaterialState {
        eta: FlowMap {
            displacement: VectorField::from_nodes(g, |n| {
                let m = shift(n);
                [offset[0] + s.eta.displacement.c[0].data[m], offset[1] + s.eta.displacement.c[1].data[m]]
            }),
        },
        v: VectorField::from_nodes(g, |n| s.v.at(shift(n))),
        t: s.t,
        step: s.step,
    };
    let a = compose(&material::spray_advance(&md, 0.01, &ms).unwrap());
    let b = material::spray_advance(&md, 0.01, &compose(&ms)).unwrap();
    assert!(a.v.sub(&b.v).max_abs() <= 1e-10 * a.v.max_abs());
    assert!(a.eta.displacement.sub(&b.eta.displacement).max_abs() <= 1e-12);
}

/// Christoffel map of the right-invariant metric at the identity, by polarization of
/// `Γ¹(u, u) = P_e(A ∇_u u + 𝓕^α(u)) - (Du) u`.
fn christoffel(md: &LaeModel, u: &VectorField, v: &VectorField) -> VectorField {
    let g = md.metric().grid();
    let q = |w: &VectorField| {
        let mut a = laelab_core::calculus::nabla(md.metric(), w, w);
        if md.regime().has_neumann() {
            a = md.op().l_alpha(&a).unwrap();
        }
        let f = dynamics::f_alpha(md, w).unwrap();
        md.projector().project(&a.add(&f)).unwrap().sub(&material::coordinate_advection(g, w))
    };
    q(&u.add(v)).sub(&q(u)).sub(&q(v)).scale(0.5)
}

fn coordinate_derivative(g: &Grid, u: &VectorField, v: &VectorField) -> VectorField {
    let p: Vec<[Vec<f64>; 2]> = (0..2).map(|c| [g.apply_partial(&u.c[c].data, 1, 0), g.apply_partial(&u.c[c].data, 0, 1)]).collect();
    VectorField::from_nodes(g, |n| {
        let (a, b) = (v.c[0].data[n], v.c[1].data[n]);
        [a * p[0][0][n] + b * p[0][1][n], a * p[1][0][n] + b * p[1][1][n]]
    })
}

#[test]
fn connector_matches_christoffel_polarization() {
    for spec in [torus(), mixed()] {
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for &n in &[16usize, 32] {
            let md = model(spec, n, MetricPreset::Bump { amplitude: 0.2 }, 0.3);
            let g = md.metric().grid();
            let u = md.projector().project(&testfields::random_div_free(md.metric(), 2, 2)).unwrap();
            let v = md.projector().project(&testfields::random_div_free(md.metric(), 3, 2)).unwrap();
            let k = material::connector_contract(&md, &u, &v).unwrap();
            let want = coordinate_derivative(g, &u, &v).add(&christoffel(&md, &u, &v));
            errs.push(k.sub(&want).max_abs() / want.max_abs());
            hs.push(g.h());
        }
        let p = (errs[0] / errs[1]).ln() / (hs[0] / hs[1]).ln();
        assert!(p >= 1.5, "{:?}: order {p}, {errs:?}", spec.kind);
    }
}

#[test]
fn connector_vanishes_at_zero_and_forms_coincide_on_torus() {
    let md = model(torus(), 16, MetricPreset::Bump { amplitude: 0.2 }, 0.3);
    let g = md.metric().grid();
    let v = md.projector().project(&testfields::random_div_free(md.metric(), 3, 2)).unwrap();
    assert_eq!(material::connector_contract(&md, &VectorField::zeros(g), &v).unwrap().max_abs(), 0.0);
    let mixed_model = LaeModel::new(md.metric().clone(), BcRegime::Periodic, 0.3).unwrap();
    let u = md.projector().project(&testfields::random_div_free(md.metric(), 4, 2)).unwrap();
    let a = material::connector_contract(&md, &u, &v).unwrap();
    let b = material::connector_contract(&mixed_model, &u, &v).unwrap();
    assert_eq!(a, b);
}

#[test]
fn commute_check_trivial_cases() {
    let md = model(torus(), 12, MetricPreset::Flat, 0.3);
    let g = md.metric().grid();
    let u0 = md.projector().project(&testfields::taylor_green(md.metric())).unwrap();
    assert_eq!(material::commute_check(&md, &u0, 0.0, 0.01).unwrap().discrepancy, 0.0);
    assert_eq!(material::commute_check(&md, &VectorField::zeros(g), 0.05, 0.01).unwrap().discrepancy, 0.0);
}

#[test]
fn commute_discrepancy_decreases_under_joint_refinement() {
    let mut d = Vec::new();
    for &(n, dt) in &[(12usize, 0.01), (24, 0.005)] {
        let md = model(torus(), n, MetricPreset::Bump { amplitude: 0.2 }, 0.3);
        let u0 = md.projector().project(&testfields::random_div_free(md.metric(), 5, 2)).unwrap();
        let u0 = u0.scale(1.0 / u0.max_abs());
        d.push(material::commute_check(&md, &u0, 0.1, dt).unwrap().discrepancy);
    }
    assert!(d[1] < d[0] / 2.8, "{d:?}");
}
