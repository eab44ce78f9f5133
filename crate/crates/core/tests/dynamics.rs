use std::f64::consts::PI;
use std::sync::Arc;

use laelab_core::calculus::{self, eval_vector, vector_jets};
use laelab_core::dynamics::{self, Integrator, LaeModel, SolverConfig, State};
use laelab_core::elliptic::BcRegime;
use laelab_core::geometry::LocalGeom;
use laelab_core::jet::Jet;
use laelab_core::local::{self, V};
use laelab_core::testfields;
use laelab_core::{ConformalMetric, DomainSpec, DynamicsError, Grid, MetricPreset, VectorField, WallCondition};

fn metric(spec: DomainSpec, n: usize, preset: MetricPreset) -> Arc<ConformalMetric> {
    let g = Grid::new(spec, n, n).unwrap();
    Arc::new(ConformalMetric::from_preset(&g, preset).unwrap())
}

fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn mixed() -> DomainSpec {
    DomainSpec::channel(1.0, 1.0, WallCondition::Dirichlet, WallCondition::Neumann)
}

fn dirichlet() -> DomainSpec {
    DomainSpec::channel(1.0, 1.0, WallCondition::Dirichlet, WallCondition::Dirichlet)
}

/// A smooth divergence-free field projected into the discrete constrained space.
fn state_field(model: &LaeModel, seed: u64) -> VectorField {
    let u = testfields::random_div_free(model.metric(), seed, 2);
    model.projector().project(&u).unwrap()
}

#[test]
fn u_alpha_of_shear_matches_analytic_value() {
    // u = (sin 2πy, 0): Div(∇u∇u^t + ∇u∇u - ∇u^t∇u) = (0, 8π³ sin 4πy) and
    // (1 - α²𝓛) acts on (0, sin 4πy) as 1 + 32π²α².
    let alpha = 0.2;
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for &n in &[16usize, 32, 64] {
        let m = metric(DomainSpec::torus(1.0, 1.0), n, MetricPreset::Flat);
        let model = LaeModel::new(m.clone(), BcRegime::Periodic, alpha).unwrap();
        let u = VectorField::from_fn(m.grid(), |_, y| [(2.0 * PI * y).sin(), 0.0]);
        let got = dynamics::u_alpha(&model, &u).unwrap();
        let c = alpha * alpha * 8.0 * PI.powi(3) / (1.0 + 32.0 * PI * PI * alpha * alpha);
        let want = VectorField::from_fn(m.grid(), |_, y| [0.0, c * (4.0 * PI * y).sin()]);
        errs.push(got.sub(&want).max_abs() / c);
        hs.push(m.grid().h());
    }
    let p = fitted_order(&hs, &errs);
    assert!((p - 2.0).abs() <= 0.5, "order {p}, {errs:?}");
}

#[test]
fn zero_input_and_zero_alpha_give_zero() {
    let m = metric(mixed(), 16, MetricPreset::Bump { amplitude: 0.2 });
    let model = LaeModel::for_domain(m.clone(), 0.4).unwrap();
    let z = VectorField::zeros(m.grid());
    assert_eq!(dynamics::f_alpha(&model, &z).unwrap().max_abs(), 0.0);
    assert_eq!(dynamics::f_alpha_alt(&model, &z).unwrap().max_abs(), 0.0);
    assert_eq!(dynamics::rhs(&model, &z).unwrap().max_abs(), 0.0);
    let model0 = LaeModel::for_domain(m.clone(), 0.0).unwrap();
    let u = state_field(&model0, 1);
    assert_eq!(dynamics::u_alpha(&model0, &u).unwrap().max_abs(), 0.0);
    assert_eq!(dynamics::r_alpha(&model0, &u).unwrap().max_abs(), 0.0);
}

#[test]
fn r_alpha_vanishes_on_flat_metric() {
    let m = metric(DomainSpec::torus(1.0, 1.0), 16, MetricPreset::Flat);
    let model = LaeModel::new(m.clone(), BcRegime::Periodic, 0.5).unwrap();
    let u = testfields::random_vector(&m, 3, 3);
    assert_eq!(dynamics::r_alpha(&model, &u).unwrap().max_abs(), 0.0);
}

/// `𝓡^α` source with every trace written as an explicit loop over the frame `e_i = e^{-φ} ∂_i`.
fn frame_loop_r_source(l: &LocalGeom, u: &V) -> V {
    let emphi = (l.phi * -1.0).exp();
    let z = Jet::zero();
    let frame: [V; 2] = [[emphi, z], [z, emphi]];
    let mut out = local::vzero();
    let ric = |w: &V| -> V {
        let mut r = local::vzero();
        for e in &frame {
            r = local::vadd(&r, &local::riem(l, w, e, e));
        }
        r
    };
    for e in &frame {
        let de_e = local::nabla(l, e, e);
        let due = local::nabla(l, e, u);
        // ∇_{e}(R(e, u) u) - R(∇_e e, u) u
        let inner = local::riem(l, e, u, u);
        out = local::vadd(&out, &local::vsub(&local::nabla(l, e, &inner), &local::riem(l, &de_e, u, u)));
        out = local::vadd(&out, &local::riem(l, e, u, &due));
        out = local::vadd(&out, &local::riem(l, u, &due, e));
        // ∇u^t Ric(u) = Σ g(∇_e u, Ric u) e
        let gr = local::g(l, &due, &ric(u));
        out = local::vsub(&out, &local::vscale(e, gr));
    }
    // (∇_u Ric) u = ∇_u(Ric u) - Ric(∇_u u)
    let nr = local::vsub(&local::nabla(l, u, &ric(u)), &ric(&local::nabla(l, u, u)));
    local::vsub(&out, &nr)
}

#[test]
fn r_alpha_matches_frame_loop_oracle() {
    let alpha = 0.5;
    for spec in [DomainSpec::torus(1.0, 1.0), mixed()] {
        let m = metric(spec, 24, MetricPreset::Bump { amplitude: 0.3 });
        let model = LaeModel::for_domain(m.clone(), alpha).unwrap();
        let u = testfields::random_vector(&m, 9, 3);
        let uj = vector_jets(m.grid(), &u, 2);
        let src = eval_vector(&m, |n| frame_loop_r_source(m.local(n), &uj[n]));
        let want = model.op().solve(&src.scale(alpha * alpha)).unwrap();
        let got = dynamics::r_alpha(&model, &u).unwrap();
        assert!(got.sub(&want).max_abs() <= 1e-10 * want.max_abs(), "{}", got.sub(&want).max_abs() / want.max_abs());
    }
}

#[test]
fn f_alpha_formulas_agree_at_second_order() {
    let alpha = 0.3;
    let cases = [
        (DomainSpec::torus(1.0, 1.0), MetricPreset::Flat),
        (DomainSpec::torus(1.0, 1.0), MetricPreset::Bump { amplitude: 0.2 }),
        (dirichlet(), MetricPreset::WaveX { amplitude: 0.2 }),
        (mixed(), MetricPreset::Bump { amplitude: 0.2 }),
    ];
    for (spec, preset) in cases {
        let (mut hs, mut es) = (Vec::new(), Vec::new());
        for &n in &[16usize, 32, 64] {
            let m = metric(spec, n, preset);
            let model = LaeModel::for_domain(m.clone(), alpha).unwrap();
            let u = testfields::random_div_free(&m, 4, 2);
            let a = dynamics::f_alpha(&model, &u).unwrap();
            let b = dynamics::f_alpha_alt(&model, &u).unwrap();
            hs.push(m.grid().h());
            es.push(a.sub(&b).max_abs() / a.max_abs());
        }
        let p = fitted_order(&hs, &es);
        assert!((p - 2.0).abs() <= 0.5, "{:?} {:?}: order {p}, {es:?}", spec.kind, preset);
    }
}

#[test]
fn d_alpha_is_bilinear() {
    let m = metric(mixed(), 16, MetricPreset::Bump { amplitude: 0.2 });
    let model = LaeModel::for_domain(m.clone(), 0.4).unwrap();
    let u = testfields::random_vector(&m, 1, 3);
    let v = testfields::random_vector(&m, 2, 3);
    let a = dynamics::d_alpha(&model, &u.scale(2.0), &v).unwrap();
    let b = dynamics::d_alpha(&model, &u, &v).unwrap().scale(2.0);
    assert!(a.sub(&b).max_abs() <= 1e-12 * a.max_abs());
}

#[test]
fn advected_helmholtz_identity_converges() {
    // (1 - α²𝓛)^{-1} ∇_u[(1 - α²Δ_r) v] = ∇_u v + 𝓓^α(u, v) for divergence-free u and v.
    let alpha = 0.3;
    for preset in [MetricPreset::Flat, MetricPreset::Bump { amplitude: 0.2 }] {
        let (mut hs, mut es) = (Vec::new(), Vec::new());
        for &n in &[16usize, 32, 64] {
            let m = metric(DomainSpec::torus(1.0, 1.0), n, preset);
            let model = LaeModel::new(m.clone(), BcRegime::Periodic, alpha).unwrap();
            let u = testfields::random_div_free(&m, 5, 2);
            let v = testfields::random_div_free(&m, 6, 2);
            let (uj, vj) = (vector_jets(m.grid(), &u, 0), vector_jets(m.grid(), &v, 3));
            let inner = eval_vector(&m, |n| {
                let l = m.local(n);
                local::nabla(l, &uj[n], &local::helmholtz_r(l, alpha * alpha, &vj[n]))
            });
            let lhs = model.op().solve(&inner).unwrap();
            let rhs = calculus::nabla(&m, &u, &v).add(&dynamics::d_alpha(&model, &u, &v).unwrap());
            hs.push(m.grid().h());
            es.push(lhs.sub(&rhs).max_abs() / rhs.max_abs());
        }
        let p = fitted_order(&hs, &es);
        assert!((p - 2.0).abs() <= 0.5, "{preset:?}: order {p}, {es:?}");
    }
}

#[test]
fn b_alpha_duality_converges() {
    // ⟨(1 - α²Δ_r) v, ∇_u w⟩₀ = ⟨B^α(v, w), u⟩₁ for divergence-free u and v.
    let alpha = 0.3;
    for spec in [DomainSpec::torus(1.0, 1.0), dirichlet()] {
        let (mut hs, mut es) = (Vec::new(), Vec::new());
        for &n in &[16usize, 32, 64] {
            let m = metric(spec, n, MetricPreset::WaveX { amplitude: 0.2 });
            let model = LaeModel::for_domain(m.clone(), alpha).unwrap();
            let u = testfields::random_div_free(&m, 7, 2);
            let v = testfields::random_div_free(&m, 8, 2);
            let w = testfields::random_wall_compatible(&m, 9, 2);
            let hv = model.op().apply(&v);
            let lhs = calculus::inner0(&m, &hv, &calculus::nabla(&m, &u, &w));
            let b = dynamics::b_alpha(&model, &v, &w).unwrap();
            let rhs = calculus::inner1(&m, alpha, &b, &u);
            hs.push(m.grid().h());
            es.push((lhs - rhs).abs() / lhs.abs());
        }
        let p = fitted_order(&hs, &es);
        assert!(p >= 1.5, "{:?}: order {p}, {es:?}", spec.kind);
    }
}

#[test]
fn b_alpha_at_zero_alpha_is_projected_transpose() {
    let m = metric(DomainSpec::torus(1.0, 1.0), 16, MetricPreset::Flat);
    let model = LaeModel::new(m.clone(), BcRegime::Periodic, 0.0).unwrap();
    let v = testfields::random_vector(&m, 1, 3);
    let w = testfields::random_vector(&m, 2, 3);
    let dw = calculus::covariant_derivative(&m, &w);
    let t = VectorField::from_nodes(m.grid(), |n| {
        let a = dw.at(n);
        let vv = v.at(n);
        [a[0][0] * vv[0] + a[1][0] * vv[1], a[0][1] * vv[0] + a[1][1] * vv[1]]
    });
    let want = model.projector().project(&t).unwrap();
    let got = dynamics::b_alpha(&model, &v, &w).unwrap();
    assert!(got.sub(&want).max_abs() <= 1e-12 * want.max_abs());
}

#[test]
fn frak_f_alpha_symmetry_and_diagonal() {
    let m = metric(mixed(), 24, MetricPreset::Bump { amplitude: 0.2 });
    let model = LaeModel::for_domain(m.clone(), 0.4).unwrap();
    let u = testfields::random_vector(&m, 1, 2);
    let v = testfields::random_vector(&m, 2, 2);
    let uv = dynamics::frak_f_alpha(&model, &u, &v).unwrap();
    let vu = dynamics::frak_f_alpha(&model, &v, &u).unwrap();
    assert!(uv.sub(&vu).max_abs() <= 1e-12 * uv.max_abs());
    assert_eq!(dynamics::frak_f_alpha(&model, &u, &VectorField::zeros(m.grid())).unwrap().max_abs(), 0.0);
    let polar = dynamics::frak_f_alpha_polar(&model, &u, &v).unwrap();
    assert!(uv.sub(&polar).max_abs() <= 1e-9 * uv.max_abs(), "{:e}", uv.sub(&polar).max_abs() / uv.max_abs());
    let uu = dynamics::frak_f_alpha(&model, &u, &u).unwrap();
    let fu = dynamics::f_alpha(&model, &u).unwrap();
    assert!(uu.sub(&fu).max_abs() <= 1e-9 * fu.max_abs(), "{:e}", uu.sub(&fu).max_abs() / fu.max_abs());
}

#[test]
fn rhs_outputs_lie_in_constrained_space() {
    for spec in [DomainSpec::torus(1.0, 1.0), dirichlet(), mixed()] {
        let m = metric(spec, 16, MetricPreset::Bump { amplitude: 0.2 });
        let model = LaeModel::for_domain(m.clone(), 0.3).unwrap();
        let u = state_field(&model, 2);
        let r = dynamics::rhs(&model, &u).unwrap();
        model.check_state(&r).unwrap();
    }
}

#[test]
fn rhs_rejects_unconstrained_fields() {
    let m = metric(dirichlet(), 16, MetricPreset::Flat);
    let model = LaeModel::for_domain(m.clone(), 0.3).unwrap();
    let u = testfields::random_vector(&m, 3, 3);
    assert!(matches!(dynamics::rhs_dirichlet(&model, &u), Err(DynamicsError::InvalidConfig(_))));
}

#[test]
fn rhs_is_quadratic_on_flat_metric() {
    let m = metric(mixed(), 16, MetricPreset::Flat);
    let model = LaeModel::for_domain(m.clone(), 0.3).unwrap();
    let u = state_field(&model, 4);
    let a = dynamics::rhs(&model, &u.scale(3.0)).unwrap();
    let b = dynamics::rhs(&model, &u).unwrap().scale(9.0);
    assert!(a.sub(&b).max_abs() <= 1e-11 * a.max_abs());
}

#[test]
fn torus_rhs_forms_coincide() {
    let m = metric(DomainSpec::torus(1.0, 1.0), 16, MetricPreset::Flat);
    let model = LaeModel::new(m.clone(), BcRegime::Periodic, 0.3).unwrap();
    let u = state_field(&model, 5);
    let a = dynamics::rhs_dirichlet(&model, &u).unwrap();
    let b = dynamics::rhs_mixed(&model, &u).unwrap();
    assert!(a.sub(&b).max_abs() <= 1e-12 * a.max_abs());
}

#[test]
fn rhs_approaches_euler_like_alpha_squared() {
    let m = metric(dirichlet(), 16, MetricPreset::WaveX { amplitude: 0.2 });
    let euler = LaeModel::for_domain(m.clone(), 0.0).unwrap();
    let u = state_field(&euler, 6);
    let e = dynamics::rhs_euler(&euler, &u).unwrap();
    let alphas = [0.01, 0.005, 0.0025];
    let mut d = Vec::new();
    for &a in &alphas {
        let model = LaeModel::for_domain(m.clone(), a).unwrap();
        let v = model.projector().project(&u).unwrap();
        d.push(dynamics::rhs_dirichlet(&model, &v).unwrap().sub(&e).max_abs());
    }
    let p = fitted_order(&alphas, &d);
    assert!((p - 2.0).abs() <= 0.3, "order {p}, {d:?}");
}

#[test]
fn eq2_residual_converges_and_detects_wrong_rates() {
    let alpha = 0.3;
    let (mut hs, mut es, mut neg) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &[16usize, 32, 64] {
        let m = metric(DomainSpec::torus(1.0, 1.0), n, MetricPreset::Bump { amplitude: 0.2 });
        let model = LaeModel::new(m.clone(), BcRegime::Periodic, alpha).unwrap();
        let u = state_field(&model, 7);
        let r = dynamics::rhs(&model, &u).unwrap();
        let scale = calculus::norm0(&m, &model.op().apply(&r));
        hs.push(m.grid().h());
        es.push(dynamics::eq2_residual(&model, &u, &r).unwrap() / scale);
        neg.push(dynamics::eq2_residual(&model, &u, &VectorField::zeros(m.grid())).unwrap() / scale);
    }
    let p = fitted_order(&hs, &es);
    assert!((p - 2.0).abs() <= 0.5, "order {p}, {es:?}");
    assert!(neg.iter().all(|v| *v > 0.1), "{neg:?}");
    let m = metric(DomainSpec::torus(1.0, 1.0), 16, MetricPreset::Flat);
    let model = LaeModel::new(m.clone(), BcRegime::Periodic, alpha).unwrap();
    let z = VectorField::zeros(m.grid());
    assert_eq!(dynamics::eq2_residual(&model, &z, &z).unwrap(), 0.0);
}

#[test]
fn zero_state_is_stationary() {
    let m = metric(mixed(), 16, MetricPreset::Bump { amplitude: 0.2 });
    let model = LaeModel::for_domain(m.clone(), 0.3).unwrap();
    let s = State::new(VectorField::zeros(m.grid()));
    let (end, _) = dynamics::integrate(&model, &SolverConfig::new(0.01, 0.05), &s, 1).unwrap();
    assert_eq!(end.u.max_abs(), 0.0);
    assert_eq!(end.step, 5);
}

#[test]
fn cfl_violation_aborts() {
    let m = metric(DomainSpec::torus(1.0, 1.0), 16, MetricPreset::Flat);
    let model = LaeModel::new(m.clone(), BcRegime::Periodic, 0.3).unwrap();
    let u = state_field(&model, 1).scale(100.0);
    let r = dynamics::integrate(&model, &SolverConfig::new(0.1, 0.2), &State::new(u), 1);
    assert!(matches!(r, Err(DynamicsError::CflViolation { .. })));
}

#[test]
fn rk4_energy_error_is_fourth_order_in_time() {
    let m = metric(DomainSpec::torus(1.0, 1.0), 16, MetricPreset::Bump { amplitude: 0.2 });
    let alpha = 0.3;
    let model = LaeModel::new(m.clone(), BcRegime::Periodic, alpha).unwrap();
    let u0 = model.projector().project(&testfields::taylor_green(&m)).unwrap();
    let t_end = 0.4;
    let run = |dt: f64| {
        let (end, _) = dynamics::integrate(&model, &SolverConfig::new(dt, t_end), &State::new(u0.clone()), 0).unwrap();
        dynamics::energy(&m, alpha, &end.u)
    };
    let href = run(0.000625);
    let dts = [0.01, 0.005, 0.0025];
    let errs: Vec<f64> = dts.iter().map(|&dt| (run(dt) - href).abs()).collect();
    let p = fitted_order(&dts, &errs);
    assert!((p - 4.0).abs() <= 0.5, "order {p}, {errs:?}");
}

#[test]
fn midpoint_and_rk4_agree_on_short_runs() {
    let m = metric(DomainSpec::torus(1.0, 1.0), 16, MetricPreset::Flat);
    let model = LaeModel::new(m.clone(), BcRegime::Periodic, 0.3).unwrap();
    let u0 = model.projector().project(&testfields::taylor_green(&m)).unwrap();
    let mut cfg = SolverConfig::new(0.005, 0.05);
    let (a, _) = dynamics::integrate(&model, &cfg, &State::new(u0.clone()), 0).unwrap();
    cfg.integrator = Integrator::Midpoint;
    let (b, _) = dynamics::integrate(&model, &cfg, &State::new(u0.clone()), 0).unwrap();
    assert!(a.u.sub(&b.u).max_abs() <= 1e-4 * u0.max_abs());
}

#[test]
fn integration_reverses_to_initial_state() {
    let m = metric(mixed(), 16, MetricPreset::WaveX { amplitude: 0.2 });
    let model = LaeModel::for_domain(m.clone(), 0.3).unwrap();
    let u0 = state_field(&model, 8);
    let (fwd, _) = dynamics::integrate(&model, &SolverConfig::new(0.01, 0.1), &State::new(u0.clone()), 0).unwrap();
    let back_cfg = SolverConfig::new(-0.01, 0.0);
    let (back, _) = dynamics::integrate(&model, &back_cfg, &fwd, 0).unwrap();
    assert!(back.u.sub(&u0).max_abs() <= 1e-6 * u0.max_abs(), "{:e}", back.u.sub(&u0).max_abs());
}

#[test]
fn energy_is_positive_and_zero_at_rest() {
    let m = metric(DomainSpec::torus(1.0, 1.0), 16, MetricPreset::Bump { amplitude: 0.2 });
    assert_eq!(dynamics::energy(&m, 0.3, &VectorField::zeros(m.grid())), 0.0);
    assert!(dynamics::energy(&m, 0.3, &testfields::random_vector(&m, 1, 2)) > 0.0);
}

#[test]
fn advected_helmholtz_identity_on_channels() {
    // Dirichlet walls: ∇_u v already satisfies the wall conditions. Mixed walls: it is
    // replaced by (1 - α²𝓛)^{-1}(1 - α²𝓛) ∇_u v.
    let alpha = 0.3;
    for spec in [dirichlet(), mixed()] {
        let (mut hs, mut es) = (Vec::new(), Vec::new());
        for &n in &[16usize, 32, 64] {
            let m = metric(spec, n, MetricPreset::WaveX { amplitude: 0.2 });
            let model = LaeModel::for_domain(m.clone(), alpha).unwrap();
            let u = testfields::random_div_free(&m, 5, 2);
            let v = testfields::random_div_free(&m, 6, 2);
            let (uj, vj) = (vector_jets(m.grid(), &u, 0), vector_jets(m.grid(), &v, 3));
            let inner = eval_vector(&m, |n| {
                let l = m.local(n);
                local::nabla(l, &uj[n], &local::helmholtz_r(l, alpha * alpha, &vj[n]))
            });
            let lhs = model.op().solve(&inner).unwrap();
            let adv = calculus::nabla(&m, &u, &v);
            let adv = if model.regime().has_neumann() { model.op().l_alpha(&adv).unwrap() } else { adv };
            let rhs = adv.add(&dynamics::d_alpha(&model, &u, &v).unwrap());
            hs.push(m.grid().h());
            es.push(lhs.sub(&rhs).max_abs() / rhs.max_abs());
        }
        let p = fitted_order(&hs, &es);
        assert!((p - 2.0).abs() <= 0.5, "{:?}: order {p}, {es:?}", spec.kind);
    }
}
