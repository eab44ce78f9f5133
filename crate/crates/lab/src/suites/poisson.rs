//! The Lie–Poisson bracket on the constrained space and the Poisson property of the flows.

use std::f64::consts::PI;

use anyhow::{ensure, Result};
use laelab_core::calculus::inner1;
use laelab_core::dynamics::{LaeModel, SolverConfig};
use laelab_core::material::{self, MaterialState};
use laelab_core::poisson::{self, Observable};
use laelab_core::grid::MIN_NODES;
use laelab_core::{testfields, ScalarField, VectorField};

use super::{Ctx, TestCase, SECOND_ORDER};
use crate::config::{LinearField, ObservableSpec};
use crate::record::{Level, Measurement, Tolerance};

/// Increment of the central difference against the bracket derivative.
pub const FD_EPS: f64 = 1e-4;
/// Evolution time and coarsest step of the Hamilton-equation check.
pub const HAMILTON_TIME: f64 = 0.1;
pub const HAMILTON_SAMPLES: usize = 5;
/// Flow time of the flowed state used by the reduction check.
pub const REDUCTION_TIME: f64 = 0.1;
/// Time, step and grid offsets of the flow check.
pub const FLOW_TIME: f64 = 0.05;
pub const FLOW_DT: f64 = 0.01;
pub const FLOW_OFFSETS: [isize; 3] = [-4, 0, 4];

/// Instantiates a catalog entry on the grid of `model`.
pub fn build_observable(spec: &ObservableSpec, model: &LaeModel) -> Result<Observable> {
    let g = model.metric().grid();
    let (lx, ly) = (g.spec().lx, g.spec().ly);
    Ok(match spec {
        ObservableSpec::Linear { field, phase, k } => {
            let (p, k) = (*phase, *k);
            Observable::linear(match field {
                LinearField::CrossWave => {
                    VectorField::from_fn(g, |x, y| [(2.0 * PI * k * y / ly + p[0]).cos(), (2.0 * PI * k * x / lx + p[1]).sin()])
                }
                LinearField::Oblique => VectorField::from_fn(g, |x, y| {
                    [(2.0 * PI * (x / lx + p[0])).cos() * (PI * k * y / ly).sin(), (2.0 * PI * k * (x / lx - y / ly) + p[1]).sin()]
                }),
            })
        }
        ObservableSpec::Quadratic { amplitude } => {
            let a = *amplitude;
            Observable::quadratic(ScalarField::from_fn(g, |x, y| 0.5 + a * (2.0 * PI * x / lx).cos() * (PI * y / ly).sin()))
        }
        ObservableSpec::Hamiltonian => Observable::Hamiltonian,
        ObservableSpec::Product { factors } => Observable::product(build_observable(&factors[0], model)?, build_observable(&factors[1], model)?)?,
    })
}

fn catalog(ctx: &Ctx, model: &LaeModel) -> Result<Vec<Observable>> {
    ctx.cfg.poisson.observables.iter().map(|o| build_observable(o, model)).collect()
}

fn state(ctx: &Ctx, model: &LaeModel, k: u64) -> Result<VectorField> {
    let u = model.projector().project(&testfields::random_div_free(model.metric(), ctx.seed(k), 2))?;
    Ok(u.scale(1.0 / u.max_abs()))
}

fn model_at(ctx: &Ctx, n: usize) -> Result<LaeModel> {
    ctx.model(&ctx.metric(n)?)
}

pub fn cases<'a>(ctx: &'a Ctx<'a>) -> Vec<TestCase<'a>> {
    vec![
        TestCase::new("antisymmetry", "bracket is antisymmetric", Tolerance::Zero, move || {
            let md = model_at(ctx, ctx.ladder[0])?;
            let u = state(ctx, &md, 5)?;
            let obs = catalog(ctx, &md)?;
            let mut worst: f64 = 0.0;
            for f in &obs {
                for g in &obs {
                    let fg = poisson::bracket(&md, f, g, &u)?;
                    let gf = poisson::bracket(&md, g, f, &u)?;
                    worst = worst.max((fg + gf).abs());
                }
            }
            Ok(Measurement::scalar(worst))
        }),
        TestCase::new("leibniz", "bracket is a derivation in each slot", Tolerance::AtMost { max: 1e-12 }, move || {
            let md = model_at(ctx, ctx.ladder[0])?;
            let u = state(ctx, &md, 6)?;
            let obs = catalog(ctx, &md)?;
            let h = &obs[1];
            let mut worst: f64 = 0.0;
            for f in &obs {
                for g in &obs {
                    let r = poisson::bracket_report(&md, f, g, h, &u)?;
                    let scale = (poisson::bracket(&md, f, h, &u)? * g.value(&md, &u)).abs()
                        + (f.value(&md, &u) * poisson::bracket(&md, g, h, &u)?).abs();
                    if scale > 0.0 {
                        worst = worst.max(r.leibniz_residual / scale);
                    }
                }
            }
            Ok(Measurement::scalar(worst))
        }),
        TestCase::new("jacobi", "bracket satisfies the jacobi identity", SECOND_ORDER, move || {
            ctx.ladder_study(|n| {
                let md = model_at(ctx, n)?;
                let obs = catalog(ctx, &md)?;
                let u = state(ctx, &md, 14)?;
                let t = poisson::jacobi_terms(&md, &obs[0], &obs[1], &obs[2], &u)?;
                let sum: f64 = t.iter().map(|v| v.abs()).sum();
                ensure!(sum > 0.0, "jacobi terms vanish identically");
                Ok(Level { h: md.metric().grid().h(), value: sum, residual: (t[0] + t[1] + t[2]).abs() / sum })
            })
        }),
        TestCase::new("bracket_derivative", "bracket derivative matches central differences", SECOND_ORDER, move || {
            ctx.ladder_study(|n| {
                let md = model_at(ctx, n)?;
                let (m, a) = (md.metric(), md.alpha());
                let obs = catalog(ctx, &md)?;
                let (f, g) = (&obs[0], &obs[2]);
                let (u, v) = (state(ctx, &md, 12)?, state(ctx, &md, 13)?);
                let d = inner1(m, a, &poisson::delta_bracket(&md, f, g, &u)?, &v);
                let fp = poisson::bracket(&md, f, g, &u.axpy(FD_EPS, &v))?;
                let fm = poisson::bracket(&md, f, g, &u.axpy(-FD_EPS, &v))?;
                let fd = (fp - fm) / (2.0 * FD_EPS);
                Ok(Level { h: m.grid().h(), value: fd, residual: (fd - d).abs() / fd.abs() })
            })
        }),
        TestCase::new("hamilton_equation", "observables evolve by their bracket with the energy", Tolerance::MinOrder { min: 2.0 }, move || {
            ctx.ladder_study(|n| {
                let md = model_at(ctx, n)?;
                let u0 = state(ctx, &md, 18)?;
                let f = &catalog(ctx, &md)?[0];
                let dt = ctx.cfg.run.dt * ctx.ladder[0] as f64 / n as f64;
                let r = poisson::hamilton_check(&md, &SolverConfig::new(dt, HAMILTON_TIME), f, &u0, HAMILTON_SAMPLES)?;
                Ok(Level { h: md.metric().grid().h(), value: dt, residual: r.max_deviation })
            })
        }),
        TestCase::new("reduction_is_poisson", "right reduction maps the material bracket to the spatial one", Tolerance::Decreasing, move || {
            let mut series = Vec::new();
            for &n in &ctx.ladder {
                let md = model_at(ctx, n)?;
                let obs = catalog(ctx, &md)?;
                let mut ms = MaterialState::from_spatial(md.metric().grid(), &state(ctx, &md, 23)?);
                let dt = ctx.cfg.run.dt;
                let steps = (REDUCTION_TIME / dt).round() as usize;
                for _ in 0..steps {
                    ms = material::spray_advance(&md, dt, &ms)?;
                }
                let r = poisson::pi_r_poisson_check(&md, &obs[0], &obs[1], &ms)?;
                series.push(Level { h: md.metric().grid().h(), value: r.lhs, residual: r.deviation });
            }
            Ok(Measurement::series(series))
        }),
        TestCase::new("flow_is_poisson", "the spatial flow preserves the bracket", Tolerance::AtMostDecreasing { max: 5e-3 }, move || {
            let (nx, ny) = (ctx.cfg.domain.nx as isize, ctx.cfg.domain.ny as isize);
            let mut series = Vec::new();
            let mut base = f64::NAN;
            for off in FLOW_OFFSETS {
                ensure!(nx + off >= MIN_NODES as isize && ny + off >= MIN_NODES as isize, "base grid too small for the flow check");
                let m = ctx.metric_on((nx + off) as usize, (ny + off) as usize)?;
                let md = ctx.model(&m)?;
                let obs = catalog(ctx, &md)?;
                let u0 = ctx.initial(&md)?;
                let cfg = SolverConfig::new(FLOW_DT, FLOW_TIME);
                let r = poisson::flow_poisson_check(&md, &cfg, &obs[0], &obs[1], &u0, ctx.cfg.poisson.flow_check.max_dim)?;
                if off == 0 {
                    base = r.deviation;
                }
                series.push(Level { h: m.grid().h(), value: r.lhs, residual: r.deviation });
            }
            Ok(Measurement { value: base, series, order: None })
        }),
    ]
}
