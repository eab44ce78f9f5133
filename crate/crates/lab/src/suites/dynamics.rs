//! Nonlinear operators, the evolution equation and time integration.

use anyhow::{ensure, Result};
use laelab_core::dynamics::{self, LaeModel, SolverConfig, State};
use laelab_core::{calculus, testfields};

use super::{Ctx, TestCase, SECOND_ORDER};
use crate::record::{Level, Measurement, Tolerance};
use crate::snapshot::Snapshot;

/// `α` values of the vanishing-`α` sweep.
pub const ALPHA_SWEEP: [f64; 3] = [0.01, 0.005, 0.0025];

/// Horizon of the spatial energy-floor study.
pub const FLOOR_TIME: f64 = 0.1;

/// Ratio of the coarsest step to the reference step of the time-order study.
const REFERENCE_REFINEMENT: f64 = 16.0;

fn solver(ctx: &Ctx, dt: f64, t_end: f64) -> Result<SolverConfig> {
    let mut c = ctx.cfg.solver_config();
    c.dt = dt;
    c.t_end = t_end;
    c.integrator = ctx.cfg.integrator()?;
    Ok(c)
}

/// Step at ladder size `n`, scaled with the grid spacing from the configured coarsest step.
fn scaled_dt(ctx: &Ctx, n: usize) -> f64 {
    ctx.cfg.run.dt * ctx.ladder[0] as f64 / n as f64
}

fn final_energy(model: &LaeModel, cfg: &SolverConfig, u0: &laelab_core::VectorField) -> Result<f64> {
    let (end, _) = dynamics::integrate(model, cfg, &State::new(u0.clone()), 0)?;
    Ok(dynamics::energy(model.metric(), model.alpha(), &end.u))
}

pub fn cases<'a>(ctx: &'a Ctx<'a>) -> Vec<TestCase<'a>> {
    vec![
        TestCase::new("f_alpha_forms", "two forms of the nonlinear term agree", SECOND_ORDER, move || {
            ctx.ladder_study(|n| {
                let m = ctx.metric(n)?;
                let model = ctx.model(&m)?;
                let u = testfields::random_div_free(&m, ctx.seed(4), 2);
                let a = dynamics::f_alpha(&model, &u)?;
                let b = dynamics::f_alpha_alt(&model, &u)?;
                let r = a.sub(&b).max_abs() / a.max_abs();
                Ok(Level { h: m.grid().h(), value: r, residual: r })
            })
        }),
        TestCase::new("evolution_residual", "trajectories satisfy the weak evolution equation", SECOND_ORDER, move || {
            ctx.ladder_study(|n| {
                let m = ctx.metric(n)?;
                let model = ctx.model(&m)?;
                let dt = scaled_dt(ctx, n);
                let (end, _) = dynamics::integrate(&model, &solver(ctx, dt, 2.0 * dt)?, &State::new(ctx.initial(&model)?), 0)?;
                let r = dynamics::rhs(&model, &end.u)?;
                let scale = calculus::norm0(&m, &model.op().apply(&r));
                let res = dynamics::eq2_residual(&model, &end.u, &r)?;
                Ok(Level { h: m.grid().h(), value: res, residual: if scale == 0.0 { res } else { res / scale } })
            })
        }),
        TestCase::new("energy_time_order", "energy error of the time integrator", Tolerance::Order { target: 4.0, band: 0.5 }, move || {
            let m = ctx.base_metric()?;
            let model = ctx.model(&m)?;
            let u0 = ctx.initial(&model)?;
            let (dt, t_end) = (ctx.cfg.run.dt, ctx.cfg.run.t_end);
            let e0 = dynamics::energy(&m, ctx.alpha, &u0);
            ensure!(e0 > 0.0, "initial energy is zero");
            let reference = final_energy(&model, &solver(ctx, dt / REFERENCE_REFINEMENT, t_end)?, &u0)?;
            let mut series = Vec::new();
            for k in 0..3 {
                let step = dt / f64::from(1 << k);
                let e = final_energy(&model, &solver(ctx, step, t_end)?, &u0)?;
                series.push(Level { h: step, value: e, residual: (e - reference).abs() / e0 });
            }
            Ok(Measurement::convergence(series))
        }),
        TestCase::new("energy_spatial_floor", "energy drift at resolved time steps decreases with the grid", SECOND_ORDER, move || {
            ctx.ladder_study(|n| {
                let m = ctx.metric(n)?;
                let model = ctx.model(&m)?;
                let cfg = solver(ctx, scaled_dt(ctx, n) / 2.0, FLOOR_TIME.min(ctx.cfg.run.t_end))?;
                let (_, tr) = dynamics::integrate(&model, &cfg, &State::new(ctx.initial(&model)?), ctx.cfg.diagnostics.every_n_steps)?;
                let drift = dynamics::energy_drift(&tr);
                Ok(Level { h: m.grid().h(), value: drift, residual: drift })
            })
        }),
        TestCase::new("alpha_sweep", "right-hand side tends to the Euler one like alpha squared", SECOND_ORDER, move || {
            let m = ctx.base_metric()?;
            let euler = LaeModel::for_domain(m.clone(), 0.0)?;
            let u = euler.projector().project(&testfields::random_div_free(&m, ctx.seed(6), 2))?;
            let e = dynamics::rhs_euler(&euler, &u)?;
            let mut series = Vec::new();
            for &a in &ALPHA_SWEEP {
                let model = LaeModel::for_domain(m.clone(), a)?;
                let v = model.projector().project(&u)?;
                let d = dynamics::rhs(&model, &v)?.sub(&e).max_abs();
                series.push(Level { h: a, value: d, residual: d / e.max_abs() });
            }
            Ok(Measurement::convergence(series))
        }),
        TestCase::new("snapshot_resume", "resuming from a snapshot reproduces a single run bit for bit", Tolerance::Zero, move || {
            let m = ctx.base_metric()?;
            let model = ctx.model(&m)?;
            let (dt, t_end) = (ctx.cfg.run.dt, ctx.cfg.run.t_end);
            let s0 = State::new(ctx.initial(&model)?);
            let (full, _) = dynamics::integrate(&model, &solver(ctx, dt, t_end)?, &s0, 0)?;
            let half_steps = solver(ctx, dt, t_end)?.steps_from(0.0) / 2;
            let (mid, _) = dynamics::integrate(&model, &solver(ctx, dt, half_steps as f64 * dt)?, &s0, 0)?;
            let bytes = Snapshot::velocity(m.grid(), ctx.alpha, mid.t, mid.step, &mid.u).to_bytes()?;
            let snap = Snapshot::read_from(&mut bytes.as_slice())?;
            let resumed = State { u: snap.to_velocity(m.grid())?, t: snap.t, step: snap.step };
            let (end, _) = dynamics::integrate(&model, &solver(ctx, dt, t_end)?, &resumed, 0)?;
            let differing = full.u.to_flat().iter().zip(end.u.to_flat()).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
            let schedule = usize::from(full.step != end.step) + usize::from(full.t.to_bits() != end.t.to_bits());
            Ok(Measurement::scalar((differing + schedule) as f64))
        }),
    ]
}
