//! The Helmholtz operator and the Stokes projector.

use std::sync::Arc;

use laelab_core::elliptic::{enforce_bc, BcRegime, EllipticOperator, StokesProjector};
use laelab_core::geometry::LocalGeom;
use laelab_core::testfields::{self, Separable};
use laelab_core::{calculus, local, BoundaryData, ConformalMetric, DomainSpec, Grid, MetricPreset, VectorField};

use super::{Ctx, TestCase, SECOND_ORDER};
use crate::oracles::fft_leray;
use crate::record::{Level, Measurement, Tolerance};

/// `(1 - α² 𝓛) u` from exact partials of `φ` and `u`.
fn exact_forcing(m: &ConformalMetric, preset: MetricPreset, u: &[Separable; 2], alpha: f64) -> VectorField {
    let g = m.grid();
    let spec = *g.spec();
    VectorField::from_nodes(g, |n| {
        let (x, y) = g.xy(n);
        let l = LocalGeom::from_phi(preset.phi_jet(&spec, x, y));
        let uj = [u[0].jet(x, y, 2), u[1].jet(x, y, 2)];
        local::vvalue(&local::helmholtz(&l, alpha * alpha, &uj))
    })
}

fn projector(ctx: &Ctx, m: &Arc<ConformalMetric>) -> anyhow::Result<StokesProjector> {
    Ok(StokesProjector::new(m.clone(), BcRegime::from_domain(&ctx.spec), ctx.alpha)?)
}

pub fn cases<'a>(ctx: &'a Ctx<'a>) -> Vec<TestCase<'a>> {
    let regime = BcRegime::from_domain(&ctx.spec);
    vec![
        TestCase::new("helmholtz_round_trip", "solve inverts the Helmholtz operator", Tolerance::AtMost { max: 1e-10 }, move || {
            let mut series = Vec::new();
            for &n in &ctx.ladder {
                let m = ctx.metric(n)?;
                let op = EllipticOperator::new(m.clone(), regime, ctx.alpha)?;
                let u = enforce_bc(&m, &BoundaryData::new(&m), regime, &testfields::random_vector(&m, ctx.seed(1), 3));
                let back = op.solve(&op.apply(&u))?;
                let r = back.sub(&u).max_abs() / u.max_abs();
                series.push(Level { h: m.grid().h(), value: r, residual: r });
            }
            Ok(Measurement::series(series))
        }),
        TestCase::new("manufactured_solution", "Helmholtz solve converges to a manufactured solution", SECOND_ORDER, move || {
            let exact = testfields::manufactured(&ctx.spec, ctx.seed(11), 2);
            ctx.ladder_study(|n| {
                let m = ctx.metric(n)?;
                let op = EllipticOperator::new(m.clone(), regime, ctx.alpha)?;
                let u = op.solve(&exact_forcing(&m, ctx.preset, &exact, ctx.alpha))?;
                let ue = testfields::sample(&m, &exact);
                let r = u.sub(&ue).max_abs() / ue.max_abs();
                Ok(Level { h: m.grid().h(), value: u.max_abs(), residual: r })
            })
        }),
        TestCase::new("projector_idempotence", "Stokes projector is idempotent", Tolerance::AtMost { max: 1e-8 }, move || {
            let m = ctx.base_metric()?;
            let p = projector(ctx, &m)?;
            let pu = p.project(&testfields::random_vector(&m, ctx.seed(21), 3))?;
            Ok(Measurement::scalar(p.project(&pu)?.sub(&pu).max_abs() / pu.max_abs()))
        }),
        TestCase::new("projector_self_adjointness", "Stokes projector is H1 self-adjoint", Tolerance::AtMost { max: 1e-8 }, move || {
            let m = ctx.base_metric()?;
            let p = projector(ctx, &m)?;
            let u = testfields::random_vector(&m, ctx.seed(21), 3);
            let v = testfields::random_vector(&m, ctx.seed(22), 3);
            let a = calculus::inner1(&m, ctx.alpha, &p.project(&u)?, &v);
            let b = calculus::inner1(&m, ctx.alpha, &u, &p.project(&v)?);
            Ok(Measurement::scalar((a - b).abs() / (calculus::norm1(&m, ctx.alpha, &u) * calculus::norm1(&m, ctx.alpha, &v))))
        }),
        TestCase::new("projector_orthogonality", "projection residual is H1 orthogonal to constrained fields", Tolerance::AtMost { max: 1e-8 }, move || {
            let m = ctx.base_metric()?;
            let p = projector(ctx, &m)?;
            let v = testfields::random_vector(&m, ctx.seed(21), 3);
            let r = v.sub(&p.project(&v)?);
            let z = p.project(&testfields::random_vector(&m, ctx.seed(23), 3))?;
            let ip = calculus::inner1(&m, ctx.alpha, &r, &z);
            Ok(Measurement::scalar(ip.abs() / (calculus::norm1(&m, ctx.alpha, &r) * calculus::norm1(&m, ctx.alpha, &z))))
        }),
        TestCase::new("leray_oracle", "zero-alpha projector on a flat torus equals the spectral Leray projection", Tolerance::AtMost { max: 1e-8 }, move || {
            let (nx, ny) = (ctx.cfg.domain.nx, ctx.cfg.domain.ny);
            let g = Grid::new(DomainSpec::torus(ctx.spec.lx, ctx.spec.ly), nx, ny)?;
            let m = Arc::new(ConformalMetric::flat(&g));
            let p = StokesProjector::new(m.clone(), BcRegime::Periodic, 0.0)?;
            let u = testfields::random_vector(&m, ctx.seed(5), 4);
            let want = fft_leray(&u, nx, ny, g.hx(), g.hy());
            Ok(Measurement::scalar(p.project(&u)?.sub(&want).max_abs() / u.max_abs()))
        }),
    ]
}
