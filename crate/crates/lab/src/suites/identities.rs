//! Calculus identities checked by two independent routes under grid refinement.

use anyhow::Result;
use laelab_core::{identities, testfields, BoundaryData, ConformalMetric, Grid, MetricPreset};

use super::{Ctx, TestCase, SECOND_ORDER};
use crate::record::{Level, Measurement, Tolerance};

/// Rows next to each wall excluded from pointwise identities evaluated through the composed
/// route, whose one-sided double differences converge at first order there.
pub const WALL_BAND: usize = 2;

fn level(m: &ConformalMetric, r: f64) -> Level {
    Level { h: m.grid().h(), value: r, residual: r }
}

pub fn cases<'a>(ctx: &'a Ctx<'a>) -> Vec<TestCase<'a>> {
    let study = move |f: fn(&Ctx, &ConformalMetric) -> Result<f64>| {
        move || {
            ctx.ladder_study(|n| {
                let m = ctx.metric(n)?;
                Ok(level(&m, f(ctx, &m)?))
            })
        }
    };
    vec![
        TestCase::new(
            "weitzenbock",
            "hodge laplacian equals its covariant form",
            SECOND_ORDER,
            study(|c, m| Ok(identities::weitzenbock(m, &testfields::random_vector(m, c.seed(1), 2), WALL_BAND))),
        ),
        TestCase::new(
            "div_nabla",
            "divergence of a covariant derivative",
            SECOND_ORDER,
            study(|c, m| {
                let (u, v) = (testfields::random_vector(m, c.seed(1), 2), testfields::random_vector(m, c.seed(2), 2));
                Ok(identities::div_nabla(m, &u, &v, WALL_BAND))
            }),
        ),
        TestCase::new(
            "def_integration_by_parts",
            "deformation pairing integrates by parts with the wall traction term",
            SECOND_ORDER,
            study(|c, m| {
                let bd = BoundaryData::new(m);
                let (u, v) = (testfields::random_wall_compatible(m, c.seed(4), 2), testfields::random_wall_compatible(m, c.seed(5), 2));
                Ok(identities::def_integration(m, &bd, &u, &v))
            }),
        ),
        TestCase::new(
            "helmholtz_pairing",
            "H1 pairing equals the L2 pairing against the Helmholtz operator",
            SECOND_ORDER,
            study(|c, m| {
                let (u, v) = (testfields::random_div_free(m, c.seed(6), 2), testfields::random_div_free(m, c.seed(7), 2));
                Ok(identities::helmholtz_pairing(m, c.alpha, &u, &v))
            }),
        ),
        TestCase::new(
            "skew_advection",
            "advection by a tangent divergence-free field is L2 skew",
            SECOND_ORDER,
            study(|c, m| {
                let u = testfields::random_div_free(m, c.seed(6), 2);
                let (v, w) = (testfields::random_vector(m, c.seed(2), 2), testfields::random_vector(m, c.seed(3), 2));
                Ok(identities::skew_advection(m, &u, &v, &w))
            }),
        ),
        TestCase::new(
            "transpose_laplacian",
            "transpose gradient applied to the Ricci laplacian",
            SECOND_ORDER,
            study(|c, m| Ok(identities::transpose_laplacian(m, &testfields::random_vector(m, c.seed(1), 2), WALL_BAND))),
        ),
        TestCase::new(
            "advected_helmholtz",
            "inverse Helmholtz of an advected Helmholtz field",
            SECOND_ORDER,
            move || {
                ctx.ladder_study(|n| {
                    let m = ctx.metric(n)?;
                    let model = ctx.model(&m)?;
                    let (u, v) = (testfields::random_div_free(&m, ctx.seed(5), 2), testfields::random_div_free(&m, ctx.seed(6), 2));
                    Ok(level(&m, identities::advected_helmholtz(&model, &u, &v)?))
                })
            },
        ),
        TestCase::new(
            "bracket_jacobi",
            "jacobi identity of the vector field bracket",
            SECOND_ORDER,
            study(|c, m| {
                let f = |k| testfields::random_vector(m, c.seed(k), 2);
                Ok(identities::bracket_jacobi(m, &f(1), &f(2), &f(3)))
            }),
        ),
        TestCase::new("bracket_forms", "covariant and coordinate brackets coincide", Tolerance::AtMost { max: 1e-13 }, move || {
            let mut series = Vec::new();
            for &n in &ctx.ladder {
                let m = ctx.metric(n)?;
                let (u, v) = (testfields::random_vector(&m, ctx.seed(1), 3), testfields::random_vector(&m, ctx.seed(2), 3));
                series.push(level(&m, identities::bracket_forms(&m, &u, &v)));
            }
            Ok(Measurement::series(series))
        }),
        TestCase::new("flat_curvature_terms", "curvature terms vanish on a flat metric", Tolerance::Zero, move || {
            let mut series = Vec::new();
            for &n in &ctx.ladder {
                let g = Grid::new(ctx.spec, n, n)?;
                let m = ConformalMetric::from_preset(&g, MetricPreset::Flat)?;
                let (u, v) = (testfields::random_vector(&m, ctx.seed(1), 3), testfields::random_vector(&m, ctx.seed(2), 3));
                series.push(level(&m, identities::curvature_magnitude(&m, &u, &v)));
            }
            Ok(Measurement::series(series))
        }),
    ]
}
