//! Flow maps: material against spatial evolution, volume preservation and right reduction.

use laelab_core::material::{self, MaterialState};

use super::{Ctx, TestCase};
use crate::record::{Level, Measurement, Tolerance};

/// Evolution time of the commutation study.
pub const COMMUTE_TIME: f64 = 0.1;
/// Horizon and step of the volume-preservation run.
pub const VOLUME_TIME: f64 = 0.2;
pub const VOLUME_DT: f64 = 1e-3;

pub fn cases<'a>(ctx: &'a Ctx<'a>) -> Vec<TestCase<'a>> {
    vec![
        TestCase::new(
            "commute_refinement",
            "material flow followed by reduction equals the spatial flow",
            Tolerance::MinOrder { min: 1.5 },
            move || {
                ctx.ladder_study(|n| {
                    let m = ctx.metric(n)?;
                    let model = ctx.model(&m)?;
                    let dt = ctx.cfg.run.dt * ctx.ladder[0] as f64 / n as f64;
                    let r = material::commute_check(&model, &ctx.initial(&model)?, COMMUTE_TIME, dt)?;
                    Ok(Level { h: m.grid().h(), value: r.volume_error, residual: r.discrepancy })
                })
            },
        ),
        TestCase::new("volume_preservation", "flow maps preserve the volume form", Tolerance::AtMost { max: 1e-6 }, move || {
            let m = ctx.base_metric()?;
            let model = ctx.model(&m)?;
            let mut ms = MaterialState::from_spatial(m.grid(), &ctx.initial(&model)?);
            let steps = (VOLUME_TIME / VOLUME_DT).round() as usize;
            let mut worst: f64 = 0.0;
            for _ in 0..steps {
                ms = material::spray_advance(&model, VOLUME_DT, &ms)?;
                worst = worst.max(material::volume_distortion(&model, &ms.eta));
            }
            Ok(Measurement::scalar(worst))
        }),
        TestCase::new("reduction_at_identity", "right reduction at the identity map returns the material velocity", Tolerance::AtMost { max: 1e-12 }, move || {
            let mut series = Vec::new();
            for &n in &ctx.ladder {
                let m = ctx.metric(n)?;
                let model = ctx.model(&m)?;
                let u = ctx.initial(&model)?;
                let got = material::pi_r(&model, &MaterialState::from_spatial(m.grid(), &u))?;
                let r = got.sub(&u).max_abs() / u.max_abs();
                series.push(Level { h: m.grid().h(), value: r, residual: r });
            }
            Ok(Measurement::series(series))
        }),
    ]
}
