//! Residuals of the calculus identities, each evaluated by two independent routes.
//!
//! One side of every identity comes from node-local jets ([`crate::local`]), the other from
//! differencing intermediate grid fields ([`calculus::composed`]) or from quadrature. The
//! returned residuals are relative and vanish at the stencil order under refinement.

use crate::calculus::{self, composed, eval_tensor, eval_vector, vector_jets};
use crate::dynamics::{self, LaeModel};
use crate::error::EllipticError;
use crate::field::{ScalarField, VectorField};
use crate::geometry::{BoundaryData, ConformalMetric};
use crate::local;

fn rel(diff: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn integral(m: &ConformalMetric, f: &ScalarField) -> f64 {
    (0..m.grid().len()).map(|n| m.volume_weight(n) * f.data[n]).sum()
}

/// `(Def u, Def v)₀ = ∫ ḡ(Def u, Def v) μ`.
pub fn def_pairing(m: &ConformalMetric, u: &VectorField, v: &VectorField) -> f64 {
    integral(m, &calculus::gbar_pointwise(m, &calculus::deformation(m, u), &calculus::deformation(m, v)))
}

/// Weitzenböck form of the Hodge Laplacian against the exterior-calculus route, over rows
/// at least `band` rows from the walls.
pub fn weitzenbock(m: &ConformalMetric, u: &VectorField, band: usize) -> f64 {
    let g = m.grid();
    let a = calculus::hodge_laplacian(m, u);
    let b = composed::hodge_laplacian_exterior(m, u);
    rel(calculus::max_abs_band(g, &a.sub(&b), band), calculus::max_abs_band(g, &a, band))
}

/// `div(∇_v u) = Tr(∇u ∇v) + Ricci(u, v) + g(grad div u, v)`.
pub fn div_nabla(m: &ConformalMetric, u: &VectorField, v: &VectorField, band: usize) -> f64 {
    let lhs = composed::divergence(m, &calculus::nabla(m, v, u));
    let (uj, vj) = (vector_jets(m.grid(), u, 2), vector_jets(m.grid(), v, 1));
    let rhs = calculus::eval_scalar(m, |n| {
        let l = m.local(n);
        let gd = local::grad(l, &local::div_vec(l, &uj[n]));
        local::d_alpha_scalar(l, &uj[n], &vj[n]) + local::g(l, &gd, &vj[n])
    });
    let g = m.grid();
    rel(calculus::max_abs_band_scalar(g, &lhs.sub(&rhs), band), calculus::max_abs_band_scalar(g, &rhs, band))
}

/// Integration by parts of the deformation pairing,
/// `-2 (Def u, Def v)₀ = ⟨𝓛u, v⟩₀ - ∫_{∂M} g((∇_n u)^tan + S_n u, v) μ_∂`, for `v` tangent
/// to the walls.
pub fn def_integration(m: &ConformalMetric, bd: &BoundaryData, u: &VectorField, v: &VectorField) -> f64 {
    let lhs = -2.0 * def_pairing(m, u, v);
    let bulk = calculus::inner0(m, &calculus::lcal(m, u), v);
    let wall = calculus::boundary_pairing(m, bd, &calculus::wall_traction(m, bd, u), v);
    rel((lhs - bulk + wall).abs(), lhs.abs().max(bulk.abs()))
}

/// `⟨u, v⟩₁ = ⟨(1 - α² 𝓛) u, v⟩₀` for fields satisfying the wall conditions.
pub fn helmholtz_pairing(m: &ConformalMetric, alpha: f64, u: &VectorField, v: &VectorField) -> f64 {
    let lhs = calculus::inner1(m, alpha, u, v);
    let hu = u.axpy(-alpha * alpha, &calculus::lcal(m, u));
    let rhs = calculus::inner0(m, &hu, v);
    rel((lhs - rhs).abs(), calculus::norm1(m, alpha, u) * calculus::norm1(m, alpha, v))
}

/// `⟨v, ∇_u w⟩₀ = -⟨∇_u v, w⟩₀` for divergence-free `u` tangent to the walls.
pub fn skew_advection(m: &ConformalMetric, u: &VectorField, v: &VectorField, w: &VectorField) -> f64 {
    let (uw, uv) = (calculus::nabla(m, u, w), calculus::nabla(m, u, v));
    let r = calculus::inner0(m, v, &uw) + calculus::inner0(m, &uv, w);
    let scale = calculus::norm0(m, v) * calculus::norm0(m, &uw) + calculus::norm0(m, &uv) * calculus::norm0(m, w);
    rel(r.abs(), scale)
}

/// `∇u^t Δ_r u = Div(∇u^t ∇u) - Tr(R(u, ∇_· u) ·) + ∇u^t Ric u - ½ grad ḡ(∇u, ∇u)`.
pub fn transpose_laplacian(m: &ConformalMetric, u: &VectorField, band: usize) -> f64 {
    let uj = vector_jets(m.grid(), u, 2);
    let lhs = eval_vector(m, |n| {
        let l = m.local(n);
        local::transpose_grad_apply(l, &uj[n], &local::laplace_r(l, &uj[n]))
    });
    let prod = eval_tensor(m, |n| {
        let l = m.local(n);
        let t = local::cov(l, &uj[n]);
        local::compose(&local::transpose(l, &t), &t)
    });
    let pointwise = eval_vector(m, |n| {
        let l = m.local(n);
        let t = local::cov(l, &uj[n]);
        local::vsub(&local::transpose_grad_apply(l, &uj[n], &local::ric(l, &uj[n])), &local::trace_riem_second(l, &uj[n], &t))
    });
    let du = calculus::covariant_derivative(m, u);
    let energy = calculus::gbar_pointwise(m, &du, &du);
    let rhs = composed::tensor_divergence(m, &prod).add(&pointwise).axpy(-0.5, &composed::gradient(m, &energy));
    let g = m.grid();
    rel(calculus::max_abs_band(g, &lhs.sub(&rhs), band), calculus::max_abs_band(g, &lhs, band))
}

/// Covariant against coordinate Jacobi–Lie bracket; the Christoffel terms cancel.
pub fn bracket_forms(m: &ConformalMetric, u: &VectorField, v: &VectorField) -> f64 {
    let a = calculus::jacobi_lie_bracket(m, u, v);
    let b = calculus::jacobi_lie_bracket_coord(m.grid(), u, v);
    rel(a.sub(&b).max_abs(), a.max_abs())
}

/// Jacobi identity `[u, [v, w]] + [v, [w, u]] + [w, [u, v]] = 0` of the coordinate bracket.
pub fn bracket_jacobi(m: &ConformalMetric, u: &VectorField, v: &VectorField, w: &VectorField) -> f64 {
    let b = |a: &VectorField, c: &VectorField| calculus::jacobi_lie_bracket_coord(m.grid(), a, c);
    let terms = [b(u, &b(v, w)), b(v, &b(w, u)), b(w, &b(u, v))];
    let scale = terms.iter().map(|t| t.max_abs()).fold(0.0, f64::max);
    rel(terms[0].add(&terms[1]).add(&terms[2]).max_abs(), scale)
}

/// Largest entry of every curvature contraction of `u` and `v`.
pub fn curvature_magnitude(m: &ConformalMetric, u: &VectorField, v: &VectorField) -> f64 {
    let c = calculus::curvature_contractions(m, u, v);
    c.ricci_drift.max_abs().max(c.riemann_traces.max_abs()).max(c.mixed_traces.max_abs())
}

/// Advected Helmholtz identity for divergence-free `u`, `v` satisfying the wall conditions:
/// `(1 - α²𝓛)^{-1} ∇_u[(1 - α²Δ_r) v] = L ∇_u v + 𝓓^α(u, v)`, where `L` is
/// `(1 - α²𝓛)^{-1}(1 - α²𝓛)` when a wall carries the free-slip condition and the identity otherwise.
pub fn advected_helmholtz(model: &LaeModel, u: &VectorField, v: &VectorField) -> Result<f64, EllipticError> {
    let m = model.metric();
    let a2 = model.alpha() * model.alpha();
    let (uj, vj) = (vector_jets(m.grid(), u, 0), vector_jets(m.grid(), v, 3));
    let inner = eval_vector(m, |n| {
        let l = m.local(n);
        local::nabla(l, &uj[n], &local::helmholtz_r(l, a2, &vj[n]))
    });
    let lhs = model.op().solve(&inner)?;
    let adv = calculus::nabla(m, u, v);
    let adv = if model.regime().has_neumann() { model.op().l_alpha(&adv)? } else { adv };
    let rhs = adv.add(&dynamics::d_alpha(model, u, v)?);
    Ok(rel(lhs.sub(&rhs).max_abs(), rhs.max_abs()))
}
