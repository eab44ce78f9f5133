//! Field-level covariant calculus.
//!
//! Operators build node-local jets of their inputs from direct stencils and evaluate the
//! formulas of [`crate::local`]; derivatives of products are therefore exact at each node
//! and second-order accurate up to the walls. The [`composed`] module evaluates the same
//! operators by differencing intermediate grid fields, which is a second, independent
//! discretization used as an oracle.

use rayon::prelude::*;

use crate::field::{ScalarField, Tensor11Field, VectorField};
use crate::geometry::{BoundaryData, ConformalMetric};
use crate::grid::Grid;
use crate::jet::{ncoef, Jet};
use crate::local::{self, T, V};

/// Evaluates `f` at every node in parallel, preserving node order.
pub fn node_map<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    (0..n).into_par_iter().map(f).collect()
}

/// Scalar jets of order `ord` at every node.
pub fn scalar_jets(grid: &Grid, f: &ScalarField, ord: usize) -> Vec<Jet> {
    let p = grid.partials(&f.data, ord);
    let nc = ncoef(ord);
    node_map(grid.len(), |n| {
        let mut buf = [0.0; 10];
        for k in 0..nc {
            buf[k] = p[k][n];
        }
        Jet::from_partials(&buf, ord)
    })
}

/// Vector jets of order `ord` at every node.
pub fn vector_jets(grid: &Grid, u: &VectorField, ord: usize) -> Vec<V> {
    let a = scalar_jets(grid, &u.c[0], ord);
    let b = scalar_jets(grid, &u.c[1], ord);
    a.into_iter().zip(b).map(|(x, y)| [x, y]).collect()
}

/// Tensor jets of order `ord` at every node.
pub fn tensor_jets(grid: &Grid, s: &Tensor11Field, ord: usize) -> Vec<T> {
    let c: Vec<Vec<Jet>> = s.c.iter().flatten().map(|f| scalar_jets(grid, f, ord)).collect();
    (0..grid.len()).map(|n| [[c[0][n], c[1][n]], [c[2][n], c[3][n]]]).collect()
}

/// Vector field from a per-node vector jet formula.
pub fn eval_vector(m: &ConformalMetric, f: impl Fn(usize) -> V + Sync + Send) -> VectorField {
    let vals = node_map(m.grid().len(), |n| local::vvalue(&f(n)));
    VectorField::from_nodes(m.grid(), |n| vals[n])
}

/// Scalar field from a per-node jet formula.
pub fn eval_scalar(m: &ConformalMetric, f: impl Fn(usize) -> Jet + Sync + Send) -> ScalarField {
    ScalarField::from_vec(m.grid(), node_map(m.grid().len(), |n| f(n).value()))
}

/// Tensor field from a per-node tensor jet formula.
pub fn eval_tensor(m: &ConformalMetric, f: impl Fn(usize) -> T + Sync + Send) -> Tensor11Field {
    let vals = node_map(m.grid().len(), |n| local::tvalue(&f(n)));
    Tensor11Field::from_nodes(m.grid(), |n| vals[n])
}

/// `∇u`.
pub fn covariant_derivative(m: &ConformalMetric, u: &VectorField) -> Tensor11Field {
    let uj = vector_jets(m.grid(), u, 1);
    eval_tensor(m, |n| local::cov(m.local(n), &uj[n]))
}

/// `∇_a b`.
pub fn nabla(m: &ConformalMetric, a: &VectorField, b: &VectorField) -> VectorField {
    let aj = vector_jets(m.grid(), a, 0);
    let bj = vector_jets(m.grid(), b, 1);
    eval_vector(m, |n| local::nabla(m.local(n), &aj[n], &bj[n]))
}

/// Metric transpose of a tensor field.
pub fn transpose(m: &ConformalMetric, s: &Tensor11Field) -> Tensor11Field {
    let sj = tensor_jets(m.grid(), s, 0);
    eval_tensor(m, |n| local::transpose(m.local(n), &sj[n]))
}

/// Pointwise `ḡ(R, S)`.
pub fn gbar_pointwise(m: &ConformalMetric, r: &Tensor11Field, s: &Tensor11Field) -> ScalarField {
    let rj = tensor_jets(m.grid(), r, 0);
    let sj = tensor_jets(m.grid(), s, 0);
    eval_scalar(m, |n| local::gbar(m.local(n), &rj[n], &sj[n]))
}

/// Pointwise `g(u, v)`.
pub fn g_pointwise(m: &ConformalMetric, u: &VectorField, v: &VectorField) -> ScalarField {
    let uj = vector_jets(m.grid(), u, 0);
    let vj = vector_jets(m.grid(), v, 0);
    eval_scalar(m, |n| local::g(m.local(n), &uj[n], &vj[n]))
}

/// `Def u = (∇u + ∇u^t) / 2`.
pub fn deformation(m: &ConformalMetric, u: &VectorField) -> Tensor11Field {
    let uj = vector_jets(m.grid(), u, 1);
    eval_tensor(m, |n| local::def(m.local(n), &uj[n]))
}

/// `div u`.
pub fn divergence(m: &ConformalMetric, u: &VectorField) -> ScalarField {
    let uj = vector_jets(m.grid(), u, 1);
    eval_scalar(m, |n| local::div_vec(m.local(n), &uj[n]))
}

/// `grad f`.
pub fn gradient(m: &ConformalMetric, f: &ScalarField) -> VectorField {
    let fj = scalar_jets(m.grid(), f, 1);
    eval_vector(m, |n| local::grad(m.local(n), &fj[n]))
}

/// `Div S`.
pub fn tensor_divergence(m: &ConformalMetric, s: &Tensor11Field) -> VectorField {
    let sj = tensor_jets(m.grid(), s, 1);
    eval_vector(m, |n| local::div_tensor(m.local(n), &sj[n]))
}

/// Hodge Laplacian in Weitzenböck form.
pub fn hodge_laplacian(m: &ConformalMetric, u: &VectorField) -> VectorField {
    let uj = vector_jets(m.grid(), u, 2);
    eval_vector(m, |n| local::hodge_laplacian(m.local(n), &uj[n]))
}

/// `Δ_r u = Δu + 2 K u`.
pub fn laplace_r(m: &ConformalMetric, u: &VectorField) -> VectorField {
    let uj = vector_jets(m.grid(), u, 2);
    eval_vector(m, |n| local::laplace_r(m.local(n), &uj[n]))
}

/// `𝓛 u = Δ_r u + grad div u`.
pub fn lcal(m: &ConformalMetric, u: &VectorField) -> VectorField {
    let uj = vector_jets(m.grid(), u, 2);
    eval_vector(m, |n| local::lcal(m.local(n), &uj[n]))
}

/// `R(a, b) c`.
pub fn riemann(m: &ConformalMetric, a: &VectorField, b: &VectorField, c: &VectorField) -> VectorField {
    let (aj, bj, cj) = (vector_jets(m.grid(), a, 0), vector_jets(m.grid(), b, 0), vector_jets(m.grid(), c, 0));
    eval_vector(m, |n| local::riem(m.local(n), &aj[n], &bj[n], &cj[n]))
}

/// `Ricci(u, v)`.
pub fn ricci_form(m: &ConformalMetric, u: &VectorField, v: &VectorField) -> ScalarField {
    let (uj, vj) = (vector_jets(m.grid(), u, 0), vector_jets(m.grid(), v, 0));
    eval_scalar(m, |n| local::ricci(m.local(n), &uj[n], &vj[n]))
}

/// `Ric(u)`.
pub fn ricci_operator(m: &ConformalMetric, u: &VectorField) -> VectorField {
    let uj = vector_jets(m.grid(), u, 0);
    eval_vector(m, |n| local::ric(m.local(n), &uj[n]))
}

/// `(∇_u Ric)(v)`.
pub fn nabla_ric(m: &ConformalMetric, u: &VectorField, v: &VectorField) -> VectorField {
    let (uj, vj) = (vector_jets(m.grid(), u, 0), vector_jets(m.grid(), v, 0));
    eval_vector(m, |n| local::nabla_ric(m.local(n), &uj[n], &vj[n]))
}

/// Jacobi–Lie bracket `[a, b] = ∇_a b - ∇_b a`.
pub fn jacobi_lie_bracket(m: &ConformalMetric, a: &VectorField, b: &VectorField) -> VectorField {
    let ab = nabla(m, a, b);
    let ba = nabla(m, b, a);
    ab.sub(&ba)
}

/// Jacobi–Lie bracket in coordinate form.
pub fn jacobi_lie_bracket_coord(grid: &Grid, a: &VectorField, b: &VectorField) -> VectorField {
    let (aj, bj) = (vector_jets(grid, a, 1), vector_jets(grid, b, 1));
    let vals = node_map(grid.len(), |n| local::vvalue(&local::bracket_coord(&aj[n], &bj[n])));
    VectorField::from_nodes(grid, |n| vals[n])
}

/// Curvature terms entering the nonlinear operators, each a vector field.
#[derive(Clone, Debug)]
pub struct CurvatureContractions {
    /// `(∇_u Ric) u - ∇u^t Ric(u)`.
    pub ricci_drift: VectorField,
    /// `Tr(∇_·(R(·, u) u) + R(·, u) ∇_· u + R(u, ∇_· u) ·)`.
    pub riemann_traces: VectorField,
    /// `Tr(∇_·(R(·, u) v) + R(·, u) ∇_· v)`; linear in `v`.
    pub mixed_traces: VectorField,
}

/// Curvature contractions of `u` and `v`; all zero on a flat metric.
pub fn curvature_contractions(m: &ConformalMetric, u: &VectorField, v: &VectorField) -> CurvatureContractions {
    let (uj, vj) = (vector_jets(m.grid(), u, 2), vector_jets(m.grid(), v, 2));
    let ricci_drift = eval_vector(m, |n| {
        let l = m.local(n);
        local::vsub(&local::nabla_ric(l, &uj[n], &uj[n]), &local::transpose_grad_apply(l, &uj[n], &local::ric(l, &uj[n])))
    });
    let riemann_traces = eval_vector(m, |n| {
        let l = m.local(n);
        let t = local::cov(l, &uj[n]);
        let s = local::vadd(&local::trace_nabla_riem(l, &uj[n], &uj[n]), &local::trace_riem_first(l, &uj[n], &t));
        local::vadd(&s, &local::trace_riem_second(l, &uj[n], &t))
    });
    let mixed_traces = eval_vector(m, |n| {
        let l = m.local(n);
        let tv = local::cov(l, &vj[n]);
        local::vadd(&local::trace_nabla_riem(l, &uj[n], &vj[n]), &local::trace_riem_first(l, &uj[n], &tv))
    });
    CurvatureContractions { ricci_drift, riemann_traces, mixed_traces }
}

/// `F(u) = Tr(∇u ∇u) + Ricci(u, u) + ½ ḡ(∇u, ∇u)`.
pub fn f_scalar(m: &ConformalMetric, u: &VectorField) -> ScalarField {
    let uj = vector_jets(m.grid(), u, 1);
    eval_scalar(m, |n| local::f_scalar(m.local(n), &uj[n]))
}

/// `G(u, v) = F(u + v) - F(u) - F(v)`.
pub fn g_scalar(m: &ConformalMetric, u: &VectorField, v: &VectorField) -> ScalarField {
    f_scalar(m, &u.add(v)).sub(&f_scalar(m, u)).sub(&f_scalar(m, v))
}

/// `L²` inner product `∫ g(u, v) μ`.
pub fn inner0(m: &ConformalMetric, u: &VectorField, v: &VectorField) -> f64 {
    let g = m.grid();
    let mut s = 0.0;
    for n in 0..g.len() {
        let l = m.local(n);
        let e2 = l.e2.value();
        let uv = u.c[0].data[n] * v.c[0].data[n] + u.c[1].data[n] * v.c[1].data[n];
        s += g.quad_weight(n) * e2 * (e2 * uv);
    }
    s
}

/// `L²` inner product of scalars `∫ f h μ`.
pub fn inner0_scalar(m: &ConformalMetric, f: &ScalarField, h: &ScalarField) -> f64 {
    (0..m.grid().len()).map(|n| m.volume_weight(n) * f.data[n] * h.data[n]).sum()
}

/// `H¹_α` inner product `∫ [g(u, v) + 2α² ḡ(Def u, Def v)] μ`.
pub fn inner1(m: &ConformalMetric, alpha: f64, u: &VectorField, v: &VectorField) -> f64 {
    let base = inner0(m, u, v);
    if alpha == 0.0 {
        return base;
    }
    let g = m.grid();
    let du = deformation(m, u);
    let dv = deformation(m, v);
    let mut s = 0.0;
    for n in 0..g.len() {
        let l = m.local(n);
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += du.c[i][j].data[n] * dv.c[i][j].data[n];
            }
        }
        s += g.quad_weight(n) * l.e2.value() * ((l.e2.value() * l.em2.value()) * acc);
    }
    base + 2.0 * alpha * alpha * s
}

pub fn norm0(m: &ConformalMetric, u: &VectorField) -> f64 {
    inner0(m, u, u).max(0.0).sqrt()
}

pub fn norm1(m: &ConformalMetric, alpha: f64, u: &VectorField) -> f64 {
    inner1(m, alpha, u, u).max(0.0).sqrt()
}

/// Wall integral `∫_{∂M} g(x, v) μ_∂`.
pub fn boundary_pairing(m: &ConformalMetric, bd: &BoundaryData, x: &VectorField, v: &VectorField) -> f64 {
    bd.nodes
        .iter()
        .map(|w| {
            let e2 = m.local(w.node).e2.value();
            let (xa, va) = (x.at(w.node), v.at(w.node));
            w.arc_weight * e2 * (xa[0] * va[0] + xa[1] * va[1])
        })
        .sum()
}

/// Tangential wall traction `(∇_n u)^tan + S_n(u)` at wall nodes (zero elsewhere).
pub fn wall_traction(m: &ConformalMetric, bd: &BoundaryData, u: &VectorField) -> VectorField {
    let t = covariant_derivative(m, u);
    let mut out = VectorField::zeros(m.grid());
    for w in &bd.nodes {
        let n = w.node;
        let nu = w.normal;
        let tn = [
            t.c[0][0].data[n] * nu[0] + t.c[0][1].data[n] * nu[1],
            t.c[1][0].data[n] * nu[0] + t.c[1][1].data[n] * nu[1],
        ];
        let e2 = m.local(n).e2.value();
        let un = e2 * (tn[0] * nu[0] + tn[1] * nu[1]);
        let tan = [tn[0] - un * nu[0], tn[1] - un * nu[1]];
        let ua = u.at(n);
        out.set(n, [tan[0] + w.shape * ua[0], tan[1] + w.shape * ua[1]]);
    }
    out
}

/// Max-norm of a vector field over rows at least `band` rows from the walls.
pub fn max_abs_band(grid: &Grid, u: &VectorField, band: usize) -> f64 {
    let mut r: f64 = 0.0;
    for j in grid.interior_band(band) {
        for i in 0..grid.nx() {
            let v = u.at(grid.node(i, j));
            r = r.max(v[0].abs()).max(v[1].abs());
        }
    }
    r
}

/// Max-norm of a scalar field over rows at least `band` rows from the walls.
pub fn max_abs_band_scalar(grid: &Grid, f: &ScalarField, band: usize) -> f64 {
    let mut r: f64 = 0.0;
    for j in grid.interior_band(band) {
        for i in 0..grid.nx() {
            r = r.max(f.data[grid.node(i, j)].abs());
        }
    }
    r
}

/// Operators evaluated by differencing intermediate grid fields.
pub mod composed {
    use super::*;

    /// First derivative of a grid field along `dir`.
    pub fn d1(grid: &Grid, f: &ScalarField, dir: usize) -> ScalarField {
        let (a, b) = if dir == 0 { (1, 0) } else { (0, 1) };
        ScalarField::from_vec(grid, grid.apply_partial(&f.data, a, b))
    }

    fn emul(m: &ConformalMetric, f: &ScalarField, which: i32) -> ScalarField {
        ScalarField::from_vec(
            m.grid(),
            (0..m.grid().len())
                .map(|n| {
                    let l = m.local(n);
                    let w = if which > 0 { l.e2.value() } else { l.em2.value() };
                    w * f.data[n]
                })
                .collect(),
        )
    }

    /// `grad f` from differenced samples.
    pub fn gradient(m: &ConformalMetric, f: &ScalarField) -> VectorField {
        let g = m.grid();
        VectorField::new(emul(m, &d1(g, f, 0), -1), emul(m, &d1(g, f, 1), -1))
    }

    /// `div u` from differenced `e^{2φ} u`.
    pub fn divergence(m: &ConformalMetric, u: &VectorField) -> ScalarField {
        let g = m.grid();
        let s = d1(g, &emul(m, &u.c[0], 1), 0).add(&d1(g, &emul(m, &u.c[1], 1), 1));
        emul(m, &s, -1)
    }

    /// `Div S` from differenced tensor components.
    pub fn tensor_divergence(m: &ConformalMetric, s: &Tensor11Field) -> VectorField {
        let g = m.grid();
        let ds: Vec<Vec<[ScalarField; 2]>> = (0..2)
            .map(|i| (0..2).map(|j| [d1(g, &s.c[i][j], 0), d1(g, &s.c[i][j], 1)]).collect())
            .collect();
        VectorField::from_nodes(g, |n| {
            let l = m.local(n);
            let mut out = [0.0; 2];
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..2 {
                    acc += ds[i][j][j].data[n];
                    for mm in 0..2 {
                        acc += l.gamma[i][j][mm].value() * s.c[mm][j].data[n];
                        acc -= l.gamma[mm][j][j].value() * s.c[i][mm].data[n];
                    }
                }
                *o = l.em2.value() * acc;
            }
            out
        })
    }

    /// Hodge Laplacian `-(dδ + δd)` through the exterior-calculus route on 1-forms.
    pub fn hodge_laplacian_exterior(m: &ConformalMetric, u: &VectorField) -> VectorField {
        let g = m.grid();
        let w1 = emul(m, &u.c[0], 1);
        let w2 = emul(m, &u.c[1], 1);
        let codiff = emul(m, &d1(g, &w1, 0).add(&d1(g, &w2, 1)), -1).scale(-1.0);
        let curl = emul(m, &d1(g, &w2, 0).sub(&d1(g, &w1, 1)), -1);
        let a = d1(g, &codiff, 0).add(&d1(g, &curl, 1));
        let b = d1(g, &codiff, 1).sub(&d1(g, &curl, 0));
        VectorField::new(emul(m, &a, -1).scale(-1.0), emul(m, &b, -1).scale(-1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricPreset;
    use crate::grid::{DomainSpec, Grid};
    use std::f64::consts::PI;

    #[test]
    fn shear_flow_gradient_has_single_entry() {
        let g = Grid::new(DomainSpec::torus(1.0, 1.0), 64, 64).unwrap();
        let m = ConformalMetric::flat(&g);
        let u = VectorField::from_fn(&g, |_, y| [(2.0 * PI * y).sin(), 0.0]);
        let t = covariant_derivative(&m, &u);
        assert!(t.c[0][0].max_abs() == 0.0 && t.c[1][0].max_abs() == 0.0 && t.c[1][1].max_abs() == 0.0);
        let err = (0..g.len())
            .map(|n| (t.c[0][1].data[n] - 2.0 * PI * (2.0 * PI * g.xy(n).1).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 2.0 * PI * (2.0 * PI / 64.0).powi(2) / 6.0 * 1.01);
    }

    #[test]
    fn shear_flow_inner1() {
        // ⟨u, u⟩₁ = 1/2 + 2α² · 2 · (π² cos²)·avg = 1/2 + 2π² at α = 1 (exact value).
        let mut errs = Vec::new();
        for &n in &[32usize, 64] {
            let g = Grid::new(DomainSpec::torus(1.0, 1.0), n, n).unwrap();
            let m = ConformalMetric::flat(&g);
            let u = VectorField::from_fn(&g, |_, y| [(2.0 * PI * y).sin(), 0.0]);
            errs.push((inner1(&m, 1.0, &u, &u) - (0.5 + 2.0 * PI * PI)).abs());
        }
        assert!(errs[1] < 0.3 * errs[0] && errs[1] < 0.1);
    }

    #[test]
    fn transpose_matches_plain_transpose_for_conformal_metrics() {
        let g = Grid::new(DomainSpec::torus(1.0, 1.0), 16, 16).unwrap();
        let m = ConformalMetric::from_preset(&g, MetricPreset::Bump { amplitude: 0.3 }).unwrap();
        let u = VectorField::from_fn(&g, |x, y| [(2.0 * PI * x).cos() * y.sin(), (2.0 * PI * y).sin()]);
        let t = covariant_derivative(&m, &u);
        let tt = transpose(&m, &t);
        for n in 0..g.len() {
            assert!((tt.c[0][1].data[n] - t.c[1][0].data[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn weitzenbock_matches_exterior_route_on_flat_torus() {
        let g = Grid::new(DomainSpec::torus(1.0, 1.0), 32, 32).unwrap();
        let m = ConformalMetric::flat(&g);
        let u = VectorField::from_fn(&g, |x, y| [(2.0 * PI * y).sin() * (2.0 * PI * x).cos(), (2.0 * PI * x).sin()]);
        let a = hodge_laplacian(&m, &u);
        let b = composed::hodge_laplacian_exterior(&m, &u);
        // Both approximate -4π² (or -8π²) times the field.
        assert!(a.sub(&b).max_abs() < 0.1 * 8.0 * PI * PI);
    }
}
