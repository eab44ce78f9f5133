//! Material description: flow maps, material velocities and the right-reduction map.
//!
//! A flow map is stored as nodal displacements `η(X) = X + d(X)`, a continuous lift in
//! periodic directions. Off-grid values come from tensor cubic Lagrange interpolation,
//! periodic along periodic directions and with windows shifted inward near walls.
//! The spray is realized spatially: reduce with `π_R`, project, evaluate the spatial
//! acceleration, and compose back along `η`.

use crate::calculus::{self, node_map};
use crate::dynamics::{self, LaeModel, SolverConfig, State};
use crate::elliptic::BcRegime;
use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, WallCondition};
use crate::{DynamicsError, MaterialError};

/// Newton tolerance of the inverse map, in chart coordinates relative to the domain size.
pub const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Cubic Lagrange weights and derivative weights for nodes `-1, 0, 1, 2` at `t`.
fn cubic_weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let w = [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ];
    let d = [
        -(3.0 * t * t - 6.0 * t + 2.0) / 6.0,
        (3.0 * t * t - 4.0 * t - 1.0) / 2.0,
        -(3.0 * t * t - 2.0 * t - 2.0) / 2.0,
        (3.0 * t * t - 1.0) / 6.0,
    ];
    (w, d)
}

/// Interpolation window along one axis: first index, weights, derivative weights (per unit length).
#[derive(Clone, Copy, Debug)]
struct Window {
    idx: [usize; 4],
    w: [f64; 4],
    dw: [f64; 4],
}

/// Rounds index coordinates that sit on a node up to round-off, so node values reproduce exactly.
fn snap(s: f64) -> f64 {
    let r = s.round();
    if (s - r).abs() <= 16.0 * f64::EPSILON * s.abs().max(1.0) { r } else { s }
}

fn periodic_window(s: f64, n: usize, h: f64) -> Window {
    let s = snap(s);
    let i0 = s.floor();
    let t = s - i0;
    let (w, d) = cubic_weights(t);
    let base = i0 as i64;
    let idx = [0, 1, 2, 3].map(|k| (base - 1 + k as i64).rem_euclid(n as i64) as usize);
    Window { idx, w, dw: d.map(|v| v / h) }
}

fn clamped_window(s: f64, n: usize, h: f64) -> Window {
    let s = snap(s);
    let i0 = s.floor().clamp(1.0, (n - 3) as f64);
    let t = s - i0;
    let (w, d) = cubic_weights(t);
    let base = i0 as usize;
    Window { idx: [base - 1, base, base + 1, base + 2], w, dw: d.map(|v| v / h) }
}

/// Tensor cubic interpolation on a grid.
#[derive(Clone, Copy, Debug)]
pub struct Interpolator<'a> {
    grid: &'a Grid,
}

impl<'a> Interpolator<'a> {
    pub fn new(grid: &'a Grid) -> Self {
        Interpolator { grid }
    }

    fn windows(&self, x: f64, y: f64) -> (Window, Window) {
        let g = self.grid;
        let wx = periodic_window(x / g.hx(), g.nx(), g.hx());
        let wy = if g.periodic_y() { periodic_window(y / g.hy(), g.ny(), g.hy()) } else { clamped_window(y / g.hy(), g.ny(), g.hy()) };
        (wx, wy)
    }

    /// Value and gradient of the interpolant of `f` at `(x, y)`.
    pub fn eval_grad(&self, f: &ScalarField, x: f64, y: f64) -> (f64, [f64; 2]) {
        let (wx, wy) = self.windows(x, y);
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for b in 0..4 {
            let row = wy.idx[b] * self.grid.nx();
            let (mut r, mut rx) = (0.0, 0.0);
            for a in 0..4 {
                let fv = f.data[row + wx.idx[a]];
                r += wx.w[a] * fv;
                rx += wx.dw[a] * fv;
            }
            v += wy.w[b] * r;
            gx += wy.w[b] * rx;
            gy += wy.dw[b] * r;
        }
        (v, [gx, gy])
    }

    /// Value of the interpolant of `f` at `(x, y)`.
    pub fn eval(&self, f: &ScalarField, x: f64, y: f64) -> f64 {
        self.eval_grad(f, x, y).0
    }

    /// Samples a vector field at the given points.
    pub fn sample(&self, u: &VectorField, pts: &[[f64; 2]]) -> VectorField {
        let vals = node_map(pts.len(), |n| [self.eval(&u.c[0], pts[n][0], pts[n][1]), self.eval(&u.c[1], pts[n][0], pts[n][1])]);
        VectorField::from_nodes(self.grid, |n| vals[n])
    }
}

/// Orientation-preserving map `η(X) = X + d(X)` sampled at the nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMap {
    pub displacement: VectorField,
}

impl FlowMap {
    pub fn identity(grid: &Grid) -> Self {
        FlowMap { displacement: VectorField::zeros(grid) }
    }

    /// `η(X_n)`, lifted (not wrapped).
    pub fn positions(&self, grid: &Grid) -> Vec<[f64; 2]> {
        (0..grid.len())
            .map(|n| {
                let (x, y) = grid.xy(n);
                [x + self.displacement.c[0].data[n], y + self.displacement.c[1].data[n]]
            })
            .collect()
    }

    /// Determinant of `Dη` at the nodes, from stencil derivatives of the displacement.
    pub fn jacobian_det(&self, grid: &Grid) -> ScalarField {
        let d = &self.displacement;
        let dx0 = grid.apply_partial(&d.c[0].data, 1, 0);
        let dy0 = grid.apply_partial(&d.c[0].data, 0, 1);
        let dx1 = grid.apply_partial(&d.c[1].data, 1, 0);
        let dy1 = grid.apply_partial(&d.c[1].data, 0, 1);
        ScalarField::from_vec(grid, (0..grid.len()).map(|n| (1.0 + dx0[n]) * (1.0 + dy1[n]) - dy0[n] * dx1[n]).collect())
    }

    /// Checks orientation at every node.
    pub fn check_invertible(&self, grid: &Grid) -> Result<(), MaterialError> {
        let det = self.jacobian_det(grid);
        match det.data.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            Some((node, &det)) => Err(MaterialError::NotInvertible { node, det }),
            None => Ok(()),
        }
    }

    /// Solves `η(X) = p` for every node position `p` by Newton iteration.
    pub fn inverse_points(&self, grid: &Grid) -> Result<Vec<[f64; 2]>, MaterialError> {
        let ip = Interpolator::new(grid);
        let spec = *grid.spec();
        let scale = spec.lx.max(spec.ly);
        let d = &self.displacement;
        let res: Vec<Result<[f64; 2], MaterialError>> = node_map(grid.len(), |n| {
            let (px, py) = grid.xy(n);
            let mut x = [px - ip.eval(&d.c[0], px, py), py - ip.eval(&d.c[1], px, py)];
            let mut r = f64::INFINITY;
            for _ in 0..NEWTON_MAX_ITER {
                let (d0, g0) = ip.eval_grad(&d.c[0], x[0], x[1]);
                let (d1, g1) = ip.eval_grad(&d.c[1], x[0], x[1]);
                let f = [x[0] + d0 - px, x[1] + d1 - py];
                r = f[0].abs().max(f[1].abs());
                if r <= NEWTON_TOL * scale {
                    break;
                }
                let j = [[1.0 + g0[0], g0[1]], [g1[0], 1.0 + g1[1]]];
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if !(det > 0.0) {
                    return Err(MaterialError::NotInvertible { node: n, det });
                }
                x[0] -= (j[1][1] * f[0] - j[0][1] * f[1]) / det;
                x[1] -= (-j[1][0] * f[0] + j[0][0] * f[1]) / det;
            }
            if r > NEWTON_TOL * scale {
                return Err(MaterialError::InversionFailed { node: n, residual: r });
            }
            if !grid.periodic_y() {
                let tol = 1e-9 * spec.ly;
                if x[1] < -tol || x[1] > spec.ly + tol {
                    return Err(MaterialError::LeftDomain(n));
                }
                x[1] = x[1].clamp(0.0, spec.ly);
            }
            Ok(x)
        });
        res.into_iter().collect()
    }
}

/// Flow map together with the material velocity `V = η̇`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialState {
    pub eta: FlowMap,
    pub v: VectorField,
    pub t: f64,
    pub step: u64,
}

impl MaterialState {
    /// `(id, u)`.
    pub fn from_spatial(grid: &Grid, u: &VectorField) -> Self {
        MaterialState { eta: FlowMap::identity(grid), v: u.clone(), t: 0.0, step: 0 }
    }
}

/// Zeroes the normal component on walls and the full field on no-slip walls.
fn enforce_tangency(grid: &Grid, regime: BcRegime, u: &mut VectorField) {
    for n in 0..grid.len() {
        if let Some(w) = grid.wall_of(n) {
            u.c[1].data[n] = 0.0;
            if regime.condition(w) == Some(WallCondition::Dirichlet) {
                u.c[0].data[n] = 0.0;
            }
        }
    }
}

/// `π_R(η, V) = V ∘ η^{-1}` at the nodes, with wall conditions restored after interpolation.
pub fn pi_r(model: &LaeModel, ms: &MaterialState) -> Result<VectorField, MaterialError> {
    let g = model.metric().grid();
    let inv = ms.eta.inverse_points(g)?;
    let mut u = Interpolator::new(g).sample(&ms.v, &inv);
    enforce_tangency(g, model.regime(), &mut u);
    Ok(u)
}

/// Coordinate derivative `(Du) u`, i.e. `∇_u u` without the Christoffel term.
pub fn coordinate_advection(grid: &Grid, u: &VectorField) -> VectorField {
    let p: Vec<[Vec<f64>; 2]> = (0..2).map(|c| [grid.apply_partial(&u.c[c].data, 1, 0), grid.apply_partial(&u.c[c].data, 0, 1)]).collect();
    VectorField::from_nodes(grid, |n| {
        let (a, b) = (u.c[0].data[n], u.c[1].data[n]);
        [a * p[0][0][n] + b * p[0][1][n], a * p[1][0][n] + b * p[1][1][n]]
    })
}

/// Spatial velocity of a material state, projected into the constrained space.
pub fn reduced_velocity(model: &LaeModel, ms: &MaterialState) -> Result<VectorField, MaterialError> {
    Ok(model.projector().project(&pi_r(model, ms)?)?)
}

/// Material acceleration `V̇ = (∂_t u + (Du) u) ∘ η` with `u = P_e π_R(η, V)`.
fn material_rhs(model: &LaeModel, eta: &FlowMap, v: &VectorField) -> Result<VectorField, MaterialError> {
    let g = model.metric().grid();
    let ms = MaterialState { eta: eta.clone(), v: v.clone(), t: 0.0, step: 0 };
    let u = reduced_velocity(model, &ms)?;
    let a = dynamics::rhs_unchecked(model, &u)?.add(&coordinate_advection(g, &u));
    let pts = eta.positions(g);
    let mut acc = Interpolator::new(g).sample(&a, &pts);
    for n in 0..g.len() {
        if g.wall_of(n).is_some() {
            acc.c[1].data[n] = 0.0;
        }
    }
    Ok(acc)
}

/// One RK4 step of `(η̇, V̇) = (V, V̇(η, V))`.
pub fn spray_advance(model: &LaeModel, dt: f64, ms: &MaterialState) -> Result<MaterialState, MaterialError> {
    let g = model.metric().grid();
    let d0 = &ms.eta.displacement;
    let v0 = &ms.v;
    let eta_at = |d: VectorField| FlowMap { displacement: d };
    let k1v = material_rhs(model, &ms.eta, v0)?;
    let k1d = v0.clone();
    let (d2, v2) = (d0.axpy(0.5 * dt, &k1d), v0.axpy(0.5 * dt, &k1v));
    let k2v = material_rhs(model, &eta_at(d2), &v2)?;
    let k2d = v2;
    let (d3, v3) = (d0.axpy(0.5 * dt, &k2d), v0.axpy(0.5 * dt, &k2v));
    let k3v = material_rhs(model, &eta_at(d3), &v3)?;
    let k3d = v3;
    let (d4, v4) = (d0.axpy(dt, &k3d), v0.axpy(dt, &k3v));
    let k4v = material_rhs(model, &eta_at(d4), &v4)?;
    let k4d = v4;
    let comb = |a: &VectorField, b: &VectorField, c: &VectorField, d: &VectorField| a.add(&b.scale(2.0)).add(&c.scale(2.0)).add(d);
    let d = d0.axpy(dt / 6.0, &comb(&k1d, &k2d, &k3d, &k4d));
    let v = v0.axpy(dt / 6.0, &comb(&k1v, &k2v, &k3v, &k4v));
    let eta = FlowMap { displacement: d };
    eta.check_invertible(g)?;
    if !v.max_abs().is_finite() {
        return Err(MaterialError::Dynamics(DynamicsError::NonFinite(ms.t + dt)));
    }
    Ok(MaterialState { eta, v, t: ms.t + dt, step: ms.step + 1 })
}

/// `max_n |det Dη · e^{2φ(η)} / e^{2φ} - 1|`.
pub fn volume_distortion(model: &LaeModel, eta: &FlowMap) -> f64 {
    let m = model.metric();
    let g = m.grid();
    let det = eta.jacobian_det(g);
    let pts = eta.positions(g);
    let ip = Interpolator::new(g);
    let phi = m.phi();
    (0..g.len())
        .map(|n| {
            let ratio = (2.0 * (ip.eval(phi, pts[n][0], pts[n][1]) - phi.data[n])).exp();
            (det.data[n] * ratio - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// `½ 𝒢¹(η)(V, V) = ½ ⟨π_R(V), π_R(V)⟩₁`.
pub fn material_energy(model: &LaeModel, ms: &MaterialState) -> Result<f64, MaterialError> {
    let u = pi_r(model, ms)?;
    Ok(dynamics::energy(model.metric(), model.alpha(), &u))
}

/// `K¹(Tu ∘ v)`: `P_e(∇_v u + 𝔉^α(u, v))`, with `∇_v u` replaced by `L^α ∇_v u` when a
/// free-slip wall is present.
pub fn connector_contract(model: &LaeModel, u: &VectorField, v: &VectorField) -> Result<VectorField, MaterialError> {
    let m = model.metric();
    let mut a = calculus::nabla(m, v, u);
    if model.regime().has_neumann() {
        a = model.op().l_alpha(&a)?;
    }
    let f = dynamics::frak_f_alpha(model, u, v)?;
    Ok(model.projector().project(&a.add(&f))?)
}

/// Discrepancy between spatial evolution and material evolution followed by reduction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommuteReport {
    /// `max|ũ - π_R(η, V)| / max|u₀|`.
    pub discrepancy: f64,
    /// Volume distortion of the final flow map.
    pub volume_error: f64,
    /// Relative change of the material energy.
    pub energy_drift: f64,
    pub steps: u64,
}

/// Evolves `u0` to time `t` along both paths with step `dt`.
pub fn commute_check(model: &LaeModel, u0: &VectorField, t: f64, dt: f64) -> Result<CommuteReport, MaterialError> {
    let g = model.metric().grid();
    let cfg = SolverConfig::new(dt, t);
    let (spatial, _) = dynamics::integrate(model, &cfg, &State::new(u0.clone()), 0)?;
    let steps = cfg.steps_from(0.0);
    let mut ms = MaterialState::from_spatial(g, u0);
    let e0 = material_energy(model, &ms)?;
    for _ in 0..steps {
        ms = spray_advance(model, dt, &ms)?;
    }
    let u = pi_r(model, &ms)?;
    let scale = u0.max_abs();
    let discrepancy = if scale == 0.0 { spatial.u.sub(&u).max_abs() } else { spatial.u.sub(&u).max_abs() / scale };
    let e1 = material_energy(model, &ms)?;
    let energy_drift = if e0 == 0.0 { (e1 - e0).abs() } else { (e1 - e0).abs() / e0 };
    Ok(CommuteReport { discrepancy, volume_error: volume_distortion(model, &ms.eta), energy_drift, steps })
}
