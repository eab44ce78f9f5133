//! Nonlinear LAE-α operators, right-hand sides and time integration.
//!
//! Every operator of the form `(1 - α² 𝓛)^{-1} α² S(u)` evaluates the source `S` node by
//! node from jets of `u` and then applies one strong-form solve. [`f_alpha_alt`] evaluates
//! the second representation of `𝓕^α` by differencing intermediate grid fields instead,
//! so the two agree only up to the truncation error.

use std::sync::Arc;

use crate::calculus::{self, composed, eval_vector, vector_jets};
use crate::elliptic::{bc_residual, BcRegime, EllipticOperator, GradientRemover, StokesProjector};
use crate::field::{ScalarField, Tensor11Field, VectorField};
use crate::geometry::{BoundaryData, ConformalMetric};
use crate::local::{self, V};
use crate::{DynamicsError, EllipticError};

/// Default CFL factor on `max|u| dt / h`.
pub const DEFAULT_CFL: f64 = 0.5;
/// Relative tolerance of the state contract: `h |div u| / max|u|` and BC rows.
pub const STATE_TOL: f64 = 1e-8;

/// Operators of one `(metric, regime, α)` triple.
#[derive(Debug)]
pub struct LaeModel {
    metric: Arc<ConformalMetric>,
    boundary: BoundaryData,
    regime: BcRegime,
    alpha: f64,
    op: EllipticOperator,
    sp: StokesProjector,
}

impl LaeModel {
    pub fn new(metric: Arc<ConformalMetric>, regime: BcRegime, alpha: f64) -> Result<Self, EllipticError> {
        let boundary = BoundaryData::new(&metric);
        let op = EllipticOperator::new(metric.clone(), regime, alpha)?;
        let sp = StokesProjector::new(metric.clone(), regime, alpha)?;
        Ok(LaeModel { metric, boundary, regime, alpha, op, sp })
    }

    /// Model on the regime implied by the metric's domain.
    pub fn for_domain(metric: Arc<ConformalMetric>, alpha: f64) -> Result<Self, EllipticError> {
        let regime = BcRegime::from_domain(metric.grid().spec());
        Self::new(metric, regime, alpha)
    }

    pub fn metric(&self) -> &Arc<ConformalMetric> {
        &self.metric
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn regime(&self) -> BcRegime {
        self.regime
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn op(&self) -> &EllipticOperator {
        &self.op
    }

    pub fn projector(&self) -> &StokesProjector {
        &self.sp
    }

    /// `(1 - α² 𝓛)^{-1} α² S` with `S` given per node.
    fn solve_source(&self, src: impl Fn(usize) -> V + Sync + Send) -> Result<VectorField, EllipticError> {
        let m = &*self.metric;
        if self.alpha == 0.0 {
            return Ok(VectorField::zeros(m.grid()));
        }
        let s = eval_vector(m, src).scale(self.alpha * self.alpha);
        self.op.solve(&s)
    }

    /// Checks that `u` lies in the discrete constrained space.
    pub fn check_state(&self, u: &VectorField) -> Result<(), DynamicsError> {
        let scale = u.max_abs();
        if !scale.is_finite() {
            return Err(DynamicsError::NonFinite(f64::NAN));
        }
        if scale == 0.0 {
            return Ok(());
        }
        let div = self.sp.divergence_residual(u) * self.metric.grid().h() / scale;
        let bc = if self.regime == BcRegime::Periodic { 0.0 } else { bc_residual(&self.metric, &self.boundary, self.regime, u) / scale };
        if div > STATE_TOL || bc > STATE_TOL {
            return Err(DynamicsError::InvalidConfig(format!("state violates constraints: div {div:e}, bc {bc:e}")));
        }
        Ok(())
    }
}

/// `𝓤^α(u)`.
pub fn u_alpha(model: &LaeModel, u: &VectorField) -> Result<VectorField, EllipticError> {
    let m = &*model.metric;
    let uj = vector_jets(m.grid(), u, 2);
    model.solve_source(|n| local::u_alpha_source(m.local(n), &uj[n]))
}

/// `𝓡^α(u)`.
pub fn r_alpha(model: &LaeModel, u: &VectorField) -> Result<VectorField, EllipticError> {
    let m = &*model.metric;
    if m.is_flat() {
        return Ok(VectorField::zeros(m.grid()));
    }
    let uj = vector_jets(m.grid(), u, 2);
    model.solve_source(|n| local::r_alpha_source(m.local(n), &uj[n]))
}

/// `𝓕^α(u) = 𝓤^α(u) + 𝓡^α(u)`, with one solve.
pub fn f_alpha(model: &LaeModel, u: &VectorField) -> Result<VectorField, EllipticError> {
    let m = &*model.metric;
    let uj = vector_jets(m.grid(), u, 2);
    let flat = m.is_flat();
    model.solve_source(|n| {
        let l = m.local(n);
        let s = local::u_alpha_source(l, &uj[n]);
        if flat {
            s
        } else {
            local::vadd(&s, &local::r_alpha_source(l, &uj[n]))
        }
    })
}

/// `𝓓^α(u, v)`.
pub fn d_alpha(model: &LaeModel, u: &VectorField, v: &VectorField) -> Result<VectorField, EllipticError> {
    let m = &*model.metric;
    let (uj, vj) = (vector_jets(m.grid(), u, 2), vector_jets(m.grid(), v, 2));
    model.solve_source(|n| local::d_alpha_source(m.local(n), &uj[n], &vj[n]))
}

fn tensor_at(t: &Tensor11Field, n: usize) -> [[f64; 2]; 2] {
    t.at(n)
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

/// `𝓕^α(u) = 𝓓^α(u, u) - (1 - α² 𝓛)^{-1} α² (grad F(u) + ∇u^t Δ_r u)`, evaluated by
/// differencing grid fields of `∇u`, the tensor products and the scalars.
pub fn f_alpha_alt(model: &LaeModel, u: &VectorField) -> Result<VectorField, EllipticError> {
    let m = &*model.metric;
    let g = m.grid();
    if model.alpha == 0.0 {
        return Ok(VectorField::zeros(g));
    }
    let du = calculus::covariant_derivative(m, u);
    let dut = calculus::transpose(m, &du);
    // Div(∇u ∇u^t + ∇u ∇u) + Div(R(·, u) u).
    let prod = Tensor11Field::from_nodes(g, |n| {
        let (a, at) = (tensor_at(&du, n), tensor_at(&dut, n));
        let (p, q) = (mat_mul(&a, &at), mat_mul(&a, &a));
        // R(X, u) u = K (g(u, u) X - g(X, u) u).
        let l = m.local(n);
        let (k, e2) = (l.k.value(), l.e2.value());
        let uu = u.at(n);
        let guu = e2 * (uu[0] * uu[0] + uu[1] * uu[1]);
        let mut s = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let r = k * (if i == j { guu } else { 0.0 } - uu[i] * e2 * uu[j]);
                s[i][j] = p[i][j] + q[i][j] + r;
            }
        }
        s
    });
    let div_part = composed::tensor_divergence(m, &prod);
    // Scalars: Tr(∇u ∇u) + Ricci(u, u) enters through 𝓓, F(u) with a minus sign.
    let d_scalar = ScalarField::from_vec(
        g,
        (0..g.len())
            .map(|n| {
                let a = tensor_at(&du, n);
                let aa = mat_mul(&a, &a);
                let l = m.local(n);
                let uu = [u.c[0].data[n], u.c[1].data[n]];
                aa[0][0] + aa[1][1] + l.k.value() * l.e2.value() * (uu[0] * uu[0] + uu[1] * uu[1])
            })
            .collect(),
    );
    let f_scalar = ScalarField::from_vec(
        g,
        (0..g.len())
            .map(|n| {
                let a = tensor_at(&du, n);
                let at = tensor_at(&dut, n);
                let ata = mat_mul(&at, &a);
                d_scalar.data[n] + 0.5 * (ata[0][0] + ata[1][1])
            })
            .collect(),
    );
    let grad_part = composed::gradient(m, &d_scalar.sub(&f_scalar));
    // Δ_r u = Div(∇u) + K u.
    let lap = composed::tensor_divergence(m, &du);
    let src = VectorField::from_nodes(g, |n| {
        let l = m.local(n);
        let uu = [u.c[0].data[n], u.c[1].data[n]];
        let a = tensor_at(&du, n);
        let at = tensor_at(&dut, n);
        let k = l.k.value();
        let dk = [l.k.partial(1, 0), l.k.partial(0, 1)];
        let lr = [lap.c[0].data[n] + k * uu[0], lap.c[1].data[n] + k * uu[1]];
        // Σ R(e_a, u)(∇_{e_a} u) = K (∇u^t u - Tr(∇u) u).
        let tr = a[0][0] + a[1][1];
        let first = [k * (at[0][0] * uu[0] + at[0][1] * uu[1] - tr * uu[0]), k * (at[1][0] * uu[0] + at[1][1] * uu[1] - tr * uu[1])];
        // (∇_u Ric) u = dK(u) u.
        let dku = dk[0] * uu[0] + dk[1] * uu[1];
        let tl = [at[0][0] * lr[0] + at[0][1] * lr[1], at[1][0] * lr[0] + at[1][1] * lr[1]];
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = div_part.c[i].data[n] + first[i] + grad_part.c[i].data[n] - dku * uu[i] - tl[i];
        }
        out
    });
    model.op.solve(&src.scale(model.alpha * model.alpha))
}

/// `B^α(v, w) = P_e (1 - α² 𝓛)^{-1} (∇w^t (1 - α² Δ_r) v)`.
pub fn b_alpha(model: &LaeModel, v: &VectorField, w: &VectorField) -> Result<VectorField, EllipticError> {
    let m = &*model.metric;
    let a2 = model.alpha * model.alpha;
    let (vj, wj) = (vector_jets(m.grid(), v, 2), vector_jets(m.grid(), w, 1));
    let s = eval_vector(m, |n| {
        let l = m.local(n);
        local::transpose_grad_apply(l, &wj[n], &local::helmholtz_r(l, a2, &vj[n]))
    });
    model.sp.project(&model.op.solve(&s)?)
}

/// `𝔉^α(u, v)` from the closed form in `𝓓^α`, the polarized scalar and the mixed transpose terms.
pub fn frak_f_alpha(model: &LaeModel, u: &VectorField, v: &VectorField) -> Result<VectorField, EllipticError> {
    let m = &*model.metric;
    let (uj, vj) = (vector_jets(m.grid(), u, 2), vector_jets(m.grid(), v, 2));
    model.solve_source(|n| {
        let l = m.local(n);
        let (a, b) = (&uj[n], &vj[n]);
        let d = local::vadd(&local::d_alpha_source(l, a, b), &local::d_alpha_source(l, b, a));
        let s = local::vadd(a, b);
        let gp = local::f_scalar(l, &s) - local::f_scalar(l, a) - local::f_scalar(l, b);
        let mut t = local::grad(l, &gp);
        t = local::vadd(&t, &local::transpose_grad_apply(l, a, &local::laplace_r(l, b)));
        t = local::vadd(&t, &local::transpose_grad_apply(l, b, &local::laplace_r(l, a)));
        local::vscalef(&local::vsub(&d, &t), 0.5)
    })
}

/// `𝔉^α(u, v)` by polarization of [`f_alpha`].
pub fn frak_f_alpha_polar(model: &LaeModel, u: &VectorField, v: &VectorField) -> Result<VectorField, EllipticError> {
    let fuv = f_alpha(model, &u.add(v))?;
    let fu = f_alpha(model, u)?;
    let fv = f_alpha(model, v)?;
    Ok(fuv.sub(&fu).sub(&fv).scale(0.5))
}

fn advect(model: &LaeModel, u: &VectorField) -> VectorField {
    calculus::nabla(&model.metric, u, u)
}

/// `-P_e(∇_u u + 𝓕^α(u))`.
pub fn rhs_dirichlet(model: &LaeModel, u: &VectorField) -> Result<VectorField, DynamicsError> {
    model.check_state(u)?;
    rhs_dirichlet_unchecked(model, u)
}

fn rhs_dirichlet_unchecked(model: &LaeModel, u: &VectorField) -> Result<VectorField, DynamicsError> {
    let f = f_alpha(model, u)?;
    Ok(model.sp.project(&advect(model, u).add(&f))?.neg())
}

/// `-P_e(L^α ∇_u u + 𝓕^α(u))` with `L^α = (1 - α² 𝓛)^{-1} (1 - α² 𝓛)`.
pub fn rhs_mixed(model: &LaeModel, u: &VectorField) -> Result<VectorField, DynamicsError> {
    model.check_state(u)?;
    rhs_mixed_unchecked(model, u)
}

fn rhs_mixed_unchecked(model: &LaeModel, u: &VectorField) -> Result<VectorField, DynamicsError> {
    let f = f_alpha(model, u)?;
    let a = model.op.l_alpha(&advect(model, u))?;
    Ok(model.sp.project(&a.add(&f))?.neg())
}

/// `-P_e(∇_u u)`: the Euler right-hand side; `model` must have `α = 0`.
pub fn rhs_euler(model: &LaeModel, u: &VectorField) -> Result<VectorField, DynamicsError> {
    if model.alpha != 0.0 {
        return Err(DynamicsError::InvalidConfig("the Euler right-hand side needs a model with alpha = 0".into()));
    }
    model.check_state(u)?;
    Ok(model.sp.project(&advect(model, u))?.neg())
}

/// Right-hand side of the model's regime: the mixed form whenever a free-slip wall is present.
pub fn rhs(model: &LaeModel, u: &VectorField) -> Result<VectorField, DynamicsError> {
    model.check_state(u)?;
    rhs_unchecked(model, u)
}

/// [`rhs`] without the constraint check on `u`.
pub fn rhs_unchecked(model: &LaeModel, u: &VectorField) -> Result<VectorField, DynamicsError> {
    if model.regime.has_neumann() {
        rhs_mixed_unchecked(model, u)
    } else {
        rhs_dirichlet_unchecked(model, u)
    }
}

/// Residual of `(1 - α² Δ_r) ∂_t u + ∇_u[(1 - α² Δ_r) u] - α² ∇u^t Δ_r u = -grad p` after
/// removing the `L²`-orthogonal gradient part: returns the `L²` norm of the remainder.
pub fn eq2_residual(model: &LaeModel, u: &VectorField, dudt: &VectorField) -> Result<f64, EllipticError> {
    let m = &*model.metric;
    let a2 = model.alpha * model.alpha;
    let (uj, dj) = (vector_jets(m.grid(), u, 3), vector_jets(m.grid(), dudt, 2));
    let lhs = eval_vector(m, |n| {
        let l = m.local(n);
        let mut s = local::helmholtz_r(l, a2, &dj[n]);
        s = local::vadd(&s, &local::nabla(l, &uj[n], &local::helmholtz_r(l, a2, &uj[n])));
        let t = local::transpose_grad_apply(l, &uj[n], &local::laplace_r(l, &uj[n]));
        local::vsub(&s, &local::vscalef(&t, a2))
    });
    let rem = GradientRemover::new(model.metric.clone())?.remove(&lhs)?;
    Ok(calculus::norm0(m, &rem))
}

/// `h(u) = ½ ⟨u, u⟩₁`.
pub fn energy(m: &ConformalMetric, alpha: f64, u: &VectorField) -> f64 {
    0.5 * calculus::inner1(m, alpha, u, u)
}

/// Time integrator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    /// Classical fourth-order Runge–Kutta.
    Rk4,
    /// Implicit midpoint rule, solved by fixed-point iteration.
    Midpoint,
}

impl Integrator {
    pub fn name(&self) -> &'static str {
        match self {
            Integrator::Rk4 => "rk4",
            Integrator::Midpoint => "midpoint",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rk4" => Some(Integrator::Rk4),
            "midpoint" => Some(Integrator::Midpoint),
            _ => None,
        }
    }
}

/// Time-stepping parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub cfl_factor: f64,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SolverConfig { dt, t_end, integrator: Integrator::Rk4, cfl_factor: DEFAULT_CFL }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(DynamicsError::InvalidConfig(format!("dt = {}", self.dt)));
        }
        if !(self.cfl_factor > 0.0) {
            return Err(DynamicsError::InvalidConfig(format!("cfl_factor = {}", self.cfl_factor)));
        }
        if !self.t_end.is_finite() {
            return Err(DynamicsError::InvalidConfig(format!("t_end = {}", self.t_end)));
        }
        Ok(())
    }

    /// Number of whole steps from `t0` to `t_end`.
    pub fn steps_from(&self, t0: f64) -> u64 {
        ((self.t_end - t0) / self.dt).round().max(0.0) as u64
    }
}

/// Velocity at a step of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: VectorField,
    pub t: f64,
    pub step: u64,
}

impl State {
    pub fn new(u: VectorField) -> Self {
        State { u, t: 0.0, step: 0 }
    }
}

fn cfl_bound(model: &LaeModel, cfg: &SolverConfig, u: &VectorField) -> f64 {
    let umax = u.max_abs();
    if umax == 0.0 {
        f64::INFINITY
    } else {
        cfg.cfl_factor * model.metric.grid().h() / umax
    }
}

/// One step of size `cfg.dt` followed by re-projection.
pub fn step(model: &LaeModel, cfg: &SolverConfig, state: &State) -> Result<State, DynamicsError> {
    let bound = cfl_bound(model, cfg, &state.u);
    if cfg.dt.abs() > bound {
        return Err(DynamicsError::CflViolation { dt: cfg.dt, bound });
    }
    let dt = cfg.dt;
    let u = &state.u;
    let next = match cfg.integrator {
        Integrator::Rk4 => {
            let k1 = rhs_unchecked(model, u)?;
            let k2 = rhs_unchecked(model, &u.axpy(0.5 * dt, &k1))?;
            let k3 = rhs_unchecked(model, &u.axpy(0.5 * dt, &k2))?;
            let k4 = rhs_unchecked(model, &u.axpy(dt, &k3))?;
            let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
            u.axpy(dt / 6.0, &incr)
        }
        Integrator::Midpoint => {
            let mut k = rhs_unchecked(model, u)?;
            for _ in 0..60 {
                let mid = u.axpy(0.5 * dt, &k);
                let kn = rhs_unchecked(model, &mid)?;
                let d = kn.sub(&k).max_abs();
                k = kn;
                if d <= 1e-14 * k.max_abs().max(f64::MIN_POSITIVE) {
                    break;
                }
            }
            u.axpy(dt, &k)
        }
    };
    let next = model.sp.project(&next)?;
    let t = state.t + dt;
    if !next.max_abs().is_finite() {
        return Err(DynamicsError::NonFinite(t));
    }
    Ok(State { u: next, t, step: state.step + 1 })
}

/// Diagnostics recorded along a trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub divergence: Vec<f64>,
}

/// Integrates until `cfg.t_end`, recording diagnostics every `every` steps and at the end.
pub fn integrate(model: &LaeModel, cfg: &SolverConfig, state: &State, every: u64) -> Result<(State, Trajectory), DynamicsError> {
    cfg.validate()?;
    model.check_state(&state.u)?;
    let n = cfg.steps_from(state.t);
    let mut s = state.clone();
    let mut tr = Trajectory::default();
    let record = |tr: &mut Trajectory, s: &State| {
        tr.times.push(s.t);
        tr.energies.push(energy(&model.metric, model.alpha, &s.u));
        tr.divergence.push(model.sp.divergence_residual(&s.u));
    };
    record(&mut tr, &s);
    for k in 1..=n {
        s = step(model, cfg, &s)?;
        if k == n || (every > 0 && k % every == 0) {
            record(&mut tr, &s);
        }
    }
    Ok((s, tr))
}

/// Relative energy drift `max_t |h(t) - h(0)| / h(0)`.
pub fn energy_drift(tr: &Trajectory) -> f64 {
    let h0 = tr.energies[0];
    tr.energies.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max) / h0.abs().max(f64::MIN_POSITIVE)
}
