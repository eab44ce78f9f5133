//! Observables on the discrete constrained space, the Lie–Poisson bracket
//! `{f, g}(u) = ⟨u, [δg(u), δf(u)]⟩₁` and its structural checks.
//!
//! Observables form a closed catalog whose functional derivative `δf(u)` (the `⟨,⟩₁`-gradient
//! within the constrained space) and its derivative `Dδf(u)` are available in closed form.

use rayon::prelude::*;

use crate::calculus::{self, inner1, jacobi_lie_bracket};
use crate::dynamics::{self, Integrator, LaeModel, SolverConfig, State};
use crate::field::{ScalarField, VectorField};
use crate::material::{self, Interpolator, MaterialState};
use crate::{DynamicsError, EllipticError, PoissonError};

/// Maximum nesting of [`Observable::Product`].
pub const MAX_PRODUCT_DEPTH: usize = 4;

/// Relative drop tolerance when orthogonalizing candidate basis vectors.
const BASIS_DROP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// `f(u) = ⟨w, u⟩₁`.
    Linear { w: VectorField },
    /// `f(u) = ½ ⟨χ u, u⟩₀` for a cutoff `χ`.
    Quadratic { chi: ScalarField },
    /// `h(u) = ½ ⟨u, u⟩₁`.
    Hamiltonian,
    /// Pointwise product of two observables.
    Product(Box<Observable>, Box<Observable>),
}

impl Observable {
    pub fn linear(w: VectorField) -> Self {
        Observable::Linear { w }
    }

    pub fn quadratic(chi: ScalarField) -> Self {
        Observable::Quadratic { chi }
    }

    pub fn product(f: Observable, g: Observable) -> Result<Self, PoissonError> {
        let p = Observable::Product(Box::new(f), Box::new(g));
        if p.depth() > MAX_PRODUCT_DEPTH {
            return Err(PoissonError::TooDeep(MAX_PRODUCT_DEPTH));
        }
        Ok(p)
    }

    /// Product nesting depth; zero for the catalog leaves.
    pub fn depth(&self) -> usize {
        match self {
            Observable::Product(f, g) => 1 + f.depth().max(g.depth()),
            _ => 0,
        }
    }

    /// Whether `Dδf` vanishes identically.
    pub fn is_affine(&self) -> bool {
        matches!(self, Observable::Linear { .. })
    }

    pub fn value(&self, model: &LaeModel, u: &VectorField) -> f64 {
        let m = model.metric();
        match self {
            Observable::Linear { w } => inner1(m, model.alpha(), w, u),
            Observable::Quadratic { chi } => 0.5 * calculus::inner0(m, &scale_by(chi, u), u),
            Observable::Hamiltonian => dynamics::energy(m, model.alpha(), u),
            Observable::Product(f, g) => f.value(model, u) * g.value(model, u),
        }
    }

    /// `δf(u)`: the constrained field with `⟨δf(u), v⟩₁ = Df(u) v` for constrained `v`.
    pub fn derivative(&self, model: &LaeModel, u: &VectorField) -> Result<VectorField, PoissonError> {
        let sp = model.projector();
        Ok(match self {
            Observable::Linear { w } => sp.project(w)?,
            Observable::Quadratic { chi } => sp.riesz_project(&sp.l2_covector(&scale_by(chi, u)))?,
            Observable::Hamiltonian => u.clone(),
            Observable::Product(f, g) => {
                let (fv, gv) = (f.value(model, u), g.value(model, u));
                f.derivative(model, u)?.scale(gv).axpy(fv, &g.derivative(model, u)?)
            }
        })
    }

    /// `Dδf(u)(v)`.
    pub fn second_derivative(&self, model: &LaeModel, u: &VectorField, v: &VectorField) -> Result<VectorField, PoissonError> {
        let m = model.metric();
        let sp = model.projector();
        Ok(match self {
            Observable::Linear { .. } => VectorField::zeros(m.grid()),
            Observable::Quadratic { chi } => sp.riesz_project(&sp.l2_covector(&scale_by(chi, v)))?,
            Observable::Hamiltonian => v.clone(),
            Observable::Product(f, g) => {
                let (fv, gv) = (f.value(model, u), g.value(model, u));
                let (df, dg) = (f.derivative(model, u)?, g.derivative(model, u)?);
                let a = model.alpha();
                let mut out = f.second_derivative(model, u, v)?.scale(gv);
                out = out.axpy(inner1(m, a, &dg, v), &df);
                out = out.axpy(inner1(m, a, &df, v), &dg);
                out.axpy(fv, &g.second_derivative(model, u, v)?)
            }
        })
    }
}

fn scale_by(chi: &ScalarField, u: &VectorField) -> VectorField {
    VectorField::new(chi.zip(&u.c[0], |a, b| a * b), chi.zip(&u.c[1], |a, b| a * b))
}

/// `⟨u, [b, a]⟩₁` for given derivative fields `a = δf`, `b = δg`.
pub fn bracket_fields(model: &LaeModel, u: &VectorField, df: &VectorField, dg: &VectorField) -> f64 {
    let m = model.metric();
    inner1(m, model.alpha(), u, &jacobi_lie_bracket(m, dg, df))
}

/// `{f, g}(u) = ⟨u, [δg(u), δf(u)]⟩₁`.
pub fn bracket(model: &LaeModel, f: &Observable, g: &Observable, u: &VectorField) -> Result<f64, PoissonError> {
    model.check_state(u)?;
    let (df, dg) = (f.derivative(model, u)?, g.derivative(model, u)?);
    Ok(bracket_fields(model, u, &df, &dg))
}

/// `K_a = P_e(L ∇_a u + 𝓓^α(a, u)) + B^α(u, a)`, the field with `⟨u, [b, a]⟩₁ = ⟨K_a, b⟩₁`
/// for constrained `b`. `L = L^α` when a free-slip wall is present, the identity otherwise.
pub fn coadjoint_drift(model: &LaeModel, u: &VectorField, a: &VectorField) -> Result<VectorField, EllipticError> {
    let m = model.metric();
    let mut t = calculus::nabla(m, a, u);
    if model.regime().has_neumann() {
        t = model.op().l_alpha(&t)?;
    }
    let t = t.add(&dynamics::d_alpha(model, a, u)?);
    Ok(model.projector().project(&t)?.add(&dynamics::b_alpha(model, u, a)?))
}

/// `δ{f, g}(u) = P_e[δg, δf] + Dδg(u)(K_{δf}) - Dδf(u)(K_{δg})`.
pub fn delta_bracket(model: &LaeModel, f: &Observable, g: &Observable, u: &VectorField) -> Result<VectorField, PoissonError> {
    let m = model.metric();
    let (df, dg) = (f.derivative(model, u)?, g.derivative(model, u)?);
    let mut out = model.projector().project(&jacobi_lie_bracket(m, &dg, &df))?;
    if !g.is_affine() {
        let kf = coadjoint_drift(model, u, &df)?;
        out = out.add(&g.second_derivative(model, u, &kf)?);
    }
    if !f.is_affine() {
        let kg = coadjoint_drift(model, u, &dg)?;
        out = out.sub(&f.second_derivative(model, u, &kg)?);
    }
    Ok(out)
}

/// The three cyclic terms `{f, {g, h}}`, `{g, {h, f}}`, `{h, {f, g}}`.
pub fn jacobi_terms(model: &LaeModel, f: &Observable, g: &Observable, h: &Observable, u: &VectorField) -> Result<[f64; 3], PoissonError> {
    model.check_state(u)?;
    let term = |a: &Observable, b: &Observable, c: &Observable| -> Result<f64, PoissonError> {
        let da = a.derivative(model, u)?;
        let dbc = delta_bracket(model, b, c, u)?;
        Ok(bracket_fields(model, u, &da, &dbc))
    };
    Ok([term(f, g, h)?, term(g, h, f)?, term(h, f, g)?])
}

/// `|{f, {g, h}} + {g, {h, f}} + {h, {f, g}}|(u)`.
pub fn jacobi_residual(model: &LaeModel, f: &Observable, g: &Observable, h: &Observable, u: &VectorField) -> Result<f64, PoissonError> {
    let t = jacobi_terms(model, f, g, h, u)?;
    Ok((t[0] + t[1] + t[2]).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketReport {
    /// `{f, g}(u)`.
    pub value: f64,
    /// `|{f, g} + {g, f}|`.
    pub antisymmetry_residual: f64,
    /// `|{f g, h} - {f, h} g - f {g, h}|`.
    pub leibniz_residual: f64,
    pub jacobi_residual: f64,
    /// Sum of the magnitudes of the Jacobi terms.
    pub jacobi_scale: f64,
    pub h: f64,
}

/// Bracket value and structural residuals for a triple at `u`.
pub fn bracket_report(model: &LaeModel, f: &Observable, g: &Observable, h: &Observable, u: &VectorField) -> Result<BracketReport, PoissonError> {
    let value = bracket(model, f, g, u)?;
    let antisymmetry_residual = (value + bracket(model, g, f, u)?).abs();
    let fg = Observable::product(f.clone(), g.clone())?;
    let lhs = bracket(model, &fg, h, u)?;
    let rhs = bracket(model, f, h, u)? * g.value(model, u) + f.value(model, u) * bracket(model, g, h, u)?;
    let t = jacobi_terms(model, f, g, h, u)?;
    Ok(BracketReport {
        value,
        antisymmetry_residual,
        leibniz_residual: (lhs - rhs).abs(),
        jacobi_residual: (t[0] + t[1] + t[2]).abs(),
        jacobi_scale: t.iter().map(|v| v.abs()).sum(),
        h: model.metric().grid().h(),
    })
}

/// `d/dt f(u(t))` by centered differences against `{f, h}(u(t))` along a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonReport {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `max |lhs - rhs| / max(|lhs|, |rhs|)`; zero when both sides vanish.
    pub max_deviation: f64,
}

/// Integrates `u0` to `cfg.t_end` and compares both sides at up to `samples` interior steps.
pub fn hamilton_check(model: &LaeModel, cfg: &SolverConfig, f: &Observable, u0: &VectorField, samples: usize) -> Result<HamiltonReport, PoissonError> {
    cfg.validate()?;
    model.check_state(u0)?;
    let n = cfg.steps_from(0.0) as usize;
    if n < 2 {
        return Err(DynamicsError::InvalidConfig(format!("hamilton check needs at least two steps, got {n}")).into());
    }
    let mut states = vec![State::new(u0.clone())];
    for _ in 0..n {
        let next = dynamics::step(model, cfg, states.last().unwrap())?;
        states.push(next);
    }
    let vals: Vec<f64> = states.iter().map(|s| f.value(model, &s.u)).collect();
    let k = samples.clamp(1, n - 1);
    let picks: Vec<usize> = (0..k).map(|i| 1 + i * (n - 2) / (k - 1).max(1)).collect();
    let mut rep = HamiltonReport { times: Vec::new(), lhs: Vec::new(), rhs: Vec::new(), max_deviation: 0.0 };
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for &i in &picks {
        let s = &states[i];
        let l = (vals[i + 1] - vals[i - 1]) / (2.0 * cfg.dt);
        let r = bracket(model, f, &Observable::Hamiltonian, &s.u)?;
        diff = diff.max((l - r).abs());
        scale = scale.max(l.abs()).max(r.abs());
        rep.times.push(s.t);
        rep.lhs.push(l);
        rep.rhs.push(r);
    }
    rep.max_deviation = if scale > 0.0 { diff / scale } else { 0.0 };
    Ok(rep)
}

/// Composition `X ∘ η` of a spatial field with the flow map. Wall nodes stay on their wall,
/// so tangency of `X` carries over.
fn right_translate(model: &LaeModel, ms: &MaterialState, x: &VectorField) -> VectorField {
    let g = model.metric().grid();
    Interpolator::new(g).sample(x, &ms.eta.positions(g))
}

/// Vertical derivative `δf(u) ∘ η` with `u = P_e π_R(η, V)`.
pub fn vertical_fd(model: &LaeModel, f: &Observable, ms: &MaterialState) -> Result<VectorField, PoissonError> {
    let u = material::reduced_velocity(model, ms)?;
    Ok(right_translate(model, ms, &f.derivative(model, &u)?))
}

/// Spatial form of the horizontal derivative:
/// `½ [B^α(u, a) - B^α(a, u) + P_e(𝓓^α(a, u) - 𝓓^α(u, a))]` with `a = δf(u)`.
pub fn horizontal_spatial(model: &LaeModel, u: &VectorField, a: &VectorField) -> Result<VectorField, PoissonError> {
    let b = dynamics::b_alpha(model, u, a)?.sub(&dynamics::b_alpha(model, a, u)?);
    let d = dynamics::d_alpha(model, a, u)?.sub(&dynamics::d_alpha(model, u, a)?);
    Ok(b.add(&model.projector().project(&d)?).scale(0.5))
}

/// Horizontal derivative: [`horizontal_spatial`] composed with `η`.
pub fn horizontal_fd(model: &LaeModel, f: &Observable, ms: &MaterialState) -> Result<VectorField, PoissonError> {
    let u = material::reduced_velocity(model, ms)?;
    let a = f.derivative(model, &u)?;
    Ok(right_translate(model, ms, &horizontal_spatial(model, &u, &a)?))
}

/// `𝒢¹(η)(X, Y) = ⟨X ∘ η^{-1}, Y ∘ η^{-1}⟩₁`.
pub fn material_metric(model: &LaeModel, ms: &MaterialState, x: &VectorField, y: &VectorField) -> Result<f64, PoissonError> {
    let back = |v: &VectorField| material::pi_r(model, &MaterialState { eta: ms.eta.clone(), v: v.clone(), t: ms.t, step: ms.step });
    Ok(inner1(model.metric(), model.alpha(), &back(x)?, &back(y)?))
}

/// Two evaluations of one bracket value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonMapReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs|`.
    pub abs_error: f64,
    /// `|lhs - rhs| / max(|lhs|, |rhs|)`; zero when both sides vanish.
    pub deviation: f64,
}

impl PoissonMapReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        let abs_error = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs());
        PoissonMapReport { lhs, rhs, abs_error, deviation: if scale > 0.0 { abs_error / scale } else { 0.0 } }
    }
}

/// Material bracket `𝒢¹(H_f, V_g) - 𝒢¹(V_f, H_g)` against `{f, g}(P_e π_R(η, V))`.
pub fn pi_r_poisson_check(model: &LaeModel, f: &Observable, g: &Observable, ms: &MaterialState) -> Result<PoissonMapReport, PoissonError> {
    let u = material::reduced_velocity(model, ms)?;
    let (vf, vg) = (vertical_fd(model, f, ms)?, vertical_fd(model, g, ms)?);
    let (hf, hg) = (horizontal_fd(model, f, ms)?, horizontal_fd(model, g, ms)?);
    let lhs = material_metric(model, ms, &hf, &vg)? - material_metric(model, ms, &vf, &hg)?;
    let (df, dg) = (f.derivative(model, &u)?, g.derivative(model, &u)?);
    Ok(PoissonMapReport::new(lhs, bracket_fields(model, &u, &df, &dg)))
}

/// `⟨,⟩₁`-orthonormal basis of the discrete constrained space by modified Gram–Schmidt on
/// projected unit vectors. Fails when the dimension exceeds `max_dim`.
pub fn constrained_basis(model: &LaeModel, max_dim: usize) -> Result<Vec<VectorField>, PoissonError> {
    let g = model.metric().grid();
    let nn = g.len();
    let walls = (0..nn).filter(|&n| g.wall_of(n).is_some()).count();
    let lower = nn.saturating_sub(2 * walls);
    if lower > max_dim {
        return Err(PoissonError::DimensionCap { dim: lower, cap: max_dim });
    }
    let sp = model.projector();
    let gram = sp.gram();
    let candidates: Vec<Vec<f64>> = (0..2 * nn)
        .into_par_iter()
        .map(|k| {
            let mut e = vec![0.0; 2 * nn];
            e[k] = 1.0;
            sp.project(&VectorField::from_flat(g, &e)).map(|v| v.to_flat())
        })
        .collect::<Result<_, _>>()?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    for mut v in candidates {
        let n0 = dot(&v, &gram.matvec(&v)).max(0.0).sqrt();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for (b, mb) in basis.iter().zip(&images) {
                let c = dot(&v, mb);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let mv = gram.matvec(&v);
        let nv = dot(&v, &mv).max(0.0).sqrt();
        if nv > BASIS_DROP_TOL * n0 {
            basis.push(v.iter().map(|x| x / nv).collect());
            images.push(mv.iter().map(|x| x / nv).collect());
            if basis.len() > max_dim {
                return Err(PoissonError::DimensionCap { dim: basis.len(), cap: max_dim });
            }
        }
    }
    Ok(basis.iter().map(|b| VectorField::from_flat(g, b)).collect())
}

/// Derivative of the discrete right-hand side at `y` along `z`. The right-hand side is
/// quadratic, so the symmetric difference is exact for any increment.
fn tangent_rhs(model: &LaeModel, y: &VectorField, z: &VectorField) -> Result<VectorField, DynamicsError> {
    let (ys, zs) = (y.max_abs(), z.max_abs());
    if zs == 0.0 {
        return Ok(VectorField::zeros(model.metric().grid()));
    }
    let s = if ys > 0.0 { zs / ys } else { 1.0 };
    let zz = z.scale(1.0 / s);
    let plus = dynamics::rhs_unchecked(model, &y.add(&zz))?;
    let minus = dynamics::rhs_unchecked(model, &y.sub(&zz))?;
    Ok(plus.sub(&minus).scale(0.5 * s))
}

/// Stage points of one RK4 step.
struct Rk4Stages {
    y: [VectorField; 4],
}

/// Evolves a tangent vector with the exact derivative of the RK4 step map.
fn tangent_flow(model: &LaeModel, dt: f64, stages: &[Rk4Stages], w0: &VectorField) -> Result<VectorField, DynamicsError> {
    let mut w = w0.clone();
    for (k, st) in stages.iter().enumerate() {
        let k1 = tangent_rhs(model, &st.y[0], &w)?;
        let k2 = tangent_rhs(model, &st.y[1], &w.axpy(0.5 * dt, &k1))?;
        let k3 = tangent_rhs(model, &st.y[2], &w.axpy(0.5 * dt, &k2))?;
        let k4 = tangent_rhs(model, &st.y[3], &w.axpy(dt, &k3))?;
        let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
        w = model.projector().project(&w.axpy(dt / 6.0, &incr))?;
        if !w.max_abs().is_finite() {
            return Err(DynamicsError::NonFinite((k + 1) as f64 * dt));
        }
    }
    Ok(w)
}

/// `{f ∘ F̃_t, g ∘ F̃_t}(u0)` against `{f, g}(F̃_t(u0))`, with `F̃_t` the discrete RK4 flow to
/// `cfg.t_end`. `δ(f ∘ F̃_t)(u0)` is assembled from tangent flows of an orthonormal basis.
pub fn flow_poisson_check(
    model: &LaeModel,
    cfg: &SolverConfig,
    f: &Observable,
    g: &Observable,
    u0: &VectorField,
    max_dim: usize,
) -> Result<PoissonMapReport, PoissonError> {
    cfg.validate()?;
    if cfg.integrator != Integrator::Rk4 {
        return Err(DynamicsError::InvalidConfig("the flow Poisson check linearizes the rk4 step".into()).into());
    }
    model.check_state(u0)?;
    let dt = cfg.dt;
    let n = cfg.steps_from(0.0);
    let mut stages = Vec::with_capacity(n as usize);
    let mut s = State::new(u0.clone());
    for _ in 0..n {
        let u = &s.u;
        let k1 = dynamics::rhs_unchecked(model, u)?;
        let y2 = u.axpy(0.5 * dt, &k1);
        let k2 = dynamics::rhs_unchecked(model, &y2)?;
        let y3 = u.axpy(0.5 * dt, &k2);
        let k3 = dynamics::rhs_unchecked(model, &y3)?;
        let y4 = u.axpy(dt, &k3);
        stages.push(Rk4Stages { y: [u.clone(), y2, y3, y4] });
        s = dynamics::step(model, cfg, &s)?;
    }
    let ut = s.u;
    let basis = constrained_basis(model, max_dim)?;
    let images: Vec<VectorField> = basis.par_iter().map(|e| tangent_flow(model, dt, &stages, e)).collect::<Result<_, _>>()?;
    let m = model.metric();
    let a = model.alpha();
    let (df, dg) = (f.derivative(model, &ut)?, g.derivative(model, &ut)?);
    let mut pf = VectorField::zeros(m.grid());
    let mut pg = VectorField::zeros(m.grid());
    for (e, te) in basis.iter().zip(&images) {
        pf = pf.axpy(inner1(m, a, &df, te), e);
        pg = pg.axpy(inner1(m, a, &dg, te), e);
    }
    let lhs = bracket_fields(model, u0, &pf, &pg);
    let rhs = bracket_fields(model, &ut, &df, &dg);
    Ok(PoissonMapReport::new(lhs, rhs))
}
