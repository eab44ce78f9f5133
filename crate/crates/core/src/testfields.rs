//! Seeded band-limited fields: generic, divergence-free, and wall-compatible.
//!
//! Fields are defined analytically so the same continuous field can be sampled on every
//! grid of a convergence ladder. On channels, wall-compatible fields satisfy the
//! continuous boundary conditions of the wall assignment exactly when `φ_y = 0` on the
//! walls (true for every [`crate::MetricPreset`]).

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::VectorField;
use crate::geometry::ConformalMetric;
use crate::grid::{DomainKind, DomainSpec, WallCondition};
use crate::jet::{ncoef, Jet, EXPONENTS};

/// Trigonometric polynomial in `x` and `y`.
///
/// Full mode: `Σ a cos θ + b sin θ` with `θ = kx x + ky y`.
/// Half mode: `Σ (a cos kx x + b sin kx x) cos(ky y)` with `ky = mπ/Ly`.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    terms: Vec<(f64, f64, f64, f64)>,
}

/// Value and first partials.
#[derive(Clone, Copy, Debug, Default)]
pub struct Val {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
}

impl TrigPoly {
    /// Random coefficients with modes `|kx|, |ky| <= kmax`, decaying like `1/(1 + |k|²)`.
    /// `y_half` uses half-period modes `cos(m π y/Ly)` whose `y` derivative vanishes on the walls.
    pub fn random(rng: &mut ChaCha8Rng, spec: &DomainSpec, kmax: i32, y_half: bool) -> Self {
        let mut terms = Vec::new();
        let (wx, wy) = (2.0 * PI / spec.lx, if y_half { PI / spec.ly } else { 2.0 * PI / spec.ly });
        for kx in 0..=kmax {
            let kys: Vec<i32> = if y_half { (0..=kmax).collect() } else { (-kmax..=kmax).collect() };
            for ky in kys {
                if !y_half && kx == 0 && ky < 0 {
                    continue;
                }
                let decay = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
                let a = rng.random_range(-1.0..1.0) * decay;
                let b = rng.random_range(-1.0..1.0) * decay;
                terms.push((kx as f64 * wx, ky as f64 * wy, a, b));
            }
        }
        TrigPoly { terms }
    }

    /// Evaluates value and gradient.
    pub fn eval(&self, x: f64, y: f64, y_half: bool) -> Val {
        let mut v = Val::default();
        for &(kx, ky, a, b) in &self.terms {
            if y_half {
                // (a cos kx x + b sin kx x) cos(ky y)
                let (cx, sx) = ((kx * x).cos(), (kx * x).sin());
                let (cy, sy) = ((ky * y).cos(), (ky * y).sin());
                let xpart = a * cx + b * sx;
                let dxpart = kx * (-a * sx + b * cx);
                v.f += xpart * cy;
                v.fx += dxpart * cy;
                v.fy += -ky * xpart * sy;
            } else {
                let th = kx * x + ky * y;
                let (c, s) = (th.cos(), th.sin());
                v.f += a * c + b * s;
                let d = -a * s + b * c;
                v.fx += kx * d;
                v.fy += ky * d;
            }
        }
        v
    }
}

/// `a cos(k t) + b sin(k t)`.
#[derive(Clone, Copy, Debug)]
pub struct Trig1 {
    pub k: f64,
    pub a: f64,
    pub b: f64,
}

impl Trig1 {
    /// `n`-th derivative at `t`.
    pub fn d(&self, t: f64, n: usize) -> f64 {
        let th = self.k * t + n as f64 * FRAC_PI_2;
        self.k.powi(n as i32) * (self.a * th.cos() + self.b * th.sin())
    }
}

/// Sum of products `X(x) Y(y)` with exact partials of every order.
#[derive(Clone, Debug, Default)]
pub struct Separable {
    pub terms: Vec<(Trig1, Trig1)>,
}

impl Separable {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|(p, q)| p.d(x, 0) * q.d(y, 0)).sum()
    }

    /// Exact jet of order `ord` at `(x, y)`.
    pub fn jet(&self, x: f64, y: f64, ord: usize) -> Jet {
        let mut p = [0.0; 10];
        for (k, &(a, b)) in EXPONENTS.iter().enumerate().take(ncoef(ord)) {
            p[k] = self.terms.iter().map(|(f, g)| f.d(x, a) * g.d(y, b)).sum();
        }
        Jet::from_partials(&p, ord)
    }

    /// Multiplies every term by `Y(y)`.
    pub fn times_y(&self, y: Trig1) -> Self {
        // cos/sin products expand into sums; keep products by pairing with a unit x factor.
        let mut terms = Vec::new();
        for (f, g) in &self.terms {
            // (ga cos + gb sin)(ya cos + yb sin) with frequencies k1, k2.
            let (k1, k2) = (g.k, y.k);
            let cc = 0.5 * g.a * y.a;
            let ss = 0.5 * g.b * y.b;
            let cs = 0.5 * g.a * y.b;
            let sc = 0.5 * g.b * y.a;
            // cos A cos B = ½[cos(A-B) + cos(A+B)], sin A sin B = ½[cos(A-B) - cos(A+B)],
            // cos A sin B = ½[sin(A+B) - sin(A-B)], sin A cos B = ½[sin(A+B) + sin(A-B)].
            terms.push((*f, Trig1 { k: k1 + k2, a: cc - ss, b: cs + sc }));
            terms.push((*f, Trig1 { k: k1 - k2, a: cc + ss, b: sc - cs }));
        }
        Separable { terms }
    }
}

/// Seeded separable field with modes up to `kmax`; `y_half` uses `cos(mπy/Ly)`.
pub fn random_separable(spec: &DomainSpec, seed: u64, stream: u64, kmax: i32, y_half: bool) -> Separable {
    let mut rng = rng_for(seed, stream);
    let (wx, wy) = (2.0 * PI / spec.lx, if y_half { PI / spec.ly } else { 2.0 * PI / spec.ly });
    let mut terms = Vec::new();
    for kx in 0..=kmax {
        for ky in 0..=kmax {
            let decay = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
            let fx = Trig1 { k: kx as f64 * wx, a: rng.random_range(-1.0..1.0) * decay, b: rng.random_range(-1.0..1.0) * decay };
            let fy = if y_half {
                Trig1 { k: ky as f64 * wy, a: 1.0, b: 0.0 }
            } else {
                let t: f64 = rng.random_range(0.0..2.0 * PI);
                Trig1 { k: ky as f64 * wy, a: t.cos(), b: t.sin() }
            };
            terms.push((fx, fy));
        }
    }
    Separable { terms }
}

/// Seeded field with exact partials satisfying the continuous wall conditions of the domain.
pub fn manufactured(spec: &DomainSpec, seed: u64, kmax: i32) -> [Separable; 2] {
    match spec.kind {
        DomainKind::Torus => [random_separable(spec, seed, 7, kmax, false), random_separable(spec, seed, 8, kmax, false)],
        DomainKind::Channel { bottom, top } => {
            use WallCondition::*;
            let w = PI / spec.ly;
            let env = match (bottom, top) {
                (Dirichlet, Dirichlet) => Trig1 { k: w, a: 0.0, b: 1.0 },
                (Dirichlet, Neumann) => Trig1 { k: 0.5 * w, a: 0.0, b: 1.0 },
                (Neumann, Dirichlet) => Trig1 { k: 0.5 * w, a: 1.0, b: 0.0 },
                (Neumann, Neumann) => Trig1 { k: 0.0, a: 1.0, b: 0.0 },
            };
            let a = random_separable(spec, seed, 7, kmax, true).times_y(env);
            let b = random_separable(spec, seed, 8, kmax, true).times_y(Trig1 { k: w, a: 0.0, b: 1.0 });
            [a, b]
        }
    }
}

/// Samples a separable pair on the grid.
pub fn sample(m: &ConformalMetric, f: &[Separable; 2]) -> VectorField {
    VectorField::from_fn(m.grid(), |x, y| [f[0].value(x, y), f[1].value(x, y)])
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Envelope `b(s)` and derivative for a stream function that vanishes with the right
/// wall behaviour: no slip on Dirichlet walls, zero shear on Neumann walls.
fn stream_envelope(bottom: WallCondition, top: WallCondition, s: f64) -> (f64, f64) {
    use WallCondition::*;
    match (bottom, top) {
        (Dirichlet, Dirichlet) => (s * s * (1.0 - s) * (1.0 - s), 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s)),
        (Dirichlet, Neumann) => (s * s - 5.0 / 3.0 * s.powi(3) + 2.0 / 3.0 * s.powi(4), 2.0 * s - 5.0 * s * s + 8.0 / 3.0 * s.powi(3)),
        (Neumann, Dirichlet) => {
            let (b, db) = stream_envelope(Dirichlet, Neumann, 1.0 - s);
            (b, -db)
        }
        (Neumann, Neumann) => ((PI * s).sin(), PI * (PI * s).cos()),
    }
}

/// Envelope of the tangential component of a wall-compatible field.
fn tangential_envelope(bottom: WallCondition, top: WallCondition, s: f64) -> f64 {
    use WallCondition::*;
    match (bottom, top) {
        (Dirichlet, Dirichlet) => (PI * s).sin(),
        (Dirichlet, Neumann) => (0.5 * PI * s).sin(),
        (Neumann, Dirichlet) => (0.5 * PI * s).cos(),
        (Neumann, Neumann) => 1.0,
    }
}

/// Band-limited vector field with no boundary conditions.
pub fn random_vector(m: &ConformalMetric, seed: u64, kmax: i32) -> VectorField {
    let spec = *m.grid().spec();
    let a = TrigPoly::random(&mut rng_for(seed, 1), &spec, kmax, false);
    let b = TrigPoly::random(&mut rng_for(seed, 2), &spec, kmax, false);
    VectorField::from_fn(m.grid(), |x, y| [a.eval(x, y, false).f, b.eval(x, y, false).f])
}

/// Band-limited scalar field.
pub fn random_scalar(m: &ConformalMetric, seed: u64, kmax: i32) -> crate::ScalarField {
    let spec = *m.grid().spec();
    let a = TrigPoly::random(&mut rng_for(seed, 3), &spec, kmax, false);
    crate::ScalarField::from_fn(m.grid(), |x, y| a.eval(x, y, false).f)
}

/// Divergence-free field `e^{-2φ} (∂_y ψ, -∂_x ψ)` from a seeded stream function,
/// satisfying the wall conditions of the domain.
pub fn random_div_free(m: &ConformalMetric, seed: u64, kmax: i32) -> VectorField {
    let spec = *m.grid().spec();
    match spec.kind {
        DomainKind::Torus => {
            let p = TrigPoly::random(&mut rng_for(seed, 4), &spec, kmax, false);
            stream_field(m, |x, y| {
                let v = p.eval(x, y, false);
                (v.fx, v.fy)
            })
        }
        DomainKind::Channel { bottom, top } => {
            let p = TrigPoly::random(&mut rng_for(seed, 4), &spec, kmax, true);
            stream_field(m, |x, y| {
                let s = y / spec.ly;
                let (b, db) = stream_envelope(bottom, top, s);
                let v = p.eval(x, y, true);
                (b * v.fx, db / spec.ly * v.f + b * v.fy)
            })
        }
    }
}

/// `e^{-2φ} (∂_y ψ, -∂_x ψ)` given `(ψ_x, ψ_y)`.
pub fn stream_field(m: &ConformalMetric, dpsi: impl Fn(f64, f64) -> (f64, f64)) -> VectorField {
    let g = m.grid();
    VectorField::from_nodes(g, |n| {
        let (x, y) = g.xy(n);
        let (px, py) = dpsi(x, y);
        let em2 = m.local(n).em2.value();
        [em2 * py, -em2 * px]
    })
}

/// Band-limited field satisfying the wall conditions (not divergence-free).
pub fn random_wall_compatible(m: &ConformalMetric, seed: u64, kmax: i32) -> VectorField {
    let spec = *m.grid().spec();
    match spec.kind {
        DomainKind::Torus => random_vector(m, seed, kmax),
        DomainKind::Channel { bottom, top } => {
            let a = TrigPoly::random(&mut rng_for(seed, 5), &spec, kmax, true);
            let b = TrigPoly::random(&mut rng_for(seed, 6), &spec, kmax, true);
            VectorField::from_fn(m.grid(), |x, y| {
                let s = y / spec.ly;
                [tangential_envelope(bottom, top, s) * a.eval(x, y, true).f, (PI * s).sin() * b.eval(x, y, true).f]
            })
        }
    }
}

/// Taylor–Green-like cellular flow (divergence-free, wall compatible).
pub fn taylor_green(m: &ConformalMetric) -> VectorField {
    let spec = *m.grid().spec();
    let (kx, ky) = (2.0 * PI / spec.lx, 2.0 * PI / spec.ly);
    match spec.kind {
        DomainKind::Torus => stream_field(m, |x, y| {
            let c = 1.0 / (2.0 * PI);
            (c * kx * (kx * x).cos() * (ky * y).sin(), c * ky * (kx * x).sin() * (ky * y).cos())
        }),
        DomainKind::Channel { bottom, top } => stream_field(m, |x, y| {
            let (b, db) = stream_envelope(bottom, top, y / spec.ly);
            let c = 8.0;
            (c * b * kx * (kx * x).cos(), c * db / spec.ly * (kx * x).sin())
        }),
    }
}

/// Parallel shear `e^{-2φ} (f(y), 0)`; steady on the flat torus with `f = sin(2πy/Ly)`.
pub fn shear_eigenfield(m: &ConformalMetric) -> VectorField {
    let spec = *m.grid().spec();
    let g = m.grid();
    VectorField::from_nodes(g, |n| {
        let (_, y) = g.xy(n);
        let s = y / spec.ly;
        let f = match spec.kind {
            DomainKind::Torus => (2.0 * PI * s).sin(),
            DomainKind::Channel { bottom, top } => tangential_envelope(bottom, top, s),
        };
        [m.local(n).em2.value() * f, 0.0]
    })
}
