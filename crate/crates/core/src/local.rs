//! Pointwise tensor calculus on jets at a single node.
//!
//! Vectors are contravariant coordinate components, `(1,1)` tensors are `t[i][j] = T^i_j`.
//! Every function here is an exact identity-preserving formula in the truncated jet algebra.

use crate::geometry::LocalGeom;
use crate::jet::Jet;

/// Vector jet.
pub type V = [Jet; 2];
/// `(1,1)` tensor jet.
pub type T = [[Jet; 2]; 2];

/// Zero vector of order 3.
pub fn vzero() -> V {
    [Jet::zero(); 2]
}

pub fn vadd(a: &V, b: &V) -> V {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn vsub(a: &V, b: &V) -> V {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn vscale(a: &V, s: Jet) -> V {
    [a[0] * s, a[1] * s]
}

pub fn vscalef(a: &V, s: f64) -> V {
    [a[0].scale(s), a[1].scale(s)]
}

pub fn vvalue(a: &V) -> [f64; 2] {
    [a[0].value(), a[1].value()]
}

pub fn tadd(a: &T, b: &T) -> T {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn tsub(a: &T, b: &T) -> T {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

pub fn tscalef(a: &T, s: f64) -> T {
    [[a[0][0].scale(s), a[0][1].scale(s)], [a[1][0].scale(s), a[1][1].scale(s)]]
}

pub fn tvalue(a: &T) -> [[f64; 2]; 2] {
    [[a[0][0].value(), a[0][1].value()], [a[1][0].value(), a[1][1].value()]]
}

/// Identity tensor scaled by `s`.
pub fn tident(s: Jet) -> T {
    let z = Jet::zero();
    [[s, z], [z, s]]
}

/// Metric pairing `g(a, b)`.
pub fn g(l: &LocalGeom, a: &V, b: &V) -> Jet {
    l.e2 * (a[0] * b[0] + a[1] * b[1])
}

/// Lowered index `a_j = g_{jk} a^k`.
pub fn flat(l: &LocalGeom, a: &V) -> V {
    [l.e2 * a[0], l.e2 * a[1]]
}

/// Raised index `a^j = g^{jk} a_k`.
pub fn sharp(l: &LocalGeom, a: &V) -> V {
    [l.em2 * a[0], l.em2 * a[1]]
}

/// `T(v)`.
pub fn apply(t: &T, v: &V) -> V {
    [t[0][0] * v[0] + t[0][1] * v[1], t[1][0] * v[0] + t[1][1] * v[1]]
}

/// Composition `a ∘ b`.
pub fn compose(a: &T, b: &T) -> T {
    let mut r = [[Jet::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

/// Metric transpose: `T^t = g^{-1} T^T g`.
pub fn transpose(l: &LocalGeom, t: &T) -> T {
    let mut r = [[Jet::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = l.em2 * t[j][i] * l.e2;
        }
    }
    r
}

pub fn trace(t: &T) -> Jet {
    t[0][0] + t[1][1]
}

/// Induced pairing of `(1,1)` tensors, `ḡ(R, S) = Tr(R^t S)`.
pub fn gbar(l: &LocalGeom, r: &T, s: &T) -> Jet {
    let mut acc = Jet::zero();
    for i in 0..2 {
        for j in 0..2 {
            acc += r[i][j] * s[i][j];
        }
    }
    l.e2 * l.em2 * acc
}

/// Symmetric part `(T + T^t) / 2`.
pub fn sym(l: &LocalGeom, t: &T) -> T {
    tscalef(&tadd(t, &transpose(l, t)), 0.5)
}

/// Covariant derivative `(∇u)^i_j = ∂_j u^i + Γ^i_{jk} u^k`.
pub fn cov(l: &LocalGeom, u: &V) -> T {
    let mut r = [[Jet::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = u[i].d(j) + l.gamma[i][j][0] * u[0] + l.gamma[i][j][1] * u[1];
        }
    }
    r
}

/// `∇_a b`.
pub fn nabla(l: &LocalGeom, a: &V, b: &V) -> V {
    apply(&cov(l, b), a)
}

/// Covariant derivative of a `(1,1)` tensor: `r[k] = ∇_k S`.
pub fn cov_tensor(l: &LocalGeom, s: &T) -> [T; 2] {
    let mut r = [[[Jet::zero(); 2]; 2]; 2];
    for (k, rk) in r.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                let mut v = s[i][j].d(k);
                for m in 0..2 {
                    v += l.gamma[i][k][m] * s[m][j];
                    v -= l.gamma[m][k][j] * s[i][m];
                }
                rk[i][j] = v;
            }
        }
    }
    r
}

/// Tensor divergence `Div(S) = Σ_a (∇_{e_a} S)(e_a)` for an orthonormal frame.
pub fn div_tensor(l: &LocalGeom, s: &T) -> V {
    let c = cov_tensor(l, s);
    [l.em2 * (c[0][0][0] + c[1][0][1]), l.em2 * (c[0][1][0] + c[1][1][1])]
}

/// Vector divergence `e^{-2φ} ∂_i (e^{2φ} u^i)`.
pub fn div_vec(l: &LocalGeom, u: &V) -> Jet {
    l.em2 * ((l.e2 * u[0]).dx() + (l.e2 * u[1]).dy())
}

/// Gradient `g^{ij} ∂_j f`.
pub fn grad(l: &LocalGeom, f: &Jet) -> V {
    [l.em2 * f.dx(), l.em2 * f.dy()]
}

/// Deformation tensor `(∇u + ∇u^t) / 2`.
pub fn def(l: &LocalGeom, u: &V) -> T {
    sym(l, &cov(l, u))
}

/// Curvature operator `R(a, b) c = K (g(b, c) a - g(a, c) b)`.
pub fn riem(l: &LocalGeom, a: &V, b: &V, c: &V) -> V {
    let gbc = g(l, b, c);
    let gac = g(l, a, c);
    [l.k * (gbc * a[0] - gac * b[0]), l.k * (gbc * a[1] - gac * b[1])]
}

/// Ricci operator `Ric(u) = K u`.
pub fn ric(l: &LocalGeom, u: &V) -> V {
    vscale(u, l.k)
}

/// Ricci form `Ricci(u, v) = K g(u, v)`.
pub fn ricci(l: &LocalGeom, u: &V, v: &V) -> Jet {
    l.k * g(l, u, v)
}

/// `(∇_u Ric)(v) = dK(u) v`.
pub fn nabla_ric(l: &LocalGeom, u: &V, v: &V) -> V {
    let dk = l.k.dx() * u[0] + l.k.dy() * u[1];
    vscale(v, dk)
}

/// Tensor field `X ↦ R(X, u) v`.
pub fn riem_slot(l: &LocalGeom, u: &V, v: &V) -> T {
    let guv = g(l, u, v);
    let vf = flat(l, v);
    let mut r = [[Jet::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let d = if i == j { guv } else { Jet::zero() };
            r[i][j] = l.k * (d - u[i] * vf[j]);
        }
    }
    r
}

/// Frame trace `Σ_a ∇_{e_a}(R(e_a, u) v)` at a point where the frame is parallel.
pub fn trace_nabla_riem(l: &LocalGeom, u: &V, v: &V) -> V {
    div_tensor(l, &riem_slot(l, u, v))
}

/// Frame trace `Σ_a R(e_a, u) (S e_a) = K (S^t u - Tr(S) u)`.
pub fn trace_riem_first(l: &LocalGeom, u: &V, s: &T) -> V {
    let st = apply(&transpose(l, s), u);
    let tr = trace(s);
    [l.k * (st[0] - tr * u[0]), l.k * (st[1] - tr * u[1])]
}

/// Frame trace `Σ_a R(u, S e_a) e_a = K (Tr(S) u - S u)`.
pub fn trace_riem_second(l: &LocalGeom, u: &V, s: &T) -> V {
    let su = apply(s, u);
    let tr = trace(s);
    [l.k * (tr * u[0] - su[0]), l.k * (tr * u[1] - su[1])]
}

/// Hodge Laplacian in Weitzenböck form `Div(∇u) - K u`.
pub fn hodge_laplacian(l: &LocalGeom, u: &V) -> V {
    vsub(&div_tensor(l, &cov(l, u)), &ric(l, u))
}

/// `Δ_r = Δ + 2 Ric = Div(∇u) + K u`.
pub fn laplace_r(l: &LocalGeom, u: &V) -> V {
    vadd(&div_tensor(l, &cov(l, u)), &ric(l, u))
}

/// `𝓛 u = Δ_r u + grad div u`.
pub fn lcal(l: &LocalGeom, u: &V) -> V {
    vadd(&laplace_r(l, u), &grad(l, &div_vec(l, u)))
}

/// `(1 - α² 𝓛) u`.
pub fn helmholtz(l: &LocalGeom, alpha2: f64, u: &V) -> V {
    vsub(u, &vscalef(&lcal(l, u), alpha2))
}

/// `(1 - α² Δ_r) u`.
pub fn helmholtz_r(l: &LocalGeom, alpha2: f64, u: &V) -> V {
    vsub(u, &vscalef(&laplace_r(l, u), alpha2))
}

/// Coordinate Lie bracket `[a, b]^i = a^j ∂_j b^i - b^j ∂_j a^i`.
pub fn bracket_coord(a: &V, b: &V) -> V {
    let mut r = vzero();
    for (i, ri) in r.iter_mut().enumerate() {
        *ri = (a[0] * b[i].dx() + a[1] * b[i].dy()) - (b[0] * a[i].dx() + b[1] * a[i].dy());
    }
    r
}

/// Covariant Lie bracket `∇_a b - ∇_b a`.
pub fn bracket_cov(l: &LocalGeom, a: &V, b: &V) -> V {
    vsub(&nabla(l, a, b), &nabla(l, b, a))
}

/// Pre-solve source of `𝓤^α`, without the `α²` factor: `Div(∇u ∇u^t + ∇u ∇u - ∇u^t ∇u)`.
pub fn u_alpha_source(l: &LocalGeom, u: &V) -> V {
    let t = cov(l, u);
    let tt = transpose(l, &t);
    let s = tsub(&tadd(&compose(&t, &tt), &compose(&t, &t)), &compose(&tt, &t));
    div_tensor(l, &s)
}

/// Pre-solve source of `𝓡^α`, without the `α²` factor.
pub fn r_alpha_source(l: &LocalGeom, u: &V) -> V {
    let t = cov(l, u);
    let tt = transpose(l, &t);
    let mut s = trace_nabla_riem(l, u, u);
    s = vadd(&s, &trace_riem_first(l, u, &t));
    s = vadd(&s, &trace_riem_second(l, u, &t));
    s = vsub(&s, &nabla_ric(l, u, u));
    vsub(&s, &apply(&tt, &ric(l, u)))
}

/// `Tr(∇u ∘ ∇v) + Ricci(u, v)`.
pub fn d_alpha_scalar(l: &LocalGeom, u: &V, v: &V) -> Jet {
    trace(&compose(&cov(l, u), &cov(l, v))) + ricci(l, u, v)
}

/// Pre-solve source of `𝓓^α(u, v)`, without the `α²` factor.
pub fn d_alpha_source(l: &LocalGeom, u: &V, v: &V) -> V {
    let tu = cov(l, u);
    let tv = cov(l, v);
    let tut = transpose(l, &tu);
    let mut s = div_tensor(l, &tadd(&compose(&tv, &tut), &compose(&tv, &tu)));
    s = vadd(&s, &trace_nabla_riem(l, u, v));
    s = vadd(&s, &trace_riem_first(l, u, &tv));
    s = vadd(&s, &grad(l, &(trace(&compose(&tu, &tv)) + ricci(l, u, v))));
    vsub(&s, &nabla_ric(l, u, v))
}

/// Scalar `F(u) = Tr(∇u ∘ ∇u) + Ricci(u, u) + ½ ḡ(∇u, ∇u)`.
pub fn f_scalar(l: &LocalGeom, u: &V) -> Jet {
    let t = cov(l, u);
    trace(&compose(&t, &t)) + ricci(l, u, u) + gbar(l, &t, &t).scale(0.5)
}

/// `∇u^t (Δ_r v)`.
pub fn transpose_grad_apply(l: &LocalGeom, u: &V, w: &V) -> V {
    apply(&transpose(l, &cov(l, u)), w)
}
