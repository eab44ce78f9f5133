//! Truncated bivariate Taylor jets.
//!
//! A jet of order `o` stores the Taylor coefficients `c_{ab} = ∂x^a ∂y^b f / (a! b!)`
//! for `a + b <= o`. Products, sums and `exp` are exact in the truncated algebra, and
//! `dx`/`dy` lower the order by one. Pointwise differential operators built from jets
//! therefore satisfy the Leibniz rule and symmetry of mixed partials exactly.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Highest supported total order.
pub const MAX_ORDER: usize = 3;
/// Number of coefficients of a jet of order [`MAX_ORDER`].
pub const NCOEF: usize = 10;

/// Position of the coefficient of `x^a y^b` (order-major, `y` exponent minor).
pub const fn idx(a: usize, b: usize) -> usize {
    let n = a + b;
    n * (n + 1) / 2 + b
}

/// Number of coefficients of a jet of order `o`.
pub const fn ncoef(o: usize) -> usize {
    (o + 1) * (o + 2) / 2
}

/// Exponents `(a, b)` of coefficient `k`.
pub const EXPONENTS: [(usize, usize); NCOEF] = {
    let mut e = [(0, 0); NCOEF];
    let mut n = 0;
    while n <= MAX_ORDER {
        let mut b = 0;
        while b <= n {
            e[idx(n - b, b)] = (n - b, b);
            b += 1;
        }
        n += 1;
    }
    e
};

const fn factorial(n: usize) -> f64 {
    let mut f = 1.0;
    let mut k = 2;
    while k <= n {
        f *= k as f64;
        k += 1;
    }
    f
}

/// `a! b!` for coefficient `k`.
pub const FACT: [f64; NCOEF] = {
    let mut f = [0.0; NCOEF];
    let mut k = 0;
    while k < NCOEF {
        f[k] = factorial(EXPONENTS[k].0) * factorial(EXPONENTS[k].1);
        k += 1;
    }
    f
};

const MUL_LEN: [usize; MAX_ORDER + 1] = [1, 5, 15, 35];

/// Cauchy-product triples `(out, lhs, rhs)`, grouped so that the first `MUL_LEN[o]`
/// entries cover all outputs of order `<= o`.
const MUL_TABLE: [(u8, u8, u8); 35] = {
    let mut t = [(0u8, 0u8, 0u8); 35];
    let mut m = 0;
    let mut n = 0;
    while n <= MAX_ORDER {
        let mut b = 0;
        while b <= n {
            let a = n - b;
            let mut a1 = 0;
            while a1 <= a {
                let mut b1 = 0;
                while b1 <= b {
                    t[m] = (idx(a, b) as u8, idx(a1, b1) as u8, idx(a - a1, b - b1) as u8);
                    m += 1;
                    b1 += 1;
                }
                a1 += 1;
            }
            b += 1;
        }
        n += 1;
    }
    t
};

/// Truncated Taylor jet at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; NCOEF],
    ord: u8,
}

impl Default for Jet {
    fn default() -> Self {
        Jet::zero()
    }
}

impl Jet {
    /// The zero jet (order [`MAX_ORDER`]).
    pub const fn zero() -> Self {
        Jet { c: [0.0; NCOEF], ord: MAX_ORDER as u8 }
    }

    /// A constant; constants carry the maximal order.
    pub const fn constant(v: f64) -> Self {
        let mut c = [0.0; NCOEF];
        c[0] = v;
        Jet { c, ord: MAX_ORDER as u8 }
    }

    /// Builds a jet of order `ord` from Taylor coefficients.
    pub fn from_taylor(coef: &[f64], ord: usize) -> Self {
        assert!(ord <= MAX_ORDER);
        let mut c = [0.0; NCOEF];
        c[..ncoef(ord)].copy_from_slice(&coef[..ncoef(ord)]);
        Jet { c, ord: ord as u8 }
    }

    /// Builds a jet of order `ord` from partial derivatives `∂x^a ∂y^b f`, indexed by [`idx`].
    pub fn from_partials(partials: &[f64], ord: usize) -> Self {
        assert!(ord <= MAX_ORDER);
        let mut c = [0.0; NCOEF];
        for k in 0..ncoef(ord) {
            c[k] = partials[k] / FACT[k];
        }
        Jet { c, ord: ord as u8 }
    }

    /// Order of truncation.
    pub fn order(&self) -> usize {
        self.ord as usize
    }

    /// Point value.
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient `k`.
    pub fn coef(&self, k: usize) -> f64 {
        self.c[k]
    }

    /// Partial derivative `∂x^a ∂y^b` at the point.
    pub fn partial(&self, a: usize, b: usize) -> f64 {
        assert!(a + b <= self.order(), "partial beyond jet order");
        let k = idx(a, b);
        self.c[k] * FACT[k]
    }

    /// Same jet truncated to order `o` (no-op if already lower).
    pub fn truncate(&self, o: usize) -> Self {
        let o = o.min(self.order());
        let mut c = [0.0; NCOEF];
        c[..ncoef(o)].copy_from_slice(&self.c[..ncoef(o)]);
        Jet { c, ord: o as u8 }
    }

    /// Derivative along coordinate `dir` (0 = x, 1 = y).
    pub fn d(&self, dir: usize) -> Self {
        assert!(self.ord > 0, "derivative of an order-0 jet");
        let o = self.order() - 1;
        let mut c = [0.0; NCOEF];
        for (k, ck) in c.iter_mut().enumerate().take(ncoef(o)) {
            let (a, b) = EXPONENTS[k];
            *ck = if dir == 0 {
                (a + 1) as f64 * self.c[idx(a + 1, b)]
            } else {
                (b + 1) as f64 * self.c[idx(a, b + 1)]
            };
        }
        Jet { c, ord: o as u8 }
    }

    /// `∂x`.
    pub fn dx(&self) -> Self {
        self.d(0)
    }

    /// `∂y`.
    pub fn dy(&self) -> Self {
        self.d(1)
    }

    /// Exponential.
    pub fn exp(&self) -> Self {
        let e0 = self.c[0].exp();
        let mut g = *self;
        g.c[0] = 0.0;
        // g is nilpotent of index ord+1 in the truncated algebra.
        let mut term = Jet::constant(1.0).truncate(self.order());
        let mut acc = term;
        for k in 1..=self.order() {
            term = term * g * (1.0 / k as f64);
            acc += term;
        }
        acc * e0
    }

    /// Scales by a real number.
    pub fn scale(&self, s: f64) -> Self {
        let mut r = *self;
        for v in r.c[..ncoef(self.order())].iter_mut() {
            *v *= s;
        }
        r
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let o = self.ord.min(rhs.ord);
        let mut c = [0.0; NCOEF];
        for k in 0..ncoef(o as usize) {
            c[k] = self.c[k] + rhs.c[k];
        }
        Jet { c, ord: o }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let o = self.ord.min(rhs.ord);
        let mut c = [0.0; NCOEF];
        for k in 0..ncoef(o as usize) {
            c[k] = self.c[k] - rhs.c[k];
        }
        Jet { c, ord: o }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut r = self;
        for v in r.c.iter_mut() {
            *v = -*v;
        }
        r
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let o = self.ord.min(rhs.ord);
        let mut c = [0.0; NCOEF];
        for &(k, i, j) in &MUL_TABLE[..MUL_LEN[o as usize]] {
            c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        Jet { c, ord: o }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(x: f64, y: f64) -> f64 {
        1.0 + 2.0 * x - y + 0.5 * x * x + 3.0 * x * y - y * y + x * x * x - 2.0 * x * y * y
    }

    fn poly_jet() -> Jet {
        // Coefficients of `poly` at the origin, in idx order.
        Jet::from_taylor(&[1.0, 2.0, -1.0, 0.5, 3.0, -1.0, 1.0, 0.0, -2.0, 0.0], 3)
    }

    #[test]
    fn index_layout_is_order_major() {
        assert_eq!(idx(0, 0), 0);
        assert_eq!(idx(1, 0), 1);
        assert_eq!(idx(0, 1), 2);
        assert_eq!(idx(1, 1), 4);
        assert_eq!(idx(0, 3), 9);
        for k in 0..NCOEF {
            let (a, b) = EXPONENTS[k];
            assert_eq!(idx(a, b), k);
        }
    }

    #[test]
    fn product_matches_polynomial_product() {
        let p = poly_jet();
        let q = Jet::from_taylor(&[0.5, -1.0, 2.0, 0.0, 1.0, 0.25, 0.0, 1.0, 0.0, -1.0], 3);
        let r = p * q;
        // Compare the x^1 y^2 coefficient by brute force.
        let mut want = 0.0;
        for a1 in 0..=1 {
            for b1 in 0..=2 {
                want += p.coef(idx(a1, b1)) * q.coef(idx(1 - a1, 2 - b1));
            }
        }
        assert_eq!(r.coef(idx(1, 2)), want);
        assert_eq!(r.value(), 0.5);
    }

    #[test]
    fn derivative_and_partials() {
        let p = poly_jet();
        assert_eq!(p.partial(1, 0), 2.0);
        assert_eq!(p.partial(2, 0), 1.0);
        assert_eq!(p.partial(3, 0), 6.0);
        assert_eq!(p.partial(1, 2), -4.0);
        let px = p.dx();
        assert_eq!(px.order(), 2);
        assert_eq!(px.value(), 2.0);
        assert_eq!(px.partial(0, 1), 3.0);
        // ∂x∂y = ∂y∂x exactly
        assert_eq!(p.dx().dy(), p.dy().dx());
        let h = 1e-4;
        let fd = (poly(h, 0.0) - poly(-h, 0.0)) / (2.0 * h);
        assert!((fd - p.partial(1, 0)).abs() < 1e-6);
    }

    #[test]
    fn exp_matches_series_of_known_function() {
        // exp(x + 2y) at origin: partials ∂x^a∂y^b = 2^b.
        let g = Jet::from_taylor(&[0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 3);
        let e = g.exp();
        for k in 0..NCOEF {
            let (a, b) = EXPONENTS[k];
            assert!((e.partial(a, b) - 2f64.powi(b as i32)).abs() < 1e-14);
        }
        let inv = (-g).exp();
        let one = e * inv;
        assert!((one.value() - 1.0).abs() < 1e-15);
        for k in 1..NCOEF {
            assert!(one.coef(k).abs() < 1e-14);
        }
    }

    #[test]
    fn leibniz_rule_is_exact() {
        let p = poly_jet();
        let q = Jet::from_taylor(&[0.3, -1.0, 2.0, 0.7, 1.0, 0.25, 0.1, 1.0, 0.0, -1.0], 3);
        let lhs = (p * q).dy();
        let rhs = p.dy() * q + p * q.dy();
        for k in 0..ncoef(2) {
            assert!((lhs.coef(k) - rhs.coef(k)).abs() < 1e-14);
        }
    }

    #[test]
    fn mixed_orders_truncate_to_min() {
        let p = poly_jet();
        let q = p.truncate(1);
        assert_eq!((p + q).order(), 1);
        assert_eq!((p * q).order(), 1);
        assert_eq!((p * Jet::constant(2.0)).order(), 3);
    }
}
