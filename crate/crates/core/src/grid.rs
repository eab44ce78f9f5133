//! Domains, node grids and finite-difference stencils.

use crate::jet::{idx, ncoef, EXPONENTS, MAX_ORDER};
use crate::GeometryError;

/// Boundary condition carried by a channel wall.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WallCondition {
    /// No slip: `u = 0`.
    Dirichlet,
    /// Tangency plus vanishing tangential shear.
    Neumann,
}

impl WallCondition {
    /// Lower-case name used in configs and manifests.
    pub fn name(self) -> &'static str {
        match self {
            WallCondition::Dirichlet => "dirichlet",
            WallCondition::Neumann => "neumann",
        }
    }
}

/// The two channel walls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Wall {
    /// `y = 0`.
    Bottom,
    /// `y = Ly`.
    Top,
}

impl Wall {
    /// Sign of the outward normal's `y` component.
    pub fn normal_sign(self) -> f64 {
        match self {
            Wall::Bottom => -1.0,
            Wall::Top => 1.0,
        }
    }
}

/// Topology of the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainKind {
    /// Periodic in both directions.
    Torus,
    /// Periodic in `x`, walls at `y = 0` and `y = Ly`.
    Channel { bottom: WallCondition, top: WallCondition },
}

/// Domain description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub lx: f64,
    pub ly: f64,
}

impl DomainSpec {
    /// Unit-period torus.
    pub fn torus(lx: f64, ly: f64) -> Self {
        DomainSpec { kind: DomainKind::Torus, lx, ly }
    }

    /// Channel with the given wall conditions.
    pub fn channel(lx: f64, ly: f64, bottom: WallCondition, top: WallCondition) -> Self {
        DomainSpec { kind: DomainKind::Channel { bottom, top }, lx, ly }
    }

    /// Whether the domain has walls.
    pub fn has_walls(&self) -> bool {
        matches!(self.kind, DomainKind::Channel { .. })
    }

    /// Condition on a wall, `None` on the torus.
    pub fn wall_condition(&self, w: Wall) -> Option<WallCondition> {
        match self.kind {
            DomainKind::Torus => None,
            DomainKind::Channel { bottom, top } => Some(match w {
                Wall::Bottom => bottom,
                Wall::Top => top,
            }),
        }
    }
}

/// Fornberg's algorithm: weights `w[m][k]` of the `m`-th derivative at `x0` from samples at `xs`.
pub fn fornberg(x0: f64, xs: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_deriv + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// One-dimensional stencil: `(offset, weight)` pairs.
pub type Stencil = Vec<(isize, f64)>;

fn centered_offsets(m: usize) -> Vec<isize> {
    match m {
        0 => vec![0],
        1 | 2 => vec![-1, 0, 1],
        _ => vec![-2, -1, 0, 1, 2],
    }
}

fn build_stencil(offsets: &[isize], x0: isize, h: f64, m: usize) -> Stencil {
    let xs: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let w = fornberg(x0 as f64, &xs, m);
    let scale = h.powi(m as i32);
    offsets
        .iter()
        .zip(&w[m])
        .filter(|(_, &wk)| wk != 0.0)
        .map(|(&o, &wk)| (o - x0, wk / scale))
        .collect()
}

/// Node grid over a [`DomainSpec`].
///
/// Nodes are `(i, j)` with `x = i hx`, `y = j hy`; storage index `j nx + i`.
/// Torus: `hy = Ly/ny`. Channel: `hy = Ly/(ny-1)` with wall nodes at `j = 0` and `j = ny-1`.
#[derive(Clone, Debug)]
pub struct Grid {
    spec: DomainSpec,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    x_st: Vec<Stencil>,
    /// Torus: one stencil per order. Channel: per order, per row.
    y_st: Vec<Vec<Stencil>>,
}

/// Smallest node count per direction that fits the widest one-sided wall stencil.
pub const MIN_NODES: usize = 8;

impl Grid {
    /// Builds the grid; both counts must be at least [`MIN_NODES`].
    pub fn new(spec: DomainSpec, nx: usize, ny: usize) -> Result<Self, GeometryError> {
        if nx < MIN_NODES || ny < MIN_NODES {
            return Err(GeometryError::InvalidGrid(format!("grid {nx}x{ny} is below the {MIN_NODES}x{MIN_NODES} minimum")));
        }
        if !(spec.lx.is_finite() && spec.ly.is_finite() && spec.lx > 0.0 && spec.ly > 0.0) {
            return Err(GeometryError::InvalidGrid(format!("non-positive domain lengths {}x{}", spec.lx, spec.ly)));
        }
        let hx = spec.lx / nx as f64;
        let periodic_y = !spec.has_walls();
        let hy = if periodic_y { spec.ly / ny as f64 } else { spec.ly / (ny - 1) as f64 };
        let x_st = (0..=MAX_ORDER).map(|m| build_stencil(&centered_offsets(m), 0, hx, m)).collect();
        let y_st = (0..=MAX_ORDER)
            .map(|m| {
                if periodic_y {
                    vec![build_stencil(&centered_offsets(m), 0, hy, m)]
                } else {
                    (0..ny).map(|j| wall_stencil(j, ny, m, hy)).collect()
                }
            })
            .collect();
        Ok(Grid { spec, nx, ny, hx, hy, x_st, y_st })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }
    /// Representative spacing `max(hx, hy)`.
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }
    pub fn periodic_y(&self) -> bool {
        !self.spec.has_walls()
    }
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    /// `(i, j)` of a storage index.
    pub fn ij(&self, n: usize) -> (usize, usize) {
        (n % self.nx, n / self.nx)
    }
    /// Coordinates of node `n`.
    pub fn xy(&self, n: usize) -> (f64, f64) {
        let (i, j) = self.ij(n);
        (self.x(i), self.y(j))
    }

    /// Wall containing row `j`, if any.
    pub fn wall_of_row(&self, j: usize) -> Option<Wall> {
        if self.periodic_y() {
            None
        } else if j == 0 {
            Some(Wall::Bottom)
        } else if j + 1 == self.ny {
            Some(Wall::Top)
        } else {
            None
        }
    }

    /// Wall containing node `n`, if any.
    pub fn wall_of(&self, n: usize) -> Option<Wall> {
        self.wall_of_row(self.ij(n).1)
    }

    /// Rows at least `band` rows away from both walls (all rows on the torus).
    pub fn interior_band(&self, band: usize) -> std::ops::Range<usize> {
        if self.periodic_y() {
            0..self.ny
        } else {
            band..self.ny - band
        }
    }

    /// Area quadrature weight of row `j` (rectangle rule in periodic directions, trapezoid across the channel).
    pub fn quad_weight_row(&self, j: usize) -> f64 {
        let w = self.hx * self.hy;
        if self.wall_of_row(j).is_some() {
            0.5 * w
        } else {
            w
        }
    }

    /// Area quadrature weight of node `n`.
    pub fn quad_weight(&self, n: usize) -> f64 {
        self.quad_weight_row(self.ij(n).1)
    }

    /// `x` stencil for the `m`-th derivative.
    pub fn x_stencil(&self, m: usize) -> &Stencil {
        &self.x_st[m]
    }

    /// `y` stencil for the `m`-th derivative at row `j`.
    pub fn y_stencil(&self, m: usize, j: usize) -> &Stencil {
        if self.periodic_y() {
            &self.y_st[m][0]
        } else {
            &self.y_st[m][j]
        }
    }

    fn wrap_x(&self, i: isize) -> usize {
        i.rem_euclid(self.nx as isize) as usize
    }

    fn wrap_y(&self, j: isize) -> usize {
        if self.periodic_y() {
            j.rem_euclid(self.ny as isize) as usize
        } else {
            debug_assert!(j >= 0 && (j as usize) < self.ny);
            j as usize
        }
    }

    /// Node reached from `(i, j)` by offsets, wrapping periodic directions.
    pub fn offset_node(&self, i: usize, j: usize, di: isize, dj: isize) -> usize {
        self.node(self.wrap_x(i as isize + di), self.wrap_y(j as isize + dj))
    }

    /// Applies `∂x^a ∂y^b` to nodal data.
    pub fn apply_partial(&self, f: &[f64], a: usize, b: usize) -> Vec<f64> {
        let fy = if b == 0 { f.to_vec() } else { self.apply_y(f, b) };
        if a == 0 {
            fy
        } else {
            self.apply_x(&fy, a)
        }
    }

    fn apply_x(&self, f: &[f64], a: usize) -> Vec<f64> {
        let st = &self.x_st[a];
        let mut out = vec![0.0; self.len()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                let mut s = 0.0;
                for &(o, w) in st {
                    s += w * f[self.node(self.wrap_x(i as isize + o), j)];
                }
                out[self.node(i, j)] = s;
            }
        }
        out
    }

    fn apply_y(&self, f: &[f64], b: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for j in 0..self.ny {
            let st = self.y_stencil(b, j);
            for i in 0..self.nx {
                let mut s = 0.0;
                for &(o, w) in st {
                    s += w * f[self.node(i, self.wrap_y(j as isize + o))];
                }
                out[self.node(i, j)] = s;
            }
        }
        out
    }

    /// All partials up to total order `ord`, indexed by [`idx`].
    pub fn partials(&self, f: &[f64], ord: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); ncoef(ord)];
        for b in 0..=ord {
            let fy = if b == 0 { f.to_vec() } else { self.apply_y(f, b) };
            for a in 0..=(ord - b) {
                out[idx(a, b)] = if a == 0 { fy.clone() } else { self.apply_x(&fy, a) };
            }
        }
        out
    }

    /// Sparse weights `(node, weight)` of `∂x^a ∂y^b` at node `n`.
    pub fn partial_weights(&self, n: usize, a: usize, b: usize) -> Vec<(usize, f64)> {
        let (i, j) = self.ij(n);
        let mut out = Vec::new();
        for &(oy, wy) in self.y_stencil(b, j) {
            for &(ox, wx) in &self.x_st[a] {
                out.push((self.offset_node(i, j, ox, oy), wx * wy));
            }
        }
        out
    }

    /// Exponents of all partials up to total order `ord`.
    pub fn exponents(ord: usize) -> &'static [(usize, usize)] {
        &EXPONENTS[..ncoef(ord)]
    }
}

/// Second-order stencil for the `m`-th `y` derivative at row `j` of a walled grid:
/// centered where it fits, otherwise the nearest window of `m + 2` rows.
fn wall_stencil(j: usize, ny: usize, m: usize, hy: f64) -> Stencil {
    let c = centered_offsets(m);
    let half = *c.last().unwrap() as usize;
    if j >= half && j + half < ny {
        return build_stencil(&c, 0, hy, m);
    }
    let width = if m == 0 { 1 } else { m + 2 };
    let start = if j < half { 0 } else { ny - width };
    let rows: Vec<isize> = (start..start + width).map(|r| r as isize).collect();
    build_stencil(&rows, j as isize, hy, m)
}
