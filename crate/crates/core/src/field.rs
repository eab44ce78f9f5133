//! Nodal scalar, vector and (1,1)-tensor fields.

use crate::grid::Grid;

/// Nodal scalar samples, storage index `j nx + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    nx: usize,
    ny: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { nx: grid.nx(), ny: grid.ny(), data: vec![0.0; grid.len()] }
    }

    pub fn from_vec(grid: &Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.len(), "field length does not match grid");
        ScalarField { nx: grid.nx(), ny: grid.ny(), data }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = (0..grid.len()).map(|n| { let (x, y) = grid.xy(n); f(x, y) }).collect();
        ScalarField { nx: grid.nx(), ny: grid.ny(), data }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { nx: self.nx, ny: self.ny, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip(&self, o: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dims(), o.dims());
        ScalarField { nx: self.nx, ny: self.ny, data: self.data.iter().zip(&o.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn add(&self, o: &ScalarField) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &ScalarField) -> Self {
        self.zip(o, |a, b| a - b)
    }
}

/// Nodal vector field with contravariant coordinate components.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub c: [ScalarField; 2],
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField { c: [ScalarField::zeros(grid), ScalarField::zeros(grid)] }
    }

    pub fn new(x: ScalarField, y: ScalarField) -> Self {
        assert_eq!(x.dims(), y.dims());
        VectorField { c: [x, y] }
    }

    /// Samples `f(x, y) -> [u^1, u^2]` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut a = vec![0.0; grid.len()];
        let mut b = vec![0.0; grid.len()];
        for n in 0..grid.len() {
            let (x, y) = grid.xy(n);
            let v = f(x, y);
            a[n] = v[0];
            b[n] = v[1];
        }
        VectorField { c: [ScalarField::from_vec(grid, a), ScalarField::from_vec(grid, b)] }
    }

    /// Builds from per-node values.
    pub fn from_nodes(grid: &Grid, f: impl Fn(usize) -> [f64; 2]) -> Self {
        let mut a = vec![0.0; grid.len()];
        let mut b = vec![0.0; grid.len()];
        for n in 0..grid.len() {
            let v = f(n);
            a[n] = v[0];
            b[n] = v[1];
        }
        VectorField { c: [ScalarField::from_vec(grid, a), ScalarField::from_vec(grid, b)] }
    }

    /// Stacked `[u^1; u^2]` coefficient vector.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.c[0].data.clone();
        v.extend_from_slice(&self.c[1].data);
        v
    }

    /// Inverse of [`VectorField::to_flat`].
    pub fn from_flat(grid: &Grid, v: &[f64]) -> Self {
        let n = grid.len();
        assert_eq!(v.len(), 2 * n);
        VectorField { c: [ScalarField::from_vec(grid, v[..n].to_vec()), ScalarField::from_vec(grid, v[n..].to_vec())] }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.c[0].dims()
    }

    pub fn len(&self) -> usize {
        self.c[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.c[0].is_empty()
    }

    /// Value at node `n`.
    pub fn at(&self, n: usize) -> [f64; 2] {
        [self.c[0].data[n], self.c[1].data[n]]
    }

    pub fn set(&mut self, n: usize, v: [f64; 2]) {
        self.c[0].data[n] = v[0];
        self.c[1].data[n] = v[1];
    }

    /// Largest coordinate component magnitude.
    pub fn max_abs(&self) -> f64 {
        self.c[0].max_abs().max(self.c[1].max_abs())
    }

    pub fn add(&self, o: &VectorField) -> Self {
        VectorField { c: [self.c[0].add(&o.c[0]), self.c[1].add(&o.c[1])] }
    }

    pub fn sub(&self, o: &VectorField) -> Self {
        VectorField { c: [self.c[0].sub(&o.c[0]), self.c[1].sub(&o.c[1])] }
    }

    pub fn scale(&self, s: f64) -> Self {
        VectorField { c: [self.c[0].scale(s), self.c[1].scale(s)] }
    }

    /// `self + s * o`.
    pub fn axpy(&self, s: f64, o: &VectorField) -> Self {
        VectorField { c: [self.c[0].zip(&o.c[0], |a, b| a + s * b), self.c[1].zip(&o.c[1], |a, b| a + s * b)] }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }
}

/// Nodal (1,1)-tensor field, `c[i][j] = S^i_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor11Field {
    pub c: [[ScalarField; 2]; 2],
}

impl Tensor11Field {
    pub fn zeros(grid: &Grid) -> Self {
        let z = ScalarField::zeros(grid);
        Tensor11Field { c: [[z.clone(), z.clone()], [z.clone(), z]] }
    }

    /// Builds from per-node values.
    pub fn from_nodes(grid: &Grid, f: impl Fn(usize) -> [[f64; 2]; 2]) -> Self {
        let mut t = Tensor11Field::zeros(grid);
        for n in 0..grid.len() {
            let v = f(n);
            for i in 0..2 {
                for j in 0..2 {
                    t.c[i][j].data[n] = v[i][j];
                }
            }
        }
        t
    }

    /// Value at node `n`.
    pub fn at(&self, n: usize) -> [[f64; 2]; 2] {
        [[self.c[0][0].data[n], self.c[0][1].data[n]], [self.c[1][0].data[n], self.c[1][1].data[n]]]
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().flatten().fold(0.0, |m, f| m.max(f.max_abs()))
    }

    pub fn sub(&self, o: &Tensor11Field) -> Self {
        Tensor11Field {
            c: [
                [self.c[0][0].sub(&o.c[0][0]), self.c[0][1].sub(&o.c[0][1])],
                [self.c[1][0].sub(&o.c[1][0]), self.c[1][1].sub(&o.c[1][1])],
            ],
        }
    }
}
