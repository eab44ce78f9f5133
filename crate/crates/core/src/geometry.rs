//! Conformal metrics `g = e^{2φ} δ` and their node-local geometry.

use crate::field::ScalarField;
use crate::grid::{DomainSpec, Grid, Wall};
use crate::jet::Jet;
use crate::GeometryError;

/// Seam mismatch tolerated when checking periodicity of `φ`.
pub const SEAM_TOL: f64 = 1e-12;

/// Built-in conformal factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricPreset {
    /// `φ = 0`.
    Flat,
    /// `φ = a cos(2πx/Lx)`; depends on `x` only, so channel walls are totally geodesic.
    WaveX { amplitude: f64 },
    /// `φ = a sin(2πx/Lx) cos(2πy/Ly)`.
    Bump { amplitude: f64 },
    /// `φ = a cos(2π kx x/Lx) cos(2π ky y/Ly)`.
    Sinusoidal { amplitude: f64, kx: u32, ky: u32 },
}

impl MetricPreset {
    /// Evaluates `φ(x, y)` on a domain.
    pub fn phi(&self, spec: &DomainSpec, x: f64, y: f64) -> f64 {
        let tp = 2.0 * std::f64::consts::PI;
        match *self {
            MetricPreset::Flat => 0.0,
            MetricPreset::WaveX { amplitude } => amplitude * (tp * x / spec.lx).cos(),
            MetricPreset::Bump { amplitude } => amplitude * (tp * x / spec.lx).sin() * (tp * y / spec.ly).cos(),
            MetricPreset::Sinusoidal { amplitude, kx, ky } => {
                amplitude * (tp * kx as f64 * x / spec.lx).cos() * (tp * ky as f64 * y / spec.ly).cos()
            }
        }
    }

    /// Exact jet of `φ` (order 3) at `(x, y)`.
    pub fn phi_jet(&self, spec: &DomainSpec, x: f64, y: f64) -> Jet {
        let tp = 2.0 * std::f64::consts::PI;
        let (kx, ky) = (tp / spec.lx, tp / spec.ly);
        // d^n/dt^n of sin and cos at kt.
        let dsin = |k: f64, t: f64, n: usize| k.powi(n as i32) * (k * t + n as f64 * std::f64::consts::FRAC_PI_2).sin();
        let dcos = |k: f64, t: f64, n: usize| k.powi(n as i32) * (k * t + n as f64 * std::f64::consts::FRAC_PI_2).cos();
        let mut p = [0.0; 10];
        for (k, e) in crate::jet::EXPONENTS.iter().enumerate() {
            let (a, b) = *e;
            p[k] = match *self {
                MetricPreset::Flat => 0.0,
                MetricPreset::WaveX { amplitude } => {
                    if b == 0 { amplitude * dcos(kx, x, a) } else { 0.0 }
                }
                MetricPreset::Bump { amplitude } => amplitude * dsin(kx, x, a) * dcos(ky, y, b),
                MetricPreset::Sinusoidal { amplitude, kx: mx, ky: my } => {
                    amplitude * dcos(kx * mx as f64, x, a) * dcos(ky * my as f64, y, b)
                }
            };
        }
        Jet::from_partials(&p, 3)
    }

    /// Whether the metric is flat.
    pub fn is_flat(&self) -> bool {
        match *self {
            MetricPreset::Flat => true,
            MetricPreset::WaveX { amplitude } | MetricPreset::Bump { amplitude } => amplitude == 0.0,
            MetricPreset::Sinusoidal { amplitude, .. } => amplitude == 0.0,
        }
    }
}

/// Jets of the metric data at one node.
#[derive(Clone, Debug)]
pub struct LocalGeom {
    /// `φ`, order 3.
    pub phi: Jet,
    /// `e^{2φ}`, order 3.
    pub e2: Jet,
    /// `e^{-2φ}`, order 3.
    pub em2: Jet,
    /// `∂_k φ`, order 2.
    pub dphi: [Jet; 2],
    /// `Γ^k_{ij}` as `gamma[k][i][j]`, order 2.
    pub gamma: [[[Jet; 2]; 2]; 2],
    /// Gaussian curvature, order 1.
    pub k: Jet,
}

impl LocalGeom {
    /// Local geometry from `φ` partials up to order 3.
    pub fn from_phi(phi: Jet) -> Self {
        assert_eq!(phi.order(), 3);
        let e2 = (phi * 2.0).exp();
        let em2 = (phi * -2.0).exp();
        let dphi = [phi.dx(), phi.dy()];
        let zero = Jet::zero().truncate(2);
        let mut gamma = [[[zero; 2]; 2]; 2];
        for (k, gk) in gamma.iter_mut().enumerate() {
            for (i, gki) in gk.iter_mut().enumerate() {
                for (j, g) in gki.iter_mut().enumerate() {
                    let mut v = zero;
                    if k == i {
                        v += dphi[j];
                    }
                    if k == j {
                        v += dphi[i];
                    }
                    if i == j {
                        v -= dphi[k];
                    }
                    *g = v;
                }
            }
        }
        let lap = dphi[0].dx() + dphi[1].dy();
        let k = -(em2 * lap);
        LocalGeom { phi, e2, em2, dphi, gamma, k }
    }
}

/// Conformal metric sampled on a grid, with cached derived quantities.
#[derive(Clone, Debug)]
pub struct ConformalMetric {
    grid: Grid,
    phi: ScalarField,
    local: Vec<LocalGeom>,
    flat: bool,
}

impl ConformalMetric {
    /// Samples `φ` and builds the node-local geometry. `φ` must be periodic across every seam.
    pub fn new(grid: &Grid, phi: impl Fn(f64, f64) -> f64) -> Result<Self, GeometryError> {
        let spec = grid.spec();
        for j in 0..grid.ny() {
            let y = grid.y(j);
            let d = (phi(spec.lx, y) - phi(0.0, y)).abs();
            if d.is_nan() || d > SEAM_TOL {
                return Err(GeometryError::NonPeriodicMetric(format!("x-seam mismatch {d:e} at y = {y}")));
            }
        }
        if grid.periodic_y() {
            for i in 0..grid.nx() {
                let x = grid.x(i);
                let d = (phi(x, spec.ly) - phi(x, 0.0)).abs();
                if d.is_nan() || d > SEAM_TOL {
                    return Err(GeometryError::NonPeriodicMetric(format!("y-seam mismatch {d:e} at x = {x}")));
                }
            }
        }
        let samples = ScalarField::from_fn(grid, &phi);
        Self::from_samples(grid, samples)
    }

    /// Builds from a preset.
    pub fn from_preset(grid: &Grid, preset: MetricPreset) -> Result<Self, GeometryError> {
        let spec = *grid.spec();
        let mut m = Self::new(grid, |x, y| preset.phi(&spec, x, y))?;
        m.flat = preset.is_flat();
        Ok(m)
    }

    /// Flat metric.
    pub fn flat(grid: &Grid) -> Self {
        Self::from_preset(grid, MetricPreset::Flat).expect("flat metric is periodic")
    }

    /// Builds from nodal samples of `φ`; derivatives come from the grid stencils.
    pub fn from_samples(grid: &Grid, phi: ScalarField) -> Result<Self, GeometryError> {
        if phi.dims() != (grid.nx(), grid.ny()) {
            return Err(GeometryError::InvalidGrid("φ samples do not match the grid".into()));
        }
        if phi.data.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("φ".into()));
        }
        let parts = grid.partials(&phi.data, 3);
        let mut buf = [0.0; 10];
        let local = (0..grid.len())
            .map(|n| {
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = parts[k][n];
                }
                LocalGeom::from_phi(Jet::from_partials(&buf, 3))
            })
            .collect();
        let flat = phi.data.iter().all(|&v| v == 0.0);
        Ok(ConformalMetric { grid: grid.clone(), phi, local, flat })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Node-local jets.
    pub fn local(&self, n: usize) -> &LocalGeom {
        &self.local[n]
    }

    /// Whether `φ` vanishes identically.
    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    /// Conformal weight `e^{2φ}` (also the area density).
    pub fn conformal_weight(&self) -> ScalarField {
        self.scalar(|l| l.e2.value())
    }

    /// Gaussian curvature.
    pub fn gaussian_curvature(&self) -> ScalarField {
        self.scalar(|l| l.k.value())
    }

    /// Christoffel symbol `Γ^k_{ij}`.
    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> ScalarField {
        self.scalar(|l| l.gamma[k][i][j].value())
    }

    /// Quadrature weight times area density at node `n`.
    pub fn volume_weight(&self, n: usize) -> f64 {
        self.grid.quad_weight(n) * self.local[n].e2.value()
    }

    /// Riemannian area of the domain under the grid quadrature.
    pub fn total_volume(&self) -> f64 {
        (0..self.grid.len()).map(|n| self.volume_weight(n)).sum()
    }

    fn scalar(&self, f: impl Fn(&LocalGeom) -> f64) -> ScalarField {
        ScalarField::from_vec(&self.grid, self.local.iter().map(f).collect())
    }

    /// `∂x^a ∂y^b φ` at node `n`.
    pub fn phi_partial(&self, n: usize, a: usize, b: usize) -> f64 {
        self.local[n].phi.partial(a, b)
    }
}

/// Geometry of one wall node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallNode {
    pub node: usize,
    pub wall: Wall,
    /// Outward unit normal, coordinate components.
    pub normal: [f64; 2],
    /// Shape operator `S_n = -∇ n` restricted to the wall: `S_n(u) = s u` for tangent `u`.
    pub shape: f64,
    /// Arc-length quadrature weight.
    pub arc_weight: f64,
}

/// Wall geometry of a channel; empty on the torus.
#[derive(Clone, Debug, Default)]
pub struct BoundaryData {
    pub nodes: Vec<WallNode>,
}

impl BoundaryData {
    /// Wall nodes and their normals, shape operators and arc weights.
    pub fn new(metric: &ConformalMetric) -> Self {
        let g = metric.grid();
        let mut nodes = Vec::new();
        for n in 0..g.len() {
            if let Some(wall) = g.wall_of(n) {
                let l = metric.local(n);
                let sigma = wall.normal_sign();
                let emphi = (-l.phi.value()).exp();
                nodes.push(WallNode {
                    node: n,
                    wall,
                    normal: [0.0, sigma * emphi],
                    shape: -sigma * emphi * l.dphi[1].value(),
                    arc_weight: g.hx() * l.phi.value().exp(),
                });
            }
        }
        BoundaryData { nodes }
    }
}

/// Metric plus wall data.
pub fn build_geometry(grid: &Grid, phi: impl Fn(f64, f64) -> f64) -> Result<(ConformalMetric, BoundaryData), GeometryError> {
    let m = ConformalMetric::new(grid, phi)?;
    let b = BoundaryData::new(&m);
    Ok((m, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WallCondition;
    use std::f64::consts::PI;

    #[test]
    fn christoffel_closed_form() {
        let g = Grid::new(DomainSpec::torus(1.0, 1.0), 32, 32).unwrap();
        let m = ConformalMetric::from_preset(&g, MetricPreset::Bump { amplitude: 0.3 }).unwrap();
        for n in [0, 17, 300, 1000] {
            let l = m.local(n);
            let px = l.dphi[0].value();
            let py = l.dphi[1].value();
            assert_eq!(l.gamma[0][0][0].value(), px);
            assert_eq!(l.gamma[0][0][1].value(), py);
            assert_eq!(l.gamma[0][1][1].value(), -px);
            assert_eq!(l.gamma[1][0][1].value(), px);
            assert_eq!(l.gamma[1][0][0].value(), -py);
            assert_eq!(l.gamma[1][1][1].value(), py);
            // Σ_i Γ^i_{ik} = 2 ∂_k φ
            for k in 0..2 {
                let s = l.gamma[0][0][k].value() + l.gamma[1][1][k].value();
                assert!((s - 2.0 * l.dphi[k].value()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn curvature_of_wave_metric() {
        // φ = a cos(2πx): K = -e^{-2φ} φ'' = a (2π)^2 cos(2πx) e^{-2φ}
        let a = 0.2;
        for &nx in &[32usize, 64] {
            let g = Grid::new(DomainSpec::torus(1.0, 1.0), nx, 8).unwrap();
            let m = ConformalMetric::from_preset(&g, MetricPreset::WaveX { amplitude: a }).unwrap();
            let k = m.gaussian_curvature();
            let mut err: f64 = 0.0;
            for n in 0..g.len() {
                let (x, _) = g.xy(n);
                let phi = a * (2.0 * PI * x).cos();
                let want = a * (2.0 * PI).powi(2) * (2.0 * PI * x).cos() * (-2.0 * phi).exp();
                err = err.max((k.data[n] - want).abs());
            }
            assert!(err < 40.0 / (nx * nx) as f64, "nx={nx} err={err}");
        }
    }

    #[test]
    fn flat_metric_is_exactly_flat() {
        let g = Grid::new(DomainSpec::torus(1.0, 1.0), 16, 16).unwrap();
        let m = ConformalMetric::flat(&g);
        assert!(m.is_flat());
        assert!(m.gaussian_curvature().data.iter().all(|&v| v == 0.0));
        assert!(m.conformal_weight().data.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn rejects_non_periodic_phi() {
        let g = Grid::new(DomainSpec::torus(1.0, 1.0), 16, 16).unwrap();
        assert!(matches!(ConformalMetric::new(&g, |x, _| x), Err(GeometryError::NonPeriodicMetric(_))));
        assert!(matches!(ConformalMetric::new(&g, |_, y| 0.1 * y), Err(GeometryError::NonPeriodicMetric(_))));
        let c = Grid::new(DomainSpec::channel(1.0, 1.0, WallCondition::Dirichlet, WallCondition::Dirichlet), 16, 16).unwrap();
        assert!(ConformalMetric::new(&c, |_, y| 0.1 * y).is_ok());
    }

    #[test]
    fn wall_normals_are_unit_and_outward() {
        let g = Grid::new(DomainSpec::channel(1.0, 1.0, WallCondition::Dirichlet, WallCondition::Neumann), 16, 16).unwrap();
        let (m, b) = build_geometry(&g, |x, y| 0.2 * (2.0 * PI * x).cos() + 0.1 * y).unwrap();
        assert_eq!(b.nodes.len(), 32);
        for w in &b.nodes {
            let e2 = m.local(w.node).e2.value();
            let len2 = e2 * (w.normal[0].powi(2) + w.normal[1].powi(2));
            assert!((len2 - 1.0).abs() < 1e-14);
            assert_eq!(w.normal[1].signum(), w.wall.normal_sign());
        }
        let (_, b) = build_geometry(&g, |x, _| 0.2 * (2.0 * PI * x).cos()).unwrap();
        assert!(b.nodes.iter().all(|w| w.shape.abs() < 1e-13));
    }

    #[test]
    fn preset_jets_match_differences_of_phi() {
        let spec = DomainSpec::torus(1.0, 1.3);
        let presets = [
            MetricPreset::WaveX { amplitude: 0.2 },
            MetricPreset::Bump { amplitude: 0.3 },
            MetricPreset::Sinusoidal { amplitude: 0.25, kx: 2, ky: 1 },
        ];
        let e = 1e-4;
        for p in presets {
            for &(x, y) in &[(0.13, 0.41), (0.77, 1.05)] {
                let j = p.phi_jet(&spec, x, y);
                let f = |a: f64, b: f64| p.phi(&spec, a, b);
                assert!((j.value() - f(x, y)).abs() < 1e-15);
                assert!((j.dx().value() - (f(x + e, y) - f(x - e, y)) / (2.0 * e)).abs() < 1e-6);
                assert!((j.dy().value() - (f(x, y + e) - f(x, y - e)) / (2.0 * e)).abs() < 1e-6);
                let dxy = (f(x + e, y + e) - f(x + e, y - e) - f(x - e, y + e) + f(x - e, y - e)) / (4.0 * e * e);
                assert!((j.dx().dy().value() - dxy).abs() < 1e-5);
            }
        }
        assert!(MetricPreset::Sinusoidal { amplitude: 0.0, kx: 1, ky: 1 }.is_flat());
    }
}
