//! The Helmholtz-type operator `1 - α² 𝓛` and the Stokes projector onto divergence-free,
//! wall-compatible fields.
//!
//! The operator is collocated in strong form: interior rows evaluate the jet formula,
//! wall rows carry the boundary conditions. The projector is the exact `⟨,⟩₁`-orthogonal
//! projection of the grid space onto the discrete constraint set `{BC rows = 0, div = 0}`,
//! computed from a saddle-point system whose Gram block is assembled from the same
//! deformation stencils used by [`calculus::inner1`].

use std::sync::Arc;

use crate::calculus;
use crate::field::{ScalarField, VectorField};
use crate::geometry::{BoundaryData, ConformalMetric, LocalGeom};
use crate::grid::{DomainKind, DomainSpec, Grid, Wall, WallCondition};
use crate::jet::{ncoef, Jet, EXPONENTS, FACT};
use crate::local::{self, V};
use crate::sparse::{Builder, Csr, RegularizedSolver, SparseLu};
use crate::EllipticError;

/// Relative tolerance of saddle-point refinement.
pub const SADDLE_TOL: f64 = 1e-14;
/// Diagonal regularization of the multiplier block, relative to the scaled system.
pub const SADDLE_DELTA: f64 = 1e-9;

/// Boundary regime; selects the constrained subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcRegime {
    /// No walls.
    Periodic,
    /// No slip on both walls.
    Dirichlet,
    /// Free slip on both walls.
    Neumann,
    /// One wall of each kind.
    Mixed { bottom: WallCondition, top: WallCondition },
}

impl BcRegime {
    /// Regime implied by a domain.
    pub fn from_domain(spec: &DomainSpec) -> Self {
        match spec.kind {
            DomainKind::Torus => BcRegime::Periodic,
            DomainKind::Channel { bottom: WallCondition::Dirichlet, top: WallCondition::Dirichlet } => BcRegime::Dirichlet,
            DomainKind::Channel { bottom: WallCondition::Neumann, top: WallCondition::Neumann } => BcRegime::Neumann,
            DomainKind::Channel { bottom, top } => BcRegime::Mixed { bottom, top },
        }
    }

    /// Condition on a wall.
    pub fn condition(&self, w: Wall) -> Option<WallCondition> {
        match *self {
            BcRegime::Periodic => None,
            BcRegime::Dirichlet => Some(WallCondition::Dirichlet),
            BcRegime::Neumann => Some(WallCondition::Neumann),
            BcRegime::Mixed { bottom, top } => Some(if w == Wall::Bottom { bottom } else { top }),
        }
    }

    /// Whether any wall is free slip.
    pub fn has_neumann(&self) -> bool {
        [Wall::Bottom, Wall::Top].iter().any(|&w| self.condition(w) == Some(WallCondition::Neumann))
    }

    /// Short name.
    pub fn name(&self) -> &'static str {
        match self {
            BcRegime::Periodic => "periodic",
            BcRegime::Dirichlet => "dirichlet",
            BcRegime::Neumann => "neumann",
            BcRegime::Mixed { .. } => "mixed",
        }
    }
}

/// Linear coefficients of a local jet formula: for each output, `(component, partial index, weight)`.
fn probe(l: &LocalGeom, ord: usize, nout: usize, f: &dyn Fn(&LocalGeom, &V) -> Vec<f64>) -> Vec<Vec<(usize, usize, f64)>> {
    let mut out = vec![Vec::new(); nout];
    let zero = Jet::zero().truncate(ord);
    for c in 0..2 {
        for k in 0..ncoef(ord) {
            let mut coef = [0.0; 10];
            coef[k] = 1.0 / FACT[k];
            let mut u: V = [zero, zero];
            u[c] = Jet::from_taylor(&coef, ord);
            let vals = f(l, &u);
            for (o, &v) in vals.iter().enumerate() {
                if v != 0.0 {
                    out[o].push((c, k, v));
                }
            }
        }
    }
    out
}

/// Adds the stencil expansion of probed coefficients to row `row`.
fn add_row(b: &mut Builder, grid: &Grid, n: usize, row: usize, coefs: &[(usize, usize, f64)], scale: f64) {
    let nn = grid.len();
    for &(c, k, w) in coefs {
        let (a, bb) = EXPONENTS[k];
        for (node, sw) in grid.partial_weights(n, a, bb) {
            b.add(row, c * nn + node, scale * w * sw);
        }
    }
}

/// Row `r` of a matrix as `(column, value)` after assembling a single-output local formula.
fn assemble_rows(m: &ConformalMetric, ord: usize, nout: usize, f: &dyn Fn(&LocalGeom, &V) -> Vec<f64>) -> Csr {
    let g = m.grid();
    let mut b = Builder::new(nout * g.len(), 2 * g.len());
    for n in 0..g.len() {
        let p = probe(m.local(n), ord, nout, f);
        for (o, coefs) in p.iter().enumerate() {
            add_row(&mut b, g, n, o * g.len() + n, coefs, 1.0);
        }
    }
    b.build()
}

/// Sparse map `u ↦ Def u`, rows `(i, j, node)` ordered `(2i + j) N + node`.
pub fn deformation_matrix(m: &ConformalMetric) -> Csr {
    assemble_rows(m, 1, 4, &|l, u| {
        let d = local::def(l, u);
        vec![d[0][0].value(), d[0][1].value(), d[1][0].value(), d[1][1].value()]
    })
}

/// Sparse map `u ↦ div u` in flux form `e^{-2φ} D_i (e^{2φ} u^i)`, differencing the grid
/// product. On the torus `Σ e^{2φ} div u = 0` exactly, so the harmonic fields stay in the kernel.
pub fn divergence_matrix(m: &ConformalMetric) -> Csr {
    let g = m.grid();
    let nn = g.len();
    let mut b = Builder::new(nn, 2 * nn);
    for n in 0..nn {
        let em2 = m.local(n).em2.value();
        for (c, (a, bb)) in [(1, 0), (0, 1)].into_iter().enumerate() {
            for (node, w) in g.partial_weights(n, a, bb) {
                b.add(n, c * nn + node, em2 * w * m.local(node).e2.value());
            }
        }
    }
    b.build()
}

/// Gram matrix of `⟨,⟩₁` on the flat coefficient vector `[u^1; u^2]`.
pub fn gram_matrix(m: &ConformalMetric, alpha: f64) -> Csr {
    let g = m.grid();
    let nn = g.len();
    let mut b = Builder::new(2 * nn, 2 * nn);
    for n in 0..nn {
        let e2 = m.local(n).e2.value();
        let w = g.quad_weight(n) * e2 * e2;
        b.add(n, n, w);
        b.add(nn + n, nn + n, w);
    }
    if alpha != 0.0 {
        let d = deformation_matrix(m);
        let mut wd = vec![0.0; 4 * nn];
        for (r, wr) in wd.iter_mut().enumerate() {
            let n = r % nn;
            let l = m.local(n);
            *wr = 2.0 * alpha * alpha * g.quad_weight(n) * l.e2.value() * (l.e2.value() * l.em2.value());
        }
        b.add_block(&d.gram(&wd), 0, 0, 1.0);
    }
    b.build()
}

/// Boundary-condition rows: two per wall node, `[row for u^1 slot; row for u^2 slot]`.
/// Dirichlet: `u = 0`. Neumann: tangential traction row and `u^2 = 0`.
pub fn boundary_rows(m: &ConformalMetric, bd: &BoundaryData, regime: BcRegime) -> Vec<(usize, usize, Vec<(usize, f64)>)> {
    let g = m.grid();
    let nn = g.len();
    let mut rows = Vec::new();
    for w in &bd.nodes {
        let n = w.node;
        let cond = regime.condition(w.wall).expect("walls imply a wall regime");
        match cond {
            WallCondition::Dirichlet => {
                rows.push((n, 0, vec![(n, 1.0)]));
                rows.push((n, 1, vec![(nn + n, 1.0)]));
            }
            WallCondition::Neumann => {
                let (nrm, shape) = (w.normal, w.shape);
                let p = probe(m.local(n), 1, 1, &|l, u| {
                    let t = local::cov(l, u);
                    vec![t[0][0].value() * nrm[0] + t[0][1].value() * nrm[1] + shape * u[0].value()]
                });
                let mut b = Builder::new(1, 2 * nn);
                add_row(&mut b, g, n, 0, &p[0], 1.0);
                let r = b.build();
                rows.push((n, 0, r.row(0).collect()));
                rows.push((n, 1, vec![(nn + n, 1.0)]));
            }
        }
    }
    rows
}

/// Sets wall values so the discrete boundary rows hold exactly.
pub fn enforce_bc(m: &ConformalMetric, bd: &BoundaryData, regime: BcRegime, u: &VectorField) -> VectorField {
    let nn = m.grid().len();
    let mut x = u.to_flat();
    // Tangency and no-slip rows first; the traction rows read the corrected normal component.
    let rows = boundary_rows(m, bd, regime);
    for (_, _, r) in rows.iter().filter(|r| r.2.len() == 1) {
        x[r[0].0] = 0.0;
    }
    for (n, slot, r) in rows.iter().filter(|r| r.2.len() > 1) {
        let own = slot * nn + n;
        let diag = r.iter().find(|(c, _)| *c == own).map(|e| e.1).unwrap_or(0.0);
        let rest: f64 = r.iter().filter(|(c, _)| *c != own).map(|(c, v)| v * x[*c]).sum();
        x[own] = -rest / diag;
    }
    VectorField::from_flat(m.grid(), &x)
}

/// Residual of the boundary rows (max-norm, each row normalized by its largest weight).
pub fn bc_residual(m: &ConformalMetric, bd: &BoundaryData, regime: BcRegime, u: &VectorField) -> f64 {
    let x = u.to_flat();
    boundary_rows(m, bd, regime)
        .iter()
        .map(|(_, _, r)| {
            let s: f64 = r.iter().map(|(c, v)| v * x[*c]).sum();
            let scale = r.iter().fold(0.0f64, |a, (_, v)| a.max(v.abs()));
            (s / scale).abs()
        })
        .fold(0.0, f64::max)
}

/// Strong-form operator `1 - α² 𝓛` with boundary rows, factored once.
#[derive(Debug)]
pub struct EllipticOperator {
    metric: Arc<ConformalMetric>,
    boundary: BoundaryData,
    regime: BcRegime,
    alpha: f64,
    matrix: Csr,
    lu: SparseLu,
}

impl EllipticOperator {
    pub fn new(metric: Arc<ConformalMetric>, regime: BcRegime, alpha: f64) -> Result<Self, EllipticError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(EllipticError::InvalidAlpha(alpha));
        }
        let boundary = BoundaryData::new(&metric);
        let g = metric.grid();
        let nn = g.len();
        let a2 = alpha * alpha;
        let mut b = Builder::new(2 * nn, 2 * nn);
        for n in 0..nn {
            if g.wall_of(n).is_some() {
                continue;
            }
            let p = probe(metric.local(n), 2, 2, &|l, u| local::vvalue(&local::helmholtz(l, a2, u)).to_vec());
            add_row(&mut b, g, n, n, &p[0], 1.0);
            add_row(&mut b, g, n, nn + n, &p[1], 1.0);
        }
        for (n, slot, r) in boundary_rows(&metric, &boundary, regime) {
            for (c, v) in r {
                b.add(slot * nn + n, c, v);
            }
        }
        let matrix = b.build();
        let lu = SparseLu::new(&matrix)?;
        Ok(EllipticOperator { metric, boundary, regime, alpha, matrix, lu })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn regime(&self) -> BcRegime {
        self.regime
    }

    pub fn metric(&self) -> &Arc<ConformalMetric> {
        &self.metric
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    /// Collocated matrix (interior operator rows, wall BC rows).
    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    /// Pointwise `(1 - α² 𝓛) u` at every node, walls included.
    pub fn apply(&self, u: &VectorField) -> VectorField {
        let m = &*self.metric;
        let a2 = self.alpha * self.alpha;
        let uj = calculus::vector_jets(m.grid(), u, 2);
        calculus::eval_vector(m, |n| local::helmholtz(m.local(n), a2, &uj[n]))
    }

    /// Solves `(1 - α² 𝓛) u = f` in the interior with homogeneous wall conditions.
    pub fn solve(&self, f: &VectorField) -> Result<VectorField, EllipticError> {
        let g = self.metric.grid();
        if f.dims() != (g.nx(), g.ny()) {
            return Err(EllipticError::ShapeMismatch);
        }
        let nn = g.len();
        let mut rhs = f.to_flat();
        for w in &self.boundary.nodes {
            rhs[w.node] = 0.0;
            rhs[nn + w.node] = 0.0;
        }
        let x = self.lu.solve(&rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(EllipticError::Singular("non-finite solution".into()));
        }
        Ok(VectorField::from_flat(g, &x))
    }

    /// `L^α v = (1 - α² 𝓛)^{-1} (1 - α² 𝓛) v`: identity on wall-compatible fields.
    pub fn l_alpha(&self, v: &VectorField) -> Result<VectorField, EllipticError> {
        if self.regime == BcRegime::Periodic {
            return Ok(v.clone());
        }
        self.solve(&self.apply(v))
    }

    /// Relative residual of `A u = f` on interior rows.
    pub fn residual(&self, u: &VectorField, f: &VectorField) -> f64 {
        let g = self.metric.grid();
        let au = self.apply(u);
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for n in 0..g.len() {
            if g.wall_of(n).is_some() {
                continue;
            }
            for c in 0..2 {
                num = num.max((au.c[c].data[n] - f.c[c].data[n]).abs());
                den = den.max(f.c[c].data[n].abs());
            }
        }
        num / den.max(f64::MIN_POSITIVE)
    }
}

/// Builds the scaled saddle system `[A, (DC)^T; DC, -δ I]`.
fn saddle(a: &Csr, c: &Csr) -> Result<(RegularizedSolver, Vec<f64>), EllipticError> {
    let np = a.nrows;
    let nc = c.nrows;
    let diag_mean = (0..np).map(|r| a.row(r).filter(|(cc, _)| *cc == r).map(|e| e.1).sum::<f64>()).sum::<f64>() / np as f64;
    let target = diag_mean.sqrt();
    let scales: Vec<f64> = (0..nc).map(|r| { let m = c.row_max(r); if m > 0.0 { target / m } else { 1.0 } }).collect();
    let mut b = Builder::new(np + nc, np + nc);
    b.add_block(a, 0, 0, 1.0);
    for r in 0..nc {
        for (col, v) in c.row(r) {
            b.add(np + r, col, scales[r] * v);
            b.add(col, np + r, scales[r] * v);
        }
    }
    let k = b.build();
    let s = RegularizedSolver::new(k, np, SADDLE_DELTA * diag_mean, SADDLE_TOL)?;
    Ok((s, scales))
}

/// Exact `⟨,⟩₁`-orthogonal projection onto discretely divergence-free, wall-compatible fields.
#[derive(Debug)]
pub struct StokesProjector {
    metric: Arc<ConformalMetric>,
    regime: BcRegime,
    alpha: f64,
    gram: Csr,
    div: Csr,
    constrained: RegularizedSolver,
    div_scales: Vec<f64>,
    n_bc: usize,
    bc_only: Option<RegularizedSolver>,
}

impl StokesProjector {
    pub fn new(metric: Arc<ConformalMetric>, regime: BcRegime, alpha: f64) -> Result<Self, EllipticError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(EllipticError::InvalidAlpha(alpha));
        }
        let g = metric.grid();
        let nn = g.len();
        let gram = gram_matrix(&metric, alpha);
        let div = divergence_matrix(&metric);
        let bd = BoundaryData::new(&metric);
        let rows = boundary_rows(&metric, &bd, regime);
        let n_bc = rows.len();
        let mut cb = Builder::new(n_bc + nn, 2 * nn);
        for (r, (_, _, row)) in rows.iter().enumerate() {
            for &(c, v) in row {
                cb.add(r, c, v);
            }
        }
        cb.add_block(&div, n_bc, 0, 1.0);
        let (constrained, scales) = saddle(&gram, &cb.build())?;
        let div_scales = scales[n_bc..].to_vec();
        let bc_only = if n_bc > 0 {
            let mut bb = Builder::new(n_bc, 2 * nn);
            for (r, (_, _, row)) in rows.iter().enumerate() {
                for &(c, v) in row {
                    bb.add(r, c, v);
                }
            }
            Some(saddle(&gram, &bb.build())?.0)
        } else {
            None
        };
        Ok(StokesProjector { metric, regime, alpha, gram, div, constrained, div_scales, n_bc, bc_only })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn regime(&self) -> BcRegime {
        self.regime
    }

    pub fn metric(&self) -> &Arc<ConformalMetric> {
        &self.metric
    }

    /// Gram matrix of `⟨,⟩₁`.
    pub fn gram(&self) -> &Csr {
        &self.gram
    }

    fn solve_constrained(&self, covector: &[f64]) -> Result<Vec<f64>, EllipticError> {
        let np = covector.len();
        let mut rhs = covector.to_vec();
        rhs.resize(self.constrained.matrix().nrows, 0.0);
        let mut x = self.constrained.solve(&rhs)?;
        let tail = x.split_off(np);
        Ok([x, tail].concat())
    }

    /// `P_e v`.
    pub fn project(&self, v: &VectorField) -> Result<VectorField, EllipticError> {
        Ok(self.decompose(v)?.0)
    }

    /// `v = P_e v + G(q)` with `G(q)` = [`StokesProjector::complement_field`]`(q)`; returns `(P_e v, q)`.
    pub fn decompose(&self, v: &VectorField) -> Result<(VectorField, ScalarField), EllipticError> {
        let g = self.metric.grid();
        let nn = g.len();
        let x = self.gram.matvec(&v.to_flat());
        let sol = self.solve_constrained(&x)?;
        let w = VectorField::from_flat(g, &sol[..2 * nn]);
        // M1 (v - w) = C_div^T s λ = -C_div^T (μ-weighted q).
        let lam = &sol[2 * nn + self.n_bc..];
        let q = (0..nn).map(|n| -lam[n] * self.div_scales[n] / self.metric.volume_weight(n)).collect();
        Ok((w, ScalarField::from_vec(g, q)))
    }

    /// The `w ∈ P_e`-range with `⟨w, z⟩₁ = b · z` for every discretely divergence-free, wall-compatible `z`.
    pub fn riesz_project(&self, covector: &[f64]) -> Result<VectorField, EllipticError> {
        let g = self.metric.grid();
        let sol = self.solve_constrained(covector)?;
        Ok(VectorField::from_flat(g, &sol[..2 * g.len()]))
    }

    /// Discrete `(1 - α² 𝓛)^{-1} grad q`: the wall-compatible `w` with `⟨w, z⟩₁ = -(q, div z)₀`
    /// for every wall-compatible `z`. It lies in the kernel of `P_e`.
    pub fn complement_field(&self, q: &ScalarField) -> Result<VectorField, EllipticError> {
        let g = self.metric.grid();
        let nn = g.len();
        let wq: Vec<f64> = (0..nn).map(|n| -self.metric.volume_weight(n) * q.data[n]).collect();
        let cov = self.div.matvec_t(&wq);
        match &self.bc_only {
            None => {
                // No walls: M1 is positive definite.
                let mut rhs = cov;
                let k = self.constrained.matrix();
                rhs.resize(k.nrows, 0.0);
                let lu = SparseLu::new(&self.gram)?;
                let x = lu.solve(&rhs[..2 * nn]);
                Ok(VectorField::from_flat(g, &x))
            }
            Some(s) => {
                let mut rhs = cov;
                rhs.resize(s.matrix().nrows, 0.0);
                let x = s.solve(&rhs)?;
                Ok(VectorField::from_flat(g, &x[..2 * nn]))
            }
        }
    }

    /// Covector `b` with `b · z = ⟨v, z⟩₀`.
    pub fn l2_covector(&self, v: &VectorField) -> Vec<f64> {
        let g = self.metric.grid();
        let nn = g.len();
        let mut b = v.to_flat();
        for n in 0..nn {
            let e2 = self.metric.local(n).e2.value();
            let w = g.quad_weight(n) * e2 * e2;
            b[n] *= w;
            b[nn + n] *= w;
        }
        b
    }

    /// Max-norm of the discrete divergence.
    pub fn divergence_residual(&self, v: &VectorField) -> f64 {
        crate::sparse::norm_inf(&self.div.matvec(&v.to_flat()))
    }
}

/// `L²`-orthogonal removal of discrete gradients: `b ↦ b - grad p` minimizing `‖b - grad p‖₀`.
#[derive(Debug)]
pub struct GradientRemover {
    metric: Arc<ConformalMetric>,
    solver: RegularizedSolver,
    mass: Vec<f64>,
}

impl GradientRemover {
    pub fn new(metric: Arc<ConformalMetric>) -> Result<Self, EllipticError> {
        let g = metric.grid();
        let nn = g.len();
        let mass: Vec<f64> = (0..2 * nn)
            .map(|r| {
                let n = r % nn;
                let e2 = metric.local(n).e2.value();
                g.quad_weight(n) * e2 * e2
            })
            .collect();
        let mut a = Builder::new(2 * nn, 2 * nn);
        for (r, &w) in mass.iter().enumerate() {
            a.add(r, r, w);
        }
        // C = G^T M0 with G the gradient map.
        let mut c = Builder::new(nn, 2 * nn);
        for n in 0..nn {
            let l = metric.local(n);
            for (dir, (aa, bb)) in [(1usize, 0usize), (0, 1)].into_iter().enumerate() {
                for (node, w) in g.partial_weights(n, aa, bb) {
                    let r = dir * nn + n;
                    c.add(node, r, mass[r] * l.em2.value() * w);
                }
            }
        }
        let (solver, _) = saddle(&a.build(), &c.build())?;
        Ok(GradientRemover { metric, solver, mass })
    }

    /// Remainder of `b` after removing its gradient part.
    pub fn remove(&self, b: &VectorField) -> Result<VectorField, EllipticError> {
        let g = self.metric.grid();
        let nn = g.len();
        let mut rhs: Vec<f64> = b.to_flat().iter().zip(&self.mass).map(|(v, w)| v * w).collect();
        rhs.resize(self.solver.matrix().nrows, 0.0);
        let x = self.solver.solve(&rhs)?;
        Ok(VectorField::from_flat(g, &x[..2 * nn]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricPreset;
    use crate::testfields;

    fn setup(spec: DomainSpec, n: usize, preset: MetricPreset) -> Arc<ConformalMetric> {
        let g = Grid::new(spec, n, n).unwrap();
        Arc::new(ConformalMetric::from_preset(&g, preset).unwrap())
    }

    fn specs() -> Vec<DomainSpec> {
        vec![
            DomainSpec::torus(1.0, 1.0),
            DomainSpec::channel(1.0, 1.0, WallCondition::Dirichlet, WallCondition::Dirichlet),
            DomainSpec::channel(1.0, 1.0, WallCondition::Dirichlet, WallCondition::Neumann),
            DomainSpec::channel(1.0, 1.0, WallCondition::Neumann, WallCondition::Neumann),
        ]
    }

    #[test]
    fn matrix_rows_match_pointwise_apply() {
        for spec in specs() {
            let m = setup(spec, 16, MetricPreset::Bump { amplitude: 0.2 });
            let op = EllipticOperator::new(m.clone(), BcRegime::from_domain(&spec), 0.3).unwrap();
            let u = testfields::random_vector(&m, 1, 3);
            let au = op.apply(&u);
            let mu = VectorField::from_flat(m.grid(), &op.matrix().matvec(&u.to_flat()));
            for n in 0..m.grid().len() {
                if m.grid().wall_of(n).is_none() {
                    for c in 0..2 {
                        assert!((au.c[c].data[n] - mu.c[c].data[n]).abs() < 1e-9 * (1.0 + au.max_abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn solve_round_trip() {
        for spec in specs() {
            let m = setup(spec, 16, MetricPreset::WaveX { amplitude: 0.2 });
            let op = EllipticOperator::new(m.clone(), BcRegime::from_domain(&spec), 0.5).unwrap();
            let f = testfields::random_vector(&m, 2, 3);
            let u = op.solve(&f).unwrap();
            assert!(op.residual(&u, &f) < 1e-10);
        }
    }

    #[test]
    fn enforce_bc_zeroes_rows() {
        for spec in specs().into_iter().skip(1) {
            let m = setup(spec, 16, MetricPreset::WaveX { amplitude: 0.2 });
            let bd = BoundaryData::new(&m);
            let r = BcRegime::from_domain(&spec);
            let u = enforce_bc(&m, &bd, r, &testfields::random_vector(&m, 3, 2));
            assert!(bc_residual(&m, &bd, r, &u) < 1e-13);
        }
    }

    #[test]
    fn projector_is_idempotent_and_self_adjoint() {
        for spec in specs() {
            let m = setup(spec, 16, MetricPreset::Bump { amplitude: 0.2 });
            let alpha = 0.4;
            let p = StokesProjector::new(m.clone(), BcRegime::from_domain(&spec), alpha).unwrap();
            let u = testfields::random_vector(&m, 4, 3);
            let v = testfields::random_vector(&m, 5, 3);
            let pu = p.project(&u).unwrap();
            let ppu = p.project(&pu).unwrap();
            assert!(ppu.sub(&pu).max_abs() < 1e-10 * pu.max_abs());
            let pv = p.project(&v).unwrap();
            let a = calculus::inner1(&m, alpha, &pu, &v);
            let b = calculus::inner1(&m, alpha, &u, &pv);
            assert!((a - b).abs() < 1e-10 * calculus::norm1(&m, alpha, &u) * calculus::norm1(&m, alpha, &v));
            assert!(p.divergence_residual(&pu) < 1e-9 * u.max_abs() / m.grid().h());
        }
    }

    #[test]
    fn decomposition_recovers_complement() {
        for spec in specs() {
            let m = setup(spec, 16, MetricPreset::Bump { amplitude: 0.2 });
            let regime = BcRegime::from_domain(&spec);
            let p = StokesProjector::new(m.clone(), regime, 0.3).unwrap();
            let bd = BoundaryData::new(&m);
            let u = enforce_bc(&m, &bd, regime, &testfields::random_vector(&m, 6, 3));
            let (w, q) = p.decompose(&u).unwrap();
            let c = p.complement_field(&q).unwrap();
            assert!(w.add(&c).sub(&u).max_abs() < 1e-9 * u.max_abs(), "{:?}", spec.kind);
            assert!(p.project(&c).unwrap().max_abs() < 1e-9 * c.max_abs());
        }
    }

    #[test]
    fn gradient_remover_kills_gradients() {
        let m = setup(DomainSpec::torus(1.0, 1.0), 16, MetricPreset::Bump { amplitude: 0.2 });
        let r = GradientRemover::new(m.clone()).unwrap();
        let q = testfields::random_scalar(&m, 1, 3);
        let gq = calculus::composed::gradient(&m, &q);
        assert!(r.remove(&gq).unwrap().max_abs() < 1e-9 * gq.max_abs());
        let u = testfields::random_div_free(&m, 2, 2);
        let ru = r.remove(&u).unwrap();
        assert!(ru.sub(&u).max_abs() < 0.2 * u.max_abs());
    }
}
