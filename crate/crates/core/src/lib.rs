//! Structure-preserving discretization of the LAE-α equations on two-dimensional
//! domains with conformal metrics `g = e^{2φ} δ`: flat or curved tori and channels
//! with no-slip or free-slip walls.
//!
//! Layers, bottom up:
//! - [`grid`], [`geometry`]: domains, stencils, metric jets and wall data.
//! - [`jet`], [`local`], [`calculus`]: covariant calculus on nodal fields.
//! - [`identities`]: two-route residuals of the calculus identities.
//! - [`elliptic`]: the Helmholtz operator `1 - α² 𝓛` and the Stokes projector.
//! - [`dynamics`]: the nonlinear operators, right-hand sides and time stepping.
//! - [`material`]: flow maps, the material frame and the right-reduction map.
//! - [`poisson`]: observables, the Lie–Poisson bracket and its checks.

pub mod calculus;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod identities;
pub mod jet;
pub mod local;
pub mod material;
pub mod poisson;
pub mod sparse;
pub mod testfields;

pub use error::{DynamicsError, EllipticError, GeometryError, MaterialError, PoissonError};
pub use field::{ScalarField, Tensor11Field, VectorField};
pub use geometry::{BoundaryData, ConformalMetric, MetricPreset};
pub use grid::{DomainKind, DomainSpec, Grid, Wall, WallCondition};
