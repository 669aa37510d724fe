//! Geometry of entire space-like graphs in pseudo-Euclidean space `R^{m+n}_n`.
//!
//! The crate computes, for a graph `X(x) = (x, f(x))` with `f: R^m -> R^n`, the induced
//! metric, adapted pseudo-orthonormal frames, second fundamental form, curvature tensors,
//! covariant derivatives of the second fundamental form, the pseudo-distance `<X, X>` and the
//! Gauss map into the pseudo-Grassmannian of space-like planes. Gradient graphs of convex
//! potentials in null coordinates (Lagrangian graphs) and their Monge-Ampère structure are
//! handled in [`lagrangian`]. Finite-difference Newton solvers for the maximal-surface and
//! Monge-Ampère equations live in [`solver`], and the estimate and rigidity experiments in
//! [`bernstein`].
//!
//! Per-point geometry is generic over the floating-point type ([`Scalar`]); the lattice
//! solvers work in `f64`. Concrete `f64` aliases are exported at the crate root.

pub mod bernstein;
pub mod error;
pub mod expr;
pub mod graphgeom;
pub mod grassmann;
pub mod jet;
pub mod lagrangian;
pub mod lattice;
pub mod linalg;
pub mod scalar;
pub mod solver;
mod tensor;

pub use error::{Error, Result};
pub use expr::{parse, Expr};
pub use jet::{evaluate_jet, finite_diff_check, FdReport, Jet3};
pub use lattice::{Lattice, Region};
pub use linalg::Mat;
pub use tensor::{Tensor3, Tensor4};
pub use scalar::Scalar;

/// Third-order jet in double precision.
pub type Jet = Jet3<f64>;

pub type GraphMap = graphgeom::GraphMap<f64>;
pub type LocalGraph = graphgeom::LocalGraph<f64>;
pub type MetricPoint = graphgeom::MetricPoint<f64>;
pub type Frames = graphgeom::Frames<f64>;
pub type FundamentalForms = graphgeom::FundamentalForms<f64>;
pub type Curvature = graphgeom::Curvature<f64>;
pub type CovariantReport = graphgeom::CovariantReport<f64>;
pub type PointGeometry = graphgeom::PointGeometry<f64>;
pub type PseudoDistancePoint = graphgeom::PseudoDistancePoint<f64>;
pub type SimonsReport = graphgeom::SimonsReport<f64>;
pub type SpacelikePlane = grassmann::SpacelikePlane<f64>;
pub type PullbackReport = grassmann::PullbackReport<f64>;
pub type Potential = lagrangian::Potential<f64>;
pub type LagrangianForms = lagrangian::LagrangianForms<f64>;
pub type ModuliCurvature = lagrangian::ModuliCurvature<f64>;
pub type StandardForm = lagrangian::StandardForm<f64>;
pub type Matrix = Mat<f64>;
