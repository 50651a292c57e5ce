//! Geometry on model Riemannian manifolds and a constructive smooth variational principle.
//!
//! The crate provides
//!
//! * closed-form and chart-metric models with exponential and logarithm maps
//!   ([`manifold`]),
//! * Jacobi fields along geodesic segments, the index form and Rauch comparison
//!   ([`jacobi`]),
//! * the squared distance function with its Hessian and comparison bounds ([`distsq`]),
//! * smooth bump functions with certified `C²` bounds ([`bump`]),
//! * a solver turning a lower semicontinuous function into one with a strong minimum by
//!   subtracting a small bump series, and subjet extraction built on it ([`svp`]).
//!
//! ```
//! use riemsvp_core::{fixtures, svp::{run_svp, SvpOptions}};
//!
//! let f = fixtures::objective("abs-1d").unwrap();
//! let (_phi, report) = run_svp(&f, 0.05, 3, &SvpOptions::default()).unwrap();
//! assert!(report.minimizer.coords[0].abs() < 1e-6);
//! ```

// `!(a < b)` is used on purpose so that NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bump;
pub mod config;
pub mod distsq;
pub mod error;
pub mod fixtures;
pub mod hessian;
pub mod jacobi;
pub mod manifold;
pub mod numerics;
pub mod sampling;
pub mod svp;

pub use bump::{BumpFunction, ScalarField};
pub use config::GeometryConfig;
pub use distsq::SqDistFunction;
pub use error::{Error, Result};
pub use hessian::HessianForm;
pub use manifold::{make_model, GeodesicSegment, ManifoldModel, ModelKind, Point, TangentVector};
pub use sampling::Region;
pub use svp::{ObjectiveFunction, PerturbationSeries};
