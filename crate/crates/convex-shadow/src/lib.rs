//! Orthogonal shadows of convex bodies.
//!
//! A compact convex body `A` with the origin interior is described by its
//! gauge `mu_A(x) = inf { t > 0 : x in t A }`. Projecting `A` orthogonally
//! onto a subspace `V` yields another convex body, the shadow, and its gauge
//! at `y in V` is the minimum of `mu_A` over the affine fiber `y + V^perp`:
//!
//! ```text
//! mu_shadow(y) = min_w mu_A(V y + W w)
//! ```
//!
//! where the columns of `V` and `W` are orthonormal bases of the subspace
//! and its orthogonal complement. The minimum is attained and, for bodies
//! with differentiable gauge, characterized by the stationarity condition
//! `W^T grad mu_A = 0`, which is what the solver in [`shadow`] drives to
//! zero.
//!
//! The crate provides:
//!
//! * [`body::ConvexBody`]: gauges, gradients and support functions for
//!   p-norm balls, ellipsoids, and linear images and recenterings of these.
//! * [`frame::OrthoFrame`]: orthonormal subspace/complement bases built
//!   from spanning sets or normal vectors.
//! * [`shadow`]: the fiber minimizer, shadow gauge evaluation, membership
//!   tests and boundary traces of planar shadows.
//! * [`quartic`]: a closed-form solution for the quartic ball
//!   `x^4 + y^4 + z^4 <= 1` shadowed onto the plane `x + y + z = 0`, where
//!   the fiber problem reduces to a depressed cubic.
//! * [`oracle`]: independent cross-checks (finite differences, dense fiber
//!   scans, support-function separation, a Schur-complement formula for
//!   ellipsoids) used by the verification suite.
//! * [`schema`]: serde-backed problem configuration.

pub mod body;
pub mod error;
pub mod frame;
pub mod oracle;
pub mod quartic;
pub mod schema;
pub mod shadow;

pub use body::ConvexBody;
pub use error::{Error, Result};
pub use frame::OrthoFrame;
pub use shadow::{
    boundary_trace, membership, shadow_gauge, BoundaryPolyline, FiberQuery, ShadowResult,
    SolverOptions,
};
