//! Numerical geometry of indefinite special Lagrangian submanifolds of the
//! indefinite complex Euclidean space `C_k^m`.
//!
//! `C_k^m` is `C^m` with the pseudo-Hermitian form of index `k`; its real part
//! is the flat metric of index `2k` on `R^{2m}` and its imaginary part is the
//! indefinite symplectic form `omega_{(k,m)}`. A Lagrangian submanifold is
//! *special* when the holomorphic volume form `dz_1 ∧ … ∧ dz_m` restricts to a
//! constant unit phase, which happens exactly when the submanifold is minimal.
//!
//! The crate is organised around that chain of characterisations:
//!
//! * [`linalg`] — signature metrics, the pseudo-Hermitian form, frames, and
//!   the small dense linear algebra everything else consumes.
//! * [`planes`] — pointwise Lagrangian/special tests for oriented `m`-planes
//!   and implicitly defined level sets.
//! * [`graphs`] — potential-function graphs, the special Lagrangian residual,
//!   the `m = 2` wave family, and the linearised operator.
//! * [`geometry`] — numerical extrinsic geometry of immersions: induced
//!   metric, second fundamental form, mean curvature, phase transport.
//! * [`generators`] — explicit families: torus-invariant level sets, rotation
//!   folds over pseudo-spheres, and normal bundles over austere bases.
//! * [`hypersolve`] — a leapfrog Cauchy solver for the `k = 1` potential
//!   equation together with residual/energy monitors and the null-condition
//!   sampler.
//! * [`varcheck`] — volume and second-variation quadrature; every indefinite
//!   minimal submanifold admits volume-increasing and volume-decreasing
//!   variations, and this module produces witnesses of both signs.
//!
//! Coordinates on `R^{2m} ≅ C^m` are always ordered `(x_1..x_m, y_1..y_m)`
//! with `z_j = x_j + i y_j`; the complex structure maps `x_j ↦ y_j` and
//! `y_j ↦ -x_j`. All sampling entry points take explicit RNG seeds and the
//! crate is deterministic given those seeds.
//!
//! With the default `parallel` feature, point batches, grid sweeps and
//! quadrature nodes are evaluated with rayon; disabling the feature switches
//! every such loop to a sequential equivalent with identical results.

pub mod error;
pub mod expr;
pub mod generators;
pub mod geometry;
pub mod graphs;
pub mod hypersolve;
pub mod linalg;
pub(crate) mod par;
pub mod planes;
pub mod varcheck;

pub use error::{Error, Result};
