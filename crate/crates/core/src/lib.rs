//! Pressure-wired Scott-Vogelius Stokes elements on conforming triangulations.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: triangulations, red refinement, vertex patches and angle geometry.
//! * [`singularity`]: the singular-distance measure of a vertex, critical sets and the
//!   alternating pressure functional.
//! * [`polynomials`]: Jacobi polynomials, triangle quadrature, Lagrange bases and the
//!   patch functions built from `P_k^{(0,2)}`.
//! * [`spaces`]: velocity/pressure degree-of-freedom maps and pressure constraint rows.
//! * [`assembly`] and [`solve`]: the saddle-point system, its direct solution, error
//!   norms and a dense inf-sup estimator.
//! * [`verify`]: executable checks of the geometric identities and inequalities the
//!   element relies on.
//! * [`bench`], [`config`] and [`report`]: the benchmark driver used by the
//!   `stokes-wire` binary and its CSV/JSON output.

pub mod assembly;
pub mod bench;
pub mod config;
pub mod linalg;
pub mod mesh;
pub mod polynomials;
pub mod report;
pub mod singularity;
pub mod solve;
pub mod spaces;
pub mod verify;

pub use mesh::{Mesh, MeshError, Point2, Triangle, VertexPatch};
