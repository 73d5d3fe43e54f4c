//! Determinant lattices, excitation graphs and coupled-cluster solvers on
//! finite orbital bases.
//!
//! The crate is organised bottom-up:
//!
//! * [`det`] — Slater determinants as bit sets plus the reference-relative
//!   lattice algebra (join, meet, complement, rank, excitation signs).
//! * [`graph`] — excitation graphs over one or more references: construction
//!   from a [`graph::GraphSpec`], classification, combinatorial statistics,
//!   DOT export.
//! * [`wavefn`] — sparse wavefunctions and amplitude vectors.
//! * [`op`] — excitation / de-excitation / cluster operators, exponentials
//!   and logarithms of cluster operators.
//! * [`integrals`] — one- and two-electron integral sets: file parser and
//!   built-in model Hamiltonians.
//! * [`ham`] — Hamiltonian action, dense assembly and similarity transforms.
//! * [`solver`] — FCI, projected CI and single-reference coupled-cluster.
//! * [`mr`] — multi-reference Jeziorski-Monkhorst coupled-cluster and MRCI.
//! * [`cover`] — Hamming-ball reference selection via exact set cover.
//! * [`oracle`] — slow, independent reference implementations used by the
//!   test suite and the `selfcheck` command.

pub mod cover;
pub mod det;
pub mod error;
pub mod graph;
pub mod ham;
pub mod integrals;
pub mod mr;
pub mod op;
pub mod oracle;
pub mod solver;
pub mod wavefn;

pub use det::{choose, subsets, Det, Frame, MAX_ORBITALS};
pub use error::{Error, Result};
