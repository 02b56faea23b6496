//! Graph domain adaptation with joint topology learning.
//!
//! Estimates label functions on a sparsely labeled target graph from a richly
//! labeled source graph by matching their spectra, while re-learning the edge
//! weights of both graphs with a linear program. Also ships an executable
//! verifier for the spectral perturbation and layered error bounds that
//! motivate the method.
//!
//! Module map:
//!
//! - [`graph`] — weight matrices, Laplacians, k-NN construction, pruning
//! - [`spectral`] — graph Fourier bases (smallest eigenpairs) and transforms
//! - [`sda`] — closed-form spectral coefficient solve and label prediction
//! - [`linprog`] — dense two-phase simplex with bounded variables
//! - [`weights`] — the edge-weight LP assembly and weight-matrix update
//! - [`pipeline`] — the alternating estimation / graph-learning loop
//! - [`bounds`] — layer decompositions, kappa, and the bound verifier
//! - [`data`] — synthetic generators, CSV I/O, label masking, metrics

pub mod bounds;
pub mod data;
pub mod graph;
pub mod linprog;
pub mod pipeline;
pub mod sda;
pub mod spectral;
pub mod weights;
