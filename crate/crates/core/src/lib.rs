//! Brownian motion tree (BMT) models in their toric coordinates.
//!
//! The crate builds the path parametrization of the concentration matrices of
//! a BMT model, the quartet binomials cutting out its toric variety, the
//! factored determinant of the concentration matrix, and the score equations
//! of the Gaussian log-likelihood. Complex critical points are counted with a
//! total-degree homotopy, which yields ML-degrees, MLEs and toric degrees.
//!
//! Everything here is `no_std` + `alloc`. Enable the `std` feature for
//! `std::error::Error` integration and `parallel` for multi-threaded path
//! tracking.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod catalog;
pub mod determinant;
pub mod homotopy;
pub mod likelihood;
pub mod linalg;
pub mod pipeline;
pub mod poly;
pub mod toric;
pub mod tree;

pub use catalog::CatalogTree;
pub use determinant::{det_k_formula, DetFactorization};
pub use homotopy::{solve, SolutionSet, SolverOptions};
pub use likelihood::{random_generic_s, SampleCovariance, ScoreMode, ScoreSystem};
pub use pipeline::{
    ml_degree, mle, toric_degree, MLDegreeReport, MleOutcome, PipelineError, PipelineOptions,
};
pub use poly::{PolySystem, SparsePoly, VarArena};
pub use toric::PVector;
pub use tree::{parse_newick, EdgePath, PhyloTree, QuartetTopology};

pub use num_bigint::BigInt;
pub use num_complex::Complex64;
pub use num_rational::BigRational;
