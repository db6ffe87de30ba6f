//! Cross-receptive spectral graph filters approximated by truncated
//! Poisson–Charlier series, the SPCNet node classifiers built on them, and
//! tooling for synthetic SBM experiments and structural-perturbation stability.
//!
//! The filter response on a Laplacian eigenvalue `λ` is
//! `1 + Σ_{n=0}^{N} C_n(k, t) (−λ)^n / n!`, a truncation of `1 + (1−λ)^k e^{tλ}`.

pub mod data;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod pc_poly;
pub mod robustness;

pub use data::{generate_sbm, load_dataset, make_split, SbmConfig, SplitProtocol, SplitSpec};
pub use error::{Result, SpcError};
pub use filter::{
    apply_filter, apply_filter_transpose_grad, filter_grad_k, stability_constant, FilterSpec,
    FilterVariant,
};
pub use graph::{
    build_normalized_adjacency, build_normalized_laplacian, edge_homophily, spmm, Graph,
    SparseSymMatrix,
};
pub use pc_poly::{frequency_response, pc_coefficients, pc_coefficients_grad_k, PcCoefficients};
