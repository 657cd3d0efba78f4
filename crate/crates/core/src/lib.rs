//! Determinantal probability measures on finite ground sets and finite-rank
//! determinantal point processes.
//!
//! - [`kernel`]: Hermitian kernels, contraction/projection certification,
//!   spectra, compression, dilation, principal minors.
//! - [`dpm`]: cylinder probabilities, exhaustive enumeration, exact samplers,
//!   entropy, duality and completeness checks.
//! - [`graph`]: star spaces, transfer-current kernels, uniform spanning trees
//!   and forest kernels.
//! - [`ope`]: orthogonal polynomial ensembles with exact sequential sampling.
//! - [`lab`]: negative-dependence checks, monotone and union couplings,
//!   entropy concavity scans.
//! - [`io`]: text formats for kernels, graphs, distributions and samples.

#![forbid(unsafe_code)]

pub mod dpm;
pub mod error;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod lab;
pub mod linalg;
pub mod ope;
pub mod random;
pub mod rng;

pub use dpm::{
    completeness_check, count_distribution, cylinder_probability, dual_distribution_check, entropy,
    full_distribution, inclusion_probability, sample_contraction, sample_projection, tail_triviality_probe,
    ContractionSampler, CountDistribution, ProjectionSampler, SubsetDistribution,
};
pub use error::{Error, Result};
pub use kernel::{
    complement_kernel, compress, dilate, principal_minor, projection_from_basis, spectral_decompose,
    validate_contraction, ContractionKernel, GroundSet, HermitianKernel, ProjectionKernel, SpectralDecomposition,
};
pub use lab::{
    entropy_concavity_scan, gm_domination_check, monotone_coupling, negative_association_check,
    strongly_rayleigh_slack, union_coupling_search, CirculantSymbol, CouplingOutcome, CouplingTable, ScanReport,
};
pub use linalg::{CMatrix, C64};
pub use ope::{
    discretize_counts, joint_density_check, kernel_eval, orthonormal_basis, sample_ope, OpeFamily, OpeKind,
    PointConfiguration,
};
