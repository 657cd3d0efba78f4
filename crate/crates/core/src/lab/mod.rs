//! Numerical experiments on negative dependence: strongly Rayleigh slack,
//! negative association, stochastic domination through monotone couplings,
//! union couplings of orthogonal projections, entropy concavity scans and
//! product-measure sandwiches for circulant kernels.

mod association;
mod circulant;
mod entropy_scan;
mod flow;
mod monotone;
mod rayleigh;
pub mod simplex;
mod union;

pub use association::{negative_association_check, upsets, AssociationReport, MAX_BLOCK};
pub use circulant::{geometric_mean, gm_domination_check, CirculantSymbol, GmReport};
pub use entropy_scan::{concavity_margin, entropy_concavity_scan, Counterexample, ScanReport};
pub use monotone::{monotone_coupling, CouplingOutcome, CouplingTable, IncreasingEvent};
pub use rayleigh::{strongly_rayleigh_slack, SlackReport};
pub use union::{union_coupling_search, Block, FarkasCertificate, UnionOutcome};

/// Ground-set cap of the strongly Rayleigh scan.
pub const SR_CAP: usize = 12;
/// Ground-set cap of the negative association check.
pub const NA_CAP: usize = 6;
/// Ground-set cap of monotone coupling.
pub const COUPLING_CAP: usize = 10;
/// Ground-set cap of the union coupling LP.
pub const UNION_CAP: usize = 5;
/// Group-size cap of the circulant check.
pub const CIRCULANT_CAP: usize = 10;
/// Ground-set cap of the entropy concavity scan.
pub const SCAN_CAP: usize = 10;
