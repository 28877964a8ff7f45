//! The β-Laplacian on regular `m`-branching trees.
//!
//! * [`tree`]: node paths, the boundary map `ψ`, and breadth-first numbering
//!   of trees truncated at depth `L`.
//! * [`operator`]: `Δ_β` on tree functions and on level-constant functions.
//! * [`spectrum`]: the principal Dirichlet eigenvalue by shooting and
//!   bisection, closed-form bounds, supersolution certificates, the forced
//!   resolvent, and the `β ≥ 1/2` diagnostic.
//! * [`evolution`]: the heat flow `u_t = Δ_β u`, by backward Euler and by
//!   Picard iteration on its integral form, plus comparison checks.
//! * [`io`]: CSV and JSON file formats.
//! * [`verify`]: property suites bundled for the command line.

pub mod error;
pub mod evolution;
pub mod io;
pub mod operator;
pub mod spectrum;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
pub use evolution::{EvolutionConfig, Scheme, Support, Trajectory};
pub use operator::{BetaWeight, LevelFunction, TreeFunction};
pub use spectrum::{Bounds, EigenResult, ShootingTrace, SupersolutionCertificate};
pub use tree::{NodeId, TruncatedTree};
