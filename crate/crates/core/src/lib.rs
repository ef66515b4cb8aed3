//! Numerical toolkit for ergodic averages of amenable group actions along
//! Følner sequences that need not be tempered.
//!
//! The crate builds each object used in the convergence argument for concrete
//! groups (`Z`, `Z^d`) and Bernoulli shifts:
//!
//! * [`group`]: exact group arithmetic, enumeration, finite-set algebra;
//! * [`folner`]: Følner sequence generators with summability and
//!   temperedness diagnostics;
//! * [`density`]: Banach densities and K-disjoint lattice partitions;
//! * [`dynamics`]: Bernoulli and rotation systems, cylinder observables and
//!   the ε-independence tester;
//! * [`martingale`]: ergodic sums, cell splitting, the Doob decomposition and
//!   the Azuma–Hoeffding based tail bounds;
//! * [`experiment`]: configuration files, the seeded convergence runner and
//!   CSV reports.

pub mod density;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod folner;
pub mod group;
pub mod hash;
pub mod martingale;
pub mod numeric;

pub use error::{Error, ErrorKind, Result};
pub use group::{FiniteSubset, GroupDescriptor, GroupElement, GroupFamily};

/// Exact rational used for set-counting quantities.
pub type Rational = num_rational::Ratio<i64>;
