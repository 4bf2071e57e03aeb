//! Numerical laboratory for weighted Bergman kernels on line bundles over
//! the complex projective line.
//!
//! Given a finite node set `K` with masses and an admissible weight, the
//! crate orthonormalizes the degree-`n` section space against the induced
//! discrete inner product, evaluates the kernel diagonal `B_n` in log
//! units, solves for the discrete extremal function `Phi_n` with certified
//! dual/primal brackets, and measures the uniform convergence of
//! `(1/2n) log B_n` toward the closed-form extremal functions of the
//! built-in node sets.
//!
//! Modules:
//!
//! * [`geometry`] — charts, canonical points, the Fubini–Study field
//!   weight, evaluation grids;
//! * [`measure`] — weighted node sets and the built-in scenarios;
//! * [`poly`] — log-domain evaluation of the design bases;
//! * [`kernel`] — orthonormalization and kernel diagnostics;
//! * [`phi`] — the certified extremal-function solver;
//! * [`lp`] — an independent linear-programming enclosure of the same
//!   quantity;
//! * [`extremal`] — closed-form oracles, sandwich bounds, convergence
//!   summaries;
//! * [`cli`] — configuration, orchestration, and output writers.

pub mod cli;
pub mod error;
pub mod extremal;
pub mod geometry;
pub mod kernel;
pub mod lp;
pub mod measure;
pub mod phi;
pub mod poly;

pub use error::{Error, Result};
pub use extremal::{
    degree_summary, extremal_value, fit_rate, sandwich_check, DegreeSummary, RateFit,
    SandwichCheck,
};
pub use geometry::{fs_weight, make_eval_grid, Chart, ProjectivePoint};
pub use kernel::{orthonormalize, orthonormalize_via_gram, section_space_dim, OrthonormalSections};
pub use lp::{lp_phi_log, LpPhi};
pub use measure::{circle_set, interval_set, Scenario, WeightedCompactSet};
pub use phi::{phi_log, PhiOptions, PhiResult};
pub use poly::DesignBasis;
