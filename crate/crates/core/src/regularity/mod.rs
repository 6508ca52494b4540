//! Empirical checks of the local estimates for nonnegative solutions: sup
//! bounds, the L¹–L^∞ estimate, expansion of positivity, the intrinsic
//! Harnack inequality, oscillation decay and Hölder continuity.
//!
//! Each check evaluates both sides of its estimate on grid nodes ("ess sup"
//! and "ess inf" are nodal max and min) and returns the smallest constant
//! that makes it hold, or reports that the alternative branch of the
//! estimate applies.

mod checks;
mod family;
mod holder;
mod report;
mod sweep;

pub use checks::{expansion_check, harnack_estimate, l1_linf_check, osc_decay, sup_bound_check, EXPANSION_SCAN_DEPTH};
pub use family::{pinned_config, pinned_profiles, pinned_tolerance, solve_pinned_family, PinnedProfile, PINNED_SEED};
pub use holder::{holder_fit, HolderFit, PairMode};
pub use report::{write_reports, Branch, RegularityReport};
pub use sweep::{expansion_sweep, harnack_sweep, l1_linf_sweep, stability_ratios, sup_bound_sweep, ScaleSweep};
