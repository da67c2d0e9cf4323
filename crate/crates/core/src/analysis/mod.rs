//! Experiment machinery: Stiefel/Grassmann spectrum comparison, convergence
//! neighborhoods, performance profiles, dataset statistics and derivative checks.

pub mod checks;
mod neighborhood;
mod profile;
mod spectrum;
mod stats;

pub use neighborhood::{
    contiguous_radius, map_neighborhood, quartiles, radii_summary, summarize_radii, NeighborhoodMap,
    NeighborhoodOptions, Outcome, OutcomeRow, RadiiSummary, SAME_POINT_TOL,
};
pub use profile::{
    performance_profile, Breakpoint, Orientation, PerformanceProfile, ProfileInput, RatioBaseline,
};
pub use spectrum::{compare_spectra, rms_difference, SpectrumComparison};
pub use stats::{dataset_statistics, RunOutcome, StatsRow};
