//! Seeded Monte Carlo checks of the consistency bounds, convergence rates,
//! design events and auxiliary matrix identities.
//!
//! Every check has a `*_seeded` form taking the master seed explicitly; the
//! seed is stored in the report so a run can be repeated exactly. The
//! plain forms draw that seed from a caller-supplied generator.

mod appendix;
mod bounds;
mod events;
mod rates;
mod report;
mod suite;

pub use appendix::{
    lm_tail_check, lm_tail_check_seeded, signed_svd, signed_svd_row_law_seeded, wishart_square,
    wishart_square_closed_form, wishart_square_seeded, SignedSvd, WISHART_TOLERANCE,
};
pub use bounds::{
    check_mspe_link, check_mspe_link_seeded, check_theorem1, check_theorem1_seeded, mspe_link_sides, theorem1_sides,
    Estimator, SampleSizes, BOUND_SLACK, DEFAULT_M_REF,
};
pub use events::{
    bias_event_threshold, check_design_events, check_design_events_seeded, check_theorem4, check_theorem4_seeded,
    BIAS_EVENT_TAU, EVENT_MISS_RATE,
};
pub use rates::{
    mspe_target_slope, rate_d2_empirical, rate_d2_empirical_seeded, rate_mspe, rate_mspe_seeded, MspeRateSetup,
    RATE_BAND,
};
pub use report::{reports_to_csv, CheckConfig, CheckReport, RateEstimate, REPORT_HEADER};
pub use suite::{
    parse_suite_config, read_suite_config, run_suite, setting_case, sweep_case, Suite, SuiteConfig, SweepCase,
};
