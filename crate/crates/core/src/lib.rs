//! Extended (signed) probability measures on finite state spaces, their
//! dynamics under discovery, credal sets and lower envelopes, and the two
//! applications built on them: unseen-species estimation and opinion
//! influence.

pub mod apps;
pub mod coherence;
pub mod credal;
pub mod dynamics;
pub mod error;
pub mod lp;
pub mod measure;
pub mod numeric;
pub mod report;
pub mod space;

pub use error::{Error, Result};
pub use measure::{ExtendedMeasure, MeasureRecord, ValidationMode, EXACT_TOL, LP_TOL};
pub use report::{Check, ValidationReport};
pub use space::{all_events, Event, Label, Origin, StateSpace};
pub use coherence::{
    bettable_family, dutch_book_search, find_dutch_book, measure_book_search, DutchBookCandidate, DutchBookSearch, PriceTable,
    PricedEvent, StakeSign,
};
pub use dynamics::{
    critical_events, d_etv, read_trajectory_csv, eval_by_partition, induced_regular, init_extended, limit_measure, observe, observe_index,
    run_discovery, DiscoveryProcess, Observation, Scenario, Split, Trajectory, TrajectoryRow,
};
pub use credal::{
    conjugacy_residual, core, event_bounds, geometric_conditional, hausdorff, is_core_member, lower_coherence,
    update_envelope, validate_capacity, CoreCertificate, CoreReport, CredalRecord, CredalSet, ElicitedEntry,
    ElicitedTable, Envelope, SingletonEnvelope, CORE_CAP, ELICITED_CAP,
};
