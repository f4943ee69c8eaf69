//! End-to-end pipelines: species sampling and opinion influence.

pub mod opinion;
pub mod species;

pub use opinion::{influence_step, read_boomerang_csv, run_boomerang, BoomerangRow, BoomerangRun, BoomerangStep, EpsilonSchedule, OpinionConfig};
pub use species::{run_species, truncated_geometric, IntervalRow, IntervalTable, SpeciesConfig, SpeciesRun, SpeciesSummary};
