//! Scenario configuration, the day loop and its outputs.

pub mod config;
pub mod demand;
pub mod output;
pub mod rng;
pub mod run;
pub mod summary;
pub mod world;

pub use config::ScenarioConfig;
pub use demand::{load_demand, synth_demand, synth_population, TripSpec};
pub use output::{read_days, write_days, CsvSink};
pub use rng::{Purpose, RngPlan};
pub use run::{run_scenario, run_scenario_into, RunSink, ScenarioOutput, TurnRecord};
pub use summary::{distributions, summarize, DistributionRow, KpiRow, Summary};
pub use world::{DayLog, DayRecord, DayResult, WorldState, PLATFORMS};
