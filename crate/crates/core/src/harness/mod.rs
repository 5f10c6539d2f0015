//! Study design, simulated participants, and result tables.

mod agent;
mod plan;
mod report;
mod run;
mod search;

pub use agent::{Agent, AgentKind, AgentPolicy, Schedule};
pub use plan::{cell_counts, plan_study, BaselineOrder, Cell, SessionPlan};
pub use report::{censored_median, export_results, numeric_fields, ConditionSummary, FieldStats, ResultsTable};
pub use run::{run_session, run_study, simulate_session, write_plan, Durations, SessionOutcome, SimOptions};
pub use search::search_corpus;
