pub mod conservation;
pub mod summary;
pub mod trace;

pub use conservation::{energy_conservation_report, EnergyConservationReport};
pub use summary::{RunSummary, SUMMARY_KEYS};
pub use trace::{read_trace, write_trace, Method, RestartReason, TraceRecord, TraceWriter};
