//! Scenario configuration and the end-to-end pipeline: assemble, reduce,
//! compare spectra, integrate and write reports.

mod config;
mod run;

pub use config::{
    parse_methods, AnalysisConfig, Diagnostic, MaterialConfig, MeshConfig, ModeCounts,
    OutputConfig, ReductionConfig, ScenarioConfig, TransientConfig, Validation,
};
pub use run::{
    build, export_matrices, label, run, Built, CheckStatus, MethodRun, RunOptions, RunSummary,
    TimingCheck, TimingEntry, TransientRun, FAER_VERSION,
};
