//! Configuration, event files, run drivers and result documents.

pub mod config;
pub mod event_file;
pub mod pipeline;
pub mod tables;

pub use config::{AnalysisOptions, AnalyzingPowerSource, ConfigError, ConfigFile, RunConfig};
pub use event_file::{read_events, EventFileError, EventReader, EventWriter, SCHEMA_VERSION};
pub use pipeline::{
    analyze_events, for_each_block, generate_event, generate_range, run_analyze, run_calibrate, run_generate,
    run_pipeline, Accumulator, Analysis, GenerationReport, PipelineError, ResultsDocument, RunStatus,
};
pub use tables::{emit_reference_tables, parse_bell_table, parse_wigner_table, TableError};
