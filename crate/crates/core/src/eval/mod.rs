//! Direct and indirect scoring and the cross-validated benchmark.

mod benchmark;
mod metrics;
mod report;

pub use benchmark::{
    aggregate_rows, config_hash, run_benchmark, BenchmarkConfig, BenchmarkReport, RunMetadata, ScoreRow,
    MIB_NAME,
};
pub use metrics::{direct_scores, indirect_scores, DirectScores, DownstreamParams, IndirectScores};
pub use report::{
    display_label, metadata_line, parse_report_csv, report_to_string, summary_table, write_report_csv,
    SUMMARY_COLUMNS,
};
