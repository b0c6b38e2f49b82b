//! Monte Carlo experiments and the replication of the published tables.

mod report;
mod tables;

pub use report::{run_changepoint, run_size_power, ExperimentConfig, ExperimentReport, Metric};
pub use tables::{
    cached_limit, calibrate_missing, compare_cell, replicate_table, required_calibrations,
    table_cells, table_start, CalibrationTarget, CellOutcome, CellSpec, Comparison, PublishedCell,
    TableId, TableReport, Tolerance, TABLE_ALPHA, TABLE_CSV_HEADER, TABLE_HORIZON,
};
