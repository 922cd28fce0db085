//! Accuracy aggregation, exact binomial tests, pair summaries and Pearson
//! correlations over trial logs.

mod aggregate;
mod binomial;
mod pairs;
mod pearson;
mod render;

use thiserror::Error;

pub use aggregate::{
    aggregate, cell_stats, session_key, AnalysisOptions, CellStats, ColumnKey, GroupBy, ReportRow, SetSizeTable,
    StatsReport,
};
pub use binomial::{binomial_ln_pmf, binomial_tail, binomial_tail_ln, ChanceLevel};
pub use pairs::{pair_summaries, PairSummary, PairTable, Variable};
pub use pearson::{correlation_report, pearson, CorrelationReport, ScatterSeries};
pub use render::{format_accuracy_percent, format_p_value, render_report, ReportFormat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cell mixes set sizes {0:?}; chance levels differ")]
    MixedSetSizeCell(Vec<usize>),
    #[error("value {0} lies outside the analysis domain")]
    UnexpectedValueOutsideDomain(u32),
    #[error("pair summaries need two-value trials, got a trial of {0}")]
    UnexpectedSetSize(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unknown grouping key `{0}`")]
    UnknownGrouping(String),
    #[error("no data")]
    NoData,
}
