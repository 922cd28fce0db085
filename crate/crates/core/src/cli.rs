//! Helpers shared by the command-line tool and the repository service, so
//! both render identical bytes.

use std::path::Path;

use crate::log::{LogError, ParsedLog, TrialRecord};
use crate::repo::{parse_payload, LogFormat};
use crate::stats::{
    aggregate, correlation_report, pair_summaries, render_report, AnalysisOptions, ReportFormat, StatsError,
};
use crate::trial::ValueDomain;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: LogError },
}

/// Reads a log file, choosing the flavor from its extension.
pub fn load_log_file(path: &Path) -> Result<ParsedLog, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Read { path: path.display().to_string(), source })?;
    parse_payload(&text, LogFormat::from_path(path))
        .map_err(|source| CliError::Parse { path: path.display().to_string(), source })
}

pub fn accuracy_output(logs: &[ParsedLog], options: &AnalysisOptions, format: ReportFormat) -> Result<String, StatsError> {
    Ok(render_report(&aggregate(logs, options)?, format))
}

/// Two-value trials over the default domain, flagged records dropped.
fn pair_records<'a>(logs: &'a [ParsedLog], subject: Option<&'a str>) -> impl Iterator<Item = &'a TrialRecord> {
    logs.iter().flat_map(move |log| {
        log.records.iter().enumerate().filter_map(move |(i, r)| {
            let keep = !log.is_flagged(i) && r.set_size() == 2 && subject.is_none_or(|s| s == r.learner);
            keep.then_some(r)
        })
    })
}

/// Per-pair table followed by the correlation matrix and scatter series.
pub fn correlation_output(logs: &[ParsedLog], subject: Option<&str>, format: ReportFormat) -> Result<String, StatsError> {
    let table = pair_summaries(pair_records(logs, subject), &ValueDomain::default())?;
    let report = correlation_report(&table)?;
    Ok(match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        _ => format!("{}\n{}", table.render_csv(), report.render_csv()),
    })
}
