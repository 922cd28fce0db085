use std::fmt::Write as _;
use std::str::FromStr;

use super::aggregate::{CellStats, StatsReport};
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(StatsError::Domain(format!("unknown report format `{other}`"))),
        }
    }
}

/// Integer percent `100 k / n`, rounded half away from zero.
pub fn format_accuracy_percent(k: u64, n: u64) -> u64 {
    (200 * k + n) / (2 * n)
}

/// One-digit mantissa, truncated: `1.95e-117` renders `1e-117`.
pub fn format_p_value(ln_p: f64) -> String {
    if ln_p == f64::NEG_INFINITY {
        return "0".into();
    }
    let log10 = ln_p / std::f64::consts::LN_10;
    // Nudge so exact powers of ten do not fall one decade short.
    let exponent = (log10 + 1e-9).floor();
    let mantissa = 10f64.powf(log10 - exponent);
    let digit = (mantissa + 1e-9).floor().clamp(1.0, 9.0) as u32;
    format!("{digit}e{}", exponent as i64)
}

fn cell_text(cell: &Option<CellStats>) -> String {
    match cell {
        Some(c) => format!("{} ({})", format_accuracy_percent(c.k, c.n), format_p_value(c.ln_p_value)),
        None => "(no data)".into(),
    }
}

fn render_markdown(report: &StatsReport) -> String {
    let mut out = String::new();
    if let Some(subject) = &report.subject {
        let _ = writeln!(out, "# Subject: {subject}\n");
    }
    for table in &report.tables {
        let _ = writeln!(out, "## Set size {} (chance {})\n", table.set_size, table.chance);
        out.push_str("| Session |");
        for c in &table.columns {
            let _ = write!(out, " {} |", c.label());
        }
        out.push_str("\n|---|");
        for _ in &table.columns {
            out.push_str("---|");
        }
        out.push('\n');
        for row in &table.rows {
            let _ = write!(out, "| {} |", row.label);
            for cell in &row.cells {
                let _ = write!(out, " {} |", cell_text(cell));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    if report.excluded_flagged > 0 {
        let _ = writeln!(out, "{} flagged record(s) excluded.", report.excluded_flagged);
    }
    out
}

fn render_csv(report: &StatsReport) -> String {
    let mut out = String::new();
    for (i, table) in report.tables.iter().enumerate() {
        if i == 0 {
            out.push_str("Set size,Session");
            for c in &table.columns {
                let _ = write!(out, ",{}", c.label());
            }
            out.push('\n');
        }
        for row in &table.rows {
            let _ = write!(out, "{},\"{}\"", table.set_size, row.label);
            for cell in &row.cells {
                let _ = write!(out, ",{}", cell_text(cell));
            }
            out.push('\n');
        }
    }
    out
}

/// Deterministic rendering of a report. Cells read `a (pe-x)`, accuracy in
/// whole percent and the p-value with a one-digit mantissa.
pub fn render_report(report: &StatsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(report),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}
