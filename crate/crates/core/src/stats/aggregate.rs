use std::collections::BTreeSet;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::binomial::{binomial_tail_ln, ChanceLevel};
use super::StatsError;
use crate::log::{ParsedLog, TrialRecord};
use crate::trial::{DisplayMode, ModeType};

/// Which breakdowns to report. Set size is always a grouping key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupBy {
    pub session: bool,
    pub mode: bool,
    pub mode_type: bool,
}

impl Default for GroupBy {
    fn default() -> Self {
        GroupBy { session: true, mode: true, mode_type: true }
    }
}

impl FromStr for GroupBy {
    type Err = StatsError;

    /// Comma separated subset of `session`, `mode`, `type`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut g = GroupBy { session: false, mode: false, mode_type: false };
        for key in s.split(',').map(str::trim).filter(|k| !k.is_empty()) {
            match key {
                "session" => g.session = true,
                "mode" => g.mode = true,
                "type" => g.mode_type = true,
                other => return Err(StatsError::UnknownGrouping(other.to_string())),
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Keep only records whose `Learner` matches.
    pub subject: Option<String>,
    pub group_by: GroupBy,
    /// Set sizes to report; `None` reports every size present.
    pub set_sizes: Option<Vec<usize>>,
    pub chance: ChanceLevel,
    pub include_flagged: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            subject: None,
            group_by: GroupBy::default(),
            set_sizes: None,
            chance: ChanceLevel::Literal,
            include_flagged: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKey {
    Mode(DisplayMode),
    Type(ModeType),
    Total,
}

impl ColumnKey {
    pub fn label(self) -> &'static str {
        match self {
            ColumnKey::Mode(DisplayMode::Dice) => "Dice",
            ColumnKey::Mode(DisplayMode::Heap) => "Heap",
            ColumnKey::Mode(DisplayMode::Disc) => "Disc",
            ColumnKey::Mode(DisplayMode::Rect) => "Rectangle",
            ColumnKey::Type(ModeType::Discrete) => "Discrete",
            ColumnKey::Type(ModeType::Continuous) => "Continuous",
            ColumnKey::Total => "Total",
        }
    }

    fn matches(self, record: &TrialRecord) -> bool {
        match self {
            ColumnKey::Mode(m) => record.mode == m,
            ColumnKey::Type(t) => record.mode.mode_type() == t,
            ColumnKey::Total => true,
        }
    }

    fn columns(group_by: GroupBy) -> Vec<ColumnKey> {
        let mut cols = Vec::new();
        for (ty, modes) in [
            (ModeType::Discrete, [DisplayMode::Dice, DisplayMode::Heap]),
            (ModeType::Continuous, [DisplayMode::Disc, DisplayMode::Rect]),
        ] {
            if group_by.mode {
                cols.extend(modes.map(ColumnKey::Mode));
            }
            if group_by.mode_type {
                cols.push(ColumnKey::Type(ty));
            }
        }
        cols.push(ColumnKey::Total);
        cols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub n: u64,
    pub k: u64,
    pub accuracy: f64,
    pub p_value: f64,
    /// Natural log of `p_value`; finite even when `p_value` underflows.
    pub ln_p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub cells: Vec<Option<CellStats>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSizeTable {
    pub set_size: usize,
    pub chance: f64,
    pub columns: Vec<ColumnKey>,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub subject: Option<String>,
    pub chance: ChanceLevel,
    pub excluded_flagged: usize,
    pub tables: Vec<SetSizeTable>,
}

impl StatsReport {
    pub fn table(&self, set_size: usize) -> Option<&SetSizeTable> {
        self.tables.iter().find(|t| t.set_size == set_size)
    }
}

impl SetSizeTable {
    pub fn cell(&self, row: &str, column: ColumnKey) -> Option<&CellStats> {
        let col = self.columns.iter().position(|c| *c == column)?;
        self.rows.iter().find(|r| r.label == row)?.cells[col].as_ref()
    }

    pub fn total(&self) -> Option<&CellStats> {
        self.cell("Total", ColumnKey::Total)
    }
}

/// Accuracy and one-sided binomial p-value of a group of records sharing one
/// set size. `None` for an empty group.
pub fn cell_stats(records: &[&TrialRecord], chance: ChanceLevel) -> Result<Option<CellStats>, StatsError> {
    let Some(first) = records.first() else {
        return Ok(None);
    };
    let sizes: BTreeSet<usize> = records.iter().map(|r| r.set_size()).collect();
    if sizes.len() > 1 {
        return Err(StatsError::MixedSetSizeCell(sizes.into_iter().collect()));
    }
    let n = records.len() as u64;
    let k = records.iter().filter(|r| r.correction).count() as u64;
    let ln_p_value = binomial_tail_ln(k, n, chance.probability(first.set_size()))?;
    Ok(Some(CellStats { n, k, accuracy: k as f64 / n as f64, p_value: ln_p_value.exp(), ln_p_value }))
}

/// Day of month and hour of a session's first record, e.g. `19,17h`.
pub fn session_key(first: &NaiveDateTime) -> String {
    format!("{},{:02}h", first.day(), first.hour())
}

struct SessionGroup<'a> {
    key: String,
    start: NaiveDateTime,
    records: Vec<&'a TrialRecord>,
}

/// Builds the accuracy report. Each parsed log is one session; logs whose
/// first records share a session key are merged.
pub fn aggregate(logs: &[ParsedLog], options: &AnalysisOptions) -> Result<StatsReport, StatsError> {
    let mut excluded_flagged = 0;
    let mut sessions: Vec<SessionGroup> = Vec::new();
    for log in logs {
        let Some(first) = log.records.first() else { continue };
        let key = session_key(&first.date);
        let mut kept = Vec::new();
        for (i, r) in log.records.iter().enumerate() {
            if options.subject.as_deref().is_some_and(|s| s != r.learner) {
                continue;
            }
            if !options.include_flagged && log.is_flagged(i) {
                excluded_flagged += 1;
                continue;
            }
            kept.push(r);
        }
        match sessions.iter_mut().find(|s| s.key == key) {
            Some(s) => {
                s.start = s.start.min(first.date);
                s.records.extend(kept);
            }
            None => sessions.push(SessionGroup { key, start: first.date, records: kept }),
        }
    }
    sessions.sort_by(|a, b| a.start.cmp(&b.start).then_with(|| a.key.cmp(&b.key)));

    let set_sizes = match &options.set_sizes {
        Some(sizes) => sizes.clone(),
        None => {
            let present: BTreeSet<usize> =
                sessions.iter().flat_map(|s| s.records.iter().map(|r| r.set_size())).collect();
            if present.is_empty() {
                vec![2]
            } else {
                present.into_iter().collect()
            }
        }
    };

    let columns = ColumnKey::columns(options.group_by);
    let row = |label: &str, records: &[&TrialRecord]| -> Result<ReportRow, StatsError> {
        let cells = columns
            .iter()
            .map(|c| {
                let subset: Vec<&TrialRecord> = records.iter().copied().filter(|r| c.matches(r)).collect();
                cell_stats(&subset, options.chance)
            })
            .collect::<Result<_, _>>()?;
        Ok(ReportRow { label: label.to_string(), cells })
    };

    let mut tables = Vec::with_capacity(set_sizes.len());
    for set_size in set_sizes {
        let mut rows = Vec::new();
        let mut all = Vec::new();
        for s in &sessions {
            let subset: Vec<&TrialRecord> = s.records.iter().copied().filter(|r| r.set_size() == set_size).collect();
            if subset.is_empty() {
                continue;
            }
            if options.group_by.session {
                rows.push(row(&s.key, &subset)?);
            }
            all.extend(subset);
        }
        rows.push(row("Total", &all)?);
        tables.push(SetSizeTable {
            set_size,
            chance: options.chance.probability(set_size),
            columns: columns.clone(),
            rows,
        });
    }

    Ok(StatsReport { subject: options.subject.clone(), chance: options.chance, excluded_flagged, tables })
}
