//! Reader and writer for trial logs.
//!
//! The `.csv` flavor reproduces the original application's layout byte for
//! byte, including its irregular header spacing. A data line looks like
//!
//! ```text
//! 1, dice, Subject, Experimenter, 1,4,,,, 4,true, [2022-05-19 17:02(25.981)], 7946, background black, ...
//! ```
//!
//! `Other Parameters` is free text that itself contains commas, so a line is
//! split into thirteen leading fields and everything after the thirteenth
//! comma is kept verbatim.
//!
//! Dates are written `[YYYY-MM-DD HH:MM(SS.m)]` where `SS` is zero padded and
//! `m` is the millisecond count as a plain integer (`30.82` is 30 s + 82 ms).
//!
//! The `.txt` flavor is a labeled block per record, meant for humans.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trial::{DisplayMode, MAX_SET_SIZE, MIN_SET_SIZE};

pub const CSV_HEADER: &str = "Test no, Test Name, Learner, Trainer, C_0, C_1, C_2, C_3, C_4, Value selected , Correction , Date, Answering Time (ms), Other Parameters";

const HEADER_FIELDS: [&str; 14] = [
    "Test no",
    "Test Name",
    "Learner",
    "Trainer",
    "C_0",
    "C_1",
    "C_2",
    "C_3",
    "C_4",
    "Value selected",
    "Correction",
    "Date",
    "Answering Time (ms)",
    "Other Parameters",
];

const LEADING_FIELDS: usize = 13;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogError {
    #[error("unrecognized header")]
    UnrecognizedHeader,
    #[error("line {line_no}: malformed record: {text}")]
    MalformedLine { line_no: usize, text: String },
    #[error("record {block_no}: malformed block: {reason}")]
    MalformedBlock { block_no: usize, reason: String },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("malformed timestamp `{0}`")]
    MalformedTimestamp(String),
}

/// One answered trial, i.e. one line of the log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub test_no: u32,
    pub mode: DisplayMode,
    pub learner: String,
    pub trainer: String,
    /// Values in slot order, `C_0` first. Unused columns are not stored.
    pub values: Vec<u32>,
    pub value_selected: u32,
    pub correction: bool,
    pub date: NaiveDateTime,
    pub answering_time_ms: u64,
    pub other_parameters: String,
}

impl TrialRecord {
    pub fn set_size(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> Option<u32> {
        self.values.iter().copied().max()
    }

    /// Checks the layout constraints the writer relies on: names without
    /// commas or edge whitespace, 2..=5 values, single-line free text.
    pub fn validate(&self) -> Result<(), LogError> {
        let bad = |msg: String| Err(LogError::InvalidRecord(msg));
        for (label, name) in [("learner", &self.learner), ("trainer", &self.trainer)] {
            if name.contains([',', '\n', '\r']) || name.trim() != name.as_str() {
                return bad(format!("{label} `{name}` must not contain commas, newlines or edge whitespace"));
            }
        }
        if !(MIN_SET_SIZE..=MAX_SET_SIZE).contains(&self.values.len()) {
            return bad(format!("{} values; expected {MIN_SET_SIZE}..={MAX_SET_SIZE}", self.values.len()));
        }
        if self.other_parameters.contains(['\n', '\r']) {
            return bad("other parameters must be a single line".into());
        }
        if self.date.nanosecond() % 1_000_000 != 0 {
            return bad("dates carry millisecond precision".into());
        }
        Ok(())
    }

    /// Semantic consistency of the answer with the presented values.
    pub fn consistency_issue(&self) -> Option<String> {
        if !self.values.contains(&self.value_selected) {
            return Some(format!("selected value {} was not presented", self.value_selected));
        }
        for (i, v) in self.values.iter().enumerate() {
            if self.values[..i].contains(v) {
                return Some(format!("value {v} presented twice"));
            }
        }
        let expected = Some(self.value_selected) == self.max_value();
        if expected != self.correction {
            return Some(format!(
                "correction `{}` contradicts selection {} of {:?}",
                self.correction, self.value_selected, self.values
            ));
        }
        None
    }
}

/// Renders `[YYYY-MM-DD HH:MM(SS.m)]`.
pub fn format_timestamp(t: &NaiveDateTime) -> String {
    format!(
        "[{} {:02}:{:02}({:02}.{})]",
        t.date().format("%Y-%m-%d"),
        t.hour(),
        t.minute(),
        t.second(),
        t.nanosecond() / 1_000_000
    )
}

pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime, LogError> {
    let err = || LogError::MalformedTimestamp(s.to_string());
    let inner = s.trim().strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(err)?;
    let (date, time) = inner.split_once(' ').ok_or_else(err)?;
    let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|_| err())?;
    let (hm, rest) = time.split_once('(').ok_or_else(err)?;
    let secs = rest.strip_suffix(')').ok_or_else(err)?;
    let (h, m) = hm.split_once(':').ok_or_else(err)?;
    let (s_whole, ms) = secs.split_once('.').ok_or_else(err)?;
    let num = |x: &str, max: u32| -> Result<u32, LogError> {
        if x.is_empty() || !x.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        x.parse::<u32>().ok().filter(|v| *v <= max).ok_or_else(err)
    };
    if s_whole.len() != 2 {
        return Err(err());
    }
    let time =
        NaiveTime::from_hms_milli_opt(num(h, 23)?, num(m, 59)?, num(s_whole, 59)?, num(ms, 999)?).ok_or_else(err)?;
    Ok(date.and_time(time))
}

pub fn format_header_csv() -> &'static str {
    CSV_HEADER
}

fn is_recognized_header(line: &str) -> bool {
    let line = line.trim_start_matches('\u{feff}').trim_end();
    if line == CSV_HEADER {
        return true;
    }
    let fields: Vec<String> = line
        .split(',')
        .map(|f| f.split_whitespace().collect::<Vec<_>>().join(" "))
        .collect();
    fields.len() == HEADER_FIELDS.len() && fields.iter().zip(HEADER_FIELDS).all(|(a, b)| a == b)
}

pub fn format_record_csv(record: &TrialRecord) -> Result<String, LogError> {
    record.validate()?;
    let c: Vec<String> = (0..MAX_SET_SIZE)
        .map(|i| record.values.get(i).map(u32::to_string).unwrap_or_default())
        .collect();
    Ok(format!(
        "{}, {}, {}, {}, {}, {},{}, {}, {}, {}",
        record.test_no,
        record.mode,
        record.learner,
        record.trainer,
        c.join(","),
        record.value_selected,
        record.correction,
        format_timestamp(&record.date),
        record.answering_time_ms,
        record.other_parameters
    ))
}

/// Header plus one line per record, newline terminated.
pub fn format_log_csv(records: &[TrialRecord]) -> Result<String, LogError> {
    let mut out = String::with_capacity(64 + records.len() * 160);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format_record_csv(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// A record whose answer contradicts its values. The record is kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogWarning {
    pub line_no: usize,
    pub record_index: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLog {
    pub records: Vec<TrialRecord>,
    pub warnings: Vec<LogWarning>,
}

impl ParsedLog {
    pub fn is_flagged(&self, index: usize) -> bool {
        self.warnings.iter().any(|w| w.record_index == Some(index))
    }

    /// Records without invariant warnings.
    pub fn clean_records(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().enumerate().filter(|(i, _)| !self.is_flagged(*i)).map(|(_, r)| r)
    }

    pub fn flagged_count(&self) -> usize {
        (0..self.records.len()).filter(|i| self.is_flagged(*i)).count()
    }
}

fn parse_record_line(line: &str) -> Option<TrialRecord> {
    let mut fields: Vec<&str> = Vec::with_capacity(LEADING_FIELDS);
    let mut rest = line;
    for _ in 0..LEADING_FIELDS {
        let (head, tail) = rest.split_once(',')?;
        fields.push(head.trim());
        rest = tail;
    }
    let other_parameters = rest.strip_prefix(' ').unwrap_or(rest).trim_end_matches('\r');

    let test_no = fields[0].parse().ok()?;
    let mode = fields[1].parse().ok()?;
    let mut values = Vec::with_capacity(MAX_SET_SIZE);
    let mut ended = false;
    for f in &fields[4..9] {
        if f.is_empty() {
            ended = true;
        } else if ended {
            return None;
        } else {
            values.push(f.parse().ok()?);
        }
    }
    if values.len() < MIN_SET_SIZE {
        return None;
    }
    let correction = match fields[10] {
        "true" | "True" | "TRUE" => true,
        "false" | "False" | "FALSE" => false,
        _ => return None,
    };
    Some(TrialRecord {
        test_no,
        mode,
        learner: fields[2].to_string(),
        trainer: fields[3].to_string(),
        values,
        value_selected: fields[9].parse().ok()?,
        correction,
        date: parse_timestamp(fields[11]).ok()?,
        answering_time_ms: fields[12].parse().ok()?,
        other_parameters: other_parameters.to_string(),
    })
}

fn parse_csv(text: &str, lenient: bool) -> Result<ParsedLog, LogError> {
    let mut lines = text.lines().enumerate();
    let header = lines.by_ref().find(|(_, l)| !l.trim().is_empty());
    match header {
        Some((_, h)) if is_recognized_header(h) => {}
        _ => return Err(LogError::UnrecognizedHeader),
    }
    let mut parsed = ParsedLog::default();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record_line(line) {
            Some(record) => {
                if let Some(message) = record.consistency_issue() {
                    parsed.warnings.push(LogWarning { line_no, record_index: Some(parsed.records.len()), message });
                }
                parsed.records.push(record);
            }
            None if lenient => parsed.warnings.push(LogWarning {
                line_no,
                record_index: None,
                message: format!("malformed line skipped: {line}"),
            }),
            None => return Err(LogError::MalformedLine { line_no, text: line.to_string() }),
        }
    }
    Ok(parsed)
}

/// Parses a `.csv` log. Fails on the first malformed line; records whose
/// correction contradicts their values are kept and reported as warnings.
pub fn parse_log(text: &str) -> Result<ParsedLog, LogError> {
    parse_csv(text, false)
}

/// Like [`parse_log`] but malformed lines become warnings too. Only an
/// unrecognized header is fatal.
pub fn parse_log_lenient(text: &str) -> Result<ParsedLog, LogError> {
    parse_csv(text, true)
}

const TXT_LABELS: [&str; 14] = HEADER_FIELDS;

pub fn format_record_txt(record: &TrialRecord) -> Result<String, LogError> {
    record.validate()?;
    let mut out = String::new();
    let mut line = |label: &str, value: &str| {
        out.push_str(label);
        out.push(':');
        if !value.is_empty() {
            out.push(' ');
            out.push_str(value);
        }
        out.push('\n');
    };
    line(TXT_LABELS[0], &record.test_no.to_string());
    line(TXT_LABELS[1], record.mode.wire_name());
    line(TXT_LABELS[2], &record.learner);
    line(TXT_LABELS[3], &record.trainer);
    for i in 0..MAX_SET_SIZE {
        let v = record.values.get(i).map(u32::to_string).unwrap_or_default();
        line(TXT_LABELS[4 + i], &v);
    }
    line(TXT_LABELS[9], &record.value_selected.to_string());
    line(TXT_LABELS[10], if record.correction { "true" } else { "false" });
    line(TXT_LABELS[11], &format_timestamp(&record.date));
    line(TXT_LABELS[12], &record.answering_time_ms.to_string());
    out.push_str(TXT_LABELS[13]);
    out.push_str(": ");
    out.push_str(&record.other_parameters);
    out.push('\n');
    Ok(out)
}

/// Records as labeled blocks separated by blank lines.
pub fn format_log_txt(records: &[TrialRecord]) -> Result<String, LogError> {
    let blocks = records.iter().map(format_record_txt).collect::<Result<Vec<_>, _>>()?;
    Ok(blocks.join("\n"))
}

fn normalize_label(label: &str) -> String {
    label
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_ascii_lowercase()
        .replace("c_", "c")
}

fn parse_txt_block(block_no: usize, lines: &[&str]) -> Result<TrialRecord, LogError> {
    let fail = |reason: String| LogError::MalformedBlock { block_no, reason };
    let labels: Vec<String> = TXT_LABELS.iter().map(|l| normalize_label(l)).collect();
    let mut slots: [Option<String>; 14] = Default::default();
    for line in lines {
        let (label, value) = line.split_once(':').ok_or_else(|| fail(format!("unlabeled line `{line}`")))?;
        let key = normalize_label(label);
        let idx = labels.iter().position(|l| *l == key).ok_or_else(|| fail(format!("unknown label `{label}`")))?;
        let value = value.strip_prefix(' ').unwrap_or(value).trim_end_matches('\r');
        // Only the free-text field keeps its inner edge whitespace.
        let value = if idx == 13 { value.to_string() } else { value.trim().to_string() };
        if slots[idx].replace(value).is_some() {
            return Err(fail(format!("duplicate label `{label}`")));
        }
    }
    let get = |i: usize| slots[i].clone().ok_or_else(|| fail(format!("missing `{}`", TXT_LABELS[i])));
    let num = |i: usize| -> Result<u64, LogError> {
        get(i)?.parse().map_err(|_| fail(format!("`{}` is not a number", TXT_LABELS[i])))
    };
    let mut values = Vec::new();
    let mut ended = false;
    for i in 4..9 {
        let v = slots[i].clone().unwrap_or_default();
        if v.is_empty() {
            ended = true;
        } else if ended {
            return Err(fail("value columns are not contiguous".into()));
        } else {
            values.push(v.parse().map_err(|_| fail(format!("`{}` is not a number", TXT_LABELS[i])))?);
        }
    }
    let correction = match get(10)?.to_ascii_lowercase().as_str() {
        "true" => true,
        "false" => false,
        other => return Err(fail(format!("correction `{other}`"))),
    };
    let record = TrialRecord {
        test_no: u32::try_from(num(0)?).map_err(|_| fail("test number too large".into()))?,
        mode: get(1)?.parse().map_err(|e| fail(format!("{e}")))?,
        learner: get(2)?,
        trainer: get(3)?,
        values,
        value_selected: u32::try_from(num(9)?).map_err(|_| fail("selected value too large".into()))?,
        correction,
        date: parse_timestamp(&get(11)?).map_err(|e| fail(e.to_string()))?,
        answering_time_ms: num(12)?,
        other_parameters: slots[13].clone().unwrap_or_default(),
    };
    record.validate().map_err(|e| fail(e.to_string()))?;
    Ok(record)
}

/// Relaxed reader for the `.txt` flavor: labels are matched case- and
/// whitespace-insensitively and may appear in any order within a block.
pub fn parse_log_txt(text: &str) -> Result<ParsedLog, LogError> {
    let mut parsed = ParsedLog::default();
    let mut block: Vec<&str> = Vec::new();
    let mut block_start = 1;
    let flush = |block: &mut Vec<&str>, start: usize, parsed: &mut ParsedLog| -> Result<(), LogError> {
        if block.is_empty() {
            return Ok(());
        }
        let record = parse_txt_block(parsed.records.len() + 1, block)?;
        if let Some(message) = record.consistency_issue() {
            parsed.warnings.push(LogWarning { line_no: start, record_index: Some(parsed.records.len()), message });
        }
        parsed.records.push(record);
        block.clear();
        Ok(())
    };
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            flush(&mut block, block_start, &mut parsed)?;
        } else {
            if block.is_empty() {
                block_start = idx + 1;
            }
            block.push(line);
        }
    }
    flush(&mut block, block_start, &mut parsed)?;
    Ok(parsed)
}
