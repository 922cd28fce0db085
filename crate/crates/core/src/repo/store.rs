use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::log::{parse_log_lenient, parse_log_txt, LogError, LogWarning, ParsedLog};
use crate::stats::{aggregate, render_report, AnalysisOptions, ReportFormat, StatsError};
use crate::trial::DisplayMode;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("empty payload")]
    EmptyPayload,
    #[error("payload rejected: {0}")]
    Rejected(LogError),
    #[error("unknown log format `{0}`")]
    UnknownFormat(String),
    #[error("no stored logs for subject `{0}`")]
    NoData(String),
    #[error("stored object {0} is missing or corrupt")]
    Corrupt(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("storage failure: {0}")]
    Io(#[from] io::Error),
    #[error("metadata encoding: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    Csv,
    Txt,
}

impl FromStr for LogFormat {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(LogFormat::Csv),
            "txt" => Ok(LogFormat::Txt),
            other => Err(StoreError::UnknownFormat(other.to_string())),
        }
    }
}

impl LogFormat {
    /// Picks the flavor from a file name, defaulting to `.csv`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("txt") => LogFormat::Txt,
            _ => LogFormat::Csv,
        }
    }
}

/// Parses a payload the way the repository does: `.csv` leniently, `.txt`
/// strictly.
pub fn parse_payload(text: &str, format: LogFormat) -> Result<ParsedLog, LogError> {
    match format {
        LogFormat::Csv => parse_log_lenient(text),
        LogFormat::Txt => parse_log_txt(text),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "warnings", rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Warnings(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadMeta {
    pub subject: String,
    pub experimenter: String,
    pub device: String,
}

/// Index entry for one stored payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogSummary {
    pub log_id: String,
    pub subject: String,
    pub experimenter: String,
    pub device: String,
    pub format: LogFormat,
    pub received_at: DateTime<Utc>,
    pub status: ParseStatus,
    pub records: usize,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub modes: Vec<DisplayMode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOutcome {
    pub log_id: String,
    pub status: ParseStatus,
    pub warnings: Vec<LogWarning>,
    /// True when identical bytes were already stored.
    pub duplicate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogFilter {
    pub subject: Option<String>,
    /// Keep logs with a trial on or after this day.
    pub from: Option<NaiveDate>,
    /// Keep logs with a trial on or before this day.
    pub to: Option<NaiveDate>,
    pub mode: Option<DisplayMode>,
}

impl LogFilter {
    pub fn subject(subject: &str) -> Self {
        LogFilter { subject: Some(subject.to_string()), ..Default::default() }
    }

    fn matches(&self, s: &LogSummary) -> bool {
        if self.subject.as_deref().is_some_and(|x| x != s.subject) {
            return false;
        }
        if let Some(from) = self.from {
            if s.last_date.is_none_or(|d| d < from) {
                return false;
            }
        }
        if let Some(to) = self.to {
            if s.first_date.is_none_or(|d| d > to) {
                return false;
            }
        }
        self.mode.is_none_or(|m| s.modes.contains(&m))
    }
}

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(Utc::now)
}

pub fn log_id(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content-addressed log store.
///
/// Layout under the root: `objects/<id[..2]>/<id>` holds the raw bytes,
/// `meta/<id>.json` the summary. A log becomes visible only once its meta
/// file has been renamed into place, so an interrupted ingest leaves at most
/// an orphaned object that the next ingest of the same bytes overwrites.
pub struct LogStore {
    root: PathBuf,
    clock: Clock,
    index: RwLock<BTreeMap<String, LogSummary>>,
    ingest_lock: Mutex<()>,
}

impl LogStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        Self::open_with_clock(root, system_clock())
    }

    pub fn open_with_clock(root: impl Into<PathBuf>, clock: Clock) -> Result<Self, StoreError> {
        let root = root.into();
        for dir in ["objects", "meta", "tmp"] {
            fs::create_dir_all(root.join(dir))?;
        }
        let store = LogStore { root, clock, index: RwLock::new(BTreeMap::new()), ingest_lock: Mutex::new(()) };
        store.rebuild_index()?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Reloads the index from the meta files on disk.
    pub fn rebuild_index(&self) -> Result<usize, StoreError> {
        let mut index = BTreeMap::new();
        for entry in fs::read_dir(self.root.join("meta"))? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let summary: LogSummary = serde_json::from_slice(&fs::read(&path)?)?;
            if !self.object_path(&summary.log_id).is_file() {
                return Err(StoreError::Corrupt(summary.log_id));
            }
            index.insert(summary.log_id.clone(), summary);
        }
        let n = index.len();
        *self.index.write().expect("index lock") = index;
        Ok(n)
    }

    fn object_path(&self, id: &str) -> PathBuf {
        self.root.join("objects").join(&id[..2]).join(id)
    }

    fn meta_path(&self, id: &str) -> PathBuf {
        self.root.join("meta").join(format!("{id}.json"))
    }

    fn write_atomic(&self, dest: &Path, bytes: &[u8]) -> io::Result<()> {
        let tmp = self.root.join("tmp").join(format!(
            "{}.{}",
            dest.file_name().and_then(|n| n.to_str()).unwrap_or("part"),
            std::process::id()
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        if let Some(parent) = dest.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::rename(&tmp, dest)
    }

    pub fn ingest(&self, content: &str, format: LogFormat, meta: &UploadMeta) -> Result<IngestOutcome, StoreError> {
        if content.is_empty() {
            return Err(StoreError::EmptyPayload);
        }
        let parsed = parse_payload(content, format).map_err(StoreError::Rejected)?;
        let id = log_id(content.as_bytes());
        let status =
            if parsed.warnings.is_empty() { ParseStatus::Ok } else { ParseStatus::Warnings(parsed.warnings.len()) };

        let _guard = self.ingest_lock.lock().expect("ingest lock");
        if let Some(existing) = self.index.read().expect("index lock").get(&id) {
            return Ok(IngestOutcome { log_id: id, status: existing.status, warnings: parsed.warnings, duplicate: true });
        }

        let dates = parsed.records.iter().map(|r| r.date.date());
        let mut modes: Vec<DisplayMode> = Vec::new();
        for r in &parsed.records {
            if !modes.contains(&r.mode) {
                modes.push(r.mode);
            }
        }
        let summary = LogSummary {
            log_id: id.clone(),
            subject: meta.subject.clone(),
            experimenter: meta.experimenter.clone(),
            device: meta.device.clone(),
            format,
            received_at: (self.clock)(),
            status,
            records: parsed.records.len(),
            first_date: dates.clone().min(),
            last_date: dates.max(),
            modes,
        };
        self.write_atomic(&self.object_path(&id), content.as_bytes())?;
        self.write_atomic(&self.meta_path(&id), &serde_json::to_vec_pretty(&summary)?)?;
        self.index.write().expect("index lock").insert(id.clone(), summary);
        Ok(IngestOutcome { log_id: id, status, warnings: parsed.warnings, duplicate: false })
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("index lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Matching summaries ordered by `received_at`, then `log_id`.
    pub fn query(&self, filter: &LogFilter) -> Vec<LogSummary> {
        let mut out: Vec<LogSummary> =
            self.index.read().expect("index lock").values().filter(|s| filter.matches(s)).cloned().collect();
        out.sort_by(|a, b| a.received_at.cmp(&b.received_at).then_with(|| a.log_id.cmp(&b.log_id)));
        out
    }

    pub fn raw(&self, id: &str) -> Result<String, StoreError> {
        if id.len() < 2 || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(StoreError::Corrupt(id.to_string()));
        }
        let bytes = fs::read(self.object_path(id)).map_err(|_| StoreError::Corrupt(id.to_string()))?;
        if log_id(&bytes) != id {
            return Err(StoreError::Corrupt(id.to_string()));
        }
        String::from_utf8(bytes).map_err(|_| StoreError::Corrupt(id.to_string()))
    }

    /// Parsed logs for every stored payload matching `filter`, in query order.
    pub fn load(&self, filter: &LogFilter) -> Result<Vec<ParsedLog>, StoreError> {
        self.query(filter)
            .iter()
            .map(|s| {
                let text = self.raw(&s.log_id)?;
                parse_payload(&text, s.format).map_err(|_| StoreError::Corrupt(s.log_id.clone()))
            })
            .collect()
    }

    fn subject_logs(&self, subject: &str) -> Result<Vec<ParsedLog>, StoreError> {
        let logs = self.load(&LogFilter::subject(subject))?;
        if logs.is_empty() {
            return Err(StoreError::NoData(subject.to_string()));
        }
        Ok(logs)
    }

    /// Accuracy report over every log stored for `subject`, rendered exactly
    /// as the offline analyzer renders the same files.
    pub fn report(&self, subject: &str, options: &AnalysisOptions, format: ReportFormat) -> Result<String, StoreError> {
        let logs = self.subject_logs(subject)?;
        let options = AnalysisOptions { subject: Some(subject.to_string()), ..options.clone() };
        Ok(render_report(&aggregate(&logs, &options)?, format))
    }

    pub fn correlation(&self, subject: &str, format: ReportFormat) -> Result<String, StoreError> {
        let logs = self.subject_logs(subject)?;
        Ok(crate::cli::correlation_output(&logs, Some(subject), format)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    const LOG: &str = "Test no, Test Name, Learner, Trainer, C_0, C_1, C_2, C_3, C_4, Value selected , Correction , Date, Answering Time (ms), Other Parameters\n\
1, dice, Subject, Experimenter, 1,4,,,, 4,true, [2022-05-19 17:02(30.82)], 3140, background black\n";

    fn meta() -> UploadMeta {
        UploadMeta { subject: "Subject".into(), experimenter: "Experimenter".into(), device: "tablet".into() }
    }

    fn fixed_clock() -> Clock {
        Arc::new(|| Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap())
    }

    #[test]
    fn idempotent_ingest_and_rebuild() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open_with_clock(dir.path(), fixed_clock()).unwrap();
        let a = store.ingest(LOG, LogFormat::Csv, &meta()).unwrap();
        let b = store.ingest(LOG, LogFormat::Csv, &meta()).unwrap();
        assert_eq!(a.log_id, b.log_id);
        assert!(!a.duplicate && b.duplicate);
        assert_eq!(store.len(), 1);
        assert_eq!(store.raw(&a.log_id).unwrap(), LOG);
        drop(store);
        let reopened = LogStore::open(dir.path()).unwrap();
        assert_eq!(reopened.len(), 1);
        assert_eq!(reopened.query(&LogFilter::default())[0].records, 1);
    }

    #[test]
    fn garbage_is_rejected_and_not_stored() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        assert!(matches!(
            store.ingest("hello\n", LogFormat::Csv, &meta()),
            Err(StoreError::Rejected(LogError::UnrecognizedHeader))
        ));
        assert!(matches!(store.ingest("", LogFormat::Csv, &meta()), Err(StoreError::EmptyPayload)));
        assert!(store.is_empty());
    }

    #[test]
    fn orphan_object_is_invisible() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        let id = log_id(LOG.as_bytes());
        store.write_atomic(&store.object_path(&id), LOG.as_bytes()).unwrap();
        store.rebuild_index().unwrap();
        assert!(store.query(&LogFilter::default()).is_empty());
        assert!(!store.ingest(LOG, LogFormat::Csv, &meta()).unwrap().duplicate);
    }

    #[test]
    fn filters() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        store.ingest(LOG, LogFormat::Csv, &meta()).unwrap();
        let day = NaiveDate::from_ymd_opt(2022, 5, 19).unwrap();
        let f = |from, to, mode| LogFilter { subject: None, from, to, mode };
        assert_eq!(store.query(&f(Some(day), Some(day), Some(DisplayMode::Dice))).len(), 1);
        assert!(store.query(&f(day.succ_opt(), None, None)).is_empty());
        assert!(store.query(&f(None, day.pred_opt(), None)).is_empty());
        assert!(store.query(&f(None, None, Some(DisplayMode::Heap))).is_empty());
        assert!(store.query(&LogFilter::subject("Other")).is_empty());
        assert!(matches!(store.report("Other", &AnalysisOptions::default(), ReportFormat::Csv), Err(StoreError::NoData(_))));
    }
}
