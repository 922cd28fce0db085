use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::render::format_accuracy_percent;
use super::StatsError;
use crate::log::TrialRecord;
use crate::trial::ValueDomain;

/// Accuracy on two-value trials presenting exactly `{smaller, larger}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub smaller: u32,
    pub larger: u32,
    pub n: u64,
    pub k: u64,
    /// `None` when no trial showed this pair.
    pub accuracy: Option<f64>,
}

impl PairSummary {
    pub fn total(&self) -> u32 {
        self.smaller + self.larger
    }

    pub fn difference(&self) -> u32 {
        self.larger - self.smaller
    }

    /// Smallest over largest as an exact fraction `(numerator, denominator)`.
    pub fn ratio_fraction(&self) -> (u32, u32) {
        (self.smaller, self.larger)
    }

    pub fn ratio(&self) -> f64 {
        f64::from(self.smaller) / f64::from(self.larger)
    }

    /// Ratio truncated to two decimals with trailing zeros removed
    /// (`2/3` renders `0.66`, `1/2` renders `0.5`).
    pub fn ratio_display(&self) -> String {
        let hundredths = self.smaller * 100 / self.larger;
        let mut s = format!("{}.{:02}", hundredths / 100, hundredths % 100);
        while s.ends_with('0') && !s.ends_with(".0") {
            s.pop();
        }
        s
    }

    pub fn variable(&self, v: Variable) -> Option<f64> {
        match v {
            Variable::Total => Some(f64::from(self.total())),
            Variable::Difference => Some(f64::from(self.difference())),
            Variable::Ratio => Some(self.ratio()),
            Variable::Accuracy => self.accuracy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    Total,
    Difference,
    Ratio,
    Accuracy,
}

impl Variable {
    pub const ALL: [Variable; 4] = [Variable::Total, Variable::Difference, Variable::Ratio, Variable::Accuracy];

    pub fn label(self) -> &'static str {
        match self {
            Variable::Total => "Total",
            Variable::Difference => "Difference",
            Variable::Ratio => "Ratio",
            Variable::Accuracy => "Accuracy",
        }
    }
}

/// One row per unordered pair of domain values, lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub rows: Vec<PairSummary>,
}

impl PairTable {
    /// Table from published per-pair accuracies (fractions in `[0, 1]`).
    pub fn from_accuracies(rows: &[((u32, u32), f64)]) -> Result<Self, StatsError> {
        let rows = rows
            .iter()
            .map(|&((a, b), acc)| {
                let (smaller, larger) = (a.min(b), a.max(b));
                if smaller == larger || smaller == 0 {
                    return Err(StatsError::Domain(format!("invalid pair {{{a},{b}}}")));
                }
                if !(0.0..=1.0).contains(&acc) {
                    return Err(StatsError::Domain(format!("accuracy {acc} outside [0, 1]")));
                }
                Ok(PairSummary { smaller, larger, n: 0, k: 0, accuracy: Some(acc) })
            })
            .collect::<Result<_, _>>()?;
        Ok(PairTable { rows })
    }

    pub fn get(&self, smaller: u32, larger: u32) -> Option<&PairSummary> {
        self.rows.iter().find(|r| r.smaller == smaller && r.larger == larger)
    }

    /// Rows that have an accuracy.
    pub fn observed(&self) -> impl Iterator<Item = &PairSummary> {
        self.rows.iter().filter(|r| r.accuracy.is_some())
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("Value Set,Total,Difference,Ratio,Accuracy,n\n");
        for r in &self.rows {
            let acc = match r.accuracy {
                Some(_) if r.n > 0 => format!("{}%", format_accuracy_percent(r.k, r.n)),
                Some(a) => format!("{}%", (a * 100.0).round()),
                None => "(no data)".into(),
            };
            let _ = writeln!(
                out,
                "\"{{{},{}}}\",{},{},{},{},{}",
                r.smaller,
                r.larger,
                r.total(),
                r.difference(),
                r.ratio_display(),
                acc,
                r.n
            );
        }
        out
    }
}

/// Per-pair accuracy over two-value trials drawn from `domain`.
pub fn pair_summaries<'a, I>(records: I, domain: &ValueDomain) -> Result<PairTable, StatsError>
where
    I: IntoIterator<Item = &'a TrialRecord>,
{
    let values = domain.values();
    let mut rows: Vec<PairSummary> = Vec::new();
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[i + 1..] {
            rows.push(PairSummary { smaller: a, larger: b, n: 0, k: 0, accuracy: None });
        }
    }
    for r in records {
        if r.set_size() != 2 {
            return Err(StatsError::UnexpectedSetSize(r.set_size()));
        }
        if let Some(v) = r.values.iter().find(|v| !domain.contains(**v)) {
            return Err(StatsError::UnexpectedValueOutsideDomain(*v));
        }
        let (s, l) = (r.values[0].min(r.values[1]), r.values[0].max(r.values[1]));
        let row = rows
            .iter_mut()
            .find(|p| p.smaller == s && p.larger == l)
            .ok_or_else(|| StatsError::Domain(format!("pair {{{s},{l}}} repeats a value")))?;
        row.n += 1;
        row.k += u64::from(r.correction);
    }
    for row in &mut rows {
        if row.n > 0 {
            row.accuracy = Some(row.k as f64 / row.n as f64);
        }
    }
    Ok(PairTable { rows })
}
