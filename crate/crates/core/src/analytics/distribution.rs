use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::pairing::ErrorFixPair;

pub const OTHER_LABEL: &str = "other";
pub const NOT_EXECUTED_LABEL: &str = "not-executed";
/// Default number of distinct (kind, message) rows kept before the rest are
/// folded into "other".
pub const DEFAULT_TAIL_CUTOFF: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub label: String,
    pub count: u64,
    pub fraction: f64,
}

/// Category frequency table. `not_executed` holds items excluded from the
/// fractions (runtime tallies only).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub categories: Vec<Category>,
    pub total: u64,
    #[serde(default)]
    pub not_executed: u64,
}

impl DistributionReport {
    /// Builds a report sorted by count descending, ties broken by label.
    /// Zero-count labels are dropped.
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut merged: BTreeMap<String, u64> = BTreeMap::new();
        for (label, count) in counts {
            *merged.entry(label.into()).or_default() += count;
        }
        let mut rows: Vec<(String, u64)> = merged.into_iter().filter(|(_, c)| *c > 0).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_ordered(rows)
    }

    /// Builds a report keeping the given row order.
    pub fn from_ordered(rows: Vec<(String, u64)>) -> Self {
        let total: u64 = rows.iter().map(|(_, c)| c).sum();
        let categories = rows
            .into_iter()
            .map(|(label, count)| Category {
                fraction: if total == 0 { 0.0 } else { count as f64 / total as f64 },
                label,
                count,
            })
            .collect();
        DistributionReport {
            categories,
            total,
            not_executed: 0,
        }
    }

    /// Keeps the first `keep` rows and folds the rest into a trailing
    /// "other" row.
    pub fn collapse_tail(self, keep: usize) -> Self {
        if self.categories.len() <= keep {
            return self;
        }
        let not_executed = self.not_executed;
        let mut rows: Vec<(String, u64)> = Vec::with_capacity(keep + 1);
        let mut other = 0;
        for (i, c) in self.categories.into_iter().enumerate() {
            if i < keep && c.label != OTHER_LABEL {
                rows.push((c.label, c.count));
            } else {
                other += c.count;
            }
        }
        rows.push((OTHER_LABEL.to_string(), other));
        let mut report = Self::from_ordered(rows);
        report.not_executed = not_executed;
        report
    }

    pub fn count_of(&self, label: &str) -> u64 {
        self.categories
            .iter()
            .find(|c| c.label == label)
            .map_or(0, |c| c.count)
    }

    pub fn fraction_of(&self, label: &str) -> f64 {
        self.categories
            .iter()
            .find(|c| c.label == label)
            .map_or(0.0, |c| c.fraction)
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn check(&self) -> Result<(), StatsError> {
        let sum: u64 = self.categories.iter().map(|c| c.count).sum();
        if sum != self.total {
            return Err(StatsError::InvalidDistribution(format!(
                "counts sum to {sum}, total is {}",
                self.total
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.categories.iter().find(|c| !seen.insert(&c.label)) {
            return Err(StatsError::InvalidDistribution(format!(
                "duplicate label {:?}",
                dup.label
            )));
        }
        if self.total > 0 {
            let fsum: f64 = self.categories.iter().map(|c| c.fraction).sum();
            if (fsum - 1.0).abs() > 1e-9 {
                return Err(StatsError::InvalidDistribution(format!(
                    "fractions sum to {fsum}"
                )));
            }
        }
        Ok(())
    }

    /// `label,count,fraction` with a header row.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label", "count", "fraction"])?;
        for c in &self.categories {
            w.write_record([c.label.as_str(), &c.count.to_string(), &format!("{:.6}", c.fraction)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `label,count,fraction` table. Fractions are recomputed from
    /// the counts; row order is kept.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self, StatsError> {
        #[derive(Deserialize)]
        struct Row {
            label: String,
            count: u64,
        }
        let mut rows = Vec::new();
        for (i, row) in csv::Reader::from_reader(input).deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| StatsError::Input(format!("row {}: {e}", i + 1)))?;
            rows.push((row.label, row.count));
        }
        let report = Self::from_ordered(rows);
        report.check()?;
        Ok(report)
    }

    /// Markdown table with Error/Count/% columns. With `split_messages`, a
    /// `Kind: message` label is spread over Error and Message columns.
    pub fn to_markdown(&self, title: &str, split_messages: bool) -> String {
        let mut out = format!("### {title}\n\n");
        if split_messages {
            out.push_str("| Error | Message | Count | % |\n|---|---|---:|---:|\n");
        } else {
            out.push_str("| Error | Count | % |\n|---|---:|---:|\n");
        }
        for c in &self.categories {
            let pct = 100.0 * c.fraction;
            let label = c.label.replace('|', "\\|");
            if split_messages {
                let (kind, message) = label.split_once(": ").unwrap_or((&label, ""));
                let _ = writeln!(out, "| {kind} | {message} | {} | {pct:.2} |", c.count);
            } else {
                let _ = writeln!(out, "| {label} | {} | {pct:.2} |", c.count);
            }
        }
        let total_pct = if self.total == 0 { 0 } else { 100 };
        if split_messages {
            let _ = writeln!(out, "| **Total** | | {} | {total_pct} |", self.total);
        } else {
            let _ = writeln!(out, "| **Total** | {} | {total_pct} |", self.total);
        }
        if self.not_executed > 0 {
            let _ = writeln!(out, "\n{NOT_EXECUTED_LABEL}: {}", self.not_executed);
        }
        out
    }
}

/// Parse-error taxonomy keyed by (kind, message), long tail folded into
/// "other" after `cutoff` rows.
pub fn tally_parse_errors(pairs: &[ErrorFixPair], cutoff: usize) -> DistributionReport {
    DistributionReport::from_counts(pairs.iter().map(|p| (p.parse_error.label(), 1)))
        .collapse_tail(cutoff)
}

/// Parse-error taxonomy keyed by exception class only.
pub fn tally_parse_kinds(pairs: &[ErrorFixPair]) -> DistributionReport {
    DistributionReport::from_counts(pairs.iter().map(|p| (p.parse_error.kind.to_string(), 1)))
}

/// Runtime-outcome taxonomy keyed by exception class plus the "No Error" and
/// "Execution Timeout" pseudo-classes. Pairs never executed are counted in
/// `not_executed` and left out of the fractions.
pub fn tally_runtime(pairs: &[ErrorFixPair], cutoff: Option<usize>) -> DistributionReport {
    let executed = pairs.iter().filter_map(|p| p.runtime_outcome.as_ref());
    let mut report = DistributionReport::from_counts(executed.map(|o| (o.label().to_string(), 1)));
    if let Some(keep) = cutoff {
        report = report.collapse_tail(keep);
    }
    report.not_executed = pairs.iter().filter(|p| p.runtime_outcome.is_none()).count() as u64;
    report
}
