//! Version chains and error/fix pair extraction.
//!
//! A pair is emitted whenever a version parses and its immediate predecessor
//! does not. Older history is not consulted, so `err, err, ok` yields one
//! pair (v2, v3) and `err, ok, err, ok` yields two.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{BlockVersionRecord, FilterCounts};
use crate::normalize::normalize_snippet;
use crate::oracle::{OracleError, ParseError, ParseOracle, ParseOutcome, RuntimeOutcome};

#[derive(Debug, Error)]
pub enum PairingError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid pair {pair_id}: {reason}")]
    InvalidPair { pair_id: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionChain {
    pub post_id: i64,
    pub local_id: i64,
    pub tags: Vec<String>,
    pub versions: Vec<BlockVersionRecord>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// Chains whose ordinals were not exactly 1..=n.
    pub rejected_chains: u64,
    /// Block versions inside rejected chains.
    pub rejected_versions: u64,
}

/// Groups block versions by (post_id, local_id) and orders each group by
/// ordinal. Groups whose ordinals are not a contiguous run from 1 (gaps or
/// duplicates) are dropped and counted.
pub fn build_chains<I>(blocks: I) -> (Vec<VersionChain>, ChainDiagnostics)
where
    I: IntoIterator<Item = (BlockVersionRecord, Vec<String>)>,
{
    let mut groups: BTreeMap<(i64, i64), (Vec<String>, Vec<BlockVersionRecord>)> = BTreeMap::new();
    for (block, tags) in blocks {
        groups
            .entry((block.post_id, block.local_id))
            .or_insert_with(|| (tags, Vec::new()))
            .1
            .push(block);
    }
    let mut diagnostics = ChainDiagnostics::default();
    let mut chains = Vec::with_capacity(groups.len());
    for ((post_id, local_id), (tags, mut versions)) in groups {
        versions.sort_by_key(|v| v.version_ordinal);
        let contiguous = versions
            .iter()
            .enumerate()
            .all(|(i, v)| v.version_ordinal == i as i64 + 1);
        if contiguous {
            chains.push(VersionChain {
                post_id,
                local_id,
                tags,
                versions,
            });
        } else {
            diagnostics.rejected_chains += 1;
            diagnostics.rejected_versions += versions.len() as u64;
        }
    }
    (chains, diagnostics)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorFixPair {
    pub pair_id: String,
    pub post_id: i64,
    pub local_id: i64,
    pub tags: Vec<String>,
    pub failing_version_ordinal: i64,
    pub fixed_version_ordinal: i64,
    pub failing_content: String,
    pub fixed_content: String,
    pub parse_error: ParseError,
    pub runtime_outcome: Option<RuntimeOutcome>,
}

pub fn pair_id(post_id: i64, local_id: i64, failing: i64, fixed: i64) -> String {
    format!("{post_id}-{local_id}-{failing}-{fixed}")
}

impl ErrorFixPair {
    pub fn validate(&self) -> Result<(), PairingError> {
        let fail = |reason: &str| {
            Err(PairingError::InvalidPair {
                pair_id: self.pair_id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.fixed_version_ordinal != self.failing_version_ordinal + 1 {
            return fail("fixed version does not immediately follow the failing one");
        }
        if self.failing_content == self.fixed_content {
            return fail("failing and fixed content are identical");
        }
        if let Err(reason) = self.parse_error.validate() {
            return fail(&reason);
        }
        Ok(())
    }

    /// Sort key giving the canonical output order.
    pub fn order_key(&self) -> (i64, i64, i64) {
        (self.post_id, self.local_id, self.fixed_version_ordinal)
    }
}

/// Classifies every version of `chain` and returns the pairs it contains
/// along with its contribution to the parse-stage filter counts.
pub fn extract_pairs<O: ParseOracle + ?Sized>(
    chain: &VersionChain,
    oracle: &O,
) -> Result<(Vec<ErrorFixPair>, FilterCounts), PairingError> {
    let mut counts = FilterCounts::default();
    let mut pairs = Vec::new();
    let mut previous: Option<(String, ParseOutcome, i64)> = None;
    for version in &chain.versions {
        let content = normalize_snippet(&version.content).content;
        let outcome = oracle.check_parse(&content)?;
        if outcome.is_ok() {
            counts.ast_parseable += 1;
            if let Some((prev_content, prev_outcome, prev_ordinal)) = &previous {
                counts.prior_version_exists += 1;
                if let ParseOutcome::Error(parse_error) = prev_outcome {
                    counts.prior_version_parse_error += 1;
                    let pair = ErrorFixPair {
                        pair_id: pair_id(
                            chain.post_id,
                            chain.local_id,
                            *prev_ordinal,
                            version.version_ordinal,
                        ),
                        post_id: chain.post_id,
                        local_id: chain.local_id,
                        tags: chain.tags.clone(),
                        failing_version_ordinal: *prev_ordinal,
                        fixed_version_ordinal: version.version_ordinal,
                        failing_content: prev_content.clone(),
                        fixed_content: content.clone(),
                        parse_error: parse_error.clone(),
                        runtime_outcome: None,
                    };
                    pair.validate()?;
                    pairs.push(pair);
                }
            }
        }
        previous = Some((content, outcome, version.version_ordinal));
    }
    Ok((pairs, counts))
}

/// Extracts pairs from all chains in parallel. The result is sorted by
/// (post_id, local_id, fixed_version_ordinal) whatever the completion order.
pub fn extract_all<O: ParseOracle + ?Sized>(
    chains: &[VersionChain],
    oracle: &O,
) -> Result<(Vec<ErrorFixPair>, FilterCounts), PairingError> {
    let per_chain: Vec<_> = chains
        .par_iter()
        .map(|chain| extract_pairs(chain, oracle))
        .collect::<Result<_, _>>()?;
    let mut counts = FilterCounts::default();
    let mut pairs = Vec::new();
    for (chain_pairs, chain_counts) in per_chain {
        counts += chain_counts;
        pairs.extend(chain_pairs);
    }
    pairs.sort_by_key(ErrorFixPair::order_key);
    Ok((pairs, counts))
}

pub fn write_pairs<W: std::io::Write>(pairs: &[ErrorFixPair], mut out: W) -> std::io::Result<()> {
    for pair in pairs {
        serde_json::to_writer(&mut out, pair)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_pairs<R: std::io::BufRead>(reader: R) -> Result<Vec<ErrorFixPair>, crate::Error> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| crate::Error::Input(format!("line {}: {e}", idx + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: ErrorFixPair = serde_json::from_str(&line)
            .map_err(|e| crate::Error::Input(format!("line {}: malformed pair: {e}", idx + 1)))?;
        pair.validate()?;
        pairs.push(pair);
    }
    Ok(pairs)
}
