//! Distribution tables, goodness-of-fit tests and audit statistics.

mod audit;
mod binomial;
mod chisq;
mod distribution;
mod reference;
pub mod special;

use thiserror::Error;

pub use audit::{render_audit_markdown, sample_for_audit, score_verdicts, write_verdict_sheet};
pub use binomial::{clopper_pearson, BinomialInterval};
pub use chisq::{chi_square_gof, chi_square_upper_tail, ChiSquareResult};
pub use distribution::{
    tally_parse_errors, tally_parse_kinds, tally_runtime, Category, DistributionReport,
    DEFAULT_TAIL_CUTOFF, NOT_EXECUTED_LABEL, OTHER_LABEL,
};
pub use reference::{
    align_categories, builtin_mapping, map_categories, CategoryMapping, ReferenceCategory,
    ReferenceDistribution, CSCIRCLES_MAPPING_JSON, MIT_MAPPING_JSON,
};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("category arity mismatch: {observed} observed vs {expected} expected")]
    Arity { observed: usize, expected: usize },
    #[error("expected probability at index {index} is {p}; must be > 0")]
    ZeroProbability { index: usize, p: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("no observations")]
    NoObservations,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid input: {0}")]
    Input(String),
}

impl StatsError {
    /// Plain input problems, as opposed to statistically invalid inputs.
    pub fn is_plain_input(&self) -> bool {
        matches!(self, StatsError::Input(_))
    }
}

/// Goodness-of-fit of a report against a reference, after re-bucketing the
/// report's labels through `mapping` (or aligning them directly when no
/// mapping is given).
pub fn compare_to_reference(
    report: &DistributionReport,
    reference: &ReferenceDistribution,
    mapping: Option<&CategoryMapping>,
) -> Result<(Vec<(String, u64)>, ChiSquareResult), StatsError> {
    reference.check()?;
    let observed = match mapping {
        Some(m) => map_categories(report, m, reference)?,
        None => align_categories(report, reference)?,
    };
    let counts: Vec<u64> = observed.iter().map(|(_, c)| *c).collect();
    let result = chi_square_gof(&counts, &reference.probabilities())?;
    Ok((observed, result))
}
