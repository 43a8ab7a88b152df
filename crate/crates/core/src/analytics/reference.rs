//! Reference error distributions and the re-bucketing of observed labels
//! onto their categories.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::distribution::{DistributionReport, OTHER_LABEL};
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCategory {
    pub label: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDistribution {
    pub name: String,
    pub categories: Vec<ReferenceCategory>,
    #[serde(default)]
    pub source: String,
}

fn categories(rows: &[(&str, f64)]) -> Vec<ReferenceCategory> {
    rows.iter()
        .map(|(label, p)| ReferenceCategory {
            label: label.to_string(),
            p: *p,
        })
        .collect()
}

impl ReferenceDistribution {
    /// Error classes from MIT introductory-course submissions.
    pub fn mit() -> Self {
        ReferenceDistribution {
            name: "mit".into(),
            categories: categories(&[
                ("TypeError", 0.28),
                ("AttributeError", 0.22),
                ("NameError", 0.19),
                ("SyntaxError", 0.12),
                ("IndexError", 0.06),
                (OTHER_LABEL, 0.13),
            ]),
            source: "Kelley et al. 2018, MIT introductory Python course".into(),
        }
    }

    /// Error classes from CS Circles interactive tutorials.
    pub fn cscircles() -> Self {
        ReferenceDistribution {
            name: "cscircles".into(),
            categories: categories(&[
                ("SyntaxError", 0.4814),
                ("NameError", 0.1511),
                ("EOFError", 0.1182),
                ("IndentationError", 0.0323),
                (OTHER_LABEL, 0.217),
            ]),
            source: "Pritchard 2015, CS Circles".into(),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "mit" => Some(Self::mit()),
            "cscircles" => Some(Self::cscircles()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, StatsError> {
        let dist: ReferenceDistribution = serde_json::from_str(text)
            .map_err(|e| StatsError::Input(format!("bad reference distribution: {e}")))?;
        dist.check()?;
        Ok(dist)
    }

    /// Uses a report's fractions as probabilities.
    pub fn from_report(name: &str, report: &DistributionReport) -> Result<Self, StatsError> {
        let dist = ReferenceDistribution {
            name: name.to_string(),
            categories: report
                .categories
                .iter()
                .map(|c| ReferenceCategory {
                    label: c.label.clone(),
                    p: c.fraction,
                })
                .collect(),
            source: String::new(),
        };
        dist.check()?;
        Ok(dist)
    }

    pub fn check(&self) -> Result<(), StatsError> {
        if let Some((index, c)) = self
            .categories
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.p > 0.0 && c.p <= 1.0))
        {
            return Err(StatsError::ZeroProbability { index, p: c.p });
        }
        let sum: f64 = self.categories.iter().map(|c| c.p).sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(StatsError::InvalidDistribution(format!(
                "{}: probabilities sum to {sum}",
                self.name
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.categories.iter().find(|c| !seen.insert(&c.label)) {
            return Err(StatsError::InvalidDistribution(format!(
                "{}: duplicate label {:?}",
                self.name, dup.label
            )));
        }
        Ok(())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.label.as_str())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.categories.iter().map(|c| c.p).collect()
    }
}

/// Observed-label → reference-label table. Labels absent from `map` go to
/// `default`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMapping {
    pub map: BTreeMap<String, String>,
    #[serde(default = "default_bucket")]
    pub default: String,
}

fn default_bucket() -> String {
    OTHER_LABEL.to_string()
}

impl CategoryMapping {
    pub fn from_json(text: &str) -> Result<Self, StatsError> {
        serde_json::from_str(text).map_err(|e| StatsError::Input(format!("bad mapping file: {e}")))
    }

    /// Maps every reference label to itself.
    pub fn identity(reference: &ReferenceDistribution) -> Self {
        CategoryMapping {
            map: reference
                .labels()
                .map(|l| (l.to_string(), l.to_string()))
                .collect(),
            default: OTHER_LABEL.to_string(),
        }
    }
}

/// Shipped mapping from runtime-outcome labels onto `builtin:mit`.
pub const MIT_MAPPING_JSON: &str = include_str!("../../data/mappings/mit.json");
/// Shipped mapping from runtime-outcome labels onto `builtin:cscircles`.
pub const CSCIRCLES_MAPPING_JSON: &str = include_str!("../../data/mappings/cscircles.json");

pub fn builtin_mapping(name: &str) -> Option<CategoryMapping> {
    let text = match name {
        "mit" => MIT_MAPPING_JSON,
        "cscircles" => CSCIRCLES_MAPPING_JSON,
        _ => return None,
    };
    Some(CategoryMapping::from_json(text).expect("shipped mapping parses"))
}

/// Re-buckets a report's counts onto the reference categories, in reference
/// order. The total is preserved.
pub fn map_categories(
    report: &DistributionReport,
    mapping: &CategoryMapping,
    reference: &ReferenceDistribution,
) -> Result<Vec<(String, u64)>, StatsError> {
    let position: BTreeMap<&str, usize> = reference
        .labels()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let lookup = |target: &str| {
        position.get(target).copied().ok_or_else(|| {
            StatsError::Input(format!(
                "mapping target {target:?} is not a category of {}",
                reference.name
            ))
        })
    };
    for target in mapping.map.values() {
        lookup(target)?;
    }
    let default = lookup(&mapping.default)?;
    let mut counts: Vec<(String, u64)> = reference.labels().map(|l| (l.to_string(), 0)).collect();
    for c in &report.categories {
        let slot = match mapping.map.get(&c.label) {
            Some(target) => lookup(target)?,
            None => default,
        };
        counts[slot].1 += c.count;
    }
    Ok(counts)
}

/// Direct label-for-label alignment of a report with a reference, without
/// any mapping. Every observed label must be a reference category and the
/// two must have the same number of categories.
pub fn align_categories(
    report: &DistributionReport,
    reference: &ReferenceDistribution,
) -> Result<Vec<(String, u64)>, StatsError> {
    if report.categories.len() != reference.categories.len() {
        return Err(StatsError::Arity {
            observed: report.categories.len(),
            expected: reference.categories.len(),
        });
    }
    reference
        .labels()
        .map(|label| {
            report
                .categories
                .iter()
                .find(|c| c.label == label)
                .map(|c| (label.to_string(), c.count))
                .ok_or_else(|| StatsError::Arity {
                    observed: report.categories.len(),
                    expected: reference.categories.len(),
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid() {
        ReferenceDistribution::mit().check().unwrap();
        ReferenceDistribution::cscircles().check().unwrap();
        assert!(ReferenceDistribution::builtin("nope").is_none());
        for name in ["mit", "cscircles"] {
            let reference = ReferenceDistribution::builtin(name).unwrap();
            let mapping = builtin_mapping(name).unwrap();
            let targets: Vec<_> = mapping.map.values().chain([&mapping.default]).collect();
            for t in targets {
                assert!(reference.labels().any(|l| l == t), "{name}: {t}");
            }
        }
    }

    #[test]
    fn json_distribution_validation() {
        let ok = r#"{"name": "t", "categories": [{"label": "a", "p": 0.5}, {"label": "b", "p": 0.5}]}"#;
        assert_eq!(ReferenceDistribution::from_json(ok).unwrap().categories.len(), 2);
        let zero = r#"{"name": "t", "categories": [{"label": "a", "p": 1.0}, {"label": "b", "p": 0.0}]}"#;
        assert!(matches!(
            ReferenceDistribution::from_json(zero),
            Err(StatsError::ZeroProbability { index: 1, .. })
        ));
        let short = r#"{"name": "t", "categories": [{"label": "a", "p": 0.5}]}"#;
        assert!(ReferenceDistribution::from_json(short).is_err());
    }

    #[test]
    fn identity_mapping_keeps_counts() {
        let reference = ReferenceDistribution::mit();
        let report = DistributionReport::from_counts([("TypeError", 4), ("NameError", 2), ("other", 1)]);
        let mapped = map_categories(&report, &CategoryMapping::identity(&reference), &reference).unwrap();
        assert_eq!(mapped.iter().find(|(l, _)| l == "TypeError").unwrap().1, 4);
        assert_eq!(mapped.iter().find(|(l, _)| l == "NameError").unwrap().1, 2);
        assert_eq!(mapped.iter().find(|(l, _)| l == "other").unwrap().1, 1);
        assert_eq!(mapped.iter().map(|(_, c)| c).sum::<u64>(), report.total);
    }

    #[test]
    fn everything_to_other() {
        let reference = ReferenceDistribution::mit();
        let report = DistributionReport::from_counts([("TclError", 3), ("ImportError", 5)]);
        let mapping = CategoryMapping::from_json(
            r#"{"map": {"TclError": "other", "ImportError": "other"}, "default": "other"}"#,
        )
        .unwrap();
        let mapped = map_categories(&report, &mapping, &reference).unwrap();
        let nonzero: Vec<_> = mapped.iter().filter(|(_, c)| *c > 0).collect();
        assert_eq!(nonzero, [&("other".to_string(), 8)]);
    }

    #[test]
    fn unknown_target_is_rejected() {
        let reference = ReferenceDistribution::cscircles();
        let report = DistributionReport::from_counts([("NameError", 1)]);
        let mapping =
            CategoryMapping::from_json(r#"{"map": {"NameError": "TypeError"}}"#).unwrap();
        assert!(matches!(
            map_categories(&report, &mapping, &reference),
            Err(StatsError::Input(_))
        ));
    }

    #[test]
    fn alignment_requires_equal_arity() {
        let reference = ReferenceDistribution::from_json(
            r#"{"name": "t", "categories": [{"label": "a", "p": 0.2}, {"label": "b", "p": 0.3}, {"label": "c", "p": 0.5}]}"#,
        )
        .unwrap();
        let report = DistributionReport::from_counts([("a", 1), ("b", 2)]);
        assert!(matches!(
            align_categories(&report, &reference),
            Err(StatsError::Arity { observed: 2, expected: 3 })
        ));
        let report = DistributionReport::from_counts([("a", 1), ("b", 2), ("c", 3)]);
        let aligned = align_categories(&report, &reference).unwrap();
        assert_eq!(aligned, [("a".into(), 1), ("b".into(), 2), ("c".into(), 3)]);
    }
}
