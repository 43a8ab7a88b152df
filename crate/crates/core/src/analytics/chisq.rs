use serde::{Deserialize, Serialize};

use super::special::gamma_q;
use super::StatsError;

/// Pearson goodness-of-fit result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub n: u64,
}

/// Upper-tail probability of the chi-squared distribution with `df` degrees
/// of freedom, i.e. Q(df/2, x/2).
pub fn chi_square_upper_tail(x: f64, df: u32) -> Result<f64, StatsError> {
    if df == 0 {
        return Err(StatsError::Numerical("degrees of freedom must be >= 1".into()));
    }
    if !(x >= 0.0) {
        return Err(StatsError::Numerical(format!("statistic must be >= 0, got {x}")));
    }
    gamma_q(f64::from(df) / 2.0, x / 2.0)
}

/// Pearson's chi-squared test of `observed` counts against the given
/// category probabilities.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult, StatsError> {
    if observed.len() != expected.len() {
        return Err(StatsError::Arity {
            observed: observed.len(),
            expected: expected.len(),
        });
    }
    if observed.len() < 2 {
        return Err(StatsError::Arity {
            observed: observed.len(),
            expected: expected.len(),
        });
    }
    if let Some((i, p)) = expected.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
        return Err(StatsError::ZeroProbability { index: i, p: *p });
    }
    let sum: f64 = expected.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(StatsError::InvalidDistribution(format!(
            "expected probabilities sum to {sum}"
        )));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(StatsError::NoObservations);
    }
    let nf = n as f64;
    let statistic = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| {
            let e = nf * p;
            let d = o as f64 - e;
            d * d / e
        })
        .sum::<f64>();
    let df = (observed.len() - 1) as u32;
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value: chi_square_upper_tail(statistic, df)?,
        n,
    })
}
