use serde::{Deserialize, Serialize};

use super::special::beta_inc_inv;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialInterval {
    pub k: u64,
    pub n: u64,
    pub confidence: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Exact two-sided (Clopper-Pearson) interval for a binomial proportion,
/// from beta quantiles.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> Result<BinomialInterval, StatsError> {
    if n == 0 || k > n {
        return Err(StatsError::Input(format!(
            "need 0 <= k <= n and n >= 1, got k={k}, n={n}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::Input(format!(
            "confidence must be in (0, 1), got {confidence}"
        )));
    }
    let tail = (1.0 - confidence) / 2.0;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        beta_inc_inv(kf, nf - kf + 1.0, tail)?
    };
    let hi = if k == n {
        1.0
    } else {
        beta_inc_inv(kf + 1.0, nf - kf, 1.0 - tail)?
    };
    let p = kf / nf;
    Ok(BinomialInterval {
        k,
        n,
        confidence,
        lo: lo.min(p),
        hi: hi.max(p),
    })
}
