use serde::{Deserialize, Serialize};

use crate::error::{MvotError, Result};

pub const HASH_VERSION_SHA256: u16 = 1;
pub const DEFAULT_COMBINATION_BUDGET: u64 = 1_000_000;
/// Largest chaff count `keygen` will pick on its own.
pub const MAX_CHAFF: usize = 1 << 20;

/// Parameters governing enrollment and verification.
///
/// `k * log2(m) >= gamma` must hold, and the worst-case hash count
/// `C(n, k) * tr^k` must fit the combination budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Security parameter in bits.
    pub gamma: u32,
    /// Number of vaults (channels).
    pub n: usize,
    /// Chaff entries per vault.
    pub m: usize,
    /// Vaults that must succeed.
    pub k: usize,
    /// Default retrieval threshold: entries retrieved per vault.
    pub tr: usize,
    pub dim: usize,
    /// Per-entry scale factors are drawn uniformly from this range.
    pub scalar_range: [f64; 2],
    /// Relative magnitude of the per-entry additive noise.
    pub noise_delta: f64,
    pub hash_version: u16,
    #[serde(default = "default_budget")]
    pub combination_budget: u64,
}

fn default_budget() -> u64 {
    DEFAULT_COMBINATION_BUDGET
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            gamma: 54,
            n: 5,
            m: 2000,
            k: 5,
            tr: 3,
            dim: 512,
            scalar_range: [0.5, 2.0],
            noise_delta: 0.05,
            hash_version: HASH_VERSION_SHA256,
            combination_budget: DEFAULT_COMBINATION_BUDGET,
        }
    }
}

/// Smallest `m` with `k * log2(m) >= gamma`, i.e. `ceil(2^(gamma / k))`.
pub fn minimal_chaff(gamma: u32, k: usize) -> Result<usize> {
    if gamma == 0 {
        return Err(MvotError::InvalidParams("gamma must be at least 1".into()));
    }
    if k == 0 {
        return Err(MvotError::InvalidParams("k must be at least 1".into()));
    }
    let exact = (f64::from(gamma) / k as f64).exp2();
    if exact > MAX_CHAFF as f64 {
        return Err(MvotError::InvalidParams(format!(
            "gamma={gamma} with k={k} needs m >= 2^{:.2}, above the maximum {MAX_CHAFF}",
            f64::from(gamma) / k as f64
        )));
    }
    let mut m = exact.ceil() as usize;
    // Guard against the power landing a hair below an integer.
    while m > 1 && (k as f64) * ((m - 1) as f64).log2() >= f64::from(gamma) {
        m -= 1;
    }
    while (k as f64) * (m as f64).log2() < f64::from(gamma) {
        m += 1;
    }
    Ok(m)
}

/// `C(n, k)` as u128; callers keep `n` small.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

impl ProtocolParams {
    /// Chooses parameters for security level `gamma`: the minimal chaff
    /// count when `m` is `None`, otherwise validates the given `m`.
    pub fn keygen(gamma: u32, n: usize, k: usize, dim: usize, m: Option<usize>) -> Result<Self> {
        if gamma == 0 {
            return Err(MvotError::InvalidParams("gamma must be at least 1".into()));
        }
        if k == 0 || k > n {
            return Err(MvotError::InvalidParams(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        let m = match m {
            Some(m) => m,
            None => minimal_chaff(gamma, k)?,
        };
        let params = Self {
            gamma,
            n,
            m,
            k,
            tr: 1,
            dim,
            ..Default::default()
        };
        let params = Self {
            tr: params.largest_tr_within_budget().min(3),
            ..params
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for a given chaff count with `gamma` set to the largest
    /// value it supports. Handy for small experiments.
    pub fn for_chaff(n: usize, m: usize, k: usize, dim: usize) -> Result<Self> {
        if m < 2 {
            return Err(MvotError::InvalidParams(format!("m={m} gives no security margin")));
        }
        let gamma = ((k as f64) * (m as f64).log2() + 1e-9).floor().max(1.0) as u32;
        Self::keygen(gamma, n, k, dim, Some(m))
    }

    pub fn with_tr(mut self, tr: usize) -> Result<Self> {
        self.tr = tr;
        self.validate()?;
        Ok(self)
    }

    pub fn without_obfuscation(mut self) -> Self {
        self.scalar_range = [1.0, 1.0];
        self.noise_delta = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MvotError::InvalidParams(msg));
        if self.gamma == 0 {
            return bad("gamma must be at least 1".into());
        }
        if self.n == 0 || self.k == 0 || self.k > self.n {
            return bad(format!("need 1 <= k <= n, got k={}, n={}", self.k, self.n));
        }
        if self.n > u32::MAX as usize || self.m >= u32::MAX as usize {
            return bad("n and m must fit in 32 bits".into());
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if self.dim < 2 {
            return Err(MvotError::DimensionTooSmall(self.dim));
        }
        self.check_tr(self.tr)?;
        let [lo, hi] = self.scalar_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return bad(format!("scalar range [{lo}, {hi}] must satisfy 0 < lo <= hi"));
        }
        if !(self.noise_delta.is_finite() && self.noise_delta >= 0.0) {
            return bad(format!("noise_delta {} must be finite and >= 0", self.noise_delta));
        }
        if self.hash_version != HASH_VERSION_SHA256 {
            return bad(format!("unsupported hash version {}", self.hash_version));
        }
        let bits = self.k as f64 * (self.m as f64).log2();
        if bits + 1e-9 < f64::from(self.gamma) {
            return bad(format!(
                "k*log2(m) = {}*log2({}) = {bits:.2} < gamma = {}",
                self.k, self.m, self.gamma
            ));
        }
        Ok(())
    }

    /// Checks `1 <= tr <= m + 1` and the combination budget for `tr`.
    pub fn check_tr(&self, tr: usize) -> Result<()> {
        if tr == 0 || tr > self.m + 1 {
            return Err(MvotError::ThresholdOutOfRange { tr, max: self.m + 1 });
        }
        let required = self.hash_bound(tr);
        if required > u128::from(self.combination_budget) {
            return Err(MvotError::CombinationBudget {
                required,
                budget: u128::from(self.combination_budget),
            });
        }
        Ok(())
    }

    pub fn num_subsets(&self) -> u128 {
        binomial(self.n, self.k)
    }

    /// Worst-case hash evaluations during one verification: `C(n,k)·tr^k`.
    pub fn hash_bound(&self, tr: usize) -> u128 {
        (tr as u128)
            .checked_pow(self.k as u32)
            .and_then(|p| p.checked_mul(self.num_subsets()))
            .unwrap_or(u128::MAX)
    }

    fn largest_tr_within_budget(&self) -> usize {
        let mut tr = 1;
        while tr <= self.m && self.hash_bound(tr + 1) <= u128::from(self.combination_budget) {
            tr += 1;
        }
        tr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keygen_examples() {
        let p = ProtocolParams::keygen(54, 5, 5, 512, Some(2000)).unwrap();
        assert_eq!(p.m, 2000);
        assert!(5.0 * 2000f64.log2() >= 54.0);

        assert_eq!(minimal_chaff(10, 1).unwrap(), 1024);
        assert_eq!(ProtocolParams::keygen(10, 1, 1, 8, None).unwrap().m, 1024);

        let err = ProtocolParams::keygen(54, 5, 4, 512, Some(2000)).unwrap_err();
        assert!(err.to_string().contains("43.86"), "{err}");
        assert_eq!(minimal_chaff(54, 4).unwrap(), 11586);
        assert_eq!(minimal_chaff(54, 5).unwrap(), 1783);
    }

    #[test]
    fn keygen_rejects_degenerate_input() {
        assert!(ProtocolParams::keygen(0, 5, 5, 512, None).is_err());
        assert!(ProtocolParams::keygen(10, 5, 6, 512, None).is_err());
        assert!(ProtocolParams::keygen(10, 5, 0, 512, None).is_err());
        // 2^200 chaff points cannot be satisfied.
        assert!(ProtocolParams::keygen(200, 1, 1, 512, None).is_err());
    }

    #[test]
    fn threshold_and_budget_checks() {
        let p = ProtocolParams::default();
        assert!(p.check_tr(0).is_err());
        assert!(p.check_tr(2002).is_err());
        assert_eq!(p.hash_bound(3), 243);
        assert!(p.check_tr(15).is_ok()); // 15^5 = 759375
        assert!(matches!(p.check_tr(16), Err(MvotError::CombinationBudget { .. })));
        let relaxed = ProtocolParams { k: 4, gamma: 40, ..p };
        assert_eq!(relaxed.hash_bound(3), 5 * 81);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 5), 1);
        assert_eq!(binomial(5, 4), 5);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn for_chaff_picks_supported_gamma() {
        let p = ProtocolParams::for_chaff(2, 3, 2, 8).unwrap();
        assert_eq!(p.gamma, 3);
        assert!(p.validate().is_ok());
        assert!(ProtocolParams::for_chaff(5, 1, 5, 8).is_err());
    }
}
