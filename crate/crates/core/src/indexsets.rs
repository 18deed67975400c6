//! Index partitions of the ordered column pairs `k < j`.
//!
//! Pairs split by distance `d = j - k` into the central band (`d < tau`), the
//! transition band (`tau <= d <= tau + K`) and the outer region. Column indices
//! are zero-based; only differences matter for the partition.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCardinalities {
    pub i_tau: u64,
    pub i_k: u64,
    pub i_zero: u64,
    pub total: u64,
}

fn check_band(p: usize, tau: usize, k: usize) -> Result<()> {
    if p < 2 {
        return Err(invalid("p", format!("need p >= 2, got {p}")));
    }
    if tau < 1 {
        return Err(invalid("tau", "need tau >= 1"));
    }
    if tau + k >= p {
        return Err(invalid(
            "tau",
            format!("tau + K = {} must be < p = {p}", tau + k),
        ));
    }
    Ok(())
}

/// Closed-form sizes of the three regions.
pub fn cardinalities(p: usize, tau: usize, k: usize) -> Result<SetCardinalities> {
    check_band(p, tau, k)?;
    let (p, tau, k) = (p as u64, tau as u64, k as u64);
    // Each numerator is even: one factor of every product has the right parity.
    let i_tau = (tau - 1) * (2 * p - tau) / 2;
    let i_k = (k + 1) * (2 * p - k - 2 * tau) / 2;
    let i_zero = (p - tau - k - 1) * (p - tau - k) / 2;
    Ok(SetCardinalities {
        i_tau,
        i_k,
        i_zero,
        total: i_tau + i_k + i_zero,
    })
}

/// Same counts by enumerating every pair through [`classify_pair`].
pub fn cardinalities_brute_force(p: usize, tau: usize, k: usize) -> Result<SetCardinalities> {
    check_band(p, tau, k)?;
    let mut c = SetCardinalities {
        i_tau: 0,
        i_k: 0,
        i_zero: 0,
        total: 0,
    };
    for a in 0..p {
        for b in a + 1..p {
            match classify_pair(a, b, tau, k)? {
                Region::Band => c.i_tau += 1,
                Region::Transition => c.i_k += 1,
                Region::Outer => c.i_zero += 1,
            }
            c.total += 1;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Band,
    Transition,
    Outer,
}

pub fn classify_pair(k: usize, j: usize, tau: usize, band_k: usize) -> Result<Region> {
    if k >= j {
        return Err(invalid("pair", format!("need k < j, got ({k}, {j})")));
    }
    let d = j - k;
    Ok(if d < tau {
        Region::Band
    } else if d <= tau + band_k {
        Region::Transition
    } else {
        Region::Outer
    })
}

/// Columns involved in some model correlation exceeding `1 - delta`, along
/// with the pair set `E_delta` they induce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaSet {
    pub p: usize,
    pub members: BTreeSet<usize>,
}

impl GammaSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members.contains(&k)
    }

    /// Whether the ordered pair `(k, j)` belongs to `E_delta`.
    pub fn e_delta_contains(&self, k: usize, j: usize) -> bool {
        k < j && j < self.p && (self.contains(k) || self.contains(j))
    }

    /// `|E_delta|`: pairs with at least one endpoint in the set.
    pub fn e_delta_len(&self) -> u64 {
        let g = self.len() as u64;
        let p = self.p as u64;
        // pairs touching the set = all pairs - pairs fully outside it
        p * (p - 1) / 2 - (p - g) * (p - g).saturating_sub(1) / 2
    }

    pub fn e_delta(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.p).flat_map(move |k| {
            (k + 1..self.p)
                .filter(move |&j| self.contains(k) || self.contains(j))
                .map(move |j| (k, j))
        })
    }
}

/// Scan every off-diagonal pair of `corr` for `|r_kj| > 1 - delta`.
pub fn gamma_set<F>(corr: F, p: usize, delta: f64) -> Result<GammaSet>
where
    F: Fn(usize, usize) -> f64,
{
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("need delta in (0, 1), got {delta}")));
    }
    let threshold = 1.0 - delta;
    let mut members = BTreeSet::new();
    for k in 0..p {
        for j in k + 1..p {
            if corr(k, j).abs() > threshold {
                members.insert(k);
                members.insert(j);
            }
        }
    }
    Ok(GammaSet { p, members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_example() {
        let c = cardinalities(10, 3, 2).unwrap();
        assert_eq!((c.i_tau, c.i_k, c.i_zero, c.total), (17, 18, 10, 45));
        assert_eq!(c, cardinalities_brute_force(10, 3, 2).unwrap());
    }

    #[test]
    fn degenerate_factors() {
        for p in 2..30 {
            assert_eq!(cardinalities(p, 1, 0).unwrap().i_tau, 0);
        }
        assert_eq!(cardinalities(12, 4, 7).unwrap().i_zero, 0);
        assert!(cardinalities(10, 4, 6).is_err());
    }

    #[test]
    fn classify_examples() {
        let (tau, k) = (4, 3);
        assert_eq!(classify_pair(0, tau - 1, tau, k).unwrap(), Region::Band);
        assert_eq!(classify_pair(0, tau, tau, k).unwrap(), Region::Transition);
        assert_eq!(classify_pair(0, tau + k, tau, k).unwrap(), Region::Transition);
        assert_eq!(classify_pair(0, tau + k + 1, tau, k).unwrap(), Region::Outer);
        assert!(classify_pair(3, 3, tau, k).is_err());
        assert!(classify_pair(4, 3, tau, k).is_err());
    }

    #[test]
    fn gamma_set_examples() {
        let id = |k: usize, j: usize| if k == j { 1.0 } else { 0.0 };
        assert!(gamma_set(id, 20, 0.3).unwrap().is_empty());

        let delta = 0.2;
        let corr = |k: usize, j: usize| match (k.min(j), k.max(j)) {
            (a, b) if a == b => 1.0,
            (0, 1) => 1.0 - delta / 2.0,
            _ => 0.0,
        };
        let g = gamma_set(corr, 8, delta).unwrap();
        assert_eq!(g.members.iter().copied().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(g.e_delta_len(), g.e_delta().count() as u64);
        assert!(gamma_set(corr, 8, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn e_delta_bound(p in 2usize..40, picks in proptest::collection::vec((0usize..40, 0usize..40), 0..6)) {
            let planted: Vec<(usize, usize)> = picks
                .into_iter()
                .map(|(a, b)| (a % p, b % p))
                .filter(|(a, b)| a != b)
                .collect();
            let corr = |k: usize, j: usize| {
                if k == j {
                    1.0
                } else if planted.iter().any(|&(a, b)| (a, b) == (k, j) || (b, a) == (k, j)) {
                    0.95
                } else {
                    0.1
                }
            };
            let g = gamma_set(corr, p, 0.1).unwrap();
            let brute = g.e_delta().count() as u64;
            prop_assert_eq!(brute, g.e_delta_len());
            prop_assert!(brute <= 2 * p as u64 * g.len() as u64);
        }
    }
}
