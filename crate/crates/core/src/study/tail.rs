use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::limitlaw::{asymptotic_tail_p0, threshold_a_n};
use crate::sampler::SeededStream;

pub const MIN_TAIL_REPS: u64 = 10_000;

/// Pairs per parallel chunk; chunk `c` draws from stream `c`.
const CHUNK: u64 = 4096;

/// Monte-Carlo estimate of `P(|<X, Y>| > a_n(y))` for Gaussian `n`-vectors
/// whose coordinates have correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub y: f64,
    pub threshold: f64,
    pub seed: u64,
    pub reps: u64,
    pub exceedances: u64,
    pub estimate: f64,
    /// Half-width of the 95% normal-approximation binomial interval.
    pub half_width: f64,
    /// `e^{-y/2} / (sqrt(2 pi) p^2)` when `rho = 0`.
    pub reference: Option<f64>,
    pub ratio: Option<f64>,
}

pub fn estimate_tail_probability(
    n: usize,
    p: usize,
    rho: f64,
    y: f64,
    reps: u64,
    seed: u64,
) -> Result<TailEstimate> {
    if !(rho.abs() < 1.0) {
        return Err(invalid("rho", format!("need |rho| < 1, got {rho}")));
    }
    if reps < MIN_TAIL_REPS {
        return Err(invalid("reps", format!("need at least {MIN_TAIL_REPS}, got {reps}")));
    }
    if n < 1 {
        return Err(invalid("n", "need n >= 1"));
    }
    let a = threshold_a_n(n, p, y)?;
    let s = (1.0 - rho * rho).sqrt();
    let exceedances: u64 = (0..reps.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let stream = SeededStream::new(seed, c);
            let count = CHUNK.min(reps - c * CHUNK);
            let mut buf = vec![0.0; 2 * n];
            let mut hits = 0u64;
            for r in 0..count {
                stream.fill_normal(r * 2 * n as u64, &mut buf);
                let (x, z) = buf.split_at(n);
                let dot: f64 = x.iter().zip(z).map(|(&u, &w)| u * (rho * u + s * w)).sum();
                if dot.abs() > a {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let estimate = exceedances as f64 / reps as f64;
    let reference = (rho == 0.0).then(|| asymptotic_tail_p0(p, y));
    Ok(TailEstimate {
        n,
        p,
        rho,
        y,
        threshold: a,
        seed,
        reps,
        exceedances,
        estimate,
        half_width: 1.96 * (estimate * (1.0 - estimate) / reps as f64).sqrt(),
        reference,
        ratio: reference.map(|r| estimate / r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        assert!(estimate_tail_probability(10, 5, 1.0, 0.0, 10_000, 1).is_err());
        assert!(estimate_tail_probability(10, 5, 0.0, 0.0, 9_999, 1).is_err());
    }

    #[test]
    fn unreachable_threshold_gives_zero() {
        // a_n >= n would need |<X, Y>| >= n, far beyond reach at this n.
        let t = estimate_tail_probability(20, 10, 0.0, 200.0, 10_000, 3).unwrap();
        assert!(t.threshold > 20.0);
        assert_eq!(t.exceedances, 0);
        assert_eq!(t.half_width, 0.0);
    }

    #[test]
    fn reproducible_and_interval_formula() {
        let a = estimate_tail_probability(10, 3, 0.2, -3.0, 20_000, 9).unwrap();
        let b = estimate_tail_probability(10, 3, 0.2, -3.0, 20_000, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.estimate > 0.0 && a.estimate < 1.0);
        let hw = 1.96 * (a.estimate * (1.0 - a.estimate) / 20_000.0).sqrt();
        assert_eq!(a.half_width, hw);
        assert!(a.reference.is_none());
    }
}
