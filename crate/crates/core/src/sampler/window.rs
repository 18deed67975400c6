use serde::{Deserialize, Serialize};

use super::rng::SeededStream;
use crate::error::{invalid, Result};

/// Stream id reserved for drawing the central coefficients.
pub const WINDOW_STREAM: u64 = u64::MAX;

/// Where the `2 tau + 1` central coefficients come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSource {
    Explicit(Vec<f64>),
    /// i.i.d. uniform on `[-1, 1]`.
    Seed(u64),
}

/// Moving-average coefficients `c` of length `2 tau + 2K + 1`, laid out as
/// `K` copies of `eps`, the central `r_1..r_{2 tau + 1}`, then `K` copies of `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientWindow {
    pub tau: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "eps_n")]
    pub eps: f64,
    pub coeffs: Vec<f64>,
}

impl CoefficientWindow {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The central coefficients `r`.
    pub fn central(&self) -> &[f64] {
        &self.coeffs[self.k..self.k + 2 * self.tau + 1]
    }

    /// Covariance between columns `h` apart: `sum_m c_m c_{m+h}`, zero once the
    /// shift leaves the window.
    pub fn implied_autocovariance(&self, h: usize) -> f64 {
        let c = &self.coeffs;
        if h >= c.len() {
            return 0.0;
        }
        c.iter().zip(&c[h..]).map(|(a, b)| a * b).sum()
    }

    pub fn implied_autocorrelation(&self, h: usize) -> f64 {
        self.implied_autocovariance(h) / self.implied_autocovariance(0)
    }
}

pub fn build_window(
    tau: usize,
    k: usize,
    eps: f64,
    source: CoefficientSource,
) -> Result<CoefficientWindow> {
    if tau < 1 {
        return Err(invalid("tau", "need tau >= 1"));
    }
    if !(eps.abs() <= 1.0) {
        return Err(invalid("eps_n", format!("need |eps_n| <= 1, got {eps}")));
    }
    let width = 2 * tau + 1;
    let central = match source {
        CoefficientSource::Explicit(r) => {
            if r.len() != width {
                return Err(invalid(
                    "r",
                    format!("expected {width} central coefficients, got {}", r.len()),
                ));
            }
            if let Some(bad) = r.iter().find(|v| !(v.abs() <= 1.0)) {
                return Err(invalid("r", format!("coefficient {bad} outside [-1, 1]")));
            }
            r
        }
        CoefficientSource::Seed(seed) => {
            let mut u = vec![0.0; width];
            SeededStream::new(seed, WINDOW_STREAM).fill_uniform(0, &mut u);
            u.into_iter().map(|x| 2.0 * x - 1.0).collect()
        }
    };
    let mut coeffs = Vec::with_capacity(width + 2 * k);
    coeffs.extend(std::iter::repeat_n(eps, k));
    coeffs.extend_from_slice(&central);
    coeffs.extend(std::iter::repeat_n(eps, k));
    Ok(CoefficientWindow {
        tau,
        k,
        eps,
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_window() -> CoefficientWindow {
        build_window(1, 1, 0.5, CoefficientSource::Explicit(vec![1.0, 1.0, 1.0])).unwrap()
    }

    #[test]
    fn layout() {
        assert_eq!(unit_window().coeffs, vec![0.5, 1.0, 1.0, 1.0, 0.5]);
        let w = build_window(1, 0, 0.3, CoefficientSource::Explicit(vec![0.1, -0.2, 0.3])).unwrap();
        assert_eq!(w.coeffs, vec![0.1, -0.2, 0.3]);
    }

    #[test]
    fn autocovariance_overlap_sums() {
        let w = unit_window();
        assert_eq!(w.implied_autocovariance(0), 3.5);
        assert_eq!(w.implied_autocovariance(1), 3.0);
        assert_eq!(w.implied_autocovariance(4), 0.25);
        assert_eq!(w.implied_autocovariance(5), 0.0);
        assert_eq!(w.implied_autocovariance(500), 0.0);
    }

    #[test]
    fn seeded_window_is_reproducible() {
        let a = build_window(3, 2, 0.1, CoefficientSource::Seed(99)).unwrap();
        let b = build_window(3, 2, 0.1, CoefficientSource::Seed(99)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * 3 + 2 * 2 + 1);
        assert!(a.central().iter().all(|r| r.abs() <= 1.0));
        assert_ne!(a, build_window(3, 2, 0.1, CoefficientSource::Seed(100)).unwrap());
    }

    #[test]
    fn rejects_bad_explicit() {
        assert!(build_window(1, 0, 0.1, CoefficientSource::Explicit(vec![1.0, 1.0])).is_err());
        assert!(build_window(1, 0, 0.1, CoefficientSource::Explicit(vec![1.0, 1.5, 0.0])).is_err());
        assert!(build_window(0, 0, 0.1, CoefficientSource::Seed(1)).is_err());
    }
}
