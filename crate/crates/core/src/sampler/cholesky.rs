//! Exact sampling from the three-band covariance by triangular factorization.
//! Used as an oracle on small dimensions.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;

use super::rng::SeededStream;
use crate::error::{invalid, Error, Result};

/// Largest dimension the dense sampler will factor.
pub const MAX_CHOLESKY_DIM: usize = 4096;

type BandFn = Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>;

/// Covariance `sigma_kj = gamma_kj s_k s_j` for `|k-j| < tau`,
/// `eps s_k s_j` for `tau <= |k-j| <= tau + K`, and `0` beyond.
/// `gamma_kk` is always one.
#[derive(Clone)]
pub struct SigmaSpec {
    pub tau: usize,
    pub k: usize,
    pub eps: f64,
    band: BandFn,
    pub sigma: Vec<f64>,
}

impl fmt::Debug for SigmaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigmaSpec")
            .field("tau", &self.tau)
            .field("k", &self.k)
            .field("eps", &self.eps)
            .field("sigma", &self.sigma)
            .finish_non_exhaustive()
    }
}

impl SigmaSpec {
    /// Unit scales and no in-band correlation.
    pub fn new(p: usize, tau: usize, k: usize, eps: f64) -> Result<Self> {
        if tau < 1 {
            return Err(invalid("tau", "need tau >= 1"));
        }
        if p < 1 {
            return Err(invalid("p", "need p >= 1"));
        }
        if !(eps.abs() <= 1.0) {
            return Err(invalid("eps_n", format!("need |eps_n| <= 1, got {eps}")));
        }
        Ok(Self {
            tau,
            k,
            eps,
            band: Arc::new(|_, _| 0.0),
            sigma: vec![1.0; p],
        })
    }

    /// In-band correlation hook `gamma(k, j)`, consulted for `0 < |k-j| < tau`.
    pub fn with_band<F>(mut self, band: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        self.band = Arc::new(band);
        self
    }

    pub fn with_scales(mut self, sigma: Vec<f64>) -> Result<Self> {
        if sigma.len() != self.sigma.len() {
            return Err(invalid("sigma", "scale vector length must equal p"));
        }
        if sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("sigma", "scales must be positive"));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn covariance(&self) -> Array2<f64> {
        let p = self.dim();
        Array2::from_shape_fn((p, p), |(k, j)| sigma_entry(self, k, j))
    }
}

pub fn sigma_entry(spec: &SigmaSpec, k: usize, j: usize) -> f64 {
    let d = k.abs_diff(j);
    let scale = spec.sigma[k] * spec.sigma[j];
    if d == 0 {
        scale
    } else if d < spec.tau {
        (spec.band)(k.min(j), k.max(j)) * scale
    } else if d <= spec.tau + spec.k {
        spec.eps * scale
    } else {
        0.0
    }
}

/// Lower-triangular `L` with `L L^T = a`. Pivots within rounding of zero are
/// accepted as semi-definite and zero their column; a clearly negative pivot
/// reports its (one-based) leading minor.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let p = a.nrows();
    assert_eq!(p, a.ncols(), "cholesky needs a square matrix");
    let scale = (0..p).map(|i| a[[i, i]].abs()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-12 * scale;
    let mut l = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut d = a[[j, j]];
        for m in 0..j {
            d -= l[[j, m]] * l[[j, m]];
        }
        if d < -tol {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        if d <= tol {
            continue;
        }
        let pivot = d.sqrt();
        l[[j, j]] = pivot;
        for i in j + 1..p {
            let mut s = a[[i, j]];
            for m in 0..j {
                s -= l[[i, m]] * l[[j, m]];
            }
            l[[i, j]] = s / pivot;
        }
    }
    Ok(l)
}

/// `n` i.i.d. rows with covariance exactly `spec`'s.
pub fn sample_cholesky(spec: &SigmaSpec, n: usize, seed: u64) -> Result<Array2<f64>> {
    let p = spec.dim();
    if p > MAX_CHOLESKY_DIM {
        return Err(invalid(
            "p",
            format!("dense factorization limited to p <= {MAX_CHOLESKY_DIM}, got {p}"),
        ));
    }
    let l = cholesky(&spec.covariance())?;
    let mut x = Array2::<f64>::zeros((n, p));
    let mut z = vec![0.0; p];
    for (i, mut row) in x.outer_iter_mut().enumerate() {
        SeededStream::new(seed, i as u64).fill_normal(0, &mut z);
        for k in 0..p {
            let mut s = 0.0;
            for m in 0..=k {
                s += l[[k, m]] * z[m];
            }
            row[k] = s;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_follow_three_branches() {
        let spec = SigmaSpec::new(8, 2, 1, 0.1)
            .unwrap()
            .with_band(|_, _| 0.3)
            .with_scales(vec![1.0, 2.0, 1.0, 1.0, 3.0, 1.0, 1.0, 1.0])
            .unwrap();
        assert_eq!(sigma_entry(&spec, 1, 1), 4.0);
        assert_eq!(sigma_entry(&spec, 0, 1), 0.3 * 2.0);
        assert_eq!(sigma_entry(&spec, 2, 4), 0.1 * 3.0);
        assert_eq!(sigma_entry(&spec, 4, 1), 0.1 * 6.0);
        assert_eq!(sigma_entry(&spec, 0, 4), 0.0);
    }

    #[test]
    fn factor_reconstructs() {
        let spec = SigmaSpec::new(6, 2, 1, 0.1).unwrap().with_band(|_, _| 0.3);
        let a = spec.covariance();
        let l = cholesky(&a).unwrap();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_reports_minor() {
        let spec = SigmaSpec::new(3, 3, 0, 0.0).unwrap().with_band(|_, _| 0.9);
        // [[1, .9, .9], [.9, 1, .9], [.9, .9, 1]] is PD; make it indefinite.
        let spec_bad = SigmaSpec::new(3, 3, 0, 0.0).unwrap().with_band(|k, j| {
            if (k, j) == (0, 2) {
                -0.9
            } else {
                0.9
            }
        });
        assert!(sample_cholesky(&spec, 2, 1).is_ok());
        match sample_cholesky(&spec_bad, 2, 1) {
            Err(Error::NotPositiveDefinite { minor }) => assert_eq!(minor, 3),
            other => panic!("expected indefinite error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_guard() {
        let spec = SigmaSpec::new(MAX_CHOLESKY_DIM + 1, 1, 0, 0.0).unwrap();
        assert!(sample_cholesky(&spec, 1, 0).is_err());
    }
}
