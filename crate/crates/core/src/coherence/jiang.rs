use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{check_tau, mean};
use crate::error::{Error, Result};

/// Both sides of the bound
/// `|||n R_n - X^T X||| <= ((c1^2 + 2 c1) / c2^2) V + n (c3 / c2)^2`
/// and the gap between `n L_{n,tau}` and `V_{n,tau}`.
///
/// `|||A|||` is the largest `|A_kj|` over `j - k >= tau`, the same pairs `L`
/// and `V` range over, so that `delta_n <= lhs` holds alongside the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JiangReport {
    /// `max_k |h_k - 1|` with `h_k = ||X^k - mean_k|| / sqrt(n)`.
    pub c1: f64,
    /// `min_k h_k`.
    pub c2: f64,
    /// `max_k |mean_k|`.
    pub c3: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub l_n_tau: f64,
    pub v_n_tau: f64,
    /// `|n L - V|`.
    pub delta_n: f64,
    /// `(n^2 L^2 - V^2) / n`.
    pub prop1: f64,
}

impl JiangReport {
    pub fn bound_holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

pub fn jiang_diagnostics(x: ArrayView2<'_, f64>, tau: usize) -> Result<JiangReport> {
    let (n, p) = x.dim();
    check_tau(tau, p)?;
    let nf = n as f64;
    let cols: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
    let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
    let centered_norms: Vec<f64> = cols
        .iter()
        .zip(&means)
        .map(|(c, m)| c.iter().map(|v| (v - m) * (v - m)).sum::<f64>().sqrt())
        .collect();
    if let Some(k) = centered_norms.iter().position(|&s| s == 0.0) {
        return Err(Error::DegenerateColumn { column: k });
    }
    let h: Vec<f64> = centered_norms.iter().map(|s| s / nf.sqrt()).collect();
    let c1 = h.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let c2 = h.iter().copied().fold(f64::INFINITY, f64::min);
    let c3 = means.iter().map(|m| m.abs()).fold(0.0, f64::max);

    let (mut lhs, mut l, mut v) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..p {
        for j in k + tau..p {
            let (a, b) = (&cols[k], &cols[j]);
            let (ma, mb) = (means[k], means[j]);
            let mut cross = 0.0;
            let mut raw = 0.0;
            for (u, w) in a.iter().zip(b) {
                cross += (u - ma) * (w - mb);
                raw += u * w;
            }
            let rho = cross / (centered_norms[k] * centered_norms[j]);
            lhs = lhs.max((nf * rho - raw).abs());
            l = l.max(rho.abs());
            v = v.max(raw.abs());
        }
    }
    let rhs = (c1 * c1 + 2.0 * c1) / (c2 * c2) * v + nf * (c3 / c2) * (c3 / c2);
    Ok(JiangReport {
        c1,
        c2,
        c3,
        lhs,
        rhs,
        l_n_tau: l,
        v_n_tau: v,
        delta_n: (nf * l - v).abs(),
        prop1: (nf * nf * l * l - v * v) / nf,
    })
}
