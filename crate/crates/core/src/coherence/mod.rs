//! Pearson correlations and the tau-coherence
//! `L_{n,tau} = max_{j - k >= tau} |rho_kj|`.
//!
//! [`BlockwiseScan`] computes the maximum without ever holding the `p x p`
//! correlation matrix: columns are loaded in packets of `block_size`, each
//! packet is centered once, and every pair of packets is reduced tile by tile.
//! [`tau_coherence_naive`] is the direct double loop kept as a reference.

mod blockwise;
mod jiang;
pub mod source;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use blockwise::{default_block_size, BlockwiseScan, ScanResult, Statistic};
pub use jiang::{jiang_diagnostics, JiangReport};
pub use source::ColumnSource;

use crate::error::{invalid, Error, Result};

/// How columns are centered before correlating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "mu")]
pub enum Mode {
    /// Subtract the empirical column mean.
    Centered,
    /// Subtract a known mean, one entry per column.
    KnownMean(Vec<f64>),
}

impl Mode {
    pub fn kind(&self) -> ModeKind {
        match self {
            Mode::Centered => ModeKind::Centered,
            Mode::KnownMean(_) => ModeKind::KnownMean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Centered,
    KnownMean,
}

/// Column means for a pair correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairMode {
    Centered,
    KnownMean { mu_x: f64, mu_y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceResult {
    pub l_n_tau: f64,
    /// Zero-based columns `(k, j)`, `j - k >= tau`; smallest pair on ties.
    pub argmax_pair: (usize, usize),
    pub v_n_tau: Option<f64>,
    pub mode: ModeKind,
    pub block_size: usize,
    pub pairs_scanned: u64,
}

/// Summary of one column: its mean and the norms before and after centering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub mean: f64,
    pub centered_norm: f64,
    pub raw_norm: f64,
}

impl ColumnSummary {
    pub fn of(x: &[f64]) -> Self {
        let mean = mean(x);
        Self {
            mean,
            centered_norm: x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt(),
            raw_norm: x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Empirical correlation of two samples, accumulated in index order.
/// A constant column (zero centered norm) is an error naming the column
/// (`0` for `x`, `1` for `y`).
pub fn pearson(x: &[f64], y: &[f64], mode: PairMode) -> Result<f64> {
    if x.len() != y.len() {
        return Err(invalid("y", "samples must have equal length"));
    }
    if x.len() < 2 {
        return Err(invalid("n", "need at least two observations"));
    }
    let (mx, my) = match mode {
        PairMode::Centered => (mean(x), mean(y)),
        PairMode::KnownMean { mu_x, mu_y } => (mu_x, mu_y),
    };
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (u, v) = (a - mx, b - my);
        sxy += u * v;
        sxx += u * u;
        syy += v * v;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateColumn { column: 0 });
    }
    if syy == 0.0 {
        return Err(Error::DegenerateColumn { column: 1 });
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn check_tau(tau: usize, p: usize) -> Result<()> {
    if tau < 1 {
        return Err(invalid("tau", "need tau >= 1"));
    }
    if tau >= p {
        return Err(invalid("tau", format!("tau = {tau} leaves no pair among p = {p} columns")));
    }
    Ok(())
}

/// Reference double loop over every pair `j - k >= tau` of an `n x p` matrix.
pub fn tau_coherence_naive(x: ArrayView2<'_, f64>, tau: usize, mode: &Mode) -> Result<CoherenceResult> {
    let p = x.ncols();
    check_tau(tau, p)?;
    if let Mode::KnownMean(mu) = mode {
        if mu.len() != p {
            return Err(invalid("mu", format!("expected {p} means, got {}", mu.len())));
        }
    }
    let cols: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
    let mut best = (-1.0f64, (0, 0));
    let mut pairs = 0u64;
    for k in 0..p {
        for j in k + tau..p {
            let pm = match mode {
                Mode::Centered => PairMode::Centered,
                Mode::KnownMean(mu) => PairMode::KnownMean {
                    mu_x: mu[k],
                    mu_y: mu[j],
                },
            };
            let r = pearson(&cols[k], &cols[j], pm)
                .map_err(|e| match e {
                    Error::DegenerateColumn { column: 0 } => Error::DegenerateColumn { column: k },
                    Error::DegenerateColumn { .. } => Error::DegenerateColumn { column: j },
                    other => other,
                })?
                .abs();
            pairs += 1;
            if r > best.0 {
                best = (r, (k, j));
            }
        }
    }
    Ok(CoherenceResult {
        l_n_tau: best.0,
        argmax_pair: best.1,
        v_n_tau: None,
        mode: mode.kind(),
        block_size: p,
        pairs_scanned: pairs,
    })
}

/// Blockwise tau-coherence with packets of `block_size` columns.
pub fn tau_coherence_blockwise<S: ColumnSource + ?Sized>(
    source: &S,
    tau: usize,
    block_size: usize,
    mode: &Mode,
) -> Result<CoherenceResult> {
    let scan = BlockwiseScan::new(tau, block_size).mode(mode.clone()).run(source)?;
    Ok(CoherenceResult {
        l_n_tau: scan.value,
        argmax_pair: scan.pair,
        v_n_tau: None,
        mode: mode.kind(),
        block_size: scan.block_size,
        pairs_scanned: scan.pairs_scanned,
    })
}

/// `V_{n,tau} = max_{j - k >= tau} |<X^k, X^j>|` on raw (uncentered) columns.
pub fn v_statistic<S: ColumnSource + ?Sized>(source: &S, tau: usize, block_size: usize) -> Result<f64> {
    Ok(BlockwiseScan::new(tau, block_size)
        .statistic(Statistic::RawInner)
        .run(source)?
        .value)
}
