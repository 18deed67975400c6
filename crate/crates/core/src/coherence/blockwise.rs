use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_tau, ColumnSource, Mode};
use crate::error::{invalid, Error, Result};

/// Columns per side of a gram tile; one tile is the unit of parallel work.
const TILE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// `|rho_kj|`.
    Correlation,
    /// `|<X^k, X^j>|` on raw columns.
    RawInner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub value: f64,
    pub pair: (usize, usize),
    pub pairs_scanned: u64,
    pub block_size: usize,
}

/// Largest packet width whose two packets plus one `Tb x Tb` block fit in
/// `budget` bytes of `f64`, clamped to `[1, p]`.
pub fn default_block_size(n: usize, p: usize, budget: u64) -> usize {
    let (n, words) = (n as f64, budget as f64 / 8.0);
    // 2 n Tb + Tb^2 <= words
    let tb = (-n + (n * n + words).sqrt()).floor();
    (tb.max(1.0) as usize).min(p.max(1))
}

/// Configuration of a blockwise maximum scan over the pairs `j - k >= tau`.
#[derive(Debug, Clone)]
pub struct BlockwiseScan {
    tau: usize,
    block_size: usize,
    mode: Mode,
    statistic: Statistic,
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    pair: (usize, usize),
    pairs: u64,
}

impl Best {
    const NONE: Best = Best {
        value: f64::NEG_INFINITY,
        pair: (usize::MAX, usize::MAX),
        pairs: 0,
    };

    /// Larger value wins; ties go to the lexicographically smaller pair.
    /// Associative and commutative, so the reduction order is irrelevant.
    fn merge(self, other: Best) -> Best {
        let pairs = self.pairs + other.pairs;
        let keep_self = self.value > other.value
            || (self.value == other.value && self.pair <= other.pair);
        let w = if keep_self { self } else { other };
        Best { pairs, ..w }
    }
}

/// A loaded, centered packet of columns.
struct Packet {
    start: usize,
    /// `(width, n)`: one centered column per row.
    data: Array2<f64>,
    /// Reciprocal centered norms (correlation only).
    inv_norms: Vec<f64>,
}

impl BlockwiseScan {
    pub fn new(tau: usize, block_size: usize) -> Self {
        Self {
            tau,
            block_size,
            mode: Mode::Centered,
            statistic: Statistic::Correlation,
            threads: None,
        }
    }

    pub fn mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn statistic(mut self, statistic: Statistic) -> Self {
        self.statistic = statistic;
        self
    }

    /// Run inside a dedicated pool of this many threads; `None` uses the
    /// ambient rayon pool. The result does not depend on it.
    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn run<S: ColumnSource + ?Sized>(&self, source: &S) -> Result<ScanResult> {
        match self.threads {
            None => self.scan(source),
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| invalid("threads", e.to_string()))?
                .install(|| self.scan(source)),
        }
    }

    fn scan<S: ColumnSource + ?Sized>(&self, source: &S) -> Result<ScanResult> {
        let (n, p) = (source.nrows(), source.ncols());
        check_tau(self.tau, p)?;
        if n < 2 {
            return Err(invalid("n", "need at least two observations"));
        }
        if self.block_size < 1 || self.block_size > p {
            return Err(invalid(
                "block_size",
                format!("need 1 <= Tb <= p = {p}, got {}", self.block_size),
            ));
        }
        if let Mode::KnownMean(mu) = &self.mode {
            if mu.len() != p {
                return Err(invalid("mu", format!("expected {p} means, got {}", mu.len())));
            }
        }
        let tb = self.block_size;
        let packets = p.div_ceil(tb);
        let mut best = Best::NONE;
        let mut outer = Array2::zeros((tb, n));
        let mut inner = Array2::zeros((tb, n));
        for a in 0..packets {
            let a_range = a * tb..((a + 1) * tb).min(p);
            // Packets entirely within the band of every later column are skipped.
            if a_range.start + self.tau >= p {
                break;
            }
            let pa = self.load(source, a_range, &mut outer)?;
            for b in a..packets {
                let b_range = b * tb..((b + 1) * tb).min(p);
                if b_range.end - 1 < pa.start + self.tau {
                    continue;
                }
                let found = if b == a {
                    self.reduce(&pa, &pa)
                } else {
                    let pb = self.load(source, b_range, &mut inner)?;
                    let found = self.reduce(&pa, &pb);
                    inner = pb.data;
                    found
                };
                best = best.merge(found);
            }
            outer = pa.data;
        }
        Ok(ScanResult {
            value: best.value,
            pair: best.pair,
            pairs_scanned: best.pairs,
            block_size: tb,
        })
    }

    /// Load and center a packet into `buf` (reused across calls).
    fn load<S: ColumnSource + ?Sized>(
        &self,
        source: &S,
        cols: std::ops::Range<usize>,
        buf: &mut Array2<f64>,
    ) -> Result<Packet> {
        let n = source.nrows();
        let width = cols.len();
        let mut data = std::mem::take(buf);
        if data.nrows() < width || data.ncols() != n {
            data = Array2::zeros((width, n));
        }
        let mut data = if data.nrows() == width {
            data
        } else {
            // the last packet may be narrower
            data.slice_move(s![..width, ..])
        };
        source.load_columns(cols.clone(), data.view_mut())?;
        let mut inv_norms = Vec::new();
        if self.statistic == Statistic::Correlation {
            inv_norms.reserve(width);
            for (c, mut row) in data.outer_iter_mut().enumerate() {
                let col = cols.start + c;
                let x = row.as_slice_mut().expect("packet rows are contiguous");
                let center = match &self.mode {
                    Mode::Centered => super::mean(x),
                    Mode::KnownMean(mu) => mu[col],
                };
                let mut ss = 0.0;
                for v in x.iter_mut() {
                    *v -= center;
                    ss += *v * *v;
                }
                if ss == 0.0 {
                    return Err(Error::DegenerateColumn { column: col });
                }
                inv_norms.push(1.0 / ss.sqrt());
            }
        }
        if !data.is_standard_layout() {
            data = data.as_standard_layout().into_owned();
        }
        Ok(Packet {
            start: cols.start,
            data,
            inv_norms,
        })
    }

    /// Maximum over admissible pairs between two packets (`a` precedes or equals `b`).
    fn reduce(&self, a: &Packet, b: &Packet) -> Best {
        let tau = self.tau;
        let (wa, wb) = (a.data.nrows(), b.data.nrows());
        let tiles: Vec<(usize, usize)> = (0..wa.div_ceil(TILE))
            .flat_map(|ti| (0..wb.div_ceil(TILE)).map(move |tj| (ti * TILE, tj * TILE)))
            .filter(|&(i0, j0)| {
                let k_min = a.start + i0;
                let j_max = b.start + (j0 + TILE).min(wb) - 1;
                j_max >= k_min + tau
            })
            .collect();
        tiles
            .par_iter()
            .map_init(
                || Array2::<f64>::zeros((TILE, TILE)),
                |gram, &(i0, j0)| {
                    let i1 = (i0 + TILE).min(wa);
                    let j1 = (j0 + TILE).min(wb);
                    self.tile(a, b, i0..i1, j0..j1, gram)
                },
            )
            .reduce(|| Best::NONE, Best::merge)
    }

    fn tile(
        &self,
        a: &Packet,
        b: &Packet,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
        gram: &mut Array2<f64>,
    ) -> Best {
        let (h, w) = (rows.len(), cols.len());
        let lhs: ArrayView2<'_, f64> = a.data.slice(s![rows.clone(), ..]);
        let rhs: ArrayView2<'_, f64> = b.data.slice(s![cols.clone(), ..]);
        let mut g = gram.slice_mut(s![..h, ..w]);
        general_mat_mul(1.0, &lhs, &rhs.t(), 0.0, &mut g);
        let mut best = Best::NONE;
        for (ii, grow) in g.outer_iter().enumerate() {
            let k = a.start + rows.start + ii;
            let first = (k + self.tau).max(b.start + cols.start);
            let last = b.start + cols.end;
            if first >= last {
                continue;
            }
            let jj0 = first - b.start - cols.start;
            best.pairs += (last - first) as u64;
            for (jj, &v) in grow.iter().enumerate().skip(jj0) {
                let value = match self.statistic {
                    Statistic::Correlation => {
                        let jc = cols.start + jj;
                        (v * a.inv_norms[rows.start + ii] * b.inv_norms[jc]).abs().min(1.0)
                    }
                    Statistic::RawInner => v.abs(),
                };
                if value > best.value {
                    best.value = value;
                    best.pair = (k, b.start + cols.start + jj);
                }
            }
        }
        best
    }
}
