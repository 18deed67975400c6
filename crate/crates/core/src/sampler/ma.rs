//! Moving-average generation of banded observation matrices.
//!
//! `X_i^j = sum_m c_m Y_i^{j+m}` over the coefficient window, with the latent
//! `Y_i^k` drawn from stream `k` at counter `i`. Nothing of `Y` is stored: a
//! packet of columns regenerates exactly the latent columns it overlaps.

use std::ops::Range;

use ndarray::{Array2, ArrayViewMut2};

use super::rng::SeededStream;
use super::window::CoefficientWindow;
use crate::coherence::source::{check_packet_shape, ColumnSource};
use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;

/// Rows generated per latent chunk.
const ROW_CHUNK: usize = 256;

/// Streams the observation matrix of the moving-average scheme.
#[derive(Debug, Clone)]
pub struct MaSource {
    params: ModelParams,
    window: CoefficientWindow,
    seed: u64,
    scale: f64,
}

impl MaSource {
    pub fn new(params: ModelParams, window: CoefficientWindow, seed: u64) -> Result<Self> {
        if window.tau != params.tau || window.k != params.k || window.eps != params.eps {
            return Err(invalid(
                "window",
                format!(
                    "window (tau={}, K={}, eps={}) does not match params (tau={}, K={}, eps={})",
                    window.tau, window.k, window.eps, params.tau, params.k, params.eps
                ),
            ));
        }
        if window.len() != 2 * params.tau + 2 * params.k + 1 {
            return Err(invalid("window", "coefficient vector has the wrong length"));
        }
        Ok(Self {
            params,
            window,
            seed,
            scale: 1.0,
        })
    }

    /// Rescale every column to unit population variance, `1 / sqrt(gamma(0))`.
    pub fn normalized(mut self, on: bool) -> Self {
        self.scale = if on {
            1.0 / self.window.implied_autocovariance(0).sqrt()
        } else {
            1.0
        };
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn window(&self) -> &CoefficientWindow {
        &self.window
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Write `X[rows, cols]` transposed into `out` (`cols.len() x rows.len()`).
    pub fn fill_block(
        &self,
        rows: Range<usize>,
        cols: Range<usize>,
        mut out: ArrayViewMut2<'_, f64>,
    ) -> Result<()> {
        let (n, p) = (self.params.n, self.params.p);
        if rows.start > rows.end || rows.end > n || cols.start > cols.end || cols.end > p {
            return Err(Error::OutOfRange {
                rows,
                cols,
                nrows: n,
                ncols: p,
            });
        }
        assert_eq!(out.dim(), (cols.len(), rows.len()));
        if cols.is_empty() || rows.is_empty() {
            return Ok(());
        }
        let c = &self.window.coeffs;
        let width = c.len();
        let latent = cols.len() + width - 1;
        let mut y = vec![0.0; latent * ROW_CHUNK.min(rows.len())];
        let mut acc = vec![0.0; ROW_CHUNK.min(rows.len())];

        let mut r0 = rows.start;
        while r0 < rows.end {
            let r1 = (r0 + ROW_CHUNK).min(rows.end);
            let len = r1 - r0;
            for (l, ycol) in y.chunks_exact_mut(len).take(latent).enumerate() {
                SeededStream::new(self.seed, (cols.start + l) as u64).fill_normal(r0 as u64, ycol);
            }
            for (jc, mut row) in out.outer_iter_mut().enumerate() {
                let acc = &mut acc[..len];
                acc.fill(0.0);
                for (m, &cm) in c.iter().enumerate() {
                    let ycol = &y[(jc + m) * len..(jc + m + 1) * len];
                    for (a, &v) in acc.iter_mut().zip(ycol) {
                        *a += cm * v;
                    }
                }
                let dst = &mut row.as_slice_mut().expect("packet rows are contiguous")
                    [r0 - rows.start..r1 - rows.start];
                if self.scale == 1.0 {
                    dst.copy_from_slice(acc);
                } else {
                    for (d, &a) in dst.iter_mut().zip(acc.iter()) {
                        *d = a * self.scale;
                    }
                }
            }
            r0 = r1;
        }
        Ok(())
    }
}

impl ColumnSource for MaSource {
    fn nrows(&self) -> usize {
        self.params.n
    }

    fn ncols(&self) -> usize {
        self.params.p
    }

    fn load_columns(&self, cols: Range<usize>, out: ArrayViewMut2<'_, f64>) -> Result<()> {
        check_packet_shape(&out, &cols, self.params.n);
        self.fill_block(0..self.params.n, cols, out)
    }
}

/// Block `X[rows, cols]` of the moving-average scheme, rows as observations.
pub fn sample_ma(
    params: &ModelParams,
    window: &CoefficientWindow,
    seed: u64,
    rows: Range<usize>,
    cols: Range<usize>,
) -> Result<Array2<f64>> {
    let src = MaSource::new(*params, window.clone(), seed)?;
    let mut t = Array2::zeros((cols.len(), rows.len()));
    src.fill_block(rows, cols, t.view_mut())?;
    Ok(t.reversed_axes().as_standard_layout().into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::window::{build_window, CoefficientSource};
    use ndarray::s;

    fn setup() -> (ModelParams, CoefficientWindow) {
        let params = ModelParams::new(300, 40, 2, 3, 0.2).unwrap();
        let w = build_window(2, 3, 0.2, CoefficientSource::Seed(5)).unwrap();
        (params, w)
    }

    #[test]
    fn deterministic() {
        let (params, w) = setup();
        let a = sample_ma(&params, &w, 11, 0..300, 0..40).unwrap();
        let b = sample_ma(&params, &w, 11, 0..300, 0..40).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_ma(&params, &w, 12, 0..300, 0..40).unwrap());
    }

    #[test]
    fn tiles_agree_bit_exactly() {
        let (params, w) = setup();
        let full = sample_ma(&params, &w, 3, 0..300, 0..40).unwrap();
        for (rows, cols) in [(0..1, 0..1), (17..299, 5..40), (256..300, 39..40), (100..260, 0..13)] {
            let part = sample_ma(&params, &w, 3, rows.clone(), cols.clone()).unwrap();
            assert_eq!(part, full.slice(s![rows, cols]));
        }
    }

    #[test]
    fn matches_direct_sum_over_latent_draws() {
        let (params, w) = setup();
        let x = sample_ma(&params, &w, 8, 0..300, 0..40).unwrap();
        for &(i, j) in &[(0usize, 0usize), (299, 39), (150, 17)] {
            let direct: f64 = w
                .coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| c * SeededStream::new(8, (j + m) as u64).normal_at(i as u64))
                .sum();
            assert!((direct - x[[i, j]]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let (params, w) = setup();
        assert!(sample_ma(&params, &w, 1, 0..301, 0..4).is_err());
        assert!(sample_ma(&params, &w, 1, 0..3, 38..41).is_err());
        let other = build_window(2, 2, 0.2, CoefficientSource::Seed(5)).unwrap();
        assert!(sample_ma(&params, &other, 1, 0..3, 0..4).is_err());
    }

    #[test]
    fn normalized_columns_have_unit_variance() {
        let params = ModelParams::new(20_000, 12, 1, 1, 0.5).unwrap();
        let w = build_window(1, 1, 0.5, CoefficientSource::Explicit(vec![1.0, 1.0, 1.0])).unwrap();
        let src = MaSource::new(params, w, 4).unwrap().normalized(true);
        let cols = src.packet(0..12).unwrap();
        for col in cols.outer_iter() {
            let v = col.iter().map(|x| x * x).sum::<f64>() / col.len() as f64;
            assert!((v - 1.0).abs() < 4.0 * (2.0 / 20_000f64).sqrt());
        }
    }
}
