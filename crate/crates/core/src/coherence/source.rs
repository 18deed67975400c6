use std::ops::Range;

use ndarray::{Array2, ArrayView2, ArrayViewMut2};

use crate::error::{Error, Result};

/// Anything that can hand out packets of columns of an `n x p` observation
/// matrix on demand.
///
/// Packets are written transposed: `out` has shape `(cols.len(), nrows)` and
/// row `c` receives data column `cols.start + c`. Implementations must return
/// the same values for a column whatever packet it is requested in.
pub trait ColumnSource: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn load_columns(&self, cols: Range<usize>, out: ArrayViewMut2<'_, f64>) -> Result<()>;

    /// Convenience wrapper allocating the packet.
    fn packet(&self, cols: Range<usize>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((cols.len(), self.nrows()));
        self.load_columns(cols, out.view_mut())?;
        Ok(out)
    }
}

pub(crate) fn check_cols(cols: &Range<usize>, nrows: usize, ncols: usize) -> Result<()> {
    if cols.start > cols.end || cols.end > ncols {
        return Err(Error::OutOfRange {
            rows: 0..nrows,
            cols: cols.clone(),
            nrows,
            ncols,
        });
    }
    Ok(())
}

pub(crate) fn check_packet_shape(out: &ArrayViewMut2<'_, f64>, cols: &Range<usize>, nrows: usize) {
    assert_eq!(
        out.dim(),
        (cols.len(), nrows),
        "packet buffer shape does not match the requested columns"
    );
}

/// An in-memory `n x p` matrix (rows are observations).
impl ColumnSource for ArrayView2<'_, f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn load_columns(&self, cols: Range<usize>, mut out: ArrayViewMut2<'_, f64>) -> Result<()> {
        check_cols(&cols, self.nrows(), self.ncols())?;
        check_packet_shape(&out, &cols, self.nrows());
        let block = self.slice(ndarray::s![.., cols]);
        out.assign(&block.t());
        Ok(())
    }
}

impl ColumnSource for Array2<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn load_columns(&self, cols: Range<usize>, out: ArrayViewMut2<'_, f64>) -> Result<()> {
        self.view().load_columns(cols, out)
    }
}

impl<S: ColumnSource + ?Sized> ColumnSource for &S {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }

    fn ncols(&self) -> usize {
        (**self).ncols()
    }

    fn load_columns(&self, cols: Range<usize>, out: ArrayViewMut2<'_, f64>) -> Result<()> {
        (**self).load_columns(cols, out)
    }
}
