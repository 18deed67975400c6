//! The `TCOH v1` binary matrix format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "TCOH"
//! 4       4     version, u32 LE (= 1)
//! 8       8     n (rows), u64 LE
//! 16      8     p (columns), u64 LE
//! 24      1     dtype (1 = f64 LE)
//! 25      1     layout (0 = row-major)
//! 26      8np   values
//! ```
//!
//! A JSON sidecar `<file>.meta.json` may record how the matrix was produced.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use serde::Serialize;

use crate::coherence::source::{check_cols, check_packet_shape, ColumnSource};
use crate::error::{Error, Result};
use crate::sampler::MaSource;

pub const MAGIC: &[u8; 4] = b"TCOH";
pub const VERSION: u32 = 1;
pub const DTYPE_F64: u8 = 1;
pub const LAYOUT_ROW_MAJOR: u8 = 0;
pub const HEADER_LEN: u64 = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub n: u64,
    pub p: u64,
}

impl Header {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.n.to_le_bytes())?;
        w.write_all(&self.p.to_le_bytes())?;
        w.write_all(&[DTYPE_F64, LAYOUT_ROW_MAJOR])?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = [0u8; HEADER_LEN as usize];
        r.read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
        if &buf[0..4] != MAGIC {
            return Err(Error::Format("bad magic, expected TCOH".into()));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(buf[8..16].try_into().expect("8 bytes"));
        let p = u64::from_le_bytes(buf[16..24].try_into().expect("8 bytes"));
        if buf[24] != DTYPE_F64 {
            return Err(Error::Format(format!("unsupported dtype {}", buf[24])));
        }
        if buf[25] != LAYOUT_ROW_MAJOR {
            return Err(Error::Format(format!("unsupported layout {}", buf[25])));
        }
        Ok(Self { n, p })
    }

    pub fn data_len(&self) -> u64 {
        self.n * self.p * 8
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_sidecar<T: Serialize>(path: &Path, meta: &T) -> Result<()> {
    let f = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(f, meta)?;
    Ok(())
}

/// Streams rows into a TCOH file; the row count is fixed up front.
pub struct TcohWriter {
    out: BufWriter<File>,
    header: Header,
    rows_written: u64,
}

impl TcohWriter {
    pub fn create(path: &Path, n: usize, p: usize) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = Header {
            n: n as u64,
            p: p as u64,
        };
        header.write_to(&mut out)?;
        Ok(Self {
            out,
            header,
            rows_written: 0,
        })
    }

    /// Append a block of rows (`rows x p`).
    pub fn write_rows(&mut self, block: ArrayView2<'_, f64>) -> Result<()> {
        if block.ncols() as u64 != self.header.p {
            return Err(Error::Format(format!(
                "row block has {} columns, file has {}",
                block.ncols(),
                self.header.p
            )));
        }
        if self.rows_written + block.nrows() as u64 > self.header.n {
            return Err(Error::Format("more rows than declared".into()));
        }
        for row in block.outer_iter() {
            for v in row.iter() {
                self.out.write_all(&v.to_le_bytes())?;
            }
        }
        self.rows_written += block.nrows() as u64;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.rows_written != self.header.n {
            return Err(Error::Format(format!(
                "declared {} rows, wrote {}",
                self.header.n, self.rows_written
            )));
        }
        self.out.flush()?;
        Ok(())
    }
}

/// Write the moving-average matrix of `source` row block by row block, never
/// holding more than `rows_per_block x p` values.
pub fn write_ma(path: &Path, source: &MaSource, rows_per_block: usize) -> Result<()> {
    let (n, p) = (source.nrows(), source.ncols());
    let step = rows_per_block.max(1);
    let mut w = TcohWriter::create(path, n, p)?;
    let mut buf = Array2::zeros((p, step.min(n)));
    let mut r0 = 0;
    while r0 < n {
        let r1 = (r0 + step).min(n);
        let mut block = buf.slice_mut(ndarray::s![.., ..r1 - r0]);
        source.fill_block(r0..r1, 0..p, block.view_mut())?;
        w.write_rows(block.t())?;
        r0 = r1;
    }
    w.finish()
}

pub fn write_tcoh(path: &Path, x: ArrayView2<'_, f64>) -> Result<()> {
    let mut w = TcohWriter::create(path, x.nrows(), x.ncols())?;
    w.write_rows(x)?;
    w.finish()
}

fn open_checked(path: &Path) -> Result<(File, Header)> {
    let mut f = File::open(path)?;
    let header = Header::read_from(&mut f)?;
    let len = f.metadata()?.len();
    if len != HEADER_LEN + header.data_len() {
        return Err(Error::Format(format!(
            "file is {len} bytes, header implies {}",
            HEADER_LEN + header.data_len()
        )));
    }
    Ok((f, header))
}

pub fn read_header(path: &Path) -> Result<Header> {
    Ok(open_checked(path)?.1)
}

pub fn read_tcoh(path: &Path) -> Result<Array2<f64>> {
    let (f, header) = open_checked(path)?;
    let (n, p) = (header.n as usize, header.p as usize);
    let mut r = BufReader::new(f);
    let mut data = Vec::with_capacity(n * p);
    let mut b = [0u8; 8];
    for _ in 0..n * p {
        r.read_exact(&mut b)?;
        data.push(f64::from_le_bytes(b));
    }
    Array2::from_shape_vec((n, p), data).map_err(|e| Error::Format(e.to_string()))
}

/// Column packets read straight from a TCOH file, one strided read per row.
pub struct TcohFile {
    file: Mutex<File>,
    header: Header,
}

impl TcohFile {
    pub fn open(path: &Path) -> Result<Self> {
        let (file, header) = open_checked(path)?;
        Ok(Self {
            file: Mutex::new(file),
            header,
        })
    }

    pub fn header(&self) -> Header {
        self.header
    }
}

impl ColumnSource for TcohFile {
    fn nrows(&self) -> usize {
        self.header.n as usize
    }

    fn ncols(&self) -> usize {
        self.header.p as usize
    }

    fn load_columns(&self, cols: Range<usize>, mut out: ArrayViewMut2<'_, f64>) -> Result<()> {
        let (n, p) = (self.nrows(), self.ncols());
        check_cols(&cols, n, p)?;
        check_packet_shape(&out, &cols, n);
        let mut f = self.file.lock().expect("file lock poisoned");
        let mut buf = vec![0u8; cols.len() * 8];
        for i in 0..n {
            let offset = HEADER_LEN + ((i * p + cols.start) * 8) as u64;
            f.seek(SeekFrom::Start(offset))?;
            f.read_exact(&mut buf)?;
            for (c, bytes) in buf.chunks_exact(8).enumerate() {
                out[[c, i]] = f64::from_le_bytes(bytes.try_into().expect("8 bytes"));
            }
        }
        Ok(())
    }
}

/// A TCOH matrix, read into memory when it takes at most half of `budget`
/// bytes and streamed from disk otherwise.
pub enum MatrixSource {
    Memory(Array2<f64>),
    File(TcohFile),
}

impl MatrixSource {
    pub fn open(path: &Path, budget: u64) -> Result<Self> {
        let header = read_header(path)?;
        if header.data_len() <= budget / 2 {
            Ok(Self::Memory(read_tcoh(path)?))
        } else {
            Ok(Self::File(TcohFile::open(path)?))
        }
    }

    /// Bytes of the matrix held in memory.
    pub fn resident_bytes(&self) -> u64 {
        match self {
            Self::Memory(x) => (x.len() * 8) as u64,
            Self::File(_) => 0,
        }
    }
}

impl ColumnSource for MatrixSource {
    fn nrows(&self) -> usize {
        match self {
            Self::Memory(x) => x.nrows(),
            Self::File(f) => f.nrows(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            Self::Memory(x) => x.ncols(),
            Self::File(f) => f.ncols(),
        }
    }

    fn load_columns(&self, cols: Range<usize>, out: ArrayViewMut2<'_, f64>) -> Result<()> {
        match self {
            Self::Memory(x) => x.load_columns(cols, out),
            Self::File(f) => f.load_columns(cols, out),
        }
    }
}
