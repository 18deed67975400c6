//! Sample files: `#`-prefixed JSON header lines, then one value per line.
//!
//! Each header line holds a one-key JSON object; a reader merges them. Values
//! are written with 17 significant digits so they round-trip exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use super::McSampleSet;
use crate::error::{Error, Result};

pub const SAMPLE_FORMAT: &str = "tcoh-samples";
pub const SAMPLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    /// Merged header object; empty for a bare list of values.
    pub header: Map<String, Value>,
    pub samples: Vec<f64>,
}

pub fn write_samples(path: &Path, set: &McSampleSet) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let lines = [
        json!({ "format": SAMPLE_FORMAT }),
        json!({ "format_version": SAMPLE_FORMAT_VERSION }),
        json!({ "crate_version": env!("CARGO_PKG_VERSION") }),
        json!({ "statistic": "T_n = n L^2 - 4 ln p + ln ln p" }),
        json!({ "params": set.params }),
        json!({ "window": set.window }),
        json!({ "master_seed": set.master_seed }),
        json!({ "reps": set.reps }),
        json!({ "block_size": set.block_size }),
        json!({ "indices": set.indices }),
        json!({ "seeds": set.seeds }),
        json!({ "failed": set.failed }),
    ];
    for line in &lines {
        writeln!(out, "# {line}")?;
    }
    for v in &set.samples {
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

/// Read a sample file. Lines starting with `#` are header, blank lines are
/// skipped, and every other line must hold one number.
pub fn read_samples(path: &Path) -> Result<SampleFile> {
    let reader = BufReader::new(File::open(path)?);
    let mut header = Map::new();
    let mut samples = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(rest.trim()) {
                header.extend(obj);
            }
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::Format(format!("{}:{}: not a number: {line:?}", path.display(), lineno + 1))
        })?;
        samples.push(v);
    }
    Ok(SampleFile { header, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::study::WindowDescriptor;

    #[test]
    fn round_trip_is_exact() {
        let set = McSampleSet {
            params: ModelParams::new(10, 8, 1, 1, 0.1).unwrap(),
            window: WindowDescriptor::Redrawn,
            master_seed: 3,
            reps: 3,
            block_size: 4,
            indices: vec![0, 2],
            seeds: vec![11, 13],
            samples: vec![-2.069_812_345_678_901, 1.0 / 3.0],
            timing: vec![0.1, 0.2],
            failed: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_samples(&path, &set).unwrap();
        let back = read_samples(&path).unwrap();
        assert_eq!(back.samples, set.samples);
        assert_eq!(back.header["master_seed"], 3);
        assert_eq!(back.header["params"]["K"], 1);
        assert_eq!(back.header["seeds"], json!([11, 13]));
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "# note\n1.5\n\nabc\n").unwrap();
        assert!(matches!(read_samples(&path), Err(Error::Format(_))));
        std::fs::write(&path, "# note\n1.5\n\n-2\n").unwrap();
        assert_eq!(read_samples(&path).unwrap().samples, vec![1.5, -2.0]);
    }
}
