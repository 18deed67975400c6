//! Monte-Carlo studies of the normalized tau-coherence.
//!
//! Each replication streams an observation matrix from the moving-average
//! scheme, reduces it blockwise to `L_{n,tau}` and records
//! `T_n = n L^2 - 4 ln p + ln ln p`. Every seed is derived from the master seed
//! with [`derive_seed`], so a study is reproducible whatever the thread count,
//! and growing `reps` leaves earlier samples untouched.

mod csv;
mod tail;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use csv::{read_samples, write_samples, SampleFile};
pub use tail::{estimate_tail_probability, TailEstimate};

use crate::coherence::{default_block_size, BlockwiseScan, ColumnSource, Mode};
use crate::error::{invalid, Error, Result};
use crate::limitlaw::normalize_statistic;
use crate::model::{derive_schedule, ModelParams};
use crate::sampler::{build_window, derive_seed, CoefficientSource, CoefficientWindow, MaSource};

pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

/// Index under which the window seed is derived from a study or replication seed.
const WINDOW_INDEX: u64 = u64::MAX;

/// Seed of the study at sample size `n`.
pub fn study_seed(master_seed: u64, n: usize) -> u64 {
    derive_seed(master_seed, n as u64)
}

/// Seed of replication `r` at sample size `n`.
pub fn replication_seed(master_seed: u64, n: usize, r: usize) -> u64 {
    derive_seed(study_seed(master_seed, n), r as u64)
}

/// Seed of the coefficient window: one per study, or one per replication when
/// the window is redrawn.
pub fn window_seed(master_seed: u64, n: usize, replication: Option<usize>) -> u64 {
    match replication {
        None => derive_seed(study_seed(master_seed, n), WINDOW_INDEX),
        Some(r) => derive_seed(replication_seed(master_seed, n, r), WINDOW_INDEX),
    }
}

/// Block size used for a replication: explicit, or the largest that fits the budget.
pub fn resolve_block_size(params: &ModelParams, block_size: Option<usize>, budget: u64) -> usize {
    block_size.unwrap_or_else(|| default_block_size(params.n, params.p, budget))
}

/// `T_n` of whatever matrix `source` streams.
pub fn normalized_coherence<S: ColumnSource + ?Sized>(
    source: &S,
    tau: usize,
    block_size: usize,
) -> Result<f64> {
    let scan = BlockwiseScan::new(tau, block_size)
        .mode(Mode::Centered)
        .run(source)?;
    normalize_statistic(scan.value, source.nrows(), source.ncols())
}

/// One replication: `T_n` of the moving-average matrix generated from `seed`.
pub fn run_replication(
    params: &ModelParams,
    window: &CoefficientWindow,
    seed: u64,
    block_size: usize,
) -> Result<f64> {
    params.validate()?;
    let source = MaSource::new(*params, window.clone(), seed)?;
    normalized_coherence(&source, params.tau, block_size)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WindowDescriptor {
    /// One window shared by every replication.
    Fixed { seed: u64, window: CoefficientWindow },
    /// A fresh window per replication, seeded by [`window_seed`].
    Redrawn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedReplication {
    pub index: usize,
    pub seed: u64,
    pub error: String,
}

/// The outcome of a study at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSampleSet {
    pub params: ModelParams,
    pub window: WindowDescriptor,
    pub master_seed: u64,
    pub reps: usize,
    pub block_size: usize,
    /// Indices of the replications in `samples`, in order.
    pub indices: Vec<usize>,
    pub seeds: Vec<u64>,
    pub samples: Vec<f64>,
    /// Wall-clock seconds per successful replication.
    pub timing: Vec<f64>,
    pub failed: Vec<FailedReplication>,
}

impl McSampleSet {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
    /// Explicit packet width; otherwise derived from `memory_budget`.
    pub block_size: Option<usize>,
    /// Bytes allowed per replication.
    pub memory_budget: u64,
    pub redraw_window: bool,
    /// Directory receiving `samples_n<n>.csv` and `samples_n<n>.run.json`.
    pub out_dir: Option<PathBuf>,
}

impl StudyConfig {
    pub fn new(n_list: Vec<usize>, reps: usize, master_seed: u64) -> Self {
        Self {
            n_list,
            reps,
            master_seed,
            threads: None,
            block_size: None,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            redraw_window: false,
            out_dir: None,
        }
    }
}

pub fn samples_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("samples_n{n}.csv"))
}

/// Timing and thread count live beside the samples, not in them, so the CSV
/// is identical across machines and thread counts.
pub fn run_info_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("samples_n{n}.run.json"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunInfo {
    pub n: usize,
    pub threads: Option<usize>,
    pub total_seconds: f64,
    pub timing: Vec<f64>,
    pub failed: Vec<FailedReplication>,
}

/// Run `reps` replications at every `n`, writing one CSV per `n` if asked.
pub fn run_study(config: &StudyConfig) -> Result<Vec<McSampleSet>> {
    if config.reps < 1 {
        return Err(invalid("reps", "need at least one replication"));
    }
    if config.n_list.is_empty() {
        return Err(invalid("n", "no sample sizes given"));
    }
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let pool = match config.threads {
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| invalid("threads", e.to_string()))?,
        ),
        None => None,
    };
    let mut sets = Vec::with_capacity(config.n_list.len());
    for &n in &config.n_list {
        let started = Instant::now();
        let set = match &pool {
            Some(pool) => pool.install(|| study_at(config, n))?,
            None => study_at(config, n)?,
        };
        log::info!(
            "n = {n}: {} samples, {} failed, {:.1} s",
            set.samples.len(),
            set.failed.len(),
            started.elapsed().as_secs_f64()
        );
        if let Some(dir) = &config.out_dir {
            write_samples(&samples_path(dir, n), &set)?;
            let info = RunInfo {
                n,
                threads: config.threads,
                total_seconds: started.elapsed().as_secs_f64(),
                timing: set.timing.clone(),
                failed: set.failed.clone(),
            };
            let f = std::fs::File::create(run_info_path(dir, n))?;
            serde_json::to_writer_pretty(std::io::BufWriter::new(f), &info)?;
        }
        sets.push(set);
    }
    Ok(sets)
}

fn study_at(config: &StudyConfig, n: usize) -> Result<McSampleSet> {
    let params = derive_schedule(n)?;
    let block_size = resolve_block_size(&params, config.block_size, config.memory_budget);
    let draw = |seed| {
        build_window(params.tau, params.k, params.eps, CoefficientSource::Seed(seed))
    };
    let (descriptor, shared) = if config.redraw_window {
        (WindowDescriptor::Redrawn, None)
    } else {
        let seed = window_seed(config.master_seed, n, None);
        let window = draw(seed)?;
        (
            WindowDescriptor::Fixed {
                seed,
                window: window.clone(),
            },
            Some(window),
        )
    };
    let outcomes: Vec<(usize, u64, Result<f64>, f64)> = (0..config.reps)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(config.master_seed, n, r);
            let started = Instant::now();
            let value = match &shared {
                Some(w) => run_replication(&params, w, seed, block_size),
                None => draw(window_seed(config.master_seed, n, Some(r)))
                    .and_then(|w| run_replication(&params, &w, seed, block_size)),
            };
            (r, seed, value, started.elapsed().as_secs_f64())
        })
        .collect();

    let mut set = McSampleSet {
        params,
        window: descriptor,
        master_seed: config.master_seed,
        reps: config.reps,
        block_size,
        indices: Vec::new(),
        seeds: Vec::new(),
        samples: Vec::new(),
        timing: Vec::new(),
        failed: Vec::new(),
    };
    for (index, seed, value, secs) in outcomes {
        match value {
            Ok(t) => {
                set.indices.push(index);
                set.seeds.push(seed);
                set.samples.push(t);
                set.timing.push(secs);
            }
            Err(e) => {
                let e = Error::Replication {
                    index,
                    seed,
                    source: Box::new(e),
                };
                log::warn!("{e}");
                set.failed.push(FailedReplication {
                    index,
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }
    if set.samples.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn small() -> (ModelParams, CoefficientWindow) {
        let params = ModelParams::new(60, 40, 2, 1, 0.1).unwrap();
        let window = build_window(2, 1, 0.1, CoefficientSource::Seed(5)).unwrap();
        (params, window)
    }

    #[test]
    fn replication_is_deterministic() {
        let (params, window) = small();
        let a = run_replication(&params, &window, 99, 7).unwrap();
        let b = run_replication(&params, &window, 99, 7).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, run_replication(&params, &window, 100, 7).unwrap());
    }

    #[test]
    fn planted_duplicate_column_forces_l_one() {
        let (n, p) = (50, 12);
        let mut x = Array2::from_shape_fn((n, p), |(i, j)| ((i * 7 + j * 13) as f64 * 0.71).sin());
        let dup = x.column(1).to_owned();
        x.column_mut(9).assign(&dup);
        let t = normalized_coherence(&x, 3, 5).unwrap();
        let ln_p = (p as f64).ln();
        assert!((t - (n as f64 - 4.0 * ln_p + ln_p.ln())).abs() < 1e-9);
    }

    #[test]
    fn seeds_are_distinct_per_index_and_n() {
        assert_ne!(replication_seed(1, 500, 0), replication_seed(1, 500, 1));
        assert_ne!(replication_seed(1, 500, 0), replication_seed(1, 1000, 0));
        assert_ne!(window_seed(1, 500, None), window_seed(1, 500, Some(0)));
    }

    #[test]
    fn rejects_zero_reps() {
        assert!(run_study(&StudyConfig::new(vec![200], 0, 1)).is_err());
    }
}
