//! Goodness of fit between a sample of normalized statistics and the limit law.
//!
//! The Kolmogorov distance is computed from the empirical CDF; the `L^2` and
//! total-variation distances compare a Gaussian kernel density estimate with
//! the limit density by trapezoid quadrature.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::limitlaw::{limit_cdf, limit_pdf, limit_quantile, LimitLaw};

pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Tail mass tolerated outside the integration range before a warning.
pub const TAIL_MASS_TOLERANCE: f64 = 1e-4;

/// Kernels further than this many bandwidths away are ignored.
const KERNEL_CUTOFF: f64 = 9.0;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(invalid("samples", "non-finite value in sample"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F_n(x) - F(x)|` against an arbitrary continuous CDF, evaluated
/// exactly at the jumps of the empirical CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    let x = sorted(samples)?;
    let r = x.len() as f64;
    Ok(x.iter().enumerate().fold(0.0f64, |d, (i, &xi)| {
        let f = cdf(xi);
        let above = (i + 1) as f64 / r - f;
        let below = f - i as f64 / r;
        d.max(above.abs()).max(below.abs())
    }))
}

/// Kolmogorov distance to the limit law.
pub fn ecdf_ks(samples: &[f64]) -> Result<f64> {
    ks_distance(samples, limit_cdf)
}

/// Sample quantile with linear interpolation between order statistics
/// (`h = (n - 1) q`).
fn quantile_sorted(x: &[f64], q: f64) -> f64 {
    let h = (x.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(x.len() - 1);
    x[lo] + (h - lo as f64) * (x[hi] - x[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
}

impl SampleSummary {
    pub fn of(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sd = if x.len() > 1 {
            (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            count: x.len(),
            mean,
            sd,
        }
    }
}

/// `0.9 min(sd, IQR / 1.34) R^{-1/5}`, falling back to `sd` when the
/// interquartile range is zero.
pub fn default_bandwidth(samples: &[f64]) -> Result<f64> {
    let x = sorted(samples)?;
    if x.len() < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    bandwidth_sorted(&x)
}

fn bandwidth_sorted(x: &[f64]) -> Result<f64> {
    let sd = SampleSummary::of(x).sd;
    let iqr = quantile_sorted(x, 0.75) - quantile_sorted(x, 0.25);
    let mut spread = sd.min(iqr / 1.34);
    if !(spread > 0.0) {
        spread = sd;
    }
    if !(spread > 0.0) {
        return Err(invalid(
            "bandwidth",
            "sample has zero variance; supply a bandwidth explicitly",
        ));
    }
    Ok(0.9 * spread * (x.len() as f64).powf(-0.2))
}

/// A univariate density with an effective support.
pub trait Density {
    fn pdf(&self, x: f64) -> f64;
    /// Range holding all but a negligible part of the mass.
    fn support(&self) -> (f64, f64);
    /// Mass outside `[lo, hi]`.
    fn mass_outside(&self, lo: f64, hi: f64) -> f64;
}

impl Density for LimitLaw {
    fn pdf(&self, x: f64) -> f64 {
        limit_pdf(x)
    }

    fn support(&self) -> (f64, f64) {
        (
            limit_quantile(1e-5).expect("valid level"),
            limit_quantile(1.0 - 1e-5).expect("valid level"),
        )
    }

    fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        limit_cdf(lo) + (1.0 - limit_cdf(hi))
    }
}

/// Gaussian kernel density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    samples: Vec<f64>,
    bandwidth: f64,
}

impl Kde {
    pub fn new(samples: &[f64], bandwidth: Option<f64>) -> Result<Self> {
        let x = sorted(samples)?;
        let bandwidth = match bandwidth {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(h) => return Err(invalid("bandwidth", format!("need h > 0, got {h}"))),
            None => {
                if x.len() < 2 {
                    return Err(invalid("samples", "need at least two samples"));
                }
                bandwidth_sorted(&x)?
            }
        };
        Ok(Self {
            samples: x,
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Density on `points` equally spaced nodes over `[min - 3h, max + 3h]`.
    pub fn grid(&self, points: usize) -> DensityGrid {
        let (lo, hi) = self.support();
        DensityGrid::tabulate(lo, hi, points.max(2), |x| self.pdf(x))
    }
}

impl Density for Kde {
    fn pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let reach = KERNEL_CUTOFF * h;
        let start = self.samples.partition_point(|&s| s < x - reach);
        let end = self.samples.partition_point(|&s| s <= x + reach);
        let norm = 1.0 / (self.samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        self.samples[start..end]
            .iter()
            .map(|&s| {
                let z = (x - s) / h;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
            * norm
    }

    fn support(&self) -> (f64, f64) {
        let h = self.bandwidth;
        (
            self.samples[0] - 3.0 * h,
            self.samples[self.samples.len() - 1] + 3.0 * h,
        )
    }

    fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        let h = self.bandwidth;
        self.samples
            .iter()
            .map(|&s| std_normal_cdf((lo - s) / h) + std_normal_cdf((s - hi) / h))
            .sum::<f64>()
            / self.samples.len() as f64
    }
}

/// Density values on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn tabulate<F: Fn(f64) -> f64>(lo: f64, hi: f64, points: usize, f: F) -> Self {
        let step = (hi - lo) / (points - 1) as f64;
        let values = (0..points).map(|i| f(lo + i as f64 * step)).collect();
        Self { lo, hi, values }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        let step = self.step();
        (0..self.values.len()).map(move |i| self.lo + i as f64 * step)
    }

    /// Trapezoid rule.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.step())
    }
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    step * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityDistances {
    pub d_l2: f64,
    pub d_tv: f64,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Larger of the two densities' mass outside `[lo, hi]`.
    pub excluded_mass: f64,
    pub warning: Option<String>,
}

/// `int |f - g|^2` and `1/2 int |f - g|` over the union of both supports,
/// sampled at least as finely as `points` nodes across the narrower support.
/// Symmetric in its two arguments.
pub fn density_distances<E, R>(estimate: &E, reference: &R, points: usize) -> DensityDistances
where
    E: Density + ?Sized,
    R: Density + ?Sized,
{
    let points = points.max(2);
    let (elo, ehi) = estimate.support();
    let (rlo, rhi) = reference.support();
    let (lo, hi) = (elo.min(rlo), ehi.max(rhi));
    let step = (ehi - elo).min(rhi - rlo) / (points - 1) as f64;
    let nodes = if step > 0.0 {
        (((hi - lo) / step).ceil() as usize + 1).max(points)
    } else {
        points
    };
    let grid_step = (hi - lo) / (nodes - 1) as f64;
    let diff: Vec<f64> = (0..nodes)
        .map(|i| {
            let x = lo + i as f64 * grid_step;
            estimate.pdf(x) - reference.pdf(x)
        })
        .collect();
    let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
    let ab: Vec<f64> = diff.iter().map(|d| d.abs()).collect();
    let excluded_mass = estimate
        .mass_outside(lo, hi)
        .max(reference.mass_outside(lo, hi));
    let warning = (excluded_mass > TAIL_MASS_TOLERANCE).then(|| {
        let msg = format!(
            "integration range [{lo:.4}, {hi:.4}] excludes mass {excluded_mass:.3e} (> {TAIL_MASS_TOLERANCE:e})"
        );
        log::warn!("{msg}");
        msg
    });
    DensityDistances {
        d_l2: trapezoid(&sq, grid_step),
        d_tv: (0.5 * trapezoid(&ab, grid_step)).min(1.0),
        lo,
        hi,
        points: nodes,
        excluded_mass,
        warning,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub d_ks: f64,
    pub d_l2: f64,
    pub d_tv: f64,
    pub bandwidth: f64,
    pub grid: GridSpec,
    pub sample: SampleSummary,
    pub excluded_mass: f64,
    pub warning: Option<String>,
    /// KDE on `grid`.
    pub kde: Vec<f64>,
}

/// Full comparison of a sample with the limit law.
pub fn gof_report(samples: &[f64], bandwidth: Option<f64>, grid_points: usize) -> Result<GofReport> {
    if samples.len() < 2 && bandwidth.is_none() {
        return Err(invalid("samples", "need at least two samples for a KDE"));
    }
    let d_ks = ecdf_ks(samples)?;
    let kde = Kde::new(samples, bandwidth)?;
    let grid = kde.grid(grid_points);
    let dist = density_distances(&kde, &LimitLaw, grid_points);
    Ok(GofReport {
        d_ks,
        d_l2: dist.d_l2,
        d_tv: dist.d_tv,
        bandwidth: kde.bandwidth(),
        grid: GridSpec {
            lo: grid.lo,
            hi: grid.hi,
            points: grid.values.len(),
        },
        sample: SampleSummary::of(samples),
        excluded_mass: dist.excluded_mass,
        warning: dist.warning,
        kde: grid.values,
    })
}
