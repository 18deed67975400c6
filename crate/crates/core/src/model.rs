//! Model parameters, the simulation schedule and the rate constants that gate
//! the limit theorem's hypotheses.
//!
//! All logarithms are natural. Integer parts are taken exactly where the
//! schedule uses them (`p`, `tau`, `K`); `eps_n` stays real.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::indexsets;

/// The banded model at a given sample size: `n` rows, `p` columns, central
/// bandwidth `tau`, transition bandwidth `k` and transition correlation `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub p: usize,
    pub tau: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "eps_n")]
    pub eps: f64,
}

impl ModelParams {
    pub fn new(n: usize, p: usize, tau: usize, k: usize, eps: f64) -> Result<Self> {
        let params = Self { n, p, tau, k, eps };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("n", format!("need n >= 2, got {}", self.n)));
        }
        if self.p < 2 {
            return Err(invalid("p", format!("need p >= 2, got {}", self.p)));
        }
        if self.tau < 1 {
            return Err(invalid("tau", "need tau >= 1"));
        }
        if !(self.eps.abs() < 1.0) {
            return Err(invalid("eps_n", format!("need |eps_n| < 1, got {}", self.eps)));
        }
        if self.tau + self.k >= self.p {
            return Err(invalid(
                "tau",
                format!(
                    "tau + K = {} must be < p = {} (no off-band pairs otherwise)",
                    self.tau + self.k,
                    self.p
                ),
            ));
        }
        Ok(())
    }

    /// Number of columns of the latent matrix used by the moving-average scheme.
    pub fn latent_columns(&self) -> usize {
        self.p + 2 * self.tau + 2 * self.k
    }
}

/// Rates appearing in the hypotheses: `gamma` scales `eps_n`, `delta` caps
/// model correlations, `nu` bounds the growth of `K`, `t` the growth of `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub gamma: f64,
    pub delta: f64,
    pub nu: f64,
    pub t: f64,
}

impl RateParams {
    pub fn new(gamma: f64, delta: f64, nu: f64, t: f64) -> Result<Self> {
        check_delta(delta)?;
        if !(nu > 0.0) {
            return Err(invalid("nu", format!("need nu > 0, got {nu}")));
        }
        if !(t > 0.0) {
            return Err(invalid("t", format!("need t > 0, got {t}")));
        }
        if !gamma.is_finite() {
            return Err(invalid("gamma", "must be finite"));
        }
        Ok(Self { gamma, delta, nu, t })
    }
}

/// Default exponent used for the `tau = o(p^t)` trend check.
pub const DEFAULT_T: f64 = 0.1;

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(invalid("delta", format!("need delta in (0, 1), got {delta}")))
    }
}

/// The simulation schedule: `p = [exp(n^{1/3.5})]`, `tau = 5 [ln p]`,
/// `K = 10 [n^{1/10} ln p]`, `eps_n = 0.1 sqrt(ln p / n)`.
///
/// Below `n = 200` the schedule yields `tau + K >= p`; that is reported as
/// [`Error::DegenerateSchedule`] since no off-band pair exists.
pub fn derive_schedule(n: usize) -> Result<ModelParams> {
    let (p, tau, k, eps) = schedule_values(n)?;
    if tau + k >= p {
        return Err(Error::DegenerateSchedule { n, p, band: tau + k });
    }
    ModelParams::new(n, p, tau, k, eps)
}

/// Raw schedule values `(p, tau, K, eps_n)` without the band check.
pub fn schedule_values(n: usize) -> Result<(usize, usize, usize, f64)> {
    if n < 2 {
        return Err(invalid("n", format!("need n >= 2, got {n}")));
    }
    let nf = n as f64;
    let p_real = nf.powf(1.0 / 3.5).exp().floor();
    if p_real > (1u64 << 52) as f64 {
        return Err(invalid("n", format!("p = exp(n^(1/3.5)) overflows at n = {n}")));
    }
    let p = p_real as usize;
    let ln_p = (p as f64).ln();
    let tau = 5 * ln_p.floor() as usize;
    let k = 10 * (nf.powf(0.1) * ln_p).floor() as usize;
    let eps = 0.1 * (ln_p / nf).sqrt();
    Ok((p, tau, k, eps))
}

/// `c_gamma = gamma^2/2 - 2|gamma| + 2` and
/// `c(gamma, delta) = min((gamma^2/2 - 2|gamma| + 1)/3, delta^2 (2 - delta)^2 / 36)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub c_gamma: f64,
    pub c_gamma_delta: f64,
}

pub fn rate_constants(gamma: f64, delta: f64) -> Result<RateConstants> {
    check_delta(delta)?;
    let g = gamma.abs();
    let c_gamma = 0.5 * g * g - 2.0 * g + 2.0;
    let gamma_branch = (0.5 * g * g - 2.0 * g + 1.0) / 3.0;
    let d = delta * (2.0 - delta);
    let delta_branch = d * d / 36.0;
    Ok(RateConstants {
        c_gamma,
        c_gamma_delta: gamma_branch.min(delta_branch),
    })
}

/// Upper end of the admissible `gamma` interval, `2 - sqrt(2)`.
pub fn gamma_bound() -> f64 {
    2.0 - std::f64::consts::SQRT_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisStatus {
    Pass,
    Fail,
    AsymptoticTrend,
    NotEvaluated,
}

/// One row of a trend table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub n: usize,
    pub p: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisEntry {
    pub name: String,
    pub status: HypothesisStatus,
    /// What the tabulated ratio is.
    pub diagnostic: String,
    pub trend: Vec<TrendPoint>,
    /// Whether the tabulated ratio is strictly decreasing over the grid.
    pub decreasing: Option<bool>,
    pub note: String,
}

impl HypothesisEntry {
    /// Pass means: hard checks passed and, for trend entries, the ratio decreases.
    pub fn passes(&self) -> bool {
        match self.status {
            HypothesisStatus::Pass => true,
            HypothesisStatus::AsymptoticTrend => self.decreasing.unwrap_or(false),
            HypothesisStatus::Fail | HypothesisStatus::NotEvaluated => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub rates: RateParams,
    pub constants: RateConstants,
    pub entries: Vec<HypothesisEntry>,
}

impl HypothesisReport {
    pub fn entry(&self, name: &str) -> Option<&HypothesisEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// No hard failure anywhere.
    pub fn hard_pass(&self) -> bool {
        self.entries.iter().all(|e| e.status != HypothesisStatus::Fail)
    }

    /// Every evaluated entry passes, trends included.
    pub fn all_pass(&self) -> bool {
        self.entries
            .iter()
            .filter(|e| e.status != HypothesisStatus::NotEvaluated)
            .all(HypothesisEntry::passes)
    }
}

/// Model correlation accessor used for the `|Gamma_{p,delta}| = o(p)` check;
/// called with the schedule's parameters and a column pair.
pub type CorrelationAccessor<'a> = &'a (dyn Fn(&ModelParams, usize, usize) -> f64 + Sync);

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Evaluate the five hypotheses on an increasing grid of sample sizes.
///
/// Hyp 4 (`gamma` interval) and the `nu < c(gamma, delta)` part of Hyp 5 are
/// hard checks. Hyp 1, 2 and 5 tabulate `ln p / n^{1/3}`, `tau / p^t` and
/// `K / p^nu` and record whether they decrease. Hyp 3 needs a correlation
/// accessor and is otherwise left not evaluated.
pub fn check_hypotheses<S>(
    schedule: S,
    rates: RateParams,
    n_grid: &[usize],
    correlation: Option<CorrelationAccessor<'_>>,
) -> Result<HypothesisReport>
where
    S: Fn(usize) -> Result<ModelParams>,
{
    if n_grid.is_empty() {
        return Err(invalid("n_grid", "empty grid"));
    }
    if n_grid.len() < 3 {
        return Err(invalid("n_grid", "need at least 3 grid points"));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_grid", "grid must be strictly increasing"));
    }
    if !(rates.gamma.abs() < 2.0) {
        return Err(invalid("gamma", format!("need gamma in (-2, 2), got {}", rates.gamma)));
    }
    let constants = rate_constants(rates.gamma, rates.delta)?;
    let params: Vec<ModelParams> = n_grid.iter().map(|&n| schedule(n)).collect::<Result<_>>()?;

    let table = |f: &dyn Fn(&ModelParams) -> f64| -> Vec<TrendPoint> {
        params
            .iter()
            .map(|m| TrendPoint {
                n: m.n,
                p: m.p,
                ratio: f(m),
            })
            .collect()
    };
    let trend_entry = |name: &str, diagnostic: &str, trend: Vec<TrendPoint>, note: String| {
        let ratios: Vec<f64> = trend.iter().map(|t| t.ratio).collect();
        HypothesisEntry {
            name: name.to_string(),
            status: HypothesisStatus::AsymptoticTrend,
            diagnostic: diagnostic.to_string(),
            decreasing: Some(strictly_decreasing(&ratios)),
            trend,
            note,
        }
    };

    let mut entries = Vec::with_capacity(5);

    entries.push(trend_entry(
        "Hyp 1",
        "ln p / n^(1/3)",
        table(&|m| (m.p as f64).ln() / (m.n as f64).cbrt()),
        "ln p = o(n^(1/3))".to_string(),
    ));

    entries.push(trend_entry(
        "Hyp 2",
        "tau / p^t",
        table(&|m| m.tau as f64 / (m.p as f64).powf(rates.t)),
        format!("tau = o(p^t), checked at t = {}", rates.t),
    ));

    entries.push(match correlation {
        None => HypothesisEntry {
            name: "Hyp 3".to_string(),
            status: HypothesisStatus::NotEvaluated,
            diagnostic: "|Gamma_{p,delta}| / p".to_string(),
            trend: Vec::new(),
            decreasing: None,
            note: "no correlation accessor supplied".to_string(),
        },
        Some(corr) => {
            let mut trend = Vec::with_capacity(params.len());
            for m in &params {
                let set = indexsets::gamma_set(|k, j| corr(m, k, j), m.p, rates.delta)?;
                trend.push(TrendPoint {
                    n: m.n,
                    p: m.p,
                    ratio: set.len() as f64 / m.p as f64,
                });
            }
            let ratios: Vec<f64> = trend.iter().map(|t| t.ratio).collect();
            let all_zero = ratios.iter().all(|&r| r == 0.0);
            HypothesisEntry {
                name: "Hyp 3".to_string(),
                status: HypothesisStatus::AsymptoticTrend,
                diagnostic: "|Gamma_{p,delta}| / p".to_string(),
                decreasing: Some(all_zero || strictly_decreasing(&ratios)),
                trend,
                note: format!("|Gamma_(p,delta)| = o(p) at delta = {}", rates.delta),
            }
        }
    });

    let bound = gamma_bound();
    let gamma_ok = rates.gamma.abs() < bound;
    entries.push(HypothesisEntry {
        name: "Hyp 4".to_string(),
        status: if gamma_ok {
            HypothesisStatus::Pass
        } else {
            HypothesisStatus::Fail
        },
        diagnostic: "eps_n / sqrt(ln p / n) (implied gamma)".to_string(),
        trend: table(&|m| m.eps / ((m.p as f64).ln() / m.n as f64).sqrt()),
        decreasing: None,
        note: format!(
            "gamma = {} {} (-{bound:.6}, {bound:.6})",
            rates.gamma,
            if gamma_ok { "in" } else { "outside" }
        ),
    });

    let nu_ok = rates.nu > 0.0 && rates.nu < constants.c_gamma_delta;
    let mut hyp5 = trend_entry(
        "Hyp 5",
        "K / p^nu",
        table(&|m| m.k as f64 / (m.p as f64).powf(rates.nu)),
        format!(
            "nu = {} {} (0, c(gamma, delta) = {:.6})",
            rates.nu,
            if nu_ok { "in" } else { "outside" },
            constants.c_gamma_delta
        ),
    );
    if !nu_ok {
        hyp5.status = HypothesisStatus::Fail;
    }
    entries.push(hyp5);

    Ok(HypothesisReport {
        rates,
        constants,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn schedule_at_4000_matches_published_dimension() {
        let m = derive_schedule(4000).unwrap();
        assert_eq!(m.p, 44112);
        assert_eq!(m.tau, 50);
    }

    #[test]
    fn schedule_eps_at_2000() {
        let m = derive_schedule(2000).unwrap();
        assert_eq!(m.p, 6457);
        // 0.1 * sqrt(ln 6457 / 2000)
        assert_relative_eq!(m.eps, 0.1 * (6457f64.ln() / 2000.0).sqrt(), max_relative = 1e-15);
        assert!((m.eps - 0.0066).abs() < 5e-5);
        assert_eq!((m.eps * 1000.0).round() / 1000.0, 0.007);
    }

    #[test]
    fn schedule_rejects_small_n() {
        assert!(derive_schedule(1).is_err());
        assert!(matches!(
            derive_schedule(100),
            Err(Error::DegenerateSchedule { .. })
        ));
        assert!(derive_schedule(200).is_ok());
    }

    #[test]
    fn rate_constant_examples() {
        assert_eq!(rate_constants(0.0, 0.5).unwrap().c_gamma, 2.0);
        let c = rate_constants(0.1, 0.5).unwrap();
        assert_relative_eq!(c.c_gamma_delta, 0.015625, max_relative = 1e-14);
        let c = rate_constants(0.1, 0.9).unwrap();
        assert_relative_eq!(c.c_gamma_delta, 0.81 * 1.21 / 36.0, max_relative = 1e-14);
        assert!((c.c_gamma_delta - 0.0272).abs() < 1e-4);
        assert!(rate_constants(0.1, 1.0).is_err());
        assert!(rate_constants(0.1, 0.0).is_err());
    }

    #[test]
    fn gamma_branch_vanishes_at_interval_edge() {
        // gamma^2/2 - 2 gamma + 1 vanishes at 2 - sqrt 2, so c(gamma, delta)'s
        // gamma branch does too; c_gamma itself is 1 there.
        let g = gamma_bound();
        assert!((0.5 * g * g - 2.0 * g + 1.0).abs() < 1e-15);
        let c = rate_constants(g, 0.5).unwrap();
        assert!(c.c_gamma_delta.abs() < 1e-15);
        assert!((c.c_gamma - 1.0).abs() < 1e-15);
    }

    fn rates(gamma: f64, nu: f64) -> RateParams {
        RateParams::new(gamma, 0.5, nu, DEFAULT_T).unwrap()
    }

    #[test]
    fn gamma_outside_interval_is_hard_fail() {
        let r = check_hypotheses(derive_schedule, rates(0.7, 0.01), &[500, 1000, 2000], None)
            .unwrap();
        assert_eq!(r.entry("Hyp 4").unwrap().status, HypothesisStatus::Fail);
        assert!(!r.hard_pass());
    }

    #[test]
    fn nu_at_c_is_hard_fail() {
        let c = rate_constants(0.5, 0.5).unwrap().c_gamma_delta;
        let r = check_hypotheses(derive_schedule, rates(0.5, c), &[500, 1000, 2000], None).unwrap();
        assert_eq!(r.entry("Hyp 5").unwrap().status, HypothesisStatus::Fail);
    }

    #[test]
    fn grid_validation() {
        let r = rates(0.5, 0.01);
        assert!(check_hypotheses(derive_schedule, r, &[], None).is_err());
        assert!(check_hypotheses(derive_schedule, r, &[500, 1000], None).is_err());
        assert!(check_hypotheses(derive_schedule, r, &[500, 500, 1000], None).is_err());
        let bad = RateParams { gamma: 2.5, ..r };
        assert!(check_hypotheses(derive_schedule, bad, &[500, 1000, 2000], None).is_err());
    }

    #[test]
    fn report_has_five_entries() {
        let r = check_hypotheses(derive_schedule, rates(0.5, 0.01), &[500, 1000, 2000], None)
            .unwrap();
        assert_eq!(r.entries.len(), 5);
        assert_eq!(r.entry("Hyp 3").unwrap().status, HypothesisStatus::NotEvaluated);
    }
}
