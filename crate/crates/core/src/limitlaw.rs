//! The limit law of the normalized tau-coherence
//! `T = n L^2 - 4 ln p + ln ln p`:
//! `F(y) = exp(-e^{-y/2} / sqrt(8 pi))`, a Gumbel law with location
//! `-ln(8 pi)` and scale `2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LimitLaw;

impl LimitLaw {
    pub const SCALE: f64 = 2.0;

    pub fn location() -> f64 {
        -(8.0 * PI).ln()
    }

    pub fn mean() -> f64 {
        Self::location() + Self::SCALE * EULER_MASCHERONI
    }

    pub fn cdf(&self, y: f64) -> f64 {
        limit_cdf(y)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        limit_pdf(y)
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        limit_quantile(q)
    }
}

fn inv_sqrt_8pi() -> f64 {
    1.0 / (8.0 * PI).sqrt()
}

pub fn limit_cdf(y: f64) -> f64 {
    (-inv_sqrt_8pi() * (-0.5 * y).exp()).exp()
}

/// `f(y) = exp(-y/2 - e^{-y/2} / sqrt(8 pi)) / (2 sqrt(8 pi))`.
pub fn limit_pdf(y: f64) -> f64 {
    let c = inv_sqrt_8pi();
    let e = (-0.5 * y).exp();
    if !e.is_finite() {
        return 0.0;
    }
    0.5 * c * (-0.5 * y - c * e).exp()
}

/// `-2 ln(sqrt(8 pi) ln(1/q))`.
pub fn limit_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid("q", format!("need q in (0, 1), got {q}")));
    }
    Ok(-2.0 * ((8.0 * PI).sqrt() * -q.ln()).ln())
}

/// `T = n l^2 - 4 ln p + ln ln p`.
pub fn normalize_statistic(l: f64, n: usize, p: usize) -> Result<f64> {
    if p < 3 {
        return Err(invalid("p", format!("need p >= 3 so that ln ln p is defined, got {p}")));
    }
    if !(l >= 0.0) {
        return Err(invalid("l", format!("coherence must be non-negative, got {l}")));
    }
    let ln_p = (p as f64).ln();
    Ok(n as f64 * l * l - 4.0 * ln_p + ln_p.ln())
}

/// `a_n(y) = sqrt(4 n ln p - n ln ln p + n y)`.
pub fn threshold_a_n(n: usize, p: usize, y: f64) -> Result<f64> {
    if p < 3 {
        return Err(invalid("p", format!("need p >= 3, got {p}")));
    }
    let (nf, ln_p) = (n as f64, (p as f64).ln());
    let radicand = nf * (4.0 * ln_p - ln_p.ln() + y);
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand { y });
    }
    Ok(radicand.sqrt())
}

/// Leading term of `P(|<X^1, X^j>| > a_n(y))` for independent columns:
/// `e^{-y/2} / (sqrt(2 pi) p^2)`, free of `n`.
pub fn asymptotic_tail_p0(p: usize, y: f64) -> f64 {
    let pf = p as f64;
    (-0.5 * y).exp() / ((2.0 * PI).sqrt() * pf * pf)
}

/// `c_gamma = gamma^2/2 - 2|gamma| + 2`, the supremum of exponents `d` with
/// `P_K = o(p^{-d})`.
pub fn pk_decay_exponent(gamma: f64) -> Result<f64> {
    if !(gamma.abs() < 2.0) {
        return Err(invalid("gamma", format!("need |gamma| < 2, got {gamma}")));
    }
    let g = gamma.abs();
    Ok(0.5 * g * g - 2.0 * g + 2.0)
}
