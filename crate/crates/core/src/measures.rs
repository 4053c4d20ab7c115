//! Relative entropy, total variation and `L^p(pi)` norms.
//!
//! All entropies are in nats. `0 log 0 = 0`, and a divergence that is not
//! absolutely continuous is reported as [`DivergenceValue::Infinite`].

use serde::{Serialize, Serializer};

use crate::error::{check_len, Error, Result};
use crate::kernel::Distribution;

/// Relative entropy `H(mu | pi)` in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum DivergenceValue {
    Finite(f64),
    /// `mu` charges a state that `pi` does not.
    Infinite,
}

impl DivergenceValue {
    /// The value as a float, `+inf` for the infinite branch.
    pub fn nats(self) -> f64 {
        match self {
            DivergenceValue::Finite(v) => v,
            DivergenceValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, DivergenceValue::Finite(_))
    }
}

impl Serialize for DivergenceValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DivergenceValue::Finite(v) => s.serialize_f64(*v),
            DivergenceValue::Infinite => s.serialize_str("inf"),
        }
    }
}

/// `H(mu | pi) = sum mu log(mu / pi)`.
pub fn kl_divergence(mu: &Distribution, pi: &Distribution) -> Result<DivergenceValue> {
    check_len(pi.len(), mu.len())?;
    let v = kl_raw(mu.as_slice(), pi.as_slice());
    Ok(if v.is_finite() {
        DivergenceValue::Finite(v)
    } else {
        DivergenceValue::Infinite
    })
}

/// Unchecked relative entropy of two probability vectors.
///
/// Summed as `pi (r log r - r + 1)` with `r = mu / pi`: every term is
/// nonnegative and the sum equals the usual formula when both vectors have
/// unit mass, but it keeps full relative accuracy as `mu -> pi`.
pub(crate) fn kl_raw(mu: &[f64], pi: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&m, &p) in mu.iter().zip(pi) {
        if p <= 0.0 {
            if m > 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        acc += p * entropy_kernel(m / p);
    }
    acc
}

/// Relative entropy of a density: `sum pi f log f`, computed in the same
/// cancellation-free form as [`kl_raw`].
pub(crate) fn density_entropy(f: &[f64], pi: &[f64]) -> f64 {
    f.iter().zip(pi).map(|(&v, &p)| p * entropy_kernel(v)).sum()
}

/// `r log r - r + 1 >= 0`.
pub(crate) fn entropy_kernel(r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let d = r - 1.0;
    if d.abs() < 0.5 {
        r * d.ln_1p() - d
    } else {
        r * r.ln() - d
    }
}

/// `(sum pi |f|^p)^(1/p)`; `p = +inf` gives the max over the support of `pi`.
pub fn lp_norm(f: &[f64], pi: &Distribution, p: f64) -> Result<f64> {
    check_len(pi.len(), f.len())?;
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadParameter(format!("norm exponent p = {p} < 1")));
    }
    Ok(lp_raw(f, pi.as_slice(), p))
}

pub(crate) fn lp_raw(f: &[f64], pi: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return f
            .iter()
            .zip(pi)
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max);
    }
    // Factor out the sup norm so that large exponents do not overflow.
    let scale = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = f
        .iter()
        .zip(pi)
        .map(|(v, w)| w * (v.abs() / scale).powf(p))
        .sum();
    scale * sum.powf(1.0 / p)
}

/// `(1/2) sum |mu - nu|`.
pub fn tv_distance(mu: &Distribution, nu: &Distribution) -> Result<f64> {
    check_len(mu.len(), nu.len())?;
    Ok(tv_raw(mu.as_slice(), nu.as_slice()))
}

pub(crate) fn tv_raw(mu: &[f64], nu: &[f64]) -> f64 {
    0.5 * mu.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Pinsker: `d_TV <= sqrt(H / 2)`, clamped at 1.
pub fn pinsker_tv_bound(h: DivergenceValue) -> f64 {
    match h {
        DivergenceValue::Finite(v) => (v.max(0.0) / 2.0).sqrt().min(1.0),
        DivergenceValue::Infinite => 1.0,
    }
}
