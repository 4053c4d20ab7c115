//! Worst-case total-variation mixing times of continuous-time chains and
//! the entropy-based upper bounds on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::tv_raw;
use crate::semigroup::{transition_at, Generator};

/// Absolute precision of the bisection on `t`.
pub const BISECTION_TOL: f64 = 1e-8;

/// `d(t) = max_x d_TV(delta_x P_t, pi)`; the maximum over all initial laws
/// is attained at a point mass since `mu -> d_TV(mu P_t, pi)` is convex.
pub fn worst_case_tv(l: &Generator, t: f64) -> Result<f64> {
    let p = transition_at(l, t)?;
    let pi = l.pi().as_slice();
    let rows = p.rows();
    Ok(rows.iter().map(|row| tv_raw(row, pi)).fold(0.0, f64::max))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadParameter(format!("eps = {eps} is outside (0, 1)")));
    }
    Ok(())
}

/// Smallest `t` with `d(t) <= eps`, to within [`BISECTION_TOL`].
pub fn t_mix_exact(l: &Generator, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let mut seen: Vec<(f64, f64)> = Vec::new();
    let eval = |t: f64, seen: &mut Vec<(f64, f64)>| -> Result<f64> {
        let d = worst_case_tv(l, t)?;
        seen.push((t, d));
        Ok(d)
    };
    if eval(0.0, &mut seen)? <= eps {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while eval(hi, &mut seen)? > eps {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::InvalidGenerator("chain does not mix".into()));
        }
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if eval(mid, &mut seen)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    seen.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = seen.windows(2).find(|w| w[1].1 > w[0].1 + 1e-12) {
        return Err(Error::InvalidGenerator(format!(
            "distance to stationarity rose from {} at t = {} to {} at t = {}",
            w[0].1, w[0].0, w[1].1, w[1].0
        )));
    }
    Ok(hi)
}

fn check_bound_args(eps: f64, beta: f64, pi_star: f64) -> Result<()> {
    check_eps(eps)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::BadParameter(format!("beta = {beta}")));
    }
    if !(pi_star > 0.0 && pi_star < 1.0) {
        return Err(Error::BadParameter(format!("pi_star = {pi_star}")));
    }
    Ok(())
}

/// True when `log log(1/pi_*) <= 0`, i.e. `pi_* >= 1/e`, in which case the
/// bounds use 0 for that term.
pub fn loglog_clamped(pi_star: f64) -> bool {
    (1.0 / pi_star).ln().ln() <= 0.0
}

fn bound_core(eps: f64, pi_star: f64) -> f64 {
    let loglog = (1.0 / pi_star).ln().ln().max(0.0);
    loglog + (1.0 / (eps * eps)).ln()
}

/// `(1/(4 beta)) (log log(1/pi_*) + log(1/eps^2))`, floored at 0.
pub fn bound_static(eps: f64, beta: f64, pi_star: f64) -> Result<f64> {
    check_bound_args(eps, beta, pi_star)?;
    Ok((bound_core(eps, pi_star) / (4.0 * beta)).max(0.0))
}

/// Same expression with prefactor `1/(2 beta)`: exactly twice
/// [`bound_static`].
pub fn bound_dynamic(eps: f64, beta: f64, pi_star: f64) -> Result<f64> {
    check_bound_args(eps, beta, pi_star)?;
    Ok((bound_core(eps, pi_star) / (2.0 * beta)).max(0.0))
}

/// Direct Pinsker route from `H(delta_x P_t) <= e^{-2 beta t} log(1/pi_*)`:
/// `(1/(2 beta)) log(log(1/pi_*) / (2 eps^2))`, floored at 0.
pub fn bound_dynamic_pinsker(eps: f64, beta: f64, pi_star: f64) -> Result<f64> {
    check_bound_args(eps, beta, pi_star)?;
    let v = ((1.0 / pi_star).ln() / (2.0 * eps * eps)).ln() / (2.0 * beta);
    Ok(v.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingReport {
    pub eps: f64,
    pub t_exact: f64,
    pub bound_static: f64,
    pub bound_dynamic: f64,
    pub bound_dynamic_pinsker: f64,
    pub pi_star: f64,
    pub beta_used: f64,
    pub loglog_clamped: bool,
}

pub fn mixing_report(l: &Generator, eps: f64, beta: f64) -> Result<MixingReport> {
    let pi_star = l.pi().min_mass();
    Ok(MixingReport {
        eps,
        t_exact: t_mix_exact(l, eps)?,
        bound_static: bound_static(eps, beta, pi_star)?,
        bound_dynamic: bound_dynamic(eps, beta, pi_star)?,
        bound_dynamic_pinsker: bound_dynamic_pinsker(eps, beta, pi_star)?,
        pi_star,
        beta_used: beta,
        loglog_clamped: loglog_clamped(pi_star),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn already_mixed() {
        let l = Generator::flip(1.0).unwrap();
        assert_eq!(t_mix_exact(&l, 0.5).unwrap(), 0.0);
        assert_eq!(t_mix_exact(&l, 0.7).unwrap(), 0.0);
        assert!(t_mix_exact(&l, 1.0).is_err());
        assert!(t_mix_exact(&l, 0.0).is_err());
    }

    #[test]
    fn flip_closed_form() {
        // d(t) = e^{-2t}/2
        let l = Generator::flip(1.0).unwrap();
        for eps in [0.25f64, 0.1, 0.01] {
            let want = 0.5 * (1.0 / (2.0 * eps)).ln();
            assert_abs_diff_eq!(t_mix_exact(&l, eps).unwrap(), want, epsilon = 2e-8);
        }
    }

    #[test]
    fn bound_examples() {
        let e = std::f64::consts::E;
        let (eps, ps) = ((-0.5f64).exp(), (-e).exp());
        assert_abs_diff_eq!(bound_static(eps, 1.0, ps).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(bound_dynamic(eps, 1.0, ps).unwrap(), 1.0, epsilon = 1e-15);
        let s = bound_static(0.1, 1.0, 0.25).unwrap();
        assert_abs_diff_eq!(s, 1.232_951_111_491_593, epsilon = 1e-9);
        assert_eq!(bound_dynamic(0.1, 1.0, 0.25).unwrap(), 2.0 * s);
        assert_eq!(bound_static(0.1, 2.0, 0.25).unwrap(), s / 2.0);
        assert!(!loglog_clamped(0.25));
        assert!(loglog_clamped(0.5));
        assert!(bound_static(0.1, 0.0, 0.25).is_err());
        assert!(bound_static(1.5, 1.0, 0.25).is_err());
        assert!(bound_static(0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn pinsker_variant_differs_by_log_two() {
        let (eps, beta, ps) = (0.05, 0.7, 0.01);
        let a = bound_dynamic(eps, beta, ps).unwrap();
        let b = bound_dynamic_pinsker(eps, beta, ps).unwrap();
        assert_abs_diff_eq!(a - b, 2f64.ln() / (2.0 * beta), epsilon = 1e-12);
    }
}
