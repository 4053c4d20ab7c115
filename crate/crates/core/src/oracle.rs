//! Brute-force ground truth on tiny instances.
//!
//! Everything here enumerates a regular grid on the probability simplex and
//! shares no code with the optimizers it is used to check, apart from the
//! basic kernel actions and divergences.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyper::HyperParams;
use crate::kernel::Kernel;
use crate::measures::{kl_raw, lp_raw};
use crate::semigroup::Generator;

/// Entropies below this are excluded from ratio scans.
const MIN_ENTROPY: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GridMax {
    pub value: f64,
    pub point: Vec<f64>,
}

/// Calls `visit` on every point of the simplex grid `{m : m_i = k_i / steps}`.
pub(crate) fn for_each_simplex_point(n: usize, steps: usize, mut visit: impl FnMut(&[f64])) {
    let mut counts = vec![0usize; n];
    let mut point = vec![0.0; n];
    let h = 1.0 / steps as f64;
    fn rec(
        i: usize,
        left: usize,
        h: f64,
        counts: &mut [usize],
        point: &mut [f64],
        visit: &mut dyn FnMut(&[f64]),
    ) {
        let n = counts.len();
        if i == n - 1 {
            counts[i] = left;
            let used: usize = counts[..n - 1].iter().sum();
            for j in 0..n - 1 {
                point[j] = counts[j] as f64 * h;
            }
            // The last coordinate absorbs rounding so the point has unit mass.
            point[i] = if used == 0 {
                1.0
            } else {
                (1.0 - point[..n - 1].iter().sum::<f64>()).max(0.0)
            };
            visit(point);
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, h, counts, point, visit);
        }
    }
    rec(0, steps, h, &mut counts, &mut point, &mut visit);
}

fn steps_for(resolution: f64) -> Result<usize> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::BadParameter(format!("grid resolution {resolution}")));
    }
    Ok((1.0 / resolution).round().max(1.0) as usize)
}

/// Keeps the `k` largest values seen.
struct TopK {
    k: usize,
    items: Vec<GridMax>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn offer(&mut self, value: f64, point: &[f64]) {
        if !value.is_finite() && value != f64::INFINITY {
            return;
        }
        if self.items.len() == self.k && value <= self.items[self.k - 1].value {
            return;
        }
        let pos = self.items.partition_point(|g| g.value >= value);
        self.items.insert(
            pos,
            GridMax {
                value,
                point: point.to_vec(),
            },
        );
        self.items.truncate(self.k);
    }
}

/// Maximizes `objective` over a simplex grid, then refines around the `top`
/// best points `levels` times, each level on a 10x finer local grid spanning
/// one coarse cell in every direction.
pub(crate) fn grid_maximize(
    n: usize,
    steps: usize,
    levels: usize,
    top: usize,
    objective: impl Fn(&[f64]) -> f64,
) -> GridMax {
    let mut best = TopK::new(top.max(1));
    for_each_simplex_point(n, steps, |m| best.offer(objective(m), m));
    let mut h = 1.0 / steps as f64;
    for _ in 0..levels {
        let fine = h / 10.0;
        let centres: Vec<Vec<f64>> = best.items.iter().map(|g| g.point.clone()).collect();
        for centre in centres {
            refine_around(&centre, fine, 10, &objective, &mut best);
        }
        h = fine;
    }
    best.items.into_iter().next().unwrap_or(GridMax {
        value: f64::NEG_INFINITY,
        point: vec![1.0 / n as f64; n],
    })
}

fn refine_around(
    centre: &[f64],
    h: f64,
    radius: i64,
    objective: &impl Fn(&[f64]) -> f64,
    best: &mut TopK,
) {
    let n = centre.len();
    let free = n - 1;
    let width = (2 * radius + 1) as usize;
    let total = width.pow(free as u32);
    let mut point = vec![0.0; n];
    'outer: for idx in 0..total {
        let mut rem = idx;
        let mut used = 0.0;
        for j in 0..free {
            let offset = (rem % width) as i64 - radius;
            rem /= width;
            let v = centre[j] + offset as f64 * h;
            if v < 0.0 {
                continue 'outer;
            }
            point[j] = v;
            used += v;
        }
        let last = 1.0 - used;
        if last < -1e-15 {
            continue;
        }
        point[free] = last.max(0.0);
        best.offer(objective(&point), &point);
    }
}

/// Grid maximum of `H(mu T | pi) / H(mu | pi)` over the simplex.
pub fn grid_theta_star(t: &Kernel, resolution: f64) -> Result<f64> {
    let n = t.n();
    if n > 3 {
        return Err(Error::TooLarge { n, max: 3 });
    }
    if resolution < 1e-4 {
        return Err(Error::BadParameter(format!("resolution {resolution} < 1e-4")));
    }
    let steps = steps_for(resolution)?;
    let pi = t.pi().as_slice();
    let best = grid_maximize(n, steps, 0, 1, |mu| ratio_at(t, pi, mu));
    Ok(best.value.max(0.0))
}

fn ratio_at(t: &Kernel, pi: &[f64], mu: &[f64]) -> f64 {
    let h = kl_raw(mu, pi);
    if h < MIN_ENTROPY {
        return f64::NEG_INFINITY;
    }
    // mu T by direct summation.
    let n = mu.len();
    let mut pushed = vec![0.0; n];
    for x in 0..n {
        for (y, p) in pushed.iter_mut().enumerate() {
            *p += mu[x] * t.entry(x, y);
        }
    }
    kl_raw(&pushed, pi) / h
}

/// `f` on the `L^p(pi)` unit sphere whose `p`-mass profile is `m`:
/// `pi(x) f(x)^p = m(x)`.
pub(crate) fn sphere_point(m: &[f64], pi: &[f64], p: f64) -> Vec<f64> {
    m.iter()
        .zip(pi)
        .map(|(mx, px)| (mx / px).max(0.0).powf(1.0 / p))
        .collect()
}

pub(crate) fn sphere_objective(t: &Kernel, pi: &[f64], hp: &HyperParams, m: &[f64]) -> f64 {
    let f = sphere_point(m, pi, hp.p());
    lp_raw(&t.apply(&f), pi, hp.q())
}

/// Grid maximum of `||T f||_q` over nonnegative `f` with `||f||_p = 1`,
/// with one level of 10x refinement around the best cell.
pub fn grid_opnorm(t: &Kernel, hp: &HyperParams, resolution: f64) -> Result<f64> {
    let n = t.n();
    if n > 3 {
        return Err(Error::TooLarge { n, max: 3 });
    }
    let steps = steps_for(resolution)?;
    let pi = t.pi().as_slice();
    Ok(grid_maximize(n, steps, 1, 1, |m| sphere_objective(t, pi, hp, m)).value)
}

/// Grid bracket of the log-Sobolev and modified log-Sobolev constants of a
/// two-state generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridLsi {
    /// Smallest `E(sqrt f, sqrt f) / H(f)` on the grid.
    pub lsi: f64,
    /// Smallest `E(f, log f) / H(f)` on the grid.
    pub mlsi: f64,
    pub resolution: f64,
}

impl GridLsi {
    /// Lower end of the bracket around the LSI infimum; safe to use where
    /// an overestimate would be unsound.
    pub fn certified_beta(&self) -> f64 {
        self.lsi - self.resolution
    }
}

/// One-parameter scan over all positive two-state densities.
///
/// Densities are `f = (1 + s pi2/pi1, 1 - s)` for `s` in `(-pi1/pi2, 1)`
/// stepped by `resolution` in the rescaled coordinate `u = s / range`, so
/// that both ends of the density segment are reached.
pub fn grid_lsi(l: &Generator, resolution: f64) -> Result<GridLsi> {
    let n = l.n();
    if n != 2 {
        return Err(Error::TooLarge { n, max: 2 });
    }
    if !(resolution > 0.0 && resolution < 0.5) {
        return Err(Error::BadParameter(format!("grid resolution {resolution}")));
    }
    let pi = l.pi().as_slice();
    let (p1, p2) = (pi[0], pi[1]);
    let a = l.rate(0, 1);
    let b = l.rate(1, 0);
    // E(u, v) = sum_x pi(x) sum_y L(x,y) (u(x) - u(y)) (v(x) - v(y)) / 2 on
    // two states, written out directly.
    let form = |u: [f64; 2], v: [f64; 2]| {
        0.5 * (p1 * a + p2 * b) * (u[0] - u[1]) * (v[0] - v[1])
    };
    let entropy = |f: [f64; 2]| {
        let term = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
        p1 * term(f[0]) + p2 * term(f[1])
    };
    let lo = -p1 / p2;
    let steps = (1.0 / resolution).round() as i64;
    let mut lsi = f64::INFINITY;
    let mut mlsi = f64::INFINITY;
    for k in 1..steps {
        // s sweeps (lo, 1) excluding the endpoints and s = 0 (f = 1).
        for s in [k as f64 * resolution, lo * k as f64 * resolution] {
            let f = [1.0 + s * p2 / p1, 1.0 - s];
            if f[0] <= 0.0 || f[1] <= 0.0 {
                continue;
            }
            let h = entropy(f);
            if h <= 0.0 {
                continue;
            }
            let root = [f[0].sqrt(), f[1].sqrt()];
            lsi = lsi.min(form(root, root) / h);
            mlsi = mlsi.min(form(f, [f[0].ln(), f[1].ln()]) / h);
        }
    }
    Ok(GridLsi {
        lsi,
        mlsi,
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_family, Distribution, Family};
    use approx::assert_abs_diff_eq;

    #[test]
    fn simplex_grid_counts() {
        let mut count = 0;
        let mut max_err: f64 = 0.0;
        for_each_simplex_point(3, 10, |m| {
            count += 1;
            max_err = max_err.max((m.iter().sum::<f64>() - 1.0).abs());
        });
        assert_eq!(count, 66);
        assert!(max_err < 1e-15);
        let mut count = 0;
        for_each_simplex_point(1, 10, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn theta_grid_endpoints() {
        let id = make_family(&Family::Identity { n: 3, pi: None }).unwrap();
        assert_abs_diff_eq!(grid_theta_star(&id, 1e-3).unwrap(), 1.0, epsilon = 1e-9);
        let proj = make_family(&Family::Projection { n: 3, pi: None }).unwrap();
        assert!(grid_theta_star(&proj, 1e-3).unwrap() < 1e-15);
        let big = make_family(&Family::CompleteGraph { n: 4 }).unwrap();
        assert!(matches!(
            grid_theta_star(&big, 1e-2),
            Err(Error::TooLarge { n: 4, max: 3 })
        ));
    }

    #[test]
    fn opnorm_grid_endpoints() {
        let proj = make_family(&Family::Projection { n: 3, pi: None }).unwrap();
        let hp = HyperParams::new(2.0, 4.0).unwrap();
        assert_abs_diff_eq!(grid_opnorm(&proj, &hp, 1e-3).unwrap(), 1.0, epsilon = 1e-6);

        let id = make_family(&Family::Identity {
            n: 2,
            pi: Some(Distribution::uniform(2)),
        })
        .unwrap();
        let hp = HyperParams::new(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(
            grid_opnorm(&id, &hp, 1e-4).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-3
        );
    }

    #[test]
    fn lsi_grid_on_flip_chain() {
        let l = Generator::flip(1.0).unwrap();
        let g = grid_lsi(&l, 1e-4).unwrap();
        // The symmetric two-point chain with unit rates has LSI constant 1
        // (half the spectral gap) and modified constant 4 at the f -> 1 limit.
        assert_abs_diff_eq!(g.lsi, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(g.mlsi, 4.0, epsilon = 1e-4);
        assert!(g.mlsi >= 2.0 * g.lsi);
        let g2 = grid_lsi(&l.scaled(2.0).unwrap(), 1e-4).unwrap();
        assert_abs_diff_eq!(g2.lsi, 2.0 * g.lsi, epsilon = 2e-4);
        assert_abs_diff_eq!(g2.mlsi, 2.0 * g.mlsi, epsilon = 2e-4);
    }
}
