//! Continuous-time chains: `P_t = e^{tL}` by uniformization, Dirichlet
//! forms, log-Sobolev and modified log-Sobolev constants, the exponential
//! hypercontractivity schedule `q(t) = 1 + e^{4 beta t}`, and the static
//! versus dynamic entropy contraction factors at a fixed time.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::budget::{stream_rng, OptBudget};
use crate::error::{check_len, Error, Result};
use crate::hyper::{is_hypercontractive_with, HyperParams, DEFAULT_CERT_TOL};
use crate::kernel::{make_family, renormalize_rows, Distribution, Family, Kernel, ValidationOptions};
use crate::measures::{density_entropy, kl_raw};

/// Poisson tail mass at which the uniformization series is cut.
pub const POISSON_TAIL: f64 = 1e-14;
/// Largest `Lambda t` summed directly; longer horizons are squared up.
const MAX_DIRECT_HORIZON: f64 = 32.0;
/// Optimizer densities live in `[1e-10, 1e10]`.
const LOG_DENSITY_CLAMP: f64 = 23.025_850_929_940_457;

/// A rate table with nonnegative off-diagonal entries and zero row sums,
/// together with a law it preserves.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    rates: DMatrix<f64>,
    pi: Distribution,
}

impl Generator {
    pub fn new(rates: Vec<Vec<f64>>, pi: Option<Distribution>) -> Result<Self> {
        let n = rates.len();
        if n == 0 {
            return Err(Error::InvalidGenerator("no states".into()));
        }
        let mut table = DMatrix::zeros(n, n);
        for (x, row) in rates.iter().enumerate() {
            check_len(n, row.len())?;
            let mut off = 0.0;
            for (y, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidGenerator(format!("rate ({x},{y}) is {v}")));
                }
                if y != x {
                    if v < 0.0 {
                        return Err(Error::InvalidGenerator(format!(
                            "negative off-diagonal rate ({x},{y}) = {v}"
                        )));
                    }
                    off += v;
                }
                table[(x, y)] = v;
            }
            let sum = off + table[(x, x)];
            if sum.abs() > 1e-12 * off.max(1.0) {
                return Err(Error::InvalidGenerator(format!("row {x} sums to {sum}")));
            }
            table[(x, x)] = -off;
        }
        Self::from_matrix(table, pi)
    }

    fn from_matrix(rates: DMatrix<f64>, pi: Option<Distribution>) -> Result<Self> {
        let n = rates.nrows();
        let lambda = uniformization_rate(&rates);
        let pi = match pi {
            Some(pi) => {
                check_len(n, pi.len())?;
                pi
            }
            None if n == 1 => Distribution::uniform(1),
            None if lambda == 0.0 => {
                return Err(Error::NonUniqueStationary("generator is zero".into()))
            }
            None => {
                let k = jump_chain(&rates, lambda);
                Kernel::from_matrix(k, None, &ValidationOptions::default())?
                    .pi()
                    .clone()
            }
        };
        let opts = ValidationOptions::default();
        for (state, &mass) in pi.as_slice().iter().enumerate() {
            if mass < opts.pi_floor {
                return Err(Error::ZeroMass {
                    state,
                    mass,
                    floor: opts.pi_floor,
                });
            }
        }
        let residual: f64 = (0..n)
            .map(|y| (0..n).map(|x| pi[x] * rates[(x, y)]).sum::<f64>().abs())
            .sum();
        if residual > 1e-10 * lambda.max(1.0) {
            return Err(Error::NotStationary { residual });
        }
        Ok(Self { rates, pi })
    }

    /// `L = K - I`.
    pub fn from_kernel(k: &Kernel) -> Self {
        let n = k.n();
        let mut rates = k.matrix() - DMatrix::<f64>::identity(n, n);
        for x in 0..n {
            let off: f64 = (0..n).filter(|&y| y != x).map(|y| rates[(x, y)]).sum();
            rates[(x, x)] = -off;
        }
        Self {
            rates,
            pi: k.pi().clone(),
        }
    }

    /// Two states swapping at rate `rate`.
    pub fn flip(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::BadParameter(format!("rate = {rate}")));
        }
        Self::new(
            vec![vec![-rate, rate], vec![rate, -rate]],
            Some(Distribution::uniform(2)),
        )
    }

    /// Nearest-neighbour walk on the `n`-cycle, rate `rate` to each side.
    pub fn cycle(n: usize, rate: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::BadParameter(format!("cycle needs n >= 3, got {n}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::BadParameter(format!("rate = {rate}")));
        }
        let mut rates = DMatrix::zeros(n, n);
        for x in 0..n {
            rates[(x, (x + 1) % n)] += rate;
            rates[(x, (x + n - 1) % n)] += rate;
            rates[(x, x)] = -2.0 * rate;
        }
        Self::from_matrix(rates, Some(Distribution::uniform(n)))
    }

    /// `K - I` for a random reversible kernel `K`.
    pub fn random_reversible(n: usize, seed: u64) -> Result<Self> {
        Ok(Self::from_kernel(&make_family(&Family::RandomReversible { n, seed })?))
    }

    /// `L = K - I` for a random strictly positive kernel (generally not reversible).
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        Ok(Self::from_kernel(&make_family(&Family::Random { n, seed })?))
    }

    pub fn n(&self) -> usize {
        self.rates.nrows()
    }

    pub fn pi(&self) -> &Distribution {
        &self.pi
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.rates[(x, y)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn rates(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|x| self.rates.row(x).iter().copied().collect())
            .collect()
    }

    /// `c L`, for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::BadParameter(format!("scale = {c}")));
        }
        Ok(Self {
            rates: &self.rates * c,
            pi: self.pi.clone(),
        })
    }

    /// `(L f)(x) = sum_y L(x,y) f(y)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|x| (0..n).map(|y| self.rates[(x, y)] * f[y]).sum())
            .collect()
    }

    pub fn is_reversible(&self, tol: f64) -> bool {
        let n = self.n();
        let pi = self.pi.as_slice();
        (0..n).all(|x| {
            (0..n).all(|y| (pi[x] * self.rates[(x, y)] - pi[y] * self.rates[(y, x)]).abs() <= tol)
        })
    }

    /// Smallest nonzero eigenvalue of `-L` on `L^2(pi)`; reversible only.
    pub fn spectral_gap(&self) -> Result<f64> {
        if !self.is_reversible(1e-10 * uniformization_rate(&self.rates).max(1.0)) {
            return Err(Error::InvalidGenerator(
                "spectral gap needs a reversible generator".into(),
            ));
        }
        let n = self.n();
        let pi = self.pi.as_slice();
        let sym = DMatrix::from_fn(n, n, |x, y| {
            let v = -self.rates[(x, y)] * (pi[x] / pi[y]).sqrt();
            if x == y {
                v
            } else {
                // Average the two halves of a symmetric matrix up to rounding.
                0.5 * (v - self.rates[(y, x)] * (pi[y] / pi[x]).sqrt())
            }
        });
        let mut eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        Ok(eig.get(1).copied().unwrap_or(0.0))
    }
}

fn uniformization_rate(rates: &DMatrix<f64>) -> f64 {
    (0..rates.nrows())
        .map(|x| rates[(x, x)].abs())
        .fold(0.0, f64::max)
}

fn jump_chain(rates: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let n = rates.nrows();
    renormalize_rows(DMatrix::identity(n, n) + rates / lambda)
}

/// `P_t = e^{tL}` as a Poisson mixture of powers of `K = I + L / Lambda`.
pub fn transition_at(l: &Generator, t: f64) -> Result<Kernel> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::BadParameter(format!("time t = {t}")));
    }
    let n = l.n();
    let lambda = uniformization_rate(&l.rates);
    let opts = ValidationOptions::default();
    if t == 0.0 || lambda == 0.0 {
        return Kernel::from_matrix(DMatrix::identity(n, n), Some(l.pi.clone()), &opts);
    }
    let k = jump_chain(&l.rates, lambda);
    let mut squarings = 0;
    let mut horizon = lambda * t;
    while horizon > MAX_DIRECT_HORIZON {
        horizon /= 2.0;
        squarings += 1;
    }
    let mut p = poisson_mixture(&k, horizon);
    for _ in 0..squarings {
        p = renormalize_rows(&p * &p);
    }
    Kernel::from_matrix(p, Some(l.pi.clone()), &opts)
}

fn poisson_mixture(k: &DMatrix<f64>, horizon: f64) -> DMatrix<f64> {
    let n = k.nrows();
    let mut power = DMatrix::identity(n, n);
    let mut weight = (-horizon).exp();
    let mut acc = &power * weight;
    let mut j = 0usize;
    loop {
        j += 1;
        weight *= horizon / j as f64;
        power = &power * k;
        acc += &power * weight;
        let r = horizon / (j + 1) as f64;
        // Remaining mass is at most weight * r / (1 - r) once r < 1.
        if r < 1.0 && weight * r / (1.0 - r) < POISSON_TAIL {
            break;
        }
    }
    renormalize_rows(acc)
}

/// `b log(b/a) - 2 sqrt(b) (sqrt(b) - sqrt(a))` for `a, b > 0`. Never
/// negative; with `b = f(x)`, `a = f(y)` and summed against `pi(x) L(x, y)`
/// it gives `E(f, log f) >= 2 E(sqrt f, sqrt f)`.
pub fn elementary_estimate_slack(a: f64, b: f64) -> f64 {
    b * (b / a).ln() - 2.0 * b.sqrt() * (b.sqrt() - a.sqrt())
}

/// `E(f, g) = -sum_x pi(x) f(x) (L g)(x)`.
pub fn dirichlet_form(l: &Generator, f: &[f64], g: &[f64]) -> Result<f64> {
    check_len(l.n(), f.len())?;
    check_len(l.n(), g.len())?;
    Ok(form(l, f, g))
}

fn form(l: &Generator, f: &[f64], g: &[f64]) -> f64 {
    let lg = l.apply(g);
    -f.iter()
        .zip(&lg)
        .zip(l.pi.as_slice())
        .map(|((a, b), w)| w * a * b)
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LsiKind {
    /// `E(sqrt f, sqrt f) >= beta H(f)`.
    #[serde(rename = "LSI")]
    Lsi,
    /// `E(f, log f) >= c H(f)`; `c` is the full coefficient (`2 beta` form).
    #[serde(rename = "MLSI")]
    Mlsi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsiEstimate {
    /// Smallest ratio found; an upper bound on the true constant.
    pub beta_upper: f64,
    pub witness_density: Vec<f64>,
    pub kind: LsiKind,
}

/// The functional-inequality ratio at a density, with its gradient in `f`.
fn lsi_ratio(l: &Generator, kind: LsiKind, f: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
    let pi = l.pi.as_slice();
    let n = f.len();
    let h = density_entropy(f, pi);
    let (num, num_grad) = match kind {
        LsiKind::Lsi => {
            let u: Vec<f64> = f.iter().map(|v| v.sqrt()).collect();
            let num = form(l, &u, &u);
            let grad = want_grad.then(|| -> Vec<f64> {
                let lu = l.apply(&u);
                (0..n)
                    .map(|x| {
                        let back: f64 = (0..n).map(|y| pi[y] * u[y] * l.rates[(y, x)]).sum();
                        -(pi[x] * lu[x] + back) / (2.0 * u[x])
                    })
                    .collect()
            });
            (num, grad)
        }
        LsiKind::Mlsi => {
            let logf: Vec<f64> = f.iter().map(|v| v.ln()).collect();
            let num = form(l, f, &logf);
            let grad = want_grad.then(|| {
                let ll = l.apply(&logf);
                (0..n)
                    .map(|x| {
                        let back: f64 = (0..n).map(|y| pi[y] * f[y] * l.rates[(y, x)]).sum();
                        -pi[x] * ll[x] - back / f[x]
                    })
                    .collect()
            });
            (num, grad)
        }
    };
    if !(h > 0.0) {
        return (f64::INFINITY, vec![0.0; n]);
    }
    let r = num / h;
    let grad = match num_grad {
        Some(ng) => (0..n)
            .map(|x| (ng[x] - r * pi[x] * (f[x].ln() + 1.0)) / h)
            .collect(),
        None => Vec::new(),
    };
    (r, grad)
}

fn density_from_log(pi: &[f64], v: &[f64]) -> Vec<f64> {
    let z: f64 = pi.iter().zip(v).map(|(p, x)| p * x.exp()).sum();
    v.iter().map(|x| x.exp() / z).collect()
}

fn clamp_log(pi: &[f64], v: &mut [f64]) {
    // Center so that the density sits near 1, then clamp.
    let z: f64 = pi.iter().zip(v.iter()).map(|(p, x)| p * x.exp()).sum();
    let shift = z.ln();
    v.iter_mut()
        .for_each(|x| *x = (*x - shift).clamp(-LOG_DENSITY_CLAMP, LOG_DENSITY_CLAMP));
}

/// Gradient descent in log-coordinates with an adaptive step.
fn descend(l: &Generator, kind: LsiKind, mut v: Vec<f64>, max_iter: usize) -> (f64, Vec<f64>) {
    let pi = l.pi.as_slice();
    let n = v.len();
    clamp_log(pi, &mut v);
    let mut f = density_from_log(pi, &v);
    let (mut r, mut gf) = lsi_ratio(l, kind, &f, true);
    if !r.is_finite() {
        return (r, f);
    }
    let chain = |f: &[f64], gf: &[f64]| -> Vec<f64> {
        let mean: f64 = (0..n).map(|x| f[x] * gf[x]).sum();
        (0..n).map(|z| f[z] * gf[z] - pi[z] * f[z] * mean).collect()
    };
    let mut gv = chain(&f, &gf);
    let mut step = 0.5;
    for _ in 0..max_iter {
        let gnorm = gv.iter().map(|g| g.abs()).fold(0.0, f64::max);
        if gnorm == 0.0 || step < 1e-14 {
            break;
        }
        let mut cand: Vec<f64> = v.iter().zip(&gv).map(|(a, g)| a - step * g / gnorm).collect();
        clamp_log(pi, &mut cand);
        let cf = density_from_log(pi, &cand);
        let (cr, cg) = lsi_ratio(l, kind, &cf, true);
        if cr < r {
            v = cand;
            f = cf;
            r = cr;
            gf = cg;
            gv = chain(&f, &gf);
            step = (step * 1.5).min(8.0);
        } else {
            step *= 0.5;
        }
    }
    (r, f)
}

/// Eigenvector of the symmetrized generator for its spectral gap, used to
/// seed near-constant probes.
fn gap_direction(l: &Generator) -> Option<Vec<f64>> {
    let n = l.n();
    let pi = l.pi.as_slice();
    let sym = DMatrix::from_fn(n, n, |x, y| {
        let a = -l.rates[(x, y)] * (pi[x] / pi[y]).sqrt();
        let b = -l.rates[(y, x)] * (pi[y] / pi[x]).sqrt();
        0.5 * (a + b)
    });
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let idx = *order.get(1)?;
    Some(
        (0..n)
            .map(|x| eig.eigenvectors[(x, idx)] / pi[x].sqrt())
            .collect(),
    )
}

fn optimize_lsi(l: &Generator, kind: LsiKind, budget: &OptBudget) -> LsiEstimate {
    let n = l.n();
    let pi = l.pi.as_slice().to_vec();
    let mut best = (f64::INFINITY, vec![1.0; n]);
    let offer = |r: f64, f: Vec<f64>, best: &mut (f64, Vec<f64>)| {
        if r < best.0 {
            *best = (r, f);
        }
    };

    // Near-constant probes f = 1 + s d with d mean-zero.
    let mut directions: Vec<Vec<f64>> = gap_direction(l).into_iter().collect();
    for x in 0..n {
        let mut d = vec![0.0; n];
        d[x] = 1.0;
        directions.push(d);
    }
    for k in 0..budget.n_random {
        let mut rng = stream_rng(budget.seed, 0x15c1_0000 + k as u64);
        directions.push((0..n).map(|_| rng.random::<f64>() - 0.5).collect());
    }
    for d in &directions {
        let mean: f64 = d.iter().zip(&pi).map(|(a, b)| a * b).sum();
        let top = d.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        if top == 0.0 {
            continue;
        }
        for s in [1e-2, 1e-3, -1e-2, -1e-3] {
            let f: Vec<f64> = d.iter().map(|v| 1.0 + s * (v - mean) / top).collect();
            let (r, _) = lsi_ratio(l, kind, &f, false);
            offer(r, f, &mut best);
        }
    }

    // Dense scan over the one-parameter family of two-state densities.
    if n == 2 {
        let steps = 10_000;
        for k in 1..steps {
            let m = k as f64 / steps as f64;
            let f = vec![m / pi[0], (1.0 - m) / pi[1]];
            let (r, _) = lsi_ratio(l, kind, &f, false);
            offer(r, f, &mut best);
        }
    }

    let mut starts: Vec<Vec<f64>> = vec![best.1.iter().map(|v| v.ln()).collect()];
    for x in 0..n {
        for c in [-6.0, -2.0, 2.0, 6.0] {
            let mut v = vec![0.0; n];
            v[x] = c;
            starts.push(v);
        }
    }
    for k in 0..budget.n_random {
        let mut rng = stream_rng(budget.seed, 0x15c2_0000 + k as u64);
        let spread = 0.5 + 8.0 * rng.random::<f64>();
        starts.push((0..n).map(|_| spread * (rng.random::<f64>() - 0.5)).collect());
    }
    let iters = budget.max_iter.min(2_000);
    for v in starts {
        let (r, f) = descend(l, kind, v, iters);
        offer(r, f, &mut best);
    }

    let witness_density = best.1;
    let (beta_upper, _) = lsi_ratio(l, kind, &witness_density, false);
    LsiEstimate {
        beta_upper,
        witness_density,
        kind,
    }
}

/// Best (smallest) `E(sqrt f, sqrt f) / H(f)` found over positive densities.
pub fn lsi_constant(l: &Generator, budget: &OptBudget) -> LsiEstimate {
    optimize_lsi(l, LsiKind::Lsi, budget)
}

/// Best (smallest) `E(f, log f) / H(f)` found over positive densities.
pub fn mlsi_constant(l: &Generator, budget: &OptBudget) -> LsiEstimate {
    optimize_lsi(l, LsiKind::Mlsi, budget)
}

/// Ratio defining the constant of `kind` at a positive density.
pub fn lsi_ratio_at(l: &Generator, kind: LsiKind, f: &[f64]) -> Result<f64> {
    check_len(l.n(), f.len())?;
    if f.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::BadParameter("density must be positive".into()));
    }
    Ok(lsi_ratio(l, kind, f, false).0)
}

/// Provable lower bound on the LSI constant of a reversible generator:
/// `gap (1 - 2 pi_*) / log(1/pi_* - 1)`, read as `gap / 2` at `pi_* = 1/2`.
pub fn lsi_spectral_lower_bound(l: &Generator) -> Result<f64> {
    let gap = l.spectral_gap()?;
    let s = l.pi.min_mass();
    let factor = if (s - 0.5).abs() < 1e-9 {
        0.5
    } else {
        (1.0 - 2.0 * s) / (1.0 / s - 1.0).ln()
    };
    Ok(gap * factor)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub t: f64,
    pub q: f64,
    pub norm: f64,
    /// `1 - ||P_t||_{2 -> q(t)}` (as estimated).
    pub margin: f64,
    pub grid_certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub beta: f64,
    pub cert_tol: f64,
    pub rows: Vec<ScheduleRow>,
    /// Every margin is at least `-cert_tol`.
    pub holds: bool,
}

/// `||P_t||_{2 -> 1 + e^{4 beta t}}` at each time.
pub fn check_schedule(l: &Generator, beta: f64, times: &[f64]) -> Result<ScheduleReport> {
    check_schedule_with(l, beta, times, DEFAULT_CERT_TOL, &OptBudget::default())
}

pub fn check_schedule_with(
    l: &Generator,
    beta: f64,
    times: &[f64],
    cert_tol: f64,
    budget: &OptBudget,
) -> Result<ScheduleReport> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::BadParameter(format!("beta = {beta}")));
    }
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let p_t = transition_at(l, t)?;
        let q = 1.0 + (4.0 * beta * t).exp();
        let hp = HyperParams::new(2.0, q)?.with_tol(cert_tol)?;
        let cert = is_hypercontractive_with(&p_t, &hp, budget)?;
        rows.push(ScheduleRow {
            t,
            q,
            norm: cert.estimate.lower_bound,
            margin: cert.margin,
            grid_certified: cert.estimate.grid_certified,
        });
    }
    let holds = rows.iter().all(|r| r.margin >= -cert_tol);
    Ok(ScheduleReport {
        beta,
        cert_tol,
        rows,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionRow {
    pub t: f64,
    /// `2 / (1 + e^{4 beta t})`.
    pub theta_static: f64,
    /// `e^{-2 beta t}`.
    pub theta_dynamic: f64,
    /// `theta_static / theta_dynamic = sech(2 beta t)`.
    pub ratio: f64,
}

pub fn static_factor(beta: f64, t: f64) -> f64 {
    2.0 / (1.0 + (4.0 * beta * t).exp())
}

pub fn dynamic_factor(beta: f64, t: f64) -> f64 {
    (-2.0 * beta * t).exp()
}

pub fn static_vs_dynamic(beta: f64, times: &[f64]) -> Result<Vec<ContractionRow>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::BadParameter(format!("beta = {beta}")));
    }
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::BadParameter(format!("time t = {t}")));
            }
            let theta_static = static_factor(beta, t);
            let theta_dynamic = dynamic_factor(beta, t);
            Ok(ContractionRow {
                t,
                theta_static,
                theta_dynamic,
                ratio: 1.0 / (2.0 * beta * t).cosh(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    /// `H(mu P_t | pi)`.
    pub value: f64,
    pub bound_static: Option<f64>,
    pub bound_dynamic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyCurve {
    pub rows: Vec<DecayRow>,
    /// Nonincreasing in `t` within 1e-10 (after sorting by time).
    pub monotone: bool,
}

/// Exact `H(mu P_t | pi)` at each time, with the static and dynamic
/// envelopes when `beta` is given.
pub fn entropy_decay_curve(
    l: &Generator,
    mu: &Distribution,
    times: &[f64],
    beta: Option<f64>,
) -> Result<EntropyCurve> {
    check_len(l.n(), mu.len())?;
    let pi = l.pi.as_slice();
    let h0 = kl_raw(mu.as_slice(), pi);
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let p_t = transition_at(l, t)?;
        let value = kl_raw(&p_t.act_measure_raw(mu.as_slice()), pi);
        rows.push(DecayRow {
            t,
            value,
            bound_static: beta.map(|b| static_factor(b, t) * h0),
            bound_dynamic: beta.map(|b| dynamic_factor(b, t) * h0),
        });
    }
    let mut sorted: Vec<&DecayRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let monotone = sorted.windows(2).all(|w| w[1].value <= w[0].value + 1e-10);
    Ok(EntropyCurve { rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn generator_validation() {
        assert!(Generator::new(vec![vec![-1.0, 1.0], vec![1.0, -0.5]], None).is_err());
        assert!(Generator::new(vec![vec![-1.0, 1.0], vec![-1.0, 1.0]], None).is_err());
        let l = Generator::new(vec![vec![-1.0, 1.0], vec![3.0, -3.0]], None).unwrap();
        assert_abs_diff_eq!(l.pi()[0], 0.75, epsilon = 1e-12);
        let wrong = Distribution::uniform(2);
        assert!(matches!(
            Generator::new(vec![vec![-1.0, 1.0], vec![3.0, -3.0]], Some(wrong)),
            Err(Error::NotStationary { .. })
        ));
    }

    #[test]
    fn transition_at_zero_is_identity() {
        let l = Generator::random(4, 1).unwrap();
        let p = transition_at(&l, 0.0).unwrap();
        assert_eq!(p.matrix(), &DMatrix::<f64>::identity(4, 4));
        assert!(transition_at(&l, -1.0).is_err());
    }

    #[test]
    fn flip_closed_form() {
        let l = Generator::flip(1.0).unwrap();
        for t in [0.1, 1.0, 3.0, 40.0] {
            let p = transition_at(&l, t).unwrap();
            let stay = (1.0 + (-2.0 * t).exp()) / 2.0;
            assert_abs_diff_eq!(p.entry(0, 0), stay, epsilon = 1e-13);
            assert_abs_diff_eq!(p.entry(0, 1), 1.0 - stay, epsilon = 1e-13);
            assert_abs_diff_eq!(p.entry(1, 0), 1.0 - stay, epsilon = 1e-13);
        }
    }

    #[test]
    fn semigroup_property() {
        let l = Generator::random(5, 3).unwrap();
        let (s, t) = (0.37, 1.9);
        let lhs = transition_at(&l, s + t).unwrap();
        let rhs = transition_at(&l, s).unwrap().compose(&transition_at(&l, t).unwrap()).unwrap();
        assert!((lhs.matrix() - rhs.matrix()).amax() <= 1e-10);
    }

    #[test]
    fn dirichlet_form_examples() {
        let l = Generator::flip(1.0).unwrap();
        assert_abs_diff_eq!(
            dirichlet_form(&l, &[1.0, 0.0], &[1.0, 0.0]).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let r = Generator::random_reversible(4, 2).unwrap();
        assert_abs_diff_eq!(
            dirichlet_form(&r, &[1.0; 4], &[0.3, -2.0, 1.0, 5.0]).unwrap(),
            0.0,
            epsilon = 1e-14
        );
        let f = [0.3, -2.0, 1.0, 5.0];
        let g = [1.0, 0.5, -0.25, 2.0];
        assert!(dirichlet_form(&r, &f, &f).unwrap() >= 0.0);
        assert_abs_diff_eq!(
            dirichlet_form(&r, &f, &g).unwrap(),
            dirichlet_form(&r, &g, &f).unwrap(),
            epsilon = 1e-12
        );
        assert!(dirichlet_form(&r, &f[..2], &g).is_err());
    }

    #[test]
    fn lsi_scaling_and_witness() {
        let l = Generator::random_reversible(3, 5).unwrap();
        let b = OptBudget::default();
        let one = lsi_constant(&l, &b);
        let two = lsi_constant(&l.scaled(2.0).unwrap(), &b);
        assert_abs_diff_eq!(two.beta_upper, 2.0 * one.beta_upper, epsilon = 1e-6);
        let at = lsi_ratio_at(&l, LsiKind::Lsi, &one.witness_density).unwrap();
        assert_abs_diff_eq!(at, one.beta_upper, epsilon = 1e-9);
        let m1 = mlsi_constant(&l, &b);
        let m3 = mlsi_constant(&l.scaled(3.0).unwrap(), &b);
        assert_abs_diff_eq!(m3.beta_upper, 3.0 * m1.beta_upper, epsilon = 1e-6);
        assert!(m1.beta_upper >= 2.0 * one.beta_upper - 1e-6);
    }

    #[test]
    fn spectral_bound_is_below_estimate() {
        let l = Generator::flip(1.0).unwrap();
        assert_abs_diff_eq!(l.spectral_gap().unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lsi_spectral_lower_bound(&l).unwrap(), 1.0, epsilon = 1e-12);
        let c = Generator::cycle(5, 1.0).unwrap();
        let lb = lsi_spectral_lower_bound(&c).unwrap();
        let est = lsi_constant(&c, &OptBudget::default());
        assert!(lb <= est.beta_upper, "{lb} > {}", est.beta_upper);
        assert!(Generator::random(3, 1).unwrap().spectral_gap().is_err());
    }

    #[test]
    fn static_vs_dynamic_values() {
        let rows = static_vs_dynamic(1.0, &[0.0, 1.0]).unwrap();
        assert_eq!(rows[0].theta_static, 1.0);
        assert_eq!(rows[0].theta_dynamic, 1.0);
        assert_abs_diff_eq!(rows[1].theta_static, 0.035_972_419_924_183_12, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[1].theta_dynamic, 0.135_335_283_236_612_7, epsilon = 1e-15);
        let far = static_vs_dynamic(1.0, &[400.0]).unwrap();
        assert!(far[0].ratio <= 1.0 && far[0].ratio < 1e-300);
        assert!(static_vs_dynamic(0.0, &[1.0]).is_err());
        assert!(static_vs_dynamic(1.0, &[-1.0]).is_err());
    }

    #[test]
    fn decay_curve_basics() {
        let l = Generator::random_reversible(3, 9).unwrap();
        let curve = entropy_decay_curve(&l, l.pi(), &[0.0, 1.0, 2.0], None).unwrap();
        assert!(curve.rows.iter().all(|r| r.value.abs() < 1e-15));
        let mu = Distribution::point_mass(3, 1);
        let curve = entropy_decay_curve(&l, &mu, &[0.0, 0.5, 1.0, 4.0], Some(0.1)).unwrap();
        assert!(curve.monotone);
        assert_abs_diff_eq!(curve.rows[0].value, -l.pi()[1].ln(), epsilon = 1e-12);
    }
}
