//! Finite-state measure-preserving transition kernels.
//!
//! A [`Kernel`] is a row-stochastic table `T(x, y)` paired with a strictly
//! positive law `pi` satisfying `pi T = pi`. It acts on measures from the
//! left (`mu -> mu T`) and on functions from the right (`f -> T f`), and its
//! adjoint with respect to `pi` is the time reversal
//! `T*(y, x) = pi(x) T(x, y) / pi(y)`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::budget::stream_rng;
use crate::error::{check_len, Error, Result};

/// Tolerance on probability sums before renormalization.
pub const SUM_TOL: f64 = 1e-12;
/// Tolerance on `|pi T - pi|_1`.
pub const STATIONARITY_TOL: f64 = 1e-10;
/// Default lower bound on stationary masses.
pub const DEFAULT_PI_FLOOR: f64 = 1e-12;

/// A probability vector on `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// Validates a probability vector: finite, nonnegative, summing to one
    /// within [`SUM_TOL`]. The stored weights are renormalized.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum = checked_mass(&weights)?;
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::NotNormalized(format!("weights sum to {sum}")));
        }
        Ok(Self::normalized(weights, sum))
    }

    /// Normalizes an arbitrary nonnegative vector with positive mass.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum = checked_mass(&weights)?;
        Ok(Self::normalized(weights, sum))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "empty state space");
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, state: usize) -> Self {
        assert!(state < n, "state {state} out of range for n = {n}");
        let mut weights = vec![0.0; n];
        weights[state] = 1.0;
        Self { weights }
    }

    fn normalized(mut weights: Vec<f64>, sum: f64) -> Self {
        weights.iter_mut().for_each(|w| *w /= sum);
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    /// Smallest weight, `pi_*` when this is a stationary law.
    pub fn min_mass(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;
    fn index(&self, index: usize) -> &f64 {
        &self.weights[index]
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;
    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Distribution::new(weights)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Vec<f64> {
        d.weights
    }
}

fn checked_mass(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::NotNormalized("empty vector".into()));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::NotNormalized(format!("entry {i} is {w}")));
        }
    }
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(Error::NotNormalized("zero total mass".into()));
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Stationary masses below this are rejected.
    pub pi_floor: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            pi_floor: DEFAULT_PI_FLOOR,
        }
    }
}

/// A row-stochastic table together with a stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: DMatrix<f64>,
    pi: Distribution,
}

/// Builds a [`Kernel`] with the default options.
pub fn validate_kernel(rows: Vec<Vec<f64>>, pi: Option<Distribution>) -> Result<Kernel> {
    validate_kernel_with(rows, pi, &ValidationOptions::default())
}

pub fn validate_kernel_with(
    rows: Vec<Vec<f64>>,
    pi: Option<Distribution>,
    opts: &ValidationOptions,
) -> Result<Kernel> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::BadParameter("kernel needs at least one state".into()));
    }
    let mut table = DMatrix::zeros(n, n);
    for (x, row) in rows.iter().enumerate() {
        check_len(n, row.len())?;
        let sum = checked_mass(row).map_err(|e| Error::NonStochasticRow {
            row: x,
            reason: e.to_string(),
        })?;
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::NonStochasticRow {
                row: x,
                reason: format!("sums to {sum}"),
            });
        }
        for (y, &v) in row.iter().enumerate() {
            table[(x, y)] = v / sum;
        }
    }
    Kernel::from_matrix(table, pi, opts)
}

impl Kernel {
    /// Wraps an already row-normalized matrix. Used internally where the
    /// rows are stochastic by construction.
    pub(crate) fn from_matrix(
        rows: DMatrix<f64>,
        pi: Option<Distribution>,
        opts: &ValidationOptions,
    ) -> Result<Self> {
        let n = rows.nrows();
        let pi = match pi {
            Some(pi) => {
                check_len(n, pi.len())?;
                pi
            }
            None => stationary_law(&rows)?,
        };
        for (state, &mass) in pi.as_slice().iter().enumerate() {
            if mass < opts.pi_floor {
                return Err(Error::ZeroMass {
                    state,
                    mass,
                    floor: opts.pi_floor,
                });
            }
        }
        let kernel = Self { rows, pi };
        let pushed = kernel.act_measure_raw(kernel.pi.as_slice());
        let residual: f64 = pushed
            .iter()
            .zip(kernel.pi.as_slice())
            .map(|(a, b)| (a - b).abs())
            .sum();
        if residual > STATIONARITY_TOL {
            return Err(Error::NotStationary { residual });
        }
        Ok(kernel)
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn pi(&self) -> &Distribution {
        &self.pi
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.rows[(x, y)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|x| self.rows.row(x).iter().copied().collect())
            .collect()
    }

    pub(crate) fn act_measure_raw(&self, mu: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for (x, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (y, o) in out.iter_mut().enumerate() {
                *o += m * self.rows[(x, y)];
            }
        }
        out
    }

    /// `mu T`, the law after one step started from `mu`.
    pub fn act_measure(&self, mu: &Distribution) -> Result<Distribution> {
        check_len(self.n(), mu.len())?;
        Distribution::from_weights(self.act_measure_raw(mu.as_slice()))
    }

    /// `T f`, the conditional expectation of `f` after one step.
    ///
    /// Entries of `f` may be `+inf` when `f >= 0`; zero transition
    /// probabilities never touch them.
    pub fn act_function(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), f.len())?;
        Ok(self.apply(f))
    }

    pub(crate) fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|x| {
                let mut acc = 0.0;
                for (y, &fy) in f.iter().enumerate() {
                    let t = self.rows[(x, y)];
                    if t != 0.0 {
                        acc += t * fy;
                    }
                }
                acc
            })
            .collect()
    }

    /// Time reversal with respect to `pi`.
    pub fn adjoint(&self) -> Kernel {
        let n = self.n();
        let pi = self.pi.as_slice();
        let mut rev = DMatrix::zeros(n, n);
        for y in 0..n {
            let mut sum = 0.0;
            for x in 0..n {
                let v = pi[x] * self.rows[(x, y)] / pi[y];
                rev[(y, x)] = v;
                sum += v;
            }
            // Rows sum to (pi T)(y) / pi(y) = 1 up to the stationarity residual.
            for x in 0..n {
                rev[(y, x)] /= sum;
            }
        }
        Kernel {
            rows: rev,
            pi: self.pi.clone(),
        }
    }

    /// The two-step kernel `self` then `other`; both must share `pi`.
    pub fn compose(&self, other: &Kernel) -> Result<Kernel> {
        check_len(self.n(), other.n())?;
        let product = &self.rows * &other.rows;
        Kernel::from_matrix(
            renormalize_rows(product),
            Some(self.pi.clone()),
            &ValidationOptions::default(),
        )
    }

    /// `max |pi(x) T(x,y) - pi(y) T(y,x)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.n();
        let pi = self.pi.as_slice();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                worst = worst.max((pi[x] * self.rows[(x, y)] - pi[y] * self.rows[(y, x)]).abs());
            }
        }
        worst
    }

    pub fn is_reversible(&self, tol: f64) -> bool {
        self.detailed_balance_residual() <= tol
    }
}

pub(crate) fn renormalize_rows(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in m.row_iter_mut() {
        row.iter_mut().for_each(|v| *v = v.max(0.0));
        let s = row.sum();
        row /= s;
    }
    m
}

/// Unique stationary law of a stochastic table, or an error if the chain
/// has several closed classes.
///
/// Runs the power iteration of the lazy chain `(I + T)/2` from every point
/// mass at once by repeated squaring; the limit rows must agree.
fn stationary_law(rows: &DMatrix<f64>) -> Result<Distribution> {
    const AGREEMENT_TOL: f64 = 1e-9;
    let n = rows.nrows();
    let mut m = (DMatrix::identity(n, n) + rows) * 0.5;
    let mut converged = false;
    for _ in 0..80 {
        let next = renormalize_rows(&m * &m);
        let delta = (&next - &m).amax();
        m = next;
        if delta <= 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonUniqueStationary(
            "power iteration did not settle".into(),
        ));
    }
    let first = m.row(0).clone_owned();
    for x in 1..n {
        let gap = (m.row(x) - &first).amax();
        if gap > AGREEMENT_TOL {
            return Err(Error::NonUniqueStationary(format!(
                "starts 0 and {x} converge to laws {gap:e} apart"
            )));
        }
    }
    let mut pi: Vec<f64> = (0..n).map(|y| m.column(y).mean()).collect();
    // A few plain power steps polish the averaged rows.
    for _ in 0..4 {
        let mut next = vec![0.0; n];
        for x in 0..n {
            for (y, v) in next.iter_mut().enumerate() {
                *v += pi[x] * rows[(x, y)];
            }
        }
        let s: f64 = next.iter().sum();
        pi = next.into_iter().map(|v| v / s).collect();
    }
    Distribution::from_weights(pi)
}

/// A probability density with respect to a reference law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityFn {
    values: Vec<f64>,
    #[serde(skip)]
    pi: Distribution,
}

impl DensityFn {
    /// Validates `sum pi(x) f(x) = 1` within [`SUM_TOL`] and renormalizes.
    pub fn new(values: Vec<f64>, pi: &Distribution) -> Result<Self> {
        check_len(pi.len(), values.len())?;
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::BadParameter(format!("density entry {i} is {v}")));
        }
        let mass: f64 = values.iter().zip(pi.as_slice()).map(|(f, p)| f * p).sum();
        if (mass - 1.0).abs() > SUM_TOL {
            return Err(Error::NotNormalized(format!("density integrates to {mass}")));
        }
        Ok(Self {
            values: values.into_iter().map(|v| v / mass).collect(),
            pi: pi.clone(),
        })
    }

    /// Density `1`, i.e. `mu = pi`.
    pub fn constant(pi: &Distribution) -> Self {
        Self {
            values: vec![1.0; pi.len()],
            pi: pi.clone(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pi(&self) -> &Distribution {
        &self.pi
    }

    /// The measure `f dpi`.
    pub fn to_distribution(&self) -> Distribution {
        let w = self
            .values
            .iter()
            .zip(self.pi.as_slice())
            .map(|(f, p)| f * p)
            .collect();
        Distribution::from_weights(w).expect("density has unit mass")
    }

    /// `(1 - eps) f + eps`.
    pub fn smoothed(&self, eps: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| (1.0 - eps) * v + eps).collect(),
            pi: self.pi.clone(),
        }
    }
}

/// `d mu / d pi`.
pub fn density_of(mu: &Distribution, pi: &Distribution) -> Result<DensityFn> {
    check_len(pi.len(), mu.len())?;
    for (state, &mass) in pi.as_slice().iter().enumerate() {
        if mass < DEFAULT_PI_FLOOR {
            return Err(Error::ZeroMass {
                state,
                mass,
                floor: DEFAULT_PI_FLOOR,
            });
        }
    }
    let values: Vec<f64> = mu
        .as_slice()
        .iter()
        .zip(pi.as_slice())
        .map(|(m, p)| m / p)
        .collect();
    let mass: f64 = values.iter().zip(pi.as_slice()).map(|(f, p)| f * p).sum();
    Ok(DensityFn {
        values: values.into_iter().map(|v| v / mass).collect(),
        pi: pi.clone(),
    })
}

/// Standard test chains.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Every row equal to `pi` (uniform when absent).
    Projection { n: usize, pi: Option<Distribution> },
    Identity { n: usize, pi: Option<Distribution> },
    /// Keep the bit with probability `(1 + rho)/2` on a uniform two-point space.
    TwoPointNoise { rho: f64 },
    /// Stay with probability `laziness`, otherwise step to a uniform neighbour on the cycle.
    LazyRing { n: usize, laziness: f64 },
    /// Jump to a uniform other vertex.
    CompleteGraph { n: usize },
    /// Random kernel reversible with respect to a random positive law.
    RandomReversible { n: usize, seed: u64 },
    /// Random strictly positive rows; the stationary law is computed.
    Random { n: usize, seed: u64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Projection { .. } => "projection",
            Family::Identity { .. } => "identity",
            Family::TwoPointNoise { .. } => "two_point_noise",
            Family::LazyRing { .. } => "lazy_ring",
            Family::CompleteGraph { .. } => "complete_graph",
            Family::RandomReversible { .. } => "random_reversible",
            Family::Random { .. } => "random",
        }
    }
}

fn need_states(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::BadParameter(format!("need n >= 2, got {n}")));
    }
    Ok(())
}

fn need_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::BadParameter(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

pub fn make_family(family: &Family) -> Result<Kernel> {
    let opts = ValidationOptions::default();
    match family {
        Family::Projection { n, pi } => {
            need_states(*n)?;
            let pi = pi.clone().unwrap_or_else(|| Distribution::uniform(*n));
            check_len(*n, pi.len())?;
            let rows = DMatrix::from_fn(*n, *n, |_, y| pi[y]);
            Kernel::from_matrix(rows, Some(pi), &opts)
        }
        Family::Identity { n, pi } => {
            need_states(*n)?;
            let pi = pi.clone().unwrap_or_else(|| Distribution::uniform(*n));
            check_len(*n, pi.len())?;
            Kernel::from_matrix(DMatrix::identity(*n, *n), Some(pi), &opts)
        }
        Family::TwoPointNoise { rho } => {
            need_unit("rho", *rho)?;
            let stay = (1.0 + rho) / 2.0;
            let flip = (1.0 - rho) / 2.0;
            let rows = DMatrix::from_row_slice(2, 2, &[stay, flip, flip, stay]);
            Kernel::from_matrix(rows, Some(Distribution::uniform(2)), &opts)
        }
        Family::LazyRing { n, laziness } => {
            need_states(*n)?;
            need_unit("laziness", *laziness)?;
            let n = *n;
            let step = (1.0 - laziness) / 2.0;
            let mut rows = DMatrix::zeros(n, n);
            for x in 0..n {
                rows[(x, x)] += laziness;
                rows[(x, (x + 1) % n)] += step;
                rows[(x, (x + n - 1) % n)] += step;
            }
            Kernel::from_matrix(rows, Some(Distribution::uniform(n)), &opts)
        }
        Family::CompleteGraph { n } => {
            need_states(*n)?;
            let n = *n;
            let off = 1.0 / (n - 1) as f64;
            let rows = DMatrix::from_fn(n, n, |x, y| if x == y { 0.0 } else { off });
            Kernel::from_matrix(rows, Some(Distribution::uniform(n)), &opts)
        }
        Family::RandomReversible { n, seed } => {
            need_states(*n)?;
            let n = *n;
            let mut rng = stream_rng(*seed, 0x5eed_0001);
            let pi = Distribution::from_weights(
                (0..n).map(|_| 0.2 + rng.random::<f64>()).collect(),
            )?;
            let mut conductance = DMatrix::zeros(n, n);
            for x in 0..n {
                for y in (x + 1)..n {
                    let c: f64 = rng.random();
                    conductance[(x, y)] = c;
                    conductance[(y, x)] = c;
                }
            }
            let max_escape = (0..n)
                .map(|x| conductance.row(x).sum() / pi[x])
                .fold(0.0_f64, f64::max);
            let scale = (0.5 + 0.5 * rng.random::<f64>()) / max_escape;
            let mut rows = DMatrix::zeros(n, n);
            for x in 0..n {
                let mut off = 0.0;
                for y in 0..n {
                    if y != x {
                        let v = scale * conductance[(x, y)] / pi[x];
                        rows[(x, y)] = v;
                        off += v;
                    }
                }
                rows[(x, x)] = 1.0 - off;
            }
            Kernel::from_matrix(rows, Some(pi), &opts)
        }
        Family::Random { n, seed } => {
            need_states(*n)?;
            let n = *n;
            let mut rng = stream_rng(*seed, 0x5eed_0002);
            let mut rows = DMatrix::from_fn(n, n, |_, _| 0.01 + rng.random::<f64>());
            rows = renormalize_rows(rows);
            Kernel::from_matrix(rows, None, &opts)
        }
    }
}
