//! Entropy contraction: the best coefficient `theta` with
//! `H(mu T | pi) <= theta H(mu | pi)`, a falsification harness for the
//! `p/q` contraction of hypercontractive kernels, and a step-by-step replay
//! of the duality argument behind it.

use rand::Rng;
use rand_distr::{Distribution as _, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::budget::{stream_rng, OptBudget};
use crate::error::{check_len, Error, Result};
use crate::hyper::{is_hypercontractive, is_hypercontractive_with, HyperCertificate, HyperParams};
use crate::kernel::{density_of, DensityFn, Distribution, Kernel};
use crate::measures::{density_entropy, kl_raw, lp_raw};

/// Slack allowed on `H(mu T) <= (p/q) H(mu)`.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Default smoothing weight for densities with zeros.
pub const DEFAULT_SMOOTHING: f64 = 1e-12;
/// Log-density clamp for the exponential parametrization.
const LOG_CLAMP: f64 = 40.0;
/// Below this `H(mu | pi)` the law is within ~1e-8 of `pi` and the ratio is
/// dominated by rounding, so such candidates are not scored.
const MIN_ENTROPY: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionEstimate {
    /// Largest ratio found; a lower bound on the contraction coefficient.
    pub theta_lower: f64,
    pub witness_mu: Distribution,
    pub n_evals: usize,
}

/// `H(mu T | pi) / H(mu | pi)` together with both entropies.
fn ratio_parts(t: &Kernel, mu: &[f64]) -> (f64, f64) {
    let pi = t.pi().as_slice();
    let n = mu.len();
    let mut pushed = vec![0.0; n];
    for (x, &m) in mu.iter().enumerate() {
        if m != 0.0 {
            for (y, p) in pushed.iter_mut().enumerate() {
                *p += m * t.entry(x, y);
            }
        }
    }
    (kl_raw(&pushed, pi), kl_raw(mu, pi))
}

fn ratio(t: &Kernel, mu: &[f64]) -> f64 {
    let (num, den) = ratio_parts(t, mu);
    if den > MIN_ENTROPY {
        num / den
    } else {
        f64::NEG_INFINITY
    }
}

fn softmax_law(pi: &[f64], v: &[f64]) -> Vec<f64> {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = pi
        .iter()
        .zip(v)
        .map(|(p, vi)| p * (vi - top).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Gradient of the ratio in the coordinates `mu ∝ pi e^v`.
fn ratio_gradient(t: &Kernel, mu: &[f64]) -> Option<(f64, Vec<f64>)> {
    let pi = t.pi().as_slice();
    let pushed = t.act_measure_raw(mu);
    let num = kl_raw(&pushed, pi);
    let den = kl_raw(mu, pi);
    if !(den > MIN_ENTROPY) {
        return None;
    }
    let r = num / den;
    let log_push: Vec<f64> = pushed.iter().zip(pi).map(|(a, b)| (a / b).ln()).collect();
    let t_log = t.apply(&log_push);
    let g: Vec<f64> = (0..mu.len())
        .map(|x| (t_log[x] - r * (mu[x] / pi[x]).ln()) / den)
        .collect();
    let mean: f64 = mu.iter().zip(&g).map(|(m, gi)| m * gi).sum();
    Some((r, mu.iter().zip(&g).map(|(m, gi)| m * (gi - mean)).collect()))
}

/// Gradient ascent with an adaptive step on `v`; returns the best
/// `(ratio, mu)` and the number of ratio evaluations.
fn mirror_ascent(t: &Kernel, mut v: Vec<f64>, max_iter: usize) -> (f64, Vec<f64>, usize) {
    let pi = t.pi().as_slice();
    let clamp = |v: &mut Vec<f64>| {
        let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        v.iter_mut().for_each(|x| *x = (*x - top).max(-LOG_CLAMP));
    };
    clamp(&mut v);
    let mut mu = softmax_law(pi, &v);
    let mut evals = 1;
    let Some((mut r, mut grad)) = ratio_gradient(t, &mu) else {
        return (f64::NEG_INFINITY, mu, evals);
    };
    let mut step = 1.0;
    for _ in 0..max_iter {
        let gnorm = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
        if gnorm == 0.0 || step < 1e-14 {
            break;
        }
        let mut cand: Vec<f64> = v
            .iter()
            .zip(&grad)
            .map(|(vi, gi)| vi + step * gi / gnorm)
            .collect();
        clamp(&mut cand);
        let cand_mu = softmax_law(pi, &cand);
        evals += 1;
        match ratio_gradient(t, &cand_mu) {
            Some((cr, cg)) if cr > r => {
                v = cand;
                mu = cand_mu;
                r = cr;
                grad = cg;
                step = (step * 1.5).min(8.0);
            }
            _ => step *= 0.5,
        }
    }
    (r, mu, evals)
}

/// Second right-singular direction of `T*` on mean-zero functions: the
/// direction that maximizes the ratio in the limit `mu -> pi`.
fn linearized_direction(t: &Kernel, adj: &Kernel, seed: u64) -> Vec<f64> {
    let pi = t.pi().as_slice();
    let n = t.n();
    let mut rng = stream_rng(seed, 0x00d1_0000);
    let mut d: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let center = |d: &mut Vec<f64>| {
        let m: f64 = d.iter().zip(pi).map(|(a, b)| a * b).sum();
        d.iter_mut().for_each(|x| *x -= m);
        let norm = lp_raw(d, pi, 2.0);
        if norm > 0.0 {
            d.iter_mut().for_each(|x| *x /= norm);
        }
    };
    center(&mut d);
    for _ in 0..500 {
        let mut next = t.apply(&adj.apply(&d));
        center(&mut next);
        let delta = next
            .iter()
            .zip(&d)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        d = next;
        if delta < 1e-13 {
            break;
        }
    }
    d
}

fn perturbed(pi: &[f64], d: &[f64], scale: f64) -> Option<Vec<f64>> {
    let top = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if top == 0.0 {
        return None;
    }
    let mu: Vec<f64> = pi
        .iter()
        .zip(d)
        .map(|(p, di)| p * (1.0 + scale * di / top))
        .collect();
    let s: f64 = mu.iter().sum();
    Some(mu.into_iter().map(|m| m / s).collect())
}

/// Lower bound on `sup_{mu != pi} H(mu T | pi) / H(mu | pi)`.
///
/// Candidates: every point mass; gradient ascent in `mu ∝ pi e^v` from
/// `budget.n_random` random starts plus the best point mass and the
/// linearized direction; and probes `pi (1 + s d)` at `s = 1e-2, 1e-4` along
/// random and linearized directions `d`.
pub fn theta_star(t: &Kernel, budget: &OptBudget) -> ContractionEstimate {
    let n = t.n();
    let pi = t.pi().as_slice().to_vec();
    let adj = t.adjoint();
    let mut best_r = f64::NEG_INFINITY;
    let mut best_mu = Distribution::point_mass(n, 0).into_vec();
    let mut evals = 0usize;
    let offer = |r: f64, mu: &[f64], best_r: &mut f64, best_mu: &mut Vec<f64>| {
        if r > *best_r {
            *best_r = r;
            *best_mu = mu.to_vec();
        }
    };

    for x in 0..n {
        let mu = Distribution::point_mass(n, x).into_vec();
        evals += 1;
        offer(ratio(t, &mu), &mu, &mut best_r, &mut best_mu);
    }

    let lin = linearized_direction(t, &adj, budget.seed);
    let mut directions = vec![lin.clone()];
    for k in 0..budget.n_random {
        let mut rng = stream_rng(budget.seed, 0x0d12_0000 + k as u64);
        directions.push((0..n).map(|_| rng.random::<f64>() - 0.5).collect());
    }
    for d in &directions {
        for scale in [1e-2, 1e-4] {
            if let Some(mu) = perturbed(&pi, d, scale) {
                evals += 1;
                offer(ratio(t, &mu), &mu, &mut best_r, &mut best_mu);
            }
        }
    }

    let log_of = |mu: &[f64]| -> Vec<f64> {
        mu.iter()
            .zip(&pi)
            .map(|(m, p)| if *m > 0.0 { (m / p).ln() } else { -LOG_CLAMP })
            .collect()
    };
    let mut ascent_starts = vec![log_of(&best_mu)];
    if let Some(mu) = perturbed(&pi, &lin, 0.5) {
        ascent_starts.push(log_of(&mu));
    }
    for k in 0..budget.n_random {
        let mut rng = stream_rng(budget.seed, 0x0a5c_0000 + k as u64);
        let spread = 0.5 + 6.0 * rng.random::<f64>();
        ascent_starts.push((0..n).map(|_| spread * (rng.random::<f64>() - 0.5)).collect());
    }
    let iters = budget.max_iter.min(2_000);
    let runs: Vec<(f64, Vec<f64>, usize)> = ascent_starts
        .into_par_iter()
        .map(|v| mirror_ascent(t, v, iters))
        .collect();
    for (r, mu, e) in runs {
        evals += e;
        offer(r, &mu, &mut best_r, &mut best_mu);
    }

    let witness_mu = Distribution::from_weights(best_mu).expect("candidate is a law");
    let theta_lower = ratio(t, witness_mu.as_slice()).max(0.0);
    ContractionEstimate {
        theta_lower,
        witness_mu,
        n_evals: evals,
    }
}

/// How a tested law was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    PointMass,
    Dirichlet,
    NearBoundary,
    ThetaWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub kind: SampleKind,
    pub mu: Vec<f64>,
    pub h_mu: f64,
    pub h_mu_t: f64,
    /// `H(mu T) - (p/q) H(mu)`.
    pub excess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Hypothesis certified; violations, if any, are real counterexamples
    /// to the implementation.
    Certified,
    /// Hypothesis unmet; the contraction figures are informational.
    NotHypercontractive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub verdict: Verdict,
    pub certified_hc: bool,
    pub certificate: HyperCertificate,
    pub p: f64,
    pub q: f64,
    /// `p / q`.
    pub theta: f64,
    /// Laws with `H(mu T) > (p/q) H(mu) + 1e-9`, sorted by sample index.
    pub violations: Vec<Violation>,
    /// Largest observed `H(mu T) / H(mu)`.
    pub max_ratio: f64,
    pub n_checked: usize,
}

impl TheoremReport {
    /// Surfaces an unmet hypothesis as an error value.
    pub fn require_certified(self) -> Result<Self> {
        match self.verdict {
            Verdict::Certified => Ok(self),
            Verdict::NotHypercontractive => Err(Error::NotHypercontractive {
                p: self.p,
                q: self.q,
                margin: self.certificate.margin,
            }),
        }
    }

    /// Certified hypothesis with a failed contraction check.
    pub fn has_theorem_violation(&self) -> bool {
        self.certified_hc && !self.violations.is_empty()
    }
}

/// Laws checked by [`verify_theorem`], tagged by origin.
pub(crate) fn sample_laws(n: usize, pi: &[f64], n_samples: usize, seed: u64) -> Vec<(SampleKind, Vec<f64>)> {
    let mut out = Vec::with_capacity(n_samples + 4 * n);
    for x in 0..n {
        out.push((SampleKind::PointMass, Distribution::point_mass(n, x).into_vec()));
    }
    let alphas = [0.1, 1.0, 10.0];
    for k in 0..n_samples {
        let alpha = alphas[k % alphas.len()];
        let gamma = Gamma::new(alpha, 1.0).expect("positive shape");
        let mut rng = stream_rng(seed, 0xd1d1_0000 + k as u64);
        let mu = loop {
            let w: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng)).collect();
            let s: f64 = w.iter().sum();
            if s > 0.0 && s.is_finite() {
                break w.into_iter().map(|v| v / s).collect::<Vec<_>>();
            }
        };
        out.push((SampleKind::Dirichlet, mu));
    }
    for x in 0..n {
        for eps in [1e-3, 1e-6] {
            let mu: Vec<f64> = (0..n)
                .map(|y| (1.0 - eps) * f64::from(u8::from(x == y)) + eps * pi[y])
                .collect();
            out.push((SampleKind::NearBoundary, mu));
        }
        // pi conditioned to avoid x.
        let mut mu = pi.to_vec();
        mu[x] = 0.0;
        let s: f64 = mu.iter().sum();
        out.push((SampleKind::NearBoundary, mu.into_iter().map(|v| v / s).collect()));
    }
    out
}

/// Checks `H(mu T | pi) <= (p/q) H(mu | pi)` on point masses, `n_samples`
/// Dirichlet laws (shapes 0.1, 1 and 10 in turn), near-boundary laws and the
/// [`theta_star`] witness, after certifying hypercontractivity.
pub fn verify_theorem(t: &Kernel, hp: &HyperParams, n_samples: usize, seed: u64) -> Result<TheoremReport> {
    verify_theorem_with(t, hp, n_samples, &OptBudget::default().with_seed(seed))
}

/// [`verify_theorem`] with an explicit optimizer budget; `budget.seed` also
/// seeds the sampled laws.
pub fn verify_theorem_with(
    t: &Kernel,
    hp: &HyperParams,
    n_samples: usize,
    budget: &OptBudget,
) -> Result<TheoremReport> {
    let certificate = is_hypercontractive_with(t, hp, budget)?;
    let n = t.n();
    let pi = t.pi().as_slice();
    let theta = hp.theta();
    let mut laws = sample_laws(n, pi, n_samples, budget.seed);
    let witness = theta_star(t, budget);
    laws.push((SampleKind::ThetaWitness, witness.witness_mu.into_vec()));

    let evaluated: Vec<(f64, Option<Violation>)> = laws
        .into_par_iter()
        .enumerate()
        .map(|(index, (kind, mu))| {
            let (h_mu_t, h_mu) = ratio_parts(t, &mu);
            let r = if h_mu > 1e-12 { h_mu_t / h_mu } else { f64::NEG_INFINITY };
            let excess = h_mu_t - theta * h_mu;
            let v = (excess > VIOLATION_TOL).then(|| Violation {
                index,
                kind,
                mu,
                h_mu,
                h_mu_t,
                excess,
            });
            (r, v)
        })
        .collect();
    let n_checked = evaluated.len();
    let max_ratio = evaluated
        .iter()
        .map(|(r, _)| *r)
        .fold(0.0_f64, f64::max);
    let violations: Vec<Violation> = evaluated.into_iter().filter_map(|(_, v)| v).collect();
    let certified_hc = certificate.holds;
    Ok(TheoremReport {
        verdict: if certified_hc {
            Verdict::Certified
        } else {
            Verdict::NotHypercontractive
        },
        certified_hc,
        certificate,
        p: hp.p(),
        q: hp.q(),
        theta,
        violations,
        max_ratio,
        n_checked,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Passed,
    Failed,
    /// The step's premise does not hold, so nothing is asserted.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCheck {
    pub step: u8,
    pub name: &'static str,
    pub status: StepStatus,
    /// The quantity compared against its bound (a residual or a slack).
    pub value: f64,
    pub tolerance: f64,
}

/// Every intermediate quantity of the duality argument for one density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProofTrace {
    pub p: f64,
    pub q: f64,
    pub f: Vec<f64>,
    /// Density of `mu T`, computed as `T* f`.
    pub tstar_f: Vec<f64>,
    /// `(T* f)^(1/p)`.
    pub g: Vec<f64>,
    /// `∫ (T g)^q dpi`.
    pub hyper_integral: f64,
    /// `min_x (T e^h - e^(T h))(x)` for `h = log(T* f) / p`.
    pub jensen_min_slack: f64,
    /// `(q/p) T log T* f`.
    pub phi: Vec<f64>,
    /// `∫ e^phi dpi`.
    pub exp_phi_integral: f64,
    /// `∫ f phi dpi`.
    pub lhs: f64,
    /// `|∫ f phi dpi - (q/p) H(mu T | pi)|`.
    pub duality_residual: f64,
    /// `∫ f log f dpi = H(mu | pi)`.
    pub rhs: f64,
    pub hypothesis_holds: bool,
    pub smoothing: Option<f64>,
    pub step_flags: Vec<StepCheck>,
    /// Trace of the unsmoothed density when smoothing was applied and the
    /// raw quantities are finite.
    pub raw: Option<Box<ProofTrace>>,
}

impl ProofTrace {
    pub fn step(&self, step: u8) -> &StepCheck {
        &self.step_flags[usize::from(step) - 1]
    }

    pub fn all_applicable_passed(&self) -> bool {
        self.step_flags.iter().all(|s| s.status != StepStatus::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceOptions {
    /// Replace `f` by `(1 - eps) f + eps` when `f` has zeros.
    pub smoothing: Option<f64>,
    /// Skip the hypercontractivity check and use this verdict.
    pub hypothesis: Option<bool>,
}

/// Replays the duality argument on `f`, checking each step numerically.
///
/// Steps 1, 3 and 5 hold for every kernel; 2 and 4 need the
/// hypercontractivity hypothesis; 6 needs step 4.
pub fn proof_trace(t: &Kernel, f: &DensityFn, hp: &HyperParams, opts: &TraceOptions) -> Result<ProofTrace> {
    check_len(t.n(), f.values().len())?;
    let hypothesis = match opts.hypothesis {
        Some(h) => h,
        None => is_hypercontractive(t, hp)?.holds,
    };
    let zero = f.values().iter().position(|&v| v <= 0.0);
    match (zero, opts.smoothing) {
        (Some(state), None) => Err(Error::ZeroDensity { state }),
        (Some(_), Some(eps)) => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::BadParameter(format!("smoothing weight {eps}")));
            }
            let mut trace = trace_density(t, f, hp, hypothesis);
            trace.smoothing = Some(eps);
            let smoothed = trace_density(t, &f.smoothed(eps), hp, hypothesis);
            let raw = std::mem::replace(&mut trace, smoothed);
            trace.smoothing = Some(eps);
            let finite = raw.phi.iter().all(|v| v.is_finite()) && raw.lhs.is_finite();
            trace.raw = finite.then(|| Box::new(raw));
            Ok(trace)
        }
        (None, _) => Ok(trace_density(t, f, hp, hypothesis)),
    }
}

fn trace_density(t: &Kernel, f: &DensityFn, hp: &HyperParams, hypothesis: bool) -> ProofTrace {
    let (p, q) = (hp.p(), hp.q());
    let pi = t.pi().as_slice();
    let fv = f.values().to_vec();
    let integral = |v: &[f64]| -> f64 { v.iter().zip(pi).map(|(a, b)| a * b).sum() };

    let adj = t.adjoint();
    let tstar_f = adj.apply(&fv);
    let mu = f.to_distribution();
    let pushed = t.act_measure(&mu).expect("dimensions checked");
    let direct = density_of(&pushed, t.pi()).expect("pi is positive");
    let step1 = tstar_f
        .iter()
        .zip(direct.values())
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);

    let log_tf: Vec<f64> = tstar_f.iter().map(|v| v.ln()).collect();
    let g: Vec<f64> = tstar_f.iter().map(|v| v.powf(1.0 / p)).collect();
    let tg = t.apply(&g);
    let hyper_integral = lp_raw(&tg, pi, q).powf(q);

    let h: Vec<f64> = log_tf.iter().map(|v| v / p).collect();
    let th = t.apply(&h);
    let jensen_min_slack = tg
        .iter()
        .zip(&th)
        .map(|(a, b)| (a - b.exp()) / a.abs().max(1.0))
        .fold(f64::INFINITY, f64::min);

    let phi: Vec<f64> = t.apply(&log_tf).into_iter().map(|v| q / p * v).collect();
    let exp_phi_integral = integral(&phi.iter().map(|v| v.exp()).collect::<Vec<_>>());
    let lhs: f64 = fv
        .iter()
        .zip(&phi)
        .zip(pi)
        .map(|((fx, ph), w)| if *fx == 0.0 { 0.0 } else { fx * ph * w })
        .sum();
    let h_push = kl_raw(pushed.as_slice(), pi);
    let duality_residual = (lhs - q / p * h_push).abs();
    let rhs = density_entropy(&fv, pi);

    let status = |ok: bool| if ok { StepStatus::Passed } else { StepStatus::Failed };
    let gated = |premise: bool, ok: bool| {
        if premise {
            status(ok)
        } else {
            StepStatus::NotApplicable
        }
    };
    // The hypothesis is certified up to cert_tol on the norm, which the
    // q-th power inflates by a factor of about q.
    let hyp_tol = 1e-9 + q * hp.cert_tol();
    let tol5 = 1e-8 * lhs.abs().max(1.0);
    let step2_ok = hyper_integral <= 1.0 + hyp_tol;
    let step4_ok = exp_phi_integral <= 1.0 + hyp_tol;
    let step4_status = gated(hypothesis, step4_ok);
    // rhs - lhs >= 1 - ∫ e^phi, so any excess of ∫ e^phi over 1 carries over.
    let tol6 = 1e-9 + (exp_phi_integral - 1.0).max(0.0);
    let step_flags = vec![
        StepCheck {
            step: 1,
            name: "pushforward density equals adjoint applied to f",
            status: status(step1 <= 1e-9),
            value: step1,
            tolerance: 1e-9,
        },
        StepCheck {
            step: 2,
            name: "hypercontractivity applied to g",
            status: gated(hypothesis, step2_ok),
            value: hyper_integral,
            tolerance: hyp_tol,
        },
        StepCheck {
            step: 3,
            name: "jensen e^(Th) <= T e^h",
            status: status(jensen_min_slack >= -1e-12),
            value: jensen_min_slack,
            tolerance: 1e-12,
        },
        StepCheck {
            step: 4,
            name: "integral of e^phi at most one",
            status: step4_status,
            value: exp_phi_integral,
            tolerance: hyp_tol,
        },
        StepCheck {
            step: 5,
            name: "duality with g = log T* f",
            status: status(duality_residual <= tol5),
            value: duality_residual,
            tolerance: tol5,
        },
        StepCheck {
            step: 6,
            name: "variational entropy bound",
            status: gated(step4_status == StepStatus::Passed, lhs <= rhs + tol6),
            value: rhs - lhs,
            tolerance: tol6,
        },
    ];
    ProofTrace {
        p,
        q,
        f: fv,
        tstar_f,
        g,
        hyper_integral,
        jensen_min_slack,
        phi,
        exp_phi_integral,
        lhs,
        duality_residual,
        rhs,
        hypothesis_holds: hypothesis,
        smoothing: None,
        step_flags,
        raw: None,
    }
}
