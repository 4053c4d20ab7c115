//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use hyperent::oracle::{grid_lsi, grid_opnorm, grid_theta_star};
use hyperent::semigroup::{
    dynamic_factor, elementary_estimate_slack, lsi_spectral_lower_bound, static_factor,
};
use hyperent::{
    bound_dynamic, bound_static, density_of, is_hypercontractive, lsi_constant, make_family,
    mlsi_constant, opnorm, proof_trace, t_mix_exact, theta_star, transition_at, verify_theorem,
    DensityFn, Distribution, Family, Generator, HyperParams, Kernel, OptBudget, StepStatus,
    TraceOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_law(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn random_density(k: &Kernel, r: &mut ChaCha8Rng) -> DensityFn {
    let mu = Distribution::new(random_law(k.n(), r)).unwrap();
    density_of(&mu, k.pi()).unwrap()
}

fn dot_pi(a: &[f64], b: &[f64], pi: &[f64]) -> f64 {
    a.iter().zip(b).zip(pi).map(|((x, y), p)| x * y * p).sum()
}

/// The i-th kernel of the falsification corpus.
fn corpus_kernel(i: usize, r: &mut ChaCha8Rng) -> Family {
    let n = 2 + (i / 5) % 7;
    let seed = 1000 + i as u64;
    match i % 5 {
        0 => Family::Random { n, seed },
        1 => Family::RandomReversible { n, seed },
        2 => Family::LazyRing {
            n: n.max(3),
            laziness: 0.1 + 0.8 * r.random::<f64>(),
        },
        3 => Family::CompleteGraph { n },
        _ => Family::TwoPointNoise {
            rho: r.random::<f64>(),
        },
    }
}

fn criterion_1() -> Outcome {
    let pairs = [(1.0, 2.0), (2.0, 3.0), (2.0, 4.0), (1.5, 3.0), (2.0, 2.0)];
    let mut r = rng(1);
    let (mut certified, mut checked, mut min_laws) = (0, 0, usize::MAX);
    let mut failures = Vec::new();
    for i in 0..200 {
        let t = make_family(&corpus_kernel(i, &mut r)).unwrap();
        for (j, &(p, q)) in pairs.iter().enumerate() {
            let hp = HyperParams::new(p, q).unwrap();
            let rep = verify_theorem(&t, &hp, 1000, (i * 10 + j) as u64).unwrap();
            checked += 1;
            min_laws = min_laws.min(rep.n_checked);
            if rep.certified_hc {
                certified += 1;
                if !rep.violations.is_empty() {
                    failures.push(format!("kernel {i} (p,q)=({p},{q})"));
                }
            }
        }
    }
    outcome(
        failures.is_empty() && min_laws >= 1000,
        format!(
            "{checked} kernel/(p,q) cases, {certified} certified, >= {min_laws} laws each, violations in {:?}",
            failures
        ),
    )
}

fn criterion_2() -> Outcome {
    let hp = HyperParams::new(2.0, 4.0).unwrap();
    let mut found = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut seed = 0;
    while found < 50 && seed < 5000 {
        let t = make_family(&Family::Random { n: 2, seed }).unwrap();
        seed += 1;
        let cert = is_hypercontractive(&t, &hp).unwrap();
        if !(cert.holds && cert.estimate.grid_certified) {
            continue;
        }
        found += 1;
        worst = worst.max(grid_theta_star(&t, 1e-4).unwrap());
    }
    outcome(
        found == 50 && worst <= 0.5 + 1e-3,
        format!("{found} certified kernels, max grid ratio {worst:.6} (limit 0.501)"),
    )
}

/// Largest rho in [0, 1] for which `holds(rho)`, by bisection.
fn threshold(holds: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-5 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [3.0f64, 4.0, 9.0] {
        let hp = HyperParams::new(2.0, q).unwrap();
        let kernel = |rho: f64| make_family(&Family::TwoPointNoise { rho }).unwrap();
        let empirical = threshold(|rho| is_hypercontractive(&kernel(rho), &hp).unwrap().holds);
        let oracle = threshold(|rho| grid_opnorm(&kernel(rho), &hp, 1e-4).unwrap() <= 1.0 + 1e-9);
        let exact = 1.0 / (q - 1.0).sqrt();
        ok &= (empirical - exact).abs() <= 5e-3 && (oracle - exact).abs() <= 5e-3;
        parts.push(format!("q={q}: {empirical:.5} / grid {oracle:.5} vs {exact:.5}"));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let pairs = [(2.0, 4.0), (2.0, 3.0), (1.5, 3.0), (2.0, 2.0), (1.2, 4.0)];
    let mut r = rng(4);
    let (mut conditional, mut failures) = (0, Vec::new());
    let mut worst_residual: f64 = 0.0;
    for i in 0..100u64 {
        let n = 2 + (i as usize % 5);
        let fam = match i % 3 {
            0 => Family::Random { n, seed: 4000 + i },
            1 => Family::RandomReversible { n, seed: 4000 + i },
            _ => Family::TwoPointNoise {
                rho: r.random::<f64>(),
            },
        };
        let t = make_family(&fam).unwrap();
        let f = random_density(&t, &mut r);
        let (p, q) = pairs[i as usize % pairs.len()];
        let hp = HyperParams::new(p, q).unwrap();
        let tr = proof_trace(&t, &f, &hp, &TraceOptions::default()).unwrap();
        worst_residual = worst_residual
            .max(tr.step(1).value)
            .max(tr.step(5).value)
            .max(-tr.step(3).value);
        let unconditional = [1, 3, 5]
            .iter()
            .all(|&k| tr.step(k).status == StepStatus::Passed)
            && tr.step(1).value <= 1e-8
            && tr.step(5).value <= 1e-8
            && tr.step(3).value >= -1e-8;
        let mut good = unconditional;
        if tr.hypothesis_holds {
            conditional += 1;
            good &= [2, 4, 6]
                .iter()
                .all(|&k| tr.step(k).status == StepStatus::Passed);
        }
        if !good {
            failures.push(i);
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "100 traces, {conditional} with hypothesis, worst unconditional residual {worst_residual:.2e}, failing {failures:?}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let budget = OptBudget::default();
    let mut worst = f64::INFINITY;
    for i in 0..50u64 {
        let n = 2 + (i as usize % 4);
        let l = Generator::random_reversible(n, 5000 + i).unwrap();
        let lsi = lsi_constant(&l, &budget).beta_upper;
        let mlsi = mlsi_constant(&l, &budget).beta_upper;
        worst = worst.min(mlsi - 2.0 * lsi);
    }
    let mut slack = f64::INFINITY;
    let k = 100;
    for i in 0..k {
        for j in 0..k {
            // log-spaced over [1e-4, 1e4]
            let a = 10f64.powf(-4.0 + 8.0 * i as f64 / (k - 1) as f64);
            let b = 10f64.powf(-4.0 + 8.0 * j as f64 / (k - 1) as f64);
            slack = slack.min(elementary_estimate_slack(a, b));
        }
    }
    outcome(
        worst >= -1e-6 && slack >= -1e-12,
        format!("min mlsi - 2 lsi = {worst:.3e} over 50 generators; min elementary slack {slack:.3e} over 10^4 points"),
    )
}

fn criterion_6() -> Outcome {
    let mut min_slack = f64::INFINITY;
    for beta in [0.1, 1.0, 10.0] {
        for k in 0..100 {
            let t = 10f64.powf(-3.0 + 5.0 * k as f64 / 99.0);
            min_slack = min_slack.min(dynamic_factor(beta, t) - static_factor(beta, t));
        }
    }
    let l = Generator::flip(1.0).unwrap();
    let beta = grid_lsi(&l, 1e-4).unwrap().certified_beta();
    let mut excess = f64::NEG_INFINITY;
    for t in [0.25, 0.5, 1.0, 2.0] {
        let p_t = transition_at(&l, t).unwrap();
        let th = theta_star(&p_t, &OptBudget::default()).theta_lower;
        excess = excess.max(th - static_factor(beta, t));
    }
    outcome(
        min_slack >= -1e-15 && excess <= 2e-3,
        format!("min dynamic - static {min_slack:.3e}; flip (beta {beta:.6}) max theta* - static {excess:.3e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut chains = vec![("flip".to_string(), Generator::flip(1.0).unwrap())];
    for n in 3..=6 {
        chains.push((format!("cycle{n}"), Generator::cycle(n, 1.0).unwrap()));
    }
    let mut ok = true;
    let mut worst_gap = f64::INFINITY;
    for (name, l) in &chains {
        let beta = if l.n() == 2 {
            grid_lsi(l, 1e-4).unwrap().certified_beta()
        } else {
            lsi_spectral_lower_bound(l).unwrap()
        };
        let pi_star = l.pi().min_mass();
        for eps in [0.25, 0.1, 0.01] {
            let t = t_mix_exact(l, eps).unwrap();
            let s = bound_static(eps, beta, pi_star).unwrap();
            let d = bound_dynamic(eps, beta, pi_star).unwrap();
            if !(t <= s && s == d / 2.0) {
                ok = false;
                eprintln!("  {name} eps={eps}: t_mix {t} static {s} dynamic {d}");
            }
            worst_gap = worst_gap.min(s - t);
        }
    }
    outcome(
        ok,
        format!("flip + cycles 3..6 at 3 eps values, min bound_static - t_mix {worst_gap:.4}, static = dynamic/2 exactly"),
    )
}

fn criterion_8() -> Outcome {
    let budget = OptBudget::default();
    let mut r = rng(8);
    let (mut d_theta, mut d_norm, mut d_lsi) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..20u64 {
        let n = 2 + (i as usize % 2);
        let fam = if i % 4 < 2 {
            Family::Random { n, seed: 8000 + i }
        } else {
            Family::RandomReversible { n, seed: 8000 + i }
        };
        let t = make_family(&fam).unwrap();
        let est = theta_star(&t, &budget).theta_lower;
        let grid = grid_theta_star(&t, if n == 2 { 1e-4 } else { 1e-3 }).unwrap();
        d_theta = d_theta.max((est - grid).abs());

        let p = 1.0 + r.random::<f64>();
        let q = p + 0.5 + 2.0 * r.random::<f64>();
        let hp = HyperParams::new(p, q).unwrap();
        let est = opnorm(&t, &hp, &budget).unwrap().lower_bound;
        let grid = grid_opnorm(&t, &hp, if n == 2 { 1e-4 } else { 1e-3 }).unwrap();
        d_norm = d_norm.max((est - grid).abs());

        let l = if i % 2 == 0 {
            Generator::random_reversible(2, 8100 + i).unwrap()
        } else {
            Generator::random(2, 8100 + i).unwrap()
        };
        let g = grid_lsi(&l, 1e-4).unwrap();
        d_lsi = d_lsi
            .max((lsi_constant(&l, &budget).beta_upper - g.lsi).abs())
            .max((mlsi_constant(&l, &budget).beta_upper - g.mlsi).abs());
    }
    outcome(
        d_theta <= 2e-3 && d_norm <= 2e-3 && d_lsi <= 2e-3,
        format!("20 instances each; max |opt - grid|: theta* {d_theta:.2e}, opnorm {d_norm:.2e}, lsi/mlsi {d_lsi:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let mut r = rng(9);
    let (mut adj, mut push, mut semi) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..100u64 {
        let n = 2 + (i as usize % 7);
        let fam = if i % 2 == 0 {
            Family::Random { n, seed: 9000 + i }
        } else {
            Family::RandomReversible { n, seed: 9000 + i }
        };
        let t = make_family(&fam).unwrap();
        let pi = t.pi().as_slice();
        let f: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 4.0 - 2.0).collect();
        let g: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 4.0 - 2.0).collect();
        let lhs = dot_pi(&g, &t.adjoint().act_function(&f).unwrap(), pi);
        let rhs = dot_pi(&f, &t.act_function(&g).unwrap(), pi);
        adj = adj.max((lhs - rhs).abs());

        let d = random_density(&t, &mut r);
        let pushed = t.act_measure(&d.to_distribution()).unwrap();
        let direct = density_of(&pushed, t.pi()).unwrap();
        let via_adjoint = t.adjoint().act_function(d.values()).unwrap();
        for (a, b) in direct.values().iter().zip(&via_adjoint) {
            push = push.max((a - b).abs());
        }
    }
    for i in 0..20u64 {
        let n = 2 + (i as usize % 5);
        let l = if i % 2 == 0 {
            Generator::random(n, 9500 + i).unwrap()
        } else {
            Generator::random_reversible(n, 9500 + i).unwrap()
        };
        let s = 3.0 * r.random::<f64>();
        let t = 3.0 * r.random::<f64>();
        let lhs = transition_at(&l, s + t).unwrap();
        let rhs = transition_at(&l, s).unwrap().compose(&transition_at(&l, t).unwrap()).unwrap();
        semi = semi.max((lhs.matrix() - rhs.matrix()).amax());
    }
    outcome(
        adj <= 1e-10 && push <= 1e-10 && semi <= 1e-10,
        format!("adjoint duality {adj:.2e}; pushforward/density {push:.2e}; semigroup {semi:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("entropy contraction under hypercontractivity", criterion_1),
        ("exhaustive two-state check at (2,4)", criterion_2),
        ("two-point noise thresholds", criterion_3),
        ("proof-trace identities", criterion_4),
        ("LSI implies MLSI", criterion_5),
        ("static factor beats dynamic", criterion_6),
        ("mixing-time bounds", criterion_7),
        ("optimizer vs grid oracles", criterion_8),
        ("kernel algebra", criterion_9),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "acceptance {id} {name}: {tag} ({}) [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
