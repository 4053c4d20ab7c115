use std::path::Path;

use anyhow::{anyhow, bail, Context};
use hyperent::entropy::{ContractionEstimate, ProofTrace, TheoremReport, DEFAULT_SMOOTHING, VIOLATION_TOL};
use hyperent::io::{decay_curve_csv, fmt_float, generator_from_json, generator_to_json, kernel_from_json, kernel_to_json, mixing_csv};
use hyperent::oracle::{grid_lsi, grid_opnorm, grid_theta_star, GridLsi};
use hyperent::semigroup::{lsi_spectral_lower_bound, ContractionRow, EntropyCurve, ScheduleReport};
use hyperent::{
    density_of, entropy_decay_curve, is_hypercontractive_with, lsi_constant, make_family, mlsi_constant,
    mixing_report, proof_trace, static_vs_dynamic, theta_star, verify_theorem_with, Distribution, Family,
    Generator, HyperCertificate, HyperParams, Kernel, LsiEstimate, MixingReport, OptBudget, StepStatus,
    TraceOptions,
};
use serde::Serialize;

use crate::output::{emit, read_input, sibling_csv, to_json, write_atomic, InputFile, Meta, Report, Tolerances};
use crate::{
    AnalyzeArgs, Cli, Command, Failure, GenArgs, GenFamily, MixingArgs, OracleArgs, OracleKind, SemigroupArgs,
    SweepArgs, SweepFamily, TraceArgs,
};

/// Resolution of the two-state LSI grid used to certify beta.
const BETA_GRID_RESOLUTION: f64 = 1e-4;

pub fn run(cli: &Cli) -> Result<(), Failure> {
    if !(cli.tol >= 0.0 && cli.tol.is_finite()) {
        return Err(anyhow!("--tol must be a finite nonnegative number").into());
    }
    match &cli.command {
        Command::Gen(a) => gen(cli, a),
        Command::Analyze(a) => analyze(cli, a),
        Command::Semigroup(a) => semigroup(cli, a),
        Command::Sweep(a) => sweep(cli, a),
        Command::Trace(a) => trace(cli, a),
        Command::Mixing(a) => mixing(cli, a),
        Command::Oracle(a) => oracle(cli, a),
    }
}

fn budget(cli: &Cli) -> OptBudget {
    OptBudget::default()
        .with_seed(cli.seed)
        .with_random_starts(cli.budget)
}

fn meta(cli: &Cli, command: &'static str, input: Option<InputFile>) -> Meta {
    let b = budget(cli);
    Meta {
        tool: "hyperent",
        version: hyperent::VERSION,
        command,
        input,
        seed: cli.seed,
        tolerances: Tolerances {
            cert_tol: cli.tol,
            violation_tol: VIOLATION_TOL,
            fixed_point_tol: b.tol,
        },
        budget: b,
    }
}

fn params(cli: &Cli, p: f64, q: f64) -> anyhow::Result<HyperParams> {
    Ok(HyperParams::new(p, q)?.with_tol(cli.tol)?)
}

fn load_kernel(path: &Path) -> anyhow::Result<(Kernel, InputFile)> {
    let (text, rec) = read_input(path)?;
    let k = kernel_from_json(&text).with_context(|| format!("invalid kernel file {}", path.display()))?;
    Ok((k, rec))
}

fn load_generator(path: &Path) -> anyhow::Result<(Generator, InputFile)> {
    let (text, rec) = read_input(path)?;
    let l = generator_from_json(&text).with_context(|| format!("invalid generator file {}", path.display()))?;
    Ok((l, rec))
}

fn law(weights: &[f64]) -> anyhow::Result<Distribution> {
    Ok(Distribution::from_weights(weights.to_vec())?)
}

fn gen(cli: &Cli, a: &GenArgs) -> Result<(), Failure> {
    let pi = a.pi.clone().map(Distribution::new).transpose()?;
    let kernel_family = match a.family {
        GenFamily::Projection => Some(Family::Projection { n: a.n, pi }),
        GenFamily::Identity => Some(Family::Identity { n: a.n, pi }),
        GenFamily::TwoPointNoise => Some(Family::TwoPointNoise { rho: a.rho }),
        GenFamily::LazyRing => Some(Family::LazyRing {
            n: a.n,
            laziness: a.laziness,
        }),
        GenFamily::CompleteGraph => Some(Family::CompleteGraph { n: a.n }),
        GenFamily::RandomReversible => Some(Family::RandomReversible { n: a.n, seed: cli.seed }),
        GenFamily::Random => Some(Family::Random { n: a.n, seed: cli.seed }),
        _ => None,
    };
    let text = match kernel_family {
        Some(fam) => {
            if let Family::Projection { n, pi: Some(pi) } | Family::Identity { n, pi: Some(pi) } = &fam {
                if pi.len() != *n {
                    return Err(anyhow!("--pi has {} entries but --n is {n}", pi.len()).into());
                }
            }
            kernel_to_json(&make_family(&fam)?)
        }
        None => {
            let l = match a.family {
                GenFamily::Flip => Generator::flip(a.rate)?,
                GenFamily::Cycle => Generator::cycle(a.n, a.rate)?,
                GenFamily::RandomReversibleGenerator => Generator::random_reversible(a.n, cli.seed)?,
                _ => Generator::random(a.n, cli.seed)?,
            };
            generator_to_json(&l)
        }
    };
    emit(cli.out.as_deref(), &(text + "\n"))?;
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeBody {
    p: f64,
    q: f64,
    theta: f64,
    hypercontractivity: HyperCertificate,
    theta_star: ContractionEstimate,
    verify: TheoremReport,
    proof_trace: ProofTrace,
    notes: Vec<String>,
}

fn analyze(cli: &Cli, a: &AnalyzeArgs) -> Result<(), Failure> {
    let (t, input) = load_kernel(&a.kernel)?;
    let hp = params(cli, a.p, a.q)?;
    let b = budget(cli);
    let report = verify_theorem_with(&t, &hp, a.samples, &b)?;
    let cert = report.certificate.clone();
    let ts = theta_star(&t, &b);
    let mu = match &a.mu {
        Some(w) => law(w)?,
        None => ts.witness_mu.clone(),
    };
    let f = density_of(&mu, t.pi())?;
    let opts = TraceOptions {
        smoothing: Some(DEFAULT_SMOOTHING),
        hypothesis: Some(cert.holds),
    };
    let tr = proof_trace(&t, &f, &hp, &opts)?;

    let mut notes = Vec::new();
    if !cert.holds {
        notes.push(format!(
            "hypothesis unmet: ||T||_{{p->q}} >= {} > 1; the contraction figures are informational",
            fmt_float(cert.estimate.lower_bound)
        ));
    }
    if cert.heuristic {
        notes.push("n > 4: hypercontractivity verdict rests on the optimizer alone".into());
    }
    let violation = report.has_theorem_violation();
    let trace_failed = !tr.all_applicable_passed();
    let witness = violation.then(|| to_json(&report.violations));
    let body = AnalyzeBody {
        p: hp.p(),
        q: hp.q(),
        theta: hp.theta(),
        hypercontractivity: cert,
        theta_star: ts,
        verify: report,
        proof_trace: tr,
        notes,
    };
    let trace_witness = trace_failed.then(|| to_json(&body.proof_trace));
    emit(
        cli.out.as_deref(),
        &to_json(&Report {
            meta: meta(cli, "analyze", Some(input)),
            body,
        }),
    )?;
    if let Some(w) = witness.or(trace_witness) {
        return Err(Failure::Violation(w));
    }
    Ok(())
}

#[derive(Serialize)]
struct BetaReport {
    lsi_upper: LsiEstimate,
    mlsi_upper: LsiEstimate,
    spectral_lower: Option<f64>,
    grid: Option<GridLsi>,
    /// Value fed to the schedule, decay envelopes and mixing bounds.
    used: f64,
    /// `grid`, `spectral`, `user` or `optimizer` (an upper bound, so not certified).
    source: &'static str,
    certified: bool,
}

fn choose_beta(l: &Generator, user: Option<f64>, b: &OptBudget) -> anyhow::Result<BetaReport> {
    let lsi = lsi_constant(l, b);
    let mlsi = mlsi_constant(l, b);
    let spectral = lsi_spectral_lower_bound(l).ok();
    let grid = (l.n() == 2).then(|| grid_lsi(l, BETA_GRID_RESOLUTION)).transpose()?;
    let (used, source, certified) = match (user, &grid, spectral) {
        (Some(beta), _, _) => (beta, "user", false),
        (None, Some(g), _) if g.certified_beta() > 0.0 => (g.certified_beta(), "grid", true),
        (None, _, Some(s)) if s > 0.0 => (s, "spectral", true),
        _ => (lsi.beta_upper, "optimizer", false),
    };
    if !(used > 0.0 && used.is_finite()) {
        bail!("no positive LSI constant available (beta = {used})");
    }
    Ok(BetaReport {
        lsi_upper: lsi,
        mlsi_upper: mlsi,
        spectral_lower: spectral,
        grid,
        used,
        source,
        certified,
    })
}

#[derive(Serialize)]
struct DecaySection {
    mu: Distribution,
    curve: EntropyCurve,
}

#[derive(Serialize)]
struct SemigroupBody {
    n: usize,
    pi_star: f64,
    reversible: bool,
    beta: BetaReport,
    schedule: ScheduleReport,
    static_vs_dynamic: Vec<ContractionRow>,
    entropy_decay: DecaySection,
    mixing: Vec<MixingReport>,
}

fn least_likely_point_mass(l: &Generator) -> Distribution {
    let pi = l.pi().as_slice();
    let x = (0..pi.len()).fold(0, |best, x| if pi[x] < pi[best] { x } else { best });
    Distribution::point_mass(pi.len(), x)
}

fn semigroup(cli: &Cli, a: &SemigroupArgs) -> Result<(), Failure> {
    let (l, input) = load_generator(&a.generator)?;
    let b = budget(cli);
    let beta = choose_beta(&l, a.beta, &b)?;
    let schedule = hyperent::semigroup::check_schedule_with(&l, beta.used, &a.times, cli.tol, &b)?;
    let table = static_vs_dynamic(beta.used, &a.times)?;
    let mu = match &a.mu {
        Some(w) => law(w)?,
        None => least_likely_point_mass(&l),
    };
    let curve = entropy_decay_curve(&l, &mu, &a.times, Some(beta.used))?;
    let mixing = a
        .eps
        .iter()
        .map(|&eps| mixing_report(&l, eps, beta.used))
        .collect::<hyperent::Result<Vec<_>>>()?;
    let body = SemigroupBody {
        n: l.n(),
        pi_star: l.pi().min_mass(),
        reversible: l.is_reversible(1e-12),
        beta,
        schedule,
        static_vs_dynamic: table,
        entropy_decay: DecaySection { mu, curve },
        mixing,
    };
    if let Some(out) = &cli.out {
        write_atomic(&sibling_csv(out, "decay"), &decay_curve_csv(&body.entropy_decay.curve.rows))?;
        write_atomic(&sibling_csv(out, "mixing"), &mixing_csv(&body.mixing))?;
    }
    emit(
        cli.out.as_deref(),
        &to_json(&Report {
            meta: meta(cli, "semigroup", Some(input)),
            body,
        }),
    )?;
    Ok(())
}

fn parse_range(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad --range {s:?}; expected start:stop:step"))?;
    let [start, stop, step] = parts[..] else {
        bail!("bad --range {s:?}; expected start:stop:step");
    };
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        bail!("bad --range {s:?}; need step > 0 and stop >= start");
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        bail!("--range has {count} points; at most 100000 allowed");
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn sweep(cli: &Cli, a: &SweepArgs) -> Result<(), Failure> {
    let hp = params(cli, a.p, a.q)?;
    let b = budget(cli);
    let (name, param) = match a.family {
        SweepFamily::TwoPointNoise => ("two_point_noise", "rho"),
        SweepFamily::LazyRing => ("lazy_ring", "laziness"),
    };
    let mut out = format!("# hyperent {} sweep family={name} p={} q={} seed={} cert_tol={} n_random={}\n",
        hyperent::VERSION, fmt_float(hp.p()), fmt_float(hp.q()), cli.seed, fmt_float(cli.tol), b.n_random);
    out.push_str(&format!("{param},opnorm,holds,margin,theta_star,theta\n"));
    for v in parse_range(&a.range)? {
        let fam = match a.family {
            SweepFamily::TwoPointNoise => Family::TwoPointNoise { rho: v },
            SweepFamily::LazyRing => Family::LazyRing { n: a.n, laziness: v },
        };
        let t = make_family(&fam)?;
        let cert = is_hypercontractive_with(&t, &hp, &b)?;
        let ts = theta_star(&t, &b);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_float(v),
            fmt_float(cert.estimate.lower_bound),
            cert.holds,
            fmt_float(cert.margin),
            fmt_float(ts.theta_lower),
            fmt_float(hp.theta())
        ));
    }
    emit(cli.out.as_deref(), &out)?;
    Ok(())
}

fn trace(cli: &Cli, a: &TraceArgs) -> Result<(), Failure> {
    let (t, input) = load_kernel(&a.kernel)?;
    let hp = params(cli, a.p, a.q)?;
    let cert = is_hypercontractive_with(&t, &hp, &budget(cli))?;
    let f = density_of(&law(&a.mu)?, t.pi())?;
    let opts = TraceOptions {
        smoothing: a.smoothing,
        hypothesis: Some(cert.holds),
    };
    let tr = proof_trace(&t, &f, &hp, &opts)?;
    let failed: Vec<u8> = tr
        .step_flags
        .iter()
        .filter(|s| s.status == StepStatus::Failed)
        .map(|s| s.step)
        .collect();
    let text = to_json(&Report {
        meta: meta(cli, "trace", Some(input)),
        body: &tr,
    });
    emit(cli.out.as_deref(), &text)?;
    if !failed.is_empty() {
        return Err(Failure::Violation(format!("steps {failed:?} failed\n{}", to_json(&tr))));
    }
    Ok(())
}

#[derive(Serialize)]
struct MixingBody {
    beta: BetaReport,
    reports: Vec<MixingReport>,
}

fn mixing(cli: &Cli, a: &MixingArgs) -> Result<(), Failure> {
    let (l, input) = load_generator(&a.generator)?;
    let beta = choose_beta(&l, a.beta, &budget(cli))?;
    let reports = a
        .eps
        .iter()
        .map(|&eps| mixing_report(&l, eps, beta.used))
        .collect::<hyperent::Result<Vec<_>>>()?;
    let text = if a.csv {
        mixing_csv(&reports)
    } else {
        to_json(&Report {
            meta: meta(cli, "mixing", Some(input)),
            body: MixingBody { beta, reports },
        })
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(())
}

#[derive(Serialize)]
struct OracleBody {
    kind: &'static str,
    resolution: f64,
    value: Option<f64>,
    grid_lsi: Option<GridLsi>,
}

fn oracle(cli: &Cli, a: &OracleArgs) -> Result<(), Failure> {
    let (value, grid, kind, input) = match a.kind {
        OracleKind::Theta => {
            let (t, input) = load_kernel(&a.input)?;
            (Some(grid_theta_star(&t, a.resolution)?), None, "theta", input)
        }
        OracleKind::Opnorm => {
            let (t, input) = load_kernel(&a.input)?;
            let hp = params(cli, a.p, a.q)?;
            (Some(grid_opnorm(&t, &hp, a.resolution)?), None, "opnorm", input)
        }
        OracleKind::Lsi => {
            let (l, input) = load_generator(&a.input)?;
            (None, Some(grid_lsi(&l, a.resolution)?), "lsi", input)
        }
    };
    let body = OracleBody {
        kind,
        resolution: a.resolution,
        value,
        grid_lsi: grid,
    };
    emit(
        cli.out.as_deref(),
        &to_json(&Report {
            meta: meta(cli, "oracle", Some(input)),
            body,
        }),
    )?;
    Ok(())
}
