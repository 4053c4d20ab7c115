//! # hyperent
//!
//! Hypercontractivity and entropy contraction for finite-state Markov
//! kernels.
//!
//! For a kernel `T` preserving a law `pi`, this crate estimates the
//! operator norm `||T||_{p->q}` on `L^p(pi)`, the entropy contraction
//! coefficient `sup H(mu T | pi) / H(mu | pi)`, and checks numerically that
//! `||T||_{p->q} <= 1` forces `H(mu T | pi) <= (p/q) H(mu | pi)`. A proof
//! tracer evaluates every intermediate quantity of the duality argument for
//! a given density.
//!
//! The continuous-time layer computes `P_t = e^{tL}` by uniformization,
//! log-Sobolev and modified log-Sobolev constants, the hypercontractivity
//! schedule `q(t) = 1 + e^{4 beta t}`, and exact mixing times against the
//! bounds they imply.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernel`] | kernels, laws, densities, adjoints, test families |
//! | [`measures`] | KL divergence, total variation, `L^p(pi)` norms |
//! | [`hyper`] | `p -> q` norms, hypercontractivity certificates |
//! | [`entropy`] | contraction coefficient, theorem harness, proof trace |
//! | [`semigroup`] | generators, `P_t`, Dirichlet forms, LSI/MLSI |
//! | [`mixing`] | mixing times and bounds |
//! | [`oracle`] | brute-force grids for tiny instances |
//!
//! ```
//! use hyperent::{make_family, is_hypercontractive, verify_theorem, Family, HyperParams};
//!
//! let t = make_family(&Family::TwoPointNoise { rho: 0.5 }).unwrap();
//! let hp = HyperParams::new(2.0, 4.0).unwrap();
//! assert!(is_hypercontractive(&t, &hp).unwrap().holds);
//! let report = verify_theorem(&t, &hp, 200, 7).unwrap();
//! assert!(report.violations.is_empty() && report.max_ratio <= 0.5);
//! ```

pub mod budget;
pub mod entropy;
pub mod error;
pub mod hyper;
pub mod io;
pub mod kernel;
pub mod measures;
pub mod mixing;
pub mod oracle;
pub mod semigroup;

pub use budget::OptBudget;
pub use entropy::{
    proof_trace, theta_star, verify_theorem, verify_theorem_with, ContractionEstimate, ProofTrace, StepStatus,
    TheoremReport, TraceOptions, Verdict,
};
pub use error::{Error, Result};
pub use hyper::{is_hypercontractive, is_hypercontractive_with, opnorm, HyperCertificate, HyperParams, OpNormEstimate};
pub use kernel::{
    density_of, make_family, validate_kernel, validate_kernel_with, DensityFn, Distribution, Family,
    Kernel, ValidationOptions,
};
pub use measures::{kl_divergence, lp_norm, pinsker_tv_bound, tv_distance, DivergenceValue};
pub use mixing::{bound_dynamic, bound_static, mixing_report, t_mix_exact, MixingReport};
pub use semigroup::{
    check_schedule, dirichlet_form, entropy_decay_curve, lsi_constant, mlsi_constant,
    static_vs_dynamic, transition_at, Generator, LsiEstimate, LsiKind,
};

/// Crate version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
