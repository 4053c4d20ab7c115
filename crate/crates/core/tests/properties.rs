use hyperent::measures::pinsker_tv_bound;
use hyperent::oracle::grid_opnorm;
use hyperent::semigroup::{elementary_estimate_slack, lsi_ratio_at};
use hyperent::{
    density_of, dirichlet_form, kl_divergence, lp_norm, make_family, proof_trace, transition_at,
    tv_distance, DensityFn, Distribution, Family, Generator, HyperParams, Kernel, LsiKind,
    StepStatus, TraceOptions,
};
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = Kernel> {
    (2usize..7, any::<u64>(), any::<bool>()).prop_map(|(n, seed, rev)| {
        let fam = if rev {
            Family::RandomReversible { n, seed }
        } else {
            Family::Random { n, seed }
        };
        make_family(&fam).unwrap()
    })
}

fn law(n: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(1e-4f64..1.0, n).prop_map(|w| Distribution::from_weights(w).unwrap())
}

fn kernel_and_law() -> impl Strategy<Value = (Kernel, Distribution)> {
    kernel_strategy().prop_flat_map(|k| {
        let n = k.n();
        (Just(k), law(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pushforward_density_is_adjoint_of_density((k, mu) in kernel_and_law()) {
        let f = density_of(&mu, k.pi()).unwrap();
        let direct = density_of(&k.act_measure(&mu).unwrap(), k.pi()).unwrap();
        let via = k.adjoint().act_function(f.values()).unwrap();
        for (a, b) in direct.values().iter().zip(&via) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn adjoint_is_an_involution(k in kernel_strategy()) {
        let back = k.adjoint().adjoint();
        prop_assert!((back.matrix() - k.matrix()).amax() <= 1e-12);
    }

    #[test]
    fn kl_decreases_under_the_kernel((k, mu) in kernel_and_law()) {
        let before = kl_divergence(&mu, k.pi()).unwrap().nats();
        let after = kl_divergence(&k.act_measure(&mu).unwrap(), k.pi()).unwrap().nats();
        prop_assert!(after <= before + 1e-12);
    }

    #[test]
    fn pinsker_bounds_tv((k, mu) in kernel_and_law()) {
        let tv = tv_distance(&mu, k.pi()).unwrap();
        let h = kl_divergence(&mu, k.pi()).unwrap();
        prop_assert!(tv <= pinsker_tv_bound(h) + 1e-12);
    }

    #[test]
    fn kernel_contracts_every_lp(
        (k, f) in kernel_strategy().prop_flat_map(|k| {
            let n = k.n();
            (Just(k), prop::collection::vec(-3.0f64..3.0, n))
        }),
        p in 1.0f64..6.0,
    ) {
        let before = lp_norm(&f, k.pi(), p).unwrap();
        let after = lp_norm(&k.act_function(&f).unwrap(), k.pi(), p).unwrap();
        prop_assert!(after <= before * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn lp_norm_is_monotone_in_p(
        (k, f) in kernel_strategy().prop_flat_map(|k| {
            let n = k.n();
            (Just(k), prop::collection::vec(-3.0f64..3.0, n))
        }),
        p in 1.0f64..5.0,
        dp in 0.0f64..5.0,
    ) {
        let lo = lp_norm(&f, k.pi(), p).unwrap();
        let hi = lp_norm(&f, k.pi(), p + dp).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn grid_opnorm_grows_with_q(rho in 0.0f64..1.0, q in 2.0f64..6.0, dq in 0.0f64..3.0) {
        let t = make_family(&Family::TwoPointNoise { rho }).unwrap();
        let a = grid_opnorm(&t, &HyperParams::new(2.0, q).unwrap(), 1e-3).unwrap();
        let b = grid_opnorm(&t, &HyperParams::new(2.0, q + dq).unwrap(), 1e-3).unwrap();
        prop_assert!(a <= b + 1e-12);
    }

    #[test]
    fn lsi_ratios_scale_with_the_generator(
        n in 2usize..5,
        seed in any::<u64>(),
        c in 0.1f64..10.0,
        w in prop::collection::vec(0.05f64..3.0, 5),
    ) {
        let l = Generator::random_reversible(n, seed).unwrap();
        let z: f64 = l.pi().as_slice().iter().zip(&w).map(|(p, v)| p * v).sum();
        let f = DensityFn::new(w[..n].iter().map(|v| v / z).collect(), l.pi()).unwrap();
        let lc = l.scaled(c).unwrap();
        for kind in [LsiKind::Lsi, LsiKind::Mlsi] {
            if let (Ok(a), Ok(b)) = (lsi_ratio_at(&l, kind, f.values()), lsi_ratio_at(&lc, kind, f.values())) {
                prop_assert!((b - c * a).abs() <= 1e-9 * (1.0 + c * a));
            }
        }
        prop_assert!(dirichlet_form(&l, f.values(), f.values()).unwrap() >= -1e-12);
    }

    #[test]
    fn elementary_estimate_holds(a in 1e-8f64..1e8, b in 1e-8f64..1e8) {
        prop_assert!(elementary_estimate_slack(a, b) >= -1e-12 * (1.0 + b * (b / a).ln().abs()));
    }

    #[test]
    fn transition_rows_are_laws(n in 2usize..6, seed in any::<u64>(), t in 0.0f64..50.0) {
        let l = Generator::random(n, seed).unwrap();
        let p = transition_at(&l, t).unwrap();
        for row in p.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn unconditional_trace_steps_pass(
        (k, mu) in kernel_and_law(),
        p in 1.0f64..3.0,
        dq in 0.0f64..3.0,
    ) {
        let f = density_of(&mu, k.pi()).unwrap();
        let hp = HyperParams::new(p, p + dq).unwrap();
        let opts = TraceOptions { hypothesis: Some(false), ..TraceOptions::default() };
        let tr = proof_trace(&k, &f, &hp, &opts).unwrap();
        for step in [1, 3, 5] {
            prop_assert_eq!(tr.step(step).status, StepStatus::Passed);
        }
    }
}
