//! Randomized invariants for the metric and proximal-map layers.

use gfbs::config::RunConfig;
use gfbs::prox::ProxFunction;
use gfbs::rng::SplitMix64;
use gfbs::DegenerateMetric;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// `Q = AᵀA` (deliberately rank-deficient) must certify as PSD with
    /// `ν > 0`, and the pseudo-inverse must satisfy `Q Q† Q = Q`.
    #[test]
    fn degenerate_metric_pseudoinverse(raw in proptest::collection::vec(-2.0f64..2.0, 12)) {
        // 2x4 factor gives rank ≤ 2 inside a 4-dimensional space.
        let a = DMatrix::from_row_slice(2, 4, &raw[..8]);
        let q = a.transpose() * &a;
        let metric = DegenerateMetric::build(&q, 1e-10).unwrap();
        prop_assert!(metric.nu() > 0.0 || q.amax() == 0.0);
        let x = DVector::from_row_slice(&raw[8..12]);
        // Q Q† (Qx) = Qx for any x.
        let qx = metric.apply(&x).unwrap();
        let back = metric.apply(&metric.pinv_apply(&qx).unwrap()).unwrap();
        prop_assert!((back - &qx).amax() <= 1e-8 * (1.0 + qx.amax()));
        // The range projector is idempotent.
        let p1 = metric.range_project(&x).unwrap();
        let p2 = metric.range_project(&p1).unwrap();
        prop_assert!((p2 - &p1).amax() <= 1e-10 * (1.0 + p1.amax()));
    }

    /// Soft thresholding in closed form.
    #[test]
    fn l1_prox_is_soft_threshold(xs in vec_strategy(6), lambda in 0.01f64..3.0, tau in 0.1f64..3.0) {
        let f = ProxFunction::L1 { weight: lambda };
        let x = DVector::from_row_slice(&xs);
        let p = f.prox(tau, &x);
        for i in 0..x.len() {
            let expected = x[i].signum() * (x[i].abs() - tau * lambda).max(0.0);
            prop_assert!((p[i] - expected).abs() <= 1e-14);
        }
    }

    /// Every proximal step satisfies its own optimality condition:
    /// `z = prox_{τf}(y)` iff `(y − z)/τ ∈ ∂f(z)`.
    #[test]
    fn prox_satisfies_membership(xs in vec_strategy(4), tau in 0.1f64..3.0) {
        let y = DVector::from_row_slice(&xs);
        let catalog = [
            ProxFunction::Zero,
            ProxFunction::L1 { weight: 0.5 },
            ProxFunction::IndicatorBox {
                lo: DVector::from_element(4, -1.0),
                hi: DVector::from_element(4, 1.0),
            },
        ];
        for f in &catalog {
            let z = f.prox(tau, &y);
            prop_assert!(f.membership_gap(tau, &z, &(&y - &z)) <= 1e-10);
        }
    }

    /// The generator stream is deterministic and forked streams diverge.
    #[test]
    fn splitmix_streams(seed in any::<u64>()) {
        let mut a = SplitMix64::new(seed);
        let mut b = SplitMix64::new(seed);
        for _ in 0..16 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut f = a.fork();
        prop_assert_ne!(f.next_u64(), b.next_u64());
    }

    /// A config assembled from arbitrary valid fields parses back to the
    /// same values.
    #[test]
    fn config_roundtrip(
        seed in any::<u64>(),
        n in 0usize..100,
        m in 0usize..100,
        tau in 0.001f64..10.0,
        iters in 1usize..100_000,
    ) {
        let text = format!(
            "[algo]\nname = pfbs\ntau = {tau}\n\n[problem]\nkind = lasso\nseed = {seed}\nn = {n}\nm = {m}\n\n[run]\niters = {iters}\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(cfg.seed, seed);
        prop_assert_eq!(cfg.dims.n, n);
        prop_assert_eq!(cfg.dims.m, m);
        prop_assert_eq!(cfg.iters, iters);
        prop_assert_eq!(cfg.explicit_params["tau"], tau);
    }
}
