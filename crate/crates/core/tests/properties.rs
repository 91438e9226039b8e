use proptest::prelude::*;
use wilton_core::cf::{gauss_map_exact, CfTail};
use wilton_core::gfun::{cotangent_sum, g_fast};
use wilton_core::mc::Welford;
use wilton_core::measure::{gauss_measure, Interval};
use wilton_core::special::{bernoulli_b2, phi2, PI2_OVER_36};
use wilton_core::wilton::wilton;
use wilton_core::{cf_expand_default, RealSpec};

fn dyadic64() -> impl Strategy<Value = RealSpec> {
    (1u64..).prop_map(|bits| RealSpec::dyadic(bits as u128, 64).unwrap())
}

fn cf_spec() -> impl Strategy<Value = RealSpec> {
    (prop::collection::vec(1u64..50, 0..6), prop::collection::vec(1u64..20, 1..4))
        .prop_map(|(prefix, block)| RealSpec::cf(prefix, CfTail::Periodic(block)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn convergent_determinant(x in dyadic64()) {
        let o = cf_expand_default(&x).unwrap();
        // products reach 2^128, so compare modulo 2^128
        let (mut pp, mut qp) = (0u128, 1u128);
        for k in 0..o.p.len() {
            let (p, q) = (o.p[k], o.q[k]);
            let det = p.wrapping_mul(qp).wrapping_sub(pp.wrapping_mul(q));
            prop_assert!(det == 1 || det == u128::MAX);
            (pp, qp) = (p, q);
        }
    }

    #[test]
    fn convergents_follow_recursion(x in dyadic64()) {
        let o = cf_expand_default(&x).unwrap();
        for k in 2..o.p.len() {
            prop_assert_eq!(o.p[k], o.a[k] * o.p[k - 1] + o.p[k - 2]);
            prop_assert_eq!(o.q[k], o.a[k] * o.q[k - 1] + o.q[k - 2]);
        }
    }

    #[test]
    fn consecutive_alpha_pairs(x in dyadic64()) {
        let o = cf_expand_default(&x).unwrap();
        for w in o.alpha.windows(2) {
            prop_assert!(w[0] * w[1] <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn exact_gauss_map_stays_in_unit_interval(num in 1u128..1_000_000, extra in 1u128..1_000_000) {
        let den = num + extra;
        let (n, d) = gauss_map_exact(num, den).unwrap();
        prop_assert!(n < d);
        let back = (den as f64 / num as f64).fract();
        prop_assert!(n == 0 || (n as f64 / d as f64 - back).abs() < 1e-9);
    }

    #[test]
    fn spec_display_round_trips(x in cf_spec()) {
        let back: RealSpec = x.to_string().parse().unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn phi2_bounded(lambda in 1e-3f64..50.0) {
        let v = phi2(lambda, 1e-10).unwrap();
        prop_assert!(v.value.abs() <= PI2_OVER_36 + v.abs_error_bound);
    }

    #[test]
    fn b2_periodic(t in -20.0f64..20.0) {
        prop_assert!((bernoulli_b2(t) - bernoulli_b2(t + 1.0)).abs() < 1e-12);
        prop_assert!(bernoulli_b2(t).abs() <= 1.0 / 6.0 + 1e-15);
    }

    #[test]
    fn wilton_functional_equation(x in cf_spec()) {
        let w = wilton(&x, 1e-11).unwrap();
        let wy = wilton(&x.shifted().unwrap(), 1e-11).unwrap();
        let xf = x.to_f64();
        let resid = (w.value - (1.0 / xf).ln() + xf * wy.value).abs();
        prop_assert!(resid <= w.abs_error_bound + xf * wy.abs_error_bound + 1e-13);
    }

    #[test]
    fn g_antisymmetric(bits in 1u64..) {
        let a = g_fast(&RealSpec::dyadic(bits as u128, 64).unwrap(), 1e-8).unwrap();
        let b = g_fast(&RealSpec::dyadic((1u128 << 64) - bits as u128, 64).unwrap(), 1e-8).unwrap();
        prop_assert!((a.value + b.value).abs() <= a.abs_error_bound + b.abs_error_bound);
    }

    #[test]
    fn cotangent_antisymmetric(b in 3u64..2000, r in 1u64..2000) {
        let r = 1 + r % (b - 1);
        prop_assume!(gcd(r, b) == 1);
        prop_assert!((cotangent_sum(r, b).unwrap() + cotangent_sum(b - r, b).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn gauss_measure_additive(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        let whole = gauss_measure(Interval::new(v[0], v[2]).unwrap());
        let parts = gauss_measure(Interval::new(v[0], v[1]).unwrap()) + gauss_measure(Interval::new(v[1], v[2]).unwrap());
        prop_assert!((whole - parts).abs() < 1e-14);
    }

    #[test]
    fn welford_merge_matches_sequential(xs in prop::collection::vec(-1e3f64..1e3, 2..200), split in 0usize..200) {
        let split = split % xs.len();
        let mut all = Welford::default();
        let (mut left, mut right) = (Welford::default(), Welford::default());
        for (i, &x) in xs.iter().enumerate() {
            all.push(x);
            if i < split { left.push(x) } else { right.push(x) }
        }
        let merged = left.merge(&right);
        prop_assert_eq!(merged.n, all.n);
        prop_assert!((merged.mean() - all.mean()).abs() <= 1e-9);
        prop_assert!((merged.variance() - all.variance()).abs() <= 1e-7 * all.variance().max(1.0));
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
