use proptest::prelude::*;

use stl_core::activation::{softmax, stl_grad, stl_value, Activation};
use stl_core::fast_log::{decompose_binary32, fast_stl, log2_poly, Log2Mode, FAST_STL_MAX_ERR};
use stl_core::props::{check_monotone, check_odd, PropertyGrid, ODD_TOL};

fn normal_f32() -> impl Strategy<Value = f32> {
    any::<u32>()
        .prop_map(f32::from_bits)
        .prop_filter("normal", |x| x.is_normal())
}

proptest! {
    #[test]
    fn stl_is_odd(x in -1e6f64..1e6, alpha in 0.01f64..10.0) {
        let f = stl_value(x, alpha).unwrap();
        prop_assert!((f + stl_value(-x, alpha).unwrap()).abs() <= 1e-12 * f.abs().max(1.0));
    }

    #[test]
    fn stl_scales_with_alpha(x in -1e6f64..1e6, alpha in 0.01f64..10.0) {
        let lhs = stl_value(x, alpha).unwrap();
        let rhs = alpha * stl_value(x, 1.0).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn stl_is_monotone(a in -1e5f64..1e5, b in -1e5f64..1e5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(stl_value(lo, 1.0).unwrap() <= stl_value(hi, 1.0).unwrap());
    }

    #[test]
    fn stl_gradient_is_positive_and_bounded(x in -1e12f64..1e12, alpha in 0.01f64..10.0) {
        let g = stl_grad(x, alpha).unwrap();
        prop_assert!(g > 0.0 && g <= alpha);
    }

    #[test]
    fn binary32_round_trip(x in normal_f32()) {
        let parts = decompose_binary32(x).unwrap();
        prop_assert_eq!(parts.reassemble().to_bits(), x.to_bits());
        prop_assert!((0.0..1.0).contains(&parts.fraction()));
    }

    #[test]
    fn poly_log2_within_bound(m in 1.0f32..2.0) {
        let err = (log2_poly(m).unwrap() as f64 - (m as f64).log2()).abs();
        prop_assert!(err <= 0.006);
    }

    #[test]
    fn fast_stl_tracks_exact(x in normal_f32().prop_filter("log branch", |x| x.abs() > 1.0 && x.abs() < 1e30)) {
        for mode in [Log2Mode::Polynomial, Log2Mode::lut(256).unwrap()] {
            let fast = fast_stl(x, 1.0, &mode).unwrap() as f64;
            let exact = stl_value(x as f64, 1.0).unwrap();
            prop_assert!((fast - exact).abs() <= FAST_STL_MAX_ERR.max(1e-6 * exact.abs()));
        }
    }

    #[test]
    fn fast_stl_is_exact_on_linear_branch(x in -1.0f32..=1.0, alpha in 0.01f32..10.0) {
        prop_assert_eq!(fast_stl(x, alpha, &Log2Mode::Polynomial).unwrap(), alpha * x);
    }

    #[test]
    fn softmax_sums_to_one_and_ignores_shift(
        xs in prop::collection::vec(-50.0f64..50.0, 1..16),
        shift in -100.0f64..100.0,
    ) {
        let p = softmax(&xs).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        for (a, b) in p.iter().zip(softmax(&shifted).unwrap()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn odd_activations_pass_on_random_grids() {
    let mut runner = proptest::test_runner::TestRunner::default();
    runner
        .run(&prop::collection::vec(-1e4f64..1e4, 2..200), |pts| {
            let grid = PropertyGrid::new(pts).unwrap();
            for act in [Activation::STL, Activation::Tanh, Activation::Softsign] {
                prop_assert!(check_odd(act, &grid, ODD_TOL).passed());
                prop_assert!(check_monotone(act, &grid).passed());
            }
            Ok(())
        })
        .unwrap();
}
