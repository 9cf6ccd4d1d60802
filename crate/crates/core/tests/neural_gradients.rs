mod common;

use common::gradient_check;
use mib_core::neural::{Activation, DenseNet};
use proptest::prelude::*;

#[test]
fn analytic_gradients_match_central_differences() {
    for seed in 0..100 {
        let err = gradient_check(seed);
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_check_holds_for_arbitrary_seeds(seed in any::<u64>()) {
        prop_assert!(gradient_check(seed) < 1e-4);
    }

    #[test]
    fn training_is_deterministic(seed in 0u64..1000) {
        let a = DenseNet::new(&[3, 5, 2], &[Activation::Tanh, Activation::Identity], seed).unwrap();
        let b = DenseNet::new(&[3, 5, 2], &[Activation::Tanh, Activation::Identity], seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn glorot_bound_respected() {
    let net = DenseNet::new(&[10, 6, 4], &[Activation::Relu, Activation::Identity], 9).unwrap();
    for l in net.layers() {
        let a = (6.0 / (l.n_in + l.n_out) as f64).sqrt();
        assert!(l.weights.iter().all(|w| w.abs() <= a));
        assert!(l.biases.iter().all(|&b| b == 0.0));
    }
}
