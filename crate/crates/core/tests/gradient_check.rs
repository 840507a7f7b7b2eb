mod common;

use common::{max_gradient_error, random_sizes};

#[test]
fn fixed_topologies_match_finite_differences() {
    for (seed, sizes) in [
        (1, vec![3, 5, 2]),
        (2, vec![8, 16, 16, 8]),
        (3, vec![1, 1]),
        (4, vec![4, 3, 3, 3, 1]),
    ] {
        let err = max_gradient_error(seed, &sizes);
        assert!(err < 1e-4, "{sizes:?}: max relative error {err}");
    }
}

#[test]
fn random_topologies_match_finite_differences() {
    for seed in 100..130 {
        let sizes = random_sizes(seed);
        let err = max_gradient_error(seed, &sizes);
        assert!(err < 1e-4, "seed {seed} {sizes:?}: max relative error {err}");
    }
}
