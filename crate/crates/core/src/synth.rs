//! Seeded synthetic classification instances, so experiments and tests run
//! without external dataset files.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::scalar::{lit, Scalar};

/// Generate a dense Gaussian-feature dataset with a planted separator.
///
/// Feature `j` is scaled by `decay^(j / (n_features - 1))`, so `decay = 1`
/// gives isotropic features and small `decay` an ill-conditioned Hessian.
/// Labels are `sign(<w*, z>)` in {-1, +1}, flipped with probability `noise`.
pub fn synthetic_classification<T: Scalar>(
    n_samples: usize,
    n_features: usize,
    noise: f64,
    decay: f64,
    seed: u64,
) -> Dataset<T> {
    assert!(n_features >= 1, "need at least one feature");
    assert!((0.0..=0.5).contains(&noise), "noise must lie in [0, 0.5]");
    assert!(decay > 0.0 && decay <= 1.0, "decay must lie in (0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let scales: Vec<f64> = (0..n_features)
        .map(|j| {
            if n_features == 1 {
                1.0
            } else {
                decay.powf(j as f64 / (n_features - 1) as f64)
            }
        })
        .collect();
    let w: Vec<f64> = (0..n_features).map(|_| rng.sample(StandardNormal)).collect();

    let mut rows = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z: Vec<f64> = scales
            .iter()
            .map(|&c| c * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let margin: f64 = w.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut y = if margin >= 0.0 { 1.0 } else { -1.0 };
        if rng.gen::<f64>() < noise {
            y = -y;
        }
        rows.push(z.iter().enumerate().map(|(j, &v)| (j, lit(v))).collect());
        labels.push(lit(y));
    }
    Dataset::from_rows(n_features, rows, labels).expect("generated rows are well-formed")
}

/// Random initial guess: standard normal entries scaled by 0.1.
pub fn random_x0<T: Scalar>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| lit(0.1 * rng.sample::<f64, _>(StandardNormal)))
        .collect()
}
