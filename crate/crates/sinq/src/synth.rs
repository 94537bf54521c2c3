//! Seeded synthetic fixtures: Gaussian weight matrices with scattered
//! outliers, and activation samples with per-channel spread.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::WeightMatrix;

/// Generate a `rows` x `cols` matrix of i.i.d. standard normal entries, then
/// multiply `round(outlier_frac * rows * cols)` uniformly chosen entries by
/// `outlier_scale`.
///
/// The same seed always produces bit-identical output.
pub fn gen_synthetic(
    rows: usize,
    cols: usize,
    outlier_frac: f64,
    outlier_scale: f32,
    seed: u64,
) -> WeightMatrix {
    debug_assert!((0.0..=1.0).contains(&outlier_frac));
    debug_assert!(outlier_scale >= 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows * cols;
    let mut data: Vec<f32> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let k = (outlier_frac * n as f64).round() as usize;
    if k > 0 {
        for idx in sample(&mut rng, n, k) {
            data[idx] *= outlier_scale;
        }
    }
    WeightMatrix::new(rows, cols, data).expect("generated data is finite by construction")
}

/// Generate a `samples` x `channels` activation matrix: standard normal
/// entries scaled per channel by a log-normal factor `exp(N(0,1))`.
///
/// When `dominant_channel` is set, that channel's factor is multiplied by
/// 100, giving it a far larger absolute mean than the rest.
pub fn gen_activations(
    samples: usize,
    channels: usize,
    seed: u64,
    dominant_channel: Option<usize>,
) -> WeightMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scales: Vec<f32> = (0..channels)
        .map(|_| {
            let g: f32 = rng.sample(StandardNormal);
            g.exp()
        })
        .collect();
    if let Some(ch) = dominant_channel {
        scales[ch] *= 100.0;
    }
    let data: Vec<f32> = (0..samples * channels)
        .map(|i| {
            let g: f32 = rng.sample(StandardNormal);
            g * scales[i % channels]
        })
        .collect();
    WeightMatrix::new(samples, channels, data).expect("generated data is finite by construction")
}
