//! Fixture builders shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stiefel_sync::stiefel::random_stiefel;
use stiefel_sync::{EnsembleState, FrequencySet, ModelConfig, SkewMat, Topology};

/// A heterogeneous separable model with `agents` agents on `St(p, n)`.
pub fn fixture(agents: usize, n: usize, p: usize, seed: u64) -> (ModelConfig, EnsembleState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xi: Vec<f64> = (0..agents).map(|_| rng.gen_range(0.9..1.1)).collect();
    let freqs = (0..agents)
        .map(|_| {
            let upper: Vec<f64> = (0..p * (p - 1) / 2).map(|_| rng.gen_range(-0.1..0.1)).collect();
            SkewMat::from_upper(p, &upper).expect("upper triangle has the right length")
        })
        .collect();
    let cfg = ModelConfig::new(
        2.0,
        Topology::separable(xi).expect("positive weights"),
        FrequencySet::new(freqs).expect("consistent frequencies"),
        n,
    )
    .expect("valid model");
    let state = EnsembleState::new((0..agents).map(|_| random_stiefel(n, p, &mut rng).unwrap()).collect())
        .expect("consistent shapes");
    (cfg, state)
}
