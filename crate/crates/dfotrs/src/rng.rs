use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The deterministic generator used everywhere randomness is needed:
/// seedable, with independent streams for splitting.
pub type SolverRng = ChaCha8Rng;

/// Generator for benchmark replication `r`: seed `base_seed + r`.
pub fn replication_rng(base_seed: u64, r: u64) -> SolverRng {
    SolverRng::seed_from_u64(base_seed.wrapping_add(r))
}

/// Generator whose bytes depend only on `(seed, t)`: the replication
/// seed selects the key, the instance index selects the stream.
pub fn instance_rng(seed: u64, t: u64) -> SolverRng {
    let mut rng = SolverRng::seed_from_u64(seed);
    rng.set_stream(t);
    rng
}
