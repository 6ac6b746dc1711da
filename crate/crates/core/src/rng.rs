//! Seeding. Every random stream comes from one 64-bit master seed.
//!
//! Chain `c` of a run with master seed `s` uses ChaCha8 keyed by
//! `seed_from_u64(s)` with stream id `c` and word position 0. Distinct
//! chains therefore read disjoint keystreams of the same cipher key, and a
//! run is reproduced exactly from `(config, s)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

pub fn chain_rng(master_seed: u64, chain: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(chain);
    rng
}

/// Seed for a sub-task (parameter point, identity) of a run. Keeps the
/// stream id free for chain numbering.
pub fn derive_seed(master_seed: u64, task: u64) -> u64 {
    // splitmix64 finaliser over the pair
    let mut z = master_seed ^ task.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `chains` independent streams on up to `workers` threads and returns
/// their results in chain order, whatever the thread count.
pub fn run_chains<T, F>(master_seed: u64, chains: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChainRng) -> T + Sync,
{
    let workers = workers.clamp(1, chains.max(1));
    let mut out: Vec<Option<T>> = (0..chains).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, slots) in out.chunks_mut(chains.div_ceil(workers).max(1)).enumerate() {
            let f = &f;
            let base = w * chains.div_ceil(workers).max(1);
            scope.spawn(move || {
                for (i, slot) in slots.iter_mut().enumerate() {
                    let chain = base + i;
                    let mut rng = chain_rng(master_seed, chain as u64);
                    *slot = Some(f(chain, &mut rng));
                }
            });
        }
    });
    out.into_iter().map(|x| x.expect("chain finished")).collect()
}

/// Splits `total` draws over `chains` as evenly as possible.
pub fn split_draws(total: usize, chains: usize) -> Vec<usize> {
    let chains = chains.max(1);
    (0..chains).map(|c| total / chains + usize::from(c < total % chains)).collect()
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
