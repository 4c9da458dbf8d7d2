//! Shared fixtures for the criterion benches.

use quadshare::{Engine, EngineConfig, ExtractionMode, SharedVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An engine with two shared random vectors of `size` elements.
pub fn fixture(size: usize, mode: ExtractionMode) -> (Engine, SharedVec, SharedVec) {
    let mut rng = ChaCha8Rng::seed_from_u64(size as u64);
    let mut e = Engine::new(EngineConfig::default().with_seed(1).with_extraction(mode));
    let a: Vec<f64> = (0..size).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
    let b: Vec<f64> = (0..size).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
    let x = e.share_input(0, &a).expect("in range");
    let y = e.share_input(0, &b).expect("in range");
    (e, x, y)
}
