//! Deterministic seed derivation for replicated runs.
//!
//! Replicate seeds come from a splitmix64 chain over (master seed, replicate
//! index, stage), so adding replicates or reordering work never changes the
//! seed any existing replicate sees.

/// Stage tag for drawing the base sample.
pub const STAGE_SAMPLE: u64 = 1;
/// Stage tag for the additive noise draw.
pub const STAGE_NOISE: u64 = 2;
/// Stage tag for Monte Carlo volume draws.
pub const STAGE_VOLUME: u64 = 3;
/// Stage tag for alternate distributions in comparison checks.
pub const STAGE_VARIANT: u64 = 4;

/// One step of the splitmix64 output function.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives the seed for one (replicate, stage) cell of a run.
pub fn derive_seed(master: u64, index: u64, stage: u64) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ index);
    splitmix64(h ^ stage)
}
