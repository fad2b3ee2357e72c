//! Seeded random metric states.
//!
//! All randomness uses `ChaCha8Rng::seed_from_u64`, so a seed fixes every
//! draw on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curvature::MetricState;
use crate::error::{Error, Result};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Log-uniform eigenvalues in `[lo, hi]`; modules in a tie group share the
/// value drawn for the first member.
pub fn random_state(n: usize, ties: &[Vec<usize>], lo: f64, hi: f64, rng: &mut SeededRng) -> Result<MetricState> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::Input(format!("random range [{lo}, {hi}] must satisfy 0 < lo <= hi")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut x: Vec<f64> = (0..n)
        .map(|_| if a == b { lo } else { rng.gen_range(a..=b).exp() })
        .collect();
    apply_ties(&mut x, ties)?;
    MetricState::new(x)
}

pub fn apply_ties(x: &mut [f64], ties: &[Vec<usize>]) -> Result<()> {
    for group in ties {
        let Some(&first) = group.first() else { continue };
        if let Some(&bad) = group.iter().find(|&&i| i >= x.len()) {
            return Err(Error::Input(format!("tie index {bad} out of range")));
        }
        for &i in group {
            x[i] = x[first];
        }
    }
    Ok(())
}
