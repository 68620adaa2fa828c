//! Seeded coefficient streams.
//!
//! Every random coefficient in the crate comes from a ChaCha8 stream keyed by
//! a hash of `(seed, tags...)`, so a repair's coefficients depend only on
//! its position in the history and never on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gf::{FieldWidth, Symbol};
use crate::linalg::Matrix;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, tags)`.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut h = splitmix(seed);
    for &t in tags {
        h = splitmix(h ^ splitmix(t));
    }
    for (i, chunk) in key.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix(h ^ i as u64).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// `rows x cols` matrix of uniform coefficients from `(seed, tags)`.
pub fn coefficient_matrix(width: FieldWidth, rows: usize, cols: usize, seed: u64, tags: &[u64]) -> Matrix {
    Matrix::random(width, rows, cols, &mut stream(seed, tags))
}

/// Uniform vector from `(seed, tags)`.
pub fn coefficient_vec(width: FieldWidth, len: usize, seed: u64, tags: &[u64]) -> Vec<Symbol> {
    let f = width.field();
    let mut rng = stream(seed, tags);
    (0..len).map(|_| f.random(&mut rng)).collect()
}
