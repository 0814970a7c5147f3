//! Privacy amplification by Toeplitz hashing.

use rand::Rng;

use crate::error::{QkdError, Result};
use crate::rng::seeded;

/// Binary entropy in bits, with `h2(0) = h2(1) = 0`.
pub fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Secure output length `floor(n (1 - h2(q)) - leaked - safety)`, clamped to
/// `[0, n]`.
pub fn secure_length(n: usize, qber: f64, leaked_bits: usize, safety: usize) -> usize {
    let m = (n as f64 * (1.0 - h2(qber)) - leaked_bits as f64 - safety as f64).floor();
    if m <= 0.0 {
        0
    } else {
        (m as usize).min(n)
    }
}

/// Diagonal bits `t` of an `m x n` Toeplitz matrix, `T[i][j] = t[i - j + n - 1]`,
/// drawn from the seeded stream.
pub fn toeplitz_diagonals(m: usize, n: usize, seed: u64) -> Vec<u8> {
    let mut rng = seeded(seed);
    (0..(m + n).saturating_sub(1))
        .map(|_| u8::from(rng.random::<bool>()))
        .collect()
}

/// `T · key (mod 2)` for the Toeplitz matrix with diagonals `t`.
pub fn toeplitz_hash(key: &[u8], m: usize, t: &[u8]) -> Vec<u8> {
    let n = key.len();
    debug_assert_eq!(t.len(), (m + n).saturating_sub(1));
    (0..m)
        .map(|i| {
            // Row i reads t[i + n - 1 - j] for j = 0..n, i.e. t[i..i+n] reversed.
            t[i..i + n]
                .iter()
                .rev()
                .zip(key)
                .fold(0u8, |acc, (&tb, &kb)| acc ^ (tb & kb))
        })
        .collect()
}

/// Compresses the reconciled key to its secure length.
pub fn privacy_amplify(
    key: &[u8],
    qber: f64,
    leaked_bits: usize,
    safety: usize,
    seed: u64,
) -> Result<Vec<u8>> {
    if key.is_empty() {
        return Err(QkdError::Empty("key"));
    }
    let n = key.len();
    let m = secure_length(n, qber, leaked_bits, safety);
    if m == 0 {
        return Ok(Vec::new());
    }
    let t = toeplitz_diagonals(m, n, seed);
    Ok(toeplitz_hash(key, m, &t))
}
