//! Cascade-style interactive parity reconciliation.
//!
//! Each pass shuffles the key with a shared seeded permutation, splits it into
//! blocks (first size `ceil(0.73 / q)`, doubling each pass) and compares block
//! parities. A mismatched block is bisected until the single erroneous bit is
//! found and flipped on Bob's side. Every flip re-opens the blocks containing
//! that bit in all earlier passes, whose parity is then off again.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{QkdError, Result};

/// Outcome of a reconciliation run.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconciliation {
    pub corrected: Vec<u8>,
    /// Parities Alice announced on the public channel.
    pub leaked_bits: usize,
    pub flips: usize,
}

/// First-pass block size for an estimated error rate.
pub fn initial_block_size(qber_estimate: f64) -> usize {
    (0.73 / qber_estimate.max(0.01)).ceil() as usize
}

struct Pass {
    /// Blocks of original positions.
    blocks: Vec<Vec<usize>>,
    /// Block index of each original position.
    block_of: Vec<usize>,
}

fn parity(bits: &[u8], positions: &[usize]) -> u8 {
    positions.iter().fold(0u8, |acc, &i| acc ^ bits[i])
}

/// Binary search for one error in a block whose parities are known to differ.
/// Returns the erroneous position; `leaked` counts Alice's sub-block parities.
pub(crate) fn bisect(alice: &[u8], bob: &[u8], block: &[usize], leaked: &mut usize) -> usize {
    let mut range = block;
    while range.len() > 1 {
        let (left, right) = range.split_at(range.len() / 2);
        *leaked += 1;
        if parity(alice, left) != parity(bob, left) {
            range = left;
        } else {
            range = right;
        }
    }
    range[0]
}

/// Corrects `bob` towards `alice`.
///
/// `qber_estimate` sizes the first-pass blocks. Only Alice's parities count
/// towards `leaked_bits`; Bob's side is compared locally.
pub fn reconcile<R: Rng + ?Sized>(
    alice: &[u8],
    bob: &[u8],
    passes: usize,
    qber_estimate: f64,
    rng: &mut R,
) -> Result<Reconciliation> {
    if alice.len() != bob.len() {
        return Err(QkdError::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    let n = alice.len();
    let mut corrected = bob.to_vec();
    let mut leaked = 0;
    let mut flips = 0;
    if n == 0 {
        return Ok(Reconciliation {
            corrected,
            leaked_bits: 0,
            flips: 0,
        });
    }

    let mut done: Vec<Pass> = Vec::with_capacity(passes);
    let mut block_size = initial_block_size(qber_estimate).clamp(1, n);

    for _ in 0..passes {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let blocks: Vec<Vec<usize>> = order.chunks(block_size).map(|c| c.to_vec()).collect();
        let mut block_of = vec![0; n];
        for (b, blk) in blocks.iter().enumerate() {
            for &i in blk {
                block_of[i] = b;
            }
        }
        done.push(Pass { blocks, block_of });
        let current = done.len() - 1;

        // Alice announces every top-level parity of this pass.
        leaked += done[current].blocks.len();
        let mut queue: Vec<(usize, usize)> = (0..done[current].blocks.len())
            .rev()
            .map(|b| (current, b))
            .collect();

        while let Some((p, b)) = queue.pop() {
            let block = &done[p].blocks[b];
            if parity(alice, block) == parity(&corrected, block) {
                continue;
            }
            let pos = bisect(alice, &corrected, block, &mut leaked);
            corrected[pos] ^= 1;
            flips += 1;
            for (q, pass) in done.iter().enumerate() {
                if q != p {
                    queue.push((q, pass.block_of[pos]));
                }
            }
        }

        block_size = (block_size * 2).min(n);
    }

    Ok(Reconciliation {
        corrected,
        leaked_bits: leaked,
        flips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn random_bits(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = seeded(seed);
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn identical_strings_only_leak_block_parities() {
        let a = random_bits(64, 1);
        let mut rng = seeded(2);
        let r = reconcile(&a, &a, 4, 0.05, &mut rng).unwrap();
        assert_eq!(r.corrected, a);
        assert_eq!(r.flips, 0);
        // k = ceil(0.73/0.05) = 15: blocks of 15, 30, 60, 64 bits.
        let expected = 64usize.div_ceil(15) + 64usize.div_ceil(30) + 64usize.div_ceil(60) + 1;
        assert_eq!(r.leaked_bits, expected);
    }

    #[test]
    fn eight_planted_errors_are_corrected() {
        let a = random_bits(256, 3);
        let mut b = a.clone();
        for i in [3, 40, 41, 100, 150, 199, 200, 255] {
            b[i] ^= 1;
        }
        let mut rng = seeded(17);
        let r = reconcile(&a, &b, 4, 8.0 / 256.0, &mut rng).unwrap();
        assert_eq!(r.corrected, a);
        assert!(r.flips >= 8);
    }

    #[test]
    fn single_error_bisection_cost() {
        let a = random_bits(16, 4);
        let mut b = a.clone();
        b[11] ^= 1;
        // One pass with a single 16-bit block: one block parity plus
        // log2(16) = 4 bisection parities.
        let mut rng = seeded(5);
        let r = reconcile(&a, &b, 1, 0.01, &mut rng).unwrap();
        assert_eq!(r.corrected, a);
        assert_eq!(r.leaked_bits, 5);

        let block: Vec<usize> = (0..16).collect();
        let mut leaked = 0;
        assert_eq!(bisect(&a, &b, &block, &mut leaked), 11);
        assert_eq!(leaked, 4);
    }

    #[test]
    fn length_mismatch_rejected() {
        let mut rng = seeded(0);
        assert!(matches!(
            reconcile(&[0, 1], &[0], 4, 0.1, &mut rng),
            Err(QkdError::LengthMismatch { left: 2, right: 1 })
        ));
    }

    #[test]
    fn block_size_heuristic() {
        assert_eq!(initial_block_size(0.11), 7);
        assert_eq!(initial_block_size(0.0), 73);
        assert_eq!(initial_block_size(0.25), 3);
    }
}
