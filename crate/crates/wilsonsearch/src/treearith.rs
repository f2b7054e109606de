//! Product trees, remainder trees, and buffered modular products: the
//! big-integer backbone shared by the range algorithms.
//!
//! Tree shape is deterministic: levels are built bottom-up by pairing
//! adjacent nodes; an odd node out is promoted by copying, so a
//! parent-of-one-child always equals its child. Sibling products at one
//! level are independent and run in parallel.

use crate::par;
use num_bigint::BigUint;
use num_traits::{One, Zero};

/// A fully materialized product tree. `levels[0]` are the leaves; the last
/// level is the single root.
#[derive(Clone, Debug)]
pub struct ProductTree {
    levels: Vec<Vec<BigUint>>,
}

impl ProductTree {
    pub fn root(&self) -> &BigUint {
        &self.levels[self.levels.len() - 1][0]
    }

    pub fn levels(&self) -> &[Vec<BigUint>] {
        &self.levels
    }

    pub fn leaves(&self) -> &[BigUint] {
        &self.levels[0]
    }

    /// Total stored size in bytes (bignum data only, not allocator slack).
    pub fn byte_size(&self) -> u64 {
        self.levels
            .iter()
            .flat_map(|lv| lv.iter())
            .map(|n| n.bits().div_ceil(8))
            .sum()
    }
}

/// Build the product tree of `leaves`. Panics on empty input: every caller
/// has a natural identity value and should supply it explicitly.
pub fn product_tree(leaves: &[BigUint]) -> ProductTree {
    assert!(!leaves.is_empty(), "product_tree needs at least one leaf");
    let mut levels = vec![leaves.to_vec()];
    while levels.last().unwrap().len() > 1 {
        let top = levels.last().unwrap();
        let next = par::map_pairs(top, |pair| {
            if pair.len() == 2 {
                &pair[0] * &pair[1]
            } else {
                pair[0].clone()
            }
        });
        levels.push(next);
    }
    ProductTree { levels }
}

/// `x mod moduli[k]` for every k, by reducing `x` down a product tree of the
/// moduli. Moduli of 1 yield 0. Cheaper than k independent divisions when
/// the moduli are many and small relative to `x`.
pub fn remainder_tree(x: &BigUint, moduli: &[BigUint]) -> Vec<BigUint> {
    if moduli.is_empty() {
        return Vec::new();
    }
    let tree = product_tree(moduli);
    remainder_tree_prebuilt(x, &tree)
}

/// As [`remainder_tree`] over an already-built tree of the moduli.
pub fn remainder_tree_prebuilt(x: &BigUint, tree: &ProductTree) -> Vec<BigUint> {
    let mut residues = vec![x % tree.root()];
    for level in tree.levels().iter().rev().skip(1) {
        let parent = residues;
        residues = par::map_indices(level.len(), |i| &parent[i / 2] % &level[i]);
    }
    residues
}

/// Product of a factor stream mod `s`, buffering factors until roughly
/// `buffer_bits` bits have accumulated, then folding the buffer's product
/// tree into the running residue with a single modular multiplication.
///
/// The result is independent of `buffer_bits`. Callers should pass at least
/// the bit length of `s` (the default elsewhere) and at least the bit length
/// of any single factor; an oversized factor is folded directly rather than
/// rejected.
pub fn product_mod<I>(factors: I, s: &BigUint, buffer_bits: u64) -> BigUint
where
    I: IntoIterator<Item = BigUint>,
{
    let mut acc = ProductAccumulator::new(s, buffer_bits, |_| {});
    for f in factors {
        acc.push(f);
    }
    acc.finish()
}

/// Push-style core of [`product_mod`], for callers that produce factors from
/// a callback (segmented prime scans) rather than an iterator. `observe` is
/// told the transient byte footprint of each buffer flush so the caller can
/// meter peak memory.
pub(crate) struct ProductAccumulator<'a, F: FnMut(u64)> {
    s: &'a BigUint,
    buffer_bits: u64,
    acc: BigUint,
    buf: Vec<BigUint>,
    bits_pending: u64,
    observe: F,
}

impl<'a, F: FnMut(u64)> ProductAccumulator<'a, F> {
    pub fn new(s: &'a BigUint, buffer_bits: u64, observe: F) -> Self {
        ProductAccumulator {
            s,
            buffer_bits: buffer_bits.max(1),
            acc: BigUint::one(),
            buf: Vec::new(),
            bits_pending: 0,
            observe,
        }
    }

    pub fn push(&mut self, f: BigUint) {
        if self.s.is_one() {
            return; // everything is 0 mod 1; finish() normalizes
        }
        self.bits_pending += f.bits().max(1);
        self.buf.push(f);
        if self.bits_pending >= self.buffer_bits {
            self.flush();
        }
    }

    pub fn finish(mut self) -> BigUint {
        if self.s.is_one() {
            return BigUint::zero();
        }
        if !self.buf.is_empty() {
            self.flush();
        }
        self.acc
    }

    fn flush(&mut self) {
        (self.observe)(self.bits_pending.div_ceil(8) + self.s.bits().div_ceil(8));
        let prod = if self.buf.len() == 1 {
            self.buf.pop().unwrap()
        } else {
            let tree = product_tree(&self.buf);
            self.buf.clear();
            tree.root().clone()
        };
        self.acc = &self.acc * (prod % self.s) % self.s;
        self.bits_pending = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn tree_roots() {
        let t = product_tree(&[big(2), big(3), big(5), big(7)]);
        assert_eq!(t.root(), &big(210));
        let t = product_tree(&[big(1)]);
        assert_eq!(t.root(), &big(1));
        // squares of the primes in (10, 20]
        let sq: Vec<BigUint> = [11u64, 13, 17, 19].iter().map(|p| big(p * p)).collect();
        let t = product_tree(&sq);
        assert_eq!(t.root(), &big(46189u64 * 46189));
        assert_eq!(t.root().to_u64(), Some(2_133_423_721));
    }

    #[test]
    fn tree_parents_are_products() {
        let leaves: Vec<BigUint> = (1u64..=13).map(big).collect();
        let t = product_tree(&leaves);
        for (k, level) in t.levels().iter().enumerate().skip(1) {
            let below = &t.levels()[k - 1];
            for (j, node) in level.iter().enumerate() {
                let expect = if 2 * j + 1 < below.len() {
                    &below[2 * j] * &below[2 * j + 1]
                } else {
                    below[2 * j].clone()
                };
                assert_eq!(node, &expect);
            }
        }
    }

    #[test]
    fn remainders() {
        assert_eq!(remainder_tree(&big(100), &[big(7), big(9)]), [big(2), big(1)]);
        let ten_fact = big(3_628_800);
        assert_eq!(
            remainder_tree(&ten_fact, &[big(121), big(169)]),
            [big(10), big(32)]
        );
        let r = remainder_tree(&BigUint::zero(), &[big(3), big(11), big(1)]);
        assert!(r.iter().all(|x| x.is_zero()));
    }

    #[test]
    fn product_mod_examples() {
        let fac: Vec<BigUint> = (2u64..=10).map(big).collect();
        assert_eq!(product_mod(fac, &big(101), 7), big(72));
        assert_eq!(product_mod(Vec::new(), &big(7), 3), big(1));
        assert_eq!(product_mod(vec![big(5), big(5)], &big(25), 5), big(0));
    }

    #[test]
    fn product_mod_buffer_free() {
        let fac: Vec<BigUint> = (2u64..=200).map(big).collect();
        let s = big(1_000_003);
        let want = fac.iter().fold(big(1), |a, f| a * f % &s);
        for bits in [1u64, 8, 21, 64, 4096] {
            assert_eq!(product_mod(fac.clone(), &s, bits), want);
        }
    }
}
