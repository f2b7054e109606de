//! Prime enumeration over intervals (segmented sieve) and a deterministic
//! 64-bit primality test.

use crate::par;

/// Range `(lo, hi]`: `lo` exclusive, `hi` inclusive. Empty when `lo >= hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: u64,
    pub hi: u64,
}

impl Interval {
    pub fn new(lo: u64, hi: u64) -> Interval {
        Interval { lo, hi }
    }

    pub fn len(&self) -> u64 {
        self.hi.saturating_sub(self.lo)
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn contains(&self, n: u64) -> bool {
        self.lo < n && n <= self.hi
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}]", self.lo, self.hi)
    }
}

/// Default sieve segment size: 1 MiB of bits per segment.
pub const DEFAULT_SEGMENT_BYTES: usize = 1 << 20;

/// All primes in `iv`, ascending.
pub fn sieve_interval(iv: Interval) -> Vec<u64> {
    sieve_interval_budgeted(iv, DEFAULT_SEGMENT_BYTES)
}

/// As [`sieve_interval`] with an explicit per-segment bitmap budget in bytes.
/// Segments are independent, so they sieve in parallel; concatenation order
/// is fixed by segment index.
pub fn sieve_interval_budgeted(iv: Interval, segment_bytes: usize) -> Vec<u64> {
    let lo = iv.lo.max(1); // numbers below 2 are never prime
    if iv.hi < 2 || lo >= iv.hi {
        return Vec::new();
    }
    let base = small_sieve(iv.hi.isqrt());
    let span = (segment_bytes.max(64) as u64) * 8;
    let mut segments = Vec::new();
    let mut start = lo + 1;
    while start <= iv.hi {
        let end = iv.hi.min(start + (span - 1));
        segments.push((start, end));
        start = end + 1;
    }
    let chunks = par::map_vec(&segments, |&(start, end)| sieve_segment(start, end, &base));
    chunks.concat()
}

/// Walk every prime in `iv` in ascending order without materializing the
/// list. Sieve bitmaps stay bounded by [`DEFAULT_SEGMENT_BYTES`], so this is
/// the form the factorial accumulator uses for its long prime scans.
pub fn for_each_prime(iv: Interval, mut visit: impl FnMut(u64)) {
    let lo = iv.lo.max(1);
    if iv.hi < 2 || lo >= iv.hi {
        return;
    }
    let base = small_sieve(iv.hi.isqrt());
    let span = (DEFAULT_SEGMENT_BYTES as u64) * 8;
    let mut start = lo + 1;
    while start <= iv.hi {
        let end = iv.hi.min(start + (span - 1));
        for p in sieve_segment(start, end, &base) {
            visit(p);
        }
        start = end + 1;
    }
}

/// Primes p in `iv` with p ≡ 1 (mod e). `e` is normally one of the even
/// class-number-one values; `e = 1` means no congruence restriction.
pub fn primes_in_class(iv: Interval, e: u64) -> Vec<u64> {
    debug_assert!(e >= 1);
    let mut v = sieve_interval(iv);
    if e > 1 {
        v.retain(|p| p % e == 1);
    }
    v
}

fn small_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn sieve_segment(start: u64, end: u64, base: &[u64]) -> Vec<u64> {
    let len = (end - start + 1) as usize;
    let mut composite = vec![false; len];
    for &p in base {
        if p * p > end {
            break;
        }
        let mut m = (start + p - 1) / p * p;
        if m < p * p {
            m = p * p;
        }
        while m <= end {
            composite[(m - start) as usize] = true;
            m += p;
        }
    }
    let mut out = Vec::new();
    for i in 0..len {
        let n = start + i as u64;
        if n >= 2 && !composite[i] {
            out.push(n);
        }
    }
    out
}

/// Deterministic primality for any 64-bit integer (Miller-Rabin with a base
/// set known exhaustive below 2^64).
pub fn is_prime_64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'outer: for &b in &BASES {
        let mut x = pow_mod_64(b, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_64(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

pub(crate) fn mul_mod_64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod_64(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_64(acc, b, m);
        }
        b = mul_mod_64(b, b, m);
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_intervals() {
        assert_eq!(
            sieve_interval(Interval::new(0, 30)),
            [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
        );
        assert_eq!(sieve_interval(Interval::new(10, 20)), [11, 13, 17, 19]);
        assert_eq!(sieve_interval(Interval::new(113, 127)), [127]);
        assert!(sieve_interval(Interval::new(20, 22)).is_empty());
    }

    #[test]
    fn pi_of_a_million() {
        assert_eq!(sieve_interval(Interval::new(0, 1_000_000)).len(), 78_498);
    }

    #[test]
    fn classes() {
        assert_eq!(primes_in_class(Interval::new(0, 30), 4), [5, 13, 17, 29]);
        assert_eq!(primes_in_class(Interval::new(0, 30), 6), [7, 13, 19]);
        assert_eq!(
            primes_in_class(Interval::new(3_333_300, 3_333_340), 18),
            [3_333_313, 3_333_331]
        );
    }

    #[test]
    fn primality() {
        assert!(is_prime_64(563));
        assert!(!is_prime_64(1));
        assert!(is_prime_64(3_333_331));
        assert!(is_prime_64(2));
        assert!(!is_prime_64(561)); // Carmichael
        assert!(is_prime_64((1 << 61) - 1)); // Mersenne
        assert!(!is_prime_64((1 << 62) - 1)); // (2^31-1)(2^31+1)
    }

    #[test]
    fn split_concat() {
        let whole = sieve_interval(Interval::new(100, 5000));
        let mut parts = sieve_interval(Interval::new(100, 1234));
        parts.extend(sieve_interval(Interval::new(1234, 5000)));
        assert_eq!(whole, parts);
    }

    #[test]
    fn tiny_segments_agree() {
        let a = sieve_interval_budgeted(Interval::new(0, 10_000), 64);
        let b = sieve_interval(Interval::new(0, 10_000));
        assert_eq!(a, b);
    }
}
