//! Wilson quotients via factorial residue trees.
//!
//! Everything here reduces to one engine: compute f! mod p² for every prime
//! p of a job, where f = (p−1)/e. The engine works in "f-space": a prime's
//! leaf index is f, stage 1 supplies the factorial of the interval's start,
//! and a product tree of the integers between consecutive leaves advances
//! the factorial from one prime to the next during the descent. With e = 1
//! (f = p−1, no congruence class) this is the plain range algorithm and the
//! leaf value f! is already (p−1)! mod p²; with even e the leaves feed the
//! cyclotomic recovery in the identities module.
//!
//! Two tree layouts share the descent logic. The full layout materializes
//! the whole interval as aligned product trees (factor tree and squared
//! prime tree) and is used for small ranges and for the from-scratch
//! computation of all quotients up to a bound. The two-stage layout splits
//! at a shallow level ell: above it, node products are recomputed on demand
//! and factor products are reduced modulo the sibling's prime-square node as
//! they are built, so nothing deeper than one level is ever stored; below
//! it, each node becomes an independent full subtree. That keeps peak
//! storage proportional to the interval, not its position.

use crate::checkpoint::{CkptCtl, JobState, Stage};
use crate::error::{Error, Result};
use crate::par;
use crate::primes::{for_each_prime, sieve_interval, Interval};
use crate::treearith::{product_tree, ProductAccumulator};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

/// One prime's result: the factorial residue and the centered quotient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WilsonRecord {
    pub p: u64,
    /// ((p−1)! + 1)/p mod p, centered into [−p/2, p/2); zero exactly for
    /// Wilson primes.
    pub w: i64,
    /// (p−1)! mod p².
    pub residue: BigUint,
}

impl WilsonRecord {
    /// Low digit of the residue in base p: residue = a0 + a1·p.
    pub fn a0(&self) -> u64 {
        (&self.residue % self.p).to_u64().unwrap()
    }

    /// High digit of the residue in base p.
    pub fn a1(&self) -> u64 {
        (&self.residue / self.p).to_u64().unwrap()
    }
}

/// Peak tracker for big-integer storage. Persistent allocations are
/// add/sub'd; short-lived spikes (product buffers) bump the peak without
/// moving the floor. Shared freely across worker threads.
pub(crate) struct SpaceMeter {
    cur: AtomicU64,
    peak: AtomicU64,
}

impl SpaceMeter {
    pub fn new() -> Self {
        SpaceMeter {
            cur: AtomicU64::new(0),
            peak: AtomicU64::new(0),
        }
    }

    pub fn add(&self, bytes: u64) {
        let now = self.cur.fetch_add(bytes, Ordering::Relaxed) + bytes;
        self.peak.fetch_max(now, Ordering::Relaxed);
    }

    pub fn sub(&self, bytes: u64) {
        self.cur.fetch_sub(bytes, Ordering::Relaxed);
    }

    pub fn spike(&self, bytes: u64) {
        let now = self.cur.load(Ordering::Relaxed) + bytes;
        self.peak.fetch_max(now, Ordering::Relaxed);
    }

    pub fn peak(&self) -> u64 {
        self.peak.load(Ordering::Relaxed)
    }
}

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

fn bytes_of(n: &BigUint) -> u64 {
    n.bits().div_ceil(8)
}

/// Buffers below this are pointless: flushing every handful of words costs
/// more in bookkeeping than it saves in memory.
const MIN_BUFFER_BITS: u64 = 4096;

fn buffer_bits_for(s: &BigUint) -> u64 {
    s.bits().max(MIN_BUFFER_BITS)
}

/// n! mod s with bounded memory: prime exponents are split into binary
/// digits, the primes contributing to each digit are streamed through a
/// buffered modular product, and a square-and-multiply pass over the digits
/// assembles the factorial. Peak usage is one product buffer plus a couple
/// of residues of |s|, up to the documented constants; a budget too small
/// for that is reported as an error rather than exceeded.
pub fn factorial_mod(n: u64, s: &BigUint, byte_budget: u64) -> Result<BigUint> {
    let meter = SpaceMeter::new();
    factorial_mod_impl(n, s, byte_budget, &meter, None, &mut |_, _| Ok(()))
}

/// Exponent of prime p in n! by repeated division.
fn exponent_in_factorial(n: u64, p: u64) -> u64 {
    let mut e = 0;
    let mut m = n;
    while m > 0 {
        m /= p;
        e += m;
    }
    e
}

/// Engine form of [`factorial_mod`]: metered, resumable at a digit boundary
/// (`resume` = digit already folded in and the partial product), and calling
/// `on_digit` after each digit so the owner can checkpoint or interrupt.
pub(crate) fn factorial_mod_impl(
    n: u64,
    s: &BigUint,
    byte_budget: u64,
    meter: &SpaceMeter,
    resume: Option<(u32, BigUint)>,
    on_digit: &mut dyn FnMut(u32, &BigUint) -> Result<()>,
) -> Result<BigUint> {
    if s.is_one() {
        return Ok(BigUint::zero());
    }
    let buffer_bits = buffer_bits_for(s);
    let required = buffer_bits.div_ceil(8) + 3 * bytes_of(s) + 1024;
    if byte_budget < required {
        return Err(Error::Budget {
            required,
            available: byte_budget,
        });
    }
    if n <= 1 {
        return Ok(BigUint::one());
    }

    // Highest binary digit over all prime exponents; the exponent of 2 is
    // the largest.
    let top = exponent_in_factorial(n, 2).ilog2();
    let (start, mut c) = match resume {
        Some((digit, partial)) => (digit, partial),
        None => (top + 1, BigUint::one()),
    };

    for i in (0..start).rev() {
        c = &c * &c % s;
        // A prime can contribute to digit i only if its exponent reaches
        // 2^i, which forces p ≤ n/2^i + 1.
        let bound = n.min((n >> i) + 1);
        let mut acc =
            ProductAccumulator::new(s, buffer_bits, |b| meter.spike(b + 2 * bytes_of(s)));
        for_each_prime(Interval::new(1, bound), |p| {
            if (exponent_in_factorial(n, p) >> i) & 1 == 1 {
                acc.push(big(p));
            }
        });
        c = c * acc.finish() % s;
        on_digit(i, &c)?;
    }
    Ok(c)
}

/// Centered Wilson quotient from r = (p−1)! mod p². The mod-p congruence
/// (p−1)! ≡ −1 is checked first: a violation means a corrupted residue, not
/// a mathematical possibility.
pub fn quotient_from_residue(p: u64, r: &BigUint) -> Result<i64> {
    if p < 2 {
        return Err(Error::InvalidInput(format!("{p} is not a prime")));
    }
    if (r % p).to_u64() != Some(p - 1) {
        return Err(Error::Integrity(format!(
            "residue for p={p} is not congruent to -1 mod p"
        )));
    }
    let w = ((r + 1u32) / p % p).to_u64().unwrap();
    Ok(if w < p.div_ceil(2) {
        w as i64
    } else {
        w as i64 - p as i64
    })
}

/// (p−1)! mod p² from the half factorial h = ((p−1)/2)! mod p², via
/// (p−1)! = (−1)^{(p−1)/2} · h² · (2^p − 1) mod p².
pub fn reduce2_recover(p: u64, h: &BigUint) -> BigUint {
    debug_assert!(p % 2 == 1, "p must be odd");
    let p2 = big(p) * p;
    let m = big(2).modpow(&big(p), &p2) + (&p2 - 1u32); // 2^p − 1 mod p²
    let t = h * h % &p2 * (m % &p2) % &p2;
    if ((p - 1) / 2) % 2 == 1 {
        (&p2 - t) % p2
    } else {
        t
    }
}

/// How the engine lays out the descent tree.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum TreeMode {
    /// Materialize the whole interval as one pair of trees.
    Full,
    /// Two-stage layout unless the interval is too small for it to matter.
    Auto,
}

/// A congruence-class job: all primes of one class within one interval.
pub(crate) struct ClassJob<'a> {
    pub e: u64,
    pub iv: Interval,
    /// Ascending; every p satisfies p ≡ 1 (mod e) and lies in `iv`.
    pub primes: &'a [u64],
}

pub(crate) struct ClassLeaves {
    /// (p, f! mod p²) in ascending p, f = (p−1)/e.
    pub leaves: Vec<(u64, BigUint)>,
    pub stage1_ms: u64,
    pub stage2_ms: u64,
}

impl ClassLeaves {
    fn empty() -> Self {
        ClassLeaves {
            leaves: Vec::new(),
            stage1_ms: 0,
            stage2_ms: 0,
        }
    }
}

/// Intervals shorter than this skip the two-stage split; the asymptotic
/// level choice degenerates at that size.
const FULL_TREE_CUTOFF: u64 = 16;

/// ∏ of the integers in (lo, hi], as an exact product tree root.
fn range_product(lo: u64, hi: u64) -> BigUint {
    if hi <= lo {
        return BigUint::one();
    }
    let leaves: Vec<BigUint> = (lo + 1..=hi).map(big).collect();
    product_tree(&leaves).root().clone()
}

/// Aligned-tree descent over one fully materialized block.
///
/// `fp` holds the block's (f, p) leaves ascending; `a` is the f-value the
/// incoming `w_root` is the factorial of. Returns (p, f! mod p²) per leaf.
fn full_block(a: u64, fp: &[(u64, u64)], w_root: &BigUint, meter: &SpaceMeter) -> Vec<(u64, BigUint)> {
    if fp.is_empty() {
        return Vec::new();
    }
    let s_leaves: Vec<BigUint> = fp.iter().map(|&(_, p)| big(p) * p).collect();
    let s_tree = product_tree(&s_leaves);
    // Gap products: leaf k carries every integer after the previous leaf up
    // to and including its own f, so sibling products advance the factorial
    // across non-prime stretches for free.
    let a_leaves = par::map_indices(fp.len(), |k| {
        let lo = if k == 0 { a } else { fp[k - 1].0 };
        range_product(lo, fp[k].0)
    });
    let a_tree = product_tree(&a_leaves);
    let held = s_tree.byte_size() + a_tree.byte_size();
    meter.add(held);

    let top = s_tree.levels().len() - 1;
    let mut w = vec![w_root % s_tree.root()];
    for k in (0..top).rev() {
        let s_level = &s_tree.levels()[k];
        let a_level = &a_tree.levels()[k];
        let parent = w;
        w = par::map_indices(s_level.len(), |j| {
            if j % 2 == 0 {
                &parent[j / 2] % &s_level[j]
            } else {
                &parent[j / 2] * &a_level[j - 1] % &s_level[j]
            }
        });
        meter.spike(w.iter().map(bytes_of).sum());
    }

    let out = par::map_indices(fp.len(), |k| {
        let val = &w[k] * &a_leaves[k] % &s_leaves[k];
        (fp[k].1, val)
    });
    meter.sub(held);
    out
}

/// Product of p² over a slice of (f, p) pairs; 1 when empty.
fn s_node(fp: &[(u64, u64)]) -> BigUint {
    if fp.is_empty() {
        return BigUint::one();
    }
    let leaves: Vec<BigUint> = fp.iter().map(|&(_, p)| big(p) * p).collect();
    product_tree(&leaves).root().clone()
}

/// ∏ of the integers in (lo, hi] reduced mod s, streamed through a bounded
/// buffer.
fn range_product_mod(lo: u64, hi: u64, s: &BigUint, meter: &SpaceMeter) -> BigUint {
    let mut acc = ProductAccumulator::new(s, buffer_bits_for(s), |b| meter.spike(b));
    for k in lo + 1..=hi {
        acc.push(big(k));
    }
    acc.finish()
}

/// Run one class job end to end: stage 1 (factorial of the f-interval
/// start), stage 2 (tree descent), leaf extraction. Checkpoints at every
/// stage boundary through `ckpt` and resumes from whatever state it finds
/// there.
pub(crate) fn class_factorials(
    job: &ClassJob,
    mode: TreeMode,
    byte_budget: u64,
    meter: &SpaceMeter,
    ckpt: &CkptCtl,
) -> Result<ClassLeaves> {
    if job.primes.is_empty() {
        return Ok(ClassLeaves::empty());
    }
    debug_assert!(job.iv.lo >= 1);
    debug_assert!(job.primes.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(job
        .primes
        .iter()
        .all(|&p| job.iv.contains(p) && (job.e == 1 || p % job.e == 1)));

    let f_lo = (job.iv.lo - 1) / job.e;
    let f_hi = (job.iv.hi - 1) / job.e;
    let fp: Vec<(u64, u64)> = job.primes.iter().map(|&p| ((p - 1) / job.e, p)).collect();

    let resume = ckpt.resume_state(job.e, job.iv)?;
    if let Some(state) = &resume {
        if state.stage == Stage::Stage3 {
            if state.nums.len() != fp.len() {
                return Err(Error::Checkpoint(format!(
                    "stage-3 checkpoint for e={} holds {} residues, expected {}",
                    job.e,
                    state.nums.len(),
                    fp.len()
                )));
            }
            let leaves = fp
                .iter()
                .zip(&state.nums)
                .map(|(&(_, p), r)| (p, r.clone()))
                .collect();
            return Ok(ClassLeaves {
                leaves,
                stage1_ms: 0,
                stage2_ms: 0,
            });
        }
    }

    let s_full = s_node(&fp);
    let s_bytes = bytes_of(&s_full);
    let required = 4 * s_bytes + buffer_bits_for(&s_full).div_ceil(8) + 4096;
    if byte_budget < required {
        return Err(Error::Budget {
            required,
            available: byte_budget,
        });
    }
    meter.add(s_bytes);

    let state_for = |stage: Stage, nums: Vec<BigUint>| JobState {
        config_hash: *ckpt.config_hash(),
        e: job.e,
        interval: job.iv,
        stage,
        nums,
    };

    // Stage 1, unless a stage-2 checkpoint already supersedes it.
    let t0 = Instant::now();
    let (mut wvec, zone_start) = match &resume {
        Some(state) => match state.stage {
            Stage::Stage2Level(level) => {
                if state.nums.len() != 1usize << level {
                    return Err(Error::Checkpoint(format!(
                        "stage-2 checkpoint for e={} holds {} nodes, expected {}",
                        job.e,
                        state.nums.len(),
                        1u64 << level
                    )));
                }
                (state.nums.clone(), level + 1)
            }
            Stage::Stage1Digit(digit) => {
                let c = state.nums.first().cloned().ok_or_else(|| {
                    Error::Checkpoint("stage-1 checkpoint holds no partial product".into())
                })?;
                let root = factorial_mod_impl(
                    f_lo,
                    &s_full,
                    byte_budget,
                    meter,
                    Some((digit, c)),
                    &mut |i, c| ckpt.boundary(&state_for(Stage::Stage1Digit(i), vec![c.clone()])),
                )?;
                (vec![root], 1)
            }
            Stage::Stage3 => unreachable!("handled above"),
        },
        None => {
            let root = factorial_mod_impl(f_lo, &s_full, byte_budget, meter, None, &mut |i, c| {
                ckpt.boundary(&state_for(Stage::Stage1Digit(i), vec![c.clone()]))
            })?;
            (vec![root], 1)
        }
    };
    let stage1_ms = t0.elapsed().as_millis() as u64;

    // Stage 2. The recompute zone descends level by level using the floor
    // rule off(j) = f_lo + ⌊jL/2^i⌋ for node boundaries, so every node is an
    // exact integer interval; at level ell each node becomes a full block.
    let t1 = Instant::now();
    let len = f_hi - f_lo;
    let ell: u32 = if mode == TreeMode::Full || len < FULL_TREE_CUTOFF {
        0
    } else {
        let d = len.next_power_of_two().ilog2();
        (((len as f64).log2().log2() * 2.0).floor() as u32).min(d)
    };
    let off = |level: u32, j: u64| f_lo + ((j as u128 * len as u128) >> level) as u64;
    let fp_in = |lo: u64, hi: u64| {
        let a = fp.partition_point(|&(f, _)| f <= lo);
        let b = fp.partition_point(|&(f, _)| f <= hi);
        &fp[a..b]
    };

    if zone_start > 1 {
        // Resumed mid-zone; the checkpointed level must lie inside it.
        if zone_start > ell + 1 {
            return Err(Error::Checkpoint(format!(
                "stage-2 checkpoint level {} exceeds recompute zone depth {}",
                zone_start - 1,
                ell
            )));
        }
    }

    for level in zone_start..=ell {
        let held: u64 = wvec.iter().map(bytes_of).sum();
        let parent = wvec;
        let halves = par::map_indices(parent.len(), |jp| {
            let jp = jp as u64;
            let (lo, mid, hi) = (
                off(level, 2 * jp),
                off(level, 2 * jp + 1),
                off(level, 2 * jp + 2),
            );
            let w = &parent[jp as usize];
            let s0 = s_node(fp_in(lo, mid));
            let s1 = s_node(fp_in(mid, hi));
            let w0 = if s0.is_one() { BigUint::zero() } else { w % &s0 };
            let w1 = if s1.is_one() {
                BigUint::zero()
            } else {
                // Advance past the left half: multiply by ∏(lo, mid],
                // reduced against the right node as it is built.
                w * range_product_mod(lo, mid, &s1, meter) % &s1
            };
            [w0, w1]
        });
        wvec = halves.into_iter().flatten().collect();
        meter.spike(held + wvec.iter().map(bytes_of).sum::<u64>());
        ckpt.boundary(&state_for(Stage::Stage2Level(level), wvec.clone()))?;
    }

    // Full blocks under each zone node, independent of one another.
    let blocks = par::map_indices(wvec.len(), |j| {
        let (lo, hi) = (off(ell, j as u64), off(ell, j as u64 + 1));
        full_block(lo, fp_in(lo, hi), &wvec[j], meter)
    });
    let leaves: Vec<(u64, BigUint)> = blocks.into_iter().flatten().collect();
    debug_assert_eq!(leaves.len(), fp.len());
    let stage2_ms = t1.elapsed().as_millis() as u64;

    meter.sub(s_bytes);
    ckpt.boundary(&state_for(
        Stage::Stage3,
        leaves.iter().map(|(_, r)| r.clone()).collect(),
    ))?;
    Ok(ClassLeaves {
        leaves,
        stage1_ms,
        stage2_ms,
    })
}

pub(crate) fn records_from_plain_leaves(leaves: Vec<(u64, BigUint)>) -> Result<Vec<WilsonRecord>> {
    par::try_map_vec(&leaves, |(p, residue)| {
        let w = quotient_from_residue(*p, residue)?;
        Ok(WilsonRecord {
            p: *p,
            w,
            residue: residue.clone(),
        })
    })
}

/// Wilson records for every prime p ≤ n, from one fully materialized tree.
pub fn wilson_all(n: u64) -> Result<Vec<WilsonRecord>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "bound {n} is below the smallest prime"
        )));
    }
    let primes = sieve_interval(Interval::new(1, n));
    let job = ClassJob {
        e: 1,
        iv: Interval::new(1, n),
        primes: &primes,
    };
    let meter = SpaceMeter::new();
    let got = class_factorials(&job, TreeMode::Full, u64::MAX / 2, &meter, &CkptCtl::disabled())?;
    records_from_plain_leaves(got.leaves)
}

/// Range result plus the tracked peak of big-integer storage, for space
/// profiling.
pub struct RangeReport {
    pub records: Vec<WilsonRecord>,
    pub peak_tracked_bytes: u64,
}

/// Wilson records for every prime in `iv` under a memory budget, via the
/// two-stage engine.
pub fn wilson_range(iv: Interval, byte_budget: u64) -> Result<Vec<WilsonRecord>> {
    Ok(wilson_range_report(iv, byte_budget)?.records)
}

/// As [`wilson_range`], also reporting peak tracked storage.
pub fn wilson_range_report(iv: Interval, byte_budget: u64) -> Result<RangeReport> {
    if iv.lo < 1 {
        return Err(Error::InvalidInput(
            "interval must start at 1 or later".into(),
        ));
    }
    let primes = sieve_interval(iv);
    let job = ClassJob {
        e: 1,
        iv,
        primes: &primes,
    };
    let meter = SpaceMeter::new();
    let got = class_factorials(&job, TreeMode::Auto, byte_budget, &meter, &CkptCtl::disabled())?;
    Ok(RangeReport {
        records: records_from_plain_leaves(got.leaves)?,
        peak_tracked_bytes: meter.peak(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(n: u64, m: u64) -> u64 {
        (2..=n).fold(1u128, |a, k| a * k as u128 % m as u128) as u64
    }

    #[test]
    fn factorial_small() {
        assert_eq!(factorial_mod(10, &big(49), 1 << 20).unwrap(), big(7));
        assert_eq!(factorial_mod(0, &big(10), 1 << 20).unwrap(), big(1));
        assert_eq!(factorial_mod(1, &big(10), 1 << 20).unwrap(), big(1));
        let s = big(121) * big(169);
        let r = factorial_mod(10, &s, 1 << 20).unwrap();
        assert_eq!(&r % 121u32, big(10));
        assert_eq!(&r % 169u32, big(32));
    }

    #[test]
    fn factorial_matches_direct() {
        let s = big(1_000_003);
        for n in [2u64, 31, 64, 100, 1000, 4999] {
            assert_eq!(
                factorial_mod(n, &s, 1 << 20).unwrap(),
                big(naive(n, 1_000_003)),
                "n = {n}"
            );
        }
    }

    #[test]
    fn factorial_budget_too_small() {
        let s = big(1_000_003);
        match factorial_mod(100, &s, 16) {
            Err(Error::Budget {
                required,
                available,
            }) => {
                assert!(required > available);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn quotient_examples() {
        assert_eq!(quotient_from_residue(5, &big(24)).unwrap(), 0);
        assert_eq!(quotient_from_residue(7, &big(34)).unwrap(), -2);
        assert_eq!(quotient_from_residue(11, &big(10)).unwrap(), 1);
        assert!(matches!(
            quotient_from_residue(7, &big(33)),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn reduce2_examples() {
        assert_eq!(reduce2_recover(7, &big(6)), big(34));
        assert_eq!(reduce2_recover(5, &big(2)), big(24));
        assert_eq!(reduce2_recover(13, &big(44)), big(168));
    }

    #[test]
    fn all_up_to_13() {
        let records = wilson_all(13).unwrap();
        let ps: Vec<u64> = records.iter().map(|r| r.p).collect();
        assert_eq!(ps, [2, 3, 5, 7, 11, 13]);
        let by_p = |p: u64| records.iter().find(|r| r.p == p).unwrap();
        assert_eq!(by_p(5).w, 0);
        assert_eq!(by_p(13).w, 0);
        assert_eq!(by_p(7).w, -2);
        assert_eq!(by_p(11).w, 1);
    }

    #[test]
    fn exactly_three_wilson_primes_below_600() {
        let records = wilson_all(600).unwrap();
        let wilsons: Vec<u64> = records.iter().filter(|r| r.w == 0).map(|r| r.p).collect();
        assert_eq!(wilsons, [5, 13, 563]);
    }

    #[test]
    fn range_matches_oracle() {
        let records = wilson_range(Interval::new(10, 20), 1 << 24).unwrap();
        let ps: Vec<u64> = records.iter().map(|r| r.p).collect();
        assert_eq!(ps, [11, 13, 17, 19]);
        for r in &records {
            let p2 = r.p * r.p;
            assert_eq!(r.residue, big(naive(r.p - 1, p2)), "p = {}", r.p);
        }
    }

    #[test]
    fn chunked_range_matches_full_tree() {
        let whole = wilson_all(600).unwrap();
        let mut chunked = Vec::new();
        for (lo, hi) in [(1, 100), (100, 280), (280, 449), (449, 600)] {
            chunked.extend(wilson_range(Interval::new(lo, hi), 1 << 24).unwrap());
        }
        assert_eq!(whole, chunked);
    }

    #[test]
    fn class_job_leaves_match_oracle() {
        // e = 6 over (0, 600]: leaves must be ((p-1)/6)! mod p².
        let iv = Interval::new(1, 600);
        let primes: Vec<u64> = sieve_interval(iv).into_iter().filter(|p| p % 6 == 1).collect();
        let job = ClassJob {
            e: 6,
            iv,
            primes: &primes,
        };
        let meter = SpaceMeter::new();
        let got = class_factorials(&job, TreeMode::Auto, 1 << 24, &meter, &CkptCtl::disabled())
            .unwrap();
        assert_eq!(got.leaves.len(), primes.len());
        for (p, r) in got.leaves {
            assert_eq!(r, big(naive((p - 1) / 6, p * p)), "p = {p}");
        }
    }

    #[test]
    fn class_job_away_from_origin() {
        // Interval start not aligned to the class: checks the f-interval
        // boundary arithmetic (p = 13 with e = 4 sits right past lo = 12).
        for (lo, hi, e) in [(12, 100, 4), (13, 113, 4), (10, 2000, 10)] {
            let iv = Interval::new(lo, hi);
            let primes: Vec<u64> = sieve_interval(iv).into_iter().filter(|p| p % e == 1).collect();
            assert!(!primes.is_empty());
            let job = ClassJob { e, iv, primes: &primes };
            let meter = SpaceMeter::new();
            let got =
                class_factorials(&job, TreeMode::Auto, 1 << 24, &meter, &CkptCtl::disabled())
                    .unwrap();
            for (p, r) in got.leaves {
                assert_eq!(r, big(naive((p - 1) / e, p * p)), "p = {p}, e = {e}");
            }
        }
    }

    #[test]
    fn range_hits_table_value() {
        let records = wilson_range(Interval::new(56_151_900, 56_151_930), 1 << 28).unwrap();
        let hit = records.iter().find(|r| r.p == 56_151_923).unwrap();
        assert_eq!(hit.w, -1);
    }
}
