//! End-to-end search over an interval: enumerate primes, assign each to
//! its cheapest admissible e, run the factorial engine once per class,
//! recover every (p−1)! mod p² through the order-e machinery, and keep
//! the near misses.
//!
//! Determinism contract: identical [`SearchConfig`] (seed included)
//! produces identical [`SearchOutcome`] records and an identical output
//! file, regardless of thread count. Everything randomized derives its
//! stream from the config seed and the prime it serves.

use crate::checkpoint::CkptCtl;
use crate::cyclotomic::CycloField;
use crate::error::{Error, Result};
use crate::identities::{self, ESet};
use crate::par;
use crate::primes::{self, Interval};
use crate::wilson::{self, ClassJob, SpaceMeter, TreeMode, WilsonRecord};
use num_bigint::BigUint;
use num_traits::One;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

/// Everything a search run depends on. `threads`, `checkpoint_dir` and
/// `out_path` are operational knobs and excluded from [`config_hash`]:
/// they must not change the computed records.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Primes in (lo, hi] are searched.
    pub interval: Interval,
    /// Ceiling for tracked big-integer storage, in bytes.
    pub byte_budget: u64,
    pub e_set: ESet,
    /// Keep records with |w| · den ≤ p · num.
    pub near_ratio: (u64, u64),
    pub seed: u64,
    /// 0 means whatever the global pool offers.
    pub threads: usize,
    pub checkpoint_dir: Option<PathBuf>,
    pub out_path: Option<PathBuf>,
}

impl SearchConfig {
    /// Defaults for everything but the interval: full e list, 1/50000
    /// near-miss ratio, effectively unlimited memory, no files.
    pub fn new(lo: u64, hi: u64) -> SearchConfig {
        SearchConfig {
            interval: Interval { lo, hi },
            byte_budget: u64::MAX / 2,
            e_set: ESet::full(),
            near_ratio: (1, 50_000),
            seed: 0,
            threads: 0,
            checkpoint_dir: None,
            out_path: None,
        }
    }
}

/// What a finished run reports.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub primes_scanned: u64,
    /// Every prime in the interval, ascending.
    pub records: Vec<WilsonRecord>,
    /// The subset passing the near-miss filter, ascending.
    pub near_misses: Vec<WilsonRecord>,
    pub wilson_primes: Vec<u64>,
    /// Primes handled per e (1 = no admissible order divided p−1).
    pub per_e: BTreeMap<u64, u64>,
    pub peak_tracked_bytes: u64,
    pub stage1_ms: u64,
    pub stage2_ms: u64,
    pub stage3_ms: u64,
}

/// Digest of the semantic configuration: interval, budget, e set, ratio,
/// seed. Checkpoints carry it so a resumed run cannot silently mix
/// incompatible state.
pub fn config_hash(cfg: &SearchConfig) -> [u8; 32] {
    let mut canon = String::new();
    write!(
        canon,
        "wilsonsearch-config-v1;lo={};hi={};budget={};eset={:?};near={}/{};seed={}",
        cfg.interval.lo,
        cfg.interval.hi,
        cfg.byte_budget,
        cfg.e_set.values(),
        cfg.near_ratio.0,
        cfg.near_ratio.1,
        cfg.seed
    )
    .expect("write to String");
    Sha256::digest(canon.as_bytes()).into()
}

pub fn run_search(cfg: &SearchConfig) -> Result<SearchOutcome> {
    run_search_controlled(cfg, None)
}

/// As [`run_search`], stopping with [`Error::Interrupted`] after the n-th
/// checkpoint write when `stop_after` is set. Exercises resume paths.
pub fn run_search_controlled(
    cfg: &SearchConfig,
    stop_after: Option<u64>,
) -> Result<SearchOutcome> {
    validate(cfg)?;
    #[cfg(feature = "parallel")]
    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        return pool.install(|| search_inner(cfg, stop_after));
    }
    search_inner(cfg, stop_after)
}

fn validate(cfg: &SearchConfig) -> Result<()> {
    let (num, den) = cfg.near_ratio;
    if num == 0 || den == 0 || num > den {
        return Err(Error::InvalidInput(format!(
            "near-miss ratio {num}/{den} outside (0, 1]"
        )));
    }
    if cfg.interval.lo < 1 || cfg.interval.hi < cfg.interval.lo {
        return Err(Error::InvalidInput(format!(
            "bad interval ({}, {}]",
            cfg.interval.lo, cfg.interval.hi
        )));
    }
    Ok(())
}

fn near_miss(rec: &WilsonRecord, ratio: (u64, u64)) -> bool {
    rec.w.unsigned_abs() as u128 * ratio.1 as u128 <= rec.p as u128 * ratio.0 as u128
}

fn search_inner(cfg: &SearchConfig, stop_after: Option<u64>) -> Result<SearchOutcome> {
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| {
            Error::Checkpoint(format!("cannot create {}: {e}", dir.display()))
        })?;
    }
    let ckpt = CkptCtl::new(cfg.checkpoint_dir.clone(), config_hash(cfg), stop_after);
    let meter = SpaceMeter::new();

    let mut buckets: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let mut saw_two = false;
    let mut scanned = 0u64;
    primes::for_each_prime(cfg.interval, |p| {
        scanned += 1;
        if p == 2 {
            saw_two = true;
        } else {
            let e = cfg.e_set.best_e(p).unwrap_or(1);
            buckets.entry(e).or_default().push(p);
        }
    });

    let mut records: Vec<WilsonRecord> = Vec::new();
    if saw_two {
        // 1! = 1 mod 4, quotient (1+1)/2 = 1, centered to −1
        records.push(WilsonRecord {
            p: 2,
            w: -1,
            residue: BigUint::one(),
        });
    }

    // Fields are built once per distinct order, up front: construction is
    // the expensive part (unit lattice, perturbation bootstrap).
    let mut fields: BTreeMap<u64, CycloField> = BTreeMap::new();
    for &e in buckets.keys() {
        if e >= 4 {
            fields.insert(e, CycloField::new(e)?);
        }
    }

    let mut per_e = BTreeMap::new();
    let (mut s1, mut s2, mut s3) = (0u64, 0u64, 0u64);
    // Largest e first: the cheapest classes clear the board early, and
    // resume order stays deterministic.
    for (&e, ps) in buckets.iter().rev() {
        per_e.insert(e, ps.len() as u64);
        let job = ClassJob {
            e,
            iv: cfg.interval,
            primes: ps,
        };
        let got = wilson::class_factorials(&job, TreeMode::Auto, cfg.byte_budget, &meter, &ckpt)?;
        s1 += got.stage1_ms;
        s2 += got.stage2_ms;

        let t3 = Instant::now();
        let recs = match e {
            1 => wilson::records_from_plain_leaves(got.leaves)?,
            2 => par::try_map_vec(&got.leaves, |(p, half)| {
                let residue = wilson::reduce2_recover(*p, half);
                let w = wilson::quotient_from_residue(*p, &residue)?;
                Ok(WilsonRecord {
                    p: *p,
                    w,
                    residue,
                })
            })?,
            _ => {
                let field = &fields[&e];
                let seed = cfg.seed;
                par::try_map_vec(&got.leaves, move |(p, f_fact)| {
                    let ctx = identities::prepare_stage3(*p, e, seed, field)?;
                    if !identities::stage3_root_check(*p, e, f_fact, &ctx.gamma) {
                        return Err(Error::Integrity(format!(
                            "(−f!)^e · γ is no e-th root of unity for p = {p}"
                        )));
                    }
                    let residue = identities::recover_wilson(f_fact, &ctx)?;
                    let w = wilson::quotient_from_residue(*p, &residue)?;
                    Ok(WilsonRecord {
                        p: *p,
                        w,
                        residue,
                    })
                })?
            }
        };
        s3 += t3.elapsed().as_millis() as u64;
        records.extend(recs);
    }
    records.sort_by_key(|r| r.p);

    let near_misses: Vec<WilsonRecord> = records
        .iter()
        .filter(|r| near_miss(r, cfg.near_ratio))
        .cloned()
        .collect();
    let wilson_primes: Vec<u64> = records.iter().filter(|r| r.w == 0).map(|r| r.p).collect();

    if let Some(path) = &cfg.out_path {
        std::fs::write(path, render_residue_file(&near_misses))?;
    }

    Ok(SearchOutcome {
        primes_scanned: scanned,
        records,
        near_misses,
        wilson_primes,
        per_e,
        peak_tracked_bytes: meter.peak(),
        stage1_ms: s1,
        stage2_ms: s2,
        stage3_ms: s3,
    })
}

/// The residue archive: `wilsonsearch v1` header, then `p w a0 a1` per
/// line with residue = a0 + a1·p, ascending p.
pub fn render_residue_file(records: &[WilsonRecord]) -> String {
    let mut out = String::from("wilsonsearch v1\n");
    for r in records {
        writeln!(out, "{} {} {} {}", r.p, r.w, r.a0(), r.a1()).expect("write to String");
    }
    out
}

/// (Σ_{p<x} 1/p exactly by sieve, log log x + 0.2615): the observed and
/// asymptotic densities behind "how many Wilson primes should an interval
/// hold".
pub fn expected_count(x: u64) -> (f64, f64) {
    assert!(x >= 3, "estimate needs x >= 3");
    let mut sum = 0.0;
    primes::for_each_prime(Interval { lo: 1, hi: x - 1 }, |p| sum += 1.0 / p as f64);
    (sum, (x as f64).ln().ln() + 0.2615)
}
