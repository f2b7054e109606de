//! Independent recomputation oracles for spot-checking search output.
//!
//! Three routes to (p−1)! mod p²: the naive sequential product, a
//! baby-step/giant-step method that builds the half factorial from s ≈ √m
//! polynomial blocks, and the half-factorial squaring identity. None of
//! them touch the product-tree machinery the search itself runs on; the
//! polynomial arithmetic below is local to this module on purpose, so a
//! bug in the main path cannot vouch for itself.

use crate::error::Result;
use crate::wilson::WilsonRecord;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// n! mod m by sequential modular multiplication. Fast u128 path when m
/// fits in 64 bits.
pub fn naive_factorial_mod(n: u64, m: &BigUint) -> BigUint {
    assert!(!m.is_zero(), "modulus must be positive");
    if let Some(m64) = m.to_u64() {
        let mut acc: u64 = 1 % m64;
        for k in 2..=n {
            acc = mul_mod(acc, k % m64, m64);
        }
        return BigUint::from(acc);
    }
    let mut acc = BigUint::one();
    for k in 2..=n {
        acc = acc * k % m;
    }
    acc
}

/// (p−1)! mod p² in roughly √p block multiplications: build
/// F(x) = ∏_{j=1}^{s}(x+j) over Z/p²Z, evaluate it at 0, s, 2s, ... by a
/// remainder tree to collect ⌊m/s⌋ blocks of the half factorial
/// m! = ((p−1)/2)!, pick up the ≤ s leftover factors directly, and square
/// up through the half-factorial identity.
///
/// Coefficients are u64 with u128 products, so p must stay below 2^32.
pub fn sqrt_factorial_mod(p: u64) -> BigUint {
    assert!(p >= 3 && p % 2 == 1, "p must be an odd prime");
    assert!(p < 1 << 32, "p^2 must fit in u64");
    let m = (p - 1) / 2;
    let n2 = p * p;
    let s = {
        let mut s = (m as f64).sqrt().ceil() as u64;
        while s > 1 && (s - 1) * (s - 1) >= m {
            s -= 1;
        }
        while s * s < m {
            s += 1;
        }
        s.max(1)
    };
    let blocks = m / s;

    // F(x) = ∏ (x + j): monic linears, product tree
    let linears: Vec<Vec<u64>> = (1..=s).map(|j| vec![j % n2, 1]).collect();
    let f = product_all(&linears, n2);
    let points: Vec<u64> = (0..blocks).map(|k| k * s).collect();
    let mut half: u64 = 1;
    for v in eval_points(&f, &points, n2) {
        half = mul_mod(half, v, n2);
    }
    for j in blocks * s + 1..=m {
        half = mul_mod(half, j, n2);
    }

    let p2 = BigUint::from(n2);
    half_to_full(p, &BigUint::from(half), &p2)
}

/// (p−1)! from m! = ((p−1)/2)!: (p−1)! ≡ (−1)^m · (m!)² · (2^p −1) mod p².
/// Deliberately a local twin of the identity the search uses; see the
/// module docs.
fn half_to_full(p: u64, half: &BigUint, p2: &BigUint) -> BigUint {
    let t = (BigUint::from(2u32).modpow(&BigUint::from(p), p2) + p2 - 1u32) % p2;
    let full = half * half % p2 * t % p2;
    if (p - 1) / 2 % 2 == 1 {
        (p2 - full) % p2
    } else {
        full
    }
}

/// Which oracle recomputes the residue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMethod {
    /// Sequential product over 2..p−1.
    Naive,
    /// Polynomial baby-step/giant-step, ~√p blocks.
    Sqrt,
    /// Naive half factorial plus the squaring identity.
    Reduce2,
}

/// Outcome of recomputing one record. `agree` is true only when every
/// recomputed residue matches the claimed one and the claim satisfies
/// the mandatory (p−1)! ≡ −1 mod p.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub p: u64,
    pub claimed: BigUint,
    pub recomputed: Vec<(CheckMethod, BigUint)>,
    pub agree: bool,
}

/// Recompute rec's residue by the chosen method and compare. Disagreement
/// is reported, never dropped.
pub fn check_record(rec: &WilsonRecord, method: CheckMethod) -> CheckReport {
    let pb = BigUint::from(rec.p);
    let p2 = &pb * &pb;
    let recomputed = match method {
        CheckMethod::Naive => naive_factorial_mod(rec.p - 1, &p2),
        CheckMethod::Sqrt => sqrt_factorial_mod(rec.p),
        CheckMethod::Reduce2 => {
            let h = naive_factorial_mod((rec.p - 1) / 2, &p2);
            half_to_full(rec.p, &h, &p2)
        }
    };
    let agree = recomputed == rec.residue && &rec.residue % &pb == &pb - 1u32;
    CheckReport {
        p: rec.p,
        claimed: rec.residue.clone(),
        recomputed: vec![(method, recomputed)],
        agree,
    }
}

/// Run a batch of records through one method, returning the first
/// disagreement as an integrity error.
pub fn check_batch(records: &[WilsonRecord], method: CheckMethod) -> Result<Vec<CheckReport>> {
    let reports = crate::par::map_vec(records, move |rec| check_record(rec, method));
    for r in &reports {
        if !r.agree {
            return Err(crate::error::Error::Integrity(format!(
                "independent {:?} check disagrees for p = {}",
                method, r.p
            )));
        }
    }
    Ok(reports)
}

// ---- local polynomial arithmetic over Z/n2, coefficients low-first ----

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + m as u128 - b as u128) % m as u128) as u64
}

const SCHOOLBOOK_CUTOFF: usize = 32;

fn poly_mul(a: &[u64], b: &[u64], n2: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().min(b.len()) <= SCHOOLBOOK_CUTOFF {
        return poly_mul_school(a, b, n2);
    }
    // Karatsuba split at half the longer operand
    let h = a.len().max(b.len()) / 2;
    let (a0, a1) = a.split_at(a.len().min(h));
    let (b0, b1) = b.split_at(b.len().min(h));
    let z0 = poly_mul(a0, b0, n2);
    let z2 = poly_mul(a1, b1, n2);
    let z1 = {
        let sa = poly_add(a0, a1, n2);
        let sb = poly_add(b0, b1, n2);
        let mut z = poly_mul(&sa, &sb, n2);
        poly_sub_in(&mut z, &z0, n2);
        poly_sub_in(&mut z, &z2, n2);
        z
    };
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &c) in z0.iter().enumerate() {
        out[i] = add_mod(out[i], c, n2);
    }
    for (i, &c) in z1.iter().enumerate() {
        out[i + h] = add_mod(out[i + h], c, n2);
    }
    for (i, &c) in z2.iter().enumerate() {
        out[i + 2 * h] = add_mod(out[i + 2 * h], c, n2);
    }
    out
}

fn poly_mul_school(a: &[u64], b: &[u64], n2: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = add_mod(out[i + j], mul_mod(ai, bj, n2), n2);
        }
    }
    out
}

fn poly_add(a: &[u64], b: &[u64], n2: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len().max(b.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *o = add_mod(x, y, n2);
    }
    out
}

fn poly_sub_in(a: &mut Vec<u64>, b: &[u64], n2: u64) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (i, &c) in b.iter().enumerate() {
        a[i] = sub_mod(a[i], c, n2);
    }
}

/// f mod g for monic g, schoolbook long division.
fn poly_rem(f: &[u64], g: &[u64], n2: u64) -> Vec<u64> {
    debug_assert_eq!(*g.last().unwrap(), 1, "divisor must be monic");
    let dg = g.len() - 1;
    let mut r = f.to_vec();
    if dg == 0 {
        return Vec::new();
    }
    for i in (dg..r.len()).rev() {
        let c = r[i];
        if c == 0 {
            continue;
        }
        r[i] = 0;
        for (j, &gj) in g[..dg].iter().enumerate() {
            r[i - dg + j] = sub_mod(r[i - dg + j], mul_mod(c, gj, n2), n2);
        }
    }
    r.truncate(dg);
    r
}

fn product_all(polys: &[Vec<u64>], n2: u64) -> Vec<u64> {
    match polys.len() {
        0 => vec![1],
        1 => polys[0].clone(),
        n => {
            let (lo, hi) = polys.split_at(n / 2);
            poly_mul(&product_all(lo, n2), &product_all(hi, n2), n2)
        }
    }
}

/// Evaluate f at every point via a subproduct/remainder tree.
fn eval_points(f: &[u64], points: &[u64], n2: u64) -> Vec<u64> {
    fn descend(f: &[u64], points: &[u64], n2: u64, out: &mut Vec<u64>) {
        match points.len() {
            0 => {}
            1 => {
                let g = [sub_mod(0, points[0] % n2, n2), 1];
                let r = poly_rem(f, &g, n2);
                out.push(r.first().copied().unwrap_or(0));
            }
            n => {
                let (lo, hi) = points.split_at(n / 2);
                let build = |pts: &[u64]| {
                    let lins: Vec<Vec<u64>> = pts
                        .iter()
                        .map(|&x| vec![sub_mod(0, x % n2, n2), 1])
                        .collect();
                    product_all(&lins, n2)
                };
                descend(&poly_rem(f, &build(lo), n2), lo, n2, out);
                descend(&poly_rem(f, &build(hi), n2), hi, n2, out);
            }
        }
    }
    let mut out = Vec::with_capacity(points.len());
    descend(f, points, n2, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn naive_examples() {
        assert_eq!(naive_factorial_mod(6, &BigUint::from(49u32)), 34u32.into());
        assert_eq!(naive_factorial_mod(0, &BigUint::from(10u32)), 1u32.into());
        assert_eq!(
            naive_factorial_mod(12, &BigUint::from(169u32)),
            168u32.into()
        );
        // the arbitrary-precision path, against exact u128 arithmetic
        let m = (1u128 << 80) + 13;
        let exact: u128 = (2..=25u128).product();
        assert_eq!(
            naive_factorial_mod(25, &BigUint::from(m)),
            BigUint::from(exact % m)
        );
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(sqrt_factorial_mod(13), 168u32.into());
        assert_eq!(sqrt_factorial_mod(7), 34u32.into());
        assert_eq!(sqrt_factorial_mod(3), 2u32.into());
        // Wilson primes land exactly on p² − 1
        for p in [5u64, 13, 563] {
            assert_eq!(sqrt_factorial_mod(p), BigUint::from(p * p - 1));
        }
    }

    #[test]
    fn sqrt_matches_naive_small() {
        for p in (3..1000u64).filter(|&p| crate::primes::is_prime_64(p)) {
            let p2 = BigUint::from(p * p);
            assert_eq!(
                sqrt_factorial_mod(p),
                naive_factorial_mod(p - 1, &p2),
                "p = {p}"
            );
        }
    }

    #[test]
    fn sqrt_matches_naive_million() {
        let p = 1_000_003u64;
        let p2 = BigUint::from(p * p);
        assert_eq!(sqrt_factorial_mod(p), naive_factorial_mod(p - 1, &p2));
    }

    #[test]
    fn multipoint_matches_horner() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..40 {
            let n2 = rng.gen_range(3u64..1 << 40);
            let deg = rng.gen_range(0usize..=64);
            let f: Vec<u64> = (0..=deg).map(|_| rng.gen_range(0..n2)).collect();
            let pts: Vec<u64> = (0..rng.gen_range(1usize..20))
                .map(|_| rng.gen_range(0..n2))
                .collect();
            let got = eval_points(&f, &pts, n2);
            for (x, v) in pts.iter().zip(&got) {
                let horner = f
                    .iter()
                    .rev()
                    .fold(0u64, |acc, &c| add_mod(mul_mod(acc, *x, n2), c, n2));
                assert_eq!(*v, horner);
            }
        }
    }

    #[test]
    fn karatsuba_matches_schoolbook() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n2 = 1_000_003u64 * 1_000_003;
        for _ in 0..10 {
            let a: Vec<u64> = (0..rng.gen_range(33usize..120))
                .map(|_| rng.gen_range(0..n2))
                .collect();
            let b: Vec<u64> = (0..rng.gen_range(33usize..120))
                .map(|_| rng.gen_range(0..n2))
                .collect();
            assert_eq!(poly_mul(&a, &b, n2), poly_mul_school(&a, &b, n2));
        }
    }

    #[test]
    fn check_record_examples() {
        let five = WilsonRecord {
            p: 5,
            w: 0,
            residue: 24u32.into(),
        };
        for m in [CheckMethod::Naive, CheckMethod::Sqrt, CheckMethod::Reduce2] {
            assert!(check_record(&five, m).agree, "{m:?}");
        }
        let corrupt = WilsonRecord {
            p: 7,
            w: 0,
            residue: 33u32.into(),
        };
        let report = check_record(&corrupt, CheckMethod::Naive);
        assert!(!report.agree);
        assert_eq!(report.recomputed[0].1, 34u32.into());
        assert!(check_batch(&[corrupt], CheckMethod::Naive).is_err());
    }

    #[test]
    fn cross_checks_search_output() {
        // the search's own answer for a table entry, reverified from scratch
        let iv = crate::primes::Interval {
            lo: 56_151_922,
            hi: 56_151_923,
        };
        let recs = crate::wilson::wilson_range(iv, u64::MAX / 2).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].w, -1);
        assert!(check_record(&recs[0], CheckMethod::Sqrt).agree);
    }
}
