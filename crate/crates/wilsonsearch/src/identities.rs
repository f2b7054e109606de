//! Recovery of (p−1)! mod p² from f! mod p², where f = (p−1)/e for an
//! admissible even e dividing p−1.
//!
//! The pipeline per prime: pick the largest admissible e | p−1, find an
//! order-e residue ω₀ mod p, lift it to ω mod p³, compute the harmonic
//! correction C extending the congruence to mod p², factor the prime ideal
//! (p, ζ_e − ω₀) in Z[ζ_e] to get a generator θ, evaluate the Stickelberger
//! product γ from θ's coefficients at powers of ω, and combine:
//!
//!   (p−1)! ≡ ω^{e−i} · (−f!)^e · γ · (1 + pC)  (mod p²)
//!
//! with the root-of-unity index i pinned down by (p−1)! ≡ −1 mod p.
//! [`ESet`] holds the admissible e values and the residue-class accounting
//! that predicts how much work the reduction saves over a full factorial.

use crate::cyclotomic::{self, CycloElt, CycloField, CLASS_NUMBER_ONE_E};
use crate::error::{Error, Result};
use crate::primes::{mul_mod_64, pow_mod_64};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A set of admissible even orders e, kept sorted ascending. Every member
/// must come from [`CLASS_NUMBER_ONE_E`]: the generator-finding GCD is only
/// sound when Z[ζ_e] has class number 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ESet {
    values: Vec<u64>,
}

impl ESet {
    /// The full 30-element admissible list.
    pub fn full() -> ESet {
        ESet {
            values: CLASS_NUMBER_ONE_E.to_vec(),
        }
    }

    /// A validated subset. Rejects values outside the admissible list.
    pub fn from_list(values: &[u64]) -> Result<ESet> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty e-set".into()));
        }
        let mut v = values.to_vec();
        v.sort_unstable();
        v.dedup();
        for &e in &v {
            if !CLASS_NUMBER_ONE_E.contains(&e) {
                return Err(Error::InvalidInput(format!(
                    "e = {e} is not in the class-number-1 list"
                )));
            }
        }
        Ok(ESet { values: v })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// lcm of the members. Bounded by lcm of the full list, 6983776800.
    pub fn q_s(&self) -> u64 {
        self.values.iter().fold(1, |a, &e| a.lcm(&e))
    }

    /// Largest member e with k ≡ 1 mod e, or 1 when none matches (the
    /// prime is then handled at full factorial cost).
    pub fn b_s(&self, k: u64) -> u64 {
        self.values
            .iter()
            .rev()
            .copied()
            .find(|&e| k % e == 1)
            .unwrap_or(1)
    }

    /// Largest member dividing p−1, i.e. the cheapest reduction available
    /// for p. None when no member divides p−1 (impossible with 2 in the
    /// set and p odd).
    pub fn best_e(&self, p: u64) -> Option<u64> {
        self.values.iter().rev().copied().find(|&e| (p - 1) % e == 0)
    }
}

/// (Q_S, R_S): the residue-class modulus and the expected fraction of
/// baseline work remaining, R_S = (1/φ(Q_S)) Σ_{k ∈ (Z/Q_S)^*} 1/b_S(k).
///
/// Rather than enumerating the up-to-1.2·10⁹ units directly, units are
/// grouped by the vector of capped valuations v_q(k−1) over the primes
/// q | Q_S: b_S(k) depends only on that vector, and the group sizes are
/// products of the per-prime counts. A few thousand patterns at most.
pub fn savings(s: &ESet) -> (u64, BigRational) {
    let q_s = s.q_s();
    let mut pps: Vec<(u64, u32)> = Vec::new();
    let mut rem = q_s;
    for q in cyclotomic::prime_factors(q_s) {
        let mut a = 0;
        while rem % q == 0 {
            rem /= q;
            a += 1;
        }
        pps.push((q, a));
    }

    let mut sum = BigRational::zero();
    let mut beta = vec![0u32; pps.len()];
    loop {
        let mut weight = BigUint::one();
        for (&(q, a), &b) in pps.iter().zip(&beta) {
            // units u mod q^a with v_q(u−1) = b (capped at a)
            let w = if b == 0 {
                q.pow(a) - 2 * q.pow(a - 1)
            } else if b < a {
                q.pow(a - b) - q.pow(a - b - 1)
            } else {
                1
            };
            weight *= w;
        }
        if !weight.is_zero() {
            let b_class = s
                .values
                .iter()
                .rev()
                .copied()
                .find(|&e| {
                    pps.iter().zip(&beta).all(|(&(q, _), &b)| {
                        let mut v = 0;
                        let mut m = e;
                        while m % q == 0 {
                            m /= q;
                            v += 1;
                        }
                        v <= b
                    })
                })
                .unwrap_or(1);
            sum += BigRational::new(BigInt::from(weight), BigInt::from(b_class));
        }
        // odometer over 0..=a per position
        let mut pos = 0;
        loop {
            if pos == beta.len() {
                let phi: BigInt = pps
                    .iter()
                    .map(|&(q, a)| BigInt::from(q.pow(a) - q.pow(a - 1)))
                    .product();
                return (q_s, sum / BigRational::from_integer(phi));
            }
            if beta[pos] < pps[pos].1 {
                beta[pos] += 1;
                break;
            }
            beta[pos] = 0;
            pos += 1;
        }
    }
}

/// A residue of multiplicative order exactly e mod p, found by raising
/// random bases to the (p−1)/e and checking ω₀^{e/q} ≠ 1 for each prime
/// q | e. Deterministic for fixed (p, e, seed).
pub fn find_root_of_unity(p: u64, e: u64, seed: u64) -> u64 {
    assert!(e >= 2 && (p - 1) % e == 0, "e must divide p-1");
    let f = (p - 1) / e;
    let qs = cyclotomic::prime_factors(e);
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ e.rotate_left(17));
    loop {
        let x = rng.gen_range(1..p);
        let w0 = pow_mod_64(x, f, p);
        if qs.iter().all(|&q| pow_mod_64(w0, e / q, p) != 1) {
            return w0;
        }
    }
}

/// The Teichmüller lift ω = ω₀^{p²} mod p³: the unique residue with
/// ω ≡ ω₀ mod p and ω^e ≡ 1 mod p³.
pub fn teichmuller_lift(p: u64, omega0: u64) -> BigUint {
    let pb = BigUint::from(p);
    let p3 = &pb * &pb * &pb;
    BigUint::from(omega0).modpow(&(&pb * &pb), &p3)
}

/// The correction term C = (1/p) Σ_{j=1}^{e−1} ((1−ω^j)^p − (1−ω^j))
/// reduced mod p. Each summand is divisible by p; a failed division means
/// the lift was not a true order-e Teichmüller representative.
pub fn correction_c(p: u64, e: u64, omega: &BigUint) -> Result<u64> {
    let pb = BigUint::from(p);
    let p2 = &pb * &pb;
    let w = omega % &p2;
    let mut wj = BigUint::one();
    let mut sum = BigUint::zero();
    for _ in 1..e {
        wj = &wj * &w % &p2;
        let base = (&p2 + 1u32 - &wj) % &p2;
        sum = (sum + base.modpow(&pb, &p2) + &p2 - &base) % &p2;
    }
    if !(&sum % &pb).is_zero() {
        return Err(Error::Integrity(format!(
            "correction sum for p = {p} not divisible by p; bad root-of-unity lift"
        )));
    }
    Ok((sum / &pb % &pb).to_u64().expect("C < p < 2^64"))
}

/// The Stickelberger evaluation γ mod p²: with θ = g(ζ_e) a generator of
/// the degree-1 prime over p selected by ω₀, form
/// ∏_{gcd(c,e)=1} g(ω^{c⁻¹ mod e})^c mod p³ and divide once by p.
///
/// A product not divisible by p, or a quotient divisible by p, means θ
/// generates the wrong ideal (or is no generator at all).
pub fn gamma_factor(p: u64, e: u64, omega: &BigUint, theta: &CycloElt) -> Result<BigUint> {
    let pb = BigUint::from(p);
    let p2 = &pb * &pb;
    let p3 = &p2 * &pb;
    let eu = e as usize;

    let mut pows = Vec::with_capacity(eu);
    pows.push(BigUint::one());
    for m in 1..eu {
        pows.push(&pows[m - 1] * omega % &p3);
    }
    let p3i = BigInt::from(p3.clone());
    let coef: Vec<BigUint> = theta
        .coords()
        .iter()
        .map(|c| c.mod_floor(&p3i).to_biguint().expect("nonnegative"))
        .collect();
    let g_at = |t: usize| -> BigUint {
        let mut acc = BigUint::zero();
        for (k, ck) in coef.iter().enumerate() {
            acc = (acc + ck * &pows[t * k % eu]) % &p3;
        }
        acc
    };

    let mut prod = BigUint::one();
    for c in 1..e {
        if cyclotomic::gcd_u64(c, e) == 1 {
            let t = cyclotomic::inv_mod_u64(c, e) as usize;
            prod = prod * g_at(t).modpow(&BigUint::from(c), &p3) % &p3;
        }
    }
    if !(&prod % &pb).is_zero() {
        return Err(Error::Integrity(format!(
            "stickelberger product for p = {p} not divisible by p; wrong ideal generator"
        )));
    }
    let gamma = prod / &pb % &p2;
    if (&gamma % &pb).is_zero() {
        return Err(Error::Integrity(format!(
            "stickelberger quotient for p = {p} vanishes mod p; wrong ideal generator"
        )));
    }
    Ok(gamma)
}

/// Everything stage 3 needs about one prime, reusable across reruns.
#[derive(Clone, Debug)]
pub struct Stage3Context {
    pub p: u64,
    pub e: u64,
    pub f: u64,
    /// Order-e residue mod p.
    pub omega0: u64,
    /// Teichmüller lift of omega0, mod p³.
    pub omega: BigUint,
    /// Correction term, mod p.
    pub c: u64,
    /// Generator of (p, ζ_e − ω₀).
    pub theta: CycloElt,
    /// Stickelberger evaluation, mod p².
    pub gamma: BigUint,
}

/// Assemble the per-prime context: root of unity, lift, correction,
/// ideal generator, γ. Requires e ≥ 4; e = 2 recovery goes through
/// [`crate::wilson::reduce2_recover`] and needs none of this.
pub fn prepare_stage3(p: u64, e: u64, seed: u64, field: &CycloField) -> Result<Stage3Context> {
    if e < 4 {
        return Err(Error::InvalidInput(
            "stage-3 context requires e >= 4".into(),
        ));
    }
    if field.e() != e {
        return Err(Error::InvalidInput(format!(
            "field is over e = {}, job wants e = {e}",
            field.e()
        )));
    }
    if (p - 1) % e != 0 {
        return Err(Error::InvalidInput(format!("e = {e} does not divide p-1")));
    }
    let f = (p - 1) / e;
    let omega0 = find_root_of_unity(p, e, seed);
    let omega = teichmuller_lift(p, omega0);
    let c = correction_c(p, e, &omega)?;
    let theta = field.cyclo_gcd(
        &field.scalar(&BigInt::from(p)),
        &field.zeta_minus(omega0),
        seed ^ p.wrapping_mul(0xD1B5_4A32_D192_ED03),
    )?;
    let gamma = gamma_factor(p, e, &omega, &theta)?;
    Ok(Stage3Context {
        p,
        e,
        f,
        omega0,
        omega,
        c,
        theta,
        gamma,
    })
}

/// (p−1)! mod p² from f! mod p². See the module docs for the congruence.
pub fn recover_wilson(f_fact: &BigUint, ctx: &Stage3Context) -> Result<BigUint> {
    Ok(recover_wilson_trace(f_fact, ctx)?.0)
}

/// As [`recover_wilson`], also exposing the matched root-of-unity index i.
pub fn recover_wilson_trace(f_fact: &BigUint, ctx: &Stage3Context) -> Result<(BigUint, u64)> {
    let pb = BigUint::from(ctx.p);
    let p2 = &pb * &pb;
    let neg_ff = (&p2 - f_fact % &p2) % &p2;
    let mut r = neg_ff.modpow(&BigUint::from(ctx.e), &p2);
    r = r * &ctx.gamma % &p2;
    r = r * ((BigUint::from(ctx.c) * &pb + 1u32) % &p2) % &p2;

    // r ≡ −ω₀^i mod p for exactly one i; (p−1)! ≡ −1 mod p fixes it.
    let target = ((&pb - &r % &pb) % &pb).to_u64().expect("< p");
    let mut idx = None;
    let mut w0i = 1u64;
    for i in 0..ctx.e {
        if w0i == target {
            idx = Some(i);
            break;
        }
        w0i = mul_mod_64(w0i, ctx.omega0, ctx.p);
    }
    let Some(i) = idx else {
        return Err(Error::Integrity(format!(
            "no root-of-unity index matches the recovered residue for p = {}",
            ctx.p
        )));
    };
    let rot = (&ctx.omega % &p2).modpow(&BigUint::from((ctx.e - i) % ctx.e), &p2);
    Ok((rot * r % &p2, i))
}

/// Cheap mod-p sanity check on stage-3 inputs: (−f!)^e · γ must be an
/// e-th root of unity mod p. Catches a corrupted f! or γ without running
/// the full recovery.
pub fn stage3_root_check(p: u64, e: u64, f_fact: &BigUint, gamma: &BigUint) -> bool {
    let pb = BigUint::from(p);
    let ff = (f_fact % &pb).to_u64().expect("< p");
    let g = (gamma % &pb).to_u64().expect("< p");
    let t = mul_mod_64(pow_mod_64((p - ff) % p, e, p), g, p);
    pow_mod_64(t, e, p) == 1
}

/// The e = 2 stand-in for γ: (−1)^{(p−1)/2} (2^p − 1) mod p², so that
/// (−f!)² · γ ≡ (p−1)! mod p² and [`stage3_root_check`] applies unchanged.
pub fn gamma_reduce2(p: u64) -> BigUint {
    crate::wilson::reduce2_recover(p, &BigUint::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn naive_fact(n: u64, m: &BigUint) -> BigUint {
        let mut acc = BigUint::one();
        for k in 2..=n {
            acc = acc * k % m;
        }
        acc
    }

    fn walkthrough_p() -> u64 {
        3_333_331
    }

    /// ctx for the walkthrough at p = 3333331: fixed ω₀ and pinned θ.
    fn walkthrough_ctx() -> Stage3Context {
        let p = walkthrough_p();
        let field = CycloField::new(18).unwrap();
        let omega0 = 1_819_843;
        let omega = teichmuller_lift(p, omega0);
        let c = correction_c(p, 18, &omega).unwrap();
        let theta = field.from_i64(&[-4, 10, 3, 7, -10, -5]);
        let gamma = gamma_factor(p, 18, &omega, &theta).unwrap();
        Stage3Context {
            p,
            e: 18,
            f: (p - 1) / 18,
            omega0,
            omega,
            c,
            theta,
            gamma,
        }
    }

    #[test]
    fn eset_validation() {
        assert_eq!(ESet::full().values().len(), 30);
        assert_eq!(ESet::full().q_s(), 6_983_776_800);
        assert!(ESet::from_list(&[46]).is_err());
        assert!(ESet::from_list(&[3]).is_err());
        assert!(ESet::from_list(&[]).is_err());
        let s = ESet::from_list(&[6, 2, 6, 4]).unwrap();
        assert_eq!(s.values(), &[2, 4, 6]);
    }

    #[test]
    fn b_s_examples() {
        let s = ESet::full();
        assert_eq!(s.b_s(1), 90);
        assert_eq!(s.b_s(13), 12);
        assert_eq!(s.b_s(3), 2);
        assert_eq!(s.b_s(2), 1);
    }

    #[test]
    fn best_e_examples() {
        let s = ESet::full();
        assert_eq!(s.best_e(13), Some(12));
        assert_eq!(s.best_e(11), Some(10));
        assert_eq!(s.best_e(3_333_331), Some(90));
        let small = ESet::from_list(&[2, 4, 6]).unwrap();
        assert_eq!(small.best_e(13), Some(6));
        assert_eq!(ESet::from_list(&[4]).unwrap().best_e(7), None);
    }

    fn rat(n: i128, d: i128) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn savings_frozen_values() {
        let (q, r) = savings(&ESet::from_list(&[2]).unwrap());
        assert_eq!((q, r), (2, rat(1, 2)));
        let (q, r) = savings(&ESet::from_list(&[2, 4, 6]).unwrap());
        assert_eq!((q, r), (12, rat(13, 48)));
        let (q, r) = savings(&ESet::from_list(&[2, 4, 6, 8, 10, 12]).unwrap());
        assert_eq!((q, r), (120, rat(767, 3840)));
        let (q, r) = savings(&ESet::full());
        assert_eq!(q, 6_983_776_800);
        assert_eq!(r, rat(22_695_187_978_681, 201_921_527_808_000));
    }

    #[test]
    fn savings_matches_direct_enumeration() {
        for list in [
            vec![2],
            vec![4],
            vec![2, 4, 6],
            vec![2, 6, 18],
            vec![2, 4, 6, 8, 10, 12],
        ] {
            let s = ESet::from_list(&list).unwrap();
            let q = s.q_s();
            let mut sum = BigRational::zero();
            let mut units = 0i128;
            for k in 1..=q {
                if cyclotomic::gcd_u64(k, q) == 1 {
                    units += 1;
                    sum += rat(1, s.b_s(k) as i128);
                }
            }
            let direct = sum / BigRational::from_integer(BigInt::from(units));
            assert_eq!(savings(&s).1, direct, "set {list:?}");
        }
    }

    #[test]
    fn savings_monotone_and_bounded() {
        let chain = [
            vec![2],
            vec![2, 4],
            vec![2, 4, 6],
            vec![2, 4, 6, 8, 10, 12],
            CLASS_NUMBER_ONE_E.to_vec(),
        ];
        let mut last = rat(2, 1);
        for list in chain {
            let r = savings(&ESet::from_list(&list).unwrap()).1;
            assert!(r > BigRational::zero() && r <= BigRational::one());
            assert!(r <= last, "R grew when the set did");
            last = r;
        }
    }

    #[test]
    fn root_of_unity_examples() {
        for seed in 0..6 {
            assert!([5, 8].contains(&find_root_of_unity(13, 4, seed)));
            assert!([2, 3].contains(&find_root_of_unity(5, 4, seed)));
        }
        for p in [3, 5, 13, 101, 3_333_331] {
            assert_eq!(find_root_of_unity(p, 2, 1), p - 1);
        }
        // exact order, not merely a divisor
        for e in [2u64, 4, 6, 12] {
            let w0 = find_root_of_unity(13, e, 7);
            for j in 1..e {
                assert_ne!(pow_mod_64(w0, j, 13), 1, "order below {e}");
            }
            assert_eq!(pow_mod_64(w0, e, 13), 1);
        }
    }

    #[test]
    fn teichmuller_examples() {
        assert_eq!(teichmuller_lift(5, 2), BigUint::from(57u32));
        assert_eq!(teichmuller_lift(7, 1), BigUint::one());
        let p = walkthrough_p();
        let pb = BigUint::from(p);
        let w = teichmuller_lift(p, 1_819_843);
        let digits = [
            (&w % &pb).to_u64().unwrap(),
            (&w / &pb % &pb).to_u64().unwrap(),
            (&w / (&pb * &pb)).to_u64().unwrap(),
        ];
        assert_eq!(digits, [1_819_843, 1_422_487, 90_367]);
        // defining properties
        let p3 = &pb * &pb * &pb;
        assert_eq!(&w % &pb, BigUint::from(1_819_843u32));
        assert_eq!(w.modpow(&BigUint::from(18u32), &p3), BigUint::one());
    }

    #[test]
    fn correction_examples() {
        let p = walkthrough_p();
        let w = teichmuller_lift(p, 1_819_843);
        assert_eq!(correction_c(p, 18, &w).unwrap(), 418_399);
        for w0 in [2u64, 3] {
            let w = teichmuller_lift(5, w0);
            assert_eq!(correction_c(5, 4, &w).unwrap(), 4);
        }
        for w0 in [5u64, 8] {
            let w = teichmuller_lift(13, w0);
            assert_eq!(correction_c(13, 4, &w).unwrap(), 9);
        }
    }

    #[test]
    fn correction_matches_harmonic_sum() {
        // C ≡ −Σ_{r=1}^{f} r⁻¹ (mod p)
        for p in [5u64, 7, 11, 13, 19, 31, 61, 113, 199] {
            for &e in CLASS_NUMBER_ONE_E.iter().filter(|&&e| (p - 1) % e == 0) {
                let f = (p - 1) / e;
                let w = teichmuller_lift(p, find_root_of_unity(p, e, 3));
                let c = correction_c(p, e, &w).unwrap();
                let mut h = 0u64;
                for r in 1..=f {
                    h = (h + pow_mod_64(r, p - 2, p)) % p;
                }
                assert_eq!(c, (p - h) % p, "p = {p}, e = {e}");
            }
        }
    }

    #[test]
    fn gamma_walkthrough_value() {
        let ctx = walkthrough_ctx();
        let pb = BigUint::from(ctx.p);
        assert_eq!(
            ctx.gamma,
            BigUint::from(1_628_187u32) + BigUint::from(503_367u32) * &pb
        );
    }

    #[test]
    fn gamma_small_field() {
        // p = 5, e = 4, θ = ζ − 2 exactly
        let field = CycloField::new(4).unwrap();
        let w = teichmuller_lift(5, 2);
        let gamma = gamma_factor(5, 4, &w, &field.zeta_minus(2)).unwrap();
        assert_eq!(gamma, BigUint::from(6u32));
    }

    #[test]
    fn gamma_rejects_wrong_generator() {
        // ζ − 3 generates the conjugate ideal, not (5, ζ − 2)
        let field = CycloField::new(4).unwrap();
        let w = teichmuller_lift(5, 2);
        assert!(matches!(
            gamma_factor(5, 4, &w, &field.zeta_minus(3)),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn recover_walkthrough_values() {
        let ctx = walkthrough_ctx();
        let pb = BigUint::from(ctx.p);
        let p2 = &pb * &pb;
        let f_fact = BigUint::from(461_190u32) + BigUint::from(275_007u32) * &pb;
        let (res, i) = recover_wilson_trace(&f_fact, &ctx).unwrap();
        assert_eq!(i, 3);
        assert_eq!(
            res,
            BigUint::from(3_333_330u32) + BigUint::from(27_003u32) * &pb
        );
        assert_eq!(res, naive_fact(ctx.p - 1, &p2));
        assert_eq!(crate::wilson::quotient_from_residue(ctx.p, &res).unwrap(), 27_004);
    }

    #[test]
    fn recover_small_fields() {
        // p = 5, e = 4, fixed ω₀ = 2 and θ = ζ − 2: every intermediate pins down
        let field = CycloField::new(4).unwrap();
        let omega = teichmuller_lift(5, 2);
        let ctx = Stage3Context {
            p: 5,
            e: 4,
            f: 1,
            omega0: 2,
            omega: omega.clone(),
            c: correction_c(5, 4, &omega).unwrap(),
            theta: field.zeta_minus(2),
            gamma: gamma_factor(5, 4, &omega, &field.zeta_minus(2)).unwrap(),
        };
        let (res, i) = recover_wilson_trace(&BigUint::one(), &ctx).unwrap();
        assert_eq!((res, i), (BigUint::from(24u32), 2));

        // p = 13, e = 12: f = 1, so f! = 1 and (p−1)! comes out whole
        let field = CycloField::new(12).unwrap();
        let ctx = prepare_stage3(13, 12, 0, &field).unwrap();
        let res = recover_wilson(&BigUint::one(), &ctx).unwrap();
        assert_eq!(res, BigUint::from(168u32));
    }

    #[test]
    fn recover_matches_naive_small_primes() {
        let mut fields: HashMap<u64, CycloField> = HashMap::new();
        for p in (5..2000u64).filter(|&p| crate::primes::is_prime_64(p)) {
            let pb = BigUint::from(p);
            let p2 = &pb * &pb;
            let want = naive_fact(p - 1, &p2);
            for &e in CLASS_NUMBER_ONE_E.iter().filter(|&&e| e >= 4 && (p - 1) % e == 0) {
                let field = fields
                    .entry(e)
                    .or_insert_with(|| CycloField::new(e).unwrap());
                let ctx = prepare_stage3(p, e, 11, field).unwrap();
                let f_fact = naive_fact(ctx.f, &p2);
                assert_eq!(
                    recover_wilson(&f_fact, &ctx).unwrap(),
                    want,
                    "p = {p}, e = {e}"
                );
            }
        }
    }

    #[test]
    fn recover_invariant_under_seed_and_associate() {
        let field = CycloField::new(12).unwrap();
        let pb = BigUint::from(61u32);
        let p2 = &pb * &pb;
        let want = naive_fact(60, &p2);
        let f_fact = naive_fact(5, &p2);
        for seed in 0..8 {
            let ctx = prepare_stage3(61, 12, seed, &field).unwrap();
            assert_eq!(recover_wilson(&f_fact, &ctx).unwrap(), want, "seed {seed}");
        }
        // replacing θ by an associate shifts i but not the result
        let base = prepare_stage3(61, 12, 0, &field).unwrap();
        for k in 0..12 {
            let assoc = field.mul_zeta_pow(&base.theta, k);
            for sign in [1i64, -1] {
                let theta = field.mul(&assoc, &field.from_i64(&[sign]));
                let gamma = gamma_factor(61, 12, &base.omega, &theta).unwrap();
                let ctx = Stage3Context {
                    theta,
                    gamma,
                    ..base.clone()
                };
                assert_eq!(recover_wilson(&f_fact, &ctx).unwrap(), want);
            }
        }
    }

    #[test]
    fn root_check_examples() {
        let ctx = walkthrough_ctx();
        let pb = BigUint::from(ctx.p);
        let f_fact = BigUint::from(461_190u32) + BigUint::from(275_007u32) * &pb;
        assert!(stage3_root_check(ctx.p, ctx.e, &f_fact, &ctx.gamma));
        let bad = &ctx.gamma + 1u32;
        assert!(!stage3_root_check(ctx.p, ctx.e, &f_fact, &bad));

        // e = 2 via the reduce-2 stand-in for γ
        for p in [5u64, 7, 11, 13, 563] {
            let pb = BigUint::from(p);
            let f_fact = naive_fact((p - 1) / 2, &(&pb * &pb));
            assert!(stage3_root_check(p, 2, &f_fact, &gamma_reduce2(p)));
        }
    }
}
