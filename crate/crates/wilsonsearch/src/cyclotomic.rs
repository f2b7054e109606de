//! Exact arithmetic in Z[ζ_e] for the even e whose cyclotomic field has
//! class number 1, plus the heuristic principal-generator GCD.
//!
//! Elements are coordinate vectors over the power basis 1, ζ, ..., ζ^{d−1}
//! with d = φ(e). Coordinates live in i64 while they fit and promote to
//! arbitrary precision transparently; the GCD exploits this with a fast
//! first pass. A [`CycloField`] precomputes everything expensive once: the
//! cyclotomic polynomial, reduction rows for every power of ζ, the complex
//! embeddings and their inverse matrix, a full-rank sublattice of units for
//! balancing, and two conjugate families of small-norm elements used as
//! random perturbations when the GCD stalls.

use crate::error::{Error, Result};
use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Even e with class number 1, ascending. The only admissible field orders.
pub const CLASS_NUMBER_ONE_E: [u64; 30] = [
    2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38, 40, 42, 44, 48, 50,
    54, 60, 66, 70, 84, 90,
];

/// Element of Z[ζ_e]: coordinates over the power basis, low degree first.
/// `Small` is the 63-bit fast path; operations promote to `Big` on overflow
/// and [`CycloElt::compact`] demotes when values shrink back.
#[derive(Clone, Debug)]
pub enum CycloElt {
    Small(Vec<i64>),
    Big(Vec<BigInt>),
}

impl CycloElt {
    pub fn is_zero(&self) -> bool {
        match self {
            CycloElt::Small(v) => v.iter().all(|&c| c == 0),
            CycloElt::Big(v) => v.iter().all(|c| c.is_zero()),
        }
    }

    pub fn is_big(&self) -> bool {
        matches!(self, CycloElt::Big(_))
    }

    /// Coordinates as signed big integers, length d.
    pub fn coords(&self) -> Vec<BigInt> {
        match self {
            CycloElt::Small(v) => v.iter().map(|&c| BigInt::from(c)).collect(),
            CycloElt::Big(v) => v.clone(),
        }
    }

    /// Demote to the 63-bit representation when every coordinate fits.
    pub fn compact(self) -> Self {
        match self {
            CycloElt::Small(_) => self,
            CycloElt::Big(v) => {
                let small: Option<Vec<i64>> = v.iter().map(|c| c.to_i64()).collect();
                match small {
                    Some(s) => CycloElt::Small(s),
                    None => CycloElt::Big(v),
                }
            }
        }
    }

    fn promote(&self) -> Vec<BigInt> {
        self.coords()
    }

    /// Σ|c_i| as an unsigned big integer.
    fn abs_sum(&self) -> BigUint {
        match self {
            CycloElt::Small(v) => v
                .iter()
                .fold(BigUint::zero(), |a, &c| a + c.unsigned_abs()),
            CycloElt::Big(v) => v.iter().fold(BigUint::zero(), |a, c| a + c.magnitude()),
        }
    }
}

impl PartialEq for CycloElt {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CycloElt::Small(a), CycloElt::Small(b)) => a == b,
            _ => self.promote() == other.promote(),
        }
    }
}

impl Eq for CycloElt {}

/// Φ_n as i64 coefficients, constant term first, monic.
fn cyclotomic_poly(n: u64) -> Vec<i64> {
    // x^n − 1 divided by Φ_d for every proper divisor d.
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            num = poly_div_exact(&num, &cyclotomic_poly(d));
        }
    }
    num
}

/// Exact division of polynomials with integer coefficients, panicking on a
/// nonzero remainder (callers divide known multiples).
fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = num.len() - 1;
    let dd = den.len() - 1;
    assert!(*den.last().unwrap() == 1, "divisor must be monic");
    let mut rem = num.to_vec();
    let mut quo = vec![0i64; dn - dd + 1];
    for k in (0..=dn - dd).rev() {
        let c = rem[k + dd];
        quo[k] = c;
        for j in 0..=dd {
            rem[k + j] -= c * den[j];
        }
    }
    assert!(rem.iter().all(|&c| c == 0), "inexact polynomial division");
    quo
}

pub(crate) fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

/// x⁻¹ mod m for gcd(x, m) = 1.
pub(crate) fn inv_mod_u64(x: u64, m: u64) -> u64 {
    let (mut r0, mut r1) = (m as i128, (x % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1);
    (t0.rem_euclid(m as i128)) as u64
}

fn is_prime_power(mut n: u64) -> bool {
    for p in 2..=n {
        if p * p > n {
            return n > 1;
        }
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            return n == 1;
        }
    }
    false
}

/// Invert a square matrix by Gauss–Jordan with partial pivoting.
fn invert_matrix(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        assert!(p.abs() > 1e-12, "embedding matrix is singular");
        for j in 0..2 * n {
            m[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                for j in 0..2 * n {
                    m[i][j] -= f * m[col][j];
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

const GCD_ATTEMPTS_FAST: u32 = 8;
const GCD_ATTEMPTS_BIG: u32 = 8;
/// Cap on unit-lattice exponents during balancing.
const BALANCE_EXP_CAP: i64 = 64;
const LOG_TIE_TOL: f64 = 1e-9;

/// Precomputed field data for one admissible e. Immutable once built and
/// freely shareable across threads.
pub struct CycloField {
    e: u64,
    d: usize,
    phi: Vec<i64>,
    /// Coordinates of ζ^m for m in [0, e).
    rows: Vec<Vec<i64>>,
    /// max |rows[m][k]| over the rows used in product reduction.
    row_bound: u64,
    /// Embedding exponents: c < e/2 coprime to e (for e = 2, the single
    /// real embedding c = 1).
    emb_exp: Vec<u64>,
    /// e-th roots of unity.
    zpow: Vec<Complex64>,
    /// Inverse of the real d×d embedding matrix.
    minv: Vec<Vec<f64>>,
    /// Multiplicative-group exponents 1 ≤ c < e, gcd(c, e) = 1.
    unit_group: Vec<u64>,
    /// Balancing lattice: units, their inverses, and the least-squares
    /// projector (rank × d/2) onto unit-exponent space.
    bal_units: Vec<CycloElt>,
    bal_unit_invs: Vec<CycloElt>,
    bal_pinv: Vec<Vec<f64>>,
    /// Two conjugate families of prime-norm elements for GCD perturbation,
    /// and their norms. Two, so that a target prime equal to one of the
    /// norms can always avoid itself.
    pert: [Vec<CycloElt>; 2],
    pert_q: [u64; 2],
}

impl CycloField {
    /// Build the field for an admissible even e.
    pub fn new(e: u64) -> Result<CycloField> {
        if !CLASS_NUMBER_ONE_E.contains(&e) {
            return Err(Error::InvalidInput(format!(
                "e = {e} is not in the class-number-1 list"
            )));
        }
        let phi = cyclotomic_poly(e);
        let d = phi.len() - 1;

        let mut rows: Vec<Vec<i64>> = Vec::with_capacity(e as usize);
        for m in 0..e as usize {
            if m < d {
                let mut r = vec![0i64; d];
                r[m] = 1;
                rows.push(r);
            } else {
                // ζ^m = ζ·ζ^{m−1}; the overflow into degree d folds back
                // through ζ^d = −(φ_0 + φ_1 ζ + ...).
                let prev = &rows[m - 1];
                let carry = prev[d - 1];
                let mut r = vec![0i64; d];
                for k in 1..d {
                    r[k] = prev[k - 1];
                }
                for k in 0..d {
                    r[k] -= carry * phi[k];
                }
                rows.push(r);
            }
        }
        let row_bound = rows
            .iter()
            .take(2 * d - 1)
            .flat_map(|r| r.iter().map(|&c| c.unsigned_abs()))
            .max()
            .unwrap()
            .max(1);

        let zpow: Vec<Complex64> = (0..e)
            .map(|m| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / e as f64))
            .collect();
        let emb_exp: Vec<u64> = if e == 2 {
            vec![1]
        } else {
            (1..e / 2).filter(|&c| gcd_u64(c, e) == 1).collect()
        };
        debug_assert_eq!(emb_exp.len(), if e == 2 { 1 } else { d / 2 });

        // Real matrix of the embedding: coordinates -> stacked (Re, Im)
        // per embedding. For e = 2 the single embedding is real and the
        // matrix is 1×1.
        let mat: Vec<Vec<f64>> = if e == 2 {
            vec![vec![1.0]]
        } else {
            let mut m = vec![vec![0.0; d]; d];
            for (j, &c) in emb_exp.iter().enumerate() {
                for k in 0..d {
                    let z = zpow[((c * k as u64) % e) as usize];
                    m[2 * j][k] = z.re;
                    m[2 * j + 1][k] = z.im;
                }
            }
            m
        };
        let minv = invert_matrix(&mat);

        let unit_group: Vec<u64> = (1..e.max(2)).filter(|&c| gcd_u64(c, e) == 1).collect();

        let mut field = CycloField {
            e,
            d,
            phi,
            rows,
            row_bound,
            emb_exp,
            zpow,
            minv,
            unit_group,
            bal_units: Vec::new(),
            bal_unit_invs: Vec::new(),
            bal_pinv: Vec::new(),
            pert: [Vec::new(), Vec::new()],
            pert_q: [0, 0],
        };
        field.build_balance_lattice();
        if e > 2 {
            field.build_perturbation_sets();
        }
        Ok(field)
    }

    pub fn e(&self) -> u64 {
        self.e
    }

    /// Field degree φ(e).
    pub fn degree(&self) -> usize {
        self.d
    }

    /// Rank of the balancing unit lattice (d/2 − 1 for e > 2).
    pub fn unit_rank(&self) -> usize {
        self.bal_units.len()
    }

    pub fn zero(&self) -> CycloElt {
        CycloElt::Small(vec![0; self.d])
    }

    pub fn one(&self) -> CycloElt {
        self.from_i64(&[1])
    }

    /// Element from low-order i64 coordinates (missing high coordinates are
    /// zero).
    pub fn from_i64(&self, coords: &[i64]) -> CycloElt {
        assert!(coords.len() <= self.d, "too many coordinates");
        let mut v = vec![0i64; self.d];
        v[..coords.len()].copy_from_slice(coords);
        CycloElt::Small(v)
    }

    pub fn from_coords(&self, coords: &[BigInt]) -> CycloElt {
        assert!(coords.len() <= self.d, "too many coordinates");
        let mut v = vec![BigInt::zero(); self.d];
        v[..coords.len()].clone_from_slice(coords);
        CycloElt::Big(v).compact()
    }

    pub fn scalar(&self, n: &BigInt) -> CycloElt {
        self.from_coords(std::slice::from_ref(n))
    }

    /// ζ − w, the second generator of the degree-1 prime ideals.
    pub fn zeta_minus(&self, w: u64) -> CycloElt {
        let w = BigInt::from(w);
        if self.d == 1 {
            // ζ_2 = −1.
            self.scalar(&(BigInt::from(-1) - w))
        } else {
            self.from_coords(&[-w, BigInt::one()])
        }
    }

    pub fn add(&self, a: &CycloElt, b: &CycloElt) -> CycloElt {
        self.addsub(a, b, 1)
    }

    pub fn sub(&self, a: &CycloElt, b: &CycloElt) -> CycloElt {
        self.addsub(a, b, -1)
    }

    fn addsub(&self, a: &CycloElt, b: &CycloElt, sign: i64) -> CycloElt {
        if let (CycloElt::Small(x), CycloElt::Small(y)) = (a, b) {
            let mut out = Vec::with_capacity(self.d);
            for k in 0..self.d {
                match y[k].checked_mul(sign).and_then(|t| x[k].checked_add(t)) {
                    Some(c) => out.push(c),
                    None => return self.addsub_big(a, b, sign),
                }
            }
            return CycloElt::Small(out);
        }
        self.addsub_big(a, b, sign)
    }

    fn addsub_big(&self, a: &CycloElt, b: &CycloElt, sign: i64) -> CycloElt {
        let (x, y) = (a.promote(), b.promote());
        CycloElt::Big(
            x.into_iter()
                .zip(y)
                .map(|(p, q)| p + q * sign)
                .collect(),
        )
    }

    pub fn neg(&self, a: &CycloElt) -> CycloElt {
        self.sub(&self.zero(), a)
    }

    /// Exact product reduced mod Φ_e. Small operands stay small when a
    /// conservative bound proves no intermediate can overflow.
    pub fn mul(&self, a: &CycloElt, b: &CycloElt) -> CycloElt {
        let d = self.d;
        if let (CycloElt::Small(x), CycloElt::Small(y)) = (a, b) {
            let maxa = x.iter().map(|c| c.unsigned_abs()).max().unwrap() as u128;
            let maxb = y.iter().map(|c| c.unsigned_abs()).max().unwrap() as u128;
            let factor =
                (d as u128) * (1 + self.row_bound as u128 * d as u128);
            if maxa != 0 && maxb != 0 && maxa <= (i64::MAX as u128) / factor / maxb {
                let mut conv = vec![0i64; 2 * d - 1];
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0 {
                        continue;
                    }
                    for (j, &yj) in y.iter().enumerate() {
                        conv[i + j] += xi * yj;
                    }
                }
                let mut out = conv[..d].to_vec();
                for (m, &c) in conv.iter().enumerate().skip(d) {
                    if c != 0 {
                        for k in 0..d {
                            out[k] += c * self.rows[m][k];
                        }
                    }
                }
                return CycloElt::Small(out);
            }
        }
        let (x, y) = (a.promote(), b.promote());
        let mut conv = vec![BigInt::zero(); 2 * d - 1];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                conv[i + j] += xi * yj;
            }
        }
        let mut out = conv[..d].to_vec();
        for (m, c) in conv.iter().enumerate().skip(d) {
            if !c.is_zero() {
                for k in 0..d {
                    out[k] += c * self.rows[m][k];
                }
            }
        }
        CycloElt::Big(out).compact()
    }

    /// ζ^m · a, by shifting coordinates through the reduction rows.
    pub fn mul_zeta_pow(&self, a: &CycloElt, m: u64) -> CycloElt {
        let m = (m % self.e) as usize;
        if m == 0 {
            return a.clone();
        }
        match a {
            CycloElt::Small(x) => {
                let mut out = vec![0i64; self.d];
                for (k, &c) in x.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let row = &self.rows[(k + m) % self.e as usize];
                    for i in 0..self.d {
                        match c
                            .checked_mul(row[i])
                            .and_then(|t| out[i].checked_add(t))
                        {
                            Some(v) => out[i] = v,
                            None => return self.mul_zeta_pow_big(a, m),
                        }
                    }
                }
                CycloElt::Small(out)
            }
            CycloElt::Big(_) => self.mul_zeta_pow_big(a, m),
        }
    }

    fn mul_zeta_pow_big(&self, a: &CycloElt, m: usize) -> CycloElt {
        let x = a.promote();
        let mut out = vec![BigInt::zero(); self.d];
        for (k, c) in x.iter().enumerate() {
            if !c.is_zero() {
                let row = &self.rows[(k + m) % self.e as usize];
                for i in 0..self.d {
                    if row[i] != 0 {
                        out[i] += c * row[i];
                    }
                }
            }
        }
        CycloElt::Big(out).compact()
    }

    /// σ_c: ζ ↦ ζ^c, for c coprime to e.
    pub fn automorphism(&self, a: &CycloElt, c: u64) -> CycloElt {
        let c = c % self.e;
        debug_assert_eq!(gcd_u64(c, self.e), 1, "automorphism index not a unit");
        if c == 1 {
            return a.clone();
        }
        match a {
            CycloElt::Small(x) => {
                let mut out = vec![0i64; self.d];
                for (k, &co) in x.iter().enumerate() {
                    if co == 0 {
                        continue;
                    }
                    let row = &self.rows[((k as u64 * c) % self.e) as usize];
                    for i in 0..self.d {
                        match co
                            .checked_mul(row[i])
                            .and_then(|t| out[i].checked_add(t))
                        {
                            Some(v) => out[i] = v,
                            None => return self.automorphism_big(a, c),
                        }
                    }
                }
                CycloElt::Small(out)
            }
            CycloElt::Big(_) => self.automorphism_big(a, c),
        }
    }

    fn automorphism_big(&self, a: &CycloElt, c: u64) -> CycloElt {
        let x = a.promote();
        let mut out = vec![BigInt::zero(); self.d];
        for (k, co) in x.iter().enumerate() {
            if !co.is_zero() {
                let row = &self.rows[((k as u64 * c) % self.e) as usize];
                for i in 0..self.d {
                    if row[i] != 0 {
                        out[i] += co * row[i];
                    }
                }
            }
        }
        CycloElt::Big(out).compact()
    }

    /// Exact field norm N_{K/Q}(a) as a signed integer (the product of all
    /// conjugates; nonnegative for e ≥ 4 where K is totally imaginary).
    pub fn norm(&self, a: &CycloElt) -> BigInt {
        let mut prod = CycloElt::Big(a.promote());
        for &c in self.unit_group.iter().skip(1) {
            prod = self.mul(&prod, &self.automorphism(a, c));
        }
        let coords = prod.coords();
        debug_assert!(
            coords[1..].iter().all(|c| c.is_zero()),
            "norm product is not rational"
        );
        coords.into_iter().next().unwrap()
    }

    /// a/b when b divides a exactly in O_K, via a·∏_{σ≠1}σ(b) / N(b).
    pub fn exact_div(&self, a: &CycloElt, b: &CycloElt) -> Option<CycloElt> {
        if b.is_zero() {
            return None;
        }
        let mut cof = self.one();
        for &c in self.unit_group.iter().skip(1) {
            cof = self.mul(&cof, &self.automorphism(b, c));
        }
        let n = {
            let nv = self.mul(b, &cof).coords();
            debug_assert!(nv[1..].iter().all(|c| c.is_zero()));
            nv.into_iter().next().unwrap()
        };
        let t = self.mul(a, &cof).coords();
        let mut out = Vec::with_capacity(self.d);
        for c in t {
            let (q, r) = num_integer::Integer::div_rem(&c, &n);
            if !r.is_zero() {
                return None;
            }
            out.push(q);
        }
        Some(CycloElt::Big(out).compact())
    }

    /// Complex embeddings τ_j(a), upper half plane, ascending exponent (one
    /// real value for e = 2). Double precision; large coordinates lose
    /// accuracy but keep the correct magnitude ordering.
    pub fn embed(&self, a: &CycloElt) -> Vec<Complex64> {
        let (vals, shift) = self.embed_scaled(a);
        let s = (shift as f64).exp2();
        vals.into_iter().map(|v| v * s).collect()
    }

    /// Embeddings of a/2^shift with shift chosen so magnitudes stay finite.
    fn embed_scaled(&self, a: &CycloElt) -> (Vec<Complex64>, i64) {
        let (xs, shift): (Vec<f64>, i64) = match a {
            CycloElt::Small(v) => (v.iter().map(|&c| c as f64).collect(), 0),
            CycloElt::Big(v) => {
                let maxbits = v.iter().map(|c| c.bits()).max().unwrap();
                let shift = maxbits.saturating_sub(52) as i64;
                (
                    v.iter()
                        .map(|c| {
                            let m = (c.magnitude() >> shift as u64).to_f64().unwrap();
                            if c.sign() == Sign::Minus {
                                -m
                            } else {
                                m
                            }
                        })
                        .collect(),
                    shift,
                )
            }
        };
        let vals = self
            .emb_exp
            .iter()
            .map(|&c| {
                let mut t = Complex64::new(0.0, 0.0);
                for (k, &x) in xs.iter().enumerate() {
                    if x != 0.0 {
                        t += x * self.zpow[((c * k as u64) % self.e) as usize];
                    }
                }
                t
            })
            .collect();
        (vals, shift)
    }

    /// log|N(a)|, from the scaled embeddings; −∞ for zero.
    pub fn log_norm(&self, a: &CycloElt) -> f64 {
        if a.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (vals, shift) = self.embed_scaled(a);
        let mult = if self.e == 2 { 1.0 } else { 2.0 };
        vals.iter()
            .map(|v| mult * (v.norm().max(1e-300).ln() + shift as f64 * std::f64::consts::LN_2))
            .sum()
    }

    fn log_abs_mean(&self, a: &CycloElt) -> f64 {
        let s = a.abs_sum();
        if s.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = s.bits();
        let shift = bits.saturating_sub(52);
        let top = (&s >> shift).to_f64().unwrap();
        top.ln() + shift as f64 * std::f64::consts::LN_2 - (self.d as f64).ln()
    }

    fn is_balanced(&self, a: &CycloElt) -> bool {
        // Unbalanced iff (1/d)Σ|c_i| > 10·|N|^{1/d}, tested in log space.
        self.log_abs_mean(a) <= 10f64.ln() + self.log_norm(a) / self.d as f64
    }

    /// Divide out a unit so the coordinates shrink toward |N(a)|^{1/d}.
    /// Returns an associate (or `a` itself when balanced already or no unit
    /// helps). Never changes the ideal.
    pub fn balance(&self, a: &CycloElt) -> CycloElt {
        if a.is_zero() || self.bal_units.is_empty() || self.is_balanced(a) {
            return a.clone();
        }
        let (vals, shift) = self.embed_scaled(a);
        let logs: Vec<f64> = vals
            .iter()
            .map(|v| v.norm().max(1e-300).ln() + shift as f64 * std::f64::consts::LN_2)
            .collect();
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        let target: Vec<f64> = logs.iter().map(|l| l - mean).collect();
        let mut changed = false;
        let mut inv = self.one();
        for (k, row) in self.bal_pinv.iter().enumerate() {
            let nf: f64 = row.iter().zip(&target).map(|(r, t)| r * t).sum();
            let n = (nf.round() as i64).clamp(-BALANCE_EXP_CAP, BALANCE_EXP_CAP);
            if n != 0 {
                changed = true;
                let base = if n > 0 {
                    &self.bal_unit_invs[k]
                } else {
                    &self.bal_units[k]
                };
                inv = self.mul(&inv, &self.pow(base, n.unsigned_abs()));
            }
        }
        if !changed {
            return a.clone();
        }
        let cand = self.mul(a, &inv).compact();
        if cand.abs_sum() < a.abs_sum() {
            cand
        } else {
            a.clone()
        }
    }

    fn pow(&self, a: &CycloElt, mut n: u64) -> CycloElt {
        let mut base = a.clone();
        let mut acc = self.one();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// ∏_c σ_{c⁻¹ mod e}(a)^c over c coprime to e: the Stickelberger-style
    /// product whose value against θ satisfies β·σ_{−1}(β) = p^e. Exact;
    /// meant for cross-checks, not the modular fast path.
    pub fn stickelberger(&self, a: &CycloElt) -> CycloElt {
        let mut out = self.one();
        for &c in &self.unit_group {
            let cinv = inv_mod_u64(c, self.e);
            out = self.mul(&out, &self.pow(&self.automorphism(a, cinv), c));
        }
        out
    }

    fn build_balance_lattice(&mut self) {
        let rank = (self.d / 2).saturating_sub(1);
        if rank == 0 {
            return;
        }
        // Cyclotomic units: for each divisor m > 2 of e take
        // (1 − ζ_m^a)/(1 − ζ_m) when m is a prime power (a coprime to m),
        // and 1 − ζ_m^a itself otherwise. Exponents above m/2 repeat log
        // vectors (complex conjugation) and are skipped.
        let mut cands: Vec<CycloElt> = Vec::new();
        for m in 3..=self.e {
            if self.e % m != 0 {
                continue;
            }
            let step = self.e / m;
            let pp = is_prime_power(m);
            let base = self.sub(&self.one(), &self.mul_zeta_pow(&self.one(), step));
            for a in 1..=m / 2 {
                if gcd_u64(a, m) != 1 || (pp && a == 1) {
                    continue;
                }
                let num = self.sub(&self.one(), &self.mul_zeta_pow(&self.one(), step * a));
                let u = if pp {
                    self.exact_div(&num, &base)
                        .expect("cyclotomic unit quotient must divide")
                } else {
                    num
                };
                debug_assert!(self.norm(&u).magnitude().is_one());
                cands.push(u);
            }
        }
        // Greedy selection of a full-rank subset by Gram–Schmidt residual.
        let dim = self.d / 2;
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut chosen: Vec<CycloElt> = Vec::new();
        for u in cands {
            if chosen.len() == rank {
                break;
            }
            let (vals, shift) = self.embed_scaled(&u);
            let mut v: Vec<f64> = vals
                .iter()
                .map(|t| t.norm().max(1e-300).ln() + shift as f64 * std::f64::consts::LN_2)
                .collect();
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                let nrm: f64 = b.iter().map(|y| y * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= dot / nrm * y;
                }
            }
            if v.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-6 {
                basis.push(v);
                chosen.push(u);
            }
        }
        assert_eq!(
            chosen.len(),
            rank,
            "cyclotomic units span rank {} < {} for e = {}",
            chosen.len(),
            rank,
            self.e
        );
        // Least-squares projector pinv = (GᵀG)⁻¹Gᵀ for G with unit log
        // vectors as columns.
        let g: Vec<Vec<f64>> = chosen
            .iter()
            .map(|u| {
                let (vals, shift) = self.embed_scaled(u);
                vals.iter()
                    .map(|t| t.norm().max(1e-300).ln() + shift as f64 * std::f64::consts::LN_2)
                    .collect()
            })
            .collect();
        let mut gtg = vec![vec![0.0; rank]; rank];
        for i in 0..rank {
            for j in 0..rank {
                gtg[i][j] = (0..dim).map(|t| g[i][t] * g[j][t]).sum();
            }
        }
        let gtg_inv = invert_matrix(&gtg);
        let mut pinv = vec![vec![0.0; dim]; rank];
        for i in 0..rank {
            for t in 0..dim {
                pinv[i][t] = (0..rank).map(|j| gtg_inv[i][j] * g[j][t]).sum();
            }
        }
        self.bal_unit_invs = chosen
            .iter()
            .map(|u| {
                self.exact_div(&self.one(), u)
                    .expect("unit must be invertible")
            })
            .collect();
        self.bal_units = chosen;
        self.bal_pinv = pinv;
    }

    /// Smallest residue of multiplicative order exactly e mod q.
    fn order_e_root(&self, q: u64) -> u64 {
        let qfactors = prime_factors(self.e);
        'outer: for base in 2..q {
            let x = pow_mod(base, (q - 1) / self.e, q);
            if x <= 1 {
                continue;
            }
            for &r in &qfactors {
                if pow_mod(x, self.e / r, q) == 1 {
                    continue 'outer;
                }
            }
            return x;
        }
        unreachable!("no element of order {} mod {}", self.e, q)
    }

    fn build_perturbation_sets(&mut self) {
        let mut qs = Vec::new();
        let mut q = self.e + 1;
        while qs.len() < 2 {
            if crate::primes::is_prime_64(q) && q % self.e == 1 {
                qs.push(q);
            }
            q += self.e;
        }
        let first = self.bootstrap_set(qs[0], &[]);
        let second = self.bootstrap_set(qs[1], &[&first]);
        self.pert = [first, second];
        self.pert_q = [qs[0], qs[1]];
    }

    fn conjugate_set(&self, theta: &CycloElt) -> Vec<CycloElt> {
        self.unit_group
            .clone()
            .iter()
            .map(|&c| self.balance(&self.automorphism(theta, c)).compact())
            .collect()
    }

    /// All conjugates of a norm-q prime element. Tries any sets already
    /// built (full-strength descent), then the jitter-only descent, then
    /// the descent armed with a binomial family: a − ζ has norm Φ_e(a), so
    /// scanning small a for prime values yields a perturbation set for
    /// free, just with a larger prime than ideal.
    fn bootstrap_set(&self, q: u64, auxes: &[&[CycloElt]]) -> Vec<CycloElt> {
        for aux in auxes {
            if let Some(theta) = self.bootstrap_theta(q, Some(aux)) {
                return self.conjugate_set(&theta);
            }
        }
        if let Some(theta) = self.bootstrap_theta(q, None) {
            return self.conjugate_set(&theta);
        }
        let binomials = self
            .binomial_prime_set(q)
            .unwrap_or_else(|| panic!("no binomial prime for e = {}", self.e));
        let theta = self
            .bootstrap_theta(q, Some(&binomials))
            .unwrap_or_else(|| panic!("perturbation bootstrap failed for e = {}, q = {q}", self.e));
        self.conjugate_set(&theta)
    }

    /// Conjugates of a − ζ for the smallest |a| ≥ 2 making Φ_e(a) a prime
    /// other than q (checking ±a).
    fn binomial_prime_set(&self, avoid: u64) -> Option<Vec<CycloElt>> {
        for a in 2i64..=64 {
            for s in [1i64, -1] {
                let v = s * a;
                let r = self
                    .phi
                    .iter()
                    .rev()
                    .fold(BigInt::zero(), |acc, &c| acc * v + c);
                let Some(r) = r.magnitude().to_u64() else {
                    continue;
                };
                if r != avoid && r % self.e == 1 && crate::primes::is_prime_64(r) {
                    let theta = self.from_i64(&[v, -1]);
                    debug_assert_eq!(*self.norm(&theta).magnitude(), BigUint::from(r));
                    return Some(self.conjugate_set(&theta));
                }
            }
        }
        None
    }

    /// Generator of a prime ideal above q, found by the same descent as
    /// [`CycloField::cyclo_gcd`] but with additive jitter instead of the
    /// perturbation sets (which do not exist yet while the field is being
    /// built). On a stall the smaller element gains a random integer
    /// multiple of the larger: (X, Y + tX) spans the same ideal, and unlike
    /// X + tY it genuinely moves X/Y modulo the integer lattice (a shift of
    /// X by a multiple of Y is absorbed exactly by the rounding step).
    fn bootstrap_theta(&self, q: u64, pert: Option<&[CycloElt]>) -> Option<CycloElt> {
        let wq = self.order_e_root(q);
        let x0 = self.scalar(&BigInt::from(q));
        let y0 = self.zeta_minus(wq);
        for attempt in 0..32u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(
                (self.e << 32) ^ q ^ attempt.wrapping_mul(0x9E3779B97F4A7C15),
            );
            let mut x = x0.clone();
            let mut y = y0.clone();
            for _ in 0..64 * self.d {
                if x.is_zero() || y.is_zero() {
                    break;
                }
                if self.log_norm(&x) < self.log_norm(&y) {
                    std::mem::swap(&mut x, &mut y);
                }
                let ly = self.log_norm(&y);
                match self.try_quotient(&x, &y, ly) {
                    Some(z) => x = self.balance(&z).compact(),
                    None => match pert {
                        Some(set) => {
                            let u = &set[rng.gen_range(0..set.len())];
                            match self.exact_div(&y, u) {
                                Some(w) => y = self.balance(&w).compact(),
                                None => x = self.balance(&self.mul(&x, u)).compact(),
                            }
                        }
                        None => {
                            let mut t = vec![0i64; self.d];
                            while t.iter().all(|&c| c == 0) {
                                for c in t.iter_mut() {
                                    *c = rng.gen_range(-1..=1);
                                }
                            }
                            let jitter = self.mul(&x, &CycloElt::Small(t));
                            y = self.balance(&self.add(&y, &jitter)).compact();
                        }
                    },
                }
            }
            let cand = if x.is_zero() { y } else { x };
            if self.exact_div(&x0, &cand).is_some()
                && self.exact_div(&y0, &cand).is_some()
                && *self.norm(&cand).magnitude() == BigUint::from(q)
            {
                return Some(self.balance(&cand).compact());
            }
        }
        None
    }

    /// One quotient-and-reduce step: round the embedded X/Y to an integer
    /// element Q, allow single-coordinate ±1 adjustments, and return the
    /// first Z = X − QY whose norm genuinely drops below N(Y).
    fn try_quotient(&self, x: &CycloElt, y: &CycloElt, ly: f64) -> Option<CycloElt> {
        let accept = ly - LOG_TIE_TOL * ly.abs().max(1.0);
        let (ex, sx) = self.embed_scaled(x);
        let (ey, sy) = self.embed_scaled(y);
        let mut stacked = vec![0.0; self.d];
        for j in 0..ex.len() {
            let r = ex[j] / ey[j];
            if !r.is_finite() {
                return None;
            }
            if self.e == 2 {
                stacked[0] = r.re;
            } else {
                stacked[2 * j] = r.re;
                stacked[2 * j + 1] = r.im;
            }
        }
        let scale = ((sx - sy) as f64).exp2();
        let mut q = vec![0i64; self.d];
        for k in 0..self.d {
            let t: f64 = self.minv[k]
                .iter()
                .zip(&stacked)
                .map(|(m, s)| m * s)
                .sum::<f64>()
                * scale;
            if !t.is_finite() {
                return None;
            }
            q[k] = t.round().clamp(-9.0e18, 9.0e18) as i64;
        }
        let z = self.sub(x, &self.mul(y, &CycloElt::Small(q)));
        if self.log_norm(&z) < accept {
            return Some(z);
        }
        // A few nudges of single coordinates: X − (Q ± e_k)Y = Z ∓ ζ^k Y.
        for k in 0..self.d {
            let zy = self.mul_zeta_pow(y, k as u64);
            for cand in [self.sub(&z, &zy), self.add(&z, &zy)] {
                if self.log_norm(&cand) < accept {
                    return Some(cand);
                }
            }
        }
        None
    }

    /// Heuristic GCD: a generator of the ideal (x, y), assuming one exists
    /// with norm well above the perturbation primes (the intended use is
    /// x = p, y = ζ − ω₀). Euclidean descent guided by floating-point
    /// embeddings; random perturbation by prime-norm elements on stall;
    /// eight 63-bit attempts, then eight arbitrary-precision attempts.
    /// Every candidate is verified exactly before it is returned.
    pub fn cyclo_gcd(&self, x: &CycloElt, y: &CycloElt, seed: u64) -> Result<CycloElt> {
        if self.e == 2 {
            let g = num_integer::Integer::gcd(&x.coords()[0], &y.coords()[0]);
            return Ok(self.scalar(&g));
        }
        let pert = self.pert_for(x);
        for attempt in 0..GCD_ATTEMPTS_FAST + GCD_ATTEMPTS_BIG {
            let fast = attempt < GCD_ATTEMPTS_FAST;
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ (attempt as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15),
            );
            if let Some(cand) = self.gcd_attempt(x, y, fast, pert, &mut rng) {
                if !cand.is_zero()
                    && self.exact_div(x, &cand).is_some()
                    && self.exact_div(y, &cand).is_some()
                {
                    return Ok(self.balance(&cand).compact());
                }
            }
        }
        Err(Error::Heuristic(format!(
            "cyclotomic gcd for e = {} failed to converge after {} attempts",
            self.e,
            GCD_ATTEMPTS_FAST + GCD_ATTEMPTS_BIG
        )))
    }

    fn pert_for(&self, x: &CycloElt) -> &[CycloElt] {
        // Avoid perturbing by elements whose norm shares a factor with
        // N(x): in the intended use that only happens when the target p
        // equals the perturbation prime itself.
        let n = self.norm(x);
        for k in 0..2 {
            if !(&n % self.pert_q[k]).is_zero() {
                return &self.pert[k];
            }
        }
        &self.pert[0]
    }

    fn gcd_attempt(
        &self,
        x0: &CycloElt,
        y0: &CycloElt,
        fast: bool,
        pert: &[CycloElt],
        rng: &mut ChaCha8Rng,
    ) -> Option<CycloElt> {
        let mut x = self.balance(x0).compact();
        let mut y = self.balance(y0).compact();
        for _ in 0..64 * self.d {
            if fast && (x.is_big() || y.is_big()) {
                return None;
            }
            if x.is_zero() {
                return Some(y);
            }
            if y.is_zero() {
                return Some(x);
            }
            if self.log_norm(&x) < self.log_norm(&y) {
                std::mem::swap(&mut x, &mut y);
            }
            let ly = self.log_norm(&y);
            match self.try_quotient(&x, &y, ly) {
                Some(z) => x = self.balance(&z).compact(),
                None => {
                    let u = &pert[rng.gen_range(0..pert.len())];
                    match self.exact_div(&y, u) {
                        Some(yd) => y = self.balance(&yd).compact(),
                        None => x = self.balance(&self.mul(&x, u)).compact(),
                    }
                }
            }
        }
        None
    }
}

pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod(b: u64, e: u64, m: u64) -> u64 {
    crate::primes::pow_mod_64(b % m, e, m)
}
