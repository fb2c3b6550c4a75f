//! Truncated p-adic integers, valuations with rational exponents, ultrametric
//! balls and the standard additive character of `Q_p`.
//!
//! A [`Residue`] is an element of `Z/p^M`, standing for a p-adic integer known
//! to precision `M`. Valuations are [`ValExp`] values: either an exact rational
//! exponent or the truncation marker `AtLeast(M)` for residues that vanish at
//! the working precision. Rational exponents model the value group of a totally
//! ramified extension without ever constructing extension-field elements.
//!
//! Moduli are checked to fit in 64 bits and all products go through `u128`, so
//! no operation can overflow silently.

use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::complex::Complex64;
use num::rational::Ratio;
use num::{Integer, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Rational valuation exponent. Absolute value `p^{-e}`.
pub type Exponent = Ratio<i64>;

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &SMALL {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// `p^e`, or `None` on 64-bit overflow.
pub fn checked_pow(p: u64, e: u32) -> Option<u64> {
    p.checked_pow(e)
}

/// Modular inverse by the extended Euclidean algorithm.
pub fn inverse_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// The ring `Z/p^M`: a prime `p` and a precision exponent `M ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeModulus {
    p: u64,
    precision: u32,
    modulus: u64,
}

impl PrimeModulus {
    pub fn new(p: u64, precision: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(LabError::NotPrime(p));
        }
        if precision == 0 {
            return Err(LabError::ZeroPrecision);
        }
        let modulus = checked_pow(p, precision).ok_or(LabError::ModulusOverflow { p, precision })?;
        Ok(Self {
            p,
            precision,
            modulus,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// `p^M`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `p^k` for `k ≤ M`.
    pub fn power(&self, k: u32) -> u64 {
        debug_assert!(k <= self.precision);
        self.p.pow(k)
    }

    pub fn residue(&self, value: i128) -> Residue {
        Residue {
            modulus: *self,
            rep: value.rem_euclid(self.modulus as i128) as u64,
        }
    }

    pub fn zero(&self) -> Residue {
        self.residue(0)
    }

    pub fn one(&self) -> Residue {
        self.residue(1)
    }

    /// All `p^M` residues in canonical order.
    pub fn residues(&self) -> impl Iterator<Item = Residue> + '_ {
        (0..self.modulus).map(move |rep| Residue {
            modulus: *self,
            rep,
        })
    }

    /// The same prime at a different precision.
    pub fn with_precision(&self, precision: u32) -> Result<Self> {
        Self::new(self.p, precision)
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.p, self.precision)
    }
}

/// A p-adic integer truncated to precision `M`, canonically in `[0, p^M)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Residue {
    modulus: PrimeModulus,
    rep: u64,
}

impl Residue {
    pub fn new(modulus: PrimeModulus, value: i128) -> Self {
        modulus.residue(value)
    }

    pub fn rep(&self) -> u64 {
        self.rep
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.rep == 0
    }

    pub fn pow(&self, exp: u32) -> Self {
        Self {
            modulus: self.modulus,
            rep: pow_mod(self.rep, exp as u64, self.modulus.modulus),
        }
    }

    /// Inverse of a unit; `None` when `p` divides the residue.
    pub fn inverse(&self) -> Option<Self> {
        inverse_mod(self.rep, self.modulus.modulus).map(|rep| Self {
            modulus: self.modulus,
            rep,
        })
    }

    pub fn val(&self) -> ValExp {
        val(self)
    }

    /// Reduce to a coarser precision.
    pub fn truncate(&self, precision: u32) -> Result<Self> {
        if precision > self.modulus.precision {
            return Err(LabError::Precision(format!(
                "cannot lift a residue mod {} to precision {precision}",
                self.modulus
            )));
        }
        let target = self.modulus.with_precision(precision)?;
        Ok(target.residue(self.rep as i128))
    }

    /// `self ≡ other (mod p^k)`.
    pub fn congruent(&self, other: &Self, k: u32) -> Result<bool> {
        check_same(self, other)?;
        if k > self.modulus.precision {
            return Err(LabError::Precision(format!(
                "congruence mod p^{k} at precision {}",
                self.modulus.precision
            )));
        }
        let pk = self.modulus.power(k);
        Ok(self.rep % pk == other.rep % pk)
    }

    fn assert_same(&self, other: &Self) {
        assert_eq!(
            self.modulus, other.modulus,
            "residue arithmetic across different moduli"
        );
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.rep, self.modulus)
    }
}

impl Add for Residue {
    type Output = Residue;
    fn add(self, rhs: Residue) -> Residue {
        self.assert_same(&rhs);
        let m = self.modulus.modulus as u128;
        Residue {
            modulus: self.modulus,
            rep: ((self.rep as u128 + rhs.rep as u128) % m) as u64,
        }
    }
}

impl Sub for Residue {
    type Output = Residue;
    fn sub(self, rhs: Residue) -> Residue {
        self.assert_same(&rhs);
        let m = self.modulus.modulus as u128;
        Residue {
            modulus: self.modulus,
            rep: ((self.rep as u128 + m - rhs.rep as u128) % m) as u64,
        }
    }
}

impl Mul for Residue {
    type Output = Residue;
    fn mul(self, rhs: Residue) -> Residue {
        self.assert_same(&rhs);
        Residue {
            modulus: self.modulus,
            rep: mul_mod(self.rep, rhs.rep, self.modulus.modulus),
        }
    }
}

impl Neg for Residue {
    type Output = Residue;
    fn neg(self) -> Residue {
        let m = self.modulus.modulus;
        Residue {
            modulus: self.modulus,
            rep: (m - self.rep) % m,
        }
    }
}

fn check_same(x: &Residue, y: &Residue) -> Result<()> {
    if x.modulus != y.modulus {
        return Err(LabError::ModulusMismatch {
            left: x.modulus.to_string(),
            right: y.modulus.to_string(),
        });
    }
    Ok(())
}

/// A valuation: exact rational exponent, or a lower bound caused by truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValExp {
    /// `|x| = p^{-v}`.
    Exact(Exponent),
    /// `|x| ≤ p^{-M}`; the true valuation is unknown beyond the precision.
    AtLeast(u32),
}

impl ValExp {
    pub fn exact(v: i64) -> Self {
        ValExp::Exact(Exponent::from_integer(v))
    }

    pub fn as_exact(&self) -> Option<Exponent> {
        match self {
            ValExp::Exact(v) => Some(*v),
            ValExp::AtLeast(_) => None,
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, ValExp::AtLeast(_))
    }

    /// The exponent that is certainly attained: `v` for `Exact(v)`, `M` for `AtLeast(M)`.
    pub fn floor_exponent(&self) -> Exponent {
        match self {
            ValExp::Exact(v) => *v,
            ValExp::AtLeast(m) => Exponent::from_integer(*m as i64),
        }
    }

    /// `|x|` as a float; an upper bound for truncated valuations.
    pub fn abs_value(&self, p: u64) -> f64 {
        let e = self.floor_exponent();
        (p as f64).powf(-(*e.numer() as f64) / (*e.denom() as f64))
    }

    /// Decide `v ≥ threshold`. Truncated valuations answer only when the
    /// threshold is at or below the truncation point.
    pub fn is_at_least(&self, threshold: Exponent) -> Result<bool> {
        match self {
            ValExp::Exact(v) => Ok(*v >= threshold),
            ValExp::AtLeast(m) => {
                if Exponent::from_integer(*m as i64) >= threshold {
                    Ok(true)
                } else {
                    Err(LabError::Precision(format!(
                        "valuation known only to be ≥ {m}, threshold {threshold}"
                    )))
                }
            }
        }
    }

    /// Checks that an exact exponent has denominator dividing `d`.
    pub fn check_denominator(&self, d: i64) -> Result<()> {
        if let ValExp::Exact(v) = self {
            if d % v.denom() != 0 {
                return Err(LabError::InvalidInput(format!(
                    "exponent {v} has denominator not dividing {d}"
                )));
            }
        }
        Ok(())
    }

    fn rank(&self) -> u8 {
        match self {
            ValExp::Exact(_) => 0,
            ValExp::AtLeast(_) => 1,
        }
    }
}

impl Ord for ValExp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.floor_exponent()
            .cmp(&other.floor_exponent())
            .then(self.rank().cmp(&other.rank()))
    }
}

impl PartialOrd for ValExp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ValExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValExp::Exact(v) => write!(f, "{v}"),
            ValExp::AtLeast(m) => write!(f, "≥{m}"),
        }
    }
}

/// p-adic valuation of a truncated integer.
pub fn val(x: &Residue) -> ValExp {
    if x.rep == 0 {
        return ValExp::AtLeast(x.modulus.precision);
    }
    let p = x.modulus.p;
    let mut r = x.rep;
    let mut k = 0;
    while r.is_multiple_of(p) {
        r /= p;
        k += 1;
    }
    ValExp::exact(k)
}

/// `v(x - y)`, the logarithmic form of `|x - y|_p`.
pub fn abs_diff(x: &Residue, y: &Residue) -> Result<ValExp> {
    check_same(x, y)?;
    Ok(val(&(*x - *y)))
}

/// Integer exponent of a base-field ball with the given (possibly rational) radius.
fn base_field_exponent(radius: &ValExp) -> Exponent {
    match radius {
        ValExp::Exact(v) => Exponent::from_integer(v.ceil().to_integer()),
        ValExp::AtLeast(m) => Exponent::from_integer(*m as i64),
    }
}

/// Closed ball `{z : v(z - center) ≥ radius}`.
///
/// Only integer valuations occur among base-field points, so a rational radius
/// `r` describes the same point set as `⌈r⌉`. An `AtLeast(k)` radius is read
/// as the integer exponent `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UltraBall {
    center: Residue,
    radius: ValExp,
}

impl UltraBall {
    pub fn new(center: Residue, radius: ValExp) -> Result<Self> {
        if radius.floor_exponent() < Exponent::zero() {
            return Err(LabError::InvalidInput(format!(
                "ball radius exponent {radius} leaves the ring of integers"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> Residue {
        self.center
    }

    pub fn radius(&self) -> ValExp {
        self.radius
    }

    /// The integer exponent `k` with ball = residue class of the center mod `p^k`.
    pub fn integer_exponent(&self) -> Result<u32> {
        let k = base_field_exponent(&self.radius).to_integer();
        let m = self.center.modulus.precision as i64;
        if k > m {
            return Err(LabError::Precision(format!(
                "ball radius p^-{k} is below the precision p^-{m}"
            )));
        }
        Ok(k as u32)
    }

    pub fn contains(&self, z: &Residue) -> Result<bool> {
        check_same(&self.center, z)?;
        let k = self.integer_exponent()?;
        self.center.congruent(z, k)
    }

    /// The `p` balls of radius `p^{-k-1}` whose union is this ball.
    pub fn children(&self) -> Result<Vec<UltraBall>> {
        let k = self.integer_exponent()?;
        let modulus = self.center.modulus;
        if k + 1 > modulus.precision {
            return Err(LabError::Precision(format!(
                "splitting a radius p^-{k} ball needs precision {}",
                k + 1
            )));
        }
        let pk = modulus.power(k) as i128;
        let base = (self.center.rep as i128) % pk;
        Ok((0..modulus.p as i128)
            .map(|digit| UltraBall {
                center: modulus.residue(base + digit * pk),
                radius: ValExp::exact(k as i64 + 1),
            })
            .collect())
    }
}

/// How two ultrametric balls sit relative to each other. Partial overlap is impossible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BallRelation {
    Disjoint,
    ASubsetB,
    BSubsetA,
    Equal,
}

pub fn ball_relation(a: &UltraBall, b: &UltraBall) -> Result<BallRelation> {
    check_same(&a.center, &b.center)?;
    let ka = a.integer_exponent()?;
    let kb = b.integer_exponent()?;
    let shared = ka.min(kb);
    if !a.center.congruent(&b.center, shared)? {
        return Ok(BallRelation::Disjoint);
    }
    Ok(match ka.cmp(&kb) {
        Ordering::Equal => BallRelation::Equal,
        // Larger exponent means smaller radius.
        Ordering::Less => BallRelation::BSubsetA,
        Ordering::Greater => BallRelation::ASubsetB,
    })
}

/// The standard additive character `e` of `Q_p`: trivial on `Z_p`, non-principal
/// on `p^{-1} Z_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdditiveCharacter {
    p: u64,
}

impl AdditiveCharacter {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(LabError::NotPrime(p));
        }
        Ok(Self { p })
    }

    /// `e(num / p^k) = exp(2πi · {num / p^k}_p)`.
    pub fn eval(&self, num: i128, denom_exp: i32) -> Result<Complex64> {
        if denom_exp < 0 {
            return Err(LabError::NegativeExponent(denom_exp as i64));
        }
        if denom_exp == 0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let q = checked_pow(self.p, denom_exp as u32).ok_or(LabError::ModulusOverflow {
            p: self.p,
            precision: denom_exp as u32,
        })?;
        let r = num.rem_euclid(q as i128) as u64;
        Ok(unit_root(r, q))
    }
}

/// Convenience wrapper around [`AdditiveCharacter::eval`].
pub fn char_e(p: u64, num: i128, denom_exp: i32) -> Result<Complex64> {
    AdditiveCharacter::new(p)?.eval(num, denom_exp)
}

/// `exp(2πi r/q)` with the numerator already reduced.
fn unit_root(r: u64, q: u64) -> Complex64 {
    // Reducing the fraction makes e.g. exp(2πi·5/25) bit-identical to exp(2πi/5).
    let g = r.gcd(&q);
    let (r, q) = if g > 1 { (r / g, q / g) } else { (r, q) };
    Complex64::from_polar(1.0, TAU * (r as f64) / (q as f64))
}

/// Table of `exp(2πi k / q)` for `k` in `[0, q)`.
#[derive(Clone, Debug)]
pub struct PhaseTable {
    modulus: u64,
    table: Vec<Complex64>,
}

impl PhaseTable {
    pub fn new(modulus: u64) -> Self {
        let table = (0..modulus).map(|k| unit_root(k, modulus)).collect();
        Self { modulus, table }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn get(&self, k: u64) -> Complex64 {
        self.table[(k % self.modulus) as usize]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.table
    }
}
