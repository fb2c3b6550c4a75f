//! Power sums, elementary symmetric polynomials and the Girard–Newton
//! conversion between them, all exact modulo `p^M`.

use crate::error::{LabError, Result};
use crate::field::{PrimeModulus, Residue};

/// Largest tuple length accepted by default. Cluster enumeration downstream is `2^(n-1)`.
pub const DEFAULT_DEGREE_CAP: usize = 8;

/// An ordered tuple of residues sharing one modulus: a point of `(Z/p^M)^n`.
///
/// `n < p` is not enforced here; the Girard–Newton inversion checks it and the
/// hypothesis-violation search relies on building tuples with `n ≥ p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymTuple {
    modulus: PrimeModulus,
    entries: Vec<Residue>,
}

impl SymTuple {
    pub fn new(entries: Vec<Residue>) -> Result<Self> {
        Self::with_cap(entries, DEFAULT_DEGREE_CAP)
    }

    pub fn with_cap(entries: Vec<Residue>, cap: usize) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| LabError::InvalidInput("empty tuple".into()))?;
        let modulus = first.modulus();
        if let Some(bad) = entries.iter().find(|r| r.modulus() != modulus) {
            return Err(LabError::ModulusMismatch {
                left: modulus.to_string(),
                right: bad.modulus().to_string(),
            });
        }
        if entries.len() > cap {
            return Err(LabError::InvalidInput(format!(
                "tuple length {} exceeds the degree cap {cap}",
                entries.len()
            )));
        }
        Ok(Self { modulus, entries })
    }

    pub fn from_ints(modulus: PrimeModulus, values: &[i128]) -> Result<Self> {
        Self::new(values.iter().map(|&v| modulus.residue(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn entries(&self) -> &[Residue] {
        &self.entries
    }

    pub fn reps(&self) -> Vec<u64> {
        self.entries.iter().map(Residue::rep).collect()
    }

    /// `out[k] = self[perm[k]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            modulus: self.modulus,
            entries: perm.iter().map(|&i| self.entries[i]).collect(),
        }
    }

    /// Every `j ≤ n` is a unit mod `p`.
    pub fn newton_invertible(&self) -> bool {
        self.modulus.p() > self.entries.len() as u64
    }
}

/// `p_j(x) = Σ x_l^j` for `j = 1..n`.
pub fn power_sums(x: &SymTuple) -> Vec<Residue> {
    let n = x.len();
    let zero = x.modulus.zero();
    let mut sums = vec![zero; n];
    for &xi in &x.entries {
        let mut power = xi;
        for s in sums.iter_mut() {
            *s = *s + power;
            power = power * xi;
        }
    }
    sums
}

/// `e_j(x)` for `j = 1..n` by incremental expansion of `Π (1 + x_l T)`.
pub fn elementary_symmetric(x: &SymTuple) -> Vec<Residue> {
    let n = x.len();
    let mut e = vec![x.modulus.zero(); n + 1];
    e[0] = x.modulus.one();
    for (k, &xi) in x.entries.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            e[j] = e[j] + e[j - 1] * xi;
        }
    }
    e.remove(0);
    e
}

/// Recover `e_1..e_n` from `p_1..p_n` with `j e_j = Σ_{i=1}^{j} (-1)^{i-1} e_{j-i} p_i`.
pub fn newton_power_to_elementary(powers: &[Residue]) -> Result<Vec<Residue>> {
    let first = powers
        .first()
        .ok_or_else(|| LabError::InvalidInput("no power sums given".into()))?;
    let modulus = first.modulus();
    let n = powers.len();
    if modulus.p() <= n as u64 {
        return Err(LabError::Hypothesis(format!(
            "Girard–Newton inversion needs p > n (p = {}, n = {n})",
            modulus.p()
        )));
    }
    if let Some(bad) = powers.iter().find(|r| r.modulus() != modulus) {
        return Err(LabError::ModulusMismatch {
            left: modulus.to_string(),
            right: bad.modulus().to_string(),
        });
    }
    let mut e = Vec::with_capacity(n + 1);
    e.push(modulus.one());
    for j in 1..=n {
        let mut acc = modulus.zero();
        for i in 1..=j {
            let term = e[j - i] * powers[i - 1];
            acc = if i % 2 == 1 { acc + term } else { acc - term };
        }
        let inv = modulus
            .residue(j as i128)
            .inverse()
            .expect("j < p is a unit");
        e.push(acc * inv);
    }
    e.remove(0);
    Ok(e)
}

/// Coefficients of `Π (X - x_j)`, constant term first, leading coefficient 1.
pub fn monic_from_roots(x: &SymTuple) -> Vec<Residue> {
    let mut coeffs = vec![x.modulus.one()];
    for &root in &x.entries {
        let mut next = vec![x.modulus.zero(); coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k + 1] = next[k + 1] + c;
            next[k] = next[k] - c * root;
        }
        coeffs = next;
    }
    coeffs
}

/// Horner evaluation of a coefficient list (constant term first).
pub fn eval_poly(coeffs: &[Residue], z: Residue) -> Residue {
    coeffs
        .iter()
        .rev()
        .fold(z.modulus().zero(), |acc, &c| acc * z + c)
}
