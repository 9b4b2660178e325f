use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::ridgepoly::multiindex::MultiIndex;

/// Sparse polynomial with exact rational coefficients. Zero coefficients
/// are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MPoly {
    n_vars: usize,
    terms: BTreeMap<MultiIndex, BigRational>,
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn integer(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl MPoly {
    pub fn zero(n_vars: usize) -> Self {
        MPoly {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: BigRational) -> Self {
        MPoly::monomial(MultiIndex::zeros(n_vars), c)
    }

    pub fn one(n_vars: usize) -> Self {
        MPoly::constant(n_vars, BigRational::one())
    }

    /// The coordinate `z_i` (0-based).
    pub fn variable(n_vars: usize, i: usize) -> Self {
        MPoly::monomial(MultiIndex::unit(n_vars, i), BigRational::one())
    }

    pub fn monomial(index: MultiIndex, c: BigRational) -> Self {
        let mut p = MPoly::zero(index.len());
        p.add_term(index, c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms(n_vars: usize, terms: impl IntoIterator<Item = (MultiIndex, BigRational)>) -> Result<Self> {
        let mut p = MPoly::zero(n_vars);
        for (idx, c) in terms {
            if idx.len() != n_vars {
                return Err(Error::DimensionMismatch {
                    expected: n_vars,
                    found: idx.len(),
                });
            }
            p.add_term(idx, c);
        }
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, index: &MultiIndex) -> BigRational {
        self.terms.get(index).cloned().unwrap_or_else(BigRational::zero)
    }

    pub(crate) fn add_term(&mut self, index: MultiIndex, c: BigRational) {
        debug_assert_eq!(index.len(), self.n_vars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(index) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Largest total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).min()
    }

    /// Degree of a nonzero homogeneous polynomial; `Ok(None)` for zero.
    pub fn homogeneous_degree(&self) -> Result<Option<u32>> {
        match (self.min_degree(), self.degree()) {
            (Some(lo), Some(hi)) if lo != hi => Err(Error::NotHomogeneous { low: lo, high: hi }),
            (_, hi) => Ok(hi),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous_degree().is_ok()
    }

    /// Homogeneous components by degree.
    pub fn homogeneous_parts(&self) -> BTreeMap<u32, MPoly> {
        let mut parts: BTreeMap<u32, MPoly> = BTreeMap::new();
        for (idx, c) in &self.terms {
            parts
                .entry(idx.degree())
                .or_insert_with(|| MPoly::zero(self.n_vars))
                .terms
                .insert(idx.clone(), c.clone());
        }
        parts
    }

    pub fn scale(&self, c: &BigRational) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(self.n_vars);
        }
        MPoly {
            n_vars: self.n_vars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn checked_add(&self, other: &MPoly) -> Result<MPoly> {
        self.same_vars(other)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &MPoly) -> Result<MPoly> {
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &MPoly) -> Result<MPoly> {
        self.same_vars(other)?;
        let mut out = MPoly::zero(self.n_vars);
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                out.add_term(ka.add(kb), va * vb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> MPoly {
        let mut out = MPoly::one(self.n_vars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        out
    }

    fn same_vars(&self, other: &MPoly) -> Result<()> {
        if self.n_vars != other.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                found: other.n_vars,
            });
        }
        Ok(())
    }

    /// Value at a real point, with coefficients rounded to `f64`.
    pub fn eval_f64(&self, z: &[f64]) -> Result<f64> {
        self.check_point(z)?;
        Ok(self
            .terms
            .iter()
            .map(|(idx, c)| to_f64(c) * monomial_value(idx, z))
            .sum())
    }

    /// `Σ |a_m| |z^m|`, the natural size of the terms at `z`, used as the
    /// reference for numerical vanishing tests.
    pub fn eval_scale(&self, z: &[f64]) -> Result<f64> {
        self.check_point(z)?;
        Ok(self
            .terms
            .iter()
            .map(|(idx, c)| to_f64(c).abs() * monomial_value(idx, z).abs())
            .sum())
    }

    fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                found: z.len(),
            });
        }
        Ok(())
    }
}

fn monomial_value(idx: &MultiIndex, z: &[f64]) -> f64 {
    idx.exponents().iter().zip(z).map(|(&e, &v)| v.powi(e as i32)).product()
}

pub(crate) fn to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or_else(|| {
        // numerator or denominator beyond f64 range
        let n = c.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = c.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

impl Neg for &MPoly {
    type Output = MPoly;

    fn neg(self) -> MPoly {
        MPoly {
            n_vars: self.n_vars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }
}

impl Neg for MPoly {
    type Output = MPoly;

    fn neg(self) -> MPoly {
        -&self
    }
}

/// Panics on a variable-count mismatch; see [`MPoly::checked_add`].
impl Add for &MPoly {
    type Output = MPoly;

    fn add(self, rhs: &MPoly) -> MPoly {
        self.checked_add(rhs).expect("variable counts differ")
    }
}

/// Panics on a variable-count mismatch; see [`MPoly::checked_sub`].
impl Sub for &MPoly {
    type Output = MPoly;

    fn sub(self, rhs: &MPoly) -> MPoly {
        self.checked_sub(rhs).expect("variable counts differ")
    }
}

/// Panics on a variable-count mismatch; see [`MPoly::checked_mul`].
impl Mul for &MPoly {
    type Output = MPoly;

    fn mul(self, rhs: &MPoly) -> MPoly {
        self.checked_mul(rhs).expect("variable counts differ")
    }
}

impl Add for MPoly {
    type Output = MPoly;

    fn add(self, rhs: MPoly) -> MPoly {
        &self + &rhs
    }
}

impl Sub for MPoly {
    type Output = MPoly;

    fn sub(self, rhs: MPoly) -> MPoly {
        &self - &rhs
    }
}

impl Mul for MPoly {
    type Output = MPoly;

    fn mul(self, rhs: MPoly) -> MPoly {
        &self * &rhs
    }
}

/// Name of variable `i` among `n_vars`: `x1..xn, y1..yn` for an even
/// count, `z1..` otherwise.
pub fn variable_name(n_vars: usize, i: usize) -> String {
    if n_vars % 2 == 0 {
        let n = n_vars / 2;
        if i < n {
            format!("x{}", i + 1)
        } else {
            format!("y{}", i - n + 1)
        }
    } else {
        format!("z{}", i + 1)
    }
}

/// Terms highest degree first, then `x_1`-heavy first; the output is
/// accepted back by the polynomial parser.
impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut keys: Vec<&MultiIndex> = self.terms.keys().collect();
        keys.sort_by(|a, b| b.degree().cmp(&a.degree()).then_with(|| b.cmp(a)));
        for (pos, idx) in keys.into_iter().enumerate() {
            let c = &self.terms[idx];
            let negative = c.is_negative();
            if pos == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { "-" } else { "+" })?;
            }
            let abs = c.abs();
            let vars: Vec<String> = idx
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    let name = variable_name(self.n_vars, i);
                    if e == 1 {
                        name
                    } else {
                        format!("{name}^{e}")
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{}", vars.join(" "))?;
            } else {
                write!(f, "{abs} {}", vars.join(" "))?;
            }
        }
        Ok(())
    }
}
