//! Exact symbolic algebra over creation-operator polynomials.
//!
//! Coefficients live in Q[sqrt2]; every coefficient appearing in the
//! source expansions and the ten basis-state definitions is a rational
//! combination of 1 and sqrt2, so equality here is exact and decidable.
//! This layer is the brute-force oracle the floating-point engine is
//! checked against. It only ever represents creation operators applied
//! to vacuum, so normal ordering never comes up.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::fock::{FockState, Mode, OccupationVector};

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("degenerate singlet: paths must differ")]
    DegenerateSinglet,
    #[error("division by zero ring element")]
    DivisionByZero,
}

/// An element a + b*sqrt2 of Q[sqrt2], with exact rational components.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Sqrt2Ext {
    a: BigRational,
    b: BigRational,
}

impl Sqrt2Ext {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        Sqrt2Ext { a, b }
    }

    pub fn zero() -> Self {
        Sqrt2Ext::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Sqrt2Ext::new(BigRational::one(), BigRational::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Sqrt2Ext::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    /// The rational a/b (no sqrt2 part).
    pub fn ratio(num: i64, den: i64) -> Self {
        Sqrt2Ext::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    pub fn sqrt2() -> Self {
        Sqrt2Ext::new(BigRational::zero(), BigRational::one())
    }

    /// 1/sqrt2 = (0) + (1/2)*sqrt2.
    pub fn inv_sqrt2() -> Self {
        Sqrt2Ext::new(
            BigRational::zero(),
            BigRational::new(BigInt::from(1), BigInt::from(2)),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn sqrt2_part(&self) -> &BigRational {
        &self.b
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN)
            + self.b.to_f64().unwrap_or(f64::NAN) * std::f64::consts::SQRT_2
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.to_f64(), 0.0)
    }

    pub fn inverse(&self) -> Result<Self, AlgebraError> {
        // (a + b sqrt2)^-1 = (a - b sqrt2) / (a^2 - 2 b^2)
        let two = BigRational::from_integer(BigInt::from(2));
        let denom = &self.a * &self.a - two * &self.b * &self.b;
        if denom.is_zero() {
            // a^2 = 2 b^2 has no nonzero rational solution, so this is 0
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Sqrt2Ext::new(&self.a / &denom, -&self.b / &denom))
    }
}

impl Add for &Sqrt2Ext {
    type Output = Sqrt2Ext;
    fn add(self, rhs: &Sqrt2Ext) -> Sqrt2Ext {
        Sqrt2Ext::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl Sub for &Sqrt2Ext {
    type Output = Sqrt2Ext;
    fn sub(self, rhs: &Sqrt2Ext) -> Sqrt2Ext {
        Sqrt2Ext::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl Mul for &Sqrt2Ext {
    type Output = Sqrt2Ext;
    fn mul(self, rhs: &Sqrt2Ext) -> Sqrt2Ext {
        let two = BigRational::from_integer(BigInt::from(2));
        Sqrt2Ext::new(
            &self.a * &rhs.a + two * &self.b * &rhs.b,
            &self.a * &rhs.b + &self.b * &rhs.a,
        )
    }
}

impl Neg for &Sqrt2Ext {
    type Output = Sqrt2Ext;
    fn neg(self) -> Sqrt2Ext {
        Sqrt2Ext::new(-&self.a, -&self.b)
    }
}

impl Div for &Sqrt2Ext {
    type Output = Sqrt2Ext;
    fn div(self, rhs: &Sqrt2Ext) -> Sqrt2Ext {
        self * &rhs.inverse().expect("division by zero ring element")
    }
}

impl fmt::Display for Sqrt2Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if self.a.is_zero() {
            // print b*sqrt2 as (2b)/sqrt2, the conventional 1/sqrt2 style
            let two_b = &self.b * BigRational::from_integer(BigInt::from(2));
            let (num, den) = (two_b.numer().clone(), two_b.denom().clone());
            let sign = if num.is_negative() { "-" } else { "" };
            let num_abs = num.abs();
            if den.is_one() {
                if num_abs.is_one() {
                    return write!(f, "{sign}1/\u{221a}2");
                }
                return write!(f, "{sign}{num_abs}/\u{221a}2");
            }
            if num_abs.is_one() {
                return write!(f, "{sign}1/({den}\u{221a}2)");
            }
            return write!(f, "{sign}{num_abs}/({den}\u{221a}2)");
        }
        write!(f, "({} + {}\u{221a}2)", self.a, self.b)
    }
}

/// A product of creation operators, stored as a sorted multiset of modes.
/// Creation operators commute, so the sorted form is canonical.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct MonomialKey(BTreeMap<Mode, u32>);

impl MonomialKey {
    pub fn unit() -> Self {
        MonomialKey::default()
    }

    pub fn from_modes<I: IntoIterator<Item = Mode>>(modes: I) -> Self {
        let mut map = BTreeMap::new();
        for m in modes {
            *map.entry(m).or_insert(0) += 1;
        }
        MonomialKey(map)
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn powers(&self) -> impl Iterator<Item = (Mode, u32)> + '_ {
        self.0.iter().map(|(&m, &p)| (m, p))
    }

    pub fn times(&self, other: &MonomialKey) -> MonomialKey {
        let mut map = self.0.clone();
        for (&m, &p) in &other.0 {
            *map.entry(m).or_insert(0) += p;
        }
        MonomialKey(map)
    }

    fn factorial_product(&self) -> BigInt {
        let mut acc = BigInt::one();
        for &p in self.0.values() {
            for k in 1..=p {
                acc *= BigInt::from(k);
            }
        }
        acc
    }
}

impl fmt::Display for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (&m, &p) in &self.0 {
            for _ in 0..p {
                write!(f, "{m}")?;
            }
        }
        Ok(())
    }
}

/// Exact sum of creation-operator monomials with Q[sqrt2] coefficients.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct OperatorPolynomial {
    terms: BTreeMap<MonomialKey, Sqrt2Ext>,
}

impl OperatorPolynomial {
    pub fn zero() -> Self {
        OperatorPolynomial::default()
    }

    /// The multiplicative unit (the empty product with coefficient 1).
    pub fn unit() -> Self {
        OperatorPolynomial::term(MonomialKey::unit(), Sqrt2Ext::one())
    }

    pub fn term(key: MonomialKey, coeff: Sqrt2Ext) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(key, coeff);
        }
        OperatorPolynomial { terms }
    }

    /// A single creation operator.
    pub fn creation(mode: Mode) -> Self {
        OperatorPolynomial::term(MonomialKey::from_modes([mode]), Sqrt2Ext::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialKey, &Sqrt2Ext)> + '_ {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &MonomialKey) -> Sqrt2Ext {
        self.terms.get(key).cloned().unwrap_or_else(Sqrt2Ext::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (key, coeff) in &other.terms {
            let entry = terms.entry(key.clone()).or_insert_with(Sqrt2Ext::zero);
            *entry = &*entry + coeff;
        }
        terms.retain(|_, c| !c.is_zero());
        OperatorPolynomial { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        OperatorPolynomial {
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect(),
        }
    }

    pub fn scaled(&self, c: &Sqrt2Ext) -> Self {
        if c.is_zero() {
            return OperatorPolynomial::zero();
        }
        OperatorPolynomial {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<MonomialKey, Sqrt2Ext> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let key = ka.times(kb);
                let entry = terms.entry(key).or_insert_with(Sqrt2Ext::zero);
                *entry = &*entry + &(ca * cb);
            }
        }
        terms.retain(|_, c| !c.is_zero());
        OperatorPolynomial { terms }
    }

    /// Evaluate on the vacuum: each monomial becomes a Fock ket with
    /// amplitude coeff * prod sqrt(count!). Floating point enters only here.
    pub fn apply_to_vacuum(&self) -> FockState {
        FockState::from_terms(self.terms.iter().map(|(key, coeff)| {
            let occ = OccupationVector::from_counts(
                key.powers().map(|(m, p)| {
                    assert!(p <= 8, "monomial power exceeds the occupation cap");
                    (m, p as u8)
                }),
            );
            let fact = key
                .factorial_product()
                .to_f64()
                .expect("factorial fits in f64");
            (occ, coeff.to_complex() * fact.sqrt())
        }))
    }

    /// Exact squared norm of `self |vac>`: sum over monomials of
    /// coeff^2 * prod count!, since distinct monomials give orthogonal kets.
    pub fn exact_norm2(&self) -> Sqrt2Ext {
        let mut acc = Sqrt2Ext::zero();
        for (key, coeff) in &self.terms {
            let fact = key.factorial_product();
            let fact = Sqrt2Ext::new(BigRational::from_integer(fact), BigRational::zero());
            acc = &acc + &(&(coeff * coeff) * &fact);
        }
        acc
    }

    /// The exact scalar c with self = c * other, if one exists.
    pub fn proportionality_to(&self, other: &Self) -> Option<Sqrt2Ext> {
        if self.is_zero() && other.is_zero() {
            return Some(Sqrt2Ext::one());
        }
        if self.terms.len() != other.terms.len() {
            return None;
        }
        let mut ratio: Option<Sqrt2Ext> = None;
        for (key, coeff) in &self.terms {
            let other_coeff = other.terms.get(key)?;
            let r = coeff / other_coeff;
            match &ratio {
                None => ratio = Some(r),
                Some(prev) if *prev == r => {}
                Some(_) => return None,
            }
        }
        ratio
    }

    /// Pretty form in ladder-operator notation, e.g. `1/2*h1v2h3v4 - ...`.
    pub fn pretty(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (key, coeff)) in self.terms.iter().enumerate() {
            let text = format!("{coeff}");
            let (sign, body) = match text.strip_prefix('-') {
                Some(rest) => ("\u{2212}", rest.to_string()),
                None => ("+", text),
            };
            if i == 0 {
                if sign == "\u{2212}" {
                    out.push_str("\u{2212}");
                }
            } else {
                out.push_str(&format!(" {sign} "));
            }
            out.push_str(&format!("{body}\u{b7}{key}"));
        }
        out
    }
}

/// The singlet creation operator a_ij = (1/sqrt2)(h_i v_j - v_i h_j).
pub fn singlet_op(i: u32, j: u32) -> Result<OperatorPolynomial, AlgebraError> {
    if i == j {
        return Err(AlgebraError::DegenerateSinglet);
    }
    let hv = MonomialKey::from_modes([Mode::h(i), Mode::v(j)]);
    let vh = MonomialKey::from_modes([Mode::v(i), Mode::h(j)]);
    let c = Sqrt2Ext::inv_sqrt2();
    Ok(OperatorPolynomial::term(hv, c.clone())
        .add(&OperatorPolynomial::term(vh, -&c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn inv_sqrt2_squares_to_half() {
        let r = Sqrt2Ext::inv_sqrt2();
        assert_eq!(&r * &r, Sqrt2Ext::ratio(1, 2));
        assert_abs_diff_eq!(r.to_f64(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn singlet_has_expected_coefficients() {
        let a = singlet_op(1, 2).unwrap();
        let hv = MonomialKey::from_modes([Mode::h(1), Mode::v(2)]);
        let vh = MonomialKey::from_modes([Mode::v(1), Mode::h(2)]);
        assert_eq!(a.coeff(&hv), Sqrt2Ext::inv_sqrt2());
        assert_eq!(a.coeff(&vh), -&Sqrt2Ext::inv_sqrt2());
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn singlet_is_antisymmetric() {
        let a = singlet_op(1, 2).unwrap();
        let b = singlet_op(2, 1).unwrap();
        assert!(a.add(&b).is_zero());
    }

    #[test]
    fn degenerate_singlet_is_an_error() {
        assert_eq!(singlet_op(3, 3), Err(AlgebraError::DegenerateSinglet));
    }

    #[test]
    fn singlet_state_is_normalized_exactly() {
        let a = singlet_op(1, 2).unwrap();
        assert_eq!(a.exact_norm2(), Sqrt2Ext::one());
        assert_abs_diff_eq!(a.apply_to_vacuum().norm2(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn product_of_disjoint_singlets_has_quarter_coefficients() {
        // (1/2)(h1v2 - v1h2)(h3v4 - v3h4): four terms, each +-1/2
        let p = singlet_op(1, 2).unwrap().mul(&singlet_op(3, 4).unwrap());
        assert_eq!(p.len(), 4);
        for (_, c) in p.terms() {
            let half = Sqrt2Ext::ratio(1, 2);
            assert!(*c == half || *c == -&half);
        }
        let key = MonomialKey::from_modes([Mode::h(1), Mode::v(2), Mode::h(3), Mode::v(4)]);
        assert_eq!(p.coeff(&key), Sqrt2Ext::ratio(1, 2));
    }

    #[test]
    fn unit_is_multiplicative_identity() {
        let p = singlet_op(1, 2).unwrap();
        assert_eq!(p.mul(&OperatorPolynomial::unit()), p);
    }

    #[test]
    fn apply_unit_to_vacuum_is_vacuum() {
        assert_eq!(OperatorPolynomial::unit().apply_to_vacuum(), FockState::vacuum());
        assert!(OperatorPolynomial::zero().apply_to_vacuum().is_zero());
    }

    #[test]
    fn double_occupancy_gets_factorial_weight() {
        // h1^2 |vac> has norm^2 = 2
        let p = OperatorPolynomial::creation(Mode::h(1)).mul(&OperatorPolynomial::creation(Mode::h(1)));
        assert_eq!(p.exact_norm2(), Sqrt2Ext::from_int(2));
        assert_abs_diff_eq!(p.apply_to_vacuum().norm2(), 2.0, epsilon = 1e-14);
    }

    fn arb_ring_element() -> impl Strategy<Value = Sqrt2Ext> {
        (-20i64..20, 1i64..12, -20i64..20, 1i64..12).prop_map(|(an, ad, bn, bd)| {
            Sqrt2Ext::new(
                BigRational::new(BigInt::from(an), BigInt::from(ad)),
                BigRational::new(BigInt::from(bn), BigInt::from(bd)),
            )
        })
    }

    fn arb_poly() -> impl Strategy<Value = OperatorPolynomial> {
        proptest::collection::vec(
            ((1u32..4, prop_oneof![Just(crate::fock::Polarization::H), Just(crate::fock::Polarization::V)]), arb_ring_element()),
            0..4,
        )
        .prop_map(|terms| {
            let mut p = OperatorPolynomial::zero();
            for ((path, pol), coeff) in terms {
                let key = MonomialKey::from_modes([Mode::new(path, pol)]);
                p = p.add(&OperatorPolynomial::term(key, coeff));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn ring_axioms_hold_exactly(x in arb_ring_element(), y in arb_ring_element(), z in arb_ring_element()) {
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            prop_assert_eq!(&x * &y, &y * &x);
        }

        #[test]
        fn nonzero_elements_invert_exactly(x in arb_ring_element()) {
            if !x.is_zero() {
                prop_assert_eq!(&x * &x.inverse().unwrap(), Sqrt2Ext::one());
            }
        }

        #[test]
        fn polynomial_multiplication_commutes(p in arb_poly(), q in arb_poly()) {
            prop_assert_eq!(p.mul(&q), q.mul(&p));
        }

        #[test]
        fn float_norm_tracks_exact_norm(p in arb_poly()) {
            let exact = p.exact_norm2().to_f64();
            let float = p.apply_to_vacuum().norm2();
            prop_assert!((exact - float).abs() <= 1e-12 * exact.max(1.0));
        }
    }
}
