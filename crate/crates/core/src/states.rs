//! Named states of the protocol: the ten Bell-type basis states, the
//! single- and double-pass source expansions, the four-photon component,
//! and the exact check of its ten-term product decomposition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{singlet_op, AlgebraError, MonomialKey, OperatorPolynomial, Sqrt2Ext};
use crate::fock::{FockState, Mode};
use crate::gba::GbaClass;

#[derive(Debug, Error, PartialEq)]
pub enum StatesError {
    #[error("paths must differ")]
    DegeneratePaths,
    #[error("pair-production probability must lie in (0, 0.1], got {0}")]
    InvalidP(f64),
    #[error("only the o(p) truncation (two retained pair sectors) is supported, got {0}")]
    UnsupportedTruncation(u32),
    #[error("decomposition is not proportional to the four-photon component")]
    NotProportional,
}

impl From<AlgebraError> for StatesError {
    fn from(_: AlgebraError) -> Self {
        StatesError::DegeneratePaths
    }
}

/// Which of the two orthogonal sectors a basis state lives in: S1 is the
/// one-photon-per-path sector, S2 the two-photons-in-one-path sector.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum StateSet {
    S1,
    S2,
}

/// The ten Bell-type basis states for two photons on two paths.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
    GammaPlus,
    GammaMinus,
    UpsilonPlus,
    UpsilonMinus,
    OmegaPlus,
    OmegaMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 10] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
        BellKind::GammaPlus,
        BellKind::GammaMinus,
        BellKind::UpsilonPlus,
        BellKind::UpsilonMinus,
        BellKind::OmegaPlus,
        BellKind::OmegaMinus,
    ];

    pub fn set(self) -> StateSet {
        match self {
            BellKind::PhiPlus | BellKind::PhiMinus | BellKind::PsiPlus | BellKind::PsiMinus => {
                StateSet::S1
            }
            _ => StateSet::S2,
        }
    }

    /// The analyzer class this state belongs to: same-polarization u/d
    /// coincidence, different-polarization u/d coincidence, or the rest.
    pub fn gba_class(self) -> GbaClass {
        match self {
            BellKind::PhiPlus | BellKind::OmegaPlus => GbaClass::Class1,
            BellKind::PhiMinus | BellKind::OmegaMinus => GbaClass::Class2,
            _ => GbaClass::Class3,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BellKind::PhiPlus => "\u{3a6}+",
            BellKind::PhiMinus => "\u{3a6}\u{2212}",
            BellKind::PsiPlus => "\u{3a8}+",
            BellKind::PsiMinus => "\u{3a8}\u{2212}",
            BellKind::GammaPlus => "\u{393}+",
            BellKind::GammaMinus => "\u{393}\u{2212}",
            BellKind::UpsilonPlus => "\u{3a5}+",
            BellKind::UpsilonMinus => "\u{3a5}\u{2212}",
            BellKind::OmegaPlus => "\u{3a9}+",
            BellKind::OmegaMinus => "\u{3a9}\u{2212}",
        }
    }
}

/// Down-conversion source parameters. `max_pairs` is the number of pair
/// sectors retained per pass; only the value 2 (drop everything of order
/// smaller than p^2) is supported, and it is the default.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SourceParams {
    pub p: f64,
    pub max_pairs: u32,
}

impl SourceParams {
    pub fn new(p: f64) -> Result<Self, StatesError> {
        let params = SourceParams { p, max_pairs: 2 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), StatesError> {
        if !(self.p > 0.0 && self.p <= 0.1) {
            return Err(StatesError::InvalidP(self.p));
        }
        if self.max_pairs != 2 {
            return Err(StatesError::UnsupportedTruncation(self.max_pairs));
        }
        Ok(())
    }
}

/// One photon-number sector of a truncated source expansion: the exact
/// operator part together with its scalar weight p^(pairs/2) per singlet
/// application (so probability = weight^2 * exact norm^2).
#[derive(Clone, Debug)]
pub struct Sector {
    pub pairs: u32,
    pub weight: f64,
    pub poly: OperatorPolynomial,
}

/// Exact polynomial of one basis state (all are norm-1 as written).
pub fn bell_poly(kind: BellKind, i: u32, j: u32) -> Result<OperatorPolynomial, StatesError> {
    if i == j {
        return Err(StatesError::DegeneratePaths);
    }
    let mono = |modes: [Mode; 2]| MonomialKey::from_modes(modes);
    let pair = |k1: MonomialKey, k2: MonomialKey, coeff: Sqrt2Ext, minus: bool| {
        let second = if minus {
            OperatorPolynomial::term(k2, -&coeff)
        } else {
            OperatorPolynomial::term(k2, coeff.clone())
        };
        OperatorPolynomial::term(k1, coeff).add(&second)
    };
    let inv_sqrt2 = Sqrt2Ext::inv_sqrt2();
    let half = Sqrt2Ext::ratio(1, 2);
    Ok(match kind {
        BellKind::PhiPlus => pair(
            mono([Mode::h(i), Mode::h(j)]),
            mono([Mode::v(i), Mode::v(j)]),
            inv_sqrt2,
            false,
        ),
        BellKind::PhiMinus => pair(
            mono([Mode::h(i), Mode::h(j)]),
            mono([Mode::v(i), Mode::v(j)]),
            inv_sqrt2,
            true,
        ),
        BellKind::PsiPlus => pair(
            mono([Mode::h(i), Mode::v(j)]),
            mono([Mode::v(i), Mode::h(j)]),
            inv_sqrt2,
            false,
        ),
        BellKind::PsiMinus => pair(
            mono([Mode::h(i), Mode::v(j)]),
            mono([Mode::v(i), Mode::h(j)]),
            inv_sqrt2,
            true,
        ),
        BellKind::GammaPlus => pair(
            mono([Mode::h(i), Mode::h(i)]),
            mono([Mode::v(j), Mode::v(j)]),
            half,
            false,
        ),
        BellKind::GammaMinus => pair(
            mono([Mode::h(i), Mode::h(i)]),
            mono([Mode::v(j), Mode::v(j)]),
            half,
            true,
        ),
        BellKind::UpsilonPlus => pair(
            mono([Mode::v(i), Mode::v(i)]),
            mono([Mode::h(j), Mode::h(j)]),
            half,
            false,
        ),
        BellKind::UpsilonMinus => pair(
            mono([Mode::v(i), Mode::v(i)]),
            mono([Mode::h(j), Mode::h(j)]),
            half,
            true,
        ),
        BellKind::OmegaPlus => pair(
            mono([Mode::h(i), Mode::v(i)]),
            mono([Mode::h(j), Mode::v(j)]),
            inv_sqrt2,
            false,
        ),
        BellKind::OmegaMinus => pair(
            mono([Mode::h(i), Mode::v(i)]),
            mono([Mode::h(j), Mode::v(j)]),
            inv_sqrt2,
            true,
        ),
    })
}

/// The normalized basis state as a numeric Fock state.
pub fn bell(kind: BellKind, i: u32, j: u32) -> Result<FockState, StatesError> {
    Ok(bell_poly(kind, i, j)?.apply_to_vacuum())
}

/// Truncated single-pass expansion on paths (i, j):
/// sectors 1, p^(1/2) a_ij, p a_ij^2/2.
pub fn spdc_single_pass(
    params: &SourceParams,
    i: u32,
    j: u32,
) -> Result<Vec<Sector>, StatesError> {
    params.validate()?;
    let a = singlet_op(i, j)?;
    let a2_half = a.mul(&a).scaled(&Sqrt2Ext::ratio(1, 2));
    Ok(vec![
        Sector {
            pairs: 0,
            weight: 1.0,
            poly: OperatorPolynomial::unit(),
        },
        Sector {
            pairs: 1,
            weight: params.p.sqrt(),
            poly: a,
        },
        Sector {
            pairs: 2,
            weight: params.p,
            poly: a2_half,
        },
    ])
}

/// Truncated double-pass expansion over paths 1..4, regrouped by total
/// pair number. Sectors beyond two pairs are never built.
pub fn spdc_double_pass(params: &SourceParams) -> Result<Vec<Sector>, StatesError> {
    params.validate()?;
    let a12 = singlet_op(1, 2)?;
    let a34 = singlet_op(3, 4)?;
    let half = Sqrt2Ext::ratio(1, 2);
    let one_pair = a12.add(&a34);
    let two_pair = a12
        .mul(&a34)
        .add(&a12.mul(&a12).scaled(&half))
        .add(&a34.mul(&a34).scaled(&half));
    Ok(vec![
        Sector {
            pairs: 0,
            weight: 1.0,
            poly: OperatorPolynomial::unit(),
        },
        Sector {
            pairs: 1,
            weight: params.p.sqrt(),
            poly: one_pair,
        },
        Sector {
            pairs: 2,
            weight: params.p,
            poly: two_pair,
        },
    ])
}

/// Normalized probabilities of the three event types
/// (vacuum, one pair, two pairs) under the truncated model.
pub fn sector_probabilities(params: &SourceParams) -> Result<[f64; 3], StatesError> {
    let sectors = spdc_double_pass(params)?;
    let mut weights = [0.0; 3];
    for s in &sectors {
        weights[s.pairs as usize] = s.weight * s.weight * s.poly.exact_norm2().to_f64();
    }
    let total: f64 = weights.iter().sum();
    Ok([weights[0] / total, weights[1] / total, weights[2] / total])
}

/// The unnormalized four-photon component:
/// (a12 a34 + a12^2/2 + a34^2/2) applied to vacuum. Exact norm^2 is 5/2.
pub fn theta_poly() -> OperatorPolynomial {
    let a12 = singlet_op(1, 2).expect("distinct paths");
    let a34 = singlet_op(3, 4).expect("distinct paths");
    let half = Sqrt2Ext::ratio(1, 2);
    a12.mul(&a34)
        .add(&a12.mul(&a12).scaled(&half))
        .add(&a34.mul(&a34).scaled(&half))
}

/// Numeric (unnormalized) four-photon component.
pub fn theta() -> FockState {
    theta_poly().apply_to_vacuum()
}

/// The ten-term product form of the four-photon component, paths (1,3)
/// tensor (2,4), with the signs as published.
pub fn decomposition_rhs_poly() -> OperatorPolynomial {
    decomposition_rhs_with_signs(&DECOMPOSITION_SIGNS)
}

/// The (1,3)x(2,4) product appearing in each decomposition term, in the
/// fixed label order used by `DECOMPOSITION_SIGNS`.
pub const DECOMPOSITION_TERMS: [(BellKind, BellKind); 10] = [
    (BellKind::PhiPlus, BellKind::PhiPlus),
    (BellKind::PhiMinus, BellKind::PhiMinus),
    (BellKind::PsiPlus, BellKind::PsiPlus),
    (BellKind::PsiMinus, BellKind::PsiMinus),
    (BellKind::GammaPlus, BellKind::UpsilonPlus),
    (BellKind::GammaMinus, BellKind::UpsilonMinus),
    (BellKind::UpsilonPlus, BellKind::GammaPlus),
    (BellKind::UpsilonMinus, BellKind::GammaMinus),
    (BellKind::OmegaPlus, BellKind::OmegaPlus),
    (BellKind::OmegaMinus, BellKind::OmegaMinus),
];

pub const DECOMPOSITION_SIGNS: [i8; 10] = [1, -1, -1, 1, 1, 1, 1, 1, -1, -1];

/// Build the decomposition right-hand side with explicit signs (used both
/// for the published identity and for sign-mutation negative controls).
pub fn decomposition_rhs_with_signs(signs: &[i8; 10]) -> OperatorPolynomial {
    let mut rhs = OperatorPolynomial::zero();
    for (idx, (kind13, kind24)) in DECOMPOSITION_TERMS.iter().enumerate() {
        let left = bell_poly(*kind13, 1, 3).expect("distinct paths");
        let right = bell_poly(*kind24, 2, 4).expect("distinct paths");
        let product = left.mul(&right);
        rhs = if signs[idx] >= 0 {
            rhs.add(&product)
        } else {
            rhs.sub(&product)
        };
    }
    rhs
}

/// Exact proportionality constant c with theta_poly() = c * RHS.
pub fn verify_decomposition() -> Result<Sqrt2Ext, StatesError> {
    theta_poly()
        .proportionality_to(&decomposition_rhs_poly())
        .ok_or(StatesError::NotProportional)
}

/// Probability that a product generalized-Bell measurement of the
/// normalized four-photon component yields each (1,3)-side label.
pub fn label_probabilities() -> BTreeMap<BellKind, f64> {
    let theta_n = theta().normalized();
    let mut out = BTreeMap::new();
    for kind13 in BellKind::ALL {
        let left = bell(kind13, 1, 3).expect("distinct paths");
        let mut prob = 0.0;
        for kind24 in BellKind::ALL {
            let right = bell(kind24, 2, 4).expect("distinct paths");
            let amp = left.tensor(&right).inner(&theta_n);
            prob += amp.norm_sqr();
        }
        out.insert(kind13, prob);
    }
    out
}
