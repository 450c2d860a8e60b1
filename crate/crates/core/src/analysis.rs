//! Security-facing computations: exact small-n hiding ensembles, trace
//! distance, Shannon quantities, the analytic information bound, an
//! explicit local-counting strategy, two-state local discrimination of
//! the Omega pair, and the source overhead factor.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::fock::{
    hermitian_eigenvalues, DensityMatrix, FockError, FockState, Mode, OccupationVector,
};
use crate::gba::{self, GbaClass, GbaError};
use crate::protocol::AggregateStats;
use crate::states::{self, BellKind, StatesError};

/// Exact ensembles are kept to at most this many pairs (dimension 10^n).
pub const MAX_EXACT_PAIRS: usize = 3;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("exact analysis supports n <= {MAX_EXACT_PAIRS}, got {0}")]
    TooManyPairs(usize),
    #[error("n must be >= 1")]
    NoPairs,
    #[error("bound undefined: no S1 pairs (m = 0)")]
    BoundUndefined,
    #[error("negative probability {0}")]
    NegativeProbability(f64),
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("overhead needs at least {min} pairs, got {got}")]
    InsufficientSample { min: u64, got: u64 },
    #[error("overhead undefined: zero S1 fraction")]
    ZeroS1Fraction,
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Gba(#[from] GbaError),
    #[error(transparent)]
    States(#[from] StatesError),
}

/// Shannon entropy in bits; 0 log 0 = 0. The distribution must be
/// normalized within 1e-9 and nonnegative.
pub fn entropy(dist: &[f64]) -> Result<f64, AnalysisError> {
    let mut total = 0.0;
    let mut h = 0.0;
    for &p in dist {
        if p < -1e-12 {
            return Err(AnalysisError::NegativeProbability(p));
        }
        total += p;
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(AnalysisError::NotNormalized(total));
    }
    Ok(h)
}

pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p]).unwrap_or(0.0)
}

/// Mutual information in bits of a joint distribution given as rows.
pub fn mutual_information(joint: &[Vec<f64>]) -> Result<f64, AnalysisError> {
    let cols = joint.first().map(|r| r.len()).unwrap_or(0);
    let mut row_marg = vec![0.0; joint.len()];
    let mut col_marg = vec![0.0; cols];
    let mut flat = Vec::with_capacity(joint.len() * cols);
    for (i, row) in joint.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p < -1e-12 {
                return Err(AnalysisError::NegativeProbability(p));
            }
            row_marg[i] += p;
            col_marg[j] += p;
            flat.push(p);
        }
    }
    let h_joint = entropy(&flat)?;
    let h_rows = entropy(&row_marg)?;
    let h_cols = entropy(&col_marg)?;
    Ok(h_rows + h_cols - h_joint)
}

/// The analytic information bound H(b1) / 2^(m-1), with m the number of
/// pairs drawn from the one-photon-per-path set.
pub fn security_bound(m: u32, prior: &[f64; 2]) -> Result<f64, AnalysisError> {
    if m == 0 {
        return Err(AnalysisError::BoundUndefined);
    }
    Ok(entropy(prior)? / 2f64.powi(m as i32 - 1))
}

/// Bound values for m = 1..=m_max (plot-ready).
pub fn bound_curve(prior: &[f64; 2], m_max: u32) -> Result<Vec<(u32, f64)>, AnalysisError> {
    (1..=m_max)
        .map(|m| security_bound(m, prior).map(|v| (m, v)))
        .collect()
}

/// One exact heralding branch of the pair ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleBranch {
    pub klass: GbaClass,
    pub probability: f64,
    /// Click-pattern-resolved posterior on paths (2, 4).
    pub posterior: FockState,
}

/// The exact click-resolved ensemble of heralded pairs: the analyzer's
/// outcome distribution of the normalized four-photon component.
pub fn pair_ensemble() -> Result<Vec<EnsembleBranch>, AnalysisError> {
    let circuit = gba::calibrate()?;
    let theta_n = states::theta().normalized();
    let mut out = Vec::new();
    for b in gba::outcome_distribution(&theta_n, (1, 3), &circuit)? {
        out.push(EnsembleBranch {
            klass: gba::classify(&b.pattern)?,
            probability: b.probability,
            posterior: b.posterior,
        });
    }
    Ok(out)
}

/// Path offset separating pair slots in multi-pair ensembles.
fn slot_offset(slot: usize) -> u32 {
    10 * slot as u32
}

/// The 10 two-photon kets of one pair slot (paths 2 and 4, shifted).
pub fn pair_slot_basis(slot: usize) -> Vec<OccupationVector> {
    let modes = [
        Mode::h(2 + slot_offset(slot)),
        Mode::v(2 + slot_offset(slot)),
        Mode::h(4 + slot_offset(slot)),
        Mode::v(4 + slot_offset(slot)),
    ];
    let mut set = BTreeSet::new();
    for a in 0..=2u8 {
        for b in 0..=2u8 {
            for c in 0..=2u8 {
                for d in 0..=2u8 {
                    if a + b + c + d == 2 {
                        set.insert(OccupationVector::from_counts([
                            (modes[0], a),
                            (modes[1], b),
                            (modes[2], c),
                            (modes[3], d),
                        ]));
                    }
                }
            }
        }
    }
    set.into_iter().collect()
}

/// The full 10^n product basis for n pair slots.
pub fn product_basis(n: usize) -> Vec<OccupationVector> {
    let mut basis = vec![OccupationVector::vacuum()];
    for slot in 0..n {
        let slot_basis = pair_slot_basis(slot);
        let mut next = Vec::with_capacity(basis.len() * slot_basis.len());
        for prefix in &basis {
            for ket in &slot_basis {
                next.push(prefix.merged(ket));
            }
        }
        basis = next;
    }
    basis
}

/// Exact hiding ensemble for secret bit `b` over `n` pairs, expressed in
/// the 10^n product basis: the i.i.d. heralding law conditioned on the
/// class-1 count parity, with click-resolved posteriors.
pub fn hiding_density_matrix(b: u8, n: usize) -> Result<DensityMatrix, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::NoPairs);
    }
    if n > MAX_EXACT_PAIRS {
        return Err(AnalysisError::TooManyPairs(n));
    }
    let b = b & 1;
    let ensemble = pair_ensemble()?;
    let branches: Vec<(f64, FockState, bool)> = ensemble
        .into_iter()
        .map(|e| (e.probability, e.posterior, e.klass == GbaClass::Class1))
        .collect();

    let mut terms: Vec<(f64, FockState)> = Vec::new();
    let mut total = 0.0;
    let mut indices = vec![0usize; n];
    'outer: loop {
        let mut prob = 1.0;
        let mut class1 = 0usize;
        let mut state = FockState::vacuum();
        for (slot, &idx) in indices.iter().enumerate() {
            let (p, post, is_c1) = &branches[idx];
            prob *= p;
            if *is_c1 {
                class1 += 1;
            }
            let shifted = post.relabel_paths(|path| path + slot_offset(slot));
            state = state.tensor(&shifted);
        }
        if (class1 % 2) as u8 == b {
            total += prob;
            terms.push((prob, state));
        }
        // odometer over branch indices
        for digit in indices.iter_mut() {
            *digit += 1;
            if *digit < branches.len() {
                continue 'outer;
            }
            *digit = 0;
        }
        break;
    }
    let weighted: Vec<(f64, FockState)> = terms
        .into_iter()
        .map(|(p, s)| (p / total, s))
        .collect();
    Ok(DensityMatrix::from_mixture(product_basis(n), &weighted)?)
}

/// Trace distance (1/2) * sum |eigenvalues(r0 - r1)|.
pub fn trace_distance(r0: &DensityMatrix, r1: &DensityMatrix) -> Result<f64, AnalysisError> {
    let diff = r0.sub(r1)?;
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum::<f64>())
}

fn trace_norm(mat: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(mat).iter().map(|e| e.abs()).sum()
}

/// Minimum error probability of the optimal joint measurement
/// distinguishing r0 and r1 with the given prior.
pub fn helstrom_error(
    prior: &[f64; 2],
    r0: &DensityMatrix,
    r1: &DensityMatrix,
) -> Result<f64, AnalysisError> {
    let diff = r1.matrix() * Complex64::new(prior[1], 0.0)
        - r0.matrix() * Complex64::new(prior[0], 0.0);
    if !r0.same_basis(r1) {
        return Err(AnalysisError::Fock(FockError::BasisMismatch));
    }
    Ok(0.5 * (1.0 - trace_norm(&diff)))
}

/// A named measurement strategy evaluated on a bit-vs-bit ensemble.
#[derive(Clone, Debug)]
pub struct StrategyResult {
    pub strategy: String,
    /// joint[b][t]: probability of secret b together with transcript t.
    pub joint: [Vec<f64>; 2],
    pub mutual_information: f64,
    /// Information bound from the optimal-joint-measurement error
    /// probability (Fano), capped at the prior entropy.
    pub bound: f64,
}

/// Both parties count photons per polarization mode on every pair slot;
/// no interference between different occupation patterns survives, so
/// the transcript law is the diagonal of the ensemble in the Fock basis.
pub fn local_count_strategy_for(
    r0: &DensityMatrix,
    r1: &DensityMatrix,
    prior: &[f64; 2],
    name: &str,
) -> Result<StrategyResult, AnalysisError> {
    if !r0.same_basis(r1) {
        return Err(AnalysisError::Fock(FockError::BasisMismatch));
    }
    let d0 = r0.diagonal();
    let d1 = r1.diagonal();
    let joint = [
        d0.iter().map(|p| p * prior[0]).collect::<Vec<f64>>(),
        d1.iter().map(|p| p * prior[1]).collect::<Vec<f64>>(),
    ];
    let mi = mutual_information(&joint)?;
    let pe = helstrom_error(prior, r0, r1)?.max(0.0);
    let prior_h = entropy(prior)?;
    let bound = (prior_h - binary_entropy(pe)).clamp(0.0, prior_h);
    Ok(StrategyResult {
        strategy: name.to_string(),
        joint,
        mutual_information: mi,
        bound,
    })
}

/// The local counting strategy on the full protocol ensembles for n pairs
/// with a uniform prior on the hidden bit.
pub fn local_count_strategy(n: usize) -> Result<StrategyResult, AnalysisError> {
    let r0 = hiding_density_matrix(0, n)?;
    let r1 = hiding_density_matrix(1, n)?;
    local_count_strategy_for(&r0, &r1, &[0.5, 0.5], &format!("local-count(n={n})"))
}

/// The Omega+/Omega- promise ensemble on one pair slot, uniform prior.
pub fn omega_ensemble() -> Result<(DensityMatrix, DensityMatrix), AnalysisError> {
    let basis = pair_slot_basis(0);
    let plus = states::bell(BellKind::OmegaPlus, 2, 4)?;
    let minus = states::bell(BellKind::OmegaMinus, 2, 4)?;
    let r_plus = DensityMatrix::from_mixture(basis.clone(), &[(1.0, plus)])?;
    let r_minus = DensityMatrix::from_mixture(basis, &[(1.0, minus)])?;
    Ok((r_plus, r_minus))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OmegaSign {
    Plus,
    Minus,
}

/// Two-round local discrimination of the orthogonal pair Omega+/Omega-.
///
/// Alice measures her local space in {(|hv> + |0>)/sqrt2,
/// (|hv> - |0>)/sqrt2} and sends the one-bit outcome; Bob measures the
/// matching basis on his side. Equal outcomes mean the plus state. On the
/// promise set this succeeds with probability 1; off the promise the
/// guess is undefined.
pub fn locc_distinguish_omega<R: Rng + ?Sized>(
    input: OmegaSign,
    rng: &mut R,
) -> Result<OmegaSign, AnalysisError> {
    let kind = match input {
        OmegaSign::Plus => BellKind::OmegaPlus,
        OmegaSign::Minus => BellKind::OmegaMinus,
    };
    let state = states::bell(kind, 2, 4)?;

    let local_basis = |path: u32, sign: f64| {
        let hv = FockState::ket(OccupationVector::from_modes([Mode::h(path), Mode::v(path)]));
        let vac = FockState::vacuum();
        hv.add(&vac.scaled(Complex64::new(sign, 0.0)))
            .scaled(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
    };
    let alice_modes: BTreeSet<Mode> = [Mode::h(2), Mode::v(2)].into_iter().collect();
    let bob_modes: BTreeSet<Mode> = [Mode::h(4), Mode::v(4)].into_iter().collect();

    // round 1: Alice measures and announces her outcome
    let residual_plus = state.project_local(&local_basis(2, 1.0), &alice_modes);
    let p_plus = residual_plus.norm2();
    let alice_plus = rng.random::<f64>() < p_plus;
    let residual = if alice_plus {
        residual_plus.normalized()
    } else {
        state
            .project_local(&local_basis(2, -1.0), &alice_modes)
            .normalized()
    };

    // round 2: Bob measures the matching basis on the collapsed state
    let bob_plus_prob = residual
        .project_local(&local_basis(4, 1.0), &bob_modes)
        .norm2();
    let bob_plus = rng.random::<f64>() < bob_plus_prob;

    Ok(if alice_plus == bob_plus {
        OmegaSign::Plus
    } else {
        OmegaSign::Minus
    })
}

/// Pairs needed per hidden bit relative to a source of pure
/// one-photon-per-path Bell pairs: the inverse S1 fraction.
pub fn overhead_factor(stats: &AggregateStats) -> Result<f64, AnalysisError> {
    const MIN_PAIRS: u64 = 10_000;
    if stats.pairs_total < MIN_PAIRS {
        return Err(AnalysisError::InsufficientSample {
            min: MIN_PAIRS,
            got: stats.pairs_total,
        });
    }
    if stats.s1_fraction <= 0.0 {
        return Err(AnalysisError::ZeroS1Fraction);
    }
    Ok(1.0 / stats.s1_fraction)
}

/// Overhead from a bare S1 fraction (no sample-size guard).
pub fn overhead_from_fraction(s1_fraction: f64) -> Result<f64, AnalysisError> {
    if s1_fraction <= 0.0 {
        return Err(AnalysisError::ZeroS1Fraction);
    }
    Ok(1.0 / s1_fraction)
}
