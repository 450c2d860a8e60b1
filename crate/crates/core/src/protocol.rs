//! End-to-end hiding protocol: heralded pair generation at the hider's
//! analyzer, parity encoding over the class-1 count, distribution of the
//! path-2/path-4 photons to Alice and Bob, and cooperative decoding.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gba::{self, ClickPattern, GbaCircuit, GbaClass, GbaError};
use crate::states::{self, SourceParams, StatesError};
use crate::fock::FockState;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    States(#[from] StatesError),
    #[error(transparent)]
    Gba(#[from] GbaError),
    #[error("quantum channel required: both shares must be present and refer to the same pairs")]
    QuantumChannelRequired,
    #[error("trials must be >= 1")]
    NoTrials,
    #[error("n must be >= 1")]
    EmptyInstance,
}

/// One heralded pair as recorded by the hider.
#[derive(Clone, Debug)]
pub struct PairRecord {
    pub klass: GbaClass,
    pub click: ClickPattern,
    /// Posterior joint state of the photons left in paths 2 and 4.
    pub pair_state: FockState,
    /// Source pulses consumed to obtain this herald (including this one).
    pub pulses_consumed: u64,
}

/// Result of firing a single source pulse through the hider's analyzer.
#[derive(Clone, Debug)]
pub enum PulseOutcome {
    Heralded(PairRecord),
    NoHerald,
}

/// A heralding branch of the four-photon component, precomputed once.
#[derive(Clone, Debug)]
struct HeraldBranch {
    pattern: ClickPattern,
    klass: GbaClass,
    /// Probability conditioned on a four-photon event.
    probability: f64,
    posterior: FockState,
    /// Weight of the posterior in the one-photon-per-path sector.
    s1_weight: f64,
}

/// Pulse-by-pulse heralded pair source: samples the truncated event-type
/// law and routes four-photon events through the calibrated analyzer.
#[derive(Clone, Debug)]
pub struct PairSource {
    params: SourceParams,
    circuit: GbaCircuit,
    sector_probs: [f64; 3],
    branches: Vec<HeraldBranch>,
}

impl PairSource {
    pub fn new(params: SourceParams, circuit: GbaCircuit) -> Result<Self, ProtocolError> {
        params.validate()?;
        let sector_probs = states::sector_probabilities(&params)?;
        let theta_n = states::theta().normalized();
        let mut branches = Vec::new();
        for b in gba::outcome_distribution(&theta_n, (1, 3), &circuit)? {
            let klass = gba::classify(&b.pattern)?;
            let s1_weight = b.posterior.sector_weight(|occ| {
                occ.photons_in_path(2) == 1 && occ.photons_in_path(4) == 1
            });
            branches.push(HeraldBranch {
                pattern: b.pattern,
                klass,
                probability: b.probability,
                posterior: b.posterior,
                s1_weight,
            });
        }
        Ok(PairSource {
            params,
            circuit,
            sector_probs,
            branches,
        })
    }

    pub fn params(&self) -> &SourceParams {
        &self.params
    }

    pub fn circuit(&self) -> &GbaCircuit {
        &self.circuit
    }

    /// Fire one pulse. Vacuum and single-pair events put fewer than two
    /// photons into the analyzer and never herald; a four-photon event
    /// heralds with certainty and is classified by its click pattern.
    pub fn pulse<R: Rng + ?Sized>(&self, rng: &mut R) -> PulseOutcome {
        let draw = rng.random::<f64>();
        if draw >= self.sector_probs[2] {
            return PulseOutcome::NoHerald;
        }
        PulseOutcome::Heralded(self.sample_heralded(rng, 1))
    }

    /// Fire pulses until one heralds; the record carries the pulse count.
    pub fn next_heralded<R: Rng + ?Sized>(&self, rng: &mut R) -> PairRecord {
        let mut pulses = 0u64;
        loop {
            pulses += 1;
            if rng.random::<f64>() < self.sector_probs[2] {
                return self.sample_heralded(rng, pulses);
            }
        }
    }

    fn sample_heralded<R: Rng + ?Sized>(&self, rng: &mut R, pulses: u64) -> PairRecord {
        let mut draw = rng.random::<f64>();
        let mut chosen = self.branches.len() - 1;
        for (idx, b) in self.branches.iter().enumerate() {
            if draw < b.probability {
                chosen = idx;
                break;
            }
            draw -= b.probability;
        }
        let b = &self.branches[chosen];
        PairRecord {
            klass: b.klass,
            click: b.pattern.clone(),
            pair_state: b.posterior.clone(),
            pulses_consumed: pulses,
        }
    }

    /// Mean weight of the heralded posterior in the one-photon-per-path
    /// sector, by exact enumeration (the asymptotic S1 fraction).
    pub fn exact_s1_fraction(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.probability * b.s1_weight)
            .sum()
    }

    fn s1_weight_of(&self, click: &ClickPattern) -> f64 {
        self.branches
            .iter()
            .find(|b| &b.pattern == click)
            .map(|b| b.s1_weight)
            .unwrap_or(0.0)
    }
}

/// The hider's encoded record: the secret bit and its n heralded pairs,
/// with the class-1 count parity equal to the secret.
#[derive(Clone, Debug)]
pub struct HidingInstance {
    pub secret: u8,
    pub pairs: Vec<PairRecord>,
}

impl HidingInstance {
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn class1_count(&self) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.klass == GbaClass::Class1)
            .count()
    }

    /// Re-derive the encoded bit from the stored classes.
    pub fn parity(&self) -> u8 {
        (self.class1_count() % 2) as u8
    }
}

/// Bookkeeping from one encode call (rejection sampling over n-tuples).
#[derive(Clone, Debug, Default)]
pub struct EncodeStats {
    pub pairs_drawn: u64,
    pub pairs_rejected: u64,
    pub pulses_total: u64,
    pub class_histogram: [u64; 3],
}

/// Draw i.i.d. heralded n-tuples and keep the first whose class-1 parity
/// equals the secret; rejected tuples are discarded whole, so the accepted
/// distribution is the i.i.d. law conditioned on parity.
pub fn encode<R: Rng + ?Sized>(
    secret: u8,
    n: usize,
    source: &PairSource,
    rng: &mut R,
) -> Result<(HidingInstance, EncodeStats), ProtocolError> {
    if n == 0 {
        return Err(ProtocolError::EmptyInstance);
    }
    let secret = secret & 1;
    let mut stats = EncodeStats::default();
    loop {
        let mut pairs = Vec::with_capacity(n);
        for _ in 0..n {
            let record = source.next_heralded(rng);
            stats.pulses_total += record.pulses_consumed;
            stats.pairs_drawn += 1;
            pairs.push(record);
        }
        let instance = HidingInstance { secret, pairs };
        if instance.parity() == secret {
            for p in &instance.pairs {
                stats.class_histogram[p.klass.index()] += 1;
            }
            return Ok((instance, stats));
        }
        stats.pairs_rejected += n as u64;
        // rejected pairs still count toward the drawn total
    }
}

/// One party's half of a distributed instance. The shares reference the
/// same underlying joint states; this is the in-process stand-in for
/// shared entanglement.
#[derive(Clone, Debug)]
pub struct Share {
    /// Paths this party holds (2 for Alice, 4 for Bob).
    pub path: u32,
    joint: Vec<Arc<FockState>>,
    classes: Vec<GbaClass>,
}

impl Share {
    pub fn n(&self) -> usize {
        self.joint.len()
    }

    /// The local reduced density matrix of pair `k`.
    pub fn reduced(&self, k: usize) -> crate::fock::DensityMatrix {
        let keep = [
            crate::fock::Mode::h(self.path),
            crate::fock::Mode::v(self.path),
        ]
        .into_iter()
        .collect();
        self.joint[k].reduced_density(&keep)
    }

    /// Local photon count of pair `k`, ket by ket, paired with Born weights.
    pub fn local_photon_counts(&self, k: usize) -> Vec<(u32, f64)> {
        self.joint[k]
            .terms()
            .map(|(occ, amp)| (occ.photons_in_path(self.path), amp.norm_sqr()))
            .collect()
    }
}

/// Split an instance by mode ownership without disturbing the joint states.
pub fn distribute(instance: &HidingInstance) -> (Share, Share) {
    let joint: Vec<Arc<FockState>> = instance
        .pairs
        .iter()
        .map(|p| Arc::new(p.pair_state.clone()))
        .collect();
    let classes: Vec<GbaClass> = instance.pairs.iter().map(|p| p.klass).collect();
    let alice = Share {
        path: 2,
        joint: joint.clone(),
        classes: classes.clone(),
    };
    let bob = Share {
        path: 4,
        joint,
        classes,
    };
    (alice, bob)
}

/// Cooperative decoding over an opened quantum channel: measure every
/// joint pair with the same analyzer on paths (2, 4) and return the
/// class-1 count parity.
pub fn decode<R: Rng + ?Sized>(
    alice: &Share,
    bob: &Share,
    circuit: &GbaCircuit,
    rng: &mut R,
) -> Result<u8, ProtocolError> {
    if alice.n() != bob.n() || alice.n() == 0 {
        return Err(ProtocolError::QuantumChannelRequired);
    }
    for (a, b) in alice.joint.iter().zip(&bob.joint) {
        if !Arc::ptr_eq(a, b) {
            return Err(ProtocolError::QuantumChannelRequired);
        }
    }
    let mut class1 = 0usize;
    for pair in &alice.joint {
        let (outcome, _) = gba::measure(pair, (2, 4), circuit, rng)?;
        if outcome.klass == Some(GbaClass::Class1) {
            class1 += 1;
        }
    }
    Ok((class1 % 2) as u8)
}

/// Classes observed by the decoder, for class-stability checks.
pub fn decode_classes<R: Rng + ?Sized>(
    alice: &Share,
    bob: &Share,
    circuit: &GbaCircuit,
    rng: &mut R,
) -> Result<Vec<GbaClass>, ProtocolError> {
    if alice.n() != bob.n() || alice.n() == 0 {
        return Err(ProtocolError::QuantumChannelRequired);
    }
    let mut out = Vec::with_capacity(alice.n());
    for pair in &alice.joint {
        let (outcome, _) = gba::measure(pair, (2, 4), circuit, rng)?;
        out.push(outcome.klass.ok_or(ProtocolError::QuantumChannelRequired)?);
    }
    Ok(out)
}

/// Hider-recorded classes of a share (used only for verification).
pub fn recorded_classes(share: &Share) -> &[GbaClass] {
    &share.classes
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n: usize,
    pub secret: u8,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Statistics of one encode/distribute/decode session.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionStats {
    pub trial: u64,
    pub n: usize,
    pub secret: u8,
    pub decoded_bit: u8,
    pub pulses_total: u64,
    pub pairs_drawn: u64,
    pub pairs_rejected: u64,
    pub class_histogram: [u64; 3],
    pub s1_fraction_estimate: f64,
}

/// Order-independent aggregate over sessions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregateStats {
    pub trials: u64,
    pub success_rate: f64,
    pub class_hist: [u64; 3],
    pub pairs_total: u64,
    pub s1_fraction: f64,
    pub pulses_mean: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionReport {
    pub config: SessionConfig,
    pub stats: AggregateStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<SessionStats>>,
}

/// SplitMix64 step, used to derive independent per-trial seeds from the
/// root seed by a fixed counter scheme.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn trial_rng(root_seed: u64, trial: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(root_seed ^ splitmix64(trial)))
}

/// Run independent seeded sessions and aggregate.
pub fn run_sessions(
    config: &SessionConfig,
    keep_per_trial: bool,
) -> Result<SessionReport, ProtocolError> {
    if config.trials == 0 {
        return Err(ProtocolError::NoTrials);
    }
    let params = SourceParams::new(config.p)?;
    let circuit = gba::calibrate()?;
    let source = PairSource::new(params, circuit)?;

    let mut per_trial = Vec::with_capacity(config.trials as usize);
    let mut successes = 0u64;
    let mut class_hist = [0u64; 3];
    let mut pulses_total = 0u64;
    let mut pairs_total = 0u64;
    let mut s1_weight_total = 0.0;
    for trial in 0..config.trials {
        let mut rng = trial_rng(config.seed, trial);
        let (instance, stats) = encode(config.secret, config.n, &source, &mut rng)?;
        let (alice, bob) = distribute(&instance);
        let decoded = decode(&alice, &bob, &circuit, &mut rng)?;
        if decoded == config.secret & 1 {
            successes += 1;
        }
        let s1_sum: f64 = instance
            .pairs
            .iter()
            .map(|p| source.s1_weight_of(&p.click))
            .sum();
        let session = SessionStats {
            trial,
            n: config.n,
            secret: config.secret & 1,
            decoded_bit: decoded,
            pulses_total: stats.pulses_total,
            pairs_drawn: stats.pairs_drawn,
            pairs_rejected: stats.pairs_rejected,
            class_histogram: stats.class_histogram,
            s1_fraction_estimate: s1_sum / config.n as f64,
        };
        for (acc, c) in class_hist.iter_mut().zip(stats.class_histogram) {
            *acc += c;
        }
        pulses_total += stats.pulses_total;
        pairs_total += config.n as u64;
        s1_weight_total += s1_sum;
        per_trial.push(session);
    }
    let stats = AggregateStats {
        trials: config.trials,
        success_rate: successes as f64 / config.trials as f64,
        class_hist,
        pairs_total,
        s1_fraction: s1_weight_total / pairs_total as f64,
        pulses_mean: pulses_total as f64 / pairs_total as f64,
    };
    Ok(SessionReport {
        config: *config,
        stats,
        per_trial: if keep_per_trial { Some(per_trial) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn test_source(p: f64) -> PairSource {
        let params = SourceParams::new(p).unwrap();
        PairSource::new(params, gba::calibrate().unwrap()).unwrap()
    }

    #[test]
    fn heralded_class_frequencies() {
        let source = test_source(0.01);
        let mut rng = trial_rng(42, 0);
        let mut hist = [0u64; 3];
        let trials = 100_000;
        for _ in 0..trials {
            let record = source.next_heralded(&mut rng);
            hist[record.klass.index()] += 1;
        }
        let f = |k: usize| hist[k] as f64 / trials as f64;
        assert_abs_diff_eq!(f(0), 0.2, epsilon = 0.01);
        assert_abs_diff_eq!(f(1), 0.2, epsilon = 0.01);
        assert_abs_diff_eq!(f(2), 0.6, epsilon = 0.01);
    }

    #[test]
    fn mean_pulses_per_herald_matches_sector_law() {
        let p = 0.01;
        let source = test_source(p);
        let mut rng = trial_rng(7, 3);
        let heralds = 10_000;
        let mut pulses = 0u64;
        for _ in 0..heralds {
            pulses += source.next_heralded(&mut rng).pulses_consumed;
        }
        let p4 = 2.5 * p * p / (1.0 + 2.0 * p + 2.5 * p * p);
        let expected = 1.0 / p4;
        let mean = pulses as f64 / heralds as f64;
        assert!(
            (mean - expected).abs() / expected < 0.05,
            "mean {mean}, expected {expected}"
        );
    }

    #[test]
    fn exact_s1_fraction_is_two_fifths() {
        let source = test_source(0.01);
        assert_abs_diff_eq!(source.exact_s1_fraction(), 0.4, epsilon = 1e-10);
    }

    #[test]
    fn encode_n1_b1_forces_class1() {
        let source = test_source(0.05);
        let mut rng = trial_rng(1, 0);
        for _ in 0..50 {
            let (instance, _) = encode(1, 1, &source, &mut rng).unwrap();
            assert_eq!(instance.pairs[0].klass, GbaClass::Class1);
            assert_eq!(instance.parity(), 1);
        }
    }

    #[test]
    fn encode_n1_b0_conditional_class_law() {
        // conditioned on not class 1: class 2 w.p. 1/4, class 3 w.p. 3/4
        let source = test_source(0.05);
        let mut rng = trial_rng(2, 0);
        let trials = 20_000;
        let mut hist = [0u64; 3];
        for _ in 0..trials {
            let (instance, _) = encode(0, 1, &source, &mut rng).unwrap();
            hist[instance.pairs[0].klass.index()] += 1;
        }
        assert_eq!(hist[0], 0);
        assert_abs_diff_eq!(hist[1] as f64 / trials as f64, 0.25, epsilon = 0.02);
        assert_abs_diff_eq!(hist[2] as f64 / trials as f64, 0.75, epsilon = 0.02);
    }

    #[test]
    fn encode_n2_b1_has_exactly_one_class1_uniformly_placed() {
        let source = test_source(0.05);
        let mut rng = trial_rng(3, 0);
        let trials = 10_000;
        let mut first_position = 0u64;
        for _ in 0..trials {
            let (instance, _) = encode(1, 2, &source, &mut rng).unwrap();
            // with classes i.i.d. (1/5,1/5,3/5), an odd class-1 count over
            // two pairs means exactly one
            assert_eq!(instance.class1_count(), 1);
            if instance.pairs[0].klass == GbaClass::Class1 {
                first_position += 1;
            }
        }
        assert_abs_diff_eq!(first_position as f64 / trials as f64, 0.5, epsilon = 0.02);
    }

    #[test]
    fn distribute_keeps_joint_bookkeeping() {
        let source = test_source(0.05);
        let mut rng = trial_rng(4, 0);
        let (instance, _) = encode(1, 3, &source, &mut rng).unwrap();
        let (alice, bob) = distribute(&instance);
        assert_eq!(alice.n(), 3);
        for k in 0..3 {
            // Alice-count + Bob-count = 2 for every ket
            for (occ, _) in instance.pairs[k].pair_state.terms() {
                assert_eq!(occ.photons_in_path(2) + occ.photons_in_path(4), 2);
            }
            let rho = alice.reduced(k);
            rho.validate().unwrap();
            let _ = bob.reduced(k);
        }
    }

    #[test]
    fn class1_reduced_state_is_maximally_mixed_on_its_support() {
        let source = test_source(0.05);
        let mut rng = trial_rng(9, 0);
        let (instance, _) = encode(1, 1, &source, &mut rng).unwrap();
        let (alice, _) = distribute(&instance);
        let rho = alice.reduced(0);
        // posterior is (Phi24 +- Omega24)/sqrt2: Alice sees each of the four
        // local kets (h, v, hv, vacuum) with weight 1/4
        assert_eq!(rho.dim(), 4);
        for d in rho.diagonal() {
            assert_abs_diff_eq!(d, 0.25, epsilon = 1e-10);
        }
    }

    #[test]
    fn decode_requires_the_quantum_channel() {
        let source = test_source(0.05);
        let mut rng = trial_rng(5, 0);
        let (instance, _) = encode(0, 2, &source, &mut rng).unwrap();
        let (alice, _) = distribute(&instance);
        let (_, other_bob) = distribute(&instance); // distinct Arc set
        assert!(decode(&alice, &other_bob, source.circuit(), &mut rng).is_err());
    }

    #[test]
    fn decode_recovers_the_secret() {
        let source = test_source(0.05);
        for secret in [0u8, 1] {
            for n in [1usize, 2, 8] {
                let mut rng = trial_rng(100 + secret as u64, n as u64);
                for _ in 0..20 {
                    let (instance, _) = encode(secret, n, &source, &mut rng).unwrap();
                    let (alice, bob) = distribute(&instance);
                    let decoded = decode(&alice, &bob, source.circuit(), &mut rng).unwrap();
                    assert_eq!(decoded, secret);
                }
            }
        }
    }

    #[test]
    fn decoder_classes_match_hider_records() {
        let source = test_source(0.05);
        let mut rng = trial_rng(6, 0);
        let (instance, _) = encode(1, 5, &source, &mut rng).unwrap();
        let (alice, bob) = distribute(&instance);
        let observed = decode_classes(&alice, &bob, source.circuit(), &mut rng).unwrap();
        assert_eq!(observed, recorded_classes(&alice));
    }

    #[test]
    fn sessions_are_seed_stable() {
        let config = SessionConfig {
            n: 4,
            secret: 1,
            p: 0.05,
            trials: 5,
            seed: 99,
        };
        let a = run_sessions(&config, true).unwrap();
        let b = run_sessions(&config, true).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_abs_diff_eq!(a.stats.success_rate, 1.0, epsilon = 0.0);
    }
}
