//! The generalized Bell analyzer: a linear-optics circuit (beam combiner
//! plus half-wave plates) feeding four polarization-resolved
//! photon-number detectors, classifying two-photon inputs into three
//! classes by their coincidence pattern.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{FockError, FockState, Mode, ModeMap, OccupationVector, Polarization};
use crate::states::BellKind;

/// Reserved path labels for the analyzer output arms.
pub const ARM_U_PATH: u32 = 1001;
pub const ARM_D_PATH: u32 = 1002;

#[derive(Debug, Error, PartialEq)]
pub enum GbaError {
    #[error("analyzer paths must differ")]
    DegeneratePaths,
    #[error("circuit mode map is not unitary")]
    NotUnitary,
    #[error("no configuration reproduces the classification table")]
    NoValidConfiguration,
    #[error("not a heralded pair event: {0} photons detected")]
    NotAPairEvent(u32),
    #[error("cannot measure an empty state")]
    EmptyState,
    #[error(transparent)]
    Fock(#[from] FockError),
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Arm {
    U,
    D,
}

impl Arm {
    pub fn path(self) -> u32 {
        match self {
            Arm::U => ARM_U_PATH,
            Arm::D => ARM_D_PATH,
        }
    }

    pub fn from_path(path: u32) -> Option<Arm> {
        match path {
            ARM_U_PATH => Some(Arm::U),
            ARM_D_PATH => Some(Arm::D),
            _ => None,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arm::U => write!(f, "u"),
            Arm::D => write!(f, "d"),
        }
    }
}

pub fn arm_mode(arm: Arm, pol: Polarization) -> Mode {
    Mode::new(arm.path(), pol)
}

/// One of the four polarization-resolved detectors.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct DetectorId {
    pub arm: Arm,
    pub pol: Polarization,
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pol = match self.pol {
            Polarization::H => "H",
            Polarization::V => "V",
        };
        write!(f, "D_{}^{}", pol, self.arm)
    }
}

/// Detected photon counts per detector (ideal number-resolving detectors).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct ClickPattern(BTreeMap<DetectorId, u8>);

impl ClickPattern {
    pub fn from_counts<I: IntoIterator<Item = (DetectorId, u8)>>(counts: I) -> Self {
        ClickPattern(counts.into_iter().filter(|&(_, c)| c > 0).collect())
    }

    /// Read the pattern off an arm-mode occupation vector.
    pub fn from_arm_occupation(occ: &OccupationVector) -> Self {
        ClickPattern(
            occ.iter()
                .map(|(m, c)| {
                    let arm = Arm::from_path(m.path).expect("arm occupation only");
                    (DetectorId { arm, pol: m.pol }, c)
                })
                .collect(),
        )
    }

    pub fn total(&self) -> u32 {
        self.0.values().map(|&c| c as u32).sum()
    }

    pub fn count(&self, det: DetectorId) -> u8 {
        self.0.get(&det).copied().unwrap_or(0)
    }

    pub fn detectors(&self) -> impl Iterator<Item = (DetectorId, u8)> + '_ {
        self.0.iter().map(|(&d, &c)| (d, c))
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "no clicks");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(d, c)| {
                if *c == 1 {
                    format!("{d}")
                } else {
                    format!("{d}x{c}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Outcome class of a two-photon analyzer event.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum GbaClass {
    Class1,
    Class2,
    Class3,
}

impl GbaClass {
    pub fn index(self) -> usize {
        match self {
            GbaClass::Class1 => 0,
            GbaClass::Class2 => 1,
            GbaClass::Class3 => 2,
        }
    }
}

impl fmt::Display for GbaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GbaClass::Class1 => write!(f, "class 1"),
            GbaClass::Class2 => write!(f, "class 2"),
            GbaClass::Class3 => write!(f, "class 3"),
        }
    }
}

/// Classify a two-photon click pattern: u/d coincidence with equal
/// polarizations is class 1, with different polarizations class 2,
/// anything else (both photons in one arm) class 3.
pub fn classify(pattern: &ClickPattern) -> Result<GbaClass, GbaError> {
    let total = pattern.total();
    if total != 2 {
        return Err(GbaError::NotAPairEvent(total));
    }
    let clicks: Vec<(DetectorId, u8)> = pattern.detectors().collect();
    if clicks.len() == 2 && clicks[0].1 == 1 && clicks[1].1 == 1 {
        let (a, b) = (clicks[0].0, clicks[1].0);
        if a.arm != b.arm {
            return Ok(if a.pol == b.pol {
                GbaClass::Class1
            } else {
                GbaClass::Class2
            });
        }
    }
    Ok(GbaClass::Class3)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum CombinerKind {
    PolarizingBeamSplitter,
    BalancedBeamSplitter,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum PlatePlacement {
    InputPaths,
    OutputArms,
    NoPlates,
}

/// An analyzer layout: which combiner, and where the half-wave plates sit.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GbaCircuit {
    pub combiner: CombinerKind,
    pub plates: PlatePlacement,
}

impl GbaCircuit {
    /// The layout that reproduces the published classification table:
    /// polarizing beam splitter, Hadamard plates on the output arms.
    pub fn default_layout() -> Self {
        GbaCircuit {
            combiner: CombinerKind::PolarizingBeamSplitter,
            plates: PlatePlacement::OutputArms,
        }
    }

    /// Unitary mode map from the input paths (i, j) to the output arms.
    pub fn mode_map(&self, i: u32, j: u32) -> Result<ModeMap, GbaError> {
        if i == j {
            return Err(GbaError::DegeneratePaths);
        }
        let inputs = vec![Mode::h(i), Mode::v(i), Mode::h(j), Mode::v(j)];
        let arms = vec![
            arm_mode(Arm::U, Polarization::H),
            arm_mode(Arm::U, Polarization::V),
            arm_mode(Arm::D, Polarization::H),
            arm_mode(Arm::D, Polarization::V),
        ];

        let pre = match self.plates {
            PlatePlacement::InputPaths => hadamard_pairwise(&inputs),
            _ => ModeMap::identity(inputs.clone()),
        };
        let combine = combiner_map(self.combiner, &inputs, &arms);
        let post = match self.plates {
            PlatePlacement::OutputArms => hadamard_pairwise(&arms),
            _ => ModeMap::identity(arms.clone()),
        };
        let map = pre.then(&combine)?.then(&post)?;
        if !map.is_unitary(1e-12) {
            return Err(GbaError::NotUnitary);
        }
        Ok(map)
    }
}

/// Hadamard plate on every path present in `modes`:
/// h -> (h - v)/sqrt2, v -> (h + v)/sqrt2.
fn hadamard_pairwise(modes: &[Mode]) -> ModeMap {
    let n = modes.len();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut matrix = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (col, &m) in modes.iter().enumerate() {
        let partner = Mode::new(m.path, m.pol.flipped());
        let row_same = modes.iter().position(|&x| x == m).unwrap();
        let row_partner = modes.iter().position(|&x| x == partner).unwrap();
        match m.pol {
            Polarization::H => {
                matrix[row_same][col] = Complex64::new(s, 0.0);
                matrix[row_partner][col] = Complex64::new(-s, 0.0);
            }
            Polarization::V => {
                matrix[row_same][col] = Complex64::new(s, 0.0);
                matrix[row_partner][col] = Complex64::new(s, 0.0);
            }
        }
    }
    ModeMap::new(modes.to_vec(), modes.to_vec(), matrix).expect("square by construction")
}

fn combiner_map(kind: CombinerKind, inputs: &[Mode], arms: &[Mode]) -> ModeMap {
    let n = inputs.len();
    let mut matrix = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let arm_row = |arm: Arm, pol: Polarization| {
        arms.iter()
            .position(|&m| m == arm_mode(arm, pol))
            .expect("arm list is complete")
    };
    match kind {
        CombinerKind::PolarizingBeamSplitter => {
            // h transmits (first input path -> u, second -> d), v reflects
            for (col, &m) in inputs.iter().enumerate() {
                let first = m.path == inputs[0].path;
                let arm = match (m.pol, first) {
                    (Polarization::H, true) => Arm::U,
                    (Polarization::H, false) => Arm::D,
                    (Polarization::V, true) => Arm::D,
                    (Polarization::V, false) => Arm::U,
                };
                matrix[arm_row(arm, m.pol)][col] = Complex64::new(1.0, 0.0);
            }
        }
        CombinerKind::BalancedBeamSplitter => {
            // polarization-independent 50/50 splitter with the i-phase
            // convention on reflection
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for (col, &m) in inputs.iter().enumerate() {
                let first = m.path == inputs[0].path;
                let (transmit, reflect) = if first { (Arm::U, Arm::D) } else { (Arm::D, Arm::U) };
                matrix[arm_row(transmit, m.pol)][col] = Complex64::new(s, 0.0);
                matrix[arm_row(reflect, m.pol)][col] = Complex64::new(0.0, s);
            }
        }
    }
    ModeMap::new(inputs.to_vec(), arms.to_vec(), matrix).expect("square by construction")
}

/// One branch of the analyzer's outcome distribution.
#[derive(Clone, Debug)]
pub struct OutcomeBranch {
    pub pattern: ClickPattern,
    pub probability: f64,
    /// Normalized post-measurement state of the non-analyzer modes.
    pub posterior: FockState,
}

/// A sampled analyzer outcome. `klass` is present exactly when the
/// pattern is a two-photon event.
#[derive(Clone, Debug)]
pub struct GbaOutcome {
    pub pattern: ClickPattern,
    pub klass: Option<GbaClass>,
}

/// Deterministic enumeration of the analyzer's Born-rule outcome
/// distribution for `state` entering on paths (i, j).
pub fn outcome_distribution(
    state: &FockState,
    paths: (u32, u32),
    circuit: &GbaCircuit,
) -> Result<Vec<OutcomeBranch>, GbaError> {
    if state.is_zero() {
        return Err(GbaError::EmptyState);
    }
    let map = circuit.mode_map(paths.0, paths.1)?;
    let extra: Vec<Mode> = state
        .occupied_modes()
        .into_iter()
        .filter(|m| !map.covers(*m))
        .collect();
    let extended = map.extended_with_identity(&extra);
    let transformed = state.apply_mode_map(&extended)?;

    let mut branches: BTreeMap<OccupationVector, Vec<(OccupationVector, Complex64)>> =
        BTreeMap::new();
    for (occ, amp) in transformed.terms() {
        let (arm_part, rest) = occ.split(|m| Arm::from_path(m.path).is_some());
        branches.entry(arm_part).or_default().push((rest, amp));
    }
    let mut out = Vec::with_capacity(branches.len());
    for (arm_occ, residual_terms) in branches {
        let residual = FockState::from_terms(residual_terms);
        let probability = residual.norm2();
        if probability < 1e-15 {
            continue;
        }
        out.push(OutcomeBranch {
            pattern: ClickPattern::from_arm_occupation(&arm_occ),
            probability,
            posterior: residual.normalized(),
        });
    }
    Ok(out)
}

/// Born-rule sample of one analyzer measurement. Returns the outcome and
/// the normalized posterior on the remaining modes.
pub fn measure<R: Rng + ?Sized>(
    state: &FockState,
    paths: (u32, u32),
    circuit: &GbaCircuit,
    rng: &mut R,
) -> Result<(GbaOutcome, FockState), GbaError> {
    let branches = outcome_distribution(state, paths, circuit)?;
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let mut draw = rng.random::<f64>() * total;
    let mut chosen = branches.len() - 1;
    for (idx, b) in branches.iter().enumerate() {
        if draw < b.probability {
            chosen = idx;
            break;
        }
        draw -= b.probability;
    }
    let branch = &branches[chosen];
    let klass = classify(&branch.pattern).ok();
    Ok((
        GbaOutcome {
            pattern: branch.pattern.clone(),
            klass,
        },
        branch.posterior.clone(),
    ))
}

/// Search the finite layout space for a circuit under which all ten basis
/// states classify deterministically according to the published table.
pub fn calibrate() -> Result<GbaCircuit, GbaError> {
    let combiners = [
        CombinerKind::PolarizingBeamSplitter,
        CombinerKind::BalancedBeamSplitter,
    ];
    let placements = [
        PlatePlacement::OutputArms,
        PlatePlacement::InputPaths,
        PlatePlacement::NoPlates,
    ];
    for combiner in combiners {
        for plates in placements {
            let circuit = GbaCircuit { combiner, plates };
            if circuit_matches_table(&circuit) {
                return Ok(circuit);
            }
        }
    }
    Err(GbaError::NoValidConfiguration)
}

/// True iff every one of the ten basis states on paths (1,3) classifies
/// deterministically to its table class under `circuit`.
pub fn circuit_matches_table(circuit: &GbaCircuit) -> bool {
    for kind in BellKind::ALL {
        let state = crate::states::bell(kind, 1, 3).expect("distinct paths");
        let Ok(branches) = outcome_distribution(&state, (1, 3), circuit) else {
            return false;
        };
        for branch in branches {
            if branch.probability < 1e-9 {
                continue;
            }
            match classify(&branch.pattern) {
                Ok(klass) if klass == kind.gba_class() => {}
                _ => return false,
            }
        }
    }
    true
}
