//! Sparse multimode bosonic Fock-space engine.
//!
//! States are sparse maps from occupation vectors to complex amplitudes.
//! Modes are labelled by a path number and a polarization; the canonical
//! order (path ascending, H before V) fixes iteration and serialization
//! order everywhere.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Occupation counts above this are treated as runaway bugs; the protocol
/// never puts more than 2 photons in a mode.
pub const MAX_OCCUPATION: u8 = 8;

/// Default amplitude pruning threshold.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FockError {
    #[error("occupation at mode {0} would exceed the cap of {MAX_OCCUPATION}")]
    OccupationOverflow(Mode),
    #[error("mode map does not cover occupied mode {0}")]
    UncoveredMode(Mode),
    #[error("mode map matrix shape does not match its mode lists")]
    BadMapShape,
    #[error("density matrix bases differ")]
    BasisMismatch,
    #[error("matrix is not square over its basis")]
    BadDensityShape,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => write!(f, "h"),
            Polarization::V => write!(f, "v"),
        }
    }
}

/// A single bosonic mode: one polarization in one spatial path.
///
/// The derived `Ord` (path ascending, H before V) is the canonical mode
/// order used by every map and printout.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Mode {
    pub path: u32,
    pub pol: Polarization,
}

impl Mode {
    pub fn new(path: u32, pol: Polarization) -> Self {
        debug_assert!(path >= 1, "path labels start at 1");
        Mode { path, pol }
    }

    pub fn h(path: u32) -> Self {
        Mode::new(path, Polarization::H)
    }

    pub fn v(path: u32) -> Self {
        Mode::new(path, Polarization::V)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.pol, self.path)
    }
}

/// Photon occupation numbers for a finite set of modes.
///
/// Canonical form: zero counts are never stored, so the vacuum is the
/// empty map and equality is structural.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct OccupationVector(BTreeMap<Mode, u8>);

impl OccupationVector {
    pub fn vacuum() -> Self {
        OccupationVector::default()
    }

    pub fn from_counts<I: IntoIterator<Item = (Mode, u8)>>(counts: I) -> Self {
        let mut map = BTreeMap::new();
        for (m, c) in counts {
            if c > 0 {
                *map.entry(m).or_insert(0) += c;
            }
        }
        OccupationVector(map)
    }

    /// One photon in each of the given modes (repeats accumulate).
    pub fn from_modes<I: IntoIterator<Item = Mode>>(modes: I) -> Self {
        OccupationVector::from_counts(modes.into_iter().map(|m| (m, 1)))
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, mode: Mode) -> u8 {
        self.0.get(&mode).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.0.values().map(|&c| c as u32).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, u8)> + '_ {
        self.0.iter().map(|(&m, &c)| (m, c))
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        self.0.keys().copied()
    }

    /// Photons in the given path, summed over polarizations.
    pub fn photons_in_path(&self, path: u32) -> u32 {
        self.iter()
            .filter(|(m, _)| m.path == path)
            .map(|(_, c)| c as u32)
            .sum()
    }

    /// Raise the occupation at `mode`; returns the new vector and the new count.
    pub fn raised(&self, mode: Mode) -> Result<(Self, u8), FockError> {
        let mut map = self.0.clone();
        let entry = map.entry(mode).or_insert(0);
        if *entry >= MAX_OCCUPATION {
            return Err(FockError::OccupationOverflow(mode));
        }
        *entry += 1;
        let n = *entry;
        Ok((OccupationVector(map), n))
    }

    /// Lower the occupation at `mode`; `None` if the mode is empty.
    pub fn lowered(&self, mode: Mode) -> Option<(Self, u8)> {
        let old = self.count(mode);
        if old == 0 {
            return None;
        }
        let mut map = self.0.clone();
        if old == 1 {
            map.remove(&mode);
        } else {
            map.insert(mode, old - 1);
        }
        Some((OccupationVector(map), old))
    }

    /// Split into the part on modes satisfying `keep` and the rest.
    pub fn split<F: Fn(Mode) -> bool>(&self, keep: F) -> (Self, Self) {
        let mut kept = BTreeMap::new();
        let mut rest = BTreeMap::new();
        for (&m, &c) in &self.0 {
            if keep(m) {
                kept.insert(m, c);
            } else {
                rest.insert(m, c);
            }
        }
        (OccupationVector(kept), OccupationVector(rest))
    }

    /// Combine with occupations on a disjoint mode set.
    pub fn merged(&self, other: &Self) -> Self {
        let mut map = self.0.clone();
        for (&m, &c) in &other.0 {
            debug_assert!(!map.contains_key(&m), "merged occupations must be disjoint");
            *map.entry(m).or_insert(0) += c;
        }
        OccupationVector(map)
    }

    pub fn relabel_paths<F: Fn(u32) -> u32>(&self, f: &F) -> Self {
        OccupationVector(
            self.0
                .iter()
                .map(|(&m, &c)| (Mode::new(f(m.path), m.pol), c))
                .collect(),
        )
    }

    fn factorial_product(&self) -> f64 {
        self.0
            .values()
            .map(|&c| (1..=c as u64).product::<u64>() as f64)
            .product()
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_vacuum() {
            return write!(f, "vac");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(m, c)| format!("{}.{}:{}", m.path, m.pol, c))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// A sparse superposition of Fock kets with complex amplitudes.
///
/// Immutable by convention: every operation returns a new state.
#[derive(Clone, Debug)]
pub struct FockState {
    amps: BTreeMap<OccupationVector, Complex64>,
    prune_tol: f64,
}

impl FockState {
    pub fn zero() -> Self {
        FockState {
            amps: BTreeMap::new(),
            prune_tol: DEFAULT_PRUNE_TOL,
        }
    }

    pub fn vacuum() -> Self {
        FockState::ket(OccupationVector::vacuum())
    }

    /// A single basis ket with unit amplitude.
    pub fn ket(occ: OccupationVector) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(occ, Complex64::new(1.0, 0.0));
        FockState {
            amps,
            prune_tol: DEFAULT_PRUNE_TOL,
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (OccupationVector, Complex64)>>(terms: I) -> Self {
        let mut s = FockState::zero();
        for (occ, a) in terms {
            s.accumulate(occ, a);
        }
        s.pruned()
    }

    pub fn prune_tolerance(&self) -> f64 {
        self.prune_tol
    }

    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitude(&self, occ: &OccupationVector) -> Complex64 {
        self.amps
            .get(occ)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OccupationVector, Complex64)> + '_ {
        self.amps.iter().map(|(occ, &a)| (occ, a))
    }

    pub fn occupied_modes(&self) -> BTreeSet<Mode> {
        let mut set = BTreeSet::new();
        for occ in self.amps.keys() {
            set.extend(occ.modes());
        }
        set
    }

    fn accumulate(&mut self, occ: OccupationVector, amp: Complex64) {
        let entry = self.amps.entry(occ).or_insert(Complex64::new(0.0, 0.0));
        *entry += amp;
    }

    fn pruned(mut self) -> Self {
        let tol = self.prune_tol;
        self.amps.retain(|_, a| a.norm() >= tol);
        self
    }

    /// Apply a creation operator: ket counts n -> n+1 with a sqrt(n+1) factor.
    pub fn create(&self, mode: Mode) -> Result<Self, FockError> {
        let mut out = FockState::zero();
        out.prune_tol = self.prune_tol;
        for (occ, &a) in &self.amps {
            let (raised, n) = occ.raised(mode)?;
            out.accumulate(raised, a * (n as f64).sqrt());
        }
        Ok(out.pruned())
    }

    /// Apply an annihilation operator (adjoint of `create`).
    pub fn annihilate(&self, mode: Mode) -> Self {
        let mut out = FockState::zero();
        out.prune_tol = self.prune_tol;
        for (occ, &a) in &self.amps {
            if let Some((lowered, n)) = occ.lowered(mode) {
                out.accumulate(lowered, a * (n as f64).sqrt());
            }
        }
        out.pruned()
    }

    /// Inner product, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let (small, large, conj_small) = if self.amps.len() <= other.amps.len() {
            (&self.amps, &other.amps, true)
        } else {
            (&other.amps, &self.amps, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (occ, &a) in small {
            if let Some(&b) = large.get(occ) {
                if conj_small {
                    acc += a.conj() * b;
                } else {
                    acc += b.conj() * a;
                }
            }
        }
        acc
    }

    pub fn norm2(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.amps.values_mut() {
            *a *= c;
        }
        out.pruned()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (occ, &a) in &other.amps {
            out.accumulate(occ.clone(), a);
        }
        out.pruned()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    /// Tensor with a state on a disjoint mode set; amplitudes multiply.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = FockState::zero();
        out.prune_tol = self.prune_tol;
        for (occ_a, &a) in &self.amps {
            for (occ_b, &b) in &other.amps {
                out.accumulate(occ_a.merged(occ_b), a * b);
            }
        }
        out.pruned()
    }

    /// Total weight on kets satisfying `pred`.
    pub fn sector_weight<F: Fn(&OccupationVector) -> bool>(&self, pred: F) -> f64 {
        self.amps
            .iter()
            .filter(|(occ, _)| pred(occ))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn relabel_paths<F: Fn(u32) -> u32>(&self, f: F) -> Self {
        let mut out = FockState::zero();
        out.prune_tol = self.prune_tol;
        for (occ, &a) in &self.amps {
            out.accumulate(occ.relabel_paths(&f), a);
        }
        out.pruned()
    }

    /// Substitute every creation operator by its image under `map` and
    /// re-expand. Every occupied mode must appear in the map's input list.
    pub fn apply_mode_map(&self, map: &ModeMap) -> Result<Self, FockError> {
        let mut out = FockState::zero();
        out.prune_tol = self.prune_tol;
        for (occ, &amp) in &self.amps {
            for mode in occ.modes() {
                if !map.covers(mode) {
                    return Err(FockError::UncoveredMode(mode));
                }
            }
            // |{n_m}> = prod (a_m^dag)^{n_m} / sqrt(prod n_m!) |vac>
            let scale = amp / occ.factorial_product().sqrt();
            let mut cur = FockState::zero();
            cur.prune_tol = self.prune_tol;
            cur.accumulate(OccupationVector::vacuum(), scale);
            for (mode, n) in occ.iter() {
                for _ in 0..n {
                    let mut next = FockState::zero();
                    next.prune_tol = self.prune_tol;
                    for (out_mode, coeff) in map.column(mode) {
                        if coeff.norm() == 0.0 {
                            continue;
                        }
                        next = next.add(&cur.create(out_mode)?.scaled(coeff));
                    }
                    cur = next;
                }
            }
            for (o, a) in cur.amps {
                out.accumulate(o, a);
            }
        }
        Ok(out.pruned())
    }

    /// Partial inner product: contract `self` with `local` over `local_modes`,
    /// leaving an (unnormalized) state on the remaining modes.
    pub fn project_local(&self, local: &FockState, local_modes: &BTreeSet<Mode>) -> Self {
        let mut out = FockState::zero();
        out.prune_tol = self.prune_tol;
        for (occ, &a) in &self.amps {
            let (loc, rest) = occ.split(|m| local_modes.contains(&m));
            let c = local.amplitude(&loc).conj();
            if c.norm() > 0.0 {
                out.accumulate(rest, c * a);
            }
        }
        out.pruned()
    }

    /// Partial trace down to the modes in `keep`.
    pub fn reduced_density(&self, keep: &BTreeSet<Mode>) -> DensityMatrix {
        // group kets by traced-out part; coherence survives only within a group
        let mut groups: BTreeMap<OccupationVector, Vec<(OccupationVector, Complex64)>> =
            BTreeMap::new();
        let mut basis_set: BTreeSet<OccupationVector> = BTreeSet::new();
        for (occ, &a) in &self.amps {
            let (kept, rest) = occ.split(|m| keep.contains(&m));
            basis_set.insert(kept.clone());
            groups.entry(rest).or_default().push((kept, a));
        }
        let basis: Vec<OccupationVector> = basis_set.into_iter().collect();
        let index: BTreeMap<&OccupationVector, usize> =
            basis.iter().enumerate().map(|(i, b)| (b, i)).collect();
        let dim = basis.len();
        let mut mat = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for group in groups.values() {
            for (occ_i, a_i) in group {
                for (occ_j, a_j) in group {
                    let i = index[occ_i];
                    let j = index[occ_j];
                    mat[(i, j)] += a_i * a_j.conj();
                }
            }
        }
        DensityMatrix { basis, mat }
    }

    /// Canonical text form: one line per ket, keys in canonical order,
    /// amplitudes with 17 significant digits.
    pub fn dump(&self) -> String {
        let mut lines = Vec::with_capacity(self.amps.len());
        for (occ, a) in &self.amps {
            lines.push(format!("{}  {:.16e}  {:.16e}", occ, a.re, a.im));
        }
        lines.join("\n")
    }
}

impl PartialEq for FockState {
    fn eq(&self, other: &Self) -> bool {
        self.amps == other.amps
    }
}

/// A linear map on creation operators over an ordered mode list.
///
/// `matrix[o][i]` is the coefficient of output mode `o` in the image of
/// input mode `i`.
#[derive(Clone, Debug)]
pub struct ModeMap {
    input: Vec<Mode>,
    output: Vec<Mode>,
    matrix: Vec<Vec<Complex64>>,
}

impl ModeMap {
    pub fn new(
        input: Vec<Mode>,
        output: Vec<Mode>,
        matrix: Vec<Vec<Complex64>>,
    ) -> Result<Self, FockError> {
        if matrix.len() != output.len() || matrix.iter().any(|row| row.len() != input.len()) {
            return Err(FockError::BadMapShape);
        }
        Ok(ModeMap {
            input,
            output,
            matrix,
        })
    }

    pub fn identity(modes: Vec<Mode>) -> Self {
        let n = modes.len();
        let mut matrix = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        ModeMap {
            input: modes.clone(),
            output: modes,
            matrix,
        }
    }

    pub fn input_modes(&self) -> &[Mode] {
        &self.input
    }

    pub fn output_modes(&self) -> &[Mode] {
        &self.output
    }

    pub fn covers(&self, mode: Mode) -> bool {
        self.input.contains(&mode)
    }

    /// Image of one input mode as (output mode, coefficient) pairs.
    pub fn column(&self, mode: Mode) -> Vec<(Mode, Complex64)> {
        let idx = self
            .input
            .iter()
            .position(|&m| m == mode)
            .expect("column of uncovered mode");
        self.output
            .iter()
            .enumerate()
            .map(|(o, &m)| (m, self.matrix[o][idx]))
            .collect()
    }

    /// Sequential composition: apply `self`, then `next`.
    pub fn then(&self, next: &ModeMap) -> Result<ModeMap, FockError> {
        if self.output != next.input {
            return Err(FockError::BadMapShape);
        }
        let n_in = self.input.len();
        let n_out = next.output.len();
        let n_mid = self.output.len();
        let mut matrix = vec![vec![Complex64::new(0.0, 0.0); n_in]; n_out];
        for (o, row) in matrix.iter_mut().enumerate() {
            for (i, cell) in row.iter_mut().enumerate() {
                for k in 0..n_mid {
                    *cell += next.matrix[o][k] * self.matrix[k][i];
                }
            }
        }
        ModeMap::new(self.input.clone(), next.output.clone(), matrix)
    }

    /// Extend with identity action on extra modes (disjoint from the map).
    pub fn extended_with_identity(&self, extra: &[Mode]) -> ModeMap {
        let mut input = self.input.clone();
        let mut output = self.output.clone();
        let n_old_out = output.len();
        let n_old_in = input.len();
        input.extend_from_slice(extra);
        output.extend_from_slice(extra);
        let mut matrix = vec![vec![Complex64::new(0.0, 0.0); input.len()]; output.len()];
        for o in 0..n_old_out {
            matrix[o][..n_old_in].copy_from_slice(&self.matrix[o]);
        }
        for (k, _) in extra.iter().enumerate() {
            matrix[n_old_out + k][n_old_in + k] = Complex64::new(1.0, 0.0);
        }
        ModeMap {
            input,
            output,
            matrix,
        }
    }

    /// Check M M^dag = I entrywise within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let n = self.matrix.len();
        if n != self.input.len() {
            return false;
        }
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.matrix[i][k] * self.matrix[j][k].conj();
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                if (acc - expect).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Hermitian trace-1 matrix over an explicit Fock basis.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    basis: Vec<OccupationVector>,
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(basis: Vec<OccupationVector>, mat: DMatrix<Complex64>) -> Result<Self, FockError> {
        if mat.nrows() != basis.len() || mat.ncols() != basis.len() {
            return Err(FockError::BadDensityShape);
        }
        Ok(DensityMatrix { basis, mat })
    }

    /// Mixture of pure states expressed in a fixed basis. Weights need not
    /// be normalized; states outside the basis are an error.
    pub fn from_mixture(
        basis: Vec<OccupationVector>,
        terms: &[(f64, FockState)],
    ) -> Result<Self, FockError> {
        let index: BTreeMap<&OccupationVector, usize> =
            basis.iter().enumerate().map(|(i, b)| (b, i)).collect();
        let dim = basis.len();
        let mut mat = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (w, state) in terms {
            let mut entries: Vec<(usize, Complex64)> = Vec::with_capacity(state.len());
            for (occ, a) in state.terms() {
                let i = *index.get(occ).ok_or(FockError::BasisMismatch)?;
                entries.push((i, a));
            }
            for &(i, ai) in &entries {
                for &(j, aj) in &entries {
                    mat[(i, j)] += ai * aj.conj() * *w;
                }
            }
        }
        Ok(DensityMatrix { basis, mat })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[OccupationVector] {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn same_basis(&self, other: &Self) -> bool {
        self.basis == other.basis
    }

    /// Eigenvalues, assuming hermiticity.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }

    pub fn max_hermiticity_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Enforce the type invariants: hermitian within 1e-12, eigenvalues
    /// >= -1e-10, trace 1 within 1e-10.
    pub fn validate(&self) -> Result<(), String> {
        let herm = self.max_hermiticity_violation();
        if herm > 1e-12 {
            return Err(format!("hermiticity violated by {herm:.3e}"));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(format!("trace is {tr}, not 1"));
        }
        let min_eig = self
            .eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(format!("negative eigenvalue {min_eig:.3e}"));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<DMatrix<Complex64>, FockError> {
        if !self.same_basis(other) {
            return Err(FockError::BasisMismatch);
        }
        Ok(&self.mat * &other.mat)
    }

    pub fn sub(&self, other: &Self) -> Result<DMatrix<Complex64>, FockError> {
        if !self.same_basis(other) {
            return Err(FockError::BasisMismatch);
        }
        Ok(&self.mat - &other.mat)
    }
}

/// Eigenvalues of a hermitian complex matrix.
pub fn hermitian_eigenvalues(mat: &DMatrix<Complex64>) -> Vec<f64> {
    if mat.nrows() == 0 {
        return Vec::new();
    }
    let eig = nalgebra::SymmetricEigen::new(mat.clone());
    eig.eigenvalues.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_is_normalized_single_entry() {
        let v = FockState::vacuum();
        assert_eq!(v.len(), 1);
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.inner(&v).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn create_on_vacuum() {
        let s = FockState::vacuum().create(Mode::h(1)).unwrap();
        let ket = OccupationVector::from_modes([Mode::h(1)]);
        assert_eq!(s.amplitude(&ket), c(1.0, 0.0));
        // orthogonal photon-number sectors
        assert_abs_diff_eq!(s.inner(&FockState::vacuum()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn double_create_gains_sqrt2() {
        let s = FockState::vacuum()
            .create(Mode::h(1))
            .unwrap()
            .create(Mode::h(1))
            .unwrap();
        let ket = OccupationVector::from_counts([(Mode::h(1), 2)]);
        assert_abs_diff_eq!(s.amplitude(&ket).re, 2.0_f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn creation_operators_commute() {
        let base = FockState::vacuum().create(Mode::v(3)).unwrap();
        let a = base.create(Mode::h(1)).unwrap().create(Mode::v(2)).unwrap();
        let b = base.create(Mode::v(2)).unwrap().create(Mode::h(1)).unwrap();
        assert!(a.sub(&b).is_zero());
    }

    #[test]
    fn annihilate_vacuum_is_zero() {
        assert!(FockState::vacuum().annihilate(Mode::h(1)).is_zero());
    }

    #[test]
    fn annihilate_doubly_occupied() {
        let two = FockState::ket(OccupationVector::from_counts([(Mode::h(1), 2)]));
        let one = two.annihilate(Mode::h(1));
        let ket = OccupationVector::from_modes([Mode::h(1)]);
        assert_abs_diff_eq!(one.amplitude(&ket).re, 2.0_f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn occupation_cap_is_enforced() {
        let mut s = FockState::vacuum();
        for _ in 0..MAX_OCCUPATION {
            s = s.create(Mode::h(1)).unwrap();
        }
        assert_eq!(
            s.create(Mode::h(1)),
            Err(FockError::OccupationOverflow(Mode::h(1)))
        );
    }

    /// inner(create(x,m), y) = inner(x, annihilate(y,m)) over an enumerated
    /// small space: 3 modes, occupations up to 3 photons total.
    #[test]
    fn adjoint_identity_by_enumeration() {
        let modes = [Mode::h(1), Mode::v(1), Mode::h(2)];
        let mut kets = Vec::new();
        for a in 0..=3u8 {
            for b in 0..=3u8 {
                for cc in 0..=3u8 {
                    if a + b + cc <= 3 {
                        kets.push(OccupationVector::from_counts([
                            (modes[0], a),
                            (modes[1], b),
                            (modes[2], cc),
                        ]));
                    }
                }
            }
        }
        // deterministic pseudo-random amplitudes
        let amp = |i: usize, salt: u64| {
            let x = (i as u64).wrapping_mul(6364136223846793005).wrapping_add(salt);
            c(((x >> 11) % 1000) as f64 / 1000.0 - 0.5, ((x >> 31) % 1000) as f64 / 1000.0 - 0.5)
        };
        let x = FockState::from_terms(kets.iter().enumerate().map(|(i, k)| (k.clone(), amp(i, 7))));
        let y = FockState::from_terms(kets.iter().enumerate().map(|(i, k)| (k.clone(), amp(i, 99))));
        for &m in &modes {
            let lhs = x.create(m).unwrap().inner(&y);
            let rhs = x.inner(&y.annihilate(m));
            assert_abs_diff_eq!(lhs.re, rhs.re, epsilon = 1e-12);
            assert_abs_diff_eq!(lhs.im, rhs.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn tensor_multiplies_norms() {
        let a = FockState::vacuum()
            .create(Mode::h(1))
            .unwrap()
            .scaled(c(0.5, 0.25));
        let b = FockState::vacuum()
            .create(Mode::v(2))
            .unwrap()
            .add(&FockState::vacuum().create(Mode::h(2)).unwrap())
            .scaled(c(0.0, 0.7));
        assert_abs_diff_eq!(a.tensor(&b).norm(), a.norm() * b.norm(), epsilon = 1e-12);
    }

    #[test]
    fn hadamard_plate_on_single_photon() {
        let h1 = FockState::vacuum().create(Mode::h(1)).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let map = ModeMap::new(
            vec![Mode::h(1), Mode::v(1)],
            vec![Mode::h(1), Mode::v(1)],
            vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(-s, 0.0), c(s, 0.0)]],
        )
        .unwrap();
        let out = h1.apply_mode_map(&map).unwrap();
        let kh = OccupationVector::from_modes([Mode::h(1)]);
        let kv = OccupationVector::from_modes([Mode::v(1)]);
        assert_abs_diff_eq!(out.amplitude(&kh).re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&kv).re, -s, epsilon = 1e-15);
    }

    #[test]
    fn identity_map_is_identity() {
        let s = FockState::vacuum()
            .create(Mode::h(1))
            .unwrap()
            .create(Mode::v(2))
            .unwrap()
            .create(Mode::v(2))
            .unwrap();
        let map = ModeMap::identity(vec![Mode::h(1), Mode::v(1), Mode::h(2), Mode::v(2)]);
        let out = s.apply_mode_map(&map).unwrap();
        assert!(out.sub(&s).norm() < 1e-12);
    }

    #[test]
    fn uncovered_mode_is_an_error() {
        let s = FockState::vacuum().create(Mode::h(3)).unwrap();
        let map = ModeMap::identity(vec![Mode::h(1)]);
        assert_eq!(
            s.apply_mode_map(&map),
            Err(FockError::UncoveredMode(Mode::h(3)))
        );
    }

    #[test]
    fn random_unitary_preserves_norm_and_inner_products() {
        // a fixed 4x4 unitary: product of plane rotations with phases
        let modes = vec![Mode::h(1), Mode::v(1), Mode::h(2), Mode::v(2)];
        let mut mat = vec![vec![c(0.0, 0.0); 4]; 4];
        for (i, row) in mat.iter_mut().enumerate() {
            row[i] = c(1.0, 0.0);
        }
        let rotations = [(0usize, 1usize, 0.3f64), (1, 2, 1.1), (2, 3, 0.7), (0, 3, 2.0)];
        for &(p, q, th) in &rotations {
            let (s, co) = th.sin_cos();
            let mut next = mat.clone();
            for k in 0..4 {
                next[p][k] = mat[p][k] * co + mat[q][k] * c(0.0, s);
                next[q][k] = mat[p][k] * c(0.0, s) + mat[q][k] * co;
            }
            mat = next;
        }
        let map = ModeMap::new(modes.clone(), modes.clone(), mat).unwrap();
        assert!(map.is_unitary(1e-12));

        let a = FockState::from_terms([
            (OccupationVector::from_counts([(modes[0], 2), (modes[2], 1)]), c(0.6, 0.1)),
            (OccupationVector::from_counts([(modes[1], 1), (modes[3], 2)]), c(-0.2, 0.4)),
            (OccupationVector::from_counts([(modes[0], 1), (modes[1], 1), (modes[2], 1)]), c(0.1, -0.3)),
        ]);
        let b = FockState::from_terms([
            (OccupationVector::from_counts([(modes[0], 1), (modes[2], 2)]), c(0.3, -0.5)),
            (OccupationVector::from_counts([(modes[1], 1), (modes[3], 2)]), c(0.8, 0.2)),
        ]);
        let ma = a.apply_mode_map(&map).unwrap();
        let mb = b.apply_mode_map(&map).unwrap();
        assert_abs_diff_eq!(ma.norm(), a.norm(), epsilon = 1e-10);
        let before = a.inner(&b);
        let after = ma.inner(&mb);
        assert_abs_diff_eq!(before.re, after.re, epsilon = 1e-10);
        assert_abs_diff_eq!(before.im, after.im, epsilon = 1e-10);
    }

    #[test]
    fn reduced_density_of_product_state_is_pure() {
        let a = FockState::vacuum().create(Mode::h(1)).unwrap();
        let b = FockState::vacuum()
            .create(Mode::h(2))
            .unwrap()
            .add(&FockState::vacuum().create(Mode::v(2)).unwrap())
            .normalized();
        let joint = a.tensor(&b);
        let keep: BTreeSet<Mode> = [Mode::h(2), Mode::v(2)].into_iter().collect();
        let rho = joint.reduced_density(&keep);
        rho.validate().unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn dump_is_canonical() {
        let s = FockState::from_terms([
            (OccupationVector::from_modes([Mode::v(2)]), c(0.5, 0.0)),
            (OccupationVector::from_modes([Mode::h(1)]), c(-0.5, 0.25)),
        ]);
        let dump = s.dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("1.h:1"));
        assert!(lines[1].starts_with("2.v:1"));
        assert!(lines[0].contains("-5.0000000000000000e-1"));
    }
}
