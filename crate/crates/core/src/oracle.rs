//! Brute-force transfer matrices for an apparatus.
//!
//! Each element is compiled to an explicit matrix between the mode sets
//! reachable before and after it, and the chain matrix is their product. None
//! of this goes through [`crate::elements::apply_element`] or
//! [`crate::chain::propagate`], so the two routes can check each other.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::chain::{
    build_measurement_chain, propagate, reference_state, Apparatus, Basis, DetectionWindows, HardwareParams,
    Window, SIGNAL_POL,
};
use crate::elements::{ups_jones, waveplate_jones, Element};
use crate::error::{Error, Result};
use crate::hilbert::{CoarseOffset, ModeLabel, PhotonicState, TimeGrid, PRUNE_THRESHOLD};

pub const DEFAULT_MODE_CAP: usize = 4096;

/// Ordered list of modes indexing the rows or columns of a [`ChainMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    modes: Vec<ModeLabel>,
    index: BTreeMap<ModeLabel, usize>,
}

impl ModeBasis {
    pub fn new(modes: impl IntoIterator<Item = ModeLabel>) -> Self {
        let set: BTreeSet<ModeLabel> = modes.into_iter().collect();
        let modes: Vec<ModeLabel> = set.into_iter().collect();
        let index = modes.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        ModeBasis { modes, index }
    }

    /// The `d` encoding modes in the signal polarization at zero offset.
    pub fn encoding(grid: &TimeGrid) -> Self {
        ModeBasis::new((0..grid.dimension).map(|m| ModeLabel::time_bin(m, SIGNAL_POL)))
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn position(&self, m: &ModeLabel) -> Option<usize> {
        self.index.get(m).copied()
    }
}

/// Transfer matrix from `inputs` to the modes reachable at the output.
///
/// For an ideal lossless chain the output set has as many modes as the input
/// set and the matrix is unitary. Imperfect switching spreads amplitude over
/// more output modes; the matrix is then an isometry (`M^dagger M = I`).
#[derive(Debug, Clone)]
pub struct ChainMatrix {
    pub inputs: ModeBasis,
    pub outputs: ModeBasis,
    pub matrix: DMatrix<Complex64>,
    grid: TimeGrid,
}

impl ChainMatrix {
    pub fn is_square(&self) -> bool {
        self.matrix.nrows() == self.matrix.ncols()
    }

    /// Max entry deviation of `M^dagger M` (and `M M^dagger` when square) from identity.
    pub fn unitarity_error(&self) -> f64 {
        let m = &self.matrix;
        let mut err = gram_error(&(m.adjoint() * m));
        if self.is_square() {
            err = err.max(gram_error(&(m * m.adjoint())));
        }
        err
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        if self.matrix.is_empty() {
            return 0.0;
        }
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, state: &PhotonicState) -> Result<PhotonicState> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut v = nalgebra::DVector::from_element(self.inputs.len(), Complex64::new(0.0, 0.0));
        for (m, a) in state.iter() {
            let i = self.inputs.position(m).ok_or(Error::InvalidMode(*m))?;
            v[i] = *a;
        }
        let out = &self.matrix * v;
        let mut s = PhotonicState::vacuum(&self.grid);
        for (m, a) in self.outputs.modes().iter().zip(out.iter()) {
            s.accumulate(*m, *a);
        }
        s.prune();
        Ok(s)
    }

    /// Diagnostic dump: mode lists and the matrix as `[re, im]` pairs.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = (0..self.matrix.nrows())
            .map(|r| {
                Value::Array(
                    (0..self.matrix.ncols())
                        .map(|c| {
                            let z = self.matrix[(r, c)];
                            json!([z.re, z.im])
                        })
                        .collect(),
                )
            })
            .collect();
        json!({
            "inputs": self.inputs.modes(),
            "outputs": self.outputs.modes(),
            "matrix": rows,
        })
    }
}

fn gram_error(g: &DMatrix<Complex64>) -> f64 {
    let mut err: f64 = 0.0;
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            err = err.max((g[(r, c)] - Complex64::new(target, 0.0)).norm());
        }
    }
    err
}

/// Column of an element's matrix: where one input mode goes, with amplitudes.
fn element_image(e: &Element, m: ModeLabel, grid: &TimeGrid) -> Result<Vec<(ModeLabel, Complex64)>> {
    let one = Complex64::new(1.0, 0.0);
    let jones_column = |j: crate::elements::JonesMatrix| -> Vec<(ModeLabel, Complex64)> {
        [crate::hilbert::Polarization::H, crate::hilbert::Polarization::V]
            .into_iter()
            .map(|q| (m.with_pol(q), j.entry(q, m.pol)))
            .collect()
    };
    let image = match e {
        Element::Waveplate { plate, angle } => jones_column(waveplate_jones(*plate, *angle)),
        Element::UltrafastSwitch {
            targets,
            coarse_offset,
            theta,
            delta_phi,
            extra_phase,
        } => {
            let hit = targets.contains(&m.fine_bin) && coarse_offset.is_none_or(|c| c == m.coarse_offset);
            if hit {
                let phase = Complex64::from_polar(1.0, *extra_phase);
                jones_column(ups_jones(*theta, *delta_phi))
                    .into_iter()
                    .map(|(mode, a)| (mode, a * phase))
                    .collect()
            } else {
                vec![(m, one)]
            }
        }
        Element::PolarizingSplitter { kept } => {
            if m.pol == *kept {
                vec![(m, one)]
            } else {
                vec![]
            }
        }
        Element::BirefringentDelay {
            shift_bins,
            delayed,
        } => {
            let fine_bin = if m.pol == *delayed {
                m.fine_bin - *shift_bins as i32
            } else {
                m.fine_bin
            };
            vec![(ModeLabel { fine_bin, ..m }, one)]
        }
        Element::PolarizationTimeDelay { offset, delayed } => {
            let coarse_offset = if m.pol == *delayed {
                m.coarse_offset + *offset
            } else {
                m.coarse_offset
            };
            vec![(ModeLabel { coarse_offset, ..m }, one)]
        }
        Element::Attenuator { transmission } => vec![(m, Complex64::new(transmission.sqrt(), 0.0))],
        Element::PhaseCorrector { phases } => {
            let phi = if m.fine_bin >= 0 {
                phases.get(m.fine_bin as usize).copied().unwrap_or(0.0)
            } else {
                0.0
            };
            vec![(m, Complex64::from_polar(1.0, phi))]
        }
    };
    let image: Vec<_> = image
        .into_iter()
        .filter(|(_, a)| a.norm() >= PRUNE_THRESHOLD)
        .collect();
    if let Some((bad, _)) = image.iter().find(|(mode, _)| !grid.is_routable(mode)) {
        return Err(Error::InvalidRouting {
            element: e.to_string(),
            mode: *bad,
        });
    }
    Ok(image)
}

/// Chain matrix on the encoding modes with the default mode cap.
pub fn full_matrix(a: &Apparatus) -> Result<ChainMatrix> {
    full_matrix_on(a, ModeBasis::encoding(&a.grid), DEFAULT_MODE_CAP)
}

pub fn full_matrix_on(a: &Apparatus, inputs: ModeBasis, cap: usize) -> Result<ChainMatrix> {
    for e in &a.elements {
        e.validate(&a.grid)?;
    }
    let mut current = inputs.clone();
    let mut matrix = DMatrix::<Complex64>::identity(inputs.len(), inputs.len());
    for e in &a.elements {
        let columns: Vec<Vec<(ModeLabel, Complex64)>> = current
            .modes()
            .iter()
            .map(|m| element_image(e, *m, &a.grid))
            .collect::<Result<_>>()?;
        let next = ModeBasis::new(columns.iter().flatten().map(|(m, _)| *m));
        if next.len() > cap {
            return Err(Error::Complexity {
                size: next.len(),
                cap,
            });
        }
        let mut step = DMatrix::<Complex64>::zeros(next.len(), current.len());
        for (c, column) in columns.iter().enumerate() {
            for (m, amp) in column {
                let r = next.position(m).expect("image mode is in the next basis");
                step[(r, c)] += *amp;
            }
        }
        matrix = step * matrix;
        current = next;
    }
    Ok(ChainMatrix {
        inputs,
        outputs: current,
        matrix,
        grid: a.grid.clone(),
    })
}

fn column_vector(m: &ChainMatrix, s: &PhotonicState) -> Result<Vec<(ModeLabel, f64)>> {
    let out = m.apply(s)?;
    Ok(out.iter().map(|(mode, a)| (*mode, a.norm_sqr())).collect())
}

/// Windows derived from the ideal chain matrix (argmax coarse bin per basis state).
fn oracle_windows(ideal: &ChainMatrix, basis: Basis, width_ns: f64) -> Result<DetectionWindows> {
    let grid = &ideal.grid;
    let mut windows: Vec<Window> = Vec::new();
    for i in 0..grid.dimension {
        let mut per_offset: BTreeMap<CoarseOffset, f64> = BTreeMap::new();
        for (mode, p) in column_vector(ideal, &reference_state(grid, basis, i)?)? {
            *per_offset.entry(mode.coarse_offset).or_insert(0.0) += p;
        }
        let center = per_offset
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| c)
            .unwrap_or_default();
        if let Some(prev) = windows
            .iter()
            .find(|w| ((w.center.0 - center.0).abs() as f64) < width_ns * 1000.0)
        {
            return Err(Error::DegenerateRouting {
                first: prev.outcome,
                second: i,
                offset_ps: center.0,
            });
        }
        windows.push(Window {
            outcome: i,
            center,
            width_ns,
        });
    }
    Ok(DetectionWindows { windows })
}

/// `P[i][j]`: probability that state `i` of `prep` clicks in the window of
/// outcome `j` when measured in `meas`, evaluated through chain matrices.
pub fn confusion_matrix_analytic(
    d: usize,
    prep: Basis,
    meas: Basis,
    hw: &HardwareParams,
) -> Result<Vec<Vec<f64>>> {
    let ideal = full_matrix(&build_measurement_chain(d, meas, &hw.reference())?)?;
    let windows = oracle_windows(&ideal, meas, hw.window_width_ns)?;
    let actual = full_matrix(&build_measurement_chain(d, meas, hw)?)?;
    let grid = &actual.grid;
    (0..d)
        .map(|i| {
            let mut row = vec![0.0; d];
            for (mode, p) in column_vector(&actual, &reference_state(grid, prep, i)?)? {
                if let Some(j) = windows.locate(grid.arrival_ps(&mode)) {
                    row[j] += p;
                }
            }
            Ok(row)
        })
        .collect()
}

/// Scales each row to sum to one; all-zero rows are left as they are.
pub fn renormalize_rows(p: &[Vec<f64>]) -> Vec<Vec<f64>> {
    p.iter()
        .map(|row| {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter().map(|x| x / s).collect()
            } else {
                row.clone()
            }
        })
        .collect()
}

/// Normalized state with i.i.d. complex Gaussian amplitudes on `inputs`.
pub fn random_state<R: Rng + ?Sized>(grid: &TimeGrid, inputs: &ModeBasis, rng: &mut R) -> Result<PhotonicState> {
    let amps: Vec<(ModeLabel, Complex64)> = inputs
        .modes()
        .iter()
        .map(|m| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (*m, Complex64::new(re, im))
        })
        .collect();
    PhotonicState::from_amplitudes(grid, amps)?
        .normalized()
        .ok_or_else(|| Error::Config("random state has zero norm".into()))
}

/// Outcome of comparing state propagation against the chain matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub samples: usize,
    /// Largest amplitude difference over all sampled states.
    pub max_state_error: f64,
    /// `None` for lossy chains, where unitarity is not expected.
    pub unitarity_error: Option<f64>,
    pub matrix_shape: (usize, usize),
}

impl EquivalenceReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_state_error <= tol && self.unitarity_error.is_none_or(|u| u <= tol)
    }
}

/// Propagates `samples` random encoding states both ways and compares.
pub fn check_equivalence(a: &Apparatus, samples: usize, seed: u64) -> Result<EquivalenceReport> {
    let m = full_matrix(a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let s = random_state(&a.grid, &m.inputs, &mut rng)?;
        let by_matrix = m.apply(&s)?;
        let by_chain = propagate(&s, a)?;
        worst = worst.max(by_matrix.max_abs_diff(&by_chain));
    }
    Ok(EquivalenceReport {
        samples,
        max_state_error: worst,
        unitarity_error: a.is_lossless().then(|| m.unitarity_error()),
        matrix_shape: (m.matrix.nrows(), m.matrix.ncols()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{propagate, propagated_confusion};
    use std::f64::consts::PI;

    #[test]
    fn empty_chain_is_identity() {
        let grid = HardwareParams::default().grid(4).unwrap();
        let a = Apparatus::new(grid, 0, vec![]);
        let m = full_matrix(&a).unwrap();
        assert_eq!(m.matrix, DMatrix::identity(4, 4));
    }

    #[test]
    fn attenuator_bounds_operator_norm() {
        let hw = HardwareParams::default();
        let mut a = build_measurement_chain(4, Basis::Superposition, &hw).unwrap();
        a.elements.insert(2, Element::Attenuator { transmission: 0.5 });
        let m = full_matrix(&a).unwrap();
        assert!(m.operator_norm() <= 0.5f64.sqrt() + 1e-10);
        assert!((m.operator_norm() - 0.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn ideal_chains_are_square_unitaries() {
        let hw = HardwareParams::default();
        for d in [2, 4, 8] {
            for basis in Basis::BOTH {
                let m = full_matrix(&build_measurement_chain(d, basis, &hw).unwrap()).unwrap();
                assert!(m.is_square(), "d={d}");
                assert!(m.unitarity_error() < 1e-10);
            }
        }
    }

    #[test]
    fn degraded_chain_is_an_isometry() {
        let hw = HardwareParams {
            delta_phi: 0.9 * PI,
            ..HardwareParams::default()
        };
        let m = full_matrix(&build_measurement_chain(4, Basis::Superposition, &hw).unwrap()).unwrap();
        assert!(!m.is_square());
        assert!(m.unitarity_error() < 1e-10);
    }

    #[test]
    fn mode_cap_is_enforced() {
        let hw = HardwareParams::default();
        let a = build_measurement_chain(8, Basis::Superposition, &hw).unwrap();
        let err = full_matrix_on(&a, ModeBasis::encoding(&a.grid), 4).unwrap_err();
        assert!(matches!(err, Error::Complexity { cap: 4, .. }));
    }

    #[test]
    fn matrix_matches_propagation_on_basis_states() {
        let hw = HardwareParams {
            delta_phi: 0.8 * PI,
            theta: 0.7,
            ..HardwareParams::default()
        };
        let a = build_measurement_chain(4, Basis::Superposition, &hw).unwrap();
        let m = full_matrix(&a).unwrap();
        for i in 0..4 {
            let s = reference_state(&a.grid, Basis::Computational, i).unwrap();
            let diff = propagate(&s, &a).unwrap().max_abs_diff(&m.apply(&s).unwrap());
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn ideal_confusion_matrices() {
        let hw = HardwareParams::default();
        for (prep, meas) in [
            (Basis::Computational, Basis::Computational),
            (Basis::Superposition, Basis::Superposition),
        ] {
            let p = confusion_matrix_analytic(4, prep, meas, &hw).unwrap();
            for (i, row) in p.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9);
                }
            }
        }
        let p = confusion_matrix_analytic(4, Basis::Computational, Basis::Superposition, &hw).unwrap();
        assert!(p.iter().flatten().all(|v| (v - 0.25).abs() < 1e-9));
    }

    #[test]
    fn degraded_confusion_matches_propagation() {
        let hw = HardwareParams {
            delta_phi: 0.9 * PI,
            ..HardwareParams::default()
        };
        let oracle = confusion_matrix_analytic(4, Basis::Superposition, Basis::Superposition, &hw).unwrap();
        let modular = propagated_confusion(4, Basis::Superposition, Basis::Superposition, &hw).unwrap();
        for (a, b) in oracle.iter().flatten().zip(modular.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (i, row) in oracle.iter().enumerate() {
            assert!(row[i] < 1.0 - 1e-3);
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "lossless rows sum to one");
        }
        for row in renormalize_rows(&oracle) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_dump_lists_modes() {
        let hw = HardwareParams::default();
        let m = full_matrix(&build_measurement_chain(2, Basis::Computational, &hw).unwrap()).unwrap();
        let v = m.to_json();
        assert_eq!(v["inputs"].as_array().unwrap().len(), 2);
        assert_eq!(v["matrix"].as_array().unwrap().len(), 2);
    }
}
