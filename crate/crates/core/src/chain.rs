//! Preparation and measurement apparatus built from hardware parameters.
//!
//! A measurement stage is a set of pumped switches (one per coarse arm), a
//! birefringent delay of `2^k` fine bins, a basis half-wave plate and a
//! polarization time delay. `log2(d)` stages sort every basis state of the
//! chosen basis into its own nanosecond bin.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elements::{apply_element, Element};
use crate::error::{Error, Result};
use crate::hilbert::{
    make_basis_state, CoarseOffset, ModeLabel, PhotonicState, Polarization, TimeGrid,
};

/// Polarization of prepared photons entering the measurement chain.
pub const SIGNAL_POL: Polarization = Polarization::H;

pub const DEFAULT_WINDOW_NS: f64 = 1.0;

pub const MAX_DIMENSION: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Computational,
    Superposition,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Computational, Basis::Superposition];

    pub fn index(self) -> usize {
        match self {
            Basis::Computational => 0,
            Basis::Superposition => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Basis::Computational),
            1 => Ok(Basis::Superposition),
            _ => Err(Error::IndexOutOfRange {
                index: i,
                dimension: 2,
            }),
        }
    }
}

/// Checks `d` is a supported power of two and returns `log2(d)`.
pub fn stage_count(d: usize) -> Result<usize> {
    if !(2..=MAX_DIMENSION).contains(&d) || !d.is_power_of_two() {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(d.trailing_zeros() as usize)
}

/// Physical parameters of the measurement hardware. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareParams {
    pub fine_pitch_ps: f64,
    /// Polarization time delays, one per stage. Missing stages are filled by
    /// [`HardwareParams::stage_delays`].
    pub coarse_delays: Vec<CoarseOffset>,
    /// Pump angle relative to the signal polarization.
    pub theta: f64,
    /// Nonlinear phase imprinted by the pump.
    pub delta_phi: f64,
    /// Extra phase on switched photons, per stage (missing entries are zero).
    pub extra_phase: Vec<f64>,
    /// Per-fine-bin phases applied before the first stage to undo `extra_phase`.
    pub phase_correction: Vec<f64>,
    /// Polarization whose fine bins the birefringent crystals shift down.
    pub delayed_pol: Polarization,
    /// Polarization sent through the long arm of each polarization time delay.
    pub time_delay_pol: Polarization,
    /// Basis half-wave plate angle, indexed by basis.
    pub basis_hwp: [f64; 2],
    pub window_width_ns: f64,
}

impl Default for HardwareParams {
    fn default() -> Self {
        HardwareParams {
            fine_pitch_ps: 2.25,
            coarse_delays: vec![CoarseOffset::from_ns(2.6), CoarseOffset::from_ns(5.6)],
            theta: FRAC_PI_4,
            delta_phi: PI,
            extra_phase: Vec::new(),
            phase_correction: Vec::new(),
            delayed_pol: Polarization::H,
            time_delay_pol: Polarization::V,
            basis_hwp: [0.0, FRAC_PI_8],
            window_width_ns: DEFAULT_WINDOW_NS,
        }
    }
}

impl HardwareParams {
    /// Same timing and polarization conventions with a perfect switch, no
    /// extra phases and nominal basis plates. Detection windows come from this.
    pub fn reference(&self) -> Self {
        HardwareParams {
            theta: FRAC_PI_4,
            delta_phi: PI,
            extra_phase: Vec::new(),
            phase_correction: Vec::new(),
            basis_hwp: [0.0, FRAC_PI_8],
            ..self.clone()
        }
    }

    /// Delays for `stages` stages. Unconfigured stages get
    /// `sum(previous) + first`, which keeps every subset sum distinct and at
    /// least one first-stage delay apart.
    pub fn stage_delays(&self, stages: usize) -> Result<Vec<CoarseOffset>> {
        let mut delays: Vec<CoarseOffset> = self.coarse_delays.iter().take(stages).copied().collect();
        let first = *delays
            .first()
            .ok_or_else(|| Error::Config("at least one coarse delay is required".into()))?;
        while delays.len() < stages {
            let sum = delays.iter().fold(CoarseOffset::ZERO, |acc, &d| acc + d);
            delays.push(sum + first);
        }
        Ok(delays)
    }

    pub fn grid(&self, d: usize) -> Result<TimeGrid> {
        let stages = stage_count(d)?;
        TimeGrid::new(self.fine_pitch_ps, d, self.stage_delays(stages)?)
    }
}

/// Ordered optical elements on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Apparatus {
    pub grid: TimeGrid,
    pub stage_count: usize,
    pub elements: Vec<Element>,
}

impl Apparatus {
    pub fn new(grid: TimeGrid, stage_count: usize, elements: Vec<Element>) -> Self {
        Apparatus {
            grid,
            stage_count,
            elements,
        }
    }

    pub fn dimension(&self) -> usize {
        self.grid.dimension
    }

    pub fn is_lossless(&self) -> bool {
        self.elements.iter().all(Element::is_lossless)
    }
}

/// `|t_m>` in the signal polarization.
pub fn time_bin_state(grid: &TimeGrid, m: usize) -> Result<PhotonicState> {
    check_index(m, grid.dimension)?;
    make_basis_state(grid, ModeLabel::time_bin(m, SIGNAL_POL))
}

/// Fourier-type MUB element `sum_m exp(2 pi i n m / d) |t_m> / sqrt(d)`.
pub fn mub_state(grid: &TimeGrid, n: usize) -> Result<PhotonicState> {
    let d = grid.dimension;
    check_index(n, d)?;
    let norm = 1.0 / (d as f64).sqrt();
    PhotonicState::from_amplitudes(
        grid,
        (0..d).map(|m| {
            let phase = 2.0 * PI * ((n * m) % d) as f64 / d as f64;
            (ModeLabel::time_bin(m, SIGNAL_POL), Complex64::from_polar(norm, phase))
        }),
    )
}

/// Real sign-pattern superposition state `sum_m (-1)^{popcount(n & m)} |t_m> / sqrt(d)`.
///
/// For d = 4 these are the four superposition states measured by the chain.
pub fn walsh_state(grid: &TimeGrid, n: usize) -> Result<PhotonicState> {
    let d = grid.dimension;
    check_index(n, d)?;
    let norm = 1.0 / (d as f64).sqrt();
    PhotonicState::from_amplitudes(
        grid,
        (0..d).map(|m| {
            let sign = if (n & m).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            (ModeLabel::time_bin(m, SIGNAL_POL), Complex64::new(sign * norm, 0.0))
        }),
    )
}

/// Ideal basis state `i` of `basis`: `|t_i>` or the real superposition state.
pub fn reference_state(grid: &TimeGrid, basis: Basis, i: usize) -> Result<PhotonicState> {
    match basis {
        Basis::Computational => time_bin_state(grid, i),
        Basis::Superposition => walsh_state(grid, i),
    }
}

fn check_index(i: usize, d: usize) -> Result<()> {
    if i >= d {
        return Err(Error::IndexOutOfRange {
            index: i,
            dimension: d,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationSetting {
    pub basis: Basis,
    pub index: usize,
    /// One half-wave plate angle per preparation stage, radians.
    pub hwp_angles: Vec<f64>,
}

impl PreparationSetting {
    /// Plate angles producing basis state `index`: bit `k` of the index picks
    /// the stage-`k` angle (+/-22.5 deg for time bins, 0/45 deg for superpositions).
    pub fn reference(d: usize, basis: Basis, index: usize) -> Result<Self> {
        let stages = stage_count(d)?;
        check_index(index, d)?;
        let hwp_angles = (0..stages)
            .map(|k| {
                let bit = (index >> k) & 1 == 1;
                match (basis, bit) {
                    (Basis::Computational, false) => FRAC_PI_8,
                    (Basis::Computational, true) => -FRAC_PI_8,
                    (Basis::Superposition, false) => 0.0,
                    (Basis::Superposition, true) => FRAC_PI_4,
                }
            })
            .collect();
        Ok(PreparationSetting {
            basis,
            index,
            hwp_angles,
        })
    }
}

/// HWP / birefringent crystal at 45 deg / PBS cascade. The photon enters in the
/// last fine bin; each crystal sends its diagonal component `2^k` bins earlier.
pub fn build_preparation(setting: &PreparationSetting, grid: &TimeGrid) -> Result<Apparatus> {
    let stages = stage_count(grid.dimension)?;
    if setting.hwp_angles.len() != stages {
        return Err(Error::Shape {
            expected: stages,
            actual: setting.hwp_angles.len(),
        });
    }
    let mut elements = Vec::with_capacity(5 * stages);
    for (k, &angle) in setting.hwp_angles.iter().enumerate() {
        elements.push(Element::half_wave(angle));
        // crystal axes at 45 deg: conjugate by the plate that swaps H/V with D/A
        elements.push(Element::half_wave(FRAC_PI_8));
        elements.push(Element::BirefringentDelay {
            shift_bins: 1 << k,
            delayed: Polarization::H,
        });
        elements.push(Element::half_wave(FRAC_PI_8));
        elements.push(Element::PolarizingSplitter { kept: SIGNAL_POL });
    }
    Ok(Apparatus::new(grid.clone(), stages, elements))
}

/// Simulates the preparation optics. The result is subnormalized by the
/// post-selecting splitters (squared norm `1/d`).
pub fn prepare_state(setting: &PreparationSetting, grid: &TimeGrid) -> Result<PhotonicState> {
    let apparatus = build_preparation(setting, grid)?;
    let input = make_basis_state(grid, ModeLabel::time_bin(grid.dimension - 1, SIGNAL_POL))?;
    propagate(&input, &apparatus)
}

pub fn build_measurement_chain(d: usize, basis: Basis, hw: &HardwareParams) -> Result<Apparatus> {
    let stages = stage_count(d)?;
    let grid = hw.grid(d)?;
    let delays = grid.coarse_delays.clone();
    let mut elements = Vec::new();
    if !hw.phase_correction.is_empty() {
        elements.push(Element::PhaseCorrector {
            phases: hw.phase_correction.clone(),
        });
    }

    // (coarse offset, polarization carried there by the ideal state)
    let mut arms = vec![(CoarseOffset::ZERO, SIGNAL_POL)];
    for (k, &delay) in delays.iter().enumerate() {
        let step = 1usize << k;
        for &(arm, pol) in &arms {
            // The unswitched pulse of each pair must be the one the crystal moves
            // down, so the switched pulse is the lower one exactly when the arm
            // already carries the shifted polarization.
            let switch_upper = pol != hw.delayed_pol;
            let targets = (0..d)
                .filter(|b| b % step == 0 && ((b >> k) & 1 == 1) == switch_upper)
                .map(|b| b as i32)
                .collect();
            elements.push(Element::UltrafastSwitch {
                targets,
                coarse_offset: (k > 0).then_some(arm),
                theta: hw.theta,
                delta_phi: hw.delta_phi,
                extra_phase: hw.extra_phase.get(k).copied().unwrap_or(0.0),
            });
        }
        elements.push(Element::BirefringentDelay {
            shift_bins: step as u32,
            delayed: hw.delayed_pol,
        });
        elements.push(Element::half_wave(hw.basis_hwp[basis.index()]));
        elements.push(Element::PolarizationTimeDelay {
            offset: delay,
            delayed: hw.time_delay_pol,
        });
        arms = arms
            .iter()
            .flat_map(|&(arm, _)| {
                [
                    (arm, hw.time_delay_pol.orthogonal()),
                    (arm + delay, hw.time_delay_pol),
                ]
            })
            .collect();
    }
    Ok(Apparatus::new(grid, stages, elements))
}

pub fn propagate(s: &PhotonicState, apparatus: &Apparatus) -> Result<PhotonicState> {
    if s.grid() != &apparatus.grid {
        return Err(Error::GridMismatch);
    }
    apparatus
        .elements
        .iter()
        .try_fold(s.clone(), |state, e| apply_element(&state, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub outcome: usize,
    pub center: CoarseOffset,
    pub width_ns: f64,
}

impl Window {
    pub fn contains_ps(&self, t_ps: f64) -> bool {
        let half = self.width_ns * 500.0;
        let c = self.center.0 as f64;
        t_ps >= c - half && t_ps < c + half
    }
}

/// One detection window per outcome, indexed by outcome label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionWindows {
    pub windows: Vec<Window>,
}

impl DetectionWindows {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Outcome whose window contains the arrival time.
    pub fn locate(&self, t_ps: f64) -> Option<usize> {
        self.windows
            .iter()
            .find(|w| w.contains_ps(t_ps))
            .map(|w| w.outcome)
    }

    /// Probability of a click in each window; the remainder is lost or unwindowed.
    pub fn probabilities(&self, s: &PhotonicState) -> Vec<f64> {
        let grid = s.grid();
        let mut p = vec![0.0; self.windows.len()];
        for (m, a) in s.iter() {
            if let Some(j) = self.locate(grid.arrival_ps(m)) {
                p[j] += a.norm_sqr();
            }
        }
        p
    }

    /// Earliest and latest window edges, in picoseconds.
    pub fn span_ps(&self) -> (f64, f64) {
        let half = |w: &Window| w.width_ns * 500.0;
        let lo = self
            .windows
            .iter()
            .map(|w| w.center.0 as f64 - half(w))
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .windows
            .iter()
            .map(|w| w.center.0 as f64 + half(w))
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Derives outcome windows by sending each ideal basis state through the
/// apparatus and taking the coarse bin that collects most of its probability.
pub fn routing_table(apparatus: &Apparatus, basis: Basis, width_ns: f64) -> Result<DetectionWindows> {
    if !(width_ns.is_finite() && width_ns > 0.0) {
        return Err(Error::Domain {
            name: "window_width_ns",
            value: width_ns,
            domain: "(0, inf)",
        });
    }
    let grid = &apparatus.grid;
    let width_ps = width_ns * 1000.0;
    let mut windows: Vec<Window> = Vec::with_capacity(grid.dimension);
    for i in 0..grid.dimension {
        let out = propagate(&reference_state(grid, basis, i)?, apparatus)?;
        let center = out
            .coarse_distribution()
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| c)
            .ok_or_else(|| Error::InvalidRouting {
                element: "apparatus".into(),
                mode: ModeLabel::time_bin(i, SIGNAL_POL),
            })?;
        if let Some(prev) = windows
            .iter()
            .find(|w| ((w.center.0 - center.0).abs() as f64) < width_ps)
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

/// Windows of the ideal chain for `(d, basis)`; these do not depend on switch quality.
pub fn reference_windows(d: usize, basis: Basis, hw: &HardwareParams) -> Result<DetectionWindows> {
    let ideal = build_measurement_chain(d, basis, &hw.reference())?;
    routing_table(&ideal, basis, hw.window_width_ns)
}

/// Confusion matrix computed by state propagation: row `i` is the windowed
/// click distribution for prepared state `i` of `prep` measured in `meas`.
pub fn propagated_confusion(
    d: usize,
    prep: Basis,
    meas: Basis,
    hw: &HardwareParams,
) -> Result<Vec<Vec<f64>>> {
    let chain = build_measurement_chain(d, meas, hw)?;
    let windows = reference_windows(d, meas, hw)?;
    (0..d)
        .map(|i| {
            let out = propagate(&reference_state(&chain.grid, prep, i)?, &chain)?;
            Ok(windows.probabilities(&out))
        })
        .collect()
}
