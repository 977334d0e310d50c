//! Discrete mode space of a time-bin photon.
//!
//! A mode is a (fine bin, coarse offset, polarization) triple. Fine bins are the
//! picosecond-scale slots that carry the qudit; coarse offsets are the
//! nanosecond-scale shifts introduced by polarization time delays and are kept
//! as integer picoseconds so that bin identity is exact.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes below this magnitude are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Slack allowed on the squared norm of a (sub)normalized state.
pub const NORM_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn orthogonal(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    /// Row/column index in a Jones matrix.
    pub fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Polarization::H
        } else {
            Polarization::V
        }
    }

    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

/// Nanosecond-scale time offset, stored exactly as integer picoseconds.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct CoarseOffset(pub i64);

impl CoarseOffset {
    pub const ZERO: CoarseOffset = CoarseOffset(0);

    pub fn from_ns(ns: f64) -> Self {
        CoarseOffset((ns * 1000.0).round() as i64)
    }

    pub fn picos(self) -> i64 {
        self.0
    }

    pub fn as_ns(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl Add for CoarseOffset {
    type Output = CoarseOffset;
    fn add(self, rhs: Self) -> Self {
        CoarseOffset(self.0 + rhs.0)
    }
}

impl Sub for CoarseOffset {
    type Output = CoarseOffset;
    fn sub(self, rhs: Self) -> Self {
        CoarseOffset(self.0 - rhs.0)
    }
}

impl Neg for CoarseOffset {
    type Output = CoarseOffset;
    fn neg(self) -> Self {
        CoarseOffset(-self.0)
    }
}

impl fmt::Display for CoarseOffset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ps", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    pub fine_bin: i32,
    pub coarse_offset: CoarseOffset,
    pub pol: Polarization,
}

impl ModeLabel {
    pub fn new(fine_bin: i32, coarse_offset: CoarseOffset, pol: Polarization) -> Self {
        ModeLabel {
            fine_bin,
            coarse_offset,
            pol,
        }
    }

    /// Encoding mode `|t_m>` at zero coarse offset.
    pub fn time_bin(m: usize, pol: Polarization) -> Self {
        ModeLabel::new(m as i32, CoarseOffset::ZERO, pol)
    }

    pub fn with_pol(self, pol: Polarization) -> Self {
        ModeLabel { pol, ..self }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(t{}, {}, {})", self.fine_bin, self.coarse_offset, self.pol)
    }
}

/// Fine/coarse timing layout shared by every state and element of a simulation.
///
/// Encoding bins are `0..dimension`. Birefringent delays move amplitude towards
/// lower bin indices, so propagation may also populate the guard bins
/// `-(dimension-1)..0`; those are routable but cannot be used to build states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub fine_pitch_ps: f64,
    pub dimension: usize,
    pub coarse_delays: Vec<CoarseOffset>,
}

impl TimeGrid {
    pub fn new(fine_pitch_ps: f64, dimension: usize, coarse_delays: Vec<CoarseOffset>) -> Result<Self> {
        let grid = TimeGrid {
            fine_pitch_ps,
            dimension,
            coarse_delays,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fine_pitch_ps.is_finite() && self.fine_pitch_ps > 0.0) {
            return Err(Error::Domain {
                name: "fine_pitch_ps",
                value: self.fine_pitch_ps,
                domain: "(0, inf)",
            });
        }
        if self.dimension < 2 {
            return Err(Error::Domain {
                name: "dimension",
                value: self.dimension as f64,
                domain: "[2, inf)",
            });
        }
        if let Some(bad) = self.coarse_delays.iter().find(|d| d.0 < 0) {
            return Err(Error::Domain {
                name: "coarse_delay_ps",
                value: bad.0 as f64,
                domain: "[0, inf)",
            });
        }
        // The whole fine structure must sit well inside one coarse bin.
        let extent = self.fine_extent_ps();
        if let Some(min) = self.coarse_delays.iter().filter(|d| d.0 > 0).min() {
            if 10.0 * extent > min.0 as f64 {
                return Err(Error::Config(format!(
                    "fine structure spans {extent} ps, too close to the {} ps coarse delay",
                    min.0
                )));
            }
        }
        Ok(())
    }

    /// Time spanned by all routable fine bins, in picoseconds.
    pub fn fine_extent_ps(&self) -> f64 {
        (2 * self.dimension - 1) as f64 * self.fine_pitch_ps
    }

    /// Lowest fine bin that propagation may reach.
    pub fn min_routable_bin(&self) -> i32 {
        -(self.dimension as i32 - 1)
    }

    /// All coarse offsets reachable as sums of subsets of the configured delays.
    pub fn coarse_offsets(&self) -> Vec<CoarseOffset> {
        let mut sums = vec![CoarseOffset::ZERO];
        for &d in &self.coarse_delays {
            let shifted: Vec<_> = sums.iter().map(|&s| s + d).collect();
            sums.extend(shifted);
        }
        sums.sort();
        sums.dedup();
        sums
    }

    pub fn is_known_offset(&self, offset: CoarseOffset) -> bool {
        self.coarse_offsets().binary_search(&offset).is_ok()
    }

    /// Valid for building states: an encoding bin at a known coarse offset.
    pub fn is_encoding_mode(&self, label: &ModeLabel) -> bool {
        label.fine_bin >= 0
            && (label.fine_bin as usize) < self.dimension
            && self.is_known_offset(label.coarse_offset)
    }

    /// Valid as the output of any element.
    pub fn is_routable(&self, label: &ModeLabel) -> bool {
        label.fine_bin >= self.min_routable_bin()
            && (label.fine_bin as i64) < self.dimension as i64
            && self.is_known_offset(label.coarse_offset)
    }

    /// Arrival time of a mode in picoseconds relative to `t_0` at zero offset.
    pub fn arrival_ps(&self, label: &ModeLabel) -> f64 {
        label.coarse_offset.0 as f64 + label.fine_bin as f64 * self.fine_pitch_ps
    }
}

/// Pure state over the mode space. Loss is tracked by subnormalization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonicState {
    grid: TimeGrid,
    #[serde(serialize_with = "serialize_amplitudes")]
    amplitudes: BTreeMap<ModeLabel, Complex64>,
}

fn serialize_amplitudes<S: serde::Serializer>(
    amps: &BTreeMap<ModeLabel, Complex64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(amps.len()))?;
    for (mode, a) in amps {
        seq.serialize_element(&(mode, [a.re, a.im]))?;
    }
    seq.end()
}

impl PhotonicState {
    pub fn vacuum(grid: &TimeGrid) -> Self {
        PhotonicState {
            grid: grid.clone(),
            amplitudes: BTreeMap::new(),
        }
    }

    /// Builds a state from explicit amplitudes on encoding modes. Repeated modes add up.
    pub fn from_amplitudes<I>(grid: &TimeGrid, amplitudes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ModeLabel, Complex64)>,
    {
        let mut state = PhotonicState::vacuum(grid);
        for (mode, a) in amplitudes {
            if !grid.is_encoding_mode(&mode) {
                return Err(Error::InvalidMode(mode));
            }
            state.accumulate(mode, a);
        }
        state.prune();
        Ok(state)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn amplitude(&self, mode: &ModeLabel) -> Complex64 {
        self.amplitudes.get(mode).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeLabel, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn modes(&self) -> impl Iterator<Item = &ModeLabel> {
        self.amplitudes.keys()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Unit-norm copy, or `None` for the vacuum.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n <= PRUNE_THRESHOLD {
            return None;
        }
        Some(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = PhotonicState {
            grid: self.grid.clone(),
            amplitudes: self.amplitudes.iter().map(|(m, a)| (*m, a * c)).collect(),
        };
        out.prune();
        out
    }

    pub fn try_add(&self, other: &PhotonicState) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        for (m, a) in &other.amplitudes {
            out.accumulate(*m, *a);
        }
        out.prune();
        Ok(out)
    }

    /// Largest amplitude difference over the union of supports.
    pub fn max_abs_diff(&self, other: &PhotonicState) -> f64 {
        self.amplitudes
            .keys()
            .chain(other.amplitudes.keys())
            .map(|m| (self.amplitude(m) - other.amplitude(m)).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn accumulate(&mut self, mode: ModeLabel, a: Complex64) {
        *self.amplitudes.entry(mode).or_default() += a;
    }

    pub(crate) fn prune(&mut self) {
        self.amplitudes.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    }

    /// Total probability per coarse offset.
    pub fn coarse_distribution(&self) -> BTreeMap<CoarseOffset, f64> {
        let mut out = BTreeMap::new();
        for (m, a) in &self.amplitudes {
            *out.entry(m.coarse_offset).or_insert(0.0) += a.norm_sqr();
        }
        out
    }
}

pub fn make_basis_state(grid: &TimeGrid, label: ModeLabel) -> Result<PhotonicState> {
    PhotonicState::from_amplitudes(grid, [(label, Complex64::new(1.0, 0.0))])
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner_product(a: &PhotonicState, b: &PhotonicState) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(a.amplitudes
        .iter()
        .filter_map(|(m, x)| b.amplitudes.get(m).map(|y| x.conj() * y))
        .sum())
}

pub fn mode_probability<P>(state: &PhotonicState, mut predicate: P) -> f64
where
    P: FnMut(&ModeLabel) -> bool,
{
    state
        .amplitudes
        .iter()
        .filter(|(m, _)| predicate(m))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}
