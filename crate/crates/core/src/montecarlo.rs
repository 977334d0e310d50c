//! Shot-by-shot detection experiment with a weak coherent source.
//!
//! Each shot draws a Poisson photon number, applies independent Bernoulli
//! losses, places every surviving photon in an output mode according to the
//! propagated state, blurs its arrival time with Gaussian detector jitter and
//! adds dark counts. The detector is not photon-number resolving: the earliest
//! click inside any detection window decides the outcome.
//!
//! Every (prepared basis, measured basis, prepared index) cell draws from its
//! own ChaCha stream, so results depend only on the seed, not on thread count.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{
    build_measurement_chain, prepare_state, propagate, reference_windows, Apparatus, Basis,
    DetectionWindows, HardwareParams, PreparationSetting,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub mean_photon_number: f64,
    /// Gaussian standard deviation of the detector timing jitter.
    pub jitter_sigma_ps: f64,
    pub dark_count_rate_hz: f64,
    /// Independent survival probabilities, by element name.
    pub transmissions: BTreeMap<String, f64>,
    pub rep_rate_hz: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            mean_photon_number: 0.14,
            jitter_sigma_ps: 350.0,
            dark_count_rate_hz: 0.0,
            transmissions: [("smf1", 0.80), ("smf2", 0.76), ("detector", 1.0)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            rep_rate_hz: 80e6,
        }
    }
}

impl NoiseModel {
    /// Only the photon-number statistics: no jitter, no dark counts, no loss.
    pub fn ideal(mean_photon_number: f64) -> Self {
        NoiseModel {
            mean_photon_number,
            jitter_sigma_ps: 0.0,
            dark_count_rate_hz: 0.0,
            transmissions: BTreeMap::new(),
            rep_rate_hz: 80e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64, ok: bool, domain: &'static str| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain {
                    name,
                    value: v,
                    domain,
                })
            }
        };
        check("mean_photon_number", self.mean_photon_number, self.mean_photon_number >= 0.0, "[0, inf)")?;
        check("jitter_sigma_ps", self.jitter_sigma_ps, self.jitter_sigma_ps >= 0.0, "[0, inf)")?;
        check("dark_count_rate_hz", self.dark_count_rate_hz, self.dark_count_rate_hz >= 0.0, "[0, inf)")?;
        check("rep_rate_hz", self.rep_rate_hz, self.rep_rate_hz > 0.0, "(0, inf)")?;
        for &t in self.transmissions.values() {
            check("transmission", t, (0.0..=1.0).contains(&t), "[0, 1]")?;
        }
        Ok(())
    }

    pub fn total_transmission(&self) -> f64 {
        self.transmissions.values().product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Window(usize),
    NoWindow,
}

/// Precomputed per-shot sampling tables for one prepared state and apparatus.
#[derive(Debug, Clone)]
pub struct ShotModel {
    /// (arrival time in ps, cumulative probability)
    arrivals: Vec<(f64, f64)>,
    survival: Vec<f64>,
    windows: DetectionWindows,
    photons: Option<Poisson<f64>>,
    jitter: Option<Normal<f64>>,
    dark_counts: Option<Poisson<f64>>,
    frame_ps: (f64, f64),
}

impl ShotModel {
    pub fn new(
        prep: &PreparationSetting,
        apparatus: &Apparatus,
        windows: &DetectionWindows,
        noise: &NoiseModel,
    ) -> Result<Self> {
        noise.validate()?;
        let prepared = prepare_state(prep, &apparatus.grid)?
            .normalized()
            .ok_or_else(|| Error::Config("preparation blocks every photon".into()))?;
        let out = propagate(&prepared, apparatus)?;
        let grid = &apparatus.grid;
        let mut acc = 0.0;
        let arrivals = out
            .iter()
            .map(|(m, a)| {
                acc += a.norm_sqr();
                (grid.arrival_ps(m), acc)
            })
            .collect();

        let (lo, hi) = windows.span_ps();
        let frame_len = (1e12 / noise.rep_rate_hz).max(hi - lo);
        let dark_mean = noise.dark_count_rate_hz * frame_len * 1e-12;

        Ok(ShotModel {
            arrivals,
            survival: noise.transmissions.values().copied().collect(),
            windows: windows.clone(),
            photons: poisson(noise.mean_photon_number)?,
            jitter: if noise.jitter_sigma_ps > 0.0 {
                Some(Normal::new(0.0, noise.jitter_sigma_ps).map_err(|e| Error::Config(e.to_string()))?)
            } else {
                None
            },
            dark_counts: poisson(dark_mean)?,
            frame_ps: (lo, frame_len),
        })
    }

    pub fn windows(&self) -> &DetectionWindows {
        &self.windows
    }
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean > 0.0 {
        Poisson::new(mean)
            .map(Some)
            .map_err(|e| Error::Config(e.to_string()))
    } else {
        Ok(None)
    }
}

/// One laser pulse. `None` means the detector did not click.
pub fn sample_shot<R: Rng + ?Sized>(model: &ShotModel, rng: &mut R) -> Option<Outcome> {
    let mut earliest_in_window: Option<(f64, usize)> = None;
    let mut any_click = false;
    let mut register = |t: f64| {
        any_click = true;
        if let Some(j) = model.windows.locate(t) {
            if earliest_in_window.is_none_or(|(t0, _)| t < t0) {
                earliest_in_window = Some((t, j));
            }
        }
    };

    let n = model.photons.map_or(0, |p| p.sample(rng) as u64);
    for _ in 0..n {
        if !model.survival.iter().all(|&t| rng.random::<f64>() < t) {
            continue;
        }
        let u: f64 = rng.random();
        let Some(&(t, _)) = model.arrivals.iter().find(|(_, cum)| u < *cum) else {
            continue;
        };
        let jitter = model.jitter.map_or(0.0, |j| j.sample(rng));
        register(t + jitter);
    }

    let dark = model.dark_counts.map_or(0, |p| p.sample(rng) as u64);
    for _ in 0..dark {
        let t = model.frame_ps.0 + rng.random::<f64>() * model.frame_ps.1;
        register(t);
    }

    match (earliest_in_window, any_click) {
        (Some((_, j)), _) => Some(Outcome::Window(j)),
        (None, true) => Some(Outcome::NoWindow),
        (None, false) => None,
    }
}

/// Detection counts for one (prepared basis, measured basis) pair.
///
/// `counts[i]` has `d + 1` entries: one per outcome window, then the
/// no-window bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountMatrix {
    pub prep_basis: Basis,
    pub meas_basis: Basis,
    pub counts: Vec<Vec<u64>>,
    /// Shots per prepared state.
    pub shots: u64,
    pub seed: u64,
}

impl CountMatrix {
    pub fn from_rows(prep_basis: Basis, meas_basis: Basis, counts: Vec<Vec<u64>>, shots: u64, seed: u64) -> Self {
        CountMatrix {
            prep_basis,
            meas_basis,
            counts,
            shots,
            seed,
        }
    }

    pub fn dimension(&self) -> usize {
        self.counts.len()
    }

    pub fn no_window(&self, row: usize) -> u64 {
        self.counts[row][self.dimension()]
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    /// `alpha,beta,i,j,count` rows; `j` is `none` for the no-window bucket.
    pub fn csv_rows(&self) -> Vec<String> {
        let d = self.dimension();
        let (a, b) = (self.prep_basis.index(), self.meas_basis.index());
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter().enumerate().map(move |(j, c)| {
                    let j = if j == d { "none".to_string() } else { j.to_string() };
                    format!("{a},{b},{i},{j},{c}")
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub hardware: HardwareParams,
    pub noise: NoiseModel,
    pub shots: u64,
    pub seed: u64,
    pub bases: Vec<(Basis, Basis)>,
}

impl ExperimentConfig {
    pub fn all_bases() -> Vec<(Basis, Basis)> {
        Basis::BOTH
            .iter()
            .flat_map(|&a| Basis::BOTH.iter().map(move |&b| (a, b)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub dimension: usize,
    pub seed: u64,
    pub tables: Vec<CountMatrix>,
}

impl ExperimentResults {
    pub fn get(&self, prep: usize, meas: usize) -> Option<&CountMatrix> {
        self.tables
            .iter()
            .find(|t| t.prep_basis.index() == prep && t.meas_basis.index() == meas)
    }
}

/// Stream id of one (prep basis, meas basis, index) cell.
fn cell_stream(prep: Basis, meas: Basis, index: usize, d: usize) -> u64 {
    ((prep.index() * 2 + meas.index()) * d + index) as u64
}

pub fn run_cell(model: &ShotModel, shots: u64, seed: u64, stream: u64, d: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut row = vec![0u64; d + 1];
    for _ in 0..shots {
        match sample_shot(model, &mut rng) {
            Some(Outcome::Window(j)) => row[j] += 1,
            Some(Outcome::NoWindow) => row[d] += 1,
            None => {}
        }
    }
    row
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    let d = config.dimension;
    config.noise.validate()?;
    if config.shots == 0 {
        return Err(Error::Config("shots must be positive".into()));
    }
    let tables = config
        .bases
        .iter()
        .map(|&(prep, meas)| {
            let chain = build_measurement_chain(d, meas, &config.hardware)?;
            let windows = reference_windows(d, meas, &config.hardware)?;
            let models = (0..d)
                .map(|i| {
                    let setting = PreparationSetting::reference(d, prep, i)?;
                    ShotModel::new(&setting, &chain, &windows, &config.noise)
                })
                .collect::<Result<Vec<_>>>()?;
            let counts = models
                .par_iter()
                .enumerate()
                .map(|(i, m)| run_cell(m, config.shots, config.seed, cell_stream(prep, meas, i, d), d))
                .collect();
            Ok(CountMatrix::from_rows(prep, meas, counts, config.shots, config.seed))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResults {
        dimension: d,
        seed: config.seed,
        tables,
    })
}
