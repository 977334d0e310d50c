//! Simulator for single-shot measurement of ultrafast time-bin qudits.
//!
//! Photons live on a discrete mode space of picosecond fine bins,
//! nanosecond coarse offsets and two polarizations ([`hilbert`]). Optical
//! components act on that space through Jones calculus ([`elements`]) and are
//! assembled into preparation and measurement apparatus ([`chain`]). The
//! [`oracle`] compiles an apparatus to an explicit transfer matrix as an
//! independent check, [`montecarlo`] samples detection events, and
//! [`analysis`] turns counts into fidelities, QBER and secret key rates.

pub mod analysis;
pub mod chain;
pub mod config;
pub mod elements;
pub mod error;
pub mod hilbert;
pub mod montecarlo;
pub mod oracle;

pub use analysis::{
    build_report, key_rate_threshold, probabilities, qber, secret_key_rate, shannon_entropy_d,
    KeyRateReport,
};
pub use chain::{
    build_measurement_chain, mub_state, prepare_state, propagate, propagated_confusion,
    reference_state, reference_windows, routing_table, Apparatus, Basis, DetectionWindows,
    HardwareParams, PreparationSetting,
};
pub use config::{ScenarioConfig, SCHEMA_VERSION};
pub use elements::{apply_element, ups_jones, waveplate_jones, Element, JonesMatrix, PlateKind};
pub use error::{Error, Result};
pub use hilbert::{
    inner_product, make_basis_state, mode_probability, CoarseOffset, ModeLabel, PhotonicState,
    Polarization, TimeGrid,
};
pub use montecarlo::{
    run_experiment, CountMatrix, ExperimentConfig, ExperimentResults, NoiseModel, Outcome,
};
pub use oracle::{
    check_equivalence, confusion_matrix_analytic, full_matrix, random_state, ChainMatrix,
    EquivalenceReport, ModeBasis,
};
