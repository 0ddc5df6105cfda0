//! Frequency-domain grid impedance analysis.
//!
//! The crate turns measured grid-impedance frequency sweeps into rational
//! impedance models, composes them with LCL-filter and inverter impedances
//! at a single point of common coupling, locates series/parallel resonances,
//! quantifies harmonic magnification under grid uncertainty, and checks
//! harmonic spectra against per-order limits.
//!
//! Pipeline stages map onto the modules:
//!
//! - [`ingest`]: parse and validate sweep CSVs, polar views, negative-reactance
//!   ranges, multi-snapshot envelopes, outlier scores.
//! - [`fitting`]: iterative pole-relocation least-squares fit of a sweep to a
//!   stable pole-residue model, plus evaluation and passivity scanning.
//! - [`network`]: impedance expression trees, LCL filter branches, and the
//!   single-node harmonic circuit (current injection / background voltage).
//! - [`resonance`]: dense scans for series/parallel resonances, drift across
//!   snapshots, branch-count sweeps, magnification maps.
//! - [`harmonics`]: harmonic spectra, propagation through the node, percent
//!   of fundamental, THD, limit-table compliance.
//! - [`synth`]: deterministic synthetic sweep sets standing in for field data.
//!
//! All types are immutable after construction and safe to share across
//! threads; every operation here is a pure function of its inputs.

pub mod fitting;
pub mod harmonics;
pub mod ingest;
pub mod network;
pub mod resonance;
pub mod synth;

pub use num_complex::Complex64;
