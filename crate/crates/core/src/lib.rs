//! Musicological analysis toolkit.
//!
//! The crate parses symbolic music (Standard MIDI Files and the HTS text
//! format), extracts melodic, harmonic, structural and emotional features,
//! aligns scores to audio recordings with dynamic time warping, and
//! materializes everything as an RDF knowledge graph under the HaMSE
//! vocabulary, queryable through a basic-graph-pattern engine.

pub mod audio;
pub mod emotion;
pub mod harmony;
pub mod hts;
pub mod kg;
pub mod patterns;
pub mod rational;
pub mod score;
pub mod smf;
pub mod structure;

pub use score::{Beats, Score};
