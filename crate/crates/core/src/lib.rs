//! Multifractal analysis of EEG rhythms and audio stimuli.

pub mod audio;
pub mod config;
pub mod decompose;
pub mod error;
pub mod mfdfa;
pub mod numeric;
pub mod pipeline;
pub mod protocol;
pub mod report;
pub mod series;
pub mod spectrum;
pub mod synth;

pub use error::{Error, Result};
pub use series::{RandomSeed, TimeSeries};
