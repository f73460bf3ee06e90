//! Band filtering, wavelet and empirical mode decompositions.

pub mod dwt;
pub mod emd;
pub mod filter;
mod spline;

pub use dwt::{dwt, dwt_with, dyadic_band, idwt, max_levels, Wavelet, WaveletCoefficients};
pub use emd::{emd, emd_denoise, emd_denoise_with, emd_with, EmdConfig, ImfSet};
pub use filter::{
    envelope, extract_rhythm, extract_rhythm_with, fft_bandpass, fft_bandpass_shaped, normalize,
    split_bands, split_bands_shaped, sub_stimulus_band, BandSpec, FilterShape, Rhythm,
    RhythmMethod, RhythmSpec, StimulusBand,
};
