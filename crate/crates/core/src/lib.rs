//! Nearly non-redundant (NNR) image sampling and bounded-spectrum (BS)
//! reconstruction.
//!
//! An image is sampled at a rate set by the area of a standard spectral
//! energy-compaction zone and recovered by alternating between that zone
//! in the DCT domain and the measured samples in the image domain.

pub mod error;
pub mod image;
pub mod inverse;
pub mod metrics;
pub mod reconstruct;
pub mod sampler;
pub mod transforms;
pub mod zones;

pub use error::{Error, Result};
pub use image::{decode_pgm, encode_pgm, read_pgm, write_pgm, ImageGrid};
pub use metrics::{psnr, rms_error, trimmed_rms, ErrorStats};
pub use transforms::{dct2, dft2, idct2, idft2, SpectrumGrid, SpectrumKind};
