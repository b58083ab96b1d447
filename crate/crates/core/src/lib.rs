//! Sampling and reconstruction of bandlimited fields by static and mobile
//! sensors on a periodic domain.

pub mod band;
pub mod error;
pub mod fft;
pub mod field;
pub mod ingest;
pub mod noise;
pub mod nonuniform;
pub mod quad;
pub mod reconstruction;
pub mod rng;
pub mod sampling;
pub mod spectral;
pub mod trajectory;
pub mod tv;

pub use band::BandRegion;
pub use error::{Error, Result};
pub use field::{synthesize_field, synthesize_field_on, HarmonicField};
pub use noise::{synthesize_noise, NoisePsd, NoiseRealization, ObservedField};
pub use reconstruction::{combine_orthogonal, reconstruct_1d, reconstruct_lattice, ReconKernel, ReconstructedField};
pub use sampling::{sample_line, sample_mobile, sample_static, SampleLattice, SampleSet, SamplingKernel};
pub use trajectory::{AffinePath, ParallelLineSet, Path, PerturbedPath, PiecewiseAffinePath};
