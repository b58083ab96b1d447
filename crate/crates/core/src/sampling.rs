//! Lattice sampling of observed fields: static sensors, mobile sensors with a
//! time-domain anti-aliasing filter, and additive measurement noise.
//!
//! Along a line traversed at speed `v`, a temporal filter with response
//! `H(xi)` acts on the spatial harmonic `omega` as `H(v omega)`; kernels here
//! are stated directly in spatial frequency. Filters are applied exactly, one
//! harmonic at a time, and samples on a lattice that tiles the periodic domain
//! are obtained by folding harmonics onto DFT bins.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftDirection;

use crate::band::BandRegion;
use crate::error::{param, Error, Result};
use crate::fft::fft2;
use crate::field::{band_tag, HarmonicField};
use crate::noise::ObservedField;
use crate::quad::sine_integral;
use crate::rng::rng;
use crate::trajectory::ParallelLineSet;

/// Anti-aliasing kernel acting along the direction of motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingKernel {
    /// Point sampling, `H = 1` everywhere.
    None,
    /// `H = 1` on `|omega| <= cutoff`, 0 outside.
    IdealLowpass { cutoff: f64 },
    /// Box of height `kappa` on `|x| < half_width`; `H(omega) =
    /// (kappa half_width / pi) sinc(half_width omega / pi)`.
    Boxcar { half_width: f64, kappa: f64 },
}

impl SamplingKernel {
    pub fn ideal(cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(param(format!("lowpass cutoff must be positive, got {cutoff}")));
        }
        Ok(SamplingKernel::IdealLowpass { cutoff })
    }

    /// Box filter normalized for the field band `[-rho, rho]`.
    pub fn boxcar(half_width: f64, rho: f64) -> Result<Self> {
        Ok(SamplingKernel::Boxcar { half_width, kappa: kappa(half_width, rho)? })
    }

    pub fn response(&self, w: f64) -> f64 {
        match *self {
            SamplingKernel::None => 1.0,
            SamplingKernel::IdealLowpass { cutoff } => {
                if w.abs() <= cutoff * (1.0 + 1e-12) {
                    1.0
                } else {
                    0.0
                }
            }
            SamplingKernel::Boxcar { half_width, kappa } => kappa * half_width / PI * sinc(half_width * w / PI),
        }
    }

    pub fn tag(&self) -> String {
        match *self {
            SamplingKernel::None => "none".into(),
            SamplingKernel::IdealLowpass { cutoff } => format!("ideal:{cutoff}"),
            SamplingKernel::Boxcar { half_width, kappa } => format!("box:{half_width}:{kappa}"),
        }
    }
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let a = PI * x;
        a.sin() / a
    }
}

/// `int_{-rho}^{rho} sinc^2(half_width omega / pi) d omega` in closed form.
pub fn sinc2_band_integral(half_width: f64, rho: f64) -> f64 {
    let x = half_width * rho;
    if x < 1e-4 {
        // series of Si(2x) - sin^2(x)/x = x - x^3/9 + 2x^5/225
        let x2 = x * x;
        return 2.0 * rho * (1.0 - x2 / 9.0 + 2.0 * x2 * x2 / 225.0);
    }
    2.0 / half_width * (sine_integral(2.0 * x) - x.sin().powi(2) / x)
}

/// Box-filter height making `int_Omega H_sam^2 = 4 rho^2` on the square band.
pub fn kappa(half_width: f64, rho: f64) -> Result<f64> {
    if !(half_width > 0.0 && half_width.is_finite() && rho > 0.0 && rho.is_finite()) {
        return Err(param(format!("kappa needs positive half-width and rho, got {half_width}, {rho}")));
    }
    let inner = half_width * half_width / (PI * PI) * sinc2_band_integral(half_width, rho);
    Ok((2.0 * rho).sqrt() / inner.sqrt())
}

/// Sample positions `Lambda n` with `n_i in [0, counts[i])`. The columns of
/// `generator` are the lattice basis vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleLattice {
    pub dim: usize,
    pub generator: [[f64; 2]; 2],
    pub counts: [usize; 2],
}

impl SampleLattice {
    pub fn rectangular(dx: f64, dy: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::general([[dx, 0.0], [0.0, dy]], [nx, ny])
    }

    pub fn line(dx: f64, n: usize) -> Result<Self> {
        if !(dx > 0.0) || n == 0 {
            return Err(Error::Lattice(format!("line lattice needs positive spacing and count, got {dx}, {n}")));
        }
        Ok(SampleLattice { dim: 1, generator: [[dx, 0.0], [0.0, 1.0]], counts: [n, 1] })
    }

    pub fn general(generator: [[f64; 2]; 2], counts: [usize; 2]) -> Result<Self> {
        let det = generator[0][0] * generator[1][1] - generator[0][1] * generator[1][0];
        if !(det.abs() > 0.0 && det.is_finite()) || counts.contains(&0) {
            return Err(Error::Lattice(format!("singular generator or empty index range (det = {det})")));
        }
        Ok(SampleLattice { dim: 2, generator, counts })
    }

    pub fn point(&self, n: [usize; 2]) -> [f64; 2] {
        let g = &self.generator;
        let (a, b) = (n[0] as f64, n[1] as f64);
        if self.dim == 1 {
            return [g[0][0] * a, 0.0];
        }
        [g[0][0] * a + g[0][1] * b, g[1][0] * a + g[1][1] * b]
    }

    pub fn len(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_rectangular(&self) -> bool {
        self.generator[0][1] == 0.0 && self.generator[1][0] == 0.0
    }

    /// Diagonal spacings of a rectangular lattice.
    pub fn spacing(&self) -> [f64; 2] {
        [self.generator[0][0], self.generator[1][1]]
    }

    /// Cell volume `|det Lambda|` (length for 1-D lattices).
    pub fn cell_volume(&self) -> f64 {
        let g = &self.generator;
        if self.dim == 1 {
            g[0][0].abs()
        } else {
            (g[0][0] * g[1][1] - g[0][1] * g[1][0]).abs()
        }
    }

    /// True when the lattice is rectangular and exactly covers one period.
    pub fn tiles(&self, lengths: [f64; 2]) -> bool {
        self.is_rectangular()
            && (0..self.dim).all(|i| {
                let covered = self.counts[i] as f64 * self.generator[i][i];
                (covered - lengths[i]).abs() <= 1e-9 * lengths[i]
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Static,
    Mobile,
}

/// Lattice samples `mu[n]`, row-major with the second index outer.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub lattice: SampleLattice,
    pub values: Vec<f64>,
    pub kernel: SamplingKernel,
    /// Axis the kernel acts along, `None` for static sampling.
    pub motion_axis: Option<usize>,
    pub scheme: Scheme,
    pub oversample: usize,
    pub seed: Option<u64>,
    /// Band regions of the sampled components (used for alias bookkeeping).
    pub support: Vec<BandRegion>,
    pub lengths: [f64; 2],
}

impl SampleSet {
    pub fn value(&self, n: [usize; 2]) -> f64 {
        self.values[n[1] * self.lattice.counts[0] + n[0]]
    }

    /// Copy whose values are replaced (same lattice and provenance).
    pub fn with_values(&self, values: Vec<f64>) -> Result<SampleSet> {
        if values.len() != self.values.len() {
            return Err(param("value count does not match the lattice"));
        }
        Ok(SampleSet { values, ..self.clone() })
    }

    /// CSV with columns `n_x,n_y,x,y,value` after `#` metadata lines.
    pub fn export_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let g = &self.lattice.generator;
        writeln!(
            out,
            "# lattice={},{};{},{} counts={},{} kernel={} axis={} scheme={:?} oversample={} seed={}",
            g[0][0],
            g[0][1],
            g[1][0],
            g[1][1],
            self.lattice.counts[0],
            self.lattice.counts[1],
            self.kernel.tag(),
            self.motion_axis.map_or("none".to_string(), |a| a.to_string()),
            self.scheme,
            self.oversample,
            self.seed.map_or("none".to_string(), |s| s.to_string()),
        )?;
        let bands: Vec<String> = self.support.iter().map(band_tag).collect();
        writeln!(out, "# support={}", bands.join(";"))?;
        writeln!(out, "n_x,n_y,x,y,value")?;
        for ny in 0..self.lattice.counts[1] {
            for nx in 0..self.lattice.counts[0] {
                let p = self.lattice.point([nx, ny]);
                writeln!(out, "{nx},{ny},{:.17e},{:.17e},{:.17e}", p[0], p[1], self.value([nx, ny]))?;
            }
        }
        Ok(())
    }
}

/// Applies a kernel along `axis` to every harmonic of `field`.
pub fn filter_field(field: &HarmonicField, kernel: SamplingKernel, axis: usize) -> HarmonicField {
    field.map(|_, w, c| c * kernel.response(w[axis]))
}

fn lattice_samples(nu: &ObservedField, lattice: &SampleLattice, weight: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let lengths = nu.lengths();
    if lattice.tiles(lengths) {
        let [nx, ny] = lattice.counts;
        let mut bins = vec![Complex64::new(0.0, 0.0); nx * ny];
        for f in nu.components() {
            for (b, c) in bins.iter_mut().zip(f.fold(nx, ny, &weight)) {
                *b += c;
            }
        }
        fft2(&mut bins, nx, ny, FftDirection::Inverse);
        return bins.into_iter().map(|c| c.re).collect();
    }
    let filtered: Vec<HarmonicField> = nu.components().map(|f| f.map(|_, w, c| c * weight(w))).collect();
    let mut out = Vec::with_capacity(lattice.len());
    for ny in 0..lattice.counts[1] {
        for nx in 0..lattice.counts[0] {
            let p = lattice.point([nx, ny]);
            out.push(filtered.iter().map(|f| f.eval(p)).sum());
        }
    }
    out
}

/// `mu[n] = nu(Lambda n)`.
pub fn sample_static(nu: &ObservedField, lattice: &SampleLattice) -> Result<SampleSet> {
    if lattice.dim != nu.dim() {
        return Err(Error::Lattice(format!("lattice dimension {} vs field dimension {}", lattice.dim, nu.dim())));
    }
    let values = lattice_samples(nu, lattice, |_| 1.0);
    Ok(SampleSet {
        lattice: *lattice,
        values,
        kernel: SamplingKernel::None,
        motion_axis: None,
        scheme: Scheme::Static,
        oversample: 1,
        seed: None,
        support: nu.support(),
        lengths: nu.lengths(),
    })
}

fn periodic_count(length: f64, spacing: f64, what: &str) -> Result<usize> {
    let n = length / spacing;
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::Lattice(format!(
            "{what} spacing {spacing} does not divide the domain length {length} (ratio {n})"
        )));
    }
    Ok(r as usize)
}

/// Mobile sampling along a family of parallel lines. Each line's restriction
/// is filtered by `kernel` and sampled every `T / oversample` seconds, i.e. at
/// spacing `v T / oversample` along the motion. All sensors sample in sync.
pub fn sample_mobile(
    nu: &ObservedField,
    lines: &ParallelLineSet,
    interval: f64,
    kernel: SamplingKernel,
    oversample: usize,
) -> Result<SampleSet> {
    if nu.dim() != 2 {
        return Err(Error::Lattice("parallel-line sampling needs a 2-D field".into()));
    }
    if oversample == 0 || !(interval > 0.0) {
        return Err(param("oversampling factor must be >= 1 and the interval positive"));
    }
    let lengths = nu.lengths();
    let (a, b) = (lines.axis, 1 - lines.axis);
    let along = lines.speed * interval / oversample as f64;
    let n_along = periodic_count(lengths[a], along, "along-track")?;
    let n_across = periodic_count(lengths[b], lines.spacing, "line")?;
    if n_across != lines.count {
        return Err(Error::Lattice(format!(
            "{} lines at spacing {} do not cover the period {} exactly",
            lines.count, lines.spacing, lengths[b]
        )));
    }
    let lattice = if a == 0 {
        SampleLattice::rectangular(along, lines.spacing, n_along, n_across)?
    } else {
        SampleLattice::rectangular(lines.spacing, along, n_across, n_along)?
    };
    let values = lattice_samples(nu, &lattice, |w| kernel.response(w[a]));
    Ok(SampleSet {
        lattice,
        values,
        kernel,
        motion_axis: Some(a),
        scheme: Scheme::Mobile,
        oversample,
        seed: None,
        support: nu.support(),
        lengths,
    })
}

/// One sensor moving at speed `v` through a 1-D field, filtering in time and
/// sampling every `T / oversample` seconds.
pub fn sample_line(
    nu: &ObservedField,
    speed: f64,
    interval: f64,
    kernel: SamplingKernel,
    oversample: usize,
) -> Result<SampleSet> {
    if nu.dim() != 1 {
        return Err(Error::Lattice("line sampling needs a 1-D field".into()));
    }
    if oversample == 0 || !(interval > 0.0 && speed > 0.0) {
        return Err(param("speed and interval must be positive and oversampling >= 1"));
    }
    let dx = speed * interval / oversample as f64;
    let n = periodic_count(nu.lengths()[0], dx, "along-track")?;
    let lattice = SampleLattice::line(dx, n)?;
    let values = lattice_samples(nu, &lattice, |w| kernel.response(w[0]));
    Ok(SampleSet {
        lattice,
        values,
        kernel,
        motion_axis: Some(0),
        scheme: Scheme::Mobile,
        oversample,
        seed: None,
        support: nu.support(),
        lengths: nu.lengths(),
    })
}

/// White measurement noise added to each sample after sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementNoise {
    pub variance: f64,
    pub seed: u64,
}

pub fn add_measurement_noise(samples: &SampleSet, noise: MeasurementNoise) -> Result<SampleSet> {
    if !(noise.variance >= 0.0 && noise.variance.is_finite()) {
        return Err(param(format!("measurement noise variance must be nonnegative, got {}", noise.variance)));
    }
    if noise.variance == 0.0 {
        return Ok(samples.clone());
    }
    let sd = noise.variance.sqrt();
    let mut g = rng(noise.seed);
    let values = samples
        .values
        .iter()
        .map(|v| {
            let e: f64 = g.sample(StandardNormal);
            v + sd * e
        })
        .collect();
    Ok(SampleSet { values, seed: Some(noise.seed), ..samples.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::synthesize_field;
    use crate::noise::{synthesize_noise, NoisePsd};
    use crate::quad::integrate;

    fn nyquist_setup(seed: u64) -> (ObservedField, f64) {
        // rho = pi, Nyquist spacing 1, odd count keeps harmonics off the band edge
        let l = 15.0;
        let f = synthesize_field(seed, l, BandRegion::square(PI).unwrap(), 1.0).unwrap();
        (ObservedField::noiseless(f), l)
    }

    #[test]
    fn kappa_small_width_limit() {
        let rho = PI;
        let db = 1e-6 * PI / rho;
        let k = kappa(db, rho).unwrap();
        assert!((k * db / PI - 1.0).abs() < 1e-4);
    }

    #[test]
    fn kappa_normalizes_the_squared_response() {
        for &(db, rho) in &[(0.1, PI), (0.5, PI), (1.3, 2.0), (3.0, 0.7)] {
            let kern = SamplingKernel::boxcar(db, rho).unwrap();
            let h2 = integrate(|w| kern.response(w).powi(2), -rho, rho, &[], 1e-14);
            // 2-D band: the y-extent contributes a factor 2 rho
            let total = 2.0 * rho * h2;
            assert!((total / (4.0 * rho * rho) - 1.0).abs() < 1e-9, "{db} {rho}: {total}");
            assert!(kappa(db, rho).unwrap() > 0.0);
        }
    }

    #[test]
    fn box_response_at_zero() {
        let SamplingKernel::Boxcar { half_width, kappa } = SamplingKernel::boxcar(0.4, PI).unwrap() else {
            unreachable!()
        };
        let kern = SamplingKernel::Boxcar { half_width, kappa };
        assert_eq!(kern.response(0.0), kappa * half_width / PI);
    }

    #[test]
    fn static_samples_equal_point_values() {
        let (nu, l) = nyquist_setup(1);
        let lat = SampleLattice::rectangular(1.0, 1.0, l as usize, l as usize).unwrap();
        let s = sample_static(&nu, &lat).unwrap();
        for ny in 0..15 {
            for nx in 0..15 {
                let direct = nu.eval(lat.point([nx, ny]));
                assert!((s.value([nx, ny]) - direct).abs() < 1e-12);
            }
        }
        // a lattice that does not tile the domain takes the direct route
        let odd = SampleLattice::rectangular(0.7, 1.1, 5, 4).unwrap();
        let s2 = sample_static(&nu, &odd).unwrap();
        assert!((s2.value([3, 2]) - nu.eval([2.1, 2.2])).abs() < 1e-12);
    }

    #[test]
    fn constant_field_static_samples() {
        let f = HarmonicField::constant([4.0, 4.0], BandRegion::square(1.0).unwrap(), 3.25).unwrap();
        let s = sample_static(&ObservedField::noiseless(f), &SampleLattice::rectangular(1.0, 2.0, 4, 2).unwrap()).unwrap();
        assert!(s.values.iter().all(|v| (v - 3.25).abs() < 1e-14));
    }

    #[test]
    fn no_kernel_equals_static() {
        let (nu, l) = nyquist_setup(2);
        let lines = ParallelLineSet::new(1.0, 2.0, 15).unwrap();
        let m = sample_mobile(&nu, &lines, 0.5, SamplingKernel::None, 1).unwrap();
        let s = sample_static(&nu, &SampleLattice::rectangular(1.0, 1.0, l as usize, l as usize).unwrap()).unwrap();
        assert_eq!(m.lattice, s.lattice);
        for (a, b) in m.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn ideal_kernel_passes_inband_signal() {
        let (nu, _) = nyquist_setup(3);
        let lines = ParallelLineSet::new(1.0, 1.0, 15).unwrap();
        let m = sample_mobile(&nu, &lines, 1.0, SamplingKernel::ideal(PI).unwrap(), 1).unwrap();
        let s = sample_mobile(&nu, &lines, 1.0, SamplingKernel::None, 1).unwrap();
        for (a, b) in m.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn incompatible_period_is_a_lattice_error() {
        let (nu, _) = nyquist_setup(4);
        let lines = ParallelLineSet::new(1.0, 1.0, 15).unwrap();
        assert!(matches!(
            sample_mobile(&nu, &lines, 0.7, SamplingKernel::None, 1),
            Err(Error::Lattice(_))
        ));
        let bad_lines = ParallelLineSet::new(1.0, 1.0, 14).unwrap();
        assert!(matches!(sample_mobile(&nu, &bad_lines, 1.0, SamplingKernel::None, 1), Err(Error::Lattice(_))));
    }

    #[test]
    fn oversampled_set_contains_base_set() {
        let (nu, _) = nyquist_setup(5);
        let psd = NoisePsd::flat_band(3.0, PI, 1.0, 2).unwrap();
        let noisy = ObservedField::noisy(nu.signal.clone(), synthesize_noise(9, [15.0, 15.0], &psd).unwrap()).unwrap();
        let lines = ParallelLineSet::new(1.0, 1.0, 15).unwrap();
        let kern = SamplingKernel::ideal(PI).unwrap();
        let base = sample_mobile(&noisy, &lines, 1.0, kern, 1).unwrap();
        let over = sample_mobile(&noisy, &lines, 1.0, kern, 4).unwrap();
        for ny in 0..15 {
            for nx in 0..15 {
                assert!((over.value([4 * nx, ny]) - base.value([nx, ny])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ideal_filter_is_idempotent_and_linear() {
        let psd = NoisePsd::flat_band(5.0, PI, 1.0, 2).unwrap();
        let w = synthesize_noise(3, [9.0, 9.0], &psd).unwrap().field;
        let kern = SamplingKernel::ideal(PI).unwrap();
        let once = filter_field(&w, kern, 0);
        let twice = filter_field(&once, kern, 0);
        assert_eq!(once, twice);

        let f = synthesize_field(4, 9.0, BandRegion::square(PI).unwrap(), 1.0).unwrap();
        let lines = ParallelLineSet::new(1.0, 1.0, 9).unwrap();
        let sum = sample_mobile(
            &ObservedField::noisy(f.clone(), crate::noise::NoiseRealization { field: w.clone(), seed: 3 }).unwrap(),
            &lines,
            1.0,
            kern,
            1,
        )
        .unwrap();
        let a = sample_mobile(&ObservedField::noiseless(f), &lines, 1.0, kern, 1).unwrap();
        let b = sample_mobile(&ObservedField::noiseless(w), &lines, 1.0, kern, 1).unwrap();
        for i in 0..sum.values.len() {
            assert!((sum.values[i] - a.values[i] - b.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_noise_variance_and_determinism() {
        let lat = SampleLattice::line(1.0, 100_000).unwrap();
        let zero = SampleSet {
            lattice: lat,
            values: vec![0.0; 100_000],
            kernel: SamplingKernel::None,
            motion_axis: None,
            scheme: Scheme::Static,
            oversample: 1,
            seed: None,
            support: vec![],
            lengths: [100_000.0, 1.0],
        };
        let same = add_measurement_noise(&zero, MeasurementNoise { variance: 0.0, seed: 1 }).unwrap();
        assert_eq!(same, zero);
        let a = add_measurement_noise(&zero, MeasurementNoise { variance: 0.25, seed: 7 }).unwrap();
        let b = add_measurement_noise(&zero, MeasurementNoise { variance: 0.25, seed: 7 }).unwrap();
        assert_eq!(a, b);
        let n = a.values.len() as f64;
        let mean = a.values.iter().sum::<f64>() / n;
        let var = a.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / 0.25 - 1.0).abs() < 0.03, "{var}");
    }
}
