//! Power spectral densities of stationary noise, their harmonic realizations,
//! and the observed field `signal + noise`.
//!
//! PSD convention: a process with density `S` has variance
//! `(2 pi)^{-d} int S(omega) d omega`. On a torus of volume `V` a realization
//! therefore carries coefficient variance `E|c_k|^2 = S(omega_k) / V`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::band::BandRegion;
use crate::error::{param, Error, Result};
use crate::field::{harmonic_limits, is_representative, HarmonicField};
use crate::rng::rng;

#[derive(Debug, Clone, PartialEq)]
pub enum NoisePsd {
    /// Identically zero.
    Zero { dim: usize },
    /// `level` on `[-a rho, a rho]^d`, zero elsewhere.
    FlatBand { a: f64, rho: f64, level: f64, dim: usize },
    /// Radial table `S(|omega|)` interpolated linearly on `radii` (which start
    /// at 0), continued beyond the last radius by the power law
    /// `|omega|^-decay`.
    Tabulated { radii: Vec<f64>, values: Vec<f64>, decay: f64, dim: usize },
    /// Flat over all frequencies. Admissible only to be rejected: replica sums
    /// diverge and no finite realization exists.
    White { level: f64, dim: usize },
}

impl NoisePsd {
    pub fn flat_band(a: f64, rho: f64, level: f64, dim: usize) -> Result<Self> {
        let p = NoisePsd::FlatBand { a, rho, level, dim };
        p.validate()?;
        Ok(p)
    }

    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>, decay: f64, dim: usize) -> Result<Self> {
        let p = NoisePsd::Tabulated { radii, values, decay, dim };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        match *self {
            NoisePsd::Zero { dim }
            | NoisePsd::FlatBand { dim, .. }
            | NoisePsd::Tabulated { dim, .. }
            | NoisePsd::White { dim, .. } => dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d != 1 && d != 2 {
            return Err(param(format!("PSD dimension must be 1 or 2, got {d}")));
        }
        match self {
            NoisePsd::Zero { .. } => Ok(()),
            NoisePsd::FlatBand { a, rho, level, .. } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(param(format!("flat-band ratio a must be positive, got {a}")));
                }
                if !(rho.is_finite() && *rho > 0.0) {
                    return Err(param(format!("flat-band rho must be positive, got {rho}")));
                }
                if !(level.is_finite() && *level >= 0.0) {
                    return Err(param(format!("flat-band level must be nonnegative, got {level}")));
                }
                Ok(())
            }
            NoisePsd::Tabulated { radii, values, decay, .. } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(param("tabulated PSD needs equally many radii and values"));
                }
                if radii[0] != 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(param("tabulated radii must start at 0 and increase strictly"));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(param("tabulated PSD values must be finite and nonnegative"));
                }
                if !(*decay > d as f64) {
                    return Err(Error::Divergence(format!(
                        "decay exponent r = {decay} must exceed the dimension {d} for the replica sum to converge"
                    )));
                }
                Ok(())
            }
            NoisePsd::White { .. } => Ok(()),
        }
    }

    pub fn value(&self, w: [f64; 2]) -> f64 {
        let d = self.dim();
        match self {
            NoisePsd::Zero { .. } => 0.0,
            NoisePsd::FlatBand { a, rho, level, .. } => {
                let edge = a * rho * (1.0 + 1e-12);
                if w.iter().take(d).all(|x| x.abs() <= edge) {
                    *level
                } else {
                    0.0
                }
            }
            NoisePsd::Tabulated { radii, values, decay, .. } => {
                let r = if d == 1 { w[0].abs() } else { w[0].hypot(w[1]) };
                let last = radii.len() - 1;
                if r >= radii[last] {
                    if radii[last] == 0.0 {
                        return values[0];
                    }
                    return values[last] * (r / radii[last]).powf(-decay);
                }
                let j = radii.partition_point(|&x| x <= r) - 1;
                let t = (r - radii[j]) / (radii[j + 1] - radii[j]);
                values[j] * (1.0 - t) + values[j + 1] * t
            }
            NoisePsd::White { level, .. } => *level,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            NoisePsd::Zero { .. } => true,
            NoisePsd::FlatBand { level, .. } | NoisePsd::White { level, .. } => *level == 0.0,
            NoisePsd::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Half-width of the compact support, `None` for infinite support.
    pub fn support(&self) -> Option<f64> {
        match self {
            NoisePsd::Zero { .. } => Some(0.0),
            NoisePsd::FlatBand { a, rho, .. } => Some(a * rho),
            _ => None,
        }
    }

    /// Frequencies (per axis, unshifted) where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            NoisePsd::FlatBand { a, rho, .. } => vec![-a * rho, a * rho],
            _ => Vec::new(),
        }
    }

    /// `(C, R0, r)` such that `S(omega) <= C |omega|^-r` whenever `|omega| >= R0`.
    pub(crate) fn tail_bound(&self) -> Result<Option<(f64, f64, f64)>> {
        match self {
            NoisePsd::Tabulated { radii, values, decay, .. } => {
                let rl = *radii.last().unwrap();
                let vl = *values.last().unwrap();
                Ok(Some((vl * rl.powf(*decay), rl, *decay)))
            }
            NoisePsd::White { .. } if !self.is_zero() => Err(Error::Divergence(
                "white noise: unfiltered samples of a flat unbounded spectrum have infinite variance".into(),
            )),
            _ => Ok(None),
        }
    }

    /// Band region occupied by a realization on a finite harmonic grid.
    pub fn realization_band(&self) -> Result<BandRegion> {
        let d = self.dim();
        let ext = match self {
            NoisePsd::Zero { .. } => 1e-9,
            NoisePsd::FlatBand { a, rho, .. } => a * rho,
            NoisePsd::Tabulated { radii, .. } => radii.last().copied().unwrap().max(1e-9),
            NoisePsd::White { .. } => {
                return Err(Error::Divergence("white noise has no finite realization".into()))
            }
        };
        if d == 1 {
            BandRegion::interval(ext)
        } else {
            BandRegion::square(ext)
        }
    }
}

/// A concrete random-phase harmonic realization of stationary noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub field: HarmonicField,
    pub seed: u64,
}

/// Draws independent complex Gaussian coefficients with variance
/// `S(omega_k) / V` for every harmonic of the grid, conjugate-symmetrized.
/// Tabulated densities are realized up to their last tabulated radius.
pub fn synthesize_noise(seed: u64, lengths: [f64; 2], psd: &NoisePsd) -> Result<NoiseRealization> {
    psd.validate()?;
    let band = psd.realization_band()?;
    let kmax = harmonic_limits(lengths, &band, None)?;
    let mut field = HarmonicField::zeros(lengths, kmax, band)?;
    if psd.is_zero() {
        return Ok(NoiseRealization { field, seed });
    }
    let volume = field.cell_volume();
    let mut g = rng(seed);
    let keys: Vec<[i64; 2]> = field.iter().map(|(k, _)| k).filter(|k| is_representative(*k)).collect();
    for k in keys {
        let w = field.frequency(k);
        if !band.contains(w) {
            continue;
        }
        let s = psd.value(w);
        let (re, im): (f64, f64) = (g.sample(StandardNormal), g.sample(StandardNormal));
        if s <= 0.0 {
            continue;
        }
        let sd = (s / volume).sqrt();
        let c = if k == [0, 0] {
            Complex64::new(sd * re, 0.0)
        } else {
            Complex64::new(re, im) * (sd * std::f64::consts::FRAC_1_SQRT_2)
        };
        field.set_pair(k, c)?;
    }
    Ok(NoiseRealization { field, seed })
}

/// The field seen by a sensor: a bandlimited signal plus optional noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedField {
    pub signal: HarmonicField,
    pub noise: Option<NoiseRealization>,
}

impl ObservedField {
    pub fn noiseless(signal: HarmonicField) -> Self {
        ObservedField { signal, noise: None }
    }

    pub fn noisy(signal: HarmonicField, noise: NoiseRealization) -> Result<Self> {
        if !signal.same_domain(&noise.field) {
            return Err(param("signal and noise live on different domains"));
        }
        Ok(ObservedField { signal, noise: Some(noise) })
    }

    pub fn dim(&self) -> usize {
        self.signal.dim()
    }

    pub fn lengths(&self) -> [f64; 2] {
        self.signal.lengths()
    }

    pub fn eval(&self, r: [f64; 2]) -> f64 {
        self.signal.eval(r) + self.noise.as_ref().map_or(0.0, |n| n.field.eval(r))
    }

    /// Signal and noise as separate harmonic fields.
    pub fn components(&self) -> impl Iterator<Item = &HarmonicField> {
        std::iter::once(&self.signal).chain(self.noise.as_ref().map(|n| &n.field))
    }

    pub fn support(&self) -> Vec<BandRegion> {
        self.components().map(|f| f.band()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_psd_gives_zero_field() {
        let n = synthesize_noise(4, [5.0, 5.0], &NoisePsd::flat_band(3.0, PI, 0.0, 2).unwrap()).unwrap();
        assert_eq!(n.field.mean_square(), 0.0);
    }

    #[test]
    fn flat_band_rejects_nonpositive_ratio() {
        assert!(NoisePsd::flat_band(0.0, PI, 1.0, 2).is_err());
        assert!(NoisePsd::flat_band(-1.0, PI, 1.0, 1).is_err());
    }

    #[test]
    fn tabulated_requires_fast_decay() {
        assert!(matches!(
            NoisePsd::tabulated(vec![0.0, 1.0], vec![1.0, 1.0], 2.0, 2),
            Err(Error::Divergence(_))
        ));
        let p = NoisePsd::tabulated(vec![0.0, 2.0], vec![1.0, 0.5], 3.0, 2).unwrap();
        assert!((p.value([1.0, 0.0]) - 0.75).abs() < 1e-15);
        assert!((p.value([0.0, 4.0]) - 0.5 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn realization_is_reproducible_and_symmetric() {
        let psd = NoisePsd::flat_band(3.0, PI, 1.0, 2).unwrap();
        let a = synthesize_noise(17, [7.0, 7.0], &psd).unwrap();
        let b = synthesize_noise(17, [7.0, 7.0], &psd).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.field.symmetry_defect(), 0.0);
        let c = synthesize_noise(18, [7.0, 7.0], &psd).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn observed_field_is_pointwise_sum() {
        let s = crate::field::synthesize_field(1, 5.0, BandRegion::square(PI).unwrap(), 1.0).unwrap();
        let psd = NoisePsd::flat_band(3.0, PI, 1.0, 2).unwrap();
        let w = synthesize_noise(2, [5.0, 5.0], &psd).unwrap();
        let nu = ObservedField::noisy(s.clone(), w.clone()).unwrap();
        for r in [[0.1, 0.2], [3.3, 4.9]] {
            assert!((nu.eval(r) - s.eval(r) - w.field.eval(r)).abs() < 1e-12);
        }
    }
}
