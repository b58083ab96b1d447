//! Sampling along paths with varying speed and the warped reconstruction
//! `f^(x) = z~(T(x))`.
//!
//! Over a window `[t0, t0 + W)` the sensor signal `s~(t) = nu(x(t))` is
//! tabulated on a fine grid, lowpassed by keeping the window harmonics with
//! `|2 pi m / W| <= rho0`, and sampled every `T` seconds.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{param, Error, Result};
use crate::fft::{bin, fft1};
use crate::noise::ObservedField;
use crate::quad::integrate;
use crate::trajectory::Path;

/// Default oversampling of the fine grid relative to the predicted bandwidth.
pub const FINE_FACTOR: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NonuniformSamples {
    pub start: f64,
    pub window: f64,
    pub interval: f64,
    pub cutoff: f64,
    pub values: Vec<f64>,
    /// Window harmonics of the lowpassed signal, index `m + m0`.
    pub lowpass: Vec<Complex64>,
    /// Set when `T > pi / rho0`.
    pub temporal_undersampling: bool,
    pub fine_points: usize,
}

impl NonuniformSamples {
    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|n| self.start + n as f64 * self.interval).collect()
    }

    /// The continuous lowpass output `z~(t)`.
    pub fn lowpass_eval(&self, t: f64) -> f64 {
        trig_eval(&self.lowpass, TAU * (t - self.start) / self.window)
    }
}

fn trig_eval(coeffs: &[Complex64], phase: f64) -> f64 {
    let m0 = (coeffs.len() / 2) as i64;
    let step = Complex64::from_polar(1.0, phase);
    let mut e = Complex64::from_polar(1.0, -phase * m0 as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs {
        acc += c * e;
        e *= step;
    }
    acc.re
}

/// Samples `nu` along `path` over `[start, start + window)`. `window / interval`
/// must be an integer. `fine_factor` scales the fine grid above the band
/// `max_speed * rho_f + rho0`, where `rho_f` is the widest component band.
pub fn sample_nonuniform(
    nu: &ObservedField,
    path: &dyn Path,
    start: f64,
    window: f64,
    cutoff: f64,
    interval: f64,
    fine_factor: f64,
) -> Result<NonuniformSamples> {
    if nu.dim() != 1 {
        return Err(param("non-uniform sampling needs a 1-D field"));
    }
    if !(cutoff > 0.0 && interval > 0.0 && window > 0.0 && fine_factor >= 1.0) {
        return Err(param("cutoff, interval, window must be positive and the fine factor >= 1"));
    }
    if let Some((a, b)) = path.time_range() {
        if start < a - 1e-12 || start + window > b + 1e-9 * (1.0 + b.abs()) {
            return Err(Error::Range { what: "window", value: start + window, lo: a, hi: b });
        }
    }
    let ratio = window / interval;
    let count = ratio.round() as usize;
    if count == 0 || (ratio - count as f64).abs() > 1e-9 * ratio {
        return Err(Error::Lattice(format!("window {window} is not a multiple of the interval {interval}")));
    }
    let rho_f = nu
        .components()
        .map(|f| f.kmax()[0] as f64 * TAU / f.lengths()[0])
        .fold(0.0, f64::max);
    let band = path.max_speed() * rho_f + cutoff;
    let m0 = (cutoff * window / TAU * (1.0 + 1e-12)).floor() as usize;
    let mut n_fine = (fine_factor * band * window / PI).ceil() as usize;
    n_fine = n_fine.max(2 * m0 + 1).max(count);
    // put every sample time on the fine grid
    n_fine = n_fine.div_ceil(count) * count;

    let mut grid = Vec::with_capacity(n_fine);
    for j in 0..n_fine {
        let t = start + window * j as f64 / n_fine as f64;
        grid.push(Complex64::new(nu.eval([path.position(t)?, 0.0]), 0.0));
    }
    fft1(&mut grid, FftDirection::Forward);
    let lowpass: Vec<Complex64> = (-(m0 as i64)..=m0 as i64)
        .map(|m| grid[bin(m, n_fine)] / n_fine as f64)
        .collect();
    let mut s = NonuniformSamples {
        start,
        window,
        interval,
        cutoff,
        values: Vec::new(),
        lowpass,
        temporal_undersampling: interval > PI / cutoff * (1.0 + 1e-12),
        fine_points: n_fine,
    };
    s.values = (0..count).map(|n| s.lowpass_eval(start + n as f64 * interval)).collect();
    Ok(s)
}

/// Trigonometric interpolant of the uniform samples `z~(nT)` composed with the
/// path's inverse time map.
pub struct WarpEstimate<'a> {
    path: &'a dyn Path,
    start: f64,
    window: f64,
    coeffs: Vec<Complex64>,
    range: (f64, f64),
}

impl WarpEstimate<'_> {
    /// `z~(T(x))`; positions outside the traversed range are an error.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.range;
        if !(x >= lo - 1e-12 * (1.0 + lo.abs()) && x <= hi + 1e-12 * (1.0 + hi.abs())) {
            return Err(Error::Range { what: "x", value: x, lo, hi });
        }
        let t = self.path.inverse_time(x.clamp(lo, hi))?;
        Ok(self.interpolate(t))
    }

    /// Interpolated `z~(t)`.
    pub fn interpolate(&self, t: f64) -> f64 {
        trig_eval(&self.coeffs, TAU * (t - self.start) / self.window)
    }

    pub fn traversed(&self) -> (f64, f64) {
        self.range
    }
}

pub fn warp_reconstruct<'a>(samples: &NonuniformSamples, path: &'a dyn Path) -> Result<WarpEstimate<'a>> {
    let n = samples.values.len();
    let mut d: Vec<Complex64> = samples.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft1(&mut d, FftDirection::Forward);
    let half = n / 2;
    let coeffs: Vec<Complex64> = (-(half as i64)..=half as i64)
        .map(|m| {
            let c = d[bin(m, n)] / n as f64;
            // an even count splits its Nyquist bin between +-n/2
            if n % 2 == 0 && m.unsigned_abs() as usize == half {
                c * 0.5
            } else {
                c
            }
        })
        .collect();
    let a = path.position(samples.start)?;
    let b = path.position(samples.start + samples.window)?;
    Ok(WarpEstimate { path, start: samples.start, window: samples.window, coeffs, range: (a.min(b), a.max(b)) })
}

/// Both sides of the warping distortion bound for a noiseless field:
/// `int (f(x) - z(T(x)))^2 dx` over the traversed range, and
/// `max speed * int (s0(t) - z(t))^2 dt` over the window.
pub fn warp_distortion(nu: &ObservedField, path: &dyn Path, samples: &NonuniformSamples) -> Result<(f64, f64)> {
    let estimate = warp_reconstruct(samples, path)?;
    let (t0, t1) = (samples.start, samples.start + samples.window);
    let knots: Vec<f64> = path.knots().into_iter().filter(|t| *t > t0 && *t < t1).collect();
    let mut xs = Vec::with_capacity(knots.len());
    for t in &knots {
        xs.push(path.position(*t)?);
    }
    let (x0, x1) = estimate.traversed();
    let mut failure = None;
    let lhs = integrate(
        |x| match estimate.eval(x) {
            Ok(z) => (nu.eval([x, 0.0]) - z).powi(2),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        x0,
        x1,
        &xs,
        1e-13,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let rhs = integrate(
        |t| {
            let s0 = path.position(t).map(|x| nu.eval([x, 0.0])).unwrap_or(f64::NAN);
            (s0 - samples.lowpass_eval(t)).powi(2)
        },
        t0,
        t1,
        &knots,
        1e-13,
    );
    if !rhs.is_finite() {
        return Err(Error::Range { what: "t", value: t1, lo: t0, hi: t1 });
    }
    Ok((lhs, path.max_speed() * rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::BandRegion;
    use crate::field::{synthesize_field_on, HarmonicField};
    use crate::sampling::{sample_line, SamplingKernel};
    use crate::trajectory::{AffinePath, PiecewiseAffinePath};

    fn field_1d(seed: u64, l: f64, rho: f64) -> ObservedField {
        let f = synthesize_field_on(seed, [l, 1.0], BandRegion::interval(rho).unwrap(), 1.0, None).unwrap();
        ObservedField::noiseless(f)
    }

    #[test]
    fn affine_path_matches_mobile_sampling() {
        // one full period in the window: v W = L
        let (l, v, t) = (21.0, 1.5, 1.0 / 1.5);
        let nu = field_1d(4, l, PI);
        let path = AffinePath::new(0.0, v);
        let s = sample_nonuniform(&nu, &path, 0.0, l / v, v * PI, t, FINE_FACTOR).unwrap();
        assert!(!s.temporal_undersampling);
        let m = sample_line(&nu, v, t, SamplingKernel::ideal(PI).unwrap(), 1).unwrap();
        assert_eq!(s.values.len(), m.values.len());
        for (a, b) in s.values.iter().zip(&m.values) {
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
        let w = warp_reconstruct(&s, &path).unwrap();
        for i in 0..50 {
            let x = l * i as f64 / 50.0;
            assert!((w.eval(x).unwrap() - nu.eval([x, 0.0])).abs() < 1e-9);
        }
        assert!(matches!(w.eval(l + 1.0), Err(Error::Range { .. })));
    }

    #[test]
    fn constant_field_passes_unchanged() {
        let f = HarmonicField::constant([10.0, 1.0], BandRegion::interval(1.0).unwrap(), 2.5).unwrap();
        let nu = ObservedField::noiseless(f);
        let path = PiecewiseAffinePath::new(vec![0.0, 2.0, 5.0], vec![1.0, 0.5], 0.0).unwrap();
        let s = sample_nonuniform(&nu, &path, 0.0, 5.0, 2.0, 0.5, FINE_FACTOR).unwrap();
        assert!(s.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
        let w = warp_reconstruct(&s, &path).unwrap();
        assert!((w.eval(2.7).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn undersampling_is_flagged() {
        let nu = field_1d(1, 9.0, 1.0);
        let s = sample_nonuniform(&nu, &AffinePath::new(0.0, 1.0), 0.0, 9.0, 2.0, 3.0, FINE_FACTOR).unwrap();
        assert!(s.temporal_undersampling);
        assert!(matches!(
            sample_nonuniform(&nu, &AffinePath::new(0.0, 1.0), 0.0, 9.0, 2.0, 2.0, FINE_FACTOR),
            Err(Error::Lattice(_))
        ));
    }

    #[test]
    fn dirichlet_convolution_oracle() {
        let nu = field_1d(6, 12.0, 2.0);
        let path = PiecewiseAffinePath::new(vec![0.0, 1.5, 4.0, 6.0], vec![2.0, 0.6, 1.3], 0.3).unwrap();
        let (w, rho0) = (6.0, 3.0);
        let s = sample_nonuniform(&nu, &path, 0.0, w, rho0, 0.5, FINE_FACTOR).unwrap();
        let nf = s.fine_points;
        let m0 = (rho0 * w / TAU).floor();
        let fine: Vec<(f64, f64)> = (0..nf)
            .map(|j| {
                let t = w * j as f64 / nf as f64;
                (t, nu.eval([path.position(t).unwrap(), 0.0]))
            })
            .collect();
        for (n, t) in s.times().into_iter().enumerate() {
            let mut z = 0.0;
            for &(tj, sj) in &fine {
                let u = t - tj;
                let den = (PI * u / w).sin();
                let kernel = if den.abs() < 1e-12 { 2.0 * m0 + 1.0 } else { ((2.0 * m0 + 1.0) * PI * u / w).sin() / den };
                z += sj * kernel;
            }
            z /= nf as f64;
            assert!((z - s.values[n]).abs() <= 1e-6 * z.abs().max(1e-3), "{z} vs {}", s.values[n]);
        }
    }

    #[test]
    fn warp_distortion_bound_holds() {
        let nu = field_1d(9, 10.0, 2.0);
        let path = PiecewiseAffinePath::new(vec![0.0, 2.0, 3.5, 6.0], vec![1.0, 2.0, 0.8], 0.5).unwrap();
        let s = sample_nonuniform(&nu, &path, 0.0, 6.0, 4.0, 0.5, FINE_FACTOR).unwrap();
        let (lhs, rhs) = warp_distortion(&nu, &path, &s).unwrap();
        assert!(lhs > 0.0 && lhs <= 1.05 * rhs, "{lhs} {rhs}");
    }
}
