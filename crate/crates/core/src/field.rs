//! Real bandlimited fields on a periodic domain, stored as finite Fourier
//! series.
//!
//! A field of dimension `d` on the torus `[0, L_0) x [0, L_1)` is
//! `f(r) = sum_k c_k exp(i omega_k . r)` with `omega_k = 2 pi k / L`. One
//! dimensional fields use only the first axis; their second index is always 0.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftDirection;

use crate::band::BandRegion;
use crate::error::{param, Error, Result};
use crate::fft::{bin, fft2};
use crate::rng::rng;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicField {
    dim: usize,
    lengths: [f64; 2],
    kmax: [usize; 2],
    coeffs: Vec<Complex64>,
    band: BandRegion,
}

impl HarmonicField {
    /// All-zero field able to hold harmonics `|k_i| <= kmax[i]`.
    pub fn zeros(lengths: [f64; 2], kmax: [usize; 2], band: BandRegion) -> Result<Self> {
        let dim = band.dimension();
        for (i, l) in lengths.iter().enumerate().take(dim) {
            if !(l.is_finite() && *l > 0.0) {
                return Err(param(format!("domain length on axis {i} must be positive, got {l}")));
            }
        }
        let kmax = if dim == 1 { [kmax[0], 0] } else { kmax };
        let lengths = if dim == 1 { [lengths[0], 1.0] } else { lengths };
        let n = (2 * kmax[0] + 1) * (2 * kmax[1] + 1);
        Ok(HarmonicField { dim, lengths, kmax, coeffs: vec![ZERO; n], band })
    }

    pub fn zeros_1d(length: f64, kmax: usize, band: BandRegion) -> Result<Self> {
        Self::zeros([length, 1.0], [kmax, 0], band)
    }

    /// Constant field on a 1-D or 2-D domain.
    pub fn constant(lengths: [f64; 2], band: BandRegion, value: f64) -> Result<Self> {
        let mut f = Self::zeros(lengths, [0, 0], band)?;
        f.coeffs[0] = Complex64::new(value, 0.0);
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> [f64; 2] {
        self.lengths
    }

    pub fn kmax(&self) -> [usize; 2] {
        self.kmax
    }

    pub fn band(&self) -> BandRegion {
        self.band
    }

    pub(crate) fn with_band(mut self, band: BandRegion) -> Self {
        self.band = band;
        self
    }

    fn index(&self, k: [i64; 2]) -> Option<usize> {
        let [kx, ky] = self.kmax.map(|m| m as i64);
        if k[0].abs() > kx || k[1].abs() > ky {
            return None;
        }
        Some(((k[0] + kx) * (2 * ky + 1) + (k[1] + ky)) as usize)
    }

    fn key(&self, idx: usize) -> [i64; 2] {
        let w = 2 * self.kmax[1] + 1;
        [(idx / w) as i64 - self.kmax[0] as i64, (idx % w) as i64 - self.kmax[1] as i64]
    }

    pub fn frequency(&self, k: [i64; 2]) -> [f64; 2] {
        let tau = std::f64::consts::TAU;
        [tau * k[0] as f64 / self.lengths[0], tau * k[1] as f64 / self.lengths[1]]
    }

    pub fn coeff(&self, k: [i64; 2]) -> Complex64 {
        self.index(k).map_or(ZERO, |i| self.coeffs[i])
    }

    /// Sets `c_k = value` and `c_{-k} = conj(value)`. The DC term keeps only
    /// the real part.
    pub fn set_pair(&mut self, k: [i64; 2], value: Complex64) -> Result<()> {
        let i = self
            .index(k)
            .ok_or_else(|| param(format!("harmonic {k:?} outside the coefficient grid {:?}", self.kmax)))?;
        let j = self.index([-k[0], -k[1]]).expect("grid is symmetric");
        if i == j {
            self.coeffs[i] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[i] = value;
            self.coeffs[j] = value.conj();
        }
        Ok(())
    }

    /// Iterates `(k, c_k)` over the whole coefficient grid.
    pub fn iter(&self) -> impl Iterator<Item = ([i64; 2], Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.key(i), c))
    }

    /// Iterates the nonzero coefficients only.
    pub fn nonzero(&self) -> impl Iterator<Item = ([i64; 2], Complex64)> + '_ {
        self.iter().filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
    }

    /// Applies `g(k, omega, c)` to every coefficient. `g` must respect
    /// conjugate symmetry (real responses that are even in `omega` do).
    pub fn map(&self, mut g: impl FnMut([i64; 2], [f64; 2], Complex64) -> Complex64) -> HarmonicField {
        let mut out = self.clone();
        for i in 0..out.coeffs.len() {
            let k = out.key(i);
            out.coeffs[i] = g(k, out.frequency(k), out.coeffs[i]);
        }
        out
    }

    /// Zeroes every coefficient outside `band` and relabels the field.
    pub fn project(&self, band: BandRegion) -> HarmonicField {
        self.map(|_, w, c| if band.contains(w) { c } else { ZERO }).with_band(band)
    }

    /// Exact evaluation of the Fourier series at `r` (periodic in every axis).
    pub fn eval(&self, r: [f64; 2]) -> f64 {
        let [kx, ky] = self.kmax;
        let ex = phasors(self.frequency([1, 0])[0] * r[0], kx);
        if self.dim == 1 {
            return ex.iter().zip(&self.coeffs).map(|(e, c)| (e * c).re).sum();
        }
        let ey = phasors(self.frequency([0, 1])[1] * r[1], ky);
        let w = 2 * ky + 1;
        let mut acc = ZERO;
        for (ix, e) in ex.iter().enumerate() {
            let row = &self.coeffs[ix * w..(ix + 1) * w];
            let inner: Complex64 = row.iter().zip(&ey).map(|(c, e)| c * e).sum();
            acc += e * inner;
        }
        acc.re
    }

    pub fn eval_1d(&self, x: f64) -> f64 {
        self.eval([x, 0.0])
    }

    /// Mean-square value over one period (Parseval).
    pub fn mean_square(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Squared L2 norm over one period.
    pub fn energy(&self) -> f64 {
        self.mean_square() * self.cell_volume()
    }

    pub(crate) fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.lengths[0]
        } else {
            self.lengths[0] * self.lengths[1]
        }
    }

    pub fn same_domain(&self, other: &HarmonicField) -> bool {
        self.dim == other.dim
            && (0..self.dim).all(|i| (self.lengths[i] - other.lengths[i]).abs() <= 1e-12 * self.lengths[i])
    }

    /// Coefficient-wise linear combination `a * self + b * other` on the union
    /// of both coefficient grids. The band of `self` is kept.
    pub fn combine(&self, a: f64, other: &HarmonicField, b: f64) -> Result<HarmonicField> {
        if !self.same_domain(other) {
            return Err(param("fields live on different domains"));
        }
        let kmax = [self.kmax[0].max(other.kmax[0]), self.kmax[1].max(other.kmax[1])];
        let mut out = HarmonicField::zeros(self.lengths, kmax, self.band)?;
        for i in 0..out.coeffs.len() {
            let k = out.key(i);
            out.coeffs[i] = self.coeff(k) * a + other.coeff(k) * b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &HarmonicField) -> Result<HarmonicField> {
        self.combine(1.0, other, -1.0)
    }

    /// Largest conjugate-symmetry defect `|c_k - conj(c_{-k})|`.
    pub fn symmetry_defect(&self) -> f64 {
        self.iter()
            .map(|(k, c)| (c - self.coeff([-k[0], -k[1]]).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Samples the field on the uniform `nx x ny` grid `(ix L_0/nx, iy L_1/ny)`
    /// exactly, by folding harmonics onto DFT bins. Row-major, `y` outer.
    pub fn grid_values(&self, nx: usize, ny: usize) -> Vec<f64> {
        let ny = if self.dim == 1 { 1 } else { ny };
        let mut bins = self.fold(nx, ny, |_| 1.0);
        fft2(&mut bins, nx, ny, FftDirection::Inverse);
        bins.into_iter().map(|c| c.re).collect()
    }

    /// Sums `weight(omega_k) c_k` into the residue classes `k mod (nx, ny)`.
    pub(crate) fn fold(&self, nx: usize, ny: usize, weight: impl Fn([f64; 2]) -> f64) -> Vec<Complex64> {
        let mut bins = vec![ZERO; nx * ny];
        for (k, c) in self.nonzero() {
            let w = weight(self.frequency(k));
            if w != 0.0 {
                bins[bin(k[1], ny) * nx + bin(k[0], nx)] += c * w;
            }
        }
        bins
    }

    /// Writes the field evaluated on an `nx x ny` grid in the CSV grid format,
    /// preceded by a `#` metadata line.
    pub fn export_csv<W: Write>(&self, mut out: W, nx: usize, ny: usize, seed: Option<u64>) -> Result<()> {
        let ny = if self.dim == 1 { 1 } else { ny };
        writeln!(out, "# {}", self.metadata(seed))?;
        let values = self.grid_values(nx, ny);
        for row in values.chunks(nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub(crate) fn metadata(&self, seed: Option<u64>) -> String {
        let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "L={},{} band={} kmax={},{} seed={}",
            self.lengths[0],
            self.lengths[1],
            band_tag(&self.band),
            self.kmax[0],
            self.kmax[1],
            seed
        )
    }
}

pub(crate) fn band_tag(b: &BandRegion) -> String {
    match *b {
        BandRegion::Interval { rho } => format!("interval:{rho}"),
        BandRegion::Rectangle { rho_x, rho_y } => format!("rectangle:{rho_x}:{rho_y}"),
        BandRegion::Strip { axis, rho } => format!("strip:{axis}:{rho}"),
        BandRegion::WaveCone { rho_t, c } => format!("wave-cone:{rho_t}:{c}"),
    }
}

fn phasors(step: f64, kmax: usize) -> Vec<Complex64> {
    (-(kmax as i64)..=kmax as i64)
        .map(|k| Complex64::from_polar(1.0, step * k as f64))
        .collect()
}

/// Largest harmonic index on each axis admitted by `band` for the given
/// domain lengths. `cap` bounds unbounded axes (and may tighten bounded ones).
pub fn harmonic_limits(lengths: [f64; 2], band: &BandRegion, cap: Option<[usize; 2]>) -> Result<[usize; 2]> {
    let ext = band.extent();
    let mut out = [0usize; 2];
    for axis in 0..band.dimension() {
        let from_band = ext[axis].map(|e| (e * lengths[axis] / std::f64::consts::TAU * (1.0 + 1e-12)).floor() as usize);
        out[axis] = match (from_band, cap) {
            (Some(b), Some(c)) => b.min(c[axis]),
            (Some(b), None) => b,
            (None, Some(c)) => c[axis],
            (None, None) => {
                return Err(param(format!("band is unbounded on axis {axis}; a harmonic cap is required")))
            }
        };
    }
    Ok(out)
}

/// Draws a real field with independent complex Gaussian coefficients on every
/// in-band harmonic, then rescales so that its mean-square value is exactly
/// `power`.
pub fn synthesize_field(seed: u64, length: f64, band: BandRegion, power: f64) -> Result<HarmonicField> {
    synthesize_field_on(seed, [length, length], band, power, None)
}

pub fn synthesize_field_on(
    seed: u64,
    lengths: [f64; 2],
    band: BandRegion,
    power: f64,
    cap: Option<[usize; 2]>,
) -> Result<HarmonicField> {
    band.validate()?;
    if !(power.is_finite() && power >= 0.0) {
        return Err(param(format!("power must be nonnegative, got {power}")));
    }
    let kmax = harmonic_limits(lengths, &band, cap)?;
    let mut field = HarmonicField::zeros(lengths, kmax, band)?;
    let mut g = rng(seed);
    let mut admitted = 0usize;
    for i in 0..field.coeffs.len() {
        let k = field.key(i);
        if !is_representative(k) || !band.contains(field.frequency(k)) {
            continue;
        }
        admitted += 1;
        let re: f64 = g.sample(StandardNormal);
        let im: f64 = g.sample(StandardNormal);
        field.set_pair(k, Complex64::new(re, im))?;
    }
    if admitted == 0 {
        return Err(Error::EmptyBand);
    }
    let ms = field.mean_square();
    if ms > 0.0 {
        let s = (power / ms).sqrt();
        field.coeffs.iter_mut().for_each(|c| *c *= s);
    }
    Ok(field)
}

/// True for the DC term and for one member of every `{k, -k}` pair.
pub(crate) fn is_representative(k: [i64; 2]) -> bool {
    k[0] > 0 || (k[0] == 0 && k[1] >= 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn tiny_band_gives_constant_field() {
        let band = BandRegion::square(1e-3).unwrap();
        let f = synthesize_field(3, TAU, band, 2.0).unwrap();
        assert_eq!(f.kmax(), [0, 0]);
        let dc = f.coeff([0, 0]).re;
        for r in [[0.0, 0.0], [1.3, 4.0], [-7.0, 2.5]] {
            assert!((f.eval(r) - dc).abs() < 1e-14);
        }
        assert!((dc * dc - 2.0).abs() < 1e-12);
    }

    #[test]
    fn band_edge_exclusion() {
        let f = synthesize_field(11, TAU, BandRegion::square(3.0).unwrap(), 1.0).unwrap();
        assert_eq!(f.kmax(), [3, 3]);
        assert_eq!(f.coeff([4, 0]), ZERO);
        assert!(f.coeff([3, 0]).norm() > 0.0);
        assert!(f.coeff([3, -3]).norm() > 0.0);
    }

    #[test]
    fn dft_of_grid_has_no_out_of_band_energy() {
        let band = BandRegion::square(3.0 * PI / 4.0).unwrap();
        let f = synthesize_field(5, 16.0, band, 1.0).unwrap();
        let n = 64;
        let mut grid: Vec<Complex64> = f.grid_values(n, n).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        fft2(&mut grid, n, n, FftDirection::Forward);
        let (mut inside, mut outside) = (0.0, 0.0);
        for iy in 0..n {
            for ix in 0..n {
                let k = [centered(ix, n), centered(iy, n)];
                let e = grid[iy * n + ix].norm_sqr();
                if band.contains(f.frequency(k)) {
                    inside += e;
                } else {
                    outside += e;
                }
            }
        }
        assert!(outside / inside < 1e-12, "{}", outside / inside);
    }

    fn centered(i: usize, n: usize) -> i64 {
        if i <= n / 2 { i as i64 } else { i as i64 - n as i64 }
    }

    #[test]
    fn evaluation_is_periodic_and_matches_grid() {
        let f = synthesize_field(8, 5.0, BandRegion::rectangle(4.0, 2.0).unwrap(), 1.0).unwrap();
        let r = [0.37, 1.9];
        assert!((f.eval(r) - f.eval([r[0] + 5.0, r[1]])).abs() < 1e-12);
        assert!((f.eval(r) - f.eval([r[0], r[1] - 10.0])).abs() < 1e-12);
        let (nx, ny) = (12, 10);
        let g = f.grid_values(nx, ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let p = [ix as f64 * 5.0 / nx as f64, iy as f64 * 5.0 / ny as f64];
                assert!((g[iy * nx + ix] - f.eval(p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_mean_square() {
        let f = synthesize_field(21, 7.0, BandRegion::square(5.0).unwrap(), 3.5).unwrap();
        let n = 32;
        let g = f.grid_values(n, n);
        let ms = g.iter().map(|v| v * v).sum::<f64>() / (n * n) as f64;
        assert!((ms - f.mean_square()).abs() < 1e-10 * ms);
        assert!((f.mean_square() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn synthesis_is_deterministic() {
        let b = BandRegion::wave_cone(3.0, 1.5).unwrap();
        let a = synthesize_field(99, TAU, b, 1.0).unwrap();
        let c = synthesize_field(99, TAU, b, 1.0).unwrap();
        assert_eq!(a, c);
        assert!(a.symmetry_defect() == 0.0);
        for (k, c) in a.nonzero() {
            assert!(b.contains(a.frequency(k)), "{k:?} {c}");
        }
    }

    #[test]
    fn unbounded_strip_needs_cap() {
        let b = BandRegion::strip(0, 2.0).unwrap();
        assert!(synthesize_field(1, TAU, b, 1.0).is_err());
        let f = synthesize_field_on(1, [TAU, TAU], b, 1.0, Some([9, 4])).unwrap();
        assert_eq!(f.kmax(), [2, 4]);
    }
}
