//! Reconstruction of continuous fields from lattice samples.
//!
//! The reconstruction `f^(r) = sum_n mu[n] h_rec(r - Lambda n)` is evaluated on
//! the torus with the periodized kernel, whose Fourier coefficients are
//! `H_rec(omega_k) / V`. The output is therefore a harmonic field with
//! `c^_k = H_rec(omega_k) / V * sum_n mu[n] exp(-i omega_k . Lambda n)`,
//! computed with one DFT when the lattice tiles the domain.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::band::BandRegion;
use crate::error::{param, Error, Result};
use crate::fft::{bin, fft2};
use crate::field::{harmonic_limits, HarmonicField};
use crate::sampling::{kappa, sinc, SampleLattice, SampleSet, SamplingKernel, Scheme};

/// Ideal lowpass interpolator: `H_rec = gain` on `|omega_i| <= cutoff[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconKernel {
    pub cutoff: [f64; 2],
    pub gain: f64,
    pub dim: usize,
}

impl ReconKernel {
    /// Passband `[-rho_x, rho_x] x [-rho_y, rho_y]` with gain `Delta_x Delta_y`.
    pub fn lattice(lattice: &SampleLattice, cutoff: [f64; 2]) -> Result<Self> {
        let k = ReconKernel { cutoff, gain: lattice.cell_volume(), dim: lattice.dim };
        k.validate()?;
        Ok(k)
    }

    /// 1-D kernel `h(x) = (v T rho / pi) sinc(rho x / pi)` for samples at spacing `v T`.
    pub fn line(spacing: f64, rho: f64) -> Result<Self> {
        let k = ReconKernel { cutoff: [rho, f64::INFINITY], gain: spacing, dim: 1 };
        k.validate()?;
        Ok(k)
    }

    fn validate(&self) -> Result<()> {
        let ok = (0..self.dim).all(|i| self.cutoff[i] > 0.0 && self.cutoff[i].is_finite());
        if !ok || !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(param(format!("invalid reconstruction kernel {self:?}")));
        }
        Ok(())
    }

    pub fn passes(&self, w: [f64; 2]) -> bool {
        (0..self.dim).all(|i| w[i].abs() <= self.cutoff[i] * (1.0 + 1e-12))
    }

    pub fn response(&self, w: [f64; 2]) -> f64 {
        if self.passes(w) {
            self.gain
        } else {
            0.0
        }
    }

    pub fn passband(&self) -> BandRegion {
        if self.dim == 1 {
            BandRegion::Interval { rho: self.cutoff[0] }
        } else {
            BandRegion::Rectangle { rho_x: self.cutoff[0], rho_y: self.cutoff[1] }
        }
    }
}

/// Where a reconstruction came from: enough of the sample set to redo the
/// dual-lattice bookkeeping without the sample values.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub lattice: SampleLattice,
    pub sampling_kernel: SamplingKernel,
    pub motion_axis: Option<usize>,
    pub scheme: Scheme,
    pub oversample: usize,
    pub seed: Option<u64>,
    pub support: Vec<BandRegion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedField {
    pub field: HarmonicField,
    pub kernel: ReconKernel,
    pub provenance: Provenance,
    fully_aliased: bool,
}

impl ReconstructedField {
    pub fn eval(&self, r: [f64; 2]) -> f64 {
        self.field.eval(r)
    }

    /// Marks every spectral cell as contaminated.
    pub fn flag_fully_aliased(mut self) -> Self {
        self.fully_aliased = true;
        self
    }

    pub fn is_fully_aliased(&self) -> bool {
        self.fully_aliased
    }

    /// Frequencies `omega_k + s` (with `s` a nonzero dual-lattice vector) that
    /// fold onto harmonic `k`, restricted to a window around the supports.
    pub fn replica_sources(&self, k: [i64; 2]) -> Vec<[i64; 2]> {
        let lat = &self.provenance.lattice;
        let n = lat.counts;
        let lengths = self.field.lengths();
        let dim = self.field.dim();
        let mut range = [0i64; 2];
        for (axis, r) in range.iter_mut().enumerate().take(dim) {
            let reach = self
                .provenance
                .support
                .iter()
                .map(|b| match b.extent()[axis] {
                    Some(e) => e * lengths[axis] / TAU,
                    None => 64.0 * n[axis] as f64,
                })
                .fold(0.0, f64::max);
            *r = ((reach + k[axis].unsigned_abs() as f64) / n[axis] as f64).ceil() as i64 + 1;
        }
        let mut out = Vec::new();
        for sx in -range[0]..=range[0] {
            for sy in -range[1]..=range[1] {
                if sx == 0 && sy == 0 {
                    continue;
                }
                out.push([k[0] + sx * n[0] as i64, k[1] + sy * n[1] as i64]);
            }
        }
        out
    }

    /// True when some replica of a declared support band, passed by the
    /// sampling kernel, lands on harmonic `k`.
    pub fn is_contaminated(&self, k: [i64; 2]) -> bool {
        if self.fully_aliased {
            return true;
        }
        let p = &self.provenance;
        self.replica_sources(k).into_iter().any(|src| {
            let w = self.field.frequency(src);
            let passed = match p.motion_axis {
                Some(a) => p.sampling_kernel.response(w[a]) != 0.0,
                None => true,
            };
            passed && p.support.iter().any(|b| b.contains(w))
        })
    }

    pub fn export_grid_csv<W: Write>(&self, out: W, nx: usize, ny: usize) -> Result<()> {
        self.field.export_csv(out, nx, ny, self.provenance.seed)
    }

    /// Nonzero coefficients as `k_x,k_y,re,im`.
    pub fn export_spectrum_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.field.metadata(self.provenance.seed))?;
        writeln!(out, "k_x,k_y,re,im")?;
        for (k, c) in self.field.nonzero() {
            writeln!(out, "{},{},{:.17e},{:.17e}", k[0], k[1], c.re, c.im)?;
        }
        Ok(())
    }
}

fn sample_spectrum(samples: &SampleSet, field: &HarmonicField) -> impl Fn([i64; 2]) -> Complex64 {
    let lat = samples.lattice;
    let [nx, ny] = lat.counts;
    if lat.tiles(samples.lengths) {
        let mut d: Vec<Complex64> = samples.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut d, nx, ny, FftDirection::Forward);
        return Box::new(move |k: [i64; 2]| d[bin(k[1], ny) * nx + bin(k[0], nx)]) as Box<dyn Fn([i64; 2]) -> Complex64>;
    }
    let points: Vec<([f64; 2], f64)> = (0..ny)
        .flat_map(|iy| (0..nx).map(move |ix| [ix, iy]))
        .map(|n| (lat.point(n), samples.value(n)))
        .collect();
    let probe = field.clone();
    Box::new(move |k: [i64; 2]| {
        let w = probe.frequency(k);
        points
            .iter()
            .map(|(r, v)| Complex64::from_polar(*v, -(w[0] * r[0] + w[1] * r[1])))
            .sum()
    })
}

/// Lattice sinc reconstruction of a sample set.
pub fn reconstruct_lattice(samples: &SampleSet, kernel: &ReconKernel) -> Result<ReconstructedField> {
    if kernel.dim != samples.lattice.dim {
        return Err(param("reconstruction kernel and lattice dimensions differ"));
    }
    let band = kernel.passband();
    let kmax = harmonic_limits(samples.lengths, &band, None)?;
    let mut field = HarmonicField::zeros(samples.lengths, kmax, band)?;
    let volume = field.cell_volume();
    let spectrum = sample_spectrum(samples, &field);
    let keys: Vec<[i64; 2]> = field.iter().map(|(k, _)| k).collect();
    for k in keys {
        let w = field.frequency(k);
        if !kernel.passes(w) || !crate::field::is_representative(k) {
            continue;
        }
        field.set_pair(k, spectrum(k) * (kernel.gain / volume))?;
    }
    Ok(ReconstructedField {
        field,
        kernel: *kernel,
        provenance: Provenance {
            lattice: samples.lattice,
            sampling_kernel: samples.kernel,
            motion_axis: samples.motion_axis,
            scheme: samples.scheme,
            oversample: samples.oversample,
            seed: samples.seed,
            support: samples.support.clone(),
        },
        fully_aliased: false,
    })
}

/// One-dimensional reconstruction of samples taken every `T` seconds by a
/// sensor moving at speed `v`, with passband `[-rho, rho]`.
pub fn reconstruct_1d(samples: &SampleSet, speed: f64, interval: f64, rho: f64) -> Result<ReconstructedField> {
    if samples.lattice.dim != 1 {
        return Err(Error::Lattice("1-D reconstruction needs a line lattice".into()));
    }
    let spacing = speed * interval / samples.oversample as f64;
    let actual = samples.lattice.spacing()[0];
    if (spacing - actual).abs() > 1e-9 * actual {
        return Err(Error::Lattice(format!("sample spacing {actual} differs from v T / k = {spacing}")));
    }
    reconstruct_lattice(samples, &ReconKernel::line(actual, rho)?)
}

/// Spectrum predicted for mobile box-filter sampling in the dense-sampling
/// limit: every harmonic in `[-rho, rho]^2` scaled by
/// `(kappa Delta_b / pi) sinc(Delta_b omega_x / pi)`, the rest dropped.
pub fn predicted_box_spectrum(field: &HarmonicField, half_width: f64, rho: f64) -> Result<HarmonicField> {
    let kap = kappa(half_width, rho)?;
    let omega = if field.dim() == 1 { BandRegion::interval(rho)? } else { BandRegion::square(rho)? };
    Ok(field
        .project(omega)
        .map(|_, w, c| c * (kap * half_width / PI * sinc(half_width * w[0] / PI))))
}

/// Averages two reconstructions made with motion along different axes,
/// dropping cells that the dual-lattice bookkeeping marks as contaminated.
///
/// Cells clean in both inputs are averaged; cells clean in one input take that
/// input's value; cells contaminated in both are averaged as well, since no
/// clean estimate exists. A fully aliased input is ignored.
pub fn combine_orthogonal(recon_x: &ReconstructedField, recon_y: &ReconstructedField) -> Result<ReconstructedField> {
    if !recon_x.field.same_domain(&recon_y.field) {
        return Err(param("reconstructions live on different domains"));
    }
    match (recon_x.fully_aliased, recon_y.fully_aliased) {
        (true, false) => return Ok(recon_y.clone()),
        (false, true) => return Ok(recon_x.clone()),
        _ => {}
    }
    let mut out = recon_x.field.combine(0.5, &recon_y.field, 0.5)?;
    let keys: Vec<[i64; 2]> = out.iter().map(|(k, _)| k).filter(|k| crate::field::is_representative(*k)).collect();
    for k in keys {
        let (cx, cy) = (recon_x.is_contaminated(k), recon_y.is_contaminated(k));
        let v = match (cx, cy) {
            (false, true) => recon_x.field.coeff(k),
            (true, false) => recon_y.field.coeff(k),
            _ => continue,
        };
        out.set_pair(k, v)?;
    }
    let mut res = recon_x.clone();
    res.field = out;
    Ok(res)
}
