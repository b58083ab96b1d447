//! Noise variance of lattice reconstructions, closed forms for flat-band
//! noise, alias bookkeeping, error metrics and bandwidth predictions for
//! sensor signals along piecewise-affine paths.
//!
//! Variances are replica sums `(2 pi)^-d sum_s int_Omega S(omega - s)
//! W(omega - s) d omega`, where `s` runs over the dual-lattice shifts and `W`
//! is the squared sampling-kernel response along the motion axis.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{param, Error, Result};
use crate::fft::{bin, fft1};
use crate::field::HarmonicField;
use crate::noise::NoisePsd;
use crate::quad::integrate;
use crate::reconstruction::{ReconKernel, ReconstructedField};
use crate::sampling::{SampleLattice, SamplingKernel};
use crate::trajectory::{Path, PerturbedPath, PiecewiseAffinePath};

/// Shell cap for replica sums of densities with unbounded support.
pub const MAX_SHELLS_2D: usize = 64;
pub const MAX_SHELLS_1D: usize = 20_000;
/// Relative size of the remaining tail at which replica sums stop.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

/// Whether flat-band inputs may use their closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    Auto,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    pub value: f64,
    pub method: Method,
    /// Per-shift contributions (lattice shift index, variance).
    pub replicas: Vec<([i64; 2], f64)>,
    /// Upper bound on the neglected replica tail.
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceBreakdown {
    pub stat: VarianceEstimate,
    pub m1: VarianceEstimate,
    pub m2: Option<VarianceEstimate>,
}

fn shell(m: usize, shifting: [bool; 2]) -> Vec<[i64; 2]> {
    let m = m as i64;
    match shifting {
        [false, false] => {
            if m == 0 {
                vec![[0, 0]]
            } else {
                vec![]
            }
        }
        [true, false] | [false, true] => {
            let pts: Vec<i64> = if m == 0 { vec![0] } else { vec![-m, m] };
            pts.into_iter().map(|n| if shifting[0] { [n, 0] } else { [0, n] }).collect()
        }
        [true, true] => {
            let mut out = Vec::new();
            for nx in -m..=m {
                for ny in -m..=m {
                    if nx.abs().max(ny.abs()) == m {
                        out.push([nx, ny]);
                    }
                }
            }
            out
        }
    }
}

/// Sums `value(n, s)` over dual-lattice shifts `s = (n_x p_x, n_y p_y)` shell
/// by shell. `reach` bounds `|omega_i|` over the evaluation region, `area` is
/// its measure (1 for pointwise sums) and `wmax` bounds the weight.
fn replica_sum(
    psd: &NoisePsd,
    period: [Option<f64>; 2],
    reach: f64,
    area: f64,
    wmax: f64,
    mut value: impl FnMut([f64; 2]) -> f64,
) -> Result<(f64, Vec<([i64; 2], f64)>, f64)> {
    let shifting = [period[0].is_some(), period[1].is_some()];
    let j = shifting.iter().filter(|b| **b).count();
    let p = period.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let tail_info = psd.tail_bound()?;
    let support = psd.support();
    let cap = if j == 2 { MAX_SHELLS_2D } else { MAX_SHELLS_1D };
    let mut total = 0.0;
    let mut table = Vec::new();
    let mut tail = 0.0;
    for m in 0.. {
        let pts = shell(m, shifting);
        if pts.is_empty() {
            break;
        }
        if let Some(sup) = support {
            if m as f64 * p - reach >= sup {
                break;
            }
        }
        for n in pts {
            let s = [n[0] as f64 * period[0].unwrap_or(0.0), n[1] as f64 * period[1].unwrap_or(0.0)];
            let v = value(s);
            total += v;
            table.push((n, v));
        }
        if support.is_some() {
            continue;
        }
        let Some((c, r0, r)) = tail_info else { continue };
        let next = m as f64 + 1.0;
        if next < 2.0 || p * (next - 0.5) < r0 {
            if m >= cap {
                return Err(Error::Divergence(format!("replica sum did not reach its tail region within {cap} shells")));
            }
            continue;
        }
        if r <= j as f64 {
            return Err(Error::Divergence(format!("decay exponent {r} does not exceed the number of shift axes {j}")));
        }
        let base = (next - 1.5).max(0.5);
        let shells = if j == 1 { 2.0 * base.powf(1.0 - r) / (r - 1.0) } else { 16.0 * base.powf(2.0 - r) / (r - 2.0) };
        tail = area * c * wmax * p.powf(-r) * shells;
        if tail <= TAIL_TOLERANCE * total.abs() || m >= cap {
            break;
        }
    }
    Ok((total, table, tail))
}

/// Integral of `g` over `[-rho, rho]^d` with per-axis breakpoints.
/// Integral of `g` over `[-rho, rho]^d`; inner breakpoints may depend on `x`.
fn integrate_band(
    g: impl Fn([f64; 2]) -> f64,
    rho: f64,
    dim: usize,
    bx: &[f64],
    by: impl Fn(f64) -> Vec<f64>,
    tol: f64,
) -> f64 {
    if dim == 1 {
        return integrate(|x| g([x, 0.0]), -rho, rho, bx, tol);
    }
    let inner = |x: f64| integrate(|y| g([x, y]), -rho, rho, &by(x), 1e-2 * tol / (2.0 * rho));
    integrate(inner, -rho, rho, bx, tol)
}

fn check_dim(psd: &NoisePsd, dim: usize, rho: f64) -> Result<()> {
    psd.validate()?;
    if psd.dim() != dim || !(dim == 1 || dim == 2) {
        return Err(param(format!("PSD dimension {} does not match {dim}", psd.dim())));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(param(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

/// `int_R g` for a density with integrable tails: `[-x, x]` directly, the
/// rest through `omega = x / u^2`, which keeps power-law tails smooth at `u = 0`.
fn integrate_real_line(g: impl Fn(f64) -> f64, x: f64, breakpoints: &[f64], tol: f64) -> f64 {
    let core = integrate(&g, -x, x, breakpoints, tol);
    let tail = |sign: f64| integrate(|u: f64| g(sign * x / (u * u)) * 2.0 * x / (u * u * u), 0.0, 1.0, &[], tol);
    core + tail(1.0) + tail(-1.0)
}

fn radial_knots(psd: &NoisePsd) -> Vec<f64> {
    match psd {
        NoisePsd::Tabulated { radii, .. } => radii.clone(),
        _ => Vec::new(),
    }
}

/// Kinks of a radial density along the line `omega_other = c`.
fn line_knots(radii: &[f64], c: f64) -> Vec<f64> {
    radii
        .iter()
        .filter(|r| **r >= c.abs())
        .flat_map(|r| {
            let h = (r * r - c * c).max(0.0).sqrt();
            [-h, h]
        })
        .collect()
}

/// Unit-weight replica sums with period `2 rho` tile the shifted axes, so
/// the sum equals the integral of `S` over `R` on those axes and over
/// `[-rho, rho]` on the others.
fn tiled_variance(psd: &NoisePsd, rho: f64, dim: usize, shifting: [bool; 2]) -> f64 {
    let radii = radial_knots(psd);
    let reach = radii.last().copied().unwrap_or(0.0).max(rho);
    let scale = psd_scale(psd);
    let tol = 1e-13 * scale * reach.powi(dim as i32);
    let line = |g: &dyn Fn(f64) -> f64, infinite: bool, knots: &[f64], tol: f64| {
        if infinite {
            integrate_real_line(g, reach, knots, tol)
        } else {
            integrate(g, -rho, rho, knots, tol)
        }
    };
    let value = if dim == 1 {
        line(&|x| psd.value([x, 0.0]), shifting[0], &line_knots(&radii, 0.0), tol)
    } else {
        let inner = |x: f64| {
            let knots = line_knots(&radii, x);
            line(&|y| psd.value([x, y]), shifting[1], &knots, 1e-2 * tol / reach)
        };
        line(&inner, shifting[0], &line_knots(&radii, 0.0), tol)
    };
    value / TAU.powi(dim as i32)
}

/// Replica-summed variance over `Omega = [-rho, rho]^d` with shift periods
/// `period` and squared kernel weight `weight(omega_x)` along axis 0.
fn replica_variance(
    psd: &NoisePsd,
    rho: f64,
    dim: usize,
    period: [Option<f64>; 2],
    weight: Option<&dyn Fn(f64) -> f64>,
    wmax: f64,
) -> Result<VarianceEstimate> {
    let mut period = period;
    if dim == 1 {
        period[1] = None;
    }
    let area = (2.0 * rho).powi(dim as i32);
    let scale = psd_scale(psd);
    let bp = psd.breakpoints();
    let radii = radial_knots(psd);
    let norm = TAU.powi(dim as i32);
    let unit = |_: f64| 1.0;
    let w: &dyn Fn(f64) -> f64 = weight.unwrap_or(&unit);
    let replica = |s: [f64; 2]| {
        let mut bx: Vec<f64> = bp.iter().map(|b| b + s[0]).collect();
        bx.extend(line_knots(&radii, 0.0).iter().map(|k| k + s[0]));
        let by = |x: f64| {
            let mut v: Vec<f64> = bp.iter().map(|b| b + s[1]).collect();
            v.extend(line_knots(&radii, x - s[0]).iter().map(|k| k + s[1]));
            v
        };
        let g = |om: [f64; 2]| {
            let u = [om[0] - s[0], om[1] - s[1]];
            let sv = psd.value(u);
            if sv == 0.0 {
                0.0
            } else {
                sv * w(u[0])
            }
        };
        integrate_band(g, rho, dim, &bx, by, 1e-13 * scale * area) / norm
    };
    let tiles = weight.is_none() && period.iter().flatten().all(|p| (p - 2.0 * rho).abs() <= 1e-12 * rho);
    if tiles && psd.support().is_none() {
        psd.tail_bound()?;
        let shifting = [period[0].is_some(), period[1].is_some()];
        let mut replicas = Vec::new();
        for m in 0..=1 {
            for n in shell(m, shifting) {
                let s = [n[0] as f64 * 2.0 * rho, n[1] as f64 * 2.0 * rho];
                replicas.push((n, replica(if dim == 1 { [s[0], 0.0] } else { s })));
            }
        }
        let value = tiled_variance(psd, rho, dim, shifting);
        return Ok(VarianceEstimate { value, method: Method::Quadrature, replicas, tail: 0.0 });
    }
    let (total, table, tail) = replica_sum(psd, period, rho, area, wmax, replica)?;
    Ok(VarianceEstimate { value: total, method: Method::Quadrature, replicas: table, tail: tail / norm })
}

fn psd_scale(psd: &NoisePsd) -> f64 {
    match psd {
        NoisePsd::FlatBand { level, .. } => level.max(1e-300),
        NoisePsd::Tabulated { values, .. } => values.iter().copied().fold(1e-300, f64::max),
        _ => 1.0,
    }
}

fn odd_ratio(psd: &NoisePsd) -> Option<(u32, f64)> {
    if let NoisePsd::FlatBand { a, level, .. } = *psd {
        if a.fract() == 0.0 && a >= 1.0 && (a as u64) % 2 == 1 && a < u32::MAX as f64 {
            return Some((a as u32, level));
        }
    }
    None
}

/// Variance of a static reconstruction at the Nyquist lattice `pi / rho`.
pub fn variance_static(psd: &NoisePsd, rho: f64, dim: usize, eval: Evaluation) -> Result<VarianceEstimate> {
    check_dim(psd, dim, rho)?;
    if eval == Evaluation::Auto {
        if let Some((a, level)) = odd_ratio(psd) {
            let (s, _) = closed_forms(a, rho, dim)?;
            return Ok(closed(level * s));
        }
    }
    replica_variance(psd, rho, dim, [Some(2.0 * rho), Some(2.0 * rho)], None, 1.0)
}

/// Variance of a mobile reconstruction with the ideal lowpass filter along
/// `x` and lines at the Nyquist spacing.
pub fn variance_mobile_ideal(psd: &NoisePsd, rho: f64, dim: usize, eval: Evaluation) -> Result<VarianceEstimate> {
    check_dim(psd, dim, rho)?;
    if eval == Evaluation::Auto {
        if let Some((a, level)) = odd_ratio(psd) {
            let (_, m) = closed_forms(a, rho, dim)?;
            return Ok(closed(level * m));
        }
    }
    replica_variance(psd, rho, dim, [None, Some(2.0 * rho)], None, 1.0)
}

/// Variance of a mobile reconstruction with the normalized box filter of
/// half-width `half_width`; `spacing = None` takes the dense-sampling limit
/// `Delta_x -> 0`.
pub fn variance_mobile_box(
    psd: &NoisePsd,
    rho: f64,
    dim: usize,
    half_width: f64,
    spacing: Option<f64>,
) -> Result<VarianceEstimate> {
    check_dim(psd, dim, rho)?;
    let kernel = SamplingKernel::boxcar(half_width, rho)?;
    let px = match spacing {
        Some(d) if d > 0.0 && d.is_finite() => Some(TAU / d),
        Some(d) => return Err(param(format!("along-track spacing must be positive, got {d}"))),
        None => None,
    };
    let wmax = kernel.response(0.0).powi(2);
    let weight = |w: f64| kernel.response(w).powi(2);
    replica_variance(psd, rho, dim, [px, Some(2.0 * rho)], Some(&weight), wmax)
}

pub fn variance_breakdown(psd: &NoisePsd, rho: f64, dim: usize, boxcar: Option<(f64, Option<f64>)>) -> Result<VarianceBreakdown> {
    Ok(VarianceBreakdown {
        stat: variance_static(psd, rho, dim, Evaluation::Auto)?,
        m1: variance_mobile_ideal(psd, rho, dim, Evaluation::Auto)?,
        m2: boxcar.map(|(b, dx)| variance_mobile_box(psd, rho, dim, b, dx)).transpose()?,
    })
}

fn closed(value: f64) -> VarianceEstimate {
    VarianceEstimate { value, method: Method::ClosedForm, replicas: Vec::new(), tail: 0.0 }
}

fn closed_forms(a: u32, rho: f64, dim: usize) -> Result<(f64, f64)> {
    let a = a as f64;
    Ok(match dim {
        1 => (rho * a / PI, rho / PI),
        2 => (rho * rho * a * a / (PI * PI), rho * rho * a / (PI * PI)),
        _ => return Err(param(format!("dimension must be 1 or 2, got {dim}"))),
    })
}

/// `(sigma_stat^2, sigma_m1^2)` for unit flat-band noise on `[-a rho, a rho]^2`.
pub fn prop1_closed_forms(a: u32, rho: f64) -> Result<(f64, f64)> {
    if a == 0 {
        return Err(param("bandwidth ratio a must be positive"));
    }
    if a % 2 == 0 {
        return Err(Error::EvenRatio(a));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(param(format!("rho must be positive, got {rho}")));
    }
    closed_forms(a, rho, 2)
}

/// Density of the reconstructed noise at every harmonic of a domain of the
/// given lengths inside the reconstruction passband:
/// `|H_rec|^2 / (Delta_x Delta_y)^2 * sum_s S(omega - s) |H_sam(omega - s)|^2`.
pub fn psd_of_reconstruction(
    psd: &NoisePsd,
    kernel: SamplingKernel,
    motion_axis: Option<usize>,
    lattice: &SampleLattice,
    recon: &ReconKernel,
    lengths: [f64; 2],
) -> Result<Vec<([i64; 2], f64)>> {
    psd.validate()?;
    if !lattice.is_rectangular() || lattice.dim != psd.dim() {
        return Err(Error::Lattice("PSD propagation needs a rectangular lattice of matching dimension".into()));
    }
    let d = lattice.spacing();
    let dim = lattice.dim;
    let period = [Some(TAU / d[0]), if dim == 2 { Some(TAU / d[1]) } else { None }];
    let gain = recon.gain / lattice.cell_volume();
    let wmax = match kernel {
        SamplingKernel::Boxcar { .. } => kernel.response(0.0).powi(2),
        _ => 1.0,
    };
    let weight = |u: [f64; 2]| match motion_axis {
        Some(a) => kernel.response(u[a]).powi(2),
        None => 1.0,
    };
    let kmax: Vec<i64> = (0..2)
        .map(|i| if i < dim { (recon.cutoff[i] * lengths[i] / TAU * (1.0 + 1e-12)).floor() as i64 } else { 0 })
        .collect();
    let mut out = Vec::new();
    for kx in -kmax[0]..=kmax[0] {
        for ky in -kmax[1]..=kmax[1] {
            let w = [TAU * kx as f64 / lengths[0], if dim == 2 { TAU * ky as f64 / lengths[1] } else { 0.0 }];
            if !recon.passes(w) {
                continue;
            }
            let reach = w[0].abs().max(w[1].abs());
            let (s, _, _) = replica_sum(psd, period, reach, 1.0, wmax, |s| {
                let u = [w[0] - s[0], w[1] - s[1]];
                psd.value(u) * weight(u)
            })?;
            out.push(([kx, ky], gain * gain * s));
        }
    }
    Ok(out)
}

/// `||f^ - f|| / ||f|| * 100`.
pub fn rmse_percent(estimate: &HarmonicField, truth: &HarmonicField) -> Result<f64> {
    let norm = truth.energy();
    if norm <= 0.0 {
        return Err(Error::UndefinedMetric("reference field has zero norm".into()));
    }
    Ok((estimate.sub(truth)?.energy() / norm).sqrt() * 100.0)
}

/// `sqrt(mean ||f^_i - f||^2) / ||f|| * 100` over trials.
pub fn rmse_percent_expected(squared_errors: &[f64], truth_energy: f64) -> Result<f64> {
    if truth_energy <= 0.0 {
        return Err(Error::UndefinedMetric("reference field has zero norm".into()));
    }
    if squared_errors.is_empty() {
        return Err(Error::UndefinedMetric("no trials".into()));
    }
    let mean = squared_errors.iter().sum::<f64>() / squared_errors.len() as f64;
    Ok((mean / truth_energy).sqrt() * 100.0)
}

/// Error energy of a reconstruction split by origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliasEnergy {
    /// Replicas shifted along `omega_x` (any `omega_y` shift).
    pub x_shift: f64,
    /// Replicas shifted along `omega_y` only.
    pub y_shift: f64,
    /// In-place attenuation by the sampling kernel.
    pub distortion: f64,
    /// `||f^ - lowpass(truth)||^2`.
    pub total: f64,
}

/// Attributes the reconstruction error against the passband-projected truth
/// to the dual-lattice replica that produced it. Each bin error
/// `e_b = (H(omega_b) - 1) c_b + sum_{s != 0} H(omega_{b+sN}) c_{b+sN}` is
/// split additively as `|e_b|^2 = sum_terms Re(conj(e_b) term)`.
pub fn alias_energy(recon: &ReconstructedField, truth: &HarmonicField) -> Result<AliasEnergy> {
    let f = &recon.field;
    if !f.same_domain(truth) {
        return Err(param("reconstruction and truth live on different domains"));
    }
    let p = &recon.provenance;
    let lengths = f.lengths();
    let dim = f.dim();
    if !p.lattice.tiles(lengths) {
        return Err(Error::Lattice("alias bookkeeping needs a lattice that tiles the domain".into()));
    }
    let n = p.lattice.counts;
    let gain = recon.kernel.gain / p.lattice.cell_volume();
    let h = |w: [f64; 2]| match p.motion_axis {
        Some(a) => p.sampling_kernel.response(w[a]),
        None => 1.0,
    };
    // passband representative of each residue class
    let mut rep: std::collections::HashMap<[usize; 2], [i64; 2]> = std::collections::HashMap::new();
    for (k, _) in f.iter() {
        if recon.kernel.passes(f.frequency(k)) && rep.insert([bin(k[0], n[0]), bin(k[1], n[1])], k).is_some() {
            return Err(Error::Lattice("passband is wider than the lattice's fundamental cell".into()));
        }
    }
    let mut terms: std::collections::HashMap<[i64; 2], Vec<([i64; 2], Complex64)>> = std::collections::HashMap::new();
    for (k, c) in truth.nonzero() {
        let r = [bin(k[0], n[0]), bin(k[1], n[1])];
        let Some(&b) = rep.get(&r) else { continue };
        let w = truth.frequency(k);
        let s = [(k[0] - b[0]) / n[0] as i64, if dim == 2 { (k[1] - b[1]) / n[1] as i64 } else { 0 }];
        let t = if s == [0, 0] { c * (gain * h(w) - 1.0) } else { c * (gain * h(w)) };
        terms.entry(b).or_default().push((s, t));
    }
    let volume = if dim == 1 { lengths[0] } else { lengths[0] * lengths[1] };
    let mut out = AliasEnergy { x_shift: 0.0, y_shift: 0.0, distortion: 0.0, total: 0.0 };
    for (&_, &b) in rep.iter() {
        let err = f.coeff(b) - if recon.kernel.passes(truth.frequency(b)) { truth.coeff(b) } else { Complex64::new(0.0, 0.0) };
        out.total += err.norm_sqr() * volume;
        for (s, t) in terms.get(&b).map(|v| v.as_slice()).unwrap_or(&[]) {
            let share = (err.conj() * t).re * volume;
            if s[0] != 0 {
                out.x_shift += share;
            } else if s[1] != 0 {
                out.y_shift += share;
            } else {
                out.distortion += share;
            }
        }
    }
    Ok(out)
}

/// Exact reconstruction noise variance from white measurement noise of
/// variance `sigma2` on every sample: each passband coefficient collects
/// `N_samples sigma2 (gain / V)^2`.
pub fn measurement_noise_variance(
    lattice: &SampleLattice,
    recon: &ReconKernel,
    lengths: [f64; 2],
    sigma2: f64,
) -> Result<f64> {
    if !(sigma2 >= 0.0) {
        return Err(param("measurement noise variance must be nonnegative"));
    }
    let dim = lattice.dim;
    let mut passband = 1usize;
    for (i, l) in lengths.iter().enumerate().take(dim) {
        passband *= 2 * (recon.cutoff[i] * l / TAU * (1.0 + 1e-12)).floor() as usize + 1;
    }
    let volume: f64 = lengths.iter().take(dim).product();
    let g = recon.gain / volume;
    Ok(passband as f64 * lattice.len() as f64 * sigma2 * g * g)
}

/// Reconstruction noise variance at oversampling factor `k` given its value
/// at `k = 1`.
pub fn oversampling_variance_law(k: usize, baseline: f64) -> Result<f64> {
    if k == 0 {
        return Err(param("oversampling factor must be at least 1"));
    }
    Ok(baseline / k as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandPrediction {
    /// `v_k rho + 1 / Delta_k` per segment.
    pub per_segment: Vec<f64>,
    /// Maximum of the per-segment terms (plus the perturbation term).
    pub predicted: f64,
    /// `v_bar rho + m rho_x~ + 1 / Delta`.
    pub bound: f64,
    pub order: usize,
}

pub fn effective_bandwidth(path: &PiecewiseAffinePath, rho_f: f64) -> Result<BandPrediction> {
    if !(rho_f > 0.0) {
        return Err(param("field bandwidth must be positive"));
    }
    let per_segment: Vec<f64> = path.speeds().iter().zip(path.durations()).map(|(v, d)| v * rho_f + 1.0 / d).collect();
    let predicted = per_segment.iter().copied().fold(0.0, f64::max);
    let bound = path.max_speed() * rho_f + 1.0 / path.min_duration();
    Ok(BandPrediction { per_segment, predicted, bound, order: 0 })
}

/// Band outside which the signal along the perturbed path differs from its
/// order-`m` expansion by `O(eps^(m+1))`.
pub fn perturbed_band(path: &PerturbedPath, rho_f: f64, m: usize) -> Result<BandPrediction> {
    let base = effective_bandwidth(path.base(), rho_f)?;
    let extra = m as f64 * path.perturbation_bandwidth();
    Ok(BandPrediction {
        per_segment: base.per_segment.iter().map(|b| b + extra).collect(),
        predicted: base.predicted + extra,
        bound: base.bound + extra,
        order: m,
    })
}

/// `s(t) = f(x(t))` at `n` equispaced times over `[start, start + window)`.
pub fn path_signal(field: &HarmonicField, path: &dyn Path, start: f64, window: f64, n: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|j| path.position(start + window * j as f64 / n as f64).map(|x| field.eval([x, 0.0])))
        .collect()
}

/// Energy of a window-periodic signal, given by equispaced samples over a
/// window of length `window`, split into (inside `|omega| <= band`, outside).
pub fn band_energy(values: &[f64], window: f64, band: f64) -> (f64, f64) {
    padded_band_energy(values, window, band, 1)
}

/// Like [`band_energy`] but for the signal restricted to the window and zero
/// elsewhere: the samples are zero-padded to `pad` windows so the DFT bins
/// resolve its continuous spectrum at spacing `2 pi / (pad window)`.
pub fn padded_band_energy(values: &[f64], window: f64, band: f64, pad: usize) -> (f64, f64) {
    let (mut inside, mut outside) = (0.0, 0.0);
    for (w, e) in padded_spectrum(values, window, pad) {
        if w <= band * (1.0 + 1e-12) {
            inside += e;
        } else {
            outside += e;
        }
    }
    (inside, outside)
}

/// Smallest symmetric band holding `fraction` of the zero-padded spectrum's
/// energy.
pub fn energy_band(values: &[f64], window: f64, fraction: f64, pad: usize) -> f64 {
    let mut bins = padded_spectrum(values, window, pad);
    bins.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = bins.iter().map(|b| b.1).sum();
    let mut acc = 0.0;
    for (w, e) in &bins {
        acc += e;
        if acc >= fraction * total {
            return *w;
        }
    }
    bins.last().map_or(0.0, |b| b.0)
}

/// `(|omega|, energy)` per DFT bin of the samples zero-padded to `pad` windows.
fn padded_spectrum(values: &[f64], window: f64, pad: usize) -> Vec<(f64, f64)> {
    let pad = pad.max(1);
    let n = values.len() * pad;
    let span = window * pad as f64;
    let mut d: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    d.resize(n, Complex64::new(0.0, 0.0));
    fft1(&mut d, FftDirection::Forward);
    d.iter()
        .enumerate()
        .map(|(i, c)| {
            let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            ((TAU * m / span).abs(), c.norm_sqr() / (n * n) as f64 * span)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::BandRegion;
    use crate::field::synthesize_field;
    use crate::noise::ObservedField;
    use crate::reconstruction::reconstruct_lattice;
    use crate::sampling::{sample_mobile, sample_static};
    use crate::trajectory::ParallelLineSet;

    fn flat(a: f64) -> NoisePsd {
        NoisePsd::flat_band(a, PI, 1.0, 2).unwrap()
    }

    #[test]
    fn proposition_examples() {
        let close = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12;
        assert!(close(prop1_closed_forms(1, PI).unwrap(), (1.0, 1.0)));
        assert!(close(prop1_closed_forms(5, PI).unwrap(), (25.0, 5.0)));
        for a in [3, 5, 7] {
            let (s, m) = prop1_closed_forms(a, 1.7).unwrap();
            assert!((s / m - a as f64).abs() < 1e-12);
        }
        assert!(matches!(prop1_closed_forms(2, PI), Err(Error::EvenRatio(2))));
        assert!((variance_static(&flat(3.0), PI, 2, Evaluation::Auto).unwrap().value - 9.0).abs() < 1e-12);
        assert!((variance_mobile_ideal(&flat(3.0), PI, 2, Evaluation::Auto).unwrap().value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for a in [1.0, 3.0, 5.0] {
            for (dim, rho) in [(2, PI), (2, 0.8), (1, 2.0)] {
                let p = NoisePsd::flat_band(a, rho, 1.3, dim).unwrap();
                for (auto, quad) in [
                    (variance_static(&p, rho, dim, Evaluation::Auto), variance_static(&p, rho, dim, Evaluation::Quadrature)),
                    (variance_mobile_ideal(&p, rho, dim, Evaluation::Auto), variance_mobile_ideal(&p, rho, dim, Evaluation::Quadrature)),
                ] {
                    let (auto, quad) = (auto.unwrap(), quad.unwrap());
                    assert_eq!(auto.method, Method::ClosedForm);
                    assert!((auto.value / quad.value - 1.0).abs() < 1e-9, "{a} {dim}: {} {}", auto.value, quad.value);
                }
            }
        }
    }

    #[test]
    fn unit_ratio_static_equals_mobile() {
        let s = variance_static(&flat(1.0), PI, 2, Evaluation::Quadrature).unwrap().value;
        let m = variance_mobile_ideal(&flat(1.0), PI, 2, Evaluation::Quadrature).unwrap().value;
        assert!((s - m).abs() < 1e-12);
    }

    /// Midpoint replica sum on a grid aligned with every discontinuity.
    fn brute_static(a: f64, rho: f64, cells_per_rho: usize) -> f64 {
        let n = 2 * cells_per_rho;
        let h = 2.0 * rho / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = [-rho + (i as f64 + 0.5) * h, -rho + (j as f64 + 0.5) * h];
                for sx in -4..=4 {
                    for sy in -4..=4 {
                        let u = [w[0] - 2.0 * rho * sx as f64, w[1] - 2.0 * rho * sy as f64];
                        if u[0].abs() <= a * rho && u[1].abs() <= a * rho {
                            total += h * h;
                        }
                    }
                }
            }
        }
        total / (4.0 * PI * PI)
    }

    #[test]
    fn even_ratio_matches_brute_force() {
        let q = variance_static(&flat(2.0), PI, 2, Evaluation::Auto).unwrap();
        assert_eq!(q.method, Method::Quadrature);
        let b = brute_static(2.0, PI, 8);
        assert!((q.value / b - 1.0).abs() < 1e-6, "{} {b}", q.value);
    }

    #[test]
    fn box_variance_limits_and_brute_force() {
        let p = flat(3.0);
        let m1 = variance_mobile_ideal(&p, PI, 2, Evaluation::Auto).unwrap().value;
        let lim = variance_mobile_box(&p, PI, 2, 1e-4, None).unwrap().value;
        assert!((lim / m1 - 1.0).abs() < 1e-3);
        assert_eq!(variance_mobile_box(&NoisePsd::Zero { dim: 2 }, PI, 2, 0.3, None).unwrap().value, 0.0);

        // finite spacing pi / (2 rho): x-replicas at multiples of 4 rho
        let (db, dx) = (0.4, 0.5);
        let q = variance_mobile_box(&p, PI, 2, db, Some(dx)).unwrap().value;
        let kern = SamplingKernel::boxcar(db, PI).unwrap();
        let brute = |cells: usize| {
            let h = 2.0 * PI / cells as f64;
            let mut acc = 0.0;
            for i in 0..cells {
                let wx = -PI + (i as f64 + 0.5) * h;
                for sx in -2i32..=2 {
                    let ux = wx - 4.0 * PI * sx as f64;
                    if ux.abs() > 3.0 * PI {
                        continue;
                    }
                    // y replicas: exactly 3 of them cover Omega for a = 3
                    acc += h * 2.0 * PI * 3.0 * kern.response(ux).powi(2);
                }
            }
            acc / (4.0 * PI * PI)
        };
        let (b1, b2) = (brute(4000), brute(8000));
        let extrapolated = (4.0 * b2 - b1) / 3.0;
        assert!((q / extrapolated - 1.0).abs() < 1e-6, "{q} {extrapolated}");
    }

    #[test]
    fn box_dense_limit_equals_ideal_for_flat_noise() {
        for db in [0.2, 0.7, 1.5] {
            let v = variance_mobile_box(&flat(3.0), PI, 2, db, None).unwrap().value;
            assert!((v - 3.0).abs() < 1e-9, "{db}: {v}");
        }
    }

    #[test]
    fn white_and_slow_decay_diverge() {
        let white = NoisePsd::White { level: 1.0, dim: 2 };
        assert!(matches!(variance_static(&white, PI, 2, Evaluation::Auto), Err(Error::Divergence(_))));
        assert!(matches!(NoisePsd::tabulated(vec![0.0, 1.0], vec![1.0, 1.0], 2.0, 2), Err(Error::Divergence(_))));
    }

    #[test]
    fn tabulated_static_dominates_mobile() {
        let p = NoisePsd::tabulated(vec![0.0, 2.0, 6.0], vec![1.0, 0.8, 0.3], 6.0, 2).unwrap();
        let s = variance_static(&p, PI, 2, Evaluation::Auto).unwrap();
        let m = variance_mobile_ideal(&p, PI, 2, Evaluation::Auto).unwrap();
        assert!(s.value >= m.value && m.value > 0.0);
        assert!(s.tail < 1e-6 * s.value);
        assert!(s.replicas.iter().all(|(_, v)| *v >= 0.0));
    }

    #[test]
    fn reconstruction_psd_examples() {
        let lat = SampleLattice::rectangular(1.0, 1.0, 15, 15).unwrap();
        let rk = ReconKernel::lattice(&lat, [PI, PI]).unwrap();
        let zero = psd_of_reconstruction(&NoisePsd::Zero { dim: 2 }, SamplingKernel::None, None, &lat, &rk, [15.0; 2]).unwrap();
        assert!(zero.iter().all(|(_, v)| *v == 0.0));
        let ideal = SamplingKernel::ideal(PI).unwrap();
        let t = psd_of_reconstruction(&flat(1.0), ideal, Some(0), &lat, &rk, [15.0; 2]).unwrap();
        assert!(t.iter().all(|(_, v)| (*v - 1.0).abs() < 1e-12));
        let t = psd_of_reconstruction(&flat(3.0), SamplingKernel::None, None, &lat, &rk, [15.0; 2]).unwrap();
        let integral: f64 = t.iter().map(|(_, v)| v).sum::<f64>() / 225.0;
        assert!((integral - 9.0).abs() < 1e-9);
    }

    #[test]
    fn rmse_examples() {
        let f = synthesize_field(1, 9.0, BandRegion::square(PI).unwrap(), 1.0).unwrap();
        assert_eq!(rmse_percent(&f, &f).unwrap(), 0.0);
        let z = f.map(|_, _, c| c * 0.0);
        assert!((rmse_percent(&z, &f).unwrap() - 100.0).abs() < 1e-12);
        assert!(matches!(rmse_percent(&f, &z), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn alias_bookkeeping() {
        // field bandlimited to 2 rho sampled at pi / rho
        let l = 15.0;
        let f = synthesize_field(21, l, BandRegion::square(2.0 * PI).unwrap(), 1.0).unwrap();
        let nu = ObservedField::noiseless(f.clone());
        let lat = SampleLattice::rectangular(1.0, 1.0, 15, 15).unwrap();
        let rk = ReconKernel::lattice(&lat, [PI, PI]).unwrap();
        let pass = BandRegion::square(PI).unwrap();

        let rs = reconstruct_lattice(&sample_static(&nu, &lat).unwrap(), &rk).unwrap();
        let a = alias_energy(&rs, &f).unwrap();
        let direct = rs.field.sub(&f.project(pass)).unwrap().energy();
        assert!(a.x_shift > 0.0 && a.y_shift > 0.0);
        assert!((a.total - direct).abs() <= 1e-9 * direct);
        assert!((a.x_shift + a.y_shift + a.distortion - a.total).abs() <= 1e-9 * a.total);

        let lines = ParallelLineSet::new(1.0, 1.0, 15).unwrap();
        let rm = reconstruct_lattice(&sample_mobile(&nu, &lines, 1.0, SamplingKernel::ideal(PI).unwrap(), 1).unwrap(), &rk).unwrap();
        let a = alias_energy(&rm, &f).unwrap();
        assert!(a.x_shift.abs() < 1e-10 && a.y_shift > 0.0);

        let g = synthesize_field(2, l, pass, 1.0).unwrap();
        let r = reconstruct_lattice(&sample_static(&ObservedField::noiseless(g.clone()), &lat).unwrap(), &rk).unwrap();
        let a = alias_energy(&r, &g).unwrap();
        assert!(a.x_shift.abs() < 1e-10 && a.y_shift.abs() < 1e-10 && a.total < 1e-10);
    }

    #[test]
    fn tabulated_static_is_total_power() {
        // radial: int_R2 S = 2 pi int_0^inf r S(r) dr, piecewise polynomial plus a power tail
        let p = NoisePsd::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.25], 3.5, 2).unwrap();
        let inner = 1.0 / 3.0 + (0.75 * 1.5 - 0.25 * 7.0 / 3.0);
        let tail = 0.25 * 4.0 / 1.5;
        let want = TAU * (inner + tail) / (TAU * TAU);
        let s = variance_static(&p, PI, 2, Evaluation::Auto).unwrap();
        assert!((s.value / want - 1.0).abs() < 1e-12, "{} vs {want}", s.value);
        assert_eq!(s.tail, 0.0);
    }

    #[test]
    fn measurement_noise_law() {
        let rk = ReconKernel::lattice(&SampleLattice::rectangular(1.0, 1.0, 15, 15).unwrap(), [PI, PI]).unwrap();
        for k in [1usize, 2, 4] {
            let lat = SampleLattice::rectangular(1.0 / k as f64, 1.0, 15 * k, 15).unwrap();
            let rk = ReconKernel::lattice(&lat, rk.cutoff).unwrap();
            let v = measurement_noise_variance(&lat, &rk, [15.0; 2], 0.5).unwrap();
            assert!((v - oversampling_variance_law(k, 0.5).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn bandwidth_predictions() {
        let p = PiecewiseAffinePath::new(vec![0.0, 2.0], vec![1.5], 0.0).unwrap();
        let b = effective_bandwidth(&p, 3.0).unwrap();
        assert_eq!(b.predicted, 1.5 * 3.0 + 0.5);
        let q = PiecewiseAffinePath::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0], 0.0).unwrap();
        let pp = PerturbedPath::new(q, 0.01, vec![vec![0.0, 1.0], vec![1.0]]).unwrap();
        let b0 = perturbed_band(&pp, 2.0, 0).unwrap();
        assert_eq!(b0.bound, effective_bandwidth(pp.base(), 2.0).unwrap().bound);
        let edges: Vec<f64> = (0..4).map(|m| perturbed_band(&pp, 2.0, m).unwrap().bound).collect();
        assert!(edges.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn band_energy_splits_parseval() {
        let n = 64;
        let w = 8.0;
        let v: Vec<f64> = (0..n).map(|j| (TAU * 3.0 * j as f64 / n as f64).cos() + 0.5).collect();
        let (i, o) = band_energy(&v, w, TAU * 2.0 / w);
        assert!((i - 0.25 * w).abs() < 1e-12 && (o - 0.5 * w).abs() < 1e-12);
    }

    #[test]
    fn padding_keeps_total_energy() {
        let n = 128;
        let w = 3.0;
        let v: Vec<f64> = (0..n).map(|j| (1.7 * w * j as f64 / n as f64).sin() + 0.2).collect();
        let direct: f64 = v.iter().map(|x| x * x).sum::<f64>() * w / n as f64;
        for pad in [1, 4, 16] {
            let (i, o) = padded_band_energy(&v, w, 2.0, pad);
            assert!((i + o - direct).abs() < 1e-12 * direct, "{pad}");
        }
    }

    #[test]
    fn energy_band_of_a_tone() {
        let n = 256;
        let w = 10.0;
        let v: Vec<f64> = (0..n).map(|j| (TAU * 5.0 * j as f64 / n as f64).cos()).collect();
        assert!((energy_band(&v, w, 0.99, 1) - TAU * 5.0 / w).abs() < 1e-12);
        // a constant is all DC
        assert_eq!(energy_band(&[1.0; 32], w, 0.99, 1), 0.0);
    }
}
