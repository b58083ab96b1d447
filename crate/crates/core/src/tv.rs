//! Design calculators for time-varying fields sampled by a moving array, and
//! a small space-time simulator.
//!
//! Sensors spaced `Delta` apart move at speed `v` and sample every `T`
//! seconds, so the samples in the `(x, t)` plane form the lattice generated by
//! `(Delta, 0)` and `(v T, T)`. Its dual lattice is generated by
//! `d1 = (2 pi / Delta, -2 pi v / Delta)` and `d2 = (0, 2 pi / T)`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;

use crate::band::BandRegion;
use crate::error::{param, Error, Result};
use crate::field::{is_representative, synthesize_field_on, HarmonicField};
use crate::spectral::rmse_percent;

/// Support of a space-time spectrum in `(omega_x, omega_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TvSpectrum {
    Rectangle { rho_x: f64, rho_t: f64 },
    /// `|omega_t| <= rho_t` and `c |omega_x| <= |omega_t|`.
    WaveCone { rho_t: f64, c: f64 },
}

impl TvSpectrum {
    pub fn rectangle(rho_x: f64, rho_t: f64) -> Result<Self> {
        let s = TvSpectrum::Rectangle { rho_x, rho_t };
        s.validate()?;
        Ok(s)
    }

    pub fn wave_cone(rho_t: f64, c: f64) -> Result<Self> {
        let s = TvSpectrum::WaveCone { rho_t, c };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = match *self {
            TvSpectrum::Rectangle { rho_x, rho_t } => (rho_x, rho_t),
            TvSpectrum::WaveCone { rho_t, c } => (rho_t, c),
        };
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(param(format!("spectrum parameters must be positive, got {self:?}")));
        }
        Ok(())
    }

    pub fn rho_x(&self) -> f64 {
        match *self {
            TvSpectrum::Rectangle { rho_x, .. } => rho_x,
            TvSpectrum::WaveCone { rho_t, c } => rho_t / c,
        }
    }

    pub fn rho_t(&self) -> f64 {
        match *self {
            TvSpectrum::Rectangle { rho_t, .. } | TvSpectrum::WaveCone { rho_t, .. } => rho_t,
        }
    }

    pub fn band(&self) -> BandRegion {
        match *self {
            TvSpectrum::Rectangle { rho_x, rho_t } => BandRegion::Rectangle { rho_x, rho_y: rho_t },
            TvSpectrum::WaveCone { rho_t, c } => BandRegion::WaveCone { rho_t, c },
        }
    }

    /// Convex pieces of the region, as counter-clockwise vertex lists.
    pub fn polygons(&self) -> Vec<Vec<[f64; 2]>> {
        let (rx, rt) = (self.rho_x(), self.rho_t());
        match self {
            TvSpectrum::Rectangle { .. } => vec![vec![[-rx, -rt], [rx, -rt], [rx, rt], [-rx, rt]]],
            TvSpectrum::WaveCone { .. } => vec![
                vec![[0.0, 0.0], [rx, rt], [-rx, rt]],
                vec![[0.0, 0.0], [-rx, -rt], [rx, -rt]],
            ],
        }
    }

    fn diameter(&self) -> f64 {
        2.0 * self.rho_x().hypot(self.rho_t())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingArrayConfig {
    pub spacing: f64,
    pub speed: f64,
    pub interval: f64,
}

impl MovingArrayConfig {
    pub fn new(spacing: f64, speed: f64, interval: f64) -> Result<Self> {
        if !(spacing > 0.0 && interval > 0.0 && speed >= 0.0) || ![spacing, speed, interval].iter().all(|x| x.is_finite()) {
            return Err(param(format!("invalid moving-array configuration ({spacing}, {speed}, {interval})")));
        }
        Ok(MovingArrayConfig { spacing, speed, interval })
    }

    /// Columns are the generators `(Delta, 0)` and `(v T, T)`.
    pub fn generator(&self) -> [[f64; 2]; 2] {
        [[self.spacing, self.speed * self.interval], [0.0, self.interval]]
    }

    /// `2 pi G^-T`; columns are the dual generators.
    pub fn dual_generator(&self) -> [[f64; 2]; 2] {
        let (d, v, t) = (self.spacing, self.speed, self.interval);
        [[TAU / d, 0.0], [-TAU * v / d, TAU / t]]
    }
}

/// Half-width of `{v omega_x + omega_t : omega in Omega}`.
pub fn path_band(spectrum: &TvSpectrum, speed: f64) -> Result<f64> {
    spectrum.validate()?;
    if !(speed >= 0.0) {
        return Err(param(format!("speed must be nonnegative, got {speed}")));
    }
    Ok(spectrum.rho_t() + speed * spectrum.rho_x())
}

/// `pi max(v / rho_t, 1 / rho_x)`.
pub fn max_spacing_rect(speed: f64, rho_x: f64, rho_t: f64) -> Result<f64> {
    if !(speed >= 0.0 && rho_x > 0.0 && rho_t > 0.0) {
        return Err(param("speed must be nonnegative and bandwidths positive"));
    }
    Ok(PI * (speed / rho_t).max(1.0 / rho_x))
}

/// `(pi / rho_x)(1 + v / c)`, derived for sensors slower than the wave.
pub fn max_spacing_wave(speed: f64, c: f64, rho_x: f64) -> Result<f64> {
    if !(speed >= 0.0 && c > 0.0 && rho_x > 0.0) {
        return Err(param("speed must be nonnegative, c and rho_x positive"));
    }
    if speed >= c {
        return Err(Error::OutOfModel(format!("sensor speed {speed} is not below the propagation speed {c}")));
    }
    Ok(PI / rho_x * (1.0 + speed / c))
}

pub fn max_spacing(spectrum: &TvSpectrum, speed: f64) -> Result<f64> {
    match *spectrum {
        TvSpectrum::Rectangle { rho_x, rho_t } => max_spacing_rect(speed, rho_x, rho_t),
        TvSpectrum::WaveCone { c, .. } => max_spacing_wave(speed, c, spectrum.rho_x()),
    }
}

/// Samples per second needed along each path.
pub fn temporal_nyquist(spectrum: &TvSpectrum, speed: f64) -> Result<f64> {
    Ok(path_band(spectrum, speed)? / PI)
}

/// `rho_t / (v rho_x)`: mobile sensors needed relative to static ones.
pub fn sensor_reduction_factor(speed: f64, rho_x: f64, rho_t: f64) -> Result<f64> {
    if !(rho_x > 0.0 && rho_t > 0.0) {
        return Err(param("bandwidths must be positive"));
    }
    if !(speed > rho_t / rho_x) {
        return Err(Error::NoReduction(format!(
            "speed {speed} does not exceed rho_t / rho_x = {}; mobility gives no reduction",
            rho_t / rho_x
        )));
    }
    Ok(rho_t / (speed * rho_x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Overlap {
    AliasFree,
    /// Dual-lattice coefficients `(a, b)` of the shortest overlapping shift
    /// `a d1 + b d2`, and the shift itself.
    Overlapping { witness: [i64; 2], shift: [f64; 2] },
}

impl Overlap {
    pub fn is_alias_free(&self) -> bool {
        matches!(self, Overlap::AliasFree)
    }
}

fn project(poly: &[[f64; 2]], axis: [f64; 2], shift: [f64; 2]) -> (f64, f64) {
    poly.iter()
        .map(|p| (p[0] + shift[0]) * axis[0] + (p[1] + shift[1]) * axis[1])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Separating-axis test for two closed convex polygons; touching counts as
/// intersecting, since harmonics on a shared edge alias.
fn regions_intersect(a: &[[f64; 2]], b: &[[f64; 2]], shift: [f64; 2], scale: f64) -> bool {
    let zero = [0.0, 0.0];
    for poly in [a, b] {
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            let axis = [q[1] - p[1], p[0] - q[0]];
            let norm = axis[0].hypot(axis[1]);
            let axis = [axis[0] / norm, axis[1] / norm];
            let (alo, ahi) = project(a, axis, zero);
            let (blo, bhi) = project(b, axis, shift);
            if ahi.min(bhi) - alo.max(blo) < -1e-12 * scale {
                return false;
            }
        }
    }
    true
}

/// Tests the closed region `Omega` against its translates by every nonzero
/// dual-lattice point closer than the diameter of `Omega` (plus one generator
/// length).
pub fn overlap_check(spectrum: &TvSpectrum, config: &MovingArrayConfig) -> Result<Overlap> {
    spectrum.validate()?;
    let g = config.dual_generator();
    let d1 = [g[0][0], g[1][0]];
    let d2 = [g[0][1], g[1][1]];
    let radius = spectrum.diameter() + d1[0].hypot(d1[1]).min(d2[1]);
    let pieces = spectrum.polygons();
    let scale = spectrum.diameter();
    let amax = (radius / d1[0]).ceil() as i64;
    let mut hits: Vec<([i64; 2], [f64; 2])> = Vec::new();
    for a in -amax..=amax {
        let sx = a as f64 * d1[0];
        let st0 = a as f64 * d1[1];
        let blo = ((-radius - st0) / d2[1]).floor() as i64;
        let bhi = ((radius - st0) / d2[1]).ceil() as i64;
        for b in blo..=bhi {
            if a == 0 && b == 0 {
                continue;
            }
            let s = [sx, st0 + b as f64 * d2[1]];
            if s[0].hypot(s[1]) > radius {
                continue;
            }
            let hit = pieces.iter().any(|p| pieces.iter().any(|q| regions_intersect(p, q, s, scale)));
            if hit {
                hits.push(([a, b], s));
            }
        }
    }
    let best = hits.into_iter().min_by(|x, y| {
        let nx = x.1[0].hypot(x.1[1]);
        let ny = y.1[0].hypot(y.1[1]);
        nx.partial_cmp(&ny).unwrap().then(x.0.cmp(&y.0))
    });
    Ok(match best {
        Some((witness, shift)) => Overlap::Overlapping { witness, shift },
        None => Overlap::AliasFree,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvOutcome {
    pub rmse_percent: f64,
    pub overlap: Overlap,
    pub sensors: usize,
    pub times: usize,
}

/// Synthesizes a unit-power field bandlimited to `spectrum` on the space-time
/// torus `lengths = [L_x, L_t]`, samples it on the moving-array lattice and
/// reconstructs it by character sums over the `N x M` sample group.
///
/// Requires `L_x = N Delta`, `L_t = M T` and an integer `v L_t / Delta`, so
/// that the sample pattern is periodic on the torus.
pub fn tv_simulate(spectrum: &TvSpectrum, config: &MovingArrayConfig, lengths: [f64; 2], seed: u64) -> Result<TvOutcome> {
    let integral = |x: f64, what: &str| -> Result<usize> {
        let r = x.round();
        if r < 0.0 || (x - r).abs() > 1e-9 * x.abs().max(1.0) {
            return Err(Error::Lattice(format!("{what} = {x} is not an integer")));
        }
        Ok(r as usize)
    };
    let n = integral(lengths[0] / config.spacing, "L_x / Delta")?;
    let m = integral(lengths[1] / config.interval, "L_t / T")?;
    let p = integral(config.speed * lengths[1] / config.spacing, "v L_t / Delta")?;
    if n == 0 || m == 0 {
        return Err(Error::Lattice("empty sample pattern".into()));
    }
    let truth = synthesize_field_on(seed, lengths, spectrum.band(), 1.0, None)?;
    let overlap = overlap_check(spectrum, config)?;

    let mut mu = vec![0.0; n * m];
    for j in 0..m {
        let t = j as f64 * config.interval;
        for i in 0..n {
            let x = i as f64 * config.spacing + config.speed * t;
            mu[j * n + i] = truth.eval([x, t]);
        }
    }
    let [kx_max, kt_max] = truth.kmax();
    let mut est = HarmonicField::zeros(lengths, truth.kmax(), spectrum.band())?;
    let nm = (n * m) as f64;
    for kx in -(kx_max as i64)..=kx_max as i64 {
        // row transforms over the sensor index
        let rows: Vec<Complex64> = (0..m)
            .map(|j| {
                (0..n)
                    .map(|i| Complex64::from_polar(mu[j * n + i], -TAU * (kx * i as i64).rem_euclid(n as i64) as f64 / n as f64))
                    .sum()
            })
            .collect();
        for kt in -(kt_max as i64)..=kt_max as i64 {
            let k = [kx, kt];
            if !is_representative(k) || !spectrum.band().contains(truth.frequency(k)) {
                continue;
            }
            // phase per time step: kx p / (N M) + kt / M, reduced mod 1
            let num = (kx * p as i64 + kt * n as i64).rem_euclid((n * m) as i64);
            let step = -TAU * num as f64 / nm;
            let c: Complex64 = rows.iter().enumerate().map(|(j, r)| r * Complex64::from_polar(1.0, step * j as f64)).sum();
            est.set_pair(k, c / nm)?;
        }
    }
    Ok(TvOutcome { rmse_percent: rmse_percent(&est, &truth)?, overlap, sensors: n, times: m })
}

/// Summary of a moving-array design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub spectrum: TvSpectrum,
    pub config: MovingArrayConfig,
    pub spacing_limit: f64,
    pub temporal_rate: f64,
    pub reduction_factor: Option<f64>,
    pub overlap: Overlap,
}

pub fn design_report(spectrum: &TvSpectrum, config: &MovingArrayConfig) -> Result<DesignReport> {
    let reduction = match sensor_reduction_factor(config.speed, spectrum.rho_x(), spectrum.rho_t()) {
        Ok(r) => Some(r),
        Err(Error::NoReduction(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(DesignReport {
        spectrum: *spectrum,
        config: *config,
        spacing_limit: max_spacing(spectrum, config.speed)?,
        temporal_rate: temporal_nyquist(spectrum, config.speed)?,
        reduction_factor: reduction,
        overlap: overlap_check(spectrum, config)?,
    })
}

impl DesignReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let (shape, a, b) = match self.spectrum {
            TvSpectrum::Rectangle { rho_x, rho_t } => ("rectangle", rho_x, rho_t),
            TvSpectrum::WaveCone { rho_t, c } => ("wave-cone", rho_t, c),
        };
        writeln!(out, "shape,param_1,param_2,spacing,speed,interval,spacing_limit,temporal_rate,reduction_factor,verdict,witness_a,witness_b")?;
        let (verdict, wa, wb) = match self.overlap {
            Overlap::AliasFree => ("alias-free", String::new(), String::new()),
            Overlap::Overlapping { witness, .. } => ("overlapping", witness[0].to_string(), witness[1].to_string()),
        };
        writeln!(
            out,
            "{shape},{a},{b},{},{},{},{},{},{},{verdict},{wa},{wb}",
            self.config.spacing,
            self.config.speed,
            self.config.interval,
            self.spacing_limit,
            self.temporal_rate,
            self.reduction_factor.map_or(String::new(), |r| r.to_string()),
        )?;
        Ok(())
    }
}
