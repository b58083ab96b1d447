//! Sensor motion: constant-velocity lines, parallel-line families,
//! piecewise-affine paths and their smooth perturbations.

use crate::error::{param, Error, Result};

/// Number of grid points used to certify monotonicity of perturbed paths.
pub const MONOTONE_GRID: usize = 10_000;

/// Speed reading. `at_knot` flags a time exactly on an interior knot, where
/// the right-hand segment is reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speed {
    pub value: f64,
    pub at_knot: bool,
}

/// A one-dimensional sensor trajectory `x(t)`.
pub trait Path: Send + Sync {
    fn position(&self, t: f64) -> Result<f64>;
    fn speed(&self, t: f64) -> Result<Speed>;
    /// Declared time range, `None` for paths defined on all of R.
    fn time_range(&self) -> Option<(f64, f64)>;
    /// `sup_t |x'(t)|` over the declared range.
    fn max_speed(&self) -> f64;
    /// `T(x)`, the time at which the sensor is at `x`.
    fn inverse_time(&self, x: f64) -> Result<f64>;
    /// Times at which the speed may jump.
    fn knots(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePath {
    pub u: f64,
    pub v: f64,
}

impl AffinePath {
    pub fn new(u: f64, v: f64) -> Self {
        AffinePath { u, v }
    }
}

impl Path for AffinePath {
    fn position(&self, t: f64) -> Result<f64> {
        Ok(self.u + self.v * t)
    }

    fn speed(&self, _t: f64) -> Result<Speed> {
        Ok(Speed { value: self.v, at_knot: false })
    }

    fn time_range(&self) -> Option<(f64, f64)> {
        None
    }

    fn max_speed(&self) -> f64 {
        self.v.abs()
    }

    fn inverse_time(&self, x: f64) -> Result<f64> {
        if self.v <= 0.0 {
            return Err(Error::Monotonicity(format!("affine path with speed {}", self.v)));
        }
        Ok((x - self.u) / self.v)
    }
}

/// Sensors moving at a common speed along equispaced lines parallel to one
/// axis. Sensor `j` is at `speed * t` along `axis` and `j * spacing` across it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelLineSet {
    pub spacing: f64,
    pub speed: f64,
    pub count: usize,
    /// 0: motion along `x`, lines at `y = j * spacing`. 1: the transpose.
    pub axis: usize,
}

impl ParallelLineSet {
    pub fn new(spacing: f64, speed: f64, count: usize) -> Result<Self> {
        Self::along(0, spacing, speed, count)
    }

    pub fn along(axis: usize, spacing: f64, speed: f64, count: usize) -> Result<Self> {
        if !(spacing > 0.0 && speed > 0.0) {
            return Err(param(format!("line spacing and speed must be positive, got {spacing}, {speed}")));
        }
        if axis > 1 || count == 0 {
            return Err(param("line set needs axis 0 or 1 and at least one line"));
        }
        Ok(ParallelLineSet { spacing, speed, count, axis })
    }

    pub fn sensor_position(&self, j: usize, t: f64) -> [f64; 2] {
        let along = self.speed * t;
        let across = j as f64 * self.spacing;
        if self.axis == 0 {
            [along, across]
        } else {
            [across, along]
        }
    }
}

/// `x(t) = u_k + v_k t` on `[t_k, t_{k+1})`, continuous at the knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffinePath {
    knots: Vec<f64>,
    intercepts: Vec<f64>,
    speeds: Vec<f64>,
}

impl PiecewiseAffinePath {
    /// Builds the continuous path starting at `x0` at time `knots[0]`.
    pub fn new(knots: Vec<f64>, speeds: Vec<f64>, x0: f64) -> Result<Self> {
        check_knots(&knots, speeds.len())?;
        let mut intercepts = Vec::with_capacity(speeds.len());
        let mut u = x0 - speeds[0] * knots[0];
        intercepts.push(u);
        for k in 1..speeds.len() {
            u += (speeds[k - 1] - speeds[k]) * knots[k];
            intercepts.push(u);
        }
        Self::from_parts(knots, intercepts, speeds)
    }

    pub fn from_parts(knots: Vec<f64>, intercepts: Vec<f64>, speeds: Vec<f64>) -> Result<Self> {
        check_knots(&knots, speeds.len())?;
        if intercepts.len() != speeds.len() {
            return Err(param("one intercept per segment is required"));
        }
        if let Some(v) = speeds.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(param(format!("segment speeds must be nonnegative, got {v}")));
        }
        for k in 1..speeds.len() {
            let t = knots[k];
            let left = intercepts[k - 1] + speeds[k - 1] * t;
            let right = intercepts[k] + speeds[k] * t;
            if (left - right).abs() > 1e-9 * (1.0 + left.abs()) {
                return Err(param(format!("path is discontinuous at knot {k}: {left} vs {right}")));
            }
        }
        Ok(PiecewiseAffinePath { knots, intercepts, speeds })
    }

    pub fn knots_slice(&self) -> &[f64] {
        &self.knots
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn segments(&self) -> usize {
        self.speeds.len()
    }

    /// Segment durations `t_{k+1} - t_k`.
    pub fn durations(&self) -> Vec<f64> {
        self.knots.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn min_duration(&self) -> f64 {
        self.durations().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Segment containing `t`; knot times resolve to the right-hand segment.
    pub fn segment_of(&self, t: f64) -> Result<usize> {
        let (t0, t1) = (self.knots[0], *self.knots.last().unwrap());
        if !(t >= t0 && t <= t1) {
            return Err(Error::Range { what: "t", value: t, lo: t0, hi: t1 });
        }
        let k = self.knots.partition_point(|&x| x <= t).saturating_sub(1);
        Ok(k.min(self.speeds.len() - 1))
    }

    fn knot_positions(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.intercepts.iter().zip(&self.speeds).zip(&self.knots).map(|((u, v), t)| u + v * t).collect();
        let last = self.speeds.len() - 1;
        xs.push(self.intercepts[last] + self.speeds[last] * self.knots[last + 1]);
        xs
    }

    /// Segment whose spatial range holds `x`, for strictly increasing paths.
    fn segment_at_position(&self, x: f64) -> Result<usize> {
        if let Some(k) = self.speeds.iter().position(|v| *v <= 0.0) {
            return Err(Error::Monotonicity(format!("segment {k} has zero speed; the inverse is undefined on a plateau")));
        }
        let xs = self.knot_positions();
        let (lo, hi) = (xs[0], *xs.last().unwrap());
        if !(x >= lo && x <= hi) {
            return Err(Error::Range { what: "x", value: x, lo, hi });
        }
        Ok(xs.partition_point(|&p| p <= x).saturating_sub(1).min(self.speeds.len() - 1))
    }
}

fn check_knots(knots: &[f64], segments: usize) -> Result<()> {
    if segments == 0 || knots.len() != segments + 1 {
        return Err(param(format!("{segments} segments need {} knots, got {}", segments + 1, knots.len())));
    }
    if knots.iter().any(|t| !t.is_finite()) || knots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("knots must be finite and strictly increasing"));
    }
    Ok(())
}

impl Path for PiecewiseAffinePath {
    fn position(&self, t: f64) -> Result<f64> {
        let k = self.segment_of(t)?;
        Ok(self.intercepts[k] + self.speeds[k] * t)
    }

    fn speed(&self, t: f64) -> Result<Speed> {
        let k = self.segment_of(t)?;
        let at_knot = self.knots[1..self.knots.len() - 1].contains(&t);
        Ok(Speed { value: self.speeds[k], at_knot })
    }

    fn time_range(&self) -> Option<(f64, f64)> {
        Some((self.knots[0], *self.knots.last().unwrap()))
    }

    fn max_speed(&self) -> f64 {
        self.speeds.iter().copied().fold(0.0, f64::max)
    }

    fn inverse_time(&self, x: f64) -> Result<f64> {
        let k = self.segment_at_position(x)?;
        let t = (x - self.intercepts[k]) / self.speeds[k];
        Ok(t.clamp(self.knots[k], self.knots[k + 1]))
    }

    fn knots(&self) -> Vec<f64> {
        self.knots.clone()
    }
}

/// Piecewise-affine path plus `eps * sum_j b_kj sin(pi j (t - t_k) / D_k)` on
/// segment `k`. Each perturbation vanishes at its segment ends, so the path
/// stays continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedPath {
    base: PiecewiseAffinePath,
    eps: f64,
    coefficients: Vec<Vec<f64>>,
    max_speed: f64,
}

impl PerturbedPath {
    /// `coefficients[k][j - 1]` multiplies the `j`-th sine on segment `k`.
    /// Fails with a monotonicity error when the speed is not strictly positive
    /// on a dense grid.
    pub fn new(base: PiecewiseAffinePath, eps: f64, coefficients: Vec<Vec<f64>>) -> Result<Self> {
        if coefficients.len() != base.segments() {
            return Err(param("one perturbation series per segment is required"));
        }
        if !eps.is_finite() {
            return Err(param("eps must be finite"));
        }
        let mut p = PerturbedPath { base, eps, coefficients, max_speed: 0.0 };
        let (t0, t1) = p.time_range().unwrap();
        let mut vmax = 0.0_f64;
        let mut vmin = f64::INFINITY;
        for i in 0..=MONOTONE_GRID {
            let t = t0 + (t1 - t0) * i as f64 / MONOTONE_GRID as f64;
            let v = p.speed(t)?.value;
            vmax = vmax.max(v);
            vmin = vmin.min(v);
        }
        for (k, w) in p.base.knots.windows(2).enumerate() {
            // left limit at the end of each segment
            let v = p.segment_speed(k, w[1]);
            vmax = vmax.max(v);
            vmin = vmin.min(v);
        }
        if vmin <= 0.0 {
            return Err(Error::Monotonicity(format!("minimum speed {vmin} on the validation grid")));
        }
        p.max_speed = vmax;
        Ok(p)
    }

    pub fn base(&self) -> &PiecewiseAffinePath {
        &self.base
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Largest perturbation bandwidth `pi j_max / D_k` over the segments.
    pub fn perturbation_bandwidth(&self) -> f64 {
        let d = self.base.durations();
        self.coefficients
            .iter()
            .zip(&d)
            .map(|(c, dk)| {
                let j = c.iter().rposition(|b| *b != 0.0).map_or(0, |j| j + 1);
                std::f64::consts::PI * j as f64 / dk
            })
            .fold(0.0, f64::max)
    }

    fn offset(&self, k: usize, t: f64) -> (f64, f64) {
        let t0 = self.base.knots[k];
        let d = self.base.knots[k + 1] - t0;
        let (mut x, mut dx) = (0.0, 0.0);
        for (j, b) in self.coefficients[k].iter().enumerate() {
            let w = std::f64::consts::PI * (j + 1) as f64 / d;
            let (s, c) = (w * (t - t0)).sin_cos();
            x += b * s;
            dx += b * w * c;
        }
        (self.eps * x, self.eps * dx)
    }

    fn segment_speed(&self, k: usize, t: f64) -> f64 {
        self.base.speeds[k] + self.offset(k, t).1
    }

    fn segment_position(&self, k: usize, t: f64) -> f64 {
        self.base.intercepts[k] + self.base.speeds[k] * t + self.offset(k, t).0
    }
}

impl Path for PerturbedPath {
    fn position(&self, t: f64) -> Result<f64> {
        let k = self.base.segment_of(t)?;
        Ok(self.segment_position(k, t))
    }

    fn speed(&self, t: f64) -> Result<Speed> {
        let k = self.base.segment_of(t)?;
        let at_knot = self.base.knots[1..self.base.knots.len() - 1].contains(&t);
        Ok(Speed { value: self.segment_speed(k, t), at_knot })
    }

    fn time_range(&self) -> Option<(f64, f64)> {
        self.base.time_range()
    }

    fn max_speed(&self) -> f64 {
        self.max_speed
    }

    fn inverse_time(&self, x: f64) -> Result<f64> {
        // Perturbations vanish at knots, so segment boundaries match the base.
        let k = self.base.segment_at_position(x)?;
        let (mut lo, mut hi) = (self.base.knots[k], self.base.knots[k + 1]);
        let scale = 1.0 + x.abs();
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = self.segment_position(k, t) - x;
            if r.abs() <= 1e-14 * scale {
                return Ok(t);
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let v = self.segment_speed(k, t);
            let newton = t - r / v;
            t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
                break;
            }
        }
        Ok(t)
    }

    fn knots(&self) -> Vec<f64> {
        self.base.knots.clone()
    }
}
