use std::f64::consts::PI;

use mobsense_core::nonuniform::{sample_nonuniform, warp_distortion, warp_reconstruct, FINE_FACTOR};
use mobsense_core::rng::rng;
use mobsense_core::spectral::{band_energy, effective_bandwidth, energy_band, path_signal, perturbed_band};
use mobsense_core::{synthesize_field_on, AffinePath, BandRegion, HarmonicField, ObservedField, Path, PerturbedPath, PiecewiseAffinePath};
use rand::Rng;

use super::{loglog_slope, run_trials, Context, RecipeOutput, Result};
use crate::report::{DataTable, Metric, Tolerance};

fn line_field(ctx: &Context, seed: u64) -> Result<HarmonicField> {
    let (l, rho) = (ctx.length(), ctx.rho());
    Ok(synthesize_field_on(seed, [l, 1.0], BandRegion::interval(rho)?, ctx.cfg.field.power.unwrap_or(1.0), None)?)
}

/// Random continuous piecewise-affine path starting at `t = 0`.
fn random_path(ctx: &Context, seed: u64) -> Result<PiecewiseAffinePath> {
    let mut g = rng(seed);
    let max_segments = ctx.cfg.trajectory.segments.unwrap_or(4).max(1);
    let lo = ctx.cfg.trajectory.min_speed.unwrap_or(0.3);
    let hi = ctx.cfg.trajectory.max_speed.unwrap_or(2.0).max(lo);
    let k = g.gen_range(1..=max_segments);
    let mut knots = vec![0.0];
    let mut speeds = Vec::with_capacity(k);
    for _ in 0..k {
        knots.push(knots.last().unwrap() + g.gen_range(1.0..4.0));
        speeds.push(if hi > lo { g.gen_range(lo..hi) } else { lo });
    }
    let x0 = g.gen_range(0.0..ctx.length());
    Ok(PiecewiseAffinePath::new(knots, speeds, x0)?)
}

pub fn nonuniform(ctx: &Context) -> Result<RecipeOutput> {
    let rho = ctx.rho();
    let cases = ctx.cfg.trajectory.cases.unwrap_or(50);
    let rows = run_trials(cases, ctx.seed, |seed| {
        let field = line_field(ctx, seed)?;
        let nu = ObservedField::noiseless(field);
        let path = random_path(ctx, seed ^ 0x5eed)?;
        let window = *path.knots_slice().last().unwrap();
        let mut g = rng(seed ^ 0xc0ffee);
        let cutoff = g.gen_range(0.5..1.5) * path.max_speed() * rho;
        // comfortably above the temporal Nyquist rate of the lowpass output
        let count = (1.2 * window * cutoff / PI).ceil().max(1.0);
        let samples = sample_nonuniform(&nu, &path, 0.0, window, cutoff, window / count, FINE_FACTOR)?;
        let (lhs, rhs) = warp_distortion(&nu, &path, &samples)?;
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
        Ok((path.segments(), cutoff, count as usize, lhs, rhs, ratio))
    })?;
    let mut out = RecipeOutput::default();
    let worst = rows.iter().map(|r| r.5).fold(0.0, f64::max);
    out.metrics.push(Metric::new("nonuniform.max_distortion_ratio", worst, None, Tolerance::AtMost(1.05), "simulation", cases));
    let mut t = DataTable::new("nonuniform_paths", &["case", "segments", "cutoff", "samples", "distortion", "vbar_residual", "ratio"]);
    for (i, r) in rows.iter().enumerate() {
        t.push(vec![i.to_string(), r.0.to_string(), r.1.to_string(), r.2.to_string(), r.3.to_string(), r.4.to_string(), r.5.to_string()]);
    }
    out.tables.push(t);

    // constant speed over one period: the warped estimate is the mobile one
    let (d, n) = ctx.nyquist()?;
    let l = ctx.length();
    let v = ctx.cfg.trajectory.speed.unwrap_or(1.0);
    let field = line_field(ctx, ctx.seed.wrapping_add(7))?;
    let nu = ObservedField::noiseless(field.clone());
    let path = AffinePath::new(0.0, v);
    let samples = sample_nonuniform(&nu, &path, 0.0, l / v, v * rho, d / v, FINE_FACTOR)?;
    let est = warp_reconstruct(&samples, &path)?;
    let grid = 8 * n;
    let (mut err, mut norm) = (0.0, 0.0);
    for i in 0..grid {
        let x = l * i as f64 / grid as f64;
        let f = field.eval([x, 0.0]);
        err += (est.eval(x)? - f).powi(2);
        norm += f * f;
    }
    out.metrics.push(Metric::new("nonuniform.affine.rel_l2", (err / norm).sqrt(), None, Tolerance::AtMost(1e-10), "simulation", 1));
    Ok(out)
}

fn signal_points(band: f64, window: f64) -> usize {
    ((16.0 * band * window / PI).ceil() as usize).max(4096)
}

/// `random_path` with its durations rescaled so that the whole window moves
/// the sensor through exactly one field period: the path signal is then
/// continuous as a window-periodic signal.
fn traversal_path(ctx: &Context, seed: u64) -> Result<PiecewiseAffinePath> {
    let p = random_path(ctx, seed)?;
    let durations = p.durations();
    let shift: f64 = p.speeds().iter().zip(&durations).map(|(v, d)| v * d).sum();
    let scale = ctx.length() / shift;
    let mut knots = vec![0.0];
    for d in durations {
        knots.push(knots.last().unwrap() + d * scale);
    }
    Ok(PiecewiseAffinePath::new(knots, p.speeds().to_vec(), p.intercepts()[0])?)
}

pub fn bandwidth(ctx: &Context) -> Result<RecipeOutput> {
    let rho = ctx.rho();
    let cases = ctx.cfg.trajectory.cases.unwrap_or(20);
    let rows = run_trials(cases, ctx.seed, |seed| {
        let field = line_field(ctx, seed)?;
        let path = traversal_path(ctx, seed ^ 0x5eed)?;
        let window = *path.knots_slice().last().unwrap();
        let pred = effective_bandwidth(&path, rho)?;
        let values = path_signal(&field, &path, 0.0, window, signal_points(pred.predicted, window))?;
        let (inside, outside) = band_energy(&values, window, pred.predicted);
        let needed = energy_band(&values, window, 0.99, 1);
        Ok((path.segments(), window, pred.predicted, pred.bound, inside / (inside + outside), needed))
    })?;
    let mut out = RecipeOutput::default();
    let worst = rows.iter().map(|r| r.4).fold(1.0, f64::min);
    let mean_fraction = rows.iter().map(|r| r.4).sum::<f64>() / rows.len().max(1) as f64;
    let excess = rows.iter().map(|r| r.5 / r.2).fold(0.0, f64::max);
    out.metrics.push(Metric::new("bandwidth.min_energy_fraction", worst, None, Tolerance::AtLeast(0.99), "simulation", cases));
    out.metrics.push(Metric::info("bandwidth.mean_energy_fraction", mean_fraction, "simulation", cases));
    out.metrics.push(Metric::info("bandwidth.max_band99_over_predicted", excess, "simulation", cases));
    let mut t = DataTable::new("bandwidth_cases", &["case", "segments", "window", "predicted_band", "global_bound", "energy_fraction", "band99"]);
    for (i, r) in rows.iter().enumerate() {
        t.push(vec![i.to_string(), r.0.to_string(), r.1.to_string(), r.2.to_string(), r.3.to_string(), r.4.to_string(), r.5.to_string()]);
    }
    out.tables.push(t);
    Ok(out)
}

pub fn perturbation(ctx: &Context) -> Result<RecipeOutput> {
    let rho = ctx.rho();
    let v = ctx.cfg.trajectory.speed.unwrap_or(1.0);
    let eps = ctx.cfg.trajectory.eps.clone().unwrap_or_else(|| vec![0.01, 0.02, 0.04, 0.08]);
    let field = line_field(ctx, ctx.seed)?;
    // one segment spanning a whole field period keeps the path signal periodic
    let duration = ctx.length() / v;
    let base = PiecewiseAffinePath::new(vec![0.0, duration], vec![v], 0.0)?;
    let mut out = RecipeOutput::default();
    let mut t = DataTable::new("perturbation", &["eps", "band_m0", "outside_m0", "band_m1", "outside_m1"]);
    let (mut o0, mut o1) = (Vec::new(), Vec::new());
    for &e in &eps {
        let path = PerturbedPath::new(base.clone(), e, vec![vec![0.0, 1.0]])?;
        let b0 = perturbed_band(&path, rho, 0)?.predicted;
        let b1 = perturbed_band(&path, rho, 1)?.predicted;
        let values = path_signal(&field, &path, 0.0, duration, signal_points(b1, duration))?;
        let (_, out0) = band_energy(&values, duration, b0);
        let (_, out1) = band_energy(&values, duration, b1);
        t.push(vec![e.to_string(), b0.to_string(), out0.to_string(), b1.to_string(), out1.to_string()]);
        o0.push(out0);
        o1.push(out1);
    }
    out.metrics.push(Metric::info("perturbation.order0.slope", loglog_slope(&eps, &o0), "simulation", 1));
    out.metrics.push(Metric::new("perturbation.order1.slope", loglog_slope(&eps, &o1), Some(4.0), Tolerance::Absolute(0.5), "simulation", 1));
    out.tables.push(t);
    Ok(out)
}
