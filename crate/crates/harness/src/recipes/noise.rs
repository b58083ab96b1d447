use std::f64::consts::PI;

use mobsense_core::sampling::{add_measurement_noise, kappa, MeasurementNoise};
use mobsense_core::spectral::{
    measurement_noise_variance, oversampling_variance_law, prop1_closed_forms, rmse_percent_expected, variance_breakdown,
    variance_mobile_box, variance_mobile_ideal, variance_static, Evaluation,
};
use mobsense_core::{
    reconstruct_lattice, sample_mobile, sample_static, synthesize_field_on, synthesize_noise, BandRegion, HarmonicField,
    NoisePsd, ObservedField, ParallelLineSet, ReconKernel, SampleLattice, SamplingKernel,
};

use super::{loglog_slope, mean, run_trials, tag, Context, RecipeOutput, Result};
use crate::plot::{Plot, PlotKind, Series};
use crate::report::{DataTable, Metric, Tolerance};

/// Static and mobile-ideal reconstructions at the Nyquist spacing `d`.
pub(super) fn reconstruct_both(nu: &ObservedField, d: f64, n: usize, rho: f64) -> Result<(HarmonicField, HarmonicField)> {
    let lat = SampleLattice::rectangular(d, d, n, n)?;
    let kernel = ReconKernel::lattice(&lat, [rho, rho])?;
    let stat = reconstruct_lattice(&sample_static(nu, &lat)?, &kernel)?;
    let lines = ParallelLineSet::new(d, 1.0, n)?;
    let mob = reconstruct_lattice(&sample_mobile(nu, &lines, d, SamplingKernel::ideal(rho)?, 1)?, &kernel)?;
    Ok((stat.field, mob.field))
}

fn zero_field(l: f64, rho: f64) -> Result<HarmonicField> {
    Ok(HarmonicField::zeros([l, l], [0, 0], BandRegion::square(rho)?)?)
}

pub fn prop1(ctx: &Context) -> Result<RecipeOutput> {
    let (l, rho) = (ctx.length(), ctx.rho());
    let (d, n) = ctx.nyquist()?;
    let level = ctx.cfg.noise.level.unwrap_or(1.0);
    let ratios = ctx.cfg.noise.ratios.clone().unwrap_or_else(|| vec![3.0, 5.0, 7.0]);
    let trials = ctx.trials(500);
    let mut out = RecipeOutput::default();
    let mut table = DataTable::new(
        "prop1",
        &["a", "stat_closed", "stat_quadrature", "stat_mc", "m1_closed", "m1_quadrature", "m1_mc"],
    );
    let mut curves = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for (i, &a) in ratios.iter().enumerate() {
        let name = format!("prop1.a{}", tag(a));
        let psd = NoisePsd::flat_band(a, rho, level, 2)?;
        // the closed forms scaled by the PSD level; odd a only
        let formula = (level * rho * rho * a * a / (PI * PI), level * rho * rho * a / (PI * PI));
        let closed = if a.fract() == 0.0 && (a as u32) % 2 == 1 {
            let (s, m) = prop1_closed_forms(a as u32, rho)?;
            out.metrics.push(Metric::new(format!("{name}.stat.closed"), s * level, Some(formula.0), Tolerance::Relative(1e-12), "closed-form", 0));
            out.metrics.push(Metric::new(format!("{name}.m1.closed"), m * level, Some(formula.1), Tolerance::Relative(1e-12), "closed-form", 0));
            (s * level, m * level)
        } else {
            formula
        };
        let qs = variance_static(&psd, rho, 2, Evaluation::Quadrature)?.value;
        let qm = variance_mobile_ideal(&psd, rho, 2, Evaluation::Quadrature)?.value;
        out.metrics.push(Metric::new(format!("{name}.stat.quadrature"), qs, Some(closed.0), Tolerance::Relative(1e-9), "quadrature", 0));
        out.metrics.push(Metric::new(format!("{name}.m1.quadrature"), qm, Some(closed.1), Tolerance::Relative(1e-9), "quadrature", 0));

        let base = ctx.seed.wrapping_add(1000 * i as u64);
        let zero = zero_field(l, rho)?;
        let runs = run_trials(trials, base, |seed| {
            let noise = synthesize_noise(seed, [l, l], &psd)?;
            let nu = ObservedField::noisy(zero.clone(), noise)?;
            let (s, m) = reconstruct_both(&nu, d, n, rho)?;
            Ok((s.mean_square(), m.mean_square()))
        })?;
        let ms: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let mm: Vec<f64> = runs.iter().map(|r| r.1).collect();
        let (vs, vm) = (mean(&ms), mean(&mm));
        out.metrics.push(Metric::new(format!("{name}.stat.mc"), vs, Some(closed.0), Tolerance::Relative(0.05), "monte-carlo", trials));
        out.metrics.push(Metric::new(format!("{name}.m1.mc"), vm, Some(closed.1), Tolerance::Relative(0.05), "monte-carlo", trials));
        table.push([a, closed.0, qs, vs, closed.1, qm, vm].iter().map(|v| v.to_string()).collect());
        for (c, v) in curves.iter_mut().zip([closed.0, vs, closed.1, vm]) {
            c.push((a, v));
        }
    }
    out.tables.push(table);
    let labels = ["static (closed form)", "static (monte carlo)", "mobile (closed form)", "mobile (monte carlo)"];
    let series = curves
        .iter()
        .zip(labels)
        .map(|(c, lab)| Series::new(lab, c.iter().map(|p| p.0).collect(), c.iter().map(|p| p.1).collect()))
        .collect();
    out.plots.push(("variance_vs_a".into(), Plot { kind: PlotKind::VarianceVsA, title: "reconstruction noise variance".into(), series }));
    Ok(out)
}

pub fn noise_ratio(ctx: &Context) -> Result<RecipeOutput> {
    let (l, rho) = (ctx.length(), ctx.rho());
    let (d, n) = ctx.nyquist()?;
    let a = ctx.cfg.noise.ratios.as_ref().map_or(9.0, |r| r[0]);
    // static error near 10 % of a unit-power field
    let level = ctx.cfg.noise.level.unwrap_or(1.0 / (100.0 * a * a));
    let trials = ctx.trials(200);
    let power = ctx.cfg.field.power.unwrap_or(1.0);
    let truth = synthesize_field_on(ctx.seed, [l, l], BandRegion::square(rho)?, power, None)?;
    let psd = NoisePsd::flat_band(a, rho, level, 2)?;
    let runs = run_trials(trials, ctx.seed.wrapping_add(1), |seed| {
        let nu = ObservedField::noisy(truth.clone(), synthesize_noise(seed, [l, l], &psd)?)?;
        let (s, m) = reconstruct_both(&nu, d, n, rho)?;
        Ok((s.sub(&truth)?.energy(), m.sub(&truth)?.energy()))
    })?;
    let es: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let em: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let rs = rmse_percent_expected(&es, truth.energy())?;
    let rm = rmse_percent_expected(&em, truth.energy())?;
    let vs = variance_static(&psd, rho, 2, Evaluation::Auto)?.value;
    let vm = variance_mobile_ideal(&psd, rho, 2, Evaluation::Auto)?.value;
    let mut out = RecipeOutput::default();
    let name = format!("noise-ratio.a{}", tag(a));
    out.metrics.push(Metric::info(format!("{name}.static.rmse_percent"), rs, "monte-carlo", trials));
    out.metrics.push(Metric::info(format!("{name}.mobile.rmse_percent"), rm, "monte-carlo", trials));
    out.metrics.push(Metric::info(format!("{name}.predicted_ratio"), (vs / vm).sqrt(), "quadrature", 0));
    out.metrics.push(Metric::new(format!("{name}.ratio"), rs / rm, Some(a.sqrt()), Tolerance::Relative(0.2), "monte-carlo", trials));
    let mut t = DataTable::new("noise_ratio_trials", &["trial", "static_error_energy", "mobile_error_energy"]);
    for (i, r) in runs.iter().enumerate() {
        t.push(vec![i.to_string(), r.0.to_string(), r.1.to_string()]);
    }
    out.tables.push(t);
    Ok(out)
}

pub fn oversampling(ctx: &Context) -> Result<RecipeOutput> {
    let (l, rho) = (ctx.length(), ctx.rho());
    let (d, n) = ctx.nyquist()?;
    let sigma2 = ctx.cfg.noise.measurement_variance.unwrap_or(1.0);
    let ks = ctx.cfg.kernel.oversample.clone().unwrap_or_else(|| vec![1, 2, 4, 8]);
    let trials = ctx.trials(500);
    let nu = ObservedField::noiseless(zero_field(l, rho)?);
    let lines = ParallelLineSet::new(d, 1.0, n)?;
    let mut out = RecipeOutput::default();
    let mut table = DataTable::new("oversampling", &["k", "analytic", "law", "monte_carlo"]);
    let (mut xs, mut mc) = (Vec::new(), Vec::new());
    let mut baseline = None;
    for (i, &k) in ks.iter().enumerate() {
        let clean = sample_mobile(&nu, &lines, d, SamplingKernel::ideal(rho)?, k)?;
        let kernel = ReconKernel::lattice(&clean.lattice, [rho, rho])?;
        let analytic = measurement_noise_variance(&clean.lattice, &kernel, [l, l], sigma2)?;
        let base = *baseline.get_or_insert(analytic * k as f64);
        let law = oversampling_variance_law(k, base)?;
        let runs = run_trials(trials, ctx.seed.wrapping_add(100 * i as u64), |seed| {
            let noisy = add_measurement_noise(&clean, MeasurementNoise { variance: sigma2, seed })?;
            Ok(reconstruct_lattice(&noisy, &kernel)?.field.mean_square())
        })?;
        let v = mean(&runs);
        out.metrics.push(Metric::new(format!("oversampling.k{k}.mc"), v, Some(analytic), Tolerance::Relative(0.05), "monte-carlo", trials));
        out.metrics.push(Metric::new(format!("oversampling.k{k}.law"), analytic, Some(law), Tolerance::Relative(1e-12), "closed-form", 0));
        table.push(vec![k.to_string(), analytic.to_string(), law.to_string(), v.to_string()]);
        xs.push(k as f64);
        mc.push(v);
    }
    if xs.len() >= 2 {
        let slope = loglog_slope(&xs, &mc);
        out.metrics.push(Metric::new("oversampling.slope", slope, Some(-1.0), Tolerance::Absolute(0.05), "monte-carlo", trials));
    }
    out.tables.push(table);
    out.plots.push((
        "variance_vs_k".into(),
        Plot { kind: PlotKind::VarianceVsK, title: "measurement-noise variance".into(), series: vec![Series::new("monte carlo", xs, mc)] },
    ));
    Ok(out)
}

pub fn box_filter(ctx: &Context) -> Result<RecipeOutput> {
    let (l, rho) = (ctx.length(), ctx.rho());
    let (d, n) = ctx.nyquist()?;
    let a = ctx.cfg.noise.ratios.as_ref().map_or(3.0, |r| r[0]);
    let psd = NoisePsd::flat_band(a, rho, ctx.cfg.noise.level.unwrap_or(1.0), 2)?;
    let mut out = RecipeOutput::default();

    let tiny = 1e-4 * PI / rho;
    let gain = kappa(tiny, rho)? * tiny / PI;
    out.metrics.push(Metric::new("box.gain_limit", gain, Some(1.0), Tolerance::Relative(1e-3), "closed-form", 0));
    let m1 = variance_mobile_ideal(&psd, rho, 2, Evaluation::Quadrature)?.value;
    let m2 = variance_mobile_box(&psd, rho, 2, tiny, Some(tiny))?.value;
    out.metrics.push(Metric::new("box.variance_limit", m2, Some(m1), Tolerance::Relative(1e-3), "quadrature", 0));

    let widths = ctx.cfg.kernel.half_widths.clone().unwrap_or_else(|| vec![0.25 * d, 0.5 * d, d]);
    let k = ctx.cfg.kernel.oversample.as_ref().map_or(32, |v| v[0]);
    let oversize = ctx.cfg.field.oversize.unwrap_or(2.0);
    let truth = synthesize_field_on(ctx.seed, [l, l], BandRegion::rectangle(oversize * rho, rho)?, 1.0, None)?;
    let nu = ObservedField::noiseless(truth.clone());
    let lines = ParallelLineSet::new(d, 1.0, n)?;
    let mut table = DataTable::new("box_filter", &["half_width", "kappa", "stat", "m1", "m2", "max_rel_dev"]);
    for hw in widths {
        let kernel = SamplingKernel::boxcar(hw, rho)?;
        let samples = sample_mobile(&nu, &lines, d, kernel, k)?;
        let recon = reconstruct_lattice(&samples, &ReconKernel::lattice(&samples.lattice, [rho, rho])?)?;
        let predicted = mobsense_core::reconstruction::predicted_box_spectrum(&truth, hw, rho)?;
        let mut worst = 0.0f64;
        for (key, c) in recon.field.iter() {
            let p = predicted.coeff(key);
            let dev = if recon.kernel.passes(truth.frequency(key)) && p.norm() > 0.0 { (c - p).norm() / p.norm() } else { c.norm() };
            worst = worst.max(dev);
        }
        out.metrics.push(Metric::new(format!("box.hw{}.spectrum_max_rel_dev", hw), worst, None, Tolerance::AtMost(1e-3), "simulation", 1));
        let b = variance_breakdown(&psd, rho, 2, Some((hw, Some(d / k as f64))))?;
        let m2 = b.m2.map_or(f64::NAN, |v| v.value);
        table.push(vec![hw.to_string(), kappa(hw, rho)?.to_string(), b.stat.value.to_string(), b.m1.value.to_string(), m2.to_string(), worst.to_string()]);
    }
    out.tables.push(table);
    Ok(out)
}
