use mobsense_core::spectral::alias_energy;
use mobsense_core::{
    combine_orthogonal, reconstruct_1d, reconstruct_lattice, sample_line, sample_mobile, sample_static, synthesize_field_on,
    BandRegion, HarmonicField, ObservedField, ParallelLineSet, ReconKernel, ReconstructedField, SampleLattice,
    SamplingKernel,
};

use super::noise::reconstruct_both;
use super::{Context, RecipeOutput, Result};
use crate::plot::{Plot, PlotKind, Series};
use crate::report::{DataTable, Metric, Tolerance};

fn rel_error(estimate: &HarmonicField, truth: &HarmonicField) -> Result<f64> {
    Ok((estimate.sub(truth)?.energy() / truth.energy()).sqrt())
}

pub fn exact_recon(ctx: &Context) -> Result<RecipeOutput> {
    let (l, rho) = (ctx.length(), ctx.rho());
    let (d, n) = ctx.nyquist()?;
    let power = ctx.cfg.field.power.unwrap_or(1.0);
    let mut out = RecipeOutput::default();

    let truth = synthesize_field_on(ctx.seed, [l, l], BandRegion::square(rho)?, power, None)?;
    let (s, m) = reconstruct_both(&ObservedField::noiseless(truth.clone()), d, n, rho)?;
    out.metrics.push(Metric::new("exact.static.rel_l2", rel_error(&s, &truth)?, None, Tolerance::AtMost(1e-10), "simulation", 1));
    out.metrics.push(Metric::new("exact.mobile.rel_l2", rel_error(&m, &truth)?, None, Tolerance::AtMost(1e-10), "simulation", 1));

    let line = synthesize_field_on(ctx.seed.wrapping_add(1), [l, 1.0], BandRegion::interval(rho)?, power, None)?;
    let speed = ctx.cfg.trajectory.speed.unwrap_or(1.0);
    let samples = sample_line(&ObservedField::noiseless(line.clone()), speed, d / speed, SamplingKernel::ideal(rho)?, 1)?;
    let r = reconstruct_1d(&samples, speed, d / speed, rho)?;
    out.metrics.push(Metric::new("exact.line.rel_l2", rel_error(&r.field, &line)?, None, Tolerance::AtMost(1e-10), "simulation", 1));

    let mut t = DataTable::new("exact_grid", &["x", "y", "truth", "static", "mobile"]);
    let grid = 2 * n;
    let (gt, gs, gm) = (truth.grid_values(grid, grid), s.grid_values(grid, grid), m.grid_values(grid, grid));
    for iy in 0..grid {
        for ix in 0..grid {
            let i = iy * grid + ix;
            let (x, y) = (l * ix as f64 / grid as f64, l * iy as f64 / grid as f64);
            t.push(vec![x.to_string(), y.to_string(), gt[i].to_string(), gs[i].to_string(), gm[i].to_string()]);
        }
    }
    out.tables.push(t);
    Ok(out)
}

fn heatmap(title: &str, recon: &ReconstructedField, target: &HarmonicField) -> Plot {
    let mut s = Series::new("error magnitude", Vec::new(), Vec::new());
    for (k, c) in recon.field.iter() {
        if recon.kernel.passes(recon.field.frequency(k)) {
            s.x.push(k[0] as f64);
            s.y.push(k[1] as f64);
            s.z.push((c - target.coeff(k)).norm());
        }
    }
    Plot { kind: PlotKind::SpectrumHeatmap, title: title.to_string(), series: vec![s] }
}

pub fn alias_demo(ctx: &Context) -> Result<RecipeOutput> {
    let (l, rho) = (ctx.length(), ctx.rho());
    let (d, n) = ctx.nyquist()?;
    let oversize = ctx.cfg.field.oversize.unwrap_or(2.0);
    let truth = synthesize_field_on(ctx.seed, [l, l], BandRegion::square(oversize * rho)?, 1.0, None)?;
    let target = truth.project(BandRegion::square(rho)?);
    let nu = ObservedField::noiseless(truth.clone());
    let lat = SampleLattice::rectangular(d, d, n, n)?;
    let kernel = ReconKernel::lattice(&lat, [rho, rho])?;
    let ideal = SamplingKernel::ideal(rho)?;

    let stat = reconstruct_lattice(&sample_static(&nu, &lat)?, &kernel)?;
    let mx = reconstruct_lattice(&sample_mobile(&nu, &ParallelLineSet::along(0, d, 1.0, n)?, d, ideal, 1)?, &kernel)?;
    let my = reconstruct_lattice(&sample_mobile(&nu, &ParallelLineSet::along(1, d, 1.0, n)?, d, ideal, 1)?, &kernel)?;
    let combined = combine_orthogonal(&mx, &my)?;

    let mut out = RecipeOutput::default();
    let mut table = DataTable::new("alias_energy", &["scheme", "x_shift", "y_shift", "distortion", "total"]);
    for (name, r) in [("static", &stat), ("mobile_x", &mx), ("mobile_y", &my)] {
        let a = alias_energy(r, &truth)?;
        table.push(vec![name.into(), a.x_shift.to_string(), a.y_shift.to_string(), a.distortion.to_string(), a.total.to_string()]);
        let (xf, yf) = (a.x_shift / a.total, a.y_shift / a.total);
        match name {
            "static" => {
                out.metrics.push(Metric::new("alias.static.x_fraction", xf, None, Tolerance::AtLeast(1e-6), "simulation", 1));
                out.metrics.push(Metric::new("alias.static.y_fraction", yf, None, Tolerance::AtLeast(1e-6), "simulation", 1));
            }
            "mobile_x" => {
                out.metrics.push(Metric::new("alias.mobile_x.x_fraction", xf.abs(), None, Tolerance::AtMost(1e-10), "simulation", 1));
                out.metrics.push(Metric::info("alias.mobile_x.y_fraction", yf, "simulation", 1));
            }
            _ => {
                out.metrics.push(Metric::new("alias.mobile_y.y_fraction", yf.abs(), None, Tolerance::AtMost(1e-10), "simulation", 1));
                out.metrics.push(Metric::info("alias.mobile_y.x_fraction", xf, "simulation", 1));
            }
        }
    }
    let err = |f: &HarmonicField| -> Result<f64> { Ok(f.sub(&target)?.energy()) };
    let (ex, ey, ec) = (err(&mx.field)?, err(&my.field)?, err(&combined.field)?);
    out.metrics.push(Metric::info("alias.mobile_x.error_energy", ex, "simulation", 1));
    out.metrics.push(Metric::info("alias.mobile_y.error_energy", ey, "simulation", 1));
    out.metrics.push(Metric::info("alias.combined.error_energy", ec, "simulation", 1));
    out.metrics.push(Metric::new("alias.combined.error_over_best_single", ec / ex.min(ey), None, Tolerance::AtMost(1.0), "simulation", 1));
    out.tables.push(table);
    for (name, r) in [("static", &stat), ("mobile_x", &mx)] {
        out.plots.push((format!("spectrum_error_{name}"), heatmap(&format!("{name} reconstruction error"), r, &target)));
        let mut buf = Vec::new();
        r.export_spectrum_csv(&mut buf)?;
        out.files.push((format!("spectrum_{name}.csv"), buf));
    }
    Ok(out)
}
