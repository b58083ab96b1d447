use std::f64::consts::PI;

use mobsense_core::rng::rng;
use mobsense_core::tv::{design_report, max_spacing, overlap_check, path_band, tv_simulate, MovingArrayConfig, TvSpectrum};
use rand::Rng;

use super::{Context, RecipeOutput, Result};
use crate::plot::{Plot, PlotKind, Series};
use crate::report::{DataTable, Metric, Tolerance};

/// Relative offset from the closed-form spacing limit used for the checker.
const MARGIN: f64 = 1e-3;

fn random_design(g: &mut impl Rng) -> Result<(TvSpectrum, f64)> {
    if g.gen_bool(0.5) {
        let s = TvSpectrum::rectangle(g.gen_range(0.5..6.0), g.gen_range(0.5..6.0))?;
        Ok((s, g.gen_range(0.0..4.0)))
    } else {
        let c = g.gen_range(0.5..4.0);
        let s = TvSpectrum::wave_cone(g.gen_range(0.5..6.0), c)?;
        Ok((s, g.gen_range(0.0..0.95) * c))
    }
}

struct Sweep {
    rows: Vec<(usize, f64, f64, bool)>,
    limit: f64,
}

fn sweep(spectrum: &TvSpectrum, speed: f64, lengths: [f64; 2], sensors: &[usize], times: usize, seed: u64) -> Result<Sweep> {
    let limit = max_spacing(spectrum, speed)?;
    let mut rows = Vec::new();
    for &n in sensors {
        let cfg = MovingArrayConfig::new(lengths[0] / n as f64, speed, lengths[1] / times as f64)?;
        let o = tv_simulate(spectrum, &cfg, lengths, seed)?;
        rows.push((n, cfg.spacing, o.rmse_percent, o.overlap.is_alias_free()));
    }
    Ok(Sweep { rows, limit })
}

impl Sweep {
    /// Strictly inside the limit; a spacing on the limit itself aliases.
    fn inside(&self, spacing: f64) -> bool {
        spacing < self.limit * (1.0 - 1e-9)
    }
}

fn sweep_metrics(out: &mut RecipeOutput, name: &str, s: &Sweep) {
    let inside = s.rows.iter().filter(|r| s.inside(r.1)).max_by(|a, b| a.1.total_cmp(&b.1));
    let outside = s.rows.iter().filter(|r| !s.inside(r.1)).min_by(|a, b| a.1.total_cmp(&b.1));
    let worst_inside = s.rows.iter().filter(|r| s.inside(r.1)).map(|r| r.2).fold(0.0, f64::max);
    out.metrics.push(Metric::new(format!("{name}.inside.max_rmse_percent"), worst_inside, None, Tolerance::AtMost(1e-8), "simulation", 1));
    if let (Some(i), Some(o)) = (inside, outside) {
        out.metrics.push(Metric::info(format!("{name}.just_inside.spacing"), i.1, "simulation", 1));
        out.metrics.push(Metric::info(format!("{name}.just_outside.spacing"), o.1, "simulation", 1));
        out.metrics.push(Metric::info(format!("{name}.just_outside.rmse_percent"), o.2, "simulation", 1));
        let ratio = o.2 / i.2.max(f64::MIN_POSITIVE);
        out.metrics.push(Metric::new(format!("{name}.outside_over_inside"), ratio, None, Tolerance::AtLeast(10.0), "simulation", 1));
    }
    let agree = s.rows.iter().filter(|r| r.3 == s.inside(r.1)).count();
    out.metrics.push(Metric::new(
        format!("{name}.checker_matches_limit"),
        agree as f64 / s.rows.len() as f64,
        None,
        Tolerance::AtLeast(1.0),
        "geometric",
        0,
    ));
}

pub fn tv_design(ctx: &Context) -> Result<RecipeOutput> {
    let mut out = RecipeOutput::default();

    let configs = ctx.cfg.lattice.configs.unwrap_or(200);
    let mut g = rng(ctx.seed);
    let mut mismatches = 0usize;
    let mut t = DataTable::new("checker", &["shape", "rho_x", "rho_t", "speed", "limit", "inside_free", "outside_free"]);
    for _ in 0..configs {
        let (spectrum, v) = random_design(&mut g)?;
        let limit = max_spacing(&spectrum, v)?;
        let interval = 0.99 * PI / path_band(&spectrum, v)?;
        let check = |s: f64| -> Result<bool> { Ok(overlap_check(&spectrum, &MovingArrayConfig::new(s, v, interval)?)?.is_alias_free()) };
        let (a, b) = (check(limit * (1.0 - MARGIN))?, check(limit * (1.0 + MARGIN))?);
        if !a || b {
            mismatches += 1;
        }
        let shape = if matches!(spectrum, TvSpectrum::Rectangle { .. }) { "rectangle" } else { "wave-cone" };
        t.push(vec![
            shape.into(),
            spectrum.rho_x().to_string(),
            spectrum.rho_t().to_string(),
            v.to_string(),
            limit.to_string(),
            a.to_string(),
            b.to_string(),
        ]);
    }
    out.metrics.push(Metric::new("tv.closed_form_vs_checker.mismatches", mismatches as f64, None, Tolerance::AtMost(0.0), "geometric", 0));
    out.tables.push(t);

    let l = ctx.cfg.field.length.unwrap_or(12.0 * PI);
    let rho_x = ctx.cfg.field.rho.unwrap_or(6.0);
    let rho_t = ctx.cfg.field.rho_t.unwrap_or(2.0);
    let v = ctx.cfg.trajectory.speed.unwrap_or(1.0);
    let sensors = ctx.cfg.lattice.sensors.clone().unwrap_or_else(|| (20..=28).collect());
    let times = ctx.cfg.lattice.times.unwrap_or(97);
    let rect = TvSpectrum::rectangle(rho_x, rho_t)?;
    let s = sweep(&rect, v, [l, l], &sensors, times, ctx.seed)?;
    sweep_metrics(&mut out, "tv.rect", &s);
    let mut st = DataTable::new("tv_sweep", &["spectrum", "sensors", "spacing", "rmse_percent", "alias_free"]);
    for r in &s.rows {
        st.push(vec!["rectangle".into(), r.0.to_string(), r.1.to_string(), r.2.to_string(), r.3.to_string()]);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = s.rows.iter().map(|r| (r.1, r.2)).unzip();
    let mut series = vec![Series::new("rectangle", xs, ys)];

    // far-field wave cone rho_x = rho_t / c, array at half the wave speed
    let c = ctx.cfg.field.wave_speed.unwrap_or(0.5);
    let cone = TvSpectrum::wave_cone(rho_t, c)?;
    let sw = sweep(&cone, 0.5 * c, [l, l], &[28, 32, 36, 40], 41, ctx.seed.wrapping_add(1))?;
    sweep_metrics(&mut out, "tv.wave", &sw);
    for r in &sw.rows {
        st.push(vec!["wave-cone".into(), r.0.to_string(), r.1.to_string(), r.2.to_string(), r.3.to_string()]);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = sw.rows.iter().map(|r| (r.1, r.2)).unzip();
    series.push(Series::new("wave cone", xs, ys));
    out.tables.push(st);
    out.plots.push(("spacing_sweep".into(), Plot { kind: PlotKind::SpacingSweep, title: "moving-array reconstruction error".into(), series }));

    let nominal = MovingArrayConfig::new(s.limit, v, l / times as f64)?;
    let mut buf = Vec::new();
    design_report(&rect, &nominal)?.write_csv(&mut buf)?;
    out.files.push(("design.csv".into(), buf));
    Ok(out)
}
