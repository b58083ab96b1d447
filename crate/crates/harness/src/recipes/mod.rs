//! Named experiments. Each recipe reads its parameters from the config,
//! falling back to desk-scale defaults, and returns metrics with declared
//! tolerances plus data tables and plots.

use std::f64::consts::PI;
use std::sync::OnceLock;

use mobsense_core::rng::trial_seed;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::plot::Plot;
use crate::report::{DataTable, Metric};

mod design;
mod noise;
mod paths;
mod recon;

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "MOBSENSE_THREADS";

pub const DEFAULT_SEED: u64 = 20_240_101;

type Runner = fn(&Context) -> Result<RecipeOutput>;

pub const RECIPES: &[(&str, &str, Runner)] = &[
    ("prop1", "flat-band noise variances: closed form, quadrature and Monte Carlo", noise::prop1),
    ("noise-ratio", "static vs mobile reconstruction error ratio under flat-band noise", noise::noise_ratio),
    ("exact-recon", "noiseless Nyquist reconstruction, static and mobile", recon::exact_recon),
    ("alias-demo", "directional alias energy with an oversized field band", recon::alias_demo),
    ("oversampling", "measurement-noise variance vs oversampling factor", noise::oversampling),
    ("box-filter", "box-filter normalization, variance limits and spectrum", noise::box_filter),
    ("nonuniform", "warped reconstruction along piecewise-affine paths", paths::nonuniform),
    ("bandwidth", "energy of path signals inside the predicted band", paths::bandwidth),
    ("perturbation", "out-of-band power of perturbed paths vs eps", paths::perturbation),
    ("tv-design", "moving-array spacing limits, overlap checker and simulation", design::tv_design),
];

pub fn names() -> Vec<&'static str> {
    RECIPES.iter().map(|r| r.0).collect()
}

pub fn lookup(name: &str) -> Result<Runner> {
    RECIPES
        .iter()
        .find(|r| r.0 == name)
        .map(|r| r.2)
        .ok_or_else(|| HarnessError::UnknownExperiment { name: name.to_string(), available: names() })
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct RecipeOutput {
    pub metrics: Vec<Metric>,
    pub tables: Vec<DataTable>,
    pub plots: Vec<(String, Plot)>,
    /// Extra files written verbatim, `(file name, contents)`.
    pub files: Vec<(String, Vec<u8>)>,
}

/// Parameters seen by a recipe.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
}

impl Context<'_> {
    pub fn trials(&self, default: usize) -> usize {
        self.cfg.trials.unwrap_or(default)
    }

    pub fn length(&self) -> f64 {
        self.cfg.field.length.unwrap_or(15.0)
    }

    pub fn rho(&self) -> f64 {
        self.cfg.field.rho.unwrap_or(PI)
    }

    /// Nyquist spacing `pi / rho` and the number of samples per period.
    pub fn nyquist(&self) -> Result<(f64, usize)> {
        let (l, rho) = (self.length(), self.rho());
        let d = self.cfg.lattice.spacing.unwrap_or(PI / rho);
        let n = l / d;
        if (n - n.round()).abs() > 1e-9 * n || n.round() < 1.0 {
            return Err(HarnessError::Parameter(format!("spacing {d} does not divide the domain length {l}")));
        }
        Ok((d, n.round() as usize))
    }
}

fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            b = b.num_threads(n.max(1));
        }
        b.build().expect("worker pool")
    })
}

/// Runs `n` independent trials seeded from `base`; results come back in
/// trial order, so any later reduction is deterministic.
pub fn run_trials<T: Send>(n: usize, base: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    pool().install(|| (0..n).into_par_iter().map(|i| f(trial_seed(base, i as u64))).collect())
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

fn tag(a: f64) -> String {
    if a.fract() == 0.0 {
        format!("{}", a as i64)
    } else {
        format!("{a}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|k| 3.0 / k).collect();
        assert!((loglog_slope(&x, &y) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_recipe_lists_available() {
        let e = lookup("nope").err().unwrap().to_string();
        assert!(e.contains("prop1") && e.contains("tv-design"));
    }

    #[test]
    fn trials_are_ordered_and_reproducible() {
        let a = run_trials(64, 5, |s| Ok(s)).unwrap();
        let b = run_trials(64, 5, |s| Ok(s)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[3], trial_seed(5, 3));
    }
}
