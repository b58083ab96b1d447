//! Metric tables and the `report.csv` writer.

use std::fmt;
use std::io::Write;

use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// A declared pass criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// `|value - reference| <= tol * |reference|`.
    Relative(f64),
    /// `|value - reference| <= tol`.
    Absolute(f64),
    /// `value <= tol`.
    AtMost(f64),
    /// `value >= tol`.
    AtLeast(f64),
    /// Informational row.
    None,
}

impl Tolerance {
    pub fn threshold(&self) -> Option<f64> {
        match *self {
            Tolerance::Relative(t) | Tolerance::Absolute(t) | Tolerance::AtMost(t) | Tolerance::AtLeast(t) => Some(t),
            Tolerance::None => None,
        }
    }

    fn with_threshold(self, t: f64) -> Self {
        match self {
            Tolerance::Relative(_) => Tolerance::Relative(t),
            Tolerance::Absolute(_) => Tolerance::Absolute(t),
            Tolerance::AtMost(_) => Tolerance::AtMost(t),
            Tolerance::AtLeast(_) => Tolerance::AtLeast(t),
            Tolerance::None => Tolerance::None,
        }
    }

    pub fn check(&self, value: f64, reference: Option<f64>) -> Option<bool> {
        let ok = match (*self, reference) {
            (Tolerance::Relative(t), Some(r)) => (value - r).abs() <= t * r.abs(),
            (Tolerance::Absolute(t), Some(r)) => (value - r).abs() <= t,
            (Tolerance::AtMost(t), _) => value <= t,
            (Tolerance::AtLeast(t), _) => value >= t,
            (Tolerance::None, _) => return None,
            (_, None) => false,
        };
        Some(ok && value.is_finite())
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Relative(t) => write!(f, "rel<={t}"),
            Tolerance::Absolute(t) => write!(f, "abs<={t}"),
            Tolerance::AtMost(t) => write!(f, "<={t}"),
            Tolerance::AtLeast(t) => write!(f, ">={t}"),
            Tolerance::None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub tolerance: Tolerance,
    /// closed-form, quadrature, monte-carlo, simulation, ...
    pub method: String,
    pub seeds: usize,
    pub pass: Option<bool>,
}

impl Metric {
    pub fn new(name: impl Into<String>, value: f64, reference: Option<f64>, tolerance: Tolerance, method: &str, seeds: usize) -> Self {
        let pass = tolerance.check(value, reference);
        Metric { name: name.into(), value, reference, tolerance, method: method.to_string(), seeds, pass }
    }

    pub fn info(name: impl Into<String>, value: f64, method: &str, seeds: usize) -> Self {
        Metric::new(name, value, None, Tolerance::None, method, seeds)
    }

    /// Applies a config override of the threshold and rechecks.
    pub fn override_threshold(&mut self, t: f64) {
        self.tolerance = self.tolerance.with_threshold(t);
        self.pass = self.tolerance.check(self.value, self.reference);
    }
}

/// A data table written next to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl DataTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        DataTable { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(out, "{}", r.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub metrics: Vec<Metric>,
    pub config_hash: String,
    pub seed: u64,
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    /// True when no declared tolerance failed.
    pub fn passed(&self) -> bool {
        self.metrics.iter().all(|m| m.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Metric> {
        self.metrics.iter().filter(|m| m.pass == Some(false))
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# experiment={}", self.experiment)?;
        writeln!(out, "# config_sha256={}", self.config_hash)?;
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "# mobsense={}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# rng={}", mobsense_core::rng::RNG_ALGORITHM)?;
        for a in &self.artifacts {
            writeln!(out, "# artifact={a}")?;
        }
        writeln!(out, "metric,value,reference,tolerance,method,seeds,pass")?;
        for m in &self.metrics {
            let pass = match m.pass {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "",
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                m.name,
                m.value,
                m.reference.map_or(String::new(), |r| r.to_string()),
                m.tolerance,
                m.method,
                m.seeds,
                pass
            )?;
        }
        Ok(())
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.echo().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_checks() {
        assert_eq!(Tolerance::Relative(0.05).check(1.04, Some(1.0)), Some(true));
        assert_eq!(Tolerance::Relative(0.05).check(1.06, Some(1.0)), Some(false));
        assert_eq!(Tolerance::AtMost(1e-10).check(f64::NAN, None), Some(false));
        assert_eq!(Tolerance::AtLeast(10.0).check(10.0, None), Some(true));
        assert_eq!(Tolerance::None.check(3.0, None), None);
        let mut m = Metric::new("x", 1.06, Some(1.0), Tolerance::Relative(0.05), "closed-form", 0);
        assert_eq!(m.pass, Some(false));
        m.override_threshold(0.1);
        assert_eq!(m.pass, Some(true));
        assert_eq!(m.tolerance.to_string(), "rel<=0.1");
    }
}
