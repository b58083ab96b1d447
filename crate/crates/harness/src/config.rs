//! Experiment configuration files.
//!
//! A config is a TOML document with a few top-level keys and one optional
//! table per parameter block. Every key is optional except `experiment`;
//! recipes fill in their own defaults. Unknown keys are rejected.
//!
//! ```toml
//! experiment = "prop1"
//! seed = 7
//! trials = 500
//!
//! [field]
//! length = 15.0
//! rho = 3.141592653589793
//!
//! [noise]
//! ratios = [3.0, 5.0, 7.0]
//!
//! [tolerance]
//! "prop1.a3.stat.mc" = 0.05
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Output directory; the CLI's `--out` wins over this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plots: Option<bool>,
    #[serde(default, skip_serializing_if = "FieldBlock::is_empty")]
    pub field: FieldBlock,
    #[serde(default, skip_serializing_if = "NoiseBlock::is_empty")]
    pub noise: NoiseBlock,
    #[serde(default, skip_serializing_if = "TrajectoryBlock::is_empty")]
    pub trajectory: TrajectoryBlock,
    #[serde(default, skip_serializing_if = "KernelBlock::is_empty")]
    pub kernel: KernelBlock,
    #[serde(default, skip_serializing_if = "LatticeBlock::is_empty")]
    pub lattice: LatticeBlock,
    /// Overrides of declared metric thresholds, keyed by metric name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerance: BTreeMap<String, f64>,
}

macro_rules! block {
    ($(#[$meta:meta])* $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $($(#[$fm])* #[serde(default, skip_serializing_if = "Option::is_none")] pub $field: Option<$ty>,)*
        }

        impl $name {
            pub fn is_empty(&self) -> bool {
                true $(&& self.$field.is_none())*
            }
        }
    };
}

block!(
    /// Signal field and spectrum parameters.
    FieldBlock {
        /// Side of the periodic domain.
        length: f64,
        /// Field bandwidth (rad per unit length).
        rho: f64,
        /// Multiple of `rho` for the alias demonstration field.
        oversize: f64,
        power: f64,
        /// Temporal bandwidth for space-time designs.
        rho_t: f64,
        /// Wave speed for wave-cone spectra.
        wave_speed: f64,
    }
);

block!(
    /// Environmental and measurement noise.
    NoiseBlock {
        /// Flat-band ratios `a`.
        ratios: Vec<f64>,
        level: f64,
        measurement_variance: f64,
    }
);

block!(
    /// Sensor paths.
    TrajectoryBlock {
        speed: f64,
        cases: usize,
        segments: usize,
        min_speed: f64,
        max_speed: f64,
        eps: Vec<f64>,
    }
);

block!(
    /// Sampling kernels.
    KernelBlock {
        half_widths: Vec<f64>,
        oversample: Vec<usize>,
        cutoff: f64,
    }
);

block!(
    /// Sample lattices and space-time arrays.
    LatticeBlock {
        spacing: f64,
        sensors: Vec<usize>,
        times: usize,
        configs: usize,
    }
);

/// Parses and validates a config; errors name the offending key path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let de = toml::Deserializer::new(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        HarnessError::Config { path, message: inner.message().trim().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        ExperimentConfig { experiment: experiment.to_string(), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |path: &str, message: &str| Err(HarnessError::Config { path: path.into(), message: message.into() });
        if self.experiment.trim().is_empty() {
            return bad("experiment", "must name a recipe");
        }
        if self.trials == Some(0) {
            return bad("trials", "must be at least 1");
        }
        let positive = [
            ("field.length", self.field.length),
            ("field.rho", self.field.rho),
            ("field.oversize", self.field.oversize),
            ("field.rho_t", self.field.rho_t),
            ("field.wave_speed", self.field.wave_speed),
            ("trajectory.speed", self.trajectory.speed),
            ("trajectory.min_speed", self.trajectory.min_speed),
            ("trajectory.max_speed", self.trajectory.max_speed),
            ("kernel.cutoff", self.kernel.cutoff),
            ("lattice.spacing", self.lattice.spacing),
        ];
        for (path, v) in positive {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(path, "must be a positive finite number");
                }
            }
        }
        for (path, v) in [("field.power", self.field.power), ("noise.level", self.noise.level), ("noise.measurement_variance", self.noise.measurement_variance)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return bad(path, "must be a nonnegative finite number");
                }
            }
        }
        if let Some(r) = &self.noise.ratios {
            if r.is_empty() || r.iter().any(|a| !(a.is_finite() && *a >= 1.0)) {
                return bad("noise.ratios", "must be a nonempty list of numbers >= 1");
            }
        }
        if let Some(k) = &self.kernel.oversample {
            if k.is_empty() || k.contains(&0) {
                return bad("kernel.oversample", "must be a nonempty list of factors >= 1");
            }
        }
        if let Some(h) = &self.kernel.half_widths {
            if h.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return bad("kernel.half_widths", "must be positive");
            }
        }
        if let Some(e) = &self.trajectory.eps {
            if e.len() < 2 || e.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return bad("trajectory.eps", "needs at least two positive values");
            }
        }
        if let Some(s) = &self.lattice.sensors {
            if s.is_empty() || s.contains(&0) {
                return bad("lattice.sensors", "must be a nonempty list of counts >= 1");
            }
        }
        for (name, v) in &self.tolerance {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(HarnessError::Config { path: format!("tolerance.{name}"), message: "must be a nonnegative finite number".into() });
            }
        }
        Ok(())
    }

    /// The resolved config as written to `config.echo`.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_round_trips() {
        let text = "experiment = \"prop1\"\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.echo(), text);
        let full = parse_config("experiment = \"tv-design\"\nseed = 3\n[field]\nrho = 6.0\n[tolerance]\n\"tv.inside\" = 1e-9\n").unwrap();
        assert_eq!(parse_config(&full.echo()).unwrap(), full);
    }

    #[test]
    fn misspelled_key_is_named() {
        let e = parse_config("experiment = \"prop1\"\n[field]\nrhoo = 3.0\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("rhoo"), "{msg}");
    }

    #[test]
    fn type_mismatch_names_path() {
        let e = parse_config("experiment = \"prop1\"\n[field]\nrho = \"3.0\"\n").unwrap_err();
        match e {
            HarnessError::Config { path, .. } => assert_eq!(path, "field.rho"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn semantic_checks() {
        assert!(parse_config("experiment = \"x\"\ntrials = 0\n").is_err());
        assert!(parse_config("experiment = \"x\"\n[noise]\nratios = [0.5]\n").is_err());
        assert!(parse_config("seed = 1\n").is_err());
    }
}
