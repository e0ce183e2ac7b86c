//! Human-editable run configuration.
//!
//! A TOML file with flat dotted keys that mirror [`SimConfig`] field names.
//! Powers are in watts, distances in meters and the SIR threshold in dB:
//!
//! ```toml
//! model.lambda = 5e-5
//! model.gamma_db = 0.0
//! replications = 3000
//! edge_mode = "none"
//! ```
//!
//! Keys left out keep their defaults; command-line flags override the file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::ModelParams;
use crate::error::{Error, Result};
use crate::harness::units::convert_units;
use crate::montecarlo::{EdgeMode, InterfererMode, SimConfig};

/// Parameter file shipped with the tool: R = 500 m, R0 = 1 m, p_c = 100 mW,
/// p_i = 0.2 mW, k = 0.8, mu = 50 m, 3000 replications.
pub const DEFAULT_CONFIG: &str = include_str!("default_params.toml");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelFile {
    pub lambda: Option<f64>,
    pub k: Option<f64>,
    pub mu: Option<f64>,
    pub p_c: Option<f64>,
    pub p_i: Option<f64>,
    pub alpha: Option<f64>,
    pub cell_radius: Option<f64>,
    pub protection_radius: Option<f64>,
    pub gamma_db: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub model: ModelFile,
    pub replications: Option<usize>,
    pub sim_radius: Option<f64>,
    pub edge_mode: Option<EdgeMode>,
    pub interferers: Option<InterfererMode>,
    pub master_seed: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Values of `other` win where present.
    pub fn overlay(mut self, other: &ConfigFile) -> Self {
        macro_rules! take {
            ($($field:ident).+) => {
                if other.$($field).+.is_some() {
                    self.$($field).+ = other.$($field).+.clone();
                }
            };
        }
        take!(model.lambda);
        take!(model.k);
        take!(model.mu);
        take!(model.p_c);
        take!(model.p_i);
        take!(model.alpha);
        take!(model.cell_radius);
        take!(model.protection_radius);
        take!(model.gamma_db);
        take!(replications);
        take!(sim_radius);
        take!(edge_mode);
        take!(interferers);
        take!(master_seed);
        self
    }

    /// Fills gaps from the shipped defaults and validates the result.
    pub fn resolve(&self) -> Result<SimConfig> {
        let base = ConfigFile::parse(DEFAULT_CONFIG)?.overlay(self);
        let m = &base.model;
        let missing = |key: &str| Error::Config(format!("missing key `{key}`"));
        let model = ModelParams {
            lambda: m.lambda.ok_or_else(|| missing("model.lambda"))?,
            k: m.k.ok_or_else(|| missing("model.k"))?,
            mu: m.mu.ok_or_else(|| missing("model.mu"))?,
            p_c: m.p_c.ok_or_else(|| missing("model.p_c"))?,
            p_i: m.p_i.ok_or_else(|| missing("model.p_i"))?,
            alpha: m.alpha.ok_or_else(|| missing("model.alpha"))?,
            cell_radius: m.cell_radius.ok_or_else(|| missing("model.cell_radius"))?,
            protection_radius: m.protection_radius.ok_or_else(|| missing("model.protection_radius"))?,
            gamma: convert_units(m.gamma_db.ok_or_else(|| missing("model.gamma_db"))?, "dB", "linear")?,
        };
        let config = SimConfig {
            model,
            replications: base.replications.ok_or_else(|| missing("replications"))?,
            sim_radius: base.sim_radius.unwrap_or(model.cell_radius),
            edge_mode: base.edge_mode.unwrap_or_default(),
            interferers: base.interferers.unwrap_or_default(),
            master_seed: base.master_seed.ok_or_else(|| missing("master_seed"))?,
        };
        config.validate()?;
        Ok(config)
    }
}
