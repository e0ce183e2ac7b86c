//! Monte Carlo estimation of the cellular user's uplink coverage and
//! calibration of the retention tuning factor `k`.
//!
//! Replication `i` draws every random quantity from streams keyed by
//! `(master_seed, i, purpose)`, so estimates are bit-identical for any worker
//! count and any prefix of replications is reproduced exactly when more are
//! requested.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{retention_probability, ModelParams};
use crate::error::{Error, Result};
use crate::optimize::minimize_bounded;
use crate::pairing::{estimate_retention, pair_nodes, select_transmitters, RetentionCurve};
use crate::pointprocess::{sample_cell_user, sample_fading, sample_ppp, Annulus, PointPattern};
use crate::rng::{Purpose, RngStream};

/// Replications used by the reference experiments.
pub const DEFAULT_REPLICATIONS: usize = 3000;

/// Treatment of candidates near the edge of the sampling disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    /// Candidates only inside the sampling disk.
    #[default]
    None,
    /// Extra candidates in a ring of width `mu` outside the sampling disk.
    /// They can pair with inside nodes but never interfere.
    GuardRing,
}

/// Which members of a pair radiate on the shared resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfererMode {
    /// Every node that ends up in a pair, so the active set has the intensity
    /// `lambda * p(r_d)` of the thinned process.
    #[default]
    AllPaired,
    /// One member per pair chosen by a fair coin.
    OnePerPair,
}

macro_rules! string_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(Error::Config(format!(
                        "unknown {} `{other}`", stringify!($ty)
                    ))),
                }
            }
        }
    };
}

string_enum!(EdgeMode { EdgeMode::None => "none", EdgeMode::GuardRing => "guard_ring" });
string_enum!(InterfererMode {
    InterfererMode::AllPaired => "all_paired",
    InterfererMode::OnePerPair => "one_per_pair",
});

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelParams,
    pub replications: usize,
    /// Radius of the disk in which candidate interferers are dropped, meters.
    pub sim_radius: f64,
    pub edge_mode: EdgeMode,
    pub interferers: InterfererMode,
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let model = ModelParams::default();
        Self {
            sim_radius: model.cell_radius,
            model,
            replications: DEFAULT_REPLICATIONS,
            edge_mode: EdgeMode::None,
            interferers: InterfererMode::AllPaired,
            master_seed: 2015,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be >= 1"));
        }
        if !(self.sim_radius >= self.model.cell_radius) || !self.sim_radius.is_finite() {
            return Err(Error::invalid(
                "sim_radius",
                format!(
                    "must be finite and >= cell radius {}, got {}",
                    self.model.cell_radius, self.sim_radius
                ),
            ));
        }
        Ok(())
    }

    pub fn cell(&self) -> Result<Annulus> {
        Annulus::new(self.model.protection_radius, self.model.cell_radius)
    }

    pub fn interferer_region(&self) -> Result<Annulus> {
        Annulus::new(self.model.protection_radius, self.sim_radius)
    }
}

/// Candidates of one replication. Indices below `inside` lie in the sampling
/// disk; the rest belong to the guard ring.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    pub pattern: PointPattern,
    pub inside: usize,
}

pub fn sample_candidates(config: &SimConfig, replication: u64) -> Result<Candidates> {
    let seed = config.master_seed;
    let region = config.interferer_region()?;
    let mut pattern = sample_ppp(
        &region,
        config.model.lambda,
        RngStream::for_replication(seed, replication, Purpose::Candidates),
    )?;
    let inside = pattern.len();
    if config.edge_mode == EdgeMode::GuardRing && config.model.mu > 0.0 {
        let ring = Annulus::new(config.sim_radius, config.sim_radius + config.model.mu)?;
        pattern.extend(sample_ppp(
            &ring,
            config.model.lambda,
            RngStream::for_replication(seed, replication, Purpose::GuardRing),
        )?);
    }
    Ok(Candidates { pattern, inside })
}

/// Received powers at the base station in one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    /// `p_c f_c r_c^-alpha`.
    pub signal: f64,
    /// Interference from the active D2D set after pairing.
    pub thinned_interference: f64,
    /// Interference when every candidate in the sampling disk transmits.
    pub full_interference: f64,
    pub candidates: usize,
    pub interferers: usize,
}

impl ReplicationOutcome {
    pub fn covered(&self, gamma: f64) -> bool {
        self.signal >= gamma * self.thinned_interference
    }

    pub fn covered_lower_bound(&self, gamma: f64) -> bool {
        self.signal >= gamma * self.full_interference
    }
}

pub fn run_replication(config: &SimConfig, replication: u64) -> Result<ReplicationOutcome> {
    let model = &config.model;
    let seed = config.master_seed;
    let Candidates { pattern, inside } = sample_candidates(config, replication)?;

    let pairing = pair_nodes(&pattern, model.mu)?;
    let active: Vec<usize> = match config.interferers {
        InterfererMode::AllPaired => pairing.members().filter(|&i| i < inside).collect(),
        InterfererMode::OnePerPair => {
            let stream = RngStream::for_replication(seed, replication, Purpose::Pairing);
            select_transmitters(pairing, stream)
                .transmitters
                .into_iter()
                .filter(|&i| i < inside)
                .collect()
        }
    };

    let alpha = model.alpha;
    let received = |i: usize| {
        let r = pattern.positions()[i].norm();
        model.p_i * pattern.fading()[i] * r.powf(-alpha)
    };
    let thinned_interference = active.iter().map(|&i| received(i)).sum();
    let full_interference = (0..inside).map(received).sum();

    let user = sample_cell_user(
        &config.cell()?,
        RngStream::for_replication(seed, replication, Purpose::CellUser),
    );
    let f_c = sample_fading(1, RngStream::for_replication(seed, replication, Purpose::CellFading))[0];
    let signal = model.p_c * f_c * user.r.powf(-alpha);

    Ok(ReplicationOutcome {
        signal,
        thinned_interference,
        full_interference,
        candidates: inside,
        interferers: active.len(),
    })
}

/// Runs replications `0..config.replications` on the current rayon pool,
/// returned in replication order.
pub fn run_replications(config: &SimConfig) -> Result<Vec<ReplicationOutcome>> {
    config.validate()?;
    (0..config.replications as u64)
        .into_par_iter()
        .map(|i| run_replication(config, i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub gamma_db: f64,
    pub mean: f64,
    pub replications: usize,
    pub half_width_95: f64,
}

impl CoverageEstimate {
    pub fn from_count(gamma_db: f64, covered: usize, replications: usize) -> Self {
        let mean = covered as f64 / replications as f64;
        Self {
            gamma_db,
            mean,
            replications,
            half_width_95: 1.96 * (mean * (1.0 - mean) / replications as f64).sqrt(),
        }
    }
}

/// Thinned and unthinned estimates computed from the same replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageComparison {
    pub thinned: Vec<CoverageEstimate>,
    pub lower_bound: Vec<CoverageEstimate>,
}

fn check_grid(gamma_grid_db: &[f64]) -> Result<()> {
    if gamma_grid_db.is_empty() {
        return Err(Error::invalid("gamma_grid", "must not be empty"));
    }
    if let Some(g) = gamma_grid_db.iter().find(|g| !g.is_finite()) {
        return Err(Error::invalid("gamma_grid", format!("non-finite threshold {g} dB")));
    }
    Ok(())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Coverage with pairing, one estimate per threshold. All thresholds share
/// the same replications.
pub fn simulate_coverage(config: &SimConfig, gamma_grid_db: &[f64]) -> Result<Vec<CoverageEstimate>> {
    Ok(simulate_coverage_modes(config, gamma_grid_db)?.thinned)
}

pub fn simulate_coverage_modes(config: &SimConfig, gamma_grid_db: &[f64]) -> Result<CoverageComparison> {
    check_grid(gamma_grid_db)?;
    let outcomes = run_replications(config)?;
    Ok(summarize(&outcomes, gamma_grid_db))
}

pub fn summarize(outcomes: &[ReplicationOutcome], gamma_grid_db: &[f64]) -> CoverageComparison {
    let n = outcomes.len();
    let estimate = |covered: &dyn Fn(&ReplicationOutcome, f64) -> bool| {
        gamma_grid_db
            .iter()
            .map(|&db| {
                let gamma = db_to_linear(db);
                let count = outcomes.iter().filter(|o| covered(o, gamma)).count();
                CoverageEstimate::from_count(db, count, n)
            })
            .collect()
    };
    CoverageComparison {
        thinned: estimate(&|o, g| o.covered(g)),
        lower_bound: estimate(&|o, g| o.covered_lower_bound(g)),
    }
}

/// Coverage gain in percentage points.
pub fn coverage_gain(thinned: f64, lower_bound: f64) -> Result<f64> {
    check_probability("thinned", thinned)?;
    check_probability("lower_bound", lower_bound)?;
    Ok(100.0 * (thinned - lower_bound))
}

/// Relative coverage gain in percent; infinite when the bound is 0.
pub fn coverage_gain_ratio(thinned: f64, lower_bound: f64) -> Result<f64> {
    check_probability("thinned", thinned)?;
    check_probability("lower_bound", lower_bound)?;
    Ok(100.0 * (thinned / lower_bound - 1.0))
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in [0, 1], got {value}")))
    }
}

/// Fitted tuning factor together with the curve it was fitted to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub k: f64,
    pub residual_sum_squares: f64,
    pub curve: RetentionCurve,
}

pub const K_UPPER: f64 = 5.0;
const K_LOWER: f64 = 1e-9;

/// Least-squares fit of `k` in `1 - exp(-k pi lambda mu^2)` to empirical
/// retention values.
pub fn fit_k(lambda: f64, mu: &[f64], empirical: &[f64]) -> Result<(f64, f64)> {
    if mu.len() != empirical.len() {
        return Err(Error::invalid("empirical", "one value per mu is required"));
    }
    if lambda <= 0.0 || empirical.iter().all(|&e| e == 0.0) {
        return Err(Error::CalibrationFailed(
            "empirical retention is zero everywhere, k is unidentifiable".into(),
        ));
    }
    let residual = |k: f64| {
        mu.iter()
            .zip(empirical)
            .map(|(&m, &e)| (e - retention_probability(k, lambda, m).unwrap_or(f64::NAN)).powi(2))
            .sum::<f64>()
    };
    let best = minimize_bounded(residual, K_LOWER, K_UPPER, 1e-12, 500)?;
    Ok((best.x, best.value))
}

/// Calibrates `k` against simulated shortest-distance pairing.
pub fn calibrate_k(config: &SimConfig, mu_grid: &[f64], replications: usize) -> Result<Calibration> {
    if mu_grid.len() < 3 || mu_grid.iter().any(|&m| !(m > 0.0 && m <= 50.0)) {
        return Err(Error::invalid(
            "mu_grid",
            "calibration needs at least 3 target distances in (0, 50] m",
        ));
    }
    let curve = estimate_retention(config, mu_grid, replications)?;
    let (mu, empirical): (Vec<f64>, Vec<f64>) = curve
        .points
        .iter()
        .filter_map(|p| p.empirical_probability.map(|e| (p.mu, e)))
        .unzip();
    if mu.is_empty() {
        return Err(Error::CalibrationFailed("no replication produced a candidate node".into()));
    }
    let (k, residual_sum_squares) = fit_k(config.model.lambda, &mu, &empirical)?;
    Ok(Calibration {
        k,
        residual_sum_squares,
        curve,
    })
}
