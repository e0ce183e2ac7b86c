//! Experiment definitions and the runner that turns them into
//! `results.csv`, `manifest.json` and `plot.svg`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{coverage_pair, retention_probability, ModelParams};
use crate::error::{Error, Result};
use crate::harness::plot::{Chart, Series};
use crate::montecarlo::{
    calibrate_k, coverage_gain, coverage_gain_ratio, db_to_linear, simulate_coverage_modes, Calibration, SimConfig,
};
use crate::pairing::{estimate_retention, RetentionCurve};

pub const TOOL_NAME: &str = "d2dcov";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PLOT_FILE: &str = "plot.svg";

pub const COVERAGE_COLUMNS: [&str; 9] = [
    "gamma_db",
    "coverage_mc",
    "coverage_analytic",
    "coverage_lb_mc",
    "coverage_lb_analytic",
    "gain_points",
    "gain_ratio_pct",
    "ci95",
    "replications",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RetentionCurve,
    CoverageVsGamma,
    CoverageVsLambda,
    Calibration,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "retention_curve" => Ok(Self::RetentionCurve),
            "coverage_vs_gamma" => Ok(Self::CoverageVsGamma),
            "coverage_vs_lambda" => Ok(Self::CoverageVsLambda),
            "calibration" => Ok(Self::Calibration),
            other => Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        }
    }
}

/// The swept variable and its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    GammaDb(Vec<f64>),
    Lambda(Vec<f64>),
    Mu(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> &[f64] {
        match self {
            Sweep::GammaDb(v) | Sweep::Lambda(v) | Sweep::Mu(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub config: SimConfig,
    pub sweep: Sweep,
    /// Where outputs go; not part of the manifest.
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let compatible = matches!(
            (self.kind, &self.sweep),
            (ExperimentKind::CoverageVsGamma, Sweep::GammaDb(_))
                | (ExperimentKind::CoverageVsLambda, Sweep::Lambda(_))
                | (ExperimentKind::RetentionCurve, Sweep::Mu(_))
                | (ExperimentKind::Calibration, Sweep::Mu(_))
        );
        if !compatible {
            return Err(Error::Config(format!("{:?} cannot sweep {:?}", self.kind, self.sweep)));
        }
        let grid = self.sweep.values();
        if grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!("sweep grid must be finite and strictly increasing: {grid:?}")));
        }
        Ok(())
    }
}

/// Run manifest: everything needed to regenerate `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: ExperimentSpec,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        if manifest.tool != TOOL_NAME {
            return Err(Error::Config(format!("{} is not a {TOOL_NAME} manifest", path.display())));
        }
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub lambda: f64,
    pub gamma_db: f64,
    pub coverage_mc: f64,
    pub coverage_analytic: f64,
    pub coverage_lb_mc: f64,
    pub coverage_lb_analytic: f64,
    pub gain_points: f64,
    pub gain_ratio_pct: f64,
    pub ci95: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResultTable {
    Coverage { by_lambda: bool, rows: Vec<CoverageRow> },
    Retention(RetentionCurve),
    Calibration(Calibration),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: ResultTable,
    pub files: Vec<PathBuf>,
}

fn coverage_rows(config: &SimConfig, lambda: f64, gamma_grid_db: &[f64]) -> Result<Vec<CoverageRow>> {
    let config = SimConfig {
        model: ModelParams { lambda, ..config.model },
        ..*config
    };
    let mc = simulate_coverage_modes(&config, gamma_grid_db)?;
    mc.thinned
        .iter()
        .zip(&mc.lower_bound)
        .map(|(t, l)| {
            let model = ModelParams {
                gamma: db_to_linear(t.gamma_db),
                ..config.model
            };
            let (analytic, lb_analytic) = coverage_pair(&model)?;
            Ok(CoverageRow {
                lambda,
                gamma_db: t.gamma_db,
                coverage_mc: t.mean,
                coverage_analytic: analytic,
                coverage_lb_mc: l.mean,
                coverage_lb_analytic: lb_analytic,
                gain_points: coverage_gain(analytic, lb_analytic)?,
                gain_ratio_pct: coverage_gain_ratio(analytic, lb_analytic)?,
                ci95: t.half_width_95,
                replications: t.replications,
            })
        })
        .collect()
}

/// Computes the experiment without touching the filesystem.
pub fn evaluate(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let config = &spec.config;
    Ok(match (&spec.kind, &spec.sweep) {
        (ExperimentKind::CoverageVsGamma, Sweep::GammaDb(grid)) => ResultTable::Coverage {
            by_lambda: false,
            rows: coverage_rows(config, config.model.lambda, grid)?,
        },
        (ExperimentKind::CoverageVsLambda, Sweep::Lambda(grid)) => {
            let gamma_db = 10.0 * config.model.gamma.log10();
            let mut rows = Vec::with_capacity(grid.len());
            for &lambda in grid {
                rows.extend(coverage_rows(config, lambda, &[gamma_db])?);
            }
            ResultTable::Coverage { by_lambda: true, rows }
        }
        (ExperimentKind::RetentionCurve, Sweep::Mu(grid)) => {
            ResultTable::Retention(estimate_retention(config, grid, config.replications)?)
        }
        (ExperimentKind::Calibration, Sweep::Mu(grid)) => {
            let mut calibration = calibrate_k(config, grid, config.replications)?;
            // report the closed form at the fitted k
            for p in &mut calibration.curve.points {
                p.analytic_probability = retention_probability(calibration.k, config.model.lambda, p.mu)?;
            }
            calibration.curve.k = calibration.k;
            ResultTable::Calibration(calibration)
        }
        _ => unreachable!("validate() rejects incompatible sweeps"),
    })
}

impl ResultTable {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        match self {
            ResultTable::Coverage { by_lambda, rows } => {
                let mut w = csv::Writer::from_writer(&mut out);
                let mut header: Vec<&str> = Vec::new();
                if *by_lambda {
                    header.push("lambda_per_m2");
                }
                header.extend(COVERAGE_COLUMNS);
                w.write_record(&header)?;
                for r in rows {
                    let mut record = Vec::with_capacity(header.len());
                    if *by_lambda {
                        record.push(r.lambda.to_string());
                    }
                    record.extend([
                        r.gamma_db.to_string(),
                        r.coverage_mc.to_string(),
                        r.coverage_analytic.to_string(),
                        r.coverage_lb_mc.to_string(),
                        r.coverage_lb_analytic.to_string(),
                        r.gain_points.to_string(),
                        r.gain_ratio_pct.to_string(),
                        r.ci95.to_string(),
                        r.replications.to_string(),
                    ]);
                    w.write_record(&record)?;
                }
                w.flush().map_err(|e| Error::io("<csv>", e))?;
            }
            ResultTable::Retention(curve) => curve.write_csv(&mut out)?,
            ResultTable::Calibration(cal) => cal.curve.write_csv(&mut out)?,
        }
        Ok(out)
    }

    pub fn chart(&self, title: &str) -> Chart {
        match self {
            ResultTable::Coverage { by_lambda, rows } => {
                let x = |r: &CoverageRow| if *by_lambda { r.lambda } else { r.gamma_db };
                let series = |f: fn(&CoverageRow) -> f64| rows.iter().map(|r| (x(r), f(r))).collect();
                Chart {
                    title: title.into(),
                    x_label: if *by_lambda { "D2D density (1/m^2)" } else { "SIR threshold (dB)" }.into(),
                    y_label: "average coverage probability".into(),
                    series: vec![
                        Series::solid("thinned, analytic", series(|r| r.coverage_analytic)),
                        Series::dashed("thinned, simulation", series(|r| r.coverage_mc)),
                        Series::solid("lower bound, analytic", series(|r| r.coverage_lb_analytic)),
                        Series::dashed("lower bound, simulation", series(|r| r.coverage_lb_mc)),
                    ],
                }
            }
            ResultTable::Retention(curve) | ResultTable::Calibration(Calibration { curve, .. }) => {
                retention_chart(title, std::slice::from_ref(curve))
            }
        }
    }
}

pub fn retention_chart(title: &str, curves: &[RetentionCurve]) -> Chart {
    let mut series = Vec::new();
    for c in curves {
        series.push(Series::solid(
            format!("analytic, k={}, lambda={:e}", c.k, c.lambda),
            c.points.iter().map(|p| (p.mu, p.analytic_probability)).collect(),
        ));
        series.push(Series::dashed(
            format!("simulation, lambda={:e}", c.lambda),
            c.points
                .iter()
                .map(|p| (p.mu, p.empirical_probability.unwrap_or(f64::NAN)))
                .collect(),
        ));
    }
    Chart {
        title: title.into(),
        x_label: "target distance mu (m)".into(),
        y_label: "retention probability".into(),
        series,
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs `spec` and writes its outputs into `spec.output_dir`.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    spec.validate()?;
    ensure_dir(&spec.output_dir)?;
    let table = evaluate(spec)?;
    let dir = &spec.output_dir;
    let mut files = Vec::new();

    let results = dir.join(RESULTS_FILE);
    write_file(&results, &table.to_csv()?)?;
    files.push(results);

    let manifest = Manifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        experiment: spec.clone(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_file(&manifest_path, &json)?;
    files.push(manifest_path);

    if let ResultTable::Calibration(cal) = &table {
        let path = dir.join("calibration.json");
        let summary = serde_json::json!({
            "lambda": cal.curve.lambda,
            "k": cal.k,
            "residual_sum_squares": cal.residual_sum_squares,
            "mu_grid": spec.sweep.values(),
            "replications": spec.config.replications,
        });
        let mut json = serde_json::to_vec_pretty(&summary)?;
        json.push(b'\n');
        write_file(&path, &json)?;
        files.push(path);
    }

    let title = match spec.kind {
        ExperimentKind::RetentionCurve => "Retention probability",
        ExperimentKind::CoverageVsGamma => "Coverage vs SIR threshold",
        ExperimentKind::CoverageVsLambda => "Coverage vs D2D density",
        ExperimentKind::Calibration => "Tuning-factor calibration",
    };
    let plot = dir.join(PLOT_FILE);
    write_file(&plot, table.chart(title).to_svg().as_bytes())?;
    files.push(plot);

    Ok(RunOutput { table, files })
}

/// Re-runs the experiment recorded in `manifest_path` into `output_dir`.
pub fn replay(manifest_path: &Path, output_dir: &Path) -> Result<RunOutput> {
    let manifest = Manifest::load(manifest_path)?;
    let spec = ExperimentSpec {
        output_dir: output_dir.to_path_buf(),
        ..manifest.experiment
    };
    run(&spec)
}
