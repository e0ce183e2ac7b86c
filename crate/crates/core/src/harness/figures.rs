//! Reference experiments: retention calibration, retention versus density,
//! coverage versus SIR threshold and coverage versus density.

use std::path::{Path, PathBuf};

use crate::analytic::ModelParams;
use crate::error::{Error, Result};
use crate::harness::experiment::{
    ensure_dir, retention_chart, run, write_file, ExperimentKind, ExperimentSpec, ResultTable, Sweep,
};
use crate::harness::plot::{Chart, Series};
use crate::montecarlo::{coverage_gain, coverage_gain_ratio, SimConfig};
use crate::pairing::RetentionCurve;

/// Coverage figures drop interferers on a disk this many cell radii wide, so
/// that the simulated field approximates the unbounded plane of the closed form.
pub const PLANE_RADIUS_FACTOR: f64 = 10.0;

pub const FIGURE2_LAMBDA: f64 = 2.5e-5;
pub const CALIBRATION_MU: [f64; 5] = [10.0, 20.0, 30.0, 40.0, 50.0];
pub const FIGURE3_LAMBDAS: [f64; 5] = [1.2e-5, 2.5e-5, 5e-5, 7.5e-5, 1e-4];
pub const FIGURE4_LAMBDAS: [f64; 3] = [2.5e-5, 5e-5, 7.5e-5];
pub const FIGURE5_LAMBDAS: [f64; 8] = [1.2e-5, 2.5e-5, 3.75e-5, 5e-5, 6.25e-5, 7.5e-5, 8.75e-5, 1e-4];
/// (lambda, gamma in dB) points at which coverage gains are tabulated.
pub const GAIN_POINTS: [(f64, f64); 3] = [(5e-5, -5.0), (5e-5, 20.0), (7.5e-5, 20.0)];

/// `mu` = 5, 10, ..., 100 m.
pub fn retention_mu_grid() -> Vec<f64> {
    (1..=20).map(|i| 5.0 * i as f64).collect()
}

/// `gamma` = -10, -7.5, ..., 20 dB.
pub fn gamma_grid_db() -> Vec<f64> {
    (0..=12).map(|i| -10.0 + 2.5 * i as f64).collect()
}

#[derive(Debug, Clone)]
pub struct FigureOptions {
    pub base: SimConfig,
    /// Interferer disk radius for coverage figures; `None` means
    /// [`PLANE_RADIUS_FACTOR`] cell radii.
    pub sim_radius: Option<f64>,
}

impl FigureOptions {
    fn with_lambda(&self, lambda: f64) -> SimConfig {
        SimConfig {
            model: ModelParams { lambda, ..self.base.model },
            ..self.base
        }
    }

    fn coverage_config(&self, lambda: f64) -> SimConfig {
        let mut config = self.with_lambda(lambda);
        config.sim_radius = self
            .sim_radius
            .unwrap_or(PLANE_RADIUS_FACTOR * config.model.cell_radius);
        config
    }
}

fn lambda_dir(out: &Path, lambda: f64) -> PathBuf {
    out.join(format!("lambda_{lambda:e}"))
}

fn spec(kind: ExperimentKind, config: SimConfig, sweep: Sweep, output_dir: PathBuf) -> ExperimentSpec {
    ExperimentSpec {
        kind,
        config,
        sweep,
        output_dir,
    }
}

pub fn run_figure(number: u8, options: &FigureOptions, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    match number {
        2 => figure2(options, out),
        3 => figure3(options, out),
        4 => figure4(options, out),
        5 => figure5(options, out),
        n => Err(Error::Config(format!("no reference figure {n}; choose 2, 3, 4 or 5"))),
    }
}

fn figure2(options: &FigureOptions, out: &Path) -> Result<Vec<PathBuf>> {
    let config = options.with_lambda(FIGURE2_LAMBDA);
    let retention = run(&spec(
        ExperimentKind::RetentionCurve,
        config,
        Sweep::Mu(retention_mu_grid()),
        out.join("retention"),
    ))?;
    let calibration = run(&spec(
        ExperimentKind::Calibration,
        config,
        Sweep::Mu(CALIBRATION_MU.to_vec()),
        out.join("calibration"),
    ))?;
    let mut files = retention.files;
    files.extend(calibration.files);

    let ResultTable::Retention(curve) = retention.table else {
        unreachable!("retention run yields a retention table")
    };
    let ResultTable::Calibration(cal) = calibration.table else {
        unreachable!("calibration run yields a calibration table")
    };
    let mut series = vec![Series::dashed(
        "simulation",
        curve
            .points
            .iter()
            .map(|p| (p.mu, p.empirical_probability.unwrap_or(f64::NAN)))
            .collect(),
    )];
    for k in [0.6, 0.8, 1.0, cal.k] {
        let label = if k == cal.k { format!("fitted k={k:.3}") } else { format!("k={k}") };
        series.push(Series::solid(
            label,
            curve
                .points
                .iter()
                .map(|p| (p.mu, 1.0 - (-k * std::f64::consts::PI * FIGURE2_LAMBDA * p.mu * p.mu).exp()))
                .collect(),
        ));
    }
    let chart = Chart {
        title: format!("Retention and tuning factor, lambda = {FIGURE2_LAMBDA:e}"),
        x_label: "target distance mu (m)".into(),
        y_label: "retention probability".into(),
        series,
    };
    let path = out.join("figure2.svg");
    write_file(&path, chart.to_svg().as_bytes())?;
    files.push(path);
    Ok(files)
}

fn figure3(options: &FigureOptions, out: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut curves: Vec<RetentionCurve> = Vec::new();
    for lambda in FIGURE3_LAMBDAS {
        let result = run(&spec(
            ExperimentKind::RetentionCurve,
            options.with_lambda(lambda),
            Sweep::Mu(retention_mu_grid()),
            lambda_dir(out, lambda),
        ))?;
        files.extend(result.files);
        if let ResultTable::Retention(curve) = result.table {
            curves.push(curve);
        }
    }
    let path = out.join("figure3.svg");
    let chart = retention_chart(&format!("Retention probability, k = {}", options.base.model.k), &curves);
    write_file(&path, chart.to_svg().as_bytes())?;
    files.push(path);
    Ok(files)
}

fn figure4(options: &FigureOptions, out: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut series = Vec::new();
    let mut tables = Vec::new();
    for lambda in FIGURE4_LAMBDAS {
        let result = run(&spec(
            ExperimentKind::CoverageVsGamma,
            options.coverage_config(lambda),
            Sweep::GammaDb(gamma_grid_db()),
            lambda_dir(out, lambda),
        ))?;
        files.extend(result.files);
        if let ResultTable::Coverage { rows, .. } = &result.table {
            let pts = |f: fn(&crate::harness::experiment::CoverageRow) -> f64| {
                rows.iter().map(|r| (r.gamma_db, f(r))).collect::<Vec<_>>()
            };
            series.push(Series::solid(format!("analytic {lambda:e}"), pts(|r| r.coverage_analytic)));
            series.push(Series::dashed(format!("simulation {lambda:e}"), pts(|r| r.coverage_mc)));
            series.push(Series::solid(format!("lower bound {lambda:e}"), pts(|r| r.coverage_lb_analytic)));
        }
        tables.push((lambda, result.table));
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "lambda_per_m2",
        "gamma_db",
        "coverage_analytic",
        "coverage_lb_analytic",
        "gain_points",
        "gain_ratio_pct",
        "coverage_mc",
        "coverage_lb_mc",
        "gain_points_mc",
        "gain_ratio_pct_mc",
    ])?;
    for (lambda, gamma_db) in GAIN_POINTS {
        let row = tables
            .iter()
            .filter(|(l, _)| *l == lambda)
            .find_map(|(_, t)| match t {
                ResultTable::Coverage { rows, .. } => rows.iter().find(|r| r.gamma_db == gamma_db).cloned(),
                _ => None,
            })
            .ok_or_else(|| Error::Config(format!("gain point ({lambda:e}, {gamma_db} dB) is not on the grid")))?;
        w.write_record([
            lambda.to_string(),
            gamma_db.to_string(),
            row.coverage_analytic.to_string(),
            row.coverage_lb_analytic.to_string(),
            row.gain_points.to_string(),
            row.gain_ratio_pct.to_string(),
            row.coverage_mc.to_string(),
            row.coverage_lb_mc.to_string(),
            coverage_gain(row.coverage_mc, row.coverage_lb_mc)?.to_string(),
            coverage_gain_ratio(row.coverage_mc, row.coverage_lb_mc)?.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
    let path = out.join("gains.csv");
    write_file(&path, &bytes)?;
    files.push(path);

    let chart = Chart {
        title: format!(
            "Coverage, p_i = {} mW, p_c = {} mW, mu = {} m",
            options.base.model.p_i * 1e3,
            options.base.model.p_c * 1e3,
            options.base.model.mu
        ),
        x_label: "SIR threshold (dB)".into(),
        y_label: "average coverage probability".into(),
        series,
    };
    let path = out.join("figure4.svg");
    write_file(&path, chart.to_svg().as_bytes())?;
    files.push(path);
    Ok(files)
}

fn figure5(options: &FigureOptions, out: &Path) -> Result<Vec<PathBuf>> {
    let mut config = options.coverage_config(options.base.model.lambda);
    config.model.gamma = 1.0;
    let result = run(&spec(
        ExperimentKind::CoverageVsLambda,
        config,
        Sweep::Lambda(FIGURE5_LAMBDAS.to_vec()),
        out.to_path_buf(),
    ))?;
    Ok(result.files)
}
