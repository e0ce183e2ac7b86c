use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use d2d_coverage::analytic::{coverage_alpha4, coverage_general, coverage_lower_bound, sinc_constant, ModelParams};
use d2d_coverage::harness::config::ConfigFile;
use d2d_coverage::harness::experiment::{run, ExperimentKind, ExperimentSpec, Sweep};
use d2d_coverage::harness::figures::{gamma_grid_db, retention_mu_grid, run_figure, FigureOptions, CALIBRATION_MU};
use d2d_coverage::harness::{convert_units, replay};
use d2d_coverage::montecarlo::{coverage_gain, coverage_gain_ratio, EdgeMode, InterfererMode, SimConfig};
use d2d_coverage::Error;

/// Coverage of a cellular uplink user under D2D underlay interference.
#[derive(Debug, Parser)]
#[command(name = "d2dcov", version)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML parameter file with dotted keys (e.g. `model.lambda = 5e-5`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    replications: Option<usize>,

    /// Comma-separated SIR thresholds in dB.
    #[arg(long = "gamma-db", global = true, value_delimiter = ',', allow_hyphen_values = true)]
    gamma_db: Option<Vec<f64>>,

    /// Comma-separated D2D densities in points per m^2.
    #[arg(long, global = true, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,

    /// Comma-separated target pairing distances in meters.
    #[arg(long, global = true, value_delimiter = ',')]
    mu: Option<Vec<f64>>,

    #[arg(long = "edge-mode", global = true)]
    edge_mode: Option<EdgeMode>,

    /// Which pair members interfere: all_paired or one_per_pair.
    #[arg(long, global = true)]
    interferers: Option<InterfererMode>,

    /// Radius of the disk in which interferers are dropped, meters.
    #[arg(long = "sim-radius", global = true)]
    sim_radius: Option<f64>,

    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the closed forms at the given parameters.
    Analytic,
    /// Monte Carlo coverage versus SIR threshold.
    Simulate,
    /// Empirical retention probability versus target distance.
    Retention,
    /// Fit the tuning factor k to simulated retention.
    Calibrate,
    /// Reproduce a reference figure (2, 3, 4 or 5).
    Figure { number: u8 },
    /// Generic grid sweep.
    Sweep {
        #[arg(long)]
        kind: ExperimentKind,
    },
    /// Re-run the experiment recorded in a manifest.
    Replay { manifest: PathBuf },
}

/// Loads the config file, then applies scalar flags. List flags apply their
/// first element only where a single value is needed.
fn resolve(common: &Common) -> Result<(ConfigFile, SimConfig), Error> {
    let mut file = match &common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(seed) = common.seed {
        file.master_seed = Some(seed);
    }
    if let Some(n) = common.replications {
        file.replications = Some(n);
    }
    if let Some(mode) = common.edge_mode {
        file.edge_mode = Some(mode);
    }
    if let Some(mode) = common.interferers {
        file.interferers = Some(mode);
    }
    if let Some(r) = common.sim_radius {
        file.sim_radius = Some(r);
    }
    if let Some(&lambda) = common.lambda.as_ref().and_then(|l| l.first()) {
        file.model.lambda = Some(lambda);
    }
    if let Some(&mu) = common.mu.as_ref().and_then(|m| m.first()) {
        file.model.mu = Some(mu);
    }
    if let Some(&g) = common.gamma_db.as_ref().and_then(|g| g.first()) {
        file.model.gamma_db = Some(g);
    }
    let config = file.resolve()?;
    Ok((file, config))
}

fn sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

fn out_dir(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn analytic(common: &Common, config: &SimConfig) -> Result<Vec<PathBuf>, Error> {
    let lambdas = sorted(common.lambda.clone().unwrap_or_else(|| vec![config.model.lambda]));
    let gammas = sorted(
        common
            .gamma_db
            .clone()
            .unwrap_or_else(|| vec![10.0 * config.model.gamma.log10()]),
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "lambda_per_m2",
        "gamma_db",
        "retention",
        "sinc_constant",
        "coverage_general",
        "coverage_alpha4",
        "coverage_lower_bound",
        "gain_points",
        "gain_ratio_pct",
    ])?;
    for &lambda in &lambdas {
        for &gamma_db in &gammas {
            let p = ModelParams {
                lambda,
                gamma: convert_units(gamma_db, "dB", "linear")?,
                ..config.model
            };
            let general = coverage_general(&p)?;
            let (alpha4, lb) = match (coverage_alpha4(&p), coverage_lower_bound(&p)) {
                (Ok(a), Ok(l)) => (Some(a), Some(l)),
                _ => (None, None),
            };
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let gains = alpha4.zip(lb).map(|(a, l)| (coverage_gain(a, l), coverage_gain_ratio(a, l)));
            let (gp, gr) = match gains {
                Some((gp, gr)) => (Some(gp?), Some(gr?)),
                None => (None, None),
            };
            w.write_record([
                lambda.to_string(),
                gamma_db.to_string(),
                p.retention().to_string(),
                sinc_constant(p.alpha)?.to_string(),
                general.to_string(),
                opt(alpha4),
                opt(lb),
                opt(gp),
                opt(gr),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<csv>".into(),
        source: e.into_error(),
    })?;
    std::io::stdout()
        .write_all(&bytes)
        .map_err(|e| Error::Io { path: "<stdout>".into(), source: e })?;
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
            let path = dir.join("analytic.csv");
            std::fs::write(&path, &bytes).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            Ok(vec![path])
        }
        None => Ok(vec![]),
    }
}

fn sweep_for(kind: ExperimentKind, common: &Common) -> Sweep {
    match kind {
        ExperimentKind::CoverageVsGamma => Sweep::GammaDb(sorted(common.gamma_db.clone().unwrap_or_else(gamma_grid_db))),
        ExperimentKind::CoverageVsLambda => Sweep::Lambda(sorted(
            common
                .lambda
                .clone()
                .unwrap_or_else(|| d2d_coverage::harness::figures::FIGURE5_LAMBDAS.to_vec()),
        )),
        ExperimentKind::RetentionCurve => Sweep::Mu(sorted(common.mu.clone().unwrap_or_else(retention_mu_grid))),
        ExperimentKind::Calibration => Sweep::Mu(sorted(common.mu.clone().unwrap_or_else(|| CALIBRATION_MU.to_vec()))),
    }
}

fn experiment(kind: ExperimentKind, common: &Common, config: SimConfig, default_out: &str) -> Result<Vec<PathBuf>, Error> {
    let mut config = config;
    // the swept variable takes its values from the grid, not the scalar override
    if kind == ExperimentKind::CoverageVsLambda {
        if let Some(&g) = common.gamma_db.as_ref().and_then(|g| g.first()) {
            config.model.gamma = convert_units(g, "dB", "linear")?;
        }
    }
    let spec = ExperimentSpec {
        kind,
        config,
        sweep: sweep_for(kind, common),
        output_dir: out_dir(common, default_out),
    };
    Ok(run(&spec)?.files)
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, Error> {
    let common = &cli.common;
    if let Command::Replay { manifest } = &cli.command {
        let out = common.out.clone().ok_or_else(|| Error::Config("replay needs --out".into()))?;
        return Ok(replay(manifest, &out)?.files);
    }
    let (file, config) = resolve(common)?;
    match &cli.command {
        Command::Analytic => analytic(common, &config),
        Command::Simulate => experiment(ExperimentKind::CoverageVsGamma, common, config, "out/simulate"),
        Command::Retention => experiment(ExperimentKind::RetentionCurve, common, config, "out/retention"),
        Command::Calibrate => experiment(ExperimentKind::Calibration, common, config, "out/calibrate"),
        Command::Sweep { kind } => experiment(*kind, common, config, "out/sweep"),
        Command::Figure { number } => {
            let options = FigureOptions {
                base: config,
                sim_radius: file.sim_radius,
            };
            run_figure(*number, &options, &out_dir(common, &format!("out/figure{number}")))
        }
        Command::Replay { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.workers.unwrap_or(0))
        .build();
    let pool = match pool {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::InvalidParameter { .. } | Error::UnknownUnit { .. } => 2,
                _ => 1,
            })
        }
    }
}
