use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use losmimo::estimation::{run_pipeline, PipelineConfig};
use losmimo::geometry::{solve_spacing, SpacingKind};
use losmimo::harness::{
    calibrate_range, emit_csv, load_capture, run_distance_sweep, run_offset_sweep,
    run_spacing_sweep, save_capture, ScenarioConfig,
};
use losmimo::linksim::Capture;
use losmimo::{Error, Result};

/// Waveform-level LOS MIMO link simulator and estimation toolkit.
#[derive(Parser)]
#[command(name = "losmimo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output path.
    #[arg(long)]
    out: PathBuf,
    /// Master RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo realization-count override.
    #[arg(long)]
    realizations: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the position offset of one antenna; write aggregated CSV.
    SweepOffset {
        #[command(flatten)]
        common: Common,
        /// Calibrate range_m (+-5 mm, least squares on log kappa) against a
        /// theory-trace CSV of offset_m,kappa rows before sweeping.
        #[arg(long, value_name = "TRACE_CSV")]
        calibrate_range: Option<PathBuf>,
    },
    /// Sweep equal Tx/Rx module spacing; write aggregated CSV.
    SweepSpacing {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep link distance with a per-distance spacing rule; write CSV.
    SweepDistance {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the optimal or ill-conditioned spacing for the configured range.
    SolveSpacing {
        #[command(flatten)]
        common: Common,
    },
    /// Run the estimation pipeline on a capture file; write a JSON report.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Capture payload path (sidecar header at <path>.hdr).
        #[arg(long)]
        capture: PathBuf,
    },
    /// Write the configured training waveforms as a capture file.
    GenTraining {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(realizations) = common.realizations {
        cfg.realizations = realizations;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn read_trace(path: &std::path::Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut trace = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let a = parts.next().map(str::trim).unwrap_or("");
        let b = parts.next().map(str::trim).unwrap_or("");
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => trace.push((x, y)),
            _ => continue, // header or comment line
        }
    }
    if trace.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no offset,kappa rows in {}",
            path.display()
        )));
    }
    Ok(trace)
}

fn complex_rows(m: &losmimo::numerics::ComplexMatrix<f64>) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    serde_json::json!(rows)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SweepOffset {
            common,
            calibrate_range: trace_path,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(trace_path) = &trace_path {
                let trace = read_trace(trace_path)?;
                let r = calibrate_range(&cfg, &trace)?;
                println!("calibrated_range_m: {r:.6}");
                cfg.range_m = r;
            }
            let result = run_offset_sweep(&cfg)?;
            emit_csv(&result, &common.out)?;
        }
        Command::SweepSpacing { common } => {
            let cfg = load_config(&common)?;
            emit_csv(&run_spacing_sweep(&cfg)?, &common.out)?;
        }
        Command::SweepDistance { common } => {
            let cfg = load_config(&common)?;
            emit_csv(&run_distance_sweep(&cfg)?, &common.out)?;
        }
        Command::SolveSpacing { common } => {
            let cfg = load_config(&common)?;
            let kind = match cfg.spacing_rule.as_str() {
                "ill" => SpacingKind::Ill,
                "fixed" => {
                    return Err(Error::Config(
                        "solve-spacing needs spacing_rule \"optimal\" or \"ill\"".into(),
                    ))
                }
                _ => SpacingKind::Optimal,
            };
            let order = if kind == SpacingKind::Ill {
                cfg.spacing_order.max(1)
            } else {
                cfg.spacing_order
            };
            let d = solve_spacing(cfg.range_m, cfg.wavelength(), cfg.tx_count, kind, order)?;
            let json = serde_json::json!({
                "range_m": cfg.range_m,
                "spacing_rule": cfg.spacing_rule,
                "spacing_order": order,
                "spacing_m": d,
            });
            std::fs::write(&common.out, format!("{json:#}\n"))?;
            println!("spacing_m: {d:.6}");
        }
        Command::Estimate { common, capture } => {
            let cfg = load_config(&common)?;
            let capture: Capture = load_capture(&capture)?;
            let training = cfg.training_set()?;
            let report = run_pipeline(&capture, &training, &PipelineConfig::default())?;
            let json = serde_json::json!({
                "cfo_estimate": report.cfo_estimate,
                "snr_estimate_linear": report.snr_estimate,
                "snr_estimate_db": 10.0 * report.snr_estimate.log10(),
                "significant_taps": report.significant_taps,
                "tap_lags": report.tap_lags,
                "alignment_shifts": report.alignment_shifts,
                "noise_estimates": report.noise_estimates,
                "los_matrix": complex_rows(&report.los_matrix),
                "los_matrix_norm": complex_rows(&report.los_matrix_norm),
            });
            std::fs::write(&common.out, format!("{json:#}\n"))?;
        }
        Command::GenTraining { common } => {
            let cfg = load_config(&common)?;
            let training = cfg.training_set()?;
            let channels: Vec<Vec<losmimo::Complex>> =
                (0..training.n()).map(|n| training.waveform(n).to_vec()).collect();
            let capture = Capture {
                channels,
                blocks: 1,
                samples_per_block: training.l_t(),
                oversampling: training.oversampling(),
                ground_truth: None,
            };
            save_capture(&capture, &common.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("LOSMIMO_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
