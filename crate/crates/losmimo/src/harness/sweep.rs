//! Sweep drivers: offset, spacing and distance sweeps run the full
//! simulate -> estimate pipeline per realization and aggregate metrics.
//!
//! Determinism: realization r of sweep point p draws from RNG stream
//! (p << 32) | r of the master seed, and aggregation is an ordered pairwise
//! reduction, so results are byte-identical for any worker-thread count.

use std::path::Path;

use rayon::prelude::*;

use crate::estimation::{run_pipeline, PipelineConfig};
use crate::geometry::{
    offset_antenna, solve_spacing, synthesize_los_channel, GainProfile, LinkGeometry, SpacingKind,
};
use crate::linksim::simulate_capture;
use crate::metrics::{
    aggregate, capacity, condition_number, max_capacity, AggregateMetrics, MetricSample,
};
use crate::training::TrainingSet;
use crate::{Error, Result};

use super::config::ScenarioConfig;

/// One aggregated sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub sweep_value: f64,
    /// Condition number of the unit-gain geometric channel.
    pub theory_kappa: f64,
    pub theory_cmax: f64,
    pub aggregates: AggregateMetrics,
}

/// Result of one sweep run, one entry per sweep point.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: &'static str,
    pub points: Vec<SweepPoint>,
    /// Full configuration echo (TOML) for provenance.
    pub config_echo: String,
}

fn theory_kappa(geometry: &LinkGeometry<f64>) -> Result<f64> {
    let gains = GainProfile::unit(geometry.rx_count(), geometry.tx_count());
    condition_number(&synthesize_los_channel(geometry, &gains)?)
}

/// Monte Carlo over `realizations` captures of one geometry; deterministic
/// per (seed, point index) regardless of thread count.
fn monte_carlo_point(
    cfg: &ScenarioConfig,
    geometry: &LinkGeometry<f64>,
    training: &TrainingSet,
    snr_db: f64,
    point_idx: usize,
) -> Result<AggregateMetrics> {
    let pipeline = PipelineConfig::default();
    let samples: Vec<MetricSample> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| -> Result<MetricSample> {
            let imp = cfg.impairments(snr_db, ((point_idx as u64) << 32) | r as u64);
            let capture = simulate_capture(geometry, training, &imp, cfg.blocks)?;
            let report = run_pipeline(&capture, training, &pipeline)?;
            let kappa_raw = condition_number(&report.los_matrix)?;
            let kappa_norm = condition_number(&report.los_matrix_norm)?;
            let rho = report.snr_estimate;
            let capacity_bits = if rho.is_finite() {
                capacity(&report.los_matrix, rho)?
            } else {
                f64::INFINITY
            };
            Ok(MetricSample {
                kappa_raw,
                kappa_norm,
                capacity_bits,
                snr_linear: rho,
            })
        })
        .collect::<Result<_>>()?;
    aggregate(&samples)
}

fn cmax_at(m: usize, n: usize, mean_rho: f64) -> f64 {
    if m == n && mean_rho.is_finite() {
        max_capacity(m, n, mean_rho).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    }
}

fn point_snrs(cfg: &ScenarioConfig, axis_len: usize) -> Vec<f64> {
    match &cfg.snr_db_per_point {
        Some(v) => v.clone(),
        None => vec![cfg.snr_db.unwrap_or(f64::INFINITY); axis_len],
    }
}

/// Sweeps the position offset of one antenna.
pub fn run_offset_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let offsets = cfg
        .sweep_offsets_m
        .as_ref()
        .ok_or_else(|| Error::Config("offset sweep needs sweep_offsets_m".into()))?
        .clone();
    let (d_tx, d_rx) = cfg.spacings()?;
    let base = cfg.geometry_at(cfg.range_m, d_tx, d_rx)?;
    let training = cfg.training_set()?;
    let snrs = point_snrs(cfg, offsets.len());
    let mut points = Vec::with_capacity(offsets.len());
    for (p, (&delta, &snr)) in offsets.iter().zip(snrs.iter()).enumerate() {
        let geometry = offset_antenna(&base, cfg.offset_side(), cfg.offset_index, delta)?;
        let agg = monte_carlo_point(cfg, &geometry, &training, snr, p)?;
        points.push(SweepPoint {
            sweep_value: delta,
            theory_kappa: theory_kappa(&geometry)?,
            theory_cmax: cmax_at(cfg.rx_count, cfg.tx_count, agg.mean_snr_linear),
            aggregates: agg,
        });
    }
    Ok(SweepResult {
        axis: "offset_m",
        points,
        config_echo: cfg.echo(),
    })
}

/// Sweeps equal Tx/Rx module spacing at fixed range.
pub fn run_spacing_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let spacings = cfg
        .sweep_spacings_m
        .as_ref()
        .ok_or_else(|| Error::Config("spacing sweep needs sweep_spacings_m".into()))?
        .clone();
    let training = cfg.training_set()?;
    let snrs = point_snrs(cfg, spacings.len());
    let mut points = Vec::with_capacity(spacings.len());
    for (p, (&d, &snr)) in spacings.iter().zip(snrs.iter()).enumerate() {
        let geometry = cfg.geometry_at(cfg.range_m, d, d)?;
        let agg = monte_carlo_point(cfg, &geometry, &training, snr, p)?;
        points.push(SweepPoint {
            sweep_value: d,
            theory_kappa: theory_kappa(&geometry)?,
            theory_cmax: cmax_at(cfg.rx_count, cfg.tx_count, agg.mean_snr_linear),
            aggregates: agg,
        });
    }
    Ok(SweepResult {
        axis: "spacing_m",
        points,
        config_echo: cfg.echo(),
    })
}

/// Sweeps link range, resolving the spacing per distance by rule
/// ("optimal" | "ill" | "fixed").
pub fn run_distance_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let distances = cfg
        .sweep_distances_m
        .as_ref()
        .ok_or_else(|| Error::Config("distance sweep needs sweep_distances_m".into()))?
        .clone();
    let training = cfg.training_set()?;
    let snrs = point_snrs(cfg, distances.len());
    let lambda = cfg.wavelength();
    let mut points = Vec::with_capacity(distances.len());
    for (p, (&r, &snr)) in distances.iter().zip(snrs.iter()).enumerate() {
        let d = match cfg.spacing_rule.as_str() {
            "optimal" => solve_spacing(
                r,
                lambda,
                cfg.tx_count,
                SpacingKind::Optimal,
                cfg.spacing_order,
            )?,
            "ill" => solve_spacing(
                r,
                lambda,
                cfg.tx_count,
                SpacingKind::Ill,
                cfg.spacing_order.max(1),
            )?,
            _ => cfg
                .fixed_spacing_m
                .ok_or_else(|| Error::Config("fixed rule needs fixed_spacing_m".into()))?,
        };
        let geometry = cfg.geometry_at(r, d, d)?;
        let agg = monte_carlo_point(cfg, &geometry, &training, snr, p)?;
        points.push(SweepPoint {
            sweep_value: r,
            theory_kappa: theory_kappa(&geometry)?,
            theory_cmax: cmax_at(cfg.rx_count, cfg.tx_count, agg.mean_snr_linear),
            aggregates: agg,
        });
    }
    Ok(SweepResult {
        axis: "distance_m",
        points,
        config_echo: cfg.echo(),
    })
}

/// Calibrates the link range against a reference theory trace of
/// (offset, kappa) pairs: least squares on log kappa over a +-5 mm window
/// around the configured range_m.
pub fn calibrate_range(cfg: &ScenarioConfig, trace: &[(f64, f64)]) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::InvalidInput("empty calibration trace".into()));
    }
    let (d_tx, d_rx) = cfg.spacings()?;
    let mut best = (f64::INFINITY, cfg.range_m);
    let steps = 200;
    for i in 0..=steps {
        let r = cfg.range_m - 0.005 + 0.010 * i as f64 / steps as f64;
        let base = match cfg.geometry_at(r, d_tx, d_rx) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let mut sse = 0.0;
        for &(delta, kappa_ref) in trace {
            let g = offset_antenna(&base, cfg.offset_side(), cfg.offset_index, delta)?;
            let k = theory_kappa(&g)?.min(crate::metrics::INFINITY_CAP);
            let diff = k.ln() - kappa_ref.ln();
            sse += diff * diff;
        }
        if sse < best.0 {
            best = (sse, r);
        }
    }
    Ok(best.1)
}

fn fmt(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.8e}")
    }
}

/// Writes the sweep as CSV: deterministic bytes for a fixed result, 9
/// significant digits, infinities as `inf`.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let text = render_csv(result)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// CSV text for [`emit_csv`]; exposed so tests can compare bytes in memory.
pub fn render_csv(result: &SweepResult) -> Result<String> {
    if result.points.is_empty() {
        return Err(Error::InvalidInput("empty sweep result".into()));
    }
    let mut out = String::from(
        "sweep_value,theory_kappa,mean_kappa_raw,mean_kappa_norm,mean_capacity,theory_cmax,mean_snr_db,realizations\n",
    );
    for p in &result.points {
        let a = &p.aggregates;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt(p.sweep_value),
            fmt(p.theory_kappa),
            fmt(a.mean_kappa_raw),
            fmt(a.mean_kappa_norm),
            fmt(a.mean_capacity),
            fmt(p.theory_cmax),
            fmt(a.mean_snr_db),
            a.count
        ));
    }
    Ok(out)
}
