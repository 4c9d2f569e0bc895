//! Scenario configuration: a flat TOML document with the exact field names
//! below. Unknown keys are rejected (fail-fast against typos).

use serde::{Deserialize, Serialize};

use crate::geometry::{uniform_broadside_link, LinkGeometry, Side};
use crate::linksim::ImpairmentConfig;
use crate::training::TrainingSet;
use crate::{Error, Result, SPEED_OF_LIGHT};

fn default_carrier() -> f64 {
    60.48e9
}
fn default_offset_side() -> String {
    "tx".into()
}
fn default_degree() -> usize {
    10
}
fn default_oversampling() -> usize {
    8
}
fn default_mode() -> String {
    "msequence".into()
}
fn default_blocks() -> usize {
    4
}
fn default_realizations() -> usize {
    400
}
fn default_rule() -> String {
    "optimal".into()
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    /// Link range R in meters (for distance sweeps: the default/echo value).
    pub range_m: f64,
    /// Equal Tx/Rx spacing; alternatively set tx_spacing_m and rx_spacing_m.
    #[serde(default)]
    pub spacing_m: Option<f64>,
    #[serde(default)]
    pub tx_spacing_m: Option<f64>,
    #[serde(default)]
    pub rx_spacing_m: Option<f64>,
    pub tx_count: usize,
    pub rx_count: usize,
    /// Side receiving the sweep offset: "tx" or "rx".
    #[serde(default = "default_offset_side")]
    pub offset_side: String,
    /// Antenna index the sweep offset translates (+x, toward the rest of the
    /// array when index 0).
    #[serde(default)]
    pub offset_index: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_oversampling")]
    pub oversampling: usize,
    /// "msequence" or "ideal".
    #[serde(default = "default_mode")]
    pub training_mode: String,
    /// Training blocks L per capture.
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    /// Per-entry average SNR in dB; omit for a noiseless simulation.
    #[serde(default)]
    pub snr_db: Option<f64>,
    /// Normalized frequency offset, radians per sample.
    #[serde(default)]
    pub cfo: f64,
    #[serde(default)]
    pub gain_spread: f64,
    #[serde(default)]
    pub phase_noise_linewidth: f64,
    #[serde(default)]
    pub recorder_skew: i64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    /// Sweep axes; exactly one is read by the matching sweep command.
    #[serde(default)]
    pub sweep_offsets_m: Option<Vec<f64>>,
    #[serde(default)]
    pub sweep_spacings_m: Option<Vec<f64>>,
    #[serde(default)]
    pub sweep_distances_m: Option<Vec<f64>>,
    /// Spacing rule for distance sweeps: "optimal", "ill" or "fixed".
    #[serde(default = "default_rule")]
    pub spacing_rule: String,
    /// Spacing-criterion order k.
    #[serde(default)]
    pub spacing_order: usize,
    #[serde(default)]
    pub fixed_spacing_m: Option<f64>,
    /// Optional per-sweep-point SNR override (length must match the axis).
    #[serde(default)]
    pub snr_db_per_point: Option<Vec<f64>>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// All validation failures at once, joined into one message.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.carrier_hz > 0.0) {
            errs.push("carrier_hz must be positive".to_string());
        }
        if !(self.range_m > 0.0) {
            errs.push("range_m must be positive".to_string());
        }
        if self.tx_count == 0 || self.rx_count == 0 {
            errs.push("tx_count and rx_count must be >= 1".to_string());
        }
        if self.spacing_m.is_some() && (self.tx_spacing_m.is_some() || self.rx_spacing_m.is_some())
        {
            errs.push("set either spacing_m or tx_spacing_m/rx_spacing_m, not both".to_string());
        }
        if self.tx_spacing_m.is_some() != self.rx_spacing_m.is_some() {
            errs.push("tx_spacing_m and rx_spacing_m must be set together".to_string());
        }
        if !matches!(self.offset_side.as_str(), "tx" | "rx") {
            errs.push(format!("offset_side must be \"tx\" or \"rx\", got {:?}", self.offset_side));
        }
        if !(3..=12).contains(&self.degree) {
            errs.push(format!("degree must be in 3..=12, got {}", self.degree));
        }
        if self.oversampling == 0 {
            errs.push("oversampling must be >= 1".to_string());
        }
        if !matches!(self.training_mode.as_str(), "msequence" | "ideal") {
            errs.push(format!(
                "training_mode must be \"msequence\" or \"ideal\", got {:?}",
                self.training_mode
            ));
        }
        if self.blocks < 2 {
            errs.push("blocks must be >= 2".to_string());
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                errs.push("snr_db must not be NaN".to_string());
            }
        }
        if !(0.0..1.0).contains(&self.gain_spread) {
            errs.push("gain_spread must lie in [0, 1)".to_string());
        }
        if self.phase_noise_linewidth < 0.0 {
            errs.push("phase_noise_linewidth must be >= 0".to_string());
        }
        if self.realizations == 0 {
            errs.push("realizations must be >= 1".to_string());
        }
        if !matches!(self.spacing_rule.as_str(), "optimal" | "ill" | "fixed") {
            errs.push(format!(
                "spacing_rule must be \"optimal\", \"ill\" or \"fixed\", got {:?}",
                self.spacing_rule
            ));
        }
        if self.spacing_rule == "fixed"
            && self.sweep_distances_m.is_some()
            && self.fixed_spacing_m.is_none()
        {
            errs.push("spacing_rule = \"fixed\" requires fixed_spacing_m".to_string());
        }
        for (name, axis) in [
            ("sweep_offsets_m", &self.sweep_offsets_m),
            ("sweep_spacings_m", &self.sweep_spacings_m),
            ("sweep_distances_m", &self.sweep_distances_m),
        ] {
            if let Some(v) = axis {
                if v.is_empty() {
                    errs.push(format!("{name} must be non-empty"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    errs.push(format!("{name} contains a non-finite value"));
                }
            }
        }
        if let Some(per_point) = &self.snr_db_per_point {
            let axis_len = self
                .sweep_offsets_m
                .as_ref()
                .map(|v| v.len())
                .or_else(|| self.sweep_spacings_m.as_ref().map(|v| v.len()))
                .or_else(|| self.sweep_distances_m.as_ref().map(|v| v.len()));
            if let Some(len) = axis_len {
                if per_point.len() != len {
                    errs.push(format!(
                        "snr_db_per_point has {} entries, sweep axis has {}",
                        per_point.len(),
                        len
                    ));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn offset_side(&self) -> Side {
        if self.offset_side == "rx" {
            Side::Rx
        } else {
            Side::Tx
        }
    }

    /// Tx and Rx spacings, requiring that the config sets them.
    pub fn spacings(&self) -> Result<(f64, f64)> {
        match (self.spacing_m, self.tx_spacing_m, self.rx_spacing_m) {
            (Some(d), None, None) => Ok((d, d)),
            (None, Some(dt), Some(dr)) => Ok((dt, dr)),
            _ => Err(Error::Config(
                "set spacing_m or tx_spacing_m + rx_spacing_m".into(),
            )),
        }
    }

    /// Broadside geometry at range `r` with spacings `(d_tx, d_rx)`.
    pub fn geometry_at(&self, r: f64, d_tx: f64, d_rx: f64) -> Result<LinkGeometry<f64>> {
        uniform_broadside_link(
            r,
            d_tx,
            d_rx,
            self.tx_count,
            self.rx_count,
            self.wavelength(),
        )
    }

    pub fn training_set(&self) -> Result<TrainingSet> {
        match self.training_mode.as_str() {
            "ideal" => TrainingSet::ideal(self.tx_count, self.degree, self.oversampling),
            _ => TrainingSet::msequence(self.tx_count, self.degree, self.oversampling),
        }
    }

    /// Impairments for one realization; `stream` must be unique per
    /// (sweep point, realization).
    pub fn impairments(&self, snr_db: f64, stream: u64) -> ImpairmentConfig {
        ImpairmentConfig {
            snr_db,
            cfo: self.cfo,
            gain_spread: self.gain_spread,
            phase_noise_linewidth: self.phase_noise_linewidth,
            extra_taps: Vec::new(),
            recorder_skew: self.recorder_skew,
            rng_seed: self.seed,
            rng_stream: stream,
        }
    }

    /// Serialized echo of every parameter, embedded in sweep results.
    pub fn echo(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}
