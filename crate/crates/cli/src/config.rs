//! Strict TOML configuration with paper-scale defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use ghz_optics::experiments::GhzParams;
use ghz_optics::photon_sources::SourceParams;
use ghz_optics::rates::RateParams;

use crate::error::CliError;

/// Full experiment description. Unknown keys anywhere are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Evolve,
    Histogram,
    DelayScan,
    ControlScan,
    EntanglementCheck,
    Rates,
}

/// Source parameters in experiment-facing units: the phase between the pair
/// terms in radians, the filter coherence time (packet sigma = tau_c / 2) and
/// the pump pulse FWHM (emission-time sigma = FWHM / (2 sqrt(2 ln 2))).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default = "default_phase_rad")]
    pub phase_rad: f64,
    #[serde(default = "default_pair_mean")]
    pub pair_mean: f64,
    #[serde(default = "default_coherence_time_fs")]
    pub coherence_time_fs: f64,
    #[serde(default = "default_pump_fwhm_fs")]
    pub pump_fwhm_fs: f64,
}

fn default_phase_rad() -> f64 {
    std::f64::consts::PI
}
fn default_pair_mean() -> f64 {
    4e-4
}
fn default_coherence_time_fs() -> f64 {
    500.0
}
fn default_pump_fwhm_fs() -> f64 {
    200.0
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            phase_rad: default_phase_rad(),
            pair_mean: default_pair_mean(),
            coherence_time_fs: default_coherence_time_fs(),
            pump_fwhm_fs: default_pump_fwhm_fs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub noise_w: f64,
    #[serde(default)]
    pub delay_fs: f64,
    #[serde(default = "default_theta1")]
    pub theta1_deg: f64,
    #[serde(default = "default_theta2")]
    pub theta2_deg: f64,
    #[serde(default)]
    pub physical_convention: bool,
}

fn default_seed() -> u64 {
    1
}
fn default_mc_samples() -> usize {
    200
}
fn default_theta1() -> f64 {
    45.0
}
fn default_theta2() -> f64 {
    -45.0
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: default_seed(),
            mc_samples: default_mc_samples(),
            noise_w: 0.0,
            delay_fs: 0.0,
            theta1_deg: default_theta1(),
            theta2_deg: default_theta2(),
            physical_convention: false,
        }
    }
}

/// Delay grid: either an explicit `delays` list or an inclusive
/// (start, stop, points) range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_scan_start")]
    pub start_fs: f64,
    #[serde(default = "default_scan_stop")]
    pub stop_fs: f64,
    #[serde(default = "default_scan_points")]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays_fs: Option<Vec<f64>>,
}

fn default_scan_start() -> f64 {
    -1000.0
}
fn default_scan_stop() -> f64 {
    1000.0
}
fn default_scan_points() -> usize {
    41
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            start_fs: default_scan_start(),
            stop_fs: default_scan_stop(),
            points: default_scan_points(),
            delays_fs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    #[serde(default = "default_pulse_rate")]
    pub pulse_rate: f64,
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
    #[serde(default = "default_duration_s")]
    pub duration_s: f64,
    /// When set, replaces `source.pair_mean` with the value for which the
    /// double-pair term alone reaches this fourfold probability per pulse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate_target_per_pulse: Option<f64>,
}

fn default_pulse_rate() -> f64 {
    7.6e7
}
fn default_efficiency() -> f64 {
    0.1
}
fn default_duration_s() -> f64 {
    1.0
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig {
            pulse_rate: default_pulse_rate(),
            efficiency: default_efficiency(),
            duration_s: default_duration_s(),
            calibrate_target_per_pulse: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    StructuredText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output file; the table is written to standard output when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::MissingFile {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(classify_toml_error)?;
        config.validate()?;
        Ok(config)
    }

    #[allow(dead_code)]
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))
    }

    fn validate(&self) -> Result<(), CliError> {
        let range = |ok: bool, key: &str, reason: &str| -> Result<(), CliError> {
            if ok {
                Ok(())
            } else {
                Err(CliError::OutOfRange {
                    key: key.to_string(),
                    reason: reason.to_string(),
                })
            }
        };
        let s = &self.source;
        range(
            s.pair_mean.is_finite() && s.pair_mean >= 0.0,
            "source.pair_mean",
            "must be finite and >= 0",
        )?;
        range(
            s.coherence_time_fs.is_finite() && s.coherence_time_fs > 0.0,
            "source.coherence_time_fs",
            "must be finite and > 0",
        )?;
        range(
            s.pump_fwhm_fs.is_finite() && s.pump_fwhm_fs >= 0.0,
            "source.pump_fwhm_fs",
            "must be finite and >= 0",
        )?;
        range(s.phase_rad.is_finite(), "source.phase_rad", "must be finite")?;
        let r = &self.run;
        range(
            (0.0..=1.0).contains(&r.noise_w),
            "run.noise_w",
            "must be in [0, 1]",
        )?;
        range(r.mc_samples >= 1, "run.mc_samples", "must be >= 1")?;
        range(r.delay_fs.is_finite(), "run.delay_fs", "must be finite")?;
        range(
            r.theta1_deg.is_finite() && r.theta2_deg.is_finite(),
            "run.theta1_deg / run.theta2_deg",
            "must be finite",
        )?;
        let sc = &self.scan;
        range(sc.points >= 1, "scan.points", "must be >= 1")?;
        range(
            sc.start_fs.is_finite() && sc.stop_fs.is_finite(),
            "scan.start_fs / scan.stop_fs",
            "must be finite",
        )?;
        if let Some(delays) = &sc.delays_fs {
            range(!delays.is_empty(), "scan.delays_fs", "must not be empty")?;
            range(
                delays.iter().all(|d| d.is_finite()),
                "scan.delays_fs",
                "entries must be finite",
            )?;
        }
        let rt = &self.rates;
        range(
            rt.pulse_rate.is_finite() && rt.pulse_rate >= 0.0,
            "rates.pulse_rate",
            "must be finite and >= 0",
        )?;
        range(
            (0.0..=1.0).contains(&rt.efficiency),
            "rates.efficiency",
            "must be in [0, 1]",
        )?;
        range(
            rt.duration_s.is_finite() && rt.duration_s > 0.0,
            "rates.duration_s",
            "must be finite and > 0",
        )?;
        if let Some(target) = rt.calibrate_target_per_pulse {
            range(
                target.is_finite() && target > 0.0,
                "rates.calibrate_target_per_pulse",
                "must be finite and > 0",
            )?;
        }
        Ok(())
    }

    /// Simulation parameters assembled from the config (units converted).
    pub fn ghz_params(&self) -> Result<GhzParams, CliError> {
        let packet_sigma = self.source.coherence_time_fs / 2.0;
        let pump_sigma = self.source.pump_fwhm_fs / (2.0 * (2.0 * 2f64.ln()).sqrt());
        let source = SourceParams::new(
            self.source.phase_rad,
            self.source.pair_mean,
            packet_sigma,
            pump_sigma,
        )?;
        Ok(GhzParams::new(
            source,
            self.run.delay_fs,
            self.run.noise_w,
            self.run.mc_samples,
            self.run.seed,
            self.run.physical_convention,
        )?)
    }

    pub fn rate_params(&self) -> Result<RateParams, CliError> {
        Ok(RateParams::new(
            self.rates.pulse_rate,
            self.source.pair_mean,
            self.rates.efficiency,
        )?)
    }

    /// Resolved delay grid (explicit list wins over the range).
    pub fn delays(&self) -> Vec<f64> {
        match &self.scan.delays_fs {
            Some(delays) => delays.clone(),
            None => ghz_optics::experiments::delay_grid(
                self.scan.start_fs,
                self.scan.stop_fs,
                self.scan.points,
            ),
        }
    }
}

fn classify_toml_error(e: toml::de::Error) -> CliError {
    let msg = e.to_string();
    if msg.contains("unknown field") || msg.contains("unknown variant") {
        CliError::UnknownKey(msg)
    } else {
        CliError::Malformed(msg)
    }
}
