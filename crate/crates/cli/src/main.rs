//! Config-driven front end for the three-photon interference simulator.
//!
//! Reads a strict TOML config, dispatches to one experiment, writes a CSV or
//! structured-text table (atomically when a path is configured) and prints a
//! one-line summary to standard output.

mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ghz_optics::detection::{fidelity, remove_single_photon};
use ghz_optics::experiments::{
    delay_scan, entangled_entanglement_check, golden_ghz_state, postselected_ghz, term_histogram,
    visibility,
};
use ghz_optics::mode_algebra::StateVector;
use ghz_optics::rates::{RateModel, RateParams};

use config::{Experiment, ExperimentConfig, OutputFormat};
use error::CliError;
use output::{num, write_atomic, Table};

#[derive(Debug, Parser)]
#[command(name = "ghz-sim", about = "Pulsed three-photon interference simulator")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output format.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Override the number of scan points.
    #[arg(long)]
    points: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut config = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if let Some(points) = cli.points {
        if points == 0 {
            return Err(CliError::OutOfRange {
                key: "--points".into(),
                reason: "must be >= 1".into(),
            });
        }
        config.scan.points = points;
    }
    if let Some(format) = cli.format {
        config.output.format = format;
    }
    if let Some(path) = &cli.output {
        config.output.path = Some(path.display().to_string());
    }

    let (table, summary) = dispatch(&config)?;
    println!("{summary}");
    let rendered = table.render(config.output.format);
    match &config.output.path {
        Some(path) => write_atomic(std::path::Path::new(path), &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn dispatch(config: &ExperimentConfig) -> Result<(Table, String), CliError> {
    match config.experiment {
        Experiment::Evolve => run_evolve(config),
        Experiment::Histogram => run_histogram(config),
        Experiment::DelayScan => run_scan(config, config.run.theta1_deg),
        Experiment::ControlScan => run_scan(config, 0.0),
        Experiment::EntanglementCheck => run_entanglement_check(config),
        Experiment::Rates => run_rates(config),
    }
}

/// One row per term of a state: space-separated mode list plus the real and
/// imaginary amplitude parts.
fn state_table(state: &StateVector) -> Table {
    let mut table = Table::new(vec!["modes", "re", "im"]);
    for term in state.terms() {
        let modes: Vec<String> = term.photons().iter().map(|p| p.mode.to_string()).collect();
        table.push(vec![
            modes.join(" "),
            num(term.amplitude.re),
            num(term.amplitude.im),
        ]);
    }
    table
}

fn run_evolve(config: &ExperimentConfig) -> Result<(Table, String), CliError> {
    let params = config.ghz_params()?;
    let (p, conditional) = postselected_ghz(&params, 0.0, 0.0)?;
    let conditional = conditional.without_origin_tags();
    let golden = golden_ghz_state(params.source.packet_sigma)?;
    let f = fidelity(&conditional, &golden)?;
    let summary = format!(
        "evolve: postselect probability {:.6e}, {} terms, fidelity {:.12} with the target state",
        p,
        conditional.terms().len(),
        f
    );
    Ok((state_table(&conditional), summary))
}

fn run_histogram(config: &ExperimentConfig) -> Result<(Table, String), CliError> {
    let params = config.ghz_params()?;
    let histogram = term_histogram(&params)?;
    let mut table = Table::new(vec!["combination", "probability"]);
    for (label, p) in &histogram.entries {
        table.push(vec![label.clone(), num(*p)]);
    }
    let summary = format!(
        "histogram: desired:undesired sum ratio {:.4} (noise w = {})",
        histogram.desired_undesired_ratio(),
        config.run.noise_w
    );
    Ok((table, summary))
}

fn run_scan(config: &ExperimentConfig, theta1_deg: f64) -> Result<(Table, String), CliError> {
    let params = config.ghz_params()?;
    let delays = config.delays();
    let records = delay_scan(&params, &delays, theta1_deg, config.run.theta2_deg)?;
    let mut table = Table::new(vec!["delay_fs", "p_plus45", "p_minus45"]);
    for r in &records {
        table.push(vec![num(r.delay_fs), num(r.p_plus45), num(r.p_minus45)]);
    }
    let v = visibility(&records)?;
    let name = if theta1_deg == config.run.theta1_deg {
        "delay-scan"
    } else {
        "control-scan"
    };
    let summary = format!(
        "{name}: {} points, D1 = {theta1_deg} deg, zero-delay visibility {v:.6}",
        records.len()
    );
    Ok((table, summary))
}

fn run_entanglement_check(config: &ExperimentConfig) -> Result<(Table, String), CliError> {
    let params = config.ghz_params()?;
    let (_, conditional) = postselected_ghz(&params, 0.0, 0.0)?;
    let three = remove_single_photon(&conditional, "T")?.without_origin_tags();
    let (reduced, f) = entangled_entanglement_check(&three, config.run.theta1_deg)?;
    let summary = format!(
        "entanglement-check: D1 = {} deg, fidelity {:.12} with the two-photon Bell state",
        config.run.theta1_deg, f
    );
    Ok((state_table(&reduced), summary))
}

fn run_rates(config: &ExperimentConfig) -> Result<(Table, String), CliError> {
    let mut params = config.rate_params()?;
    if let Some(target) = config.rates.calibrate_target_per_pulse {
        let probe = RateModel::new(params)?;
        let mu = RateModel::pair_mean_for_fourfold_prob(
            target,
            params.efficiency,
            probe.postselect_prob_double(),
        )?;
        params = RateParams::new(params.pulse_rate, mu, params.efficiency)?;
    }
    let model = RateModel::new(params)?;
    let report = model.simulate_counts(config.rates.duration_s, config.run.seed)?;

    let mut table = Table::new(vec!["quantity", "value", "unit"]);
    let mut row = |q: &str, v: f64, u: &str| {
        table.push(vec![q.to_string(), num(v), u.to_string()]);
    };
    row("pulse_rate", params.pulse_rate, "1/s");
    row("pair_mean", params.pair_mean, "pairs/pulse");
    row("efficiency", params.efficiency, "probability");
    row("postselect_prob_double", model.postselect_prob_double(), "probability");
    row("double_term", model.double_term(), "1/pulse");
    row("triple_term", model.triple_term(), "1/pulse");
    row("fourfold_prob_per_pulse", model.fourfold_prob_per_pulse(), "1/pulse");
    let rate = model.expected_fourfold_rate();
    row("expected_fourfold_rate", rate, "1/s");
    row("expected_fourfold_interval", 1.0 / rate, "s");
    row("sim_duration", report.duration_s(), "s");
    row("sim_fourfold_double", report.fourfold_double as f64, "count");
    row("sim_fourfold_triple", report.fourfold_triple as f64, "count");
    row("sim_singles", report.singles as f64, "count");
    row("sim_twofolds", report.twofolds as f64, "count");

    let summary = format!(
        "rates: expected {rate:.4e} fourfolds/s (one per {:.1} s); simulated {} double- and {} triple-pair fourfolds in {} s",
        1.0 / rate,
        report.fourfold_double,
        report.fourfold_triple,
        report.duration_s()
    );
    Ok((table, summary))
}
