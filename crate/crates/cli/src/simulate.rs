//! `simulate`: run the protocol simulator and save its statistics.

use anyhow::{Context, Result};
use qkdrate_core::channel::ChannelParams;
use qkdrate_core::sim::{run_protocol, sifted_expectation, IntensitySpec, ProtocolConfig};
use qkdrate_core::stats_file::{CoincidenceBlock, Metadata, Role, SecurityBlock, StatsEntry, StatsFile, SCHEMA_VERSION};
use serde::Deserialize;
use std::path::Path;

/// Binomial standard errors allowed between observed and expected coincidences.
const COINCIDENCE_SIGMAS: f64 = 5.0;

/// Protocol configuration as read from disk. Without a seed here or on the
/// command line a random one is drawn and reported.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationFile {
    intensities: Vec<IntensitySpec>,
    decoy_probabilities: Vec<f64>,
    rounds: u64,
    channel: ChannelParams,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    estimation_fraction: Option<f64>,
    /// Copied into the statistics file for finite-size computations.
    #[serde(default)]
    security: Option<SecurityBlock>,
}

/// Runs the simulation described by `file` and assembles the statistics document.
pub fn simulate(text: &str, seed_override: Option<u64>) -> Result<StatsFile> {
    let file: SimulationFile = serde_json::from_str(text).context("invalid protocol configuration")?;
    let seed = match seed_override.or(file.seed) {
        Some(s) => s,
        None => {
            let s = rand::random();
            eprintln!("note: no seed given; using generated seed {s}");
            s
        }
    };
    let config = ProtocolConfig {
        intensities: file.intensities,
        decoy_probabilities: file.decoy_probabilities,
        rounds: file.rounds,
        channel: file.channel,
        seed,
        estimation_fraction: file.estimation_fraction.unwrap_or(1.0),
    };
    config.validate()?;
    let observed = run_protocol(&config)?;
    observed.intensity_statistics()?;

    let intensities = observed
        .per_intensity
        .iter()
        .enumerate()
        .map(|(i, o)| StatsEntry {
            label: o.stats.label.clone(),
            mean_photon: o.stats.mean_photon,
            gain: o.stats.gain,
            qber: o.stats.qber,
            rounds: o.stats.rounds,
            role: (i == 0).then_some(Role::Signal),
        })
        .collect();

    let signal = &observed.per_intensity[0];
    let expected = sifted_expectation(&config.channel, signal.stats.mean_photon)?.coincidence_rate;
    let sigma = (expected * (1.0 - expected) / signal.counts.sifted as f64).sqrt();
    let stats = StatsFile {
        schema_version: SCHEMA_VERSION,
        intensities,
        security: file.security,
        coincidences: Some(CoincidenceBlock {
            observed_rate: signal.coincidence_rate,
            expected_rate: expected,
            half_width: COINCIDENCE_SIGMAS * sigma,
        }),
        metadata: Some(Metadata {
            seed: Some(seed),
            rounds: Some(config.rounds),
            source: Some("qkdrate simulate".into()),
        }),
    };
    stats.validate()?;
    Ok(stats)
}

pub fn run(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let text = std::fs::read_to_string(config_path).with_context(|| format!("cannot read {}", config_path.display()))?;
    let stats = simulate(&text, seed).with_context(|| format!("in {}", config_path.display()))?;
    std::fs::write(out, stats.to_json()).with_context(|| format!("cannot write {}", out.display()))?;
    Ok(())
}
