//! Monte Carlo simulation of the coincidence-detection protocol.
//!
//! Rounds are simulated in fixed batches of [`BATCH_ROUNDS`]. Batch `b` draws
//! from a ChaCha8 generator seeded with `seed` (via `seed_from_u64`) on
//! stream `b`, so results depend only on the seed and configuration, not on
//! the number of worker threads.

use crate::channel::{ChannelParams, IntensityStatistics};
use crate::error::{Error, Result};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const BATCH_ROUNDS: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySpec {
    pub label: String,
    pub mean_photon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Index 0 is the signal, the rest are decoys.
    pub intensities: Vec<IntensitySpec>,
    pub decoy_probabilities: Vec<f64>,
    pub rounds: u64,
    pub channel: ChannelParams,
    pub seed: u64,
    /// Probability that a sifted round joins the estimation subset.
    #[serde(default = "full_fraction")]
    pub estimation_fraction: f64,
}

fn full_fraction() -> f64 {
    1.0
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.intensities.is_empty() {
            return Err(Error::config("at least one intensity is required"));
        }
        if self.decoy_probabilities.len() != self.intensities.len() {
            return Err(Error::config(format!(
                "{} probabilities for {} intensities",
                self.decoy_probabilities.len(),
                self.intensities.len()
            )));
        }
        if self.decoy_probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("intensity probabilities must lie in [0, 1]"));
        }
        let total: f64 = self.decoy_probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!("intensity probabilities sum to {total}, not 1")));
        }
        for s in &self.intensities {
            if !(s.mean_photon.is_finite() && s.mean_photon >= 0.0) {
                return Err(Error::config(format!("{}: mean photon number must be >= 0", s.label)));
            }
        }
        if self.rounds == 0 {
            return Err(Error::config("rounds must be at least 1"));
        }
        if !(self.estimation_fraction > 0.0 && self.estimation_fraction <= 1.0) {
            return Err(Error::config("estimation_fraction must lie in (0, 1]"));
        }
        self.channel.validate()
    }
}

/// One protocol round. Bit values are `Some(0|1)`, `None` for no click (`⊥`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    pub decoy_index: usize,
    pub alice_basis: u8,
    pub alice_bit: u8,
    pub bob_port0: Option<u8>,
    pub bob_port1: Option<u8>,
    pub bob_basis: u8,
    pub bob_bit: Option<u8>,
}

impl RoundRecord {
    pub fn sifted(&self) -> bool {
        self.alice_basis == self.bob_basis
    }

    pub fn double_click(&self) -> bool {
        self.bob_port0.is_some() && self.bob_port1.is_some()
    }
}

/// Samplers prepared once per run.
pub struct RoundSampler {
    choice: WeightedIndex<f64>,
    photons: Vec<Option<Poisson<f64>>>,
    channel: ChannelParams,
}

impl RoundSampler {
    pub fn new(config: &ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let choice = WeightedIndex::new(&config.decoy_probabilities)
            .map_err(|e| Error::config(format!("intensity probabilities: {e}")))?;
        let photons = config
            .intensities
            .iter()
            .map(|s| {
                if s.mean_photon == 0.0 {
                    Ok(None)
                } else {
                    Poisson::new(s.mean_photon)
                        .map(Some)
                        .map_err(|e| Error::config(format!("{}: {e}", s.label)))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { choice, photons, channel: config.channel })
    }

    /// Preparation, transmission and Bob's click resolution for one round.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> RoundRecord {
        let decoy_index = self.choice.sample(rng);
        let alice_basis = rng.random_range(0..2u8);
        let alice_bit = rng.random_range(0..2u8);
        let photons = self.photons[decoy_index].as_ref().map_or(0, |p| p.sample(rng) as u64);

        let mut arrived = [0u32; 2];
        for _ in 0..photons {
            if rng.random_bool(self.channel.eta) {
                arrived[rng.random_range(0..2usize)] += 1;
            }
        }
        let dark_p = self.channel.y0 / 2.0;
        let mut ports = [None, None];
        for (port, out) in ports.iter_mut().enumerate() {
            let dark = rng.random_bool(dark_p);
            *out = if arrived[port] > 0 {
                Some(if port as u8 == alice_basis {
                    alice_bit ^ rng.random_bool(self.channel.e_detector) as u8
                } else {
                    rng.random_range(0..2u8)
                })
            } else if dark {
                Some(rng.random_range(0..2u8))
            } else {
                None
            };
        }

        let (bob_basis, bob_bit) = match ports {
            [Some(_), Some(_)] => (alice_basis, ports[alice_basis as usize]),
            [Some(b), None] => (0, Some(b)),
            [None, Some(b)] => (1, Some(b)),
            [None, None] => (rng.random_range(0..2u8), None),
        };
        RoundRecord {
            decoy_index,
            alice_basis,
            alice_bit,
            bob_port0: ports[0],
            bob_port1: ports[1],
            bob_basis,
            bob_bit,
        }
    }
}

pub fn simulate_round<R: Rng>(config: &ProtocolConfig, rng: &mut R) -> Result<RoundRecord> {
    Ok(RoundSampler::new(config)?.sample(rng))
}

/// Per-intensity counts over the estimation subset of the sifted rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntensityCounts {
    pub sent: u64,
    pub sifted: u64,
    pub detected: u64,
    pub errors: u64,
    pub coincidences: u64,
}

impl IntensityCounts {
    fn add(&mut self, other: &IntensityCounts) {
        self.sent += other.sent;
        self.sifted += other.sifted;
        self.detected += other.detected;
        self.errors += other.errors;
        self.coincidences += other.coincidences;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityObservation {
    /// `rounds` is the number of sifted rounds `N_ν`, `gain` the detected
    /// fraction of them, `qber` the error fraction among detected rounds.
    pub stats: IntensityStatistics,
    /// Erroneous detections per sifted round, the quantity whose mean is `E·Q`.
    pub error_fraction: f64,
    /// Sifted rounds in which both ports clicked, per sifted round.
    pub coincidence_rate: f64,
    pub counts: IntensityCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedStatistics {
    /// Intensities that received at least one sifted round, in configuration order.
    pub per_intensity: Vec<IntensityObservation>,
    /// Labels of configured intensities without any sifted round.
    pub absent: Vec<String>,
    pub sifted_length: u64,
    pub rounds: u64,
}

impl ObservedStatistics {
    pub fn get(&self, label: &str) -> Result<&IntensityObservation> {
        self.per_intensity.iter().find(|o| o.stats.label == label).ok_or_else(|| {
            Error::DegenerateStatistics(format!("intensity '{label}' received no sifted rounds"))
        })
    }

    /// Statistics for every configured intensity; fails if any is absent.
    pub fn intensity_statistics(&self) -> Result<Vec<IntensityStatistics>> {
        if let Some(label) = self.absent.first() {
            return Err(Error::DegenerateStatistics(format!("intensity '{label}' received no sifted rounds")));
        }
        Ok(self.per_intensity.iter().map(|o| o.stats.clone()).collect())
    }
}

pub fn run_protocol(config: &ProtocolConfig) -> Result<ObservedStatistics> {
    let sampler = RoundSampler::new(config)?;
    let k = config.intensities.len();
    let batches = config.rounds.div_ceil(BATCH_ROUNDS);
    let fraction = config.estimation_fraction;

    let counts = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(b);
            let len = BATCH_ROUNDS.min(config.rounds - b * BATCH_ROUNDS);
            let mut counts = vec![IntensityCounts::default(); k];
            for _ in 0..len {
                let r = sampler.sample(&mut rng);
                let c = &mut counts[r.decoy_index];
                c.sent += 1;
                if !r.sifted() || (fraction < 1.0 && !rng.random_bool(fraction)) {
                    continue;
                }
                c.sifted += 1;
                if let Some(bit) = r.bob_bit {
                    c.detected += 1;
                    c.errors += (bit != r.alice_bit) as u64;
                }
                c.coincidences += r.double_click() as u64;
            }
            counts
        })
        .reduce(
            || vec![IntensityCounts::default(); k],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| x.add(y));
                a
            },
        );

    let mut per_intensity = Vec::new();
    let mut absent = Vec::new();
    for (spec, c) in config.intensities.iter().zip(&counts) {
        if c.sifted == 0 {
            absent.push(spec.label.clone());
            continue;
        }
        let n = c.sifted as f64;
        per_intensity.push(IntensityObservation {
            stats: IntensityStatistics {
                label: spec.label.clone(),
                mean_photon: spec.mean_photon,
                gain: c.detected as f64 / n,
                qber: if c.detected == 0 { 0.0 } else { c.errors as f64 / c.detected as f64 },
                rounds: c.sifted,
            },
            error_fraction: c.errors as f64 / n,
            coincidence_rate: c.coincidences as f64 / n,
            counts: *c,
        });
    }
    Ok(ObservedStatistics {
        sifted_length: counts.iter().map(|c| c.sifted).sum(),
        per_intensity,
        absent,
        rounds: config.rounds,
    })
}

/// Exact expectations of the simulator's per-intensity outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiftedExpectation {
    /// Probability that a round survives sifting.
    pub sifted_probability: f64,
    pub gain: f64,
    pub qber: f64,
    pub error_fraction: f64,
    pub coincidence_rate: f64,
}

/// Expected sifted statistics of [`run_protocol`] at mean photon number `mu`.
///
/// Each port independently receives Poisson(ημ/2) photons and fires a dark
/// count with probability `Y₀/2`. Double clicks are always kept by sifting
/// while single clicks survive half the time, so the sifted gain differs
/// from the channel-model gain by a term of order `(ημ)²`.
pub fn sifted_expectation(channel: &ChannelParams, mu: f64) -> Result<SiftedExpectation> {
    channel.validate()?;
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::domain(format!("mean photon number {mu} must be >= 0")));
    }
    let photon = 1.0 - (-channel.eta * mu / 2.0).exp();
    let dark = channel.y0 / 2.0;
    let click = photon + (1.0 - photon) * dark;
    let single = click * (1.0 - click);
    let double = click * click;
    let silent = (1.0 - click) * (1.0 - click);
    let sifted = single + double + silent / 2.0;
    let gain = (single + double) / sifted;
    let qber = if click > 0.0 {
        (photon * channel.e_detector + (1.0 - photon) * dark / 2.0) / click
    } else {
        0.0
    };
    Ok(SiftedExpectation {
        sifted_probability: sifted,
        gain,
        qber,
        error_fraction: qber * gain,
        coincidence_rate: double / sifted,
    })
}
