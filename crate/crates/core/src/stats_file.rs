//! JSON statistics document shared by the simulator output and the CLI input.

use crate::channel::IntensityStatistics;
use crate::error::{Error, Result};
use crate::finite::{SecurityParams, ToleranceSet};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Signal,
    Decoy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsEntry {
    pub label: String,
    pub mean_photon: f64,
    pub gain: f64,
    pub qber: f64,
    #[serde(default)]
    pub rounds: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityBlock {
    pub epsilon_completeness: f64,
    pub epsilon_stat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoincidenceBlock {
    pub observed_rate: f64,
    pub expected_rate: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsFile {
    pub schema_version: u32,
    pub intensities: Vec<StatsEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub security: Option<SecurityBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coincidences: Option<CoincidenceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl StatsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: StatsFile =
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid stats file: {e}")))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats file serialises") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.intensities.is_empty() {
            return Err(Error::config("stats file lists no intensities"));
        }
        let mut labels = HashSet::new();
        for e in &self.intensities {
            if !labels.insert(e.label.as_str()) {
                return Err(Error::config(format!("duplicate intensity label '{}'", e.label)));
            }
            e.to_statistics().validate()?;
        }
        let signals = self.intensities.iter().filter(|e| e.role == Some(Role::Signal)).count();
        if signals > 1 {
            return Err(Error::config("more than one intensity has role \"signal\""));
        }
        if let Some(c) = &self.coincidences {
            crate::finite::check_coincidence_consistency(c.observed_rate, c.expected_rate, c.half_width)?;
        }
        if let Some(s) = &self.security {
            SecurityParams::new(s.epsilon_completeness, s.epsilon_stat, self.intensities.len() - 1)?;
        }
        Ok(())
    }

    /// Index of the signal: the entry tagged `"role": "signal"`, else the
    /// largest mean photon number (first one on ties).
    pub fn signal_index(&self) -> usize {
        if let Some(i) = self.intensities.iter().position(|e| e.role == Some(Role::Signal)) {
            return i;
        }
        let mut best = 0;
        for (i, e) in self.intensities.iter().enumerate() {
            if e.mean_photon > self.intensities[best].mean_photon {
                best = i;
            }
        }
        best
    }

    /// Statistics with the signal first and the decoys in file order.
    pub fn ordered_statistics(&self) -> Vec<IntensityStatistics> {
        let s = self.signal_index();
        let mut out = vec![self.intensities[s].to_statistics()];
        out.extend(self.intensities.iter().enumerate().filter(|&(i, _)| i != s).map(|(_, e)| e.to_statistics()));
        out
    }

    pub fn security_params(&self) -> Option<SecurityParams> {
        self.security.map(|s| SecurityParams {
            epsilon_completeness: s.epsilon_completeness,
            epsilon_stat: s.epsilon_stat,
            num_decoys: self.intensities.len() - 1,
        })
    }

    /// Hoeffding tolerances in [`StatsFile::ordered_statistics`] order, or zero
    /// tolerances when `asymptotic` is set or no security block is present.
    pub fn tolerances(&self, asymptotic: bool) -> Result<ToleranceSet> {
        let stats = self.ordered_statistics();
        match self.security_params() {
            Some(params) if !asymptotic => {
                let rounds: Vec<u64> = stats.iter().map(|s| s.rounds).collect();
                ToleranceSet::from_rounds(&rounds, &params)
            }
            _ => Ok(ToleranceSet::zero(stats.len())),
        }
    }

    /// Whether the coincidence block (if any) matches its expectation.
    pub fn coincidences_consistent(&self) -> Result<bool> {
        match &self.coincidences {
            None => Ok(true),
            Some(c) => crate::finite::check_coincidence_consistency(c.observed_rate, c.expected_rate, c.half_width),
        }
    }
}

impl StatsEntry {
    pub fn to_statistics(&self) -> IntensityStatistics {
        IntensityStatistics {
            label: self.label.clone(),
            mean_photon: self.mean_photon,
            gain: self.gain,
            qber: self.qber,
            rounds: self.rounds,
        }
    }
}
