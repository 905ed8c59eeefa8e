//! Rate sweeps over the signal mean photon number or the fiber length.

use crate::plot;
use crate::report::{self, Row};
use anyhow::{bail, Context, Result};
use qkdrate_core::channel::{eta_from_distance, expected_statistics, ChannelParams, LinkModel};
use qkdrate_core::{compute_rate, EngineConfig, ProtocolVariant, ToleranceSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Mu,
    Distance,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Mu => "mean photon number",
            Axis::Distance => "distance (km)",
        }
    }
}

/// Sweep description. On the `mu` axis the channel is `channel` if given,
/// else the link at zero length; on the `distance` axis the channel's
/// transmittance is replaced by the link's at each distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    /// `[start, stop, step]`, stop included.
    pub range: [f64; 3],
    /// Signal mean photon number; required on the `distance` axis.
    #[serde(default)]
    pub signal: Option<f64>,
    #[serde(default)]
    pub decoys: Vec<f64>,
    #[serde(default)]
    pub channel: Option<ChannelParams>,
    #[serde(default)]
    pub link: LinkModel,
    pub variants: Vec<ProtocolVariant>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let [start, stop, step] = self.range;
        if !(step > 0.0 && step.is_finite()) {
            bail!("sweep step {step} must be > 0");
        }
        if !(start < stop && start.is_finite() && stop.is_finite()) {
            bail!("sweep start {start} must be below stop {stop}");
        }
        if self.axis == Axis::Distance && self.signal.is_none() {
            bail!("a distance sweep needs a signal mean photon number");
        }
        self.link.validate()?;
        if let Some(c) = &self.channel {
            c.validate()?;
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let [start, stop, step] = self.range;
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| start + i as f64 * step).collect()
    }

    fn point(&self, x: f64) -> Result<(ChannelParams, f64)> {
        let base = match self.channel {
            Some(c) => c,
            None => ChannelParams::honest(eta_from_distance(&self.link, 0.0)?)?,
        };
        Ok(match self.axis {
            Axis::Mu => (base, x),
            Axis::Distance => {
                let eta = eta_from_distance(&self.link, x)?;
                (ChannelParams { eta, ..base }, self.signal.expect("validated"))
            }
        })
    }

    fn row(&self, x: f64, variant: ProtocolVariant, config: &EngineConfig) -> Row {
        let start = Instant::now();
        let result = self.point(x).and_then(|(channel, mu)| {
            let mut intensities = vec![mu];
            if variant.uses_decoys() {
                intensities.extend(&self.decoys);
            }
            let stats = expected_statistics(&channel, &intensities)?;
            Ok(compute_rate(&stats, &ToleranceSet::zero(stats.len()), config, variant)?)
        });
        let (result, status) = match result {
            Ok(r) => (Some(r), "ok".to_string()),
            Err(e) => (None, format!("error: {e:#}")),
        };
        Row { axis_value: Some(x), variant, result, config: config.clone(), status, wall_ms: start.elapsed().as_millis() }
    }

    /// One row per (axis value, variant), in axis order then variant order.
    pub fn rows(&self, config: &EngineConfig) -> Vec<Row> {
        let jobs: Vec<(f64, ProtocolVariant)> =
            self.points().into_iter().flat_map(|x| self.variants.iter().map(move |&v| (x, v))).collect();
        jobs.par_iter().map(|&(x, v)| self.row(x, v, config)).collect()
    }
}

pub fn run(spec_path: &Path, out_dir: &Path, config: &EngineConfig) -> Result<()> {
    let text = std::fs::read_to_string(spec_path).with_context(|| format!("cannot read {}", spec_path.display()))?;
    let spec: SweepSpec =
        serde_json::from_str(&text).with_context(|| format!("invalid sweep spec {}", spec_path.display()))?;
    spec.validate().with_context(|| format!("in {}", spec_path.display()))?;
    let rows = spec.rows(config);
    for r in rows.iter().filter(|r| r.result.is_none()) {
        eprintln!("warning: {} at {}: {}", r.variant, r.axis_value.unwrap_or(f64::NAN), r.status);
    }

    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let stem = spec_path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let file = std::fs::File::create(&csv_path).with_context(|| format!("cannot write {}", csv_path.display()))?;
    report::write_rows(file, &rows)?;

    let svg_path = out_dir.join(format!("{stem}.svg"));
    let svg = plot::render(&spec, &rows);
    std::fs::write(&svg_path, svg).with_context(|| format!("cannot write {}", svg_path.display()))?;
    eprintln!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}
