//! CSV records shared by `compute` and `sweep`.

use anyhow::Result;
use qkdrate_core::stats_file::StatsFile;
use qkdrate_core::{compute_rate, EngineConfig, ProtocolVariant, RateResult};
use std::io::Write;
use std::time::Instant;

pub const HEADER: [&str; 12] = [
    "axis_value",
    "variant",
    "rate_per_pulse",
    "r_lb",
    "analytic_rate",
    "e1_up",
    "e2_up",
    "n",
    "grid",
    "f_ec",
    "status",
    "wall_ms",
];

/// Status of a record whose two-photon variant was replaced because the
/// coincidence statistics failed their consistency check.
pub const STATUS_FALLBACK: &str = "coincidence-fallback";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axis_value: Option<f64>,
    pub variant: ProtocolVariant,
    pub result: Option<RateResult>,
    pub config: EngineConfig,
    pub status: String,
    pub wall_ms: u128,
}

impl Row {
    pub fn rate(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.rate_per_pulse)
    }

    fn fields(&self) -> [String; 12] {
        let num = |v: Option<f64>| v.map(|x| format!("{x:.11e}")).unwrap_or_default();
        let r = self.result.as_ref();
        [
            num(self.axis_value),
            self.variant.to_string(),
            num(r.map(|r| r.rate_per_pulse)),
            num(r.map(|r| r.r_lb)),
            num(r.and_then(|r| r.analytic).map(|a| a.rate_per_pulse)),
            num(r.map(|r| r.e1_up)),
            num(r.and_then(|r| r.e2_up)),
            self.config.truncation.get().to_string(),
            format!("{}x{}", self.config.grid.0, self.config.grid.1),
            num(Some(self.config.f_ec)),
            self.status.clone(),
            self.wall_ms.to_string(),
        ]
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Rate for one statistics file. A failed coincidence check drops the
/// two-photon contribution, since altered coincidences are the signature of
/// a photon-number-splitting attack.
pub fn compute(file: &StatsFile, variant: ProtocolVariant, config: &EngineConfig, asymptotic: bool) -> Result<Row> {
    let start = Instant::now();
    let mut stats = file.ordered_statistics();
    let mut tolerances = file.tolerances(asymptotic)?;
    if !variant.uses_decoys() {
        stats.truncate(1);
        tolerances.per_intensity.truncate(1);
    }
    let (effective, status) = if variant.uses_two_photon() && !file.coincidences_consistent()? {
        eprintln!("note: coincidence statistics inconsistent; computing {} instead of {variant}", variant.without_two_photon());
        (variant.without_two_photon(), STATUS_FALLBACK.to_string())
    } else {
        (variant, "ok".to_string())
    };
    let result = compute_rate(&stats, &tolerances, config, effective)?;
    Ok(Row {
        axis_value: None,
        variant: effective,
        result: Some(result),
        config: config.clone(),
        status,
        wall_ms: start.elapsed().as_millis(),
    })
}
