//! Cross-layer KPI domain types and 3GPP link-adaptation mappings.
//!
//! A [`KpiSample`] holds the per-cell indicators exported by the radio stack
//! for one reporting interval. [`MappingTables`] carries the standard
//! CQI/MCS-to-spectral-efficiency tables used both for interpreting real
//! indicators and for synthesizing coherent ones.

mod convert;
mod tables;

pub use convert::{db_to_linear, linear_to_db, snr_to_spectral_efficiency};
pub use tables::{
    load_table_csv, save_table_csv, CqiLookup, LookupRule, MappingTables, McsLookup, TableEntry,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of KPI fields carried per sample (timestamp and cell excluded).
pub const KPI_FEATURE_COUNT: usize = 16;

/// KPI field names in canonical order; also the dataset CSV column order.
pub const KPI_FEATURE_NAMES: [&str; KPI_FEATURE_COUNT] = [
    "dl_bitrate",
    "ul_bitrate",
    "dl_packet_rate",
    "ul_packet_rate",
    "dl_retx_rate",
    "ul_retx_rate",
    "pusch_snr_db",
    "cqi",
    "power_headroom_db",
    "epre_dbm",
    "ul_path_loss_db",
    "dl_mcs",
    "ul_mcs",
    "turbo_rate_min",
    "turbo_rate_avg",
    "turbo_rate_max",
];

/// Which co-located cell a sample was collected from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Nr,
    Lte,
}

impl CellKind {
    /// Short identifier used in CSV rows and file names.
    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Nr => "nr",
            CellKind::Lte => "lte",
        }
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One reporting interval of cross-layer indicators for a single cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiSample {
    /// Collection time in milliseconds from the start of the run.
    pub timestamp_ms: u64,
    /// Cell the indicators belong to.
    pub cell: CellKind,
    /// Downlink bitrate in bit/s.
    pub dl_bitrate: f64,
    /// Uplink bitrate in bit/s.
    pub ul_bitrate: f64,
    /// Downlink packet rate in packet/s.
    pub dl_packet_rate: f64,
    /// Uplink packet rate in packet/s.
    pub ul_packet_rate: f64,
    /// Fraction of downlink transport blocks retransmitted, in [0, 1].
    pub dl_retx_rate: f64,
    /// Fraction of uplink transport blocks retransmitted, in [0, 1].
    pub ul_retx_rate: f64,
    /// Uplink shared-channel SNR estimate in dB.
    pub pusch_snr_db: f64,
    /// Reported channel quality indicator, 0..=15.
    pub cqi: u8,
    /// Uplink power headroom in dB.
    pub power_headroom_db: f64,
    /// Energy per resource element in dBm.
    pub epre_dbm: f64,
    /// Estimated uplink path loss in dB.
    pub ul_path_loss_db: f64,
    /// Downlink modulation-and-coding-scheme index, 0..=28.
    pub dl_mcs: u8,
    /// Uplink modulation-and-coding-scheme index, 0..=28.
    pub ul_mcs: u8,
    /// Minimum decoder success rate over the interval, in [0, 1].
    pub turbo_rate_min: f64,
    /// Mid decoder success rate over the interval, in [0, 1].
    pub turbo_rate_avg: f64,
    /// Maximum decoder success rate over the interval, in [0, 1].
    pub turbo_rate_max: f64,
}

impl KpiSample {
    /// KPI fields as a fixed-order feature vector (see [`KPI_FEATURE_NAMES`]).
    pub fn features(&self) -> [f64; KPI_FEATURE_COUNT] {
        [
            self.dl_bitrate,
            self.ul_bitrate,
            self.dl_packet_rate,
            self.ul_packet_rate,
            self.dl_retx_rate,
            self.ul_retx_rate,
            self.pusch_snr_db,
            f64::from(self.cqi),
            self.power_headroom_db,
            self.epre_dbm,
            self.ul_path_loss_db,
            f64::from(self.dl_mcs),
            f64::from(self.ul_mcs),
            self.turbo_rate_min,
            self.turbo_rate_avg,
            self.turbo_rate_max,
        ]
    }

    /// Checks range and ordering constraints on the KPI fields.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in KPI_FEATURE_NAMES.iter().zip(self.features()) {
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("KPI field {name}")));
            }
        }
        if self.cqi > 15 {
            return Err(Error::InvalidParameter(format!(
                "cqi {} outside 0..=15",
                self.cqi
            )));
        }
        if self.dl_mcs > 28 || self.ul_mcs > 28 {
            return Err(Error::InvalidParameter(format!(
                "mcs ({}, {}) outside 0..=28",
                self.dl_mcs, self.ul_mcs
            )));
        }
        for (name, rate) in [
            ("dl_retx_rate", self.dl_retx_rate),
            ("ul_retx_rate", self.ul_retx_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidParameter(format!(
                    "{name} {rate} outside [0, 1]"
                )));
            }
        }
        if self.turbo_rate_min > self.turbo_rate_avg || self.turbo_rate_avg > self.turbo_rate_max {
            return Err(Error::InvalidParameter(format!(
                "turbo rates ({}, {}, {}) not ordered min <= avg <= max",
                self.turbo_rate_min, self.turbo_rate_avg, self.turbo_rate_max
            )));
        }
        if self.dl_bitrate < 0.0
            || self.ul_bitrate < 0.0
            || self.dl_packet_rate < 0.0
            || self.ul_packet_rate < 0.0
        {
            return Err(Error::InvalidParameter(
                "bitrates and packet rates must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Interference waveform family used by a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Wifi,
    None,
}

/// Carrier band an interference scenario is centered on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandLabel {
    /// LTE uplink band around 1950 MHz.
    LteUl1950,
    /// LTE downlink band around 2140 MHz.
    LteDl2140,
    /// NR band around 3490 MHz.
    Nr3490,
}

impl BandLabel {
    /// The cell whose indicators degrade when this band is interfered with.
    pub fn affected_cell(self) -> CellKind {
        match self {
            BandLabel::LteUl1950 | BandLabel::LteDl2140 => CellKind::Lte,
            BandLabel::Nr3490 => CellKind::Nr,
        }
    }

    /// Center frequency of the band in MHz.
    pub fn center_frequency_mhz(self) -> f64 {
        match self {
            BandLabel::LteUl1950 => 1950.0,
            BandLabel::LteDl2140 => 2140.0,
            BandLabel::Nr3490 => 3490.0,
        }
    }
}

/// One interference configuration: waveform, band and transmit power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammingScenario {
    /// Stable identifier, e.g. `wifi-2140-m13`.
    pub id: String,
    pub protocol: Protocol,
    /// Occupied bandwidth of the interfering waveform in MHz.
    pub bandwidth_mhz: f64,
    pub center_frequency_mhz: f64,
    /// Interferer transmit power in dBm.
    pub power_dbm: f64,
    pub band: BandLabel,
}

/// Interferer powers exercised on the LTE bands, in dBm.
pub const WIFI_POWERS_DBM: [f64; 5] = [0.0, -5.0, -11.0, -12.0, -13.0];

/// Interferer powers exercised on the NR band, in dBm.
pub const WIFI_POWERS_NR_DBM: [f64; 3] = [-11.0, -12.0, -13.0];

impl JammingScenario {
    fn wifi(band: BandLabel, power_dbm: f64) -> Self {
        let power_tag = if power_dbm >= 0.0 {
            format!("p{}", power_dbm.abs() as i64)
        } else {
            format!("m{}", power_dbm.abs() as i64)
        };
        JammingScenario {
            id: format!("wifi-{}-{}", band.center_frequency_mhz() as i64, power_tag),
            protocol: Protocol::Wifi,
            bandwidth_mhz: 80.0,
            center_frequency_mhz: band.center_frequency_mhz(),
            power_dbm,
            band,
        }
    }

    /// The thirteen default scenarios: an 80 MHz Wi-Fi waveform on each of
    /// the three bands, swept over the standard power levels.
    pub fn table_defaults() -> Vec<JammingScenario> {
        let mut scenarios = Vec::new();
        for band in [BandLabel::LteDl2140, BandLabel::LteUl1950] {
            for power in WIFI_POWERS_DBM {
                scenarios.push(JammingScenario::wifi(band, power));
            }
        }
        for power in WIFI_POWERS_NR_DBM {
            scenarios.push(JammingScenario::wifi(BandLabel::Nr3490, power));
        }
        scenarios
    }

    /// Checks the scenario against the supported bands and power levels.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidParameter("scenario id is empty".into()));
        }
        if self.bandwidth_mhz <= 0.0 || !self.bandwidth_mhz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scenario {}: bandwidth {} MHz must be positive",
                self.id, self.bandwidth_mhz
            )));
        }
        if (self.center_frequency_mhz - self.band.center_frequency_mhz()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "scenario {}: center frequency {} MHz does not match band {:?}",
                self.id, self.center_frequency_mhz, self.band
            )));
        }
        if self.protocol == Protocol::Wifi {
            let allowed: &[f64] = match self.band {
                BandLabel::Nr3490 => &WIFI_POWERS_NR_DBM,
                _ => &WIFI_POWERS_DBM,
            };
            if !allowed.iter().any(|p| (p - self.power_dbm).abs() < 1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "scenario {}: power {} dBm not in the supported sweep {:?}",
                    self.id, self.power_dbm, allowed
                )));
            }
        }
        Ok(())
    }
}
