//! Synthetic cross-layer KPI generation with an explicit causal structure.
//!
//! Interference lowers the affected cell's SNR; the SNR drop propagates to
//! CQI, from CQI to the MCS indices, and from MCS to bitrates and packet
//! rates, while retransmission probability rises along a logistic curve.
//! Power headroom, EPRE and path loss respond to the interferer directly.
//! Everything downstream of SNR uses noise that does not depend on the
//! jamming state, so the generator respects the conditional independencies
//! a causal model of the link would claim.

mod dataset;

pub use dataset::{
    compute_feature_stats, normalize_features, read_dataset_csv, write_dataset_csv, FeatureStats,
    LabeledDataset, LabeledRow, ROW_FEATURE_COUNT,
};

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kpi::{
    snr_to_spectral_efficiency, CellKind, JammingScenario, KpiSample, LookupRule, MappingTables,
};

/// Interval between consecutive KPI reports in milliseconds.
pub const SAMPLE_PERIOD_MS: u64 = 180;

/// Bits per transport packet assumed when deriving packet rates.
const PACKET_SIZE_BITS: f64 = 12_000.0;

/// Uplink bitrate scale relative to downlink at equal efficiency.
const UL_BITRATE_FACTOR: f64 = 0.5;

/// Baseline means for KPIs that respond to the interferer directly.
const HEADROOM_BASE_DB: f64 = 20.0;
const EPRE_BASE_DBM: f64 = -96.0;
const PATH_LOSS_BASE_DB: f64 = 75.0;

/// Per-dB-of-degradation responses of the direct-response KPIs.
const HEADROOM_DB_PER_DEGRADATION_DB: f64 = -0.35;
const EPRE_DB_PER_DEGRADATION_DB: f64 = 0.3;
const PATH_LOSS_DB_PER_DEGRADATION_DB: f64 = 0.5;

/// Gaussian noise scales for the generated KPI fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureNoiseStd {
    /// Added to the spectral efficiency before the CQI lookup, in bit/s/Hz.
    pub cqi_efficiency: f64,
    /// Added to the CQI efficiency before each MCS lookup, in bit/s/Hz.
    pub mcs_efficiency: f64,
    /// Multiplicative fraction applied to bitrates.
    pub bitrate_frac: f64,
    /// Multiplicative fraction applied to packet rates.
    pub packet_rate_frac: f64,
    /// Absolute noise on retransmission rates.
    pub retx: f64,
    pub headroom_db: f64,
    pub epre_db: f64,
    pub path_loss_db: f64,
    /// Absolute noise on the decoder success rates.
    pub turbo: f64,
}

impl Default for FeatureNoiseStd {
    fn default() -> Self {
        FeatureNoiseStd {
            cqi_efficiency: 0.35,
            mcs_efficiency: 0.25,
            bitrate_frac: 0.05,
            packet_rate_frac: 0.08,
            retx: 0.01,
            headroom_db: 2.0,
            epre_db: 1.5,
            path_loss_db: 2.0,
            turbo: 0.05,
        }
    }
}

impl FeatureNoiseStd {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cqi_efficiency", self.cqi_efficiency),
            ("mcs_efficiency", self.mcs_efficiency),
            ("bitrate_frac", self.bitrate_frac),
            ("packet_rate_frac", self.packet_rate_frac),
            ("retx", self.retx),
            ("headroom_db", self.headroom_db),
            ("epre_db", self.epre_db),
            ("path_loss_db", self.path_loss_db),
            ("turbo", self.turbo),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "noise std {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// All noise terms zeroed; useful for deterministic causal checks.
    pub fn zeroed() -> Self {
        FeatureNoiseStd {
            cqi_efficiency: 0.0,
            mcs_efficiency: 0.0,
            bitrate_frac: 0.0,
            packet_rate_frac: 0.0,
            retx: 0.0,
            headroom_db: 0.0,
            epre_db: 0.0,
            path_loss_db: 0.0,
            turbo: 0.0,
        }
    }
}

/// Configuration of the synthetic KPI generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Jammed rows per scenario; an equal number of clean rows is generated.
    pub samples_per_scenario: usize,
    pub baseline_snr_mean_db: f64,
    pub baseline_snr_std_db: f64,
    /// Mean SNR drop on the affected cell per scenario id, in dB.
    pub snr_degradation_db_per_scenario: BTreeMap<String, f64>,
    /// Fraction of the degradation leaking into the co-located other cell.
    pub cross_cell_leakage: f64,
    /// Slope of the retransmission logistic in 1/dB.
    pub retx_logistic_slope: f64,
    /// SNR at which the retransmission probability crosses one half, in dB.
    pub retx_logistic_midpoint_db: f64,
    /// Downlink bit/s per bit/s/Hz of scheduled efficiency.
    pub bitrate_per_efficiency: f64,
    /// Uplink scheduled efficiency relative to the CQI efficiency.
    pub ul_efficiency_scale: f64,
    pub feature_noise_std: FeatureNoiseStd,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig::defaults_for(&JammingScenario::table_defaults())
    }
}

impl GeneratorConfig {
    /// Default configuration with degradation shifts derived for `scenarios`.
    pub fn defaults_for(scenarios: &[JammingScenario]) -> Self {
        GeneratorConfig {
            seed: 42,
            samples_per_scenario: 400,
            baseline_snr_mean_db: 16.5,
            baseline_snr_std_db: 1.0,
            snr_degradation_db_per_scenario: default_degradation_map(scenarios),
            cross_cell_leakage: 0.25,
            retx_logistic_slope: 0.4,
            retx_logistic_midpoint_db: 3.0,
            bitrate_per_efficiency: 18e6,
            ul_efficiency_scale: 0.75,
            feature_noise_std: FeatureNoiseStd::default(),
        }
    }

    /// Checks scalar ranges; scenario coverage is checked at generation time.
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_scenario == 0 {
            return Err(Error::InvalidParameter(
                "samples_per_scenario must be >= 1".into(),
            ));
        }
        if !self.baseline_snr_std_db.is_finite() || self.baseline_snr_std_db < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "baseline_snr_std_db must be >= 0, got {}",
                self.baseline_snr_std_db
            )));
        }
        if !self.baseline_snr_mean_db.is_finite() {
            return Err(Error::NonFinite("baseline_snr_mean_db".into()));
        }
        if !(0.0..=1.0).contains(&self.cross_cell_leakage) {
            return Err(Error::InvalidParameter(format!(
                "cross_cell_leakage must be in [0, 1], got {}",
                self.cross_cell_leakage
            )));
        }
        if self.bitrate_per_efficiency <= 0.0 || !self.bitrate_per_efficiency.is_finite() {
            return Err(Error::InvalidParameter(
                "bitrate_per_efficiency must be positive".into(),
            ));
        }
        if self.ul_efficiency_scale <= 0.0 || !self.ul_efficiency_scale.is_finite() {
            return Err(Error::InvalidParameter(
                "ul_efficiency_scale must be positive".into(),
            ));
        }
        for (name, v) in [
            ("retx_logistic_slope", self.retx_logistic_slope),
            ("retx_logistic_midpoint_db", self.retx_logistic_midpoint_db),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite(name.into()));
            }
        }
        for (id, shift) in &self.snr_degradation_db_per_scenario {
            if !shift.is_finite() || *shift < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "degradation for scenario {id} must be >= 0, got {shift}"
                )));
            }
        }
        self.feature_noise_std.validate()
    }

    /// The scenario with the largest configured SNR degradation.
    pub fn strongest_scenario_id(&self) -> Option<&str> {
        self.snr_degradation_db_per_scenario
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite shifts"))
            .map(|(id, _)| id.as_str())
    }

    /// The scenario with the smallest configured SNR degradation, i.e. the
    /// hardest one to detect.
    pub fn hardest_scenario_id(&self) -> Option<&str> {
        self.snr_degradation_db_per_scenario
            .iter()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite shifts"))
            .map(|(id, _)| id.as_str())
    }
}

/// Mean SNR degradation per scenario: proportional to the interferer's
/// linear amplitude, with a per-band coupling factor chosen so the low-power
/// LTE-downlink case is the hardest to detect.
pub fn default_degradation_map(scenarios: &[JammingScenario]) -> BTreeMap<String, f64> {
    scenarios
        .iter()
        .map(|s| {
            let band_factor = match s.band {
                crate::kpi::BandLabel::LteDl2140 => 0.85,
                crate::kpi::BandLabel::LteUl1950 => 1.0,
                crate::kpi::BandLabel::Nr3490 => 1.05,
            };
            let strength = 14.0 * 10f64.powf(s.power_dbm / 20.0);
            (s.id.clone(), band_factor * strength)
        })
        .collect()
}

/// SplitMix64 finalizer; decorrelates sub-stream seeds derived from one seed.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gauss<R: Rng>(rng: &mut R, mean: f64, std: f64) -> f64 {
    if std > 0.0 {
        Normal::new(mean, std).expect("validated std").sample(rng)
    } else {
        mean
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Generates one cell's KPI sample given the effective SNR degradation.
fn sample_cell<R: Rng>(
    rng: &mut R,
    cfg: &GeneratorConfig,
    tables: &MappingTables,
    cell: CellKind,
    timestamp_ms: u64,
    degradation_db: f64,
) -> Result<KpiSample> {
    let noise = &cfg.feature_noise_std;

    let snr = gauss(
        rng,
        cfg.baseline_snr_mean_db - degradation_db,
        cfg.baseline_snr_std_db,
    );
    let eta = snr_to_spectral_efficiency(snr)?;

    let cqi_query = (eta + gauss(rng, 0.0, noise.cqi_efficiency)).max(0.0);
    let cqi = tables.efficiency_to_cqi(cqi_query)?.index;
    let cqi_eff = tables.cqi_efficiency(cqi)?;

    let dl_query = (cqi_eff + gauss(rng, 0.0, noise.mcs_efficiency)).max(0.0);
    let dl_mcs = tables
        .efficiency_to_mcs(dl_query, LookupRule::NearestEfficiency)?
        .index;
    let ul_query =
        (cfg.ul_efficiency_scale * cqi_eff + gauss(rng, 0.0, noise.mcs_efficiency)).max(0.0);
    let ul_mcs = tables
        .efficiency_to_mcs(ul_query, LookupRule::NearestEfficiency)?
        .index;

    let dl_eff = tables.mcs_efficiency(dl_mcs)?;
    let ul_eff = tables.mcs_efficiency(ul_mcs)?;
    let dl_bitrate =
        cfg.bitrate_per_efficiency * dl_eff * (1.0 + gauss(rng, 0.0, noise.bitrate_frac)).max(0.0);
    let ul_bitrate = UL_BITRATE_FACTOR
        * cfg.bitrate_per_efficiency
        * ul_eff
        * (1.0 + gauss(rng, 0.0, noise.bitrate_frac)).max(0.0);

    let dl_packet_rate = dl_bitrate / PACKET_SIZE_BITS
        * (1.0 + gauss(rng, 0.0, noise.packet_rate_frac)).max(0.0);
    let ul_packet_rate = ul_bitrate / PACKET_SIZE_BITS
        * (1.0 + gauss(rng, 0.0, noise.packet_rate_frac)).max(0.0);

    let retx_mean = sigmoid(-cfg.retx_logistic_slope * (snr - cfg.retx_logistic_midpoint_db));
    let dl_retx_rate = (retx_mean + gauss(rng, 0.0, noise.retx)).clamp(0.0, 1.0);
    let ul_retx_rate = (retx_mean + gauss(rng, 0.0, noise.retx)).clamp(0.0, 1.0);

    let power_headroom_db = gauss(
        rng,
        HEADROOM_BASE_DB + HEADROOM_DB_PER_DEGRADATION_DB * degradation_db,
        noise.headroom_db,
    );
    let epre_dbm = gauss(
        rng,
        EPRE_BASE_DBM + EPRE_DB_PER_DEGRADATION_DB * degradation_db,
        noise.epre_db,
    );
    let ul_path_loss_db = gauss(
        rng,
        PATH_LOSS_BASE_DB + PATH_LOSS_DB_PER_DEGRADATION_DB * degradation_db,
        noise.path_loss_db,
    );

    let turbo_base = (0.35 + 0.015 * snr).clamp(0.05, 0.95);
    let mut turbo = [
        gauss(rng, turbo_base, noise.turbo).clamp(0.0, 1.0),
        gauss(rng, turbo_base, noise.turbo).clamp(0.0, 1.0),
        gauss(rng, turbo_base, noise.turbo).clamp(0.0, 1.0),
    ];
    turbo.sort_by(|a, b| a.partial_cmp(b).expect("clamped values are finite"));

    Ok(KpiSample {
        timestamp_ms,
        cell,
        dl_bitrate,
        ul_bitrate,
        dl_packet_rate,
        ul_packet_rate,
        dl_retx_rate,
        ul_retx_rate,
        pusch_snr_db: snr,
        cqi,
        power_headroom_db,
        epre_dbm,
        ul_path_loss_db,
        dl_mcs,
        ul_mcs,
        turbo_rate_min: turbo[0],
        turbo_rate_avg: turbo[1],
        turbo_rate_max: turbo[2],
    })
}

/// Generates one paired NR+LTE row.
fn sample_row<R: Rng>(
    rng: &mut R,
    cfg: &GeneratorConfig,
    tables: &MappingTables,
    scenario: &JammingScenario,
    shift_db: f64,
    jammed: bool,
    timestamp_ms: u64,
) -> Result<LabeledRow> {
    let affected = scenario.band.affected_cell();
    let cell_shift = |cell: CellKind| -> f64 {
        if !jammed {
            0.0
        } else if cell == affected {
            shift_db
        } else {
            cfg.cross_cell_leakage * shift_db
        }
    };
    let nr = sample_cell(rng, cfg, tables, CellKind::Nr, timestamp_ms, cell_shift(CellKind::Nr))?;
    let lte = sample_cell(
        rng,
        cfg,
        tables,
        CellKind::Lte,
        timestamp_ms,
        cell_shift(CellKind::Lte),
    )?;
    Ok(LabeledRow {
        nr,
        lte,
        label: jammed,
        scenario_id: scenario.id.clone(),
    })
}

/// Generates the full labeled dataset for the given scenarios.
///
/// Per scenario the generator emits `samples_per_scenario` timestamps, each
/// carrying one clean row and one jammed row. Scenario blocks occupy
/// consecutive time ranges so the whole dataset is ordered by timestamp.
/// Each scenario draws from its own counter-based stream, so output does not
/// depend on scenario evaluation order.
pub fn generate_dataset(
    cfg: &GeneratorConfig,
    scenarios: &[JammingScenario],
    tables: &MappingTables,
) -> Result<LabeledDataset> {
    cfg.validate()?;
    if scenarios.is_empty() {
        return Err(Error::EmptyInput("scenario list".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in scenarios {
        s.validate()?;
        if !seen.insert(s.id.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "duplicate scenario id {}",
                s.id
            )));
        }
        if !cfg.snr_degradation_db_per_scenario.contains_key(&s.id) {
            return Err(Error::InvalidParameter(format!(
                "no SNR degradation configured for scenario {}",
                s.id
            )));
        }
    }

    let n = cfg.samples_per_scenario;
    let mut rows = Vec::with_capacity(scenarios.len() * n * 2);
    for (i, scenario) in scenarios.iter().enumerate() {
        let shift = cfg.snr_degradation_db_per_scenario[&scenario.id];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ splitmix64(i as u64 + 1));
        let base_ms = (i * n) as u64 * SAMPLE_PERIOD_MS;
        for t in 0..n {
            let timestamp_ms = base_ms + t as u64 * SAMPLE_PERIOD_MS;
            rows.push(sample_row(
                &mut rng, cfg, tables, scenario, shift, false, timestamp_ms,
            )?);
            rows.push(sample_row(
                &mut rng, cfg, tables, scenario, shift, true, timestamp_ms,
            )?);
        }
    }
    let dataset = LabeledDataset::new(rows)?;
    Ok(dataset)
}
