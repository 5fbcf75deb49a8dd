//! Shared builders for unit tests: small hand-constructed datasets with
//! valid KPI rows and controllable class separation.

use crate::datagen::{LabeledDataset, LabeledRow, SAMPLE_PERIOD_MS};
use crate::kpi::{CellKind, KpiSample};

/// A valid KPI sample with link quality controlled by `degraded` and a small
/// deterministic wobble from `salt` so features are not constant.
pub fn sample(cell: CellKind, timestamp_ms: u64, degraded: bool, salt: u64) -> KpiSample {
    let w = (salt % 7) as f64 * 0.1;
    let (snr, cqi, mcs, retx) = if degraded {
        (4.0 + w, 5, 8, 0.35)
    } else {
        (16.0 + w, 12, 22, 0.02)
    };
    KpiSample {
        timestamp_ms,
        cell,
        dl_bitrate: 40e6 + 1e6 * w,
        ul_bitrate: 20e6 + 5e5 * w,
        dl_packet_rate: 3000.0 + 10.0 * w,
        ul_packet_rate: 1500.0 + 5.0 * w,
        dl_retx_rate: retx,
        ul_retx_rate: retx * 0.8,
        pusch_snr_db: snr,
        cqi,
        power_headroom_db: 20.0 - w,
        epre_dbm: -96.0 + w,
        ul_path_loss_db: 75.0 + w,
        dl_mcs: mcs,
        ul_mcs: mcs.saturating_sub(2),
        turbo_rate_min: 0.3 + 0.01 * w,
        turbo_rate_avg: 0.5 + 0.01 * w,
        turbo_rate_max: 0.7 + 0.01 * w,
    }
}

/// A labeled row where both cells share `timestamp_ms`; positive rows carry
/// degraded KPIs on both cells.
pub fn labeled_row(scenario_id: &str, timestamp_ms: u64, label: bool, salt: u64) -> LabeledRow {
    LabeledRow {
        nr: sample(CellKind::Nr, timestamp_ms, label, salt),
        lte: sample(CellKind::Lte, timestamp_ms, label, salt.wrapping_add(3)),
        label,
        scenario_id: scenario_id.to_string(),
    }
}

/// Builds a dataset from `(scenario_id, negatives, positives)` blocks.
///
/// Each (scenario, label) stream occupies its own contiguous run of
/// timestamps spaced [`SAMPLE_PERIOD_MS`] apart, and timestamps are
/// non-decreasing across the whole dataset, matching generator output.
pub fn synthetic_rows(blocks: &[(&str, usize, usize)]) -> LabeledDataset {
    let mut rows = Vec::new();
    let mut tick: u64 = 0;
    for &(scenario, negatives, positives) in blocks {
        for (label, count) in [(false, negatives), (true, positives)] {
            for i in 0..count {
                rows.push(labeled_row(scenario, tick * SAMPLE_PERIOD_MS, label, i as u64));
                tick += 1;
            }
        }
    }
    LabeledDataset { rows }
}
