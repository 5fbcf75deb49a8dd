//! Labeled dataset container, CSV persistence and feature normalization.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kpi::{CellKind, KpiSample, KPI_FEATURE_COUNT, KPI_FEATURE_NAMES};

/// Length of a row's combined feature vector: NR then LTE KPI fields.
pub const ROW_FEATURE_COUNT: usize = 2 * KPI_FEATURE_COUNT;

/// One labeled observation: the NR and LTE samples of a reporting interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub nr: KpiSample,
    pub lte: KpiSample,
    /// True when the interferer was active.
    pub label: bool,
    /// Scenario the row was collected under (clean rows keep the scenario
    /// they serve as the baseline for).
    pub scenario_id: String,
}

impl LabeledRow {
    /// Combined 32-dimensional feature vector: NR fields then LTE fields.
    pub fn features(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(ROW_FEATURE_COUNT);
        v.extend_from_slice(&self.nr.features());
        v.extend_from_slice(&self.lte.features());
        v
    }

    fn validate(&self) -> Result<()> {
        self.nr.validate()?;
        self.lte.validate()?;
        if self.nr.cell != CellKind::Nr || self.lte.cell != CellKind::Lte {
            return Err(Error::Schema(
                "row samples must be (NR, LTE) in that order".into(),
            ));
        }
        if self.nr.timestamp_ms != self.lte.timestamp_ms {
            return Err(Error::Schema(format!(
                "row samples disagree on timestamp: {} vs {}",
                self.nr.timestamp_ms, self.lte.timestamp_ms
            )));
        }
        if self.scenario_id.is_empty() {
            return Err(Error::Schema("row has an empty scenario_id".into()));
        }
        Ok(())
    }
}

/// Per-feature statistics of a training split, used for z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    /// Population standard deviation (denominator `n`).
    pub std: Vec<f64>,
    /// Indices of features that were constant on the fitting split; they are
    /// centered but not scaled.
    pub constant_features: Vec<usize>,
}

/// An ordered collection of labeled rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub rows: Vec<LabeledRow>,
}

impl LabeledDataset {
    /// Wraps rows after checking ordering and per-row consistency.
    pub fn new(rows: Vec<LabeledRow>) -> Result<Self> {
        let ds = LabeledDataset { rows };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted unique scenario identifiers present in the rows.
    pub fn scenario_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.rows.iter().map(|r| r.scenario_id.clone()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Checks row ordering and per-row invariants.
    pub fn validate(&self) -> Result<()> {
        let mut prev = 0u64;
        for (i, row) in self.rows.iter().enumerate() {
            row.validate().map_err(|e| {
                Error::Schema(format!("row {i}: {e}"))
            })?;
            if row.nr.timestamp_ms < prev {
                return Err(Error::Schema(format!(
                    "row {i}: timestamps must be non-decreasing ({} after {prev})",
                    row.nr.timestamp_ms
                )));
            }
            prev = row.nr.timestamp_ms;
        }
        Ok(())
    }
}

/// Computes per-feature mean and population standard deviation over the
/// selected rows (typically the training split).
pub fn compute_feature_stats(dataset: &LabeledDataset, rows: &[usize]) -> Result<FeatureStats> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("feature statistics need rows".into()));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; ROW_FEATURE_COUNT];
    for &idx in rows {
        let row = dataset
            .rows
            .get(idx)
            .ok_or_else(|| Error::InvalidParameter(format!("row index {idx} out of range")))?;
        for (m, x) in mean.iter_mut().zip(row.features()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; ROW_FEATURE_COUNT];
    for &idx in rows {
        for (v, (x, m)) in var
            .iter_mut()
            .zip(dataset.rows[idx].features().into_iter().zip(&mean))
        {
            let d = x - m;
            *v += d * d;
        }
    }
    let mut std = Vec::with_capacity(ROW_FEATURE_COUNT);
    let mut constant_features = Vec::new();
    for (i, v) in var.iter().enumerate() {
        let s = (v / n).sqrt();
        if s == 0.0 {
            constant_features.push(i);
        }
        std.push(s);
    }
    if !constant_features.is_empty() {
        log::warn!(
            "{} constant feature(s) on the fitting split are centered but not scaled: {:?}",
            constant_features.len(),
            constant_features
        );
    }
    Ok(FeatureStats {
        mean,
        std,
        constant_features,
    })
}

/// Z-scores the selected rows with the given statistics. Constant features
/// are centered but left unscaled.
pub fn normalize_features(
    dataset: &LabeledDataset,
    rows: &[usize],
    stats: &FeatureStats,
) -> Result<Vec<Vec<f64>>> {
    if stats.mean.len() != ROW_FEATURE_COUNT || stats.std.len() != ROW_FEATURE_COUNT {
        return Err(Error::DimensionMismatch {
            expected: ROW_FEATURE_COUNT,
            actual: stats.mean.len(),
        });
    }
    let mut out = Vec::with_capacity(rows.len());
    for &idx in rows {
        let row = dataset
            .rows
            .get(idx)
            .ok_or_else(|| Error::InvalidParameter(format!("row index {idx} out of range")))?;
        let mut v = row.features();
        for (i, x) in v.iter_mut().enumerate() {
            let divisor = if stats.std[i] == 0.0 { 1.0 } else { stats.std[i] };
            *x = (*x - stats.mean[i]) / divisor;
        }
        out.push(v);
    }
    Ok(out)
}

fn csv_header() -> Vec<&'static str> {
    let mut cols = vec!["timestamp_ms", "cell"];
    cols.extend_from_slice(&KPI_FEATURE_NAMES);
    cols.push("label");
    cols.push("scenario_id");
    cols
}

fn write_sample_record<W: std::io::Write>(
    writer: &mut csv::Writer<W>,
    sample: &KpiSample,
    label: bool,
    scenario_id: &str,
) -> Result<()> {
    let mut record = Vec::with_capacity(2 + KPI_FEATURE_COUNT + 2);
    record.push(sample.timestamp_ms.to_string());
    record.push(sample.cell.as_str().to_string());
    record.push(sample.dl_bitrate.to_string());
    record.push(sample.ul_bitrate.to_string());
    record.push(sample.dl_packet_rate.to_string());
    record.push(sample.ul_packet_rate.to_string());
    record.push(sample.dl_retx_rate.to_string());
    record.push(sample.ul_retx_rate.to_string());
    record.push(sample.pusch_snr_db.to_string());
    record.push(sample.cqi.to_string());
    record.push(sample.power_headroom_db.to_string());
    record.push(sample.epre_dbm.to_string());
    record.push(sample.ul_path_loss_db.to_string());
    record.push(sample.dl_mcs.to_string());
    record.push(sample.ul_mcs.to_string());
    record.push(sample.turbo_rate_min.to_string());
    record.push(sample.turbo_rate_avg.to_string());
    record.push(sample.turbo_rate_max.to_string());
    record.push(if label { "1" } else { "0" }.to_string());
    record.push(scenario_id.to_string());
    writer.write_record(&record)?;
    Ok(())
}

/// Writes the dataset as CSV: one line per (timestamp, cell), NR before LTE.
/// Floats use the shortest representation that round-trips exactly.
pub fn write_dataset_csv<P: AsRef<Path>>(dataset: &LabeledDataset, path: P) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(csv_header())?;
    for row in &dataset.rows {
        write_sample_record(&mut writer, &row.nr, row.label, &row.scenario_id)?;
        write_sample_record(&mut writer, &row.lte, row.label, &row.scenario_id)?;
    }
    writer.flush()?;
    Ok(())
}

struct ParsedLine {
    sample: KpiSample,
    label: bool,
    scenario_id: String,
}

fn parse_line(record: &csv::StringRecord, line: usize) -> Result<ParsedLine> {
    let field = |idx: usize| -> Result<&str> {
        record.get(idx).ok_or_else(|| Error::Parse {
            line,
            message: format!("missing column {}", idx + 1),
        })
    };
    fn parse<T: std::str::FromStr>(raw: &str, name: &str, line: usize) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        raw.trim().parse().map_err(|e| Error::Parse {
            line,
            message: format!("{name}: {e}"),
        })
    }

    let timestamp_ms: u64 = parse(field(0)?, "timestamp_ms", line)?;
    let cell = match field(1)? {
        "nr" => CellKind::Nr,
        "lte" => CellKind::Lte,
        other => {
            return Err(Error::Parse {
                line,
                message: format!("cell must be nr or lte, got {other:?}"),
            })
        }
    };
    let mut kpi = [0.0f64; KPI_FEATURE_COUNT];
    for (i, slot) in kpi.iter_mut().enumerate() {
        *slot = parse(field(2 + i)?, KPI_FEATURE_NAMES[i], line)?;
    }
    let label = match field(2 + KPI_FEATURE_COUNT)? {
        "1" => true,
        "0" => false,
        other => {
            return Err(Error::Parse {
                line,
                message: format!("label must be 0 or 1, got {other:?}"),
            })
        }
    };
    let scenario_id = field(3 + KPI_FEATURE_COUNT)?.to_string();

    let as_u8 = |value: f64, name: &str| -> Result<u8> {
        if value < 0.0 || value > 255.0 || value.fract() != 0.0 {
            return Err(Error::Parse {
                line,
                message: format!("{name} must be a small non-negative integer, got {value}"),
            });
        }
        Ok(value as u8)
    };

    let sample = KpiSample {
        timestamp_ms,
        cell,
        dl_bitrate: kpi[0],
        ul_bitrate: kpi[1],
        dl_packet_rate: kpi[2],
        ul_packet_rate: kpi[3],
        dl_retx_rate: kpi[4],
        ul_retx_rate: kpi[5],
        pusch_snr_db: kpi[6],
        cqi: as_u8(kpi[7], "cqi")?,
        power_headroom_db: kpi[8],
        epre_dbm: kpi[9],
        ul_path_loss_db: kpi[10],
        dl_mcs: as_u8(kpi[11], "dl_mcs")?,
        ul_mcs: as_u8(kpi[12], "ul_mcs")?,
        turbo_rate_min: kpi[13],
        turbo_rate_avg: kpi[14],
        turbo_rate_max: kpi[15],
    };
    Ok(ParsedLine {
        sample,
        label,
        scenario_id,
    })
}

/// Reads a dataset written by [`write_dataset_csv`], validating the header,
/// the NR/LTE pairing and every field. Errors name the 1-based CSV line.
pub fn read_dataset_csv<P: AsRef<Path>>(path: P) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let expected = csv_header();
    let got: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(Error::Schema(format!(
            "{}: expected {} columns {:?}, got {} columns {:?}",
            path.display(),
            expected.len(),
            expected,
            got.len(),
            got
        )));
    }

    let mut pending: Option<(ParsedLine, usize)> = None;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let record = record?;
        if record.len() != expected.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} columns, got {}", expected.len(), record.len()),
            });
        }
        let parsed = parse_line(&record, line)?;
        match pending.take() {
            None => {
                if parsed.sample.cell != CellKind::Nr {
                    return Err(Error::Parse {
                        line,
                        message: "expected an nr line to start a row pair".into(),
                    });
                }
                pending = Some((parsed, line));
            }
            Some((nr_line, nr_lineno)) => {
                if parsed.sample.cell != CellKind::Lte {
                    return Err(Error::Parse {
                        line,
                        message: format!(
                            "expected the lte half of the pair started at line {nr_lineno}"
                        ),
                    });
                }
                if parsed.sample.timestamp_ms != nr_line.sample.timestamp_ms
                    || parsed.label != nr_line.label
                    || parsed.scenario_id != nr_line.scenario_id
                {
                    return Err(Error::Parse {
                        line,
                        message: format!(
                            "pair mismatch with line {nr_lineno}: timestamp/label/scenario differ"
                        ),
                    });
                }
                rows.push(LabeledRow {
                    nr: nr_line.sample,
                    lte: parsed.sample,
                    label: parsed.label,
                    scenario_id: parsed.scenario_id,
                });
            }
        }
    }
    if let Some((_, nr_lineno)) = pending {
        return Err(Error::Parse {
            line: nr_lineno,
            message: "nr line has no matching lte line".into(),
        });
    }
    LabeledDataset::new(rows)
}
