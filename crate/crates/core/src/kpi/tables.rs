//! CQI and MCS link-adaptation tables from 3GPP TS 38.214.
//!
//! The compiled-in defaults are the 4-bit CQI table (Table 5.2.2.1-2) and
//! the 64-QAM MCS index table (Table 5.1.3.1-1). Both map an index to a
//! modulation order, a code rate (×1024) and a spectral efficiency in
//! bit/s/Hz. Lookups go the other way: given a measured spectral
//! efficiency, find the index a scheduler would pick.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of a link-adaptation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    /// Table index (CQI 0..=15 or MCS 0..=28).
    pub index: u8,
    /// Modulation order Qm (bits per symbol); 0 marks an out-of-range row.
    pub modulation_order: u8,
    /// Target code rate multiplied by 1024.
    pub code_rate_x1024: f64,
    /// Spectral efficiency in bit/s/Hz.
    pub efficiency: f64,
}

/// How to resolve a spectral efficiency against a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LookupRule {
    /// Entry whose efficiency is closest; equidistant ties take the lower index.
    NearestEfficiency,
    /// Entry with the greatest efficiency not exceeding the query.
    Floor,
}

/// Result of an MCS lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McsLookup {
    pub index: u8,
    /// True when the query fell below the smallest table efficiency and the
    /// floor rule had to clamp to that entry.
    pub saturated: bool,
}

/// Result of a CQI lookup: the floor index plus the pair of entries that
/// bracket the queried efficiency from below and above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CqiLookup {
    pub index: u8,
    /// `(largest index with efficiency <= query, smallest index with
    /// efficiency >= query)`; both ends equal on an exact hit or when the
    /// query falls outside the table range.
    pub bracket: (u8, u8),
    pub saturated: bool,
}

/// CQI table 5.2.2.1-2 (up to 64-QAM). Index 0 is the out-of-range report.
const CQI_TABLE: [(u8, u8, f64, f64); 16] = [
    (0, 0, 0.0, 0.0),
    (1, 2, 78.0, 0.1523),
    (2, 2, 120.0, 0.2344),
    (3, 2, 193.0, 0.3770),
    (4, 2, 308.0, 0.6016),
    (5, 2, 449.0, 0.8770),
    (6, 2, 602.0, 1.1758),
    (7, 4, 378.0, 1.4766),
    (8, 4, 490.0, 1.9141),
    (9, 4, 616.0, 2.4063),
    (10, 6, 466.0, 2.7305),
    (11, 6, 567.0, 3.3223),
    (12, 6, 666.0, 3.9023),
    (13, 6, 772.0, 4.5234),
    (14, 6, 873.0, 5.1152),
    (15, 6, 948.0, 5.5547),
];

/// MCS index table 5.1.3.1-1 (up to 64-QAM). Note the genuine efficiency dip
/// between indices 16 and 17 where the modulation order steps from 4 to 6.
const MCS_TABLE: [(u8, u8, f64, f64); 29] = [
    (0, 2, 120.0, 0.2344),
    (1, 2, 157.0, 0.3066),
    (2, 2, 193.0, 0.3770),
    (3, 2, 251.0, 0.4902),
    (4, 2, 308.0, 0.6016),
    (5, 2, 379.0, 0.7402),
    (6, 2, 449.0, 0.8770),
    (7, 2, 526.0, 1.0273),
    (8, 2, 602.0, 1.1758),
    (9, 2, 679.0, 1.3262),
    (10, 4, 340.0, 1.3281),
    (11, 4, 378.0, 1.4766),
    (12, 4, 434.0, 1.6953),
    (13, 4, 490.0, 1.9141),
    (14, 4, 553.0, 2.1602),
    (15, 4, 616.0, 2.4063),
    (16, 4, 658.0, 2.5703),
    (17, 6, 438.0, 2.5664),
    (18, 6, 466.0, 2.7305),
    (19, 6, 517.0, 3.0293),
    (20, 6, 567.0, 3.3223),
    (21, 6, 616.0, 3.6094),
    (22, 6, 666.0, 3.9023),
    (23, 6, 719.0, 4.2129),
    (24, 6, 772.0, 4.5234),
    (25, 6, 822.0, 4.8164),
    (26, 6, 873.0, 5.1152),
    (27, 6, 910.0, 5.3320),
    (28, 6, 948.0, 5.5547),
];

fn entries_from(raw: &[(u8, u8, f64, f64)]) -> Vec<TableEntry> {
    raw.iter()
        .map(|&(index, modulation_order, code_rate_x1024, efficiency)| TableEntry {
            index,
            modulation_order,
            code_rate_x1024,
            efficiency,
        })
        .collect()
}

/// The CQI and MCS tables used for lookups, plus efficiency-sorted views.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingTables {
    cqi: Vec<TableEntry>,
    mcs: Vec<TableEntry>,
    /// Positions into `cqi` ordered by ascending efficiency.
    cqi_by_eff: Vec<usize>,
    /// Positions into `mcs` ordered by ascending efficiency.
    mcs_by_eff: Vec<usize>,
}

impl Default for MappingTables {
    fn default() -> Self {
        MappingTables::standard()
    }
}

impl MappingTables {
    /// The compiled-in TS 38.214 tables.
    pub fn standard() -> Self {
        MappingTables::from_entries(entries_from(&CQI_TABLE), entries_from(&MCS_TABLE))
            .expect("compiled-in tables are valid")
    }

    /// Builds tables from explicit rows, validating shape and ordering.
    pub fn from_entries(cqi: Vec<TableEntry>, mcs: Vec<TableEntry>) -> Result<Self> {
        validate_table("cqi", &cqi, 16, true)?;
        validate_table("mcs", &mcs, 29, false)?;
        let cqi_by_eff = efficiency_order(&cqi);
        let mcs_by_eff = efficiency_order(&mcs);
        Ok(MappingTables {
            cqi,
            mcs,
            cqi_by_eff,
            mcs_by_eff,
        })
    }

    /// Loads both tables from CSV files with columns
    /// `index,modulation_order,code_rate_x1024,efficiency`.
    pub fn from_csv_files<P: AsRef<Path>, Q: AsRef<Path>>(cqi: P, mcs: Q) -> Result<Self> {
        MappingTables::from_entries(load_table_csv(cqi)?, load_table_csv(mcs)?)
    }

    pub fn cqi_entries(&self) -> &[TableEntry] {
        &self.cqi
    }

    pub fn mcs_entries(&self) -> &[TableEntry] {
        &self.mcs
    }

    /// Spectral efficiency of an MCS index.
    pub fn mcs_efficiency(&self, index: u8) -> Result<f64> {
        self.mcs
            .iter()
            .find(|e| e.index == index)
            .map(|e| e.efficiency)
            .ok_or_else(|| Error::InvalidParameter(format!("mcs index {index} not in table")))
    }

    /// Spectral efficiency of a CQI index.
    pub fn cqi_efficiency(&self, index: u8) -> Result<f64> {
        self.cqi
            .iter()
            .find(|e| e.index == index)
            .map(|e| e.efficiency)
            .ok_or_else(|| Error::InvalidParameter(format!("cqi index {index} not in table")))
    }

    /// Maps a spectral efficiency to an MCS index under the given rule.
    pub fn efficiency_to_mcs(&self, eta: f64, rule: LookupRule) -> Result<McsLookup> {
        check_eta(eta)?;
        let (pos, saturated) = match rule {
            LookupRule::NearestEfficiency => (nearest_pos(&self.mcs, &self.mcs_by_eff, eta), false),
            LookupRule::Floor => floor_pos(&self.mcs, &self.mcs_by_eff, eta),
        };
        Ok(McsLookup {
            index: self.mcs[pos].index,
            saturated,
        })
    }

    /// Maps a spectral efficiency to a CQI floor index and bracketing pair.
    pub fn efficiency_to_cqi(&self, eta: f64) -> Result<CqiLookup> {
        check_eta(eta)?;
        let (floor, saturated) = floor_pos(&self.cqi, &self.cqi_by_eff, eta);
        let ceil = ceil_pos(&self.cqi, &self.cqi_by_eff, eta);
        Ok(CqiLookup {
            index: self.cqi[floor].index,
            bracket: (self.cqi[floor].index, self.cqi[ceil].index),
            saturated,
        })
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() {
        return Err(Error::NonFinite("efficiency lookup input".into()));
    }
    if eta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "spectral efficiency must be non-negative, got {eta}"
        )));
    }
    Ok(())
}

/// Positions into `entries` sorted by ascending efficiency.
fn efficiency_order(entries: &[TableEntry]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        entries[a]
            .efficiency
            .partial_cmp(&entries[b].efficiency)
            .expect("efficiencies are finite")
    });
    order
}

/// Binary search over the efficiency-sorted view: number of entries with
/// efficiency strictly below `eta`.
fn partition_point(entries: &[TableEntry], by_eff: &[usize], eta: f64) -> usize {
    by_eff.partition_point(|&pos| entries[pos].efficiency < eta)
}

/// Position of the nearest entry by efficiency; equidistant ties and exact
/// duplicates resolve to the lower table index.
fn nearest_pos(entries: &[TableEntry], by_eff: &[usize], eta: f64) -> usize {
    let cut = partition_point(entries, by_eff, eta);
    // Candidates: the closest sorted neighbours on each side of the cut.
    // Scanning one extra entry on each side covers exact-hit runs.
    let lo = cut.saturating_sub(2);
    let hi = (cut + 2).min(by_eff.len());
    let mut best: Option<usize> = None;
    for &pos in &by_eff[lo..hi] {
        let cand_delta = (entries[pos].efficiency - eta).abs();
        best = match best {
            None => Some(pos),
            Some(cur) => {
                let cur_delta = (entries[cur].efficiency - eta).abs();
                if cand_delta < cur_delta
                    || (cand_delta == cur_delta && entries[pos].index < entries[cur].index)
                {
                    Some(pos)
                } else {
                    Some(cur)
                }
            }
        };
    }
    best.expect("tables are non-empty")
}

/// Position of the greatest efficiency not exceeding `eta`, with a
/// saturation flag when `eta` falls below the whole table.
fn floor_pos(entries: &[TableEntry], by_eff: &[usize], eta: f64) -> (usize, bool) {
    let cut = partition_point(entries, by_eff, eta);
    // Entries at positions < cut are strictly below eta; an exact hit sits at
    // the cut itself.
    if cut < by_eff.len() && entries[by_eff[cut]].efficiency == eta {
        return (by_eff[cut], false);
    }
    if cut == 0 {
        // Everything exceeds eta: clamp to the smallest-efficiency entry.
        return (by_eff[0], true);
    }
    (by_eff[cut - 1], false)
}

/// Position of the smallest efficiency not below `eta`, clamping to the top
/// entry when `eta` exceeds the whole table.
fn ceil_pos(entries: &[TableEntry], by_eff: &[usize], eta: f64) -> usize {
    let cut = partition_point(entries, by_eff, eta);
    if cut == by_eff.len() {
        return by_eff[by_eff.len() - 1];
    }
    by_eff[cut]
}

fn validate_table(
    name: &str,
    entries: &[TableEntry],
    expected_len: usize,
    strictly_increasing: bool,
) -> Result<()> {
    if entries.len() != expected_len {
        return Err(Error::Schema(format!(
            "{name} table must have {expected_len} rows, got {}",
            entries.len()
        )));
    }
    for (i, e) in entries.iter().enumerate() {
        if e.index as usize != i {
            return Err(Error::Schema(format!(
                "{name} table row {i} has index {}, rows must be 0..{expected_len} in order",
                e.index
            )));
        }
        if !e.efficiency.is_finite() || e.efficiency < 0.0 {
            return Err(Error::Schema(format!(
                "{name} table index {}: efficiency {} must be finite and non-negative",
                e.index, e.efficiency
            )));
        }
        if !e.code_rate_x1024.is_finite() || e.code_rate_x1024 < 0.0 {
            return Err(Error::Schema(format!(
                "{name} table index {}: code rate {} must be finite and non-negative",
                e.index, e.code_rate_x1024
            )));
        }
    }
    if strictly_increasing {
        for w in entries.windows(2) {
            if w[1].efficiency <= w[0].efficiency {
                return Err(Error::Schema(format!(
                    "{name} table efficiencies must be strictly increasing, violated at index {}",
                    w[1].index
                )));
            }
        }
    } else {
        // The 64-QAM MCS table is strictly increasing within each modulation
        // order but dips where the order steps (index 16 -> 17 in the
        // standard), so enforce per-run monotonicity plus global uniqueness.
        for w in entries.windows(2) {
            if w[0].modulation_order == w[1].modulation_order
                && w[1].efficiency <= w[0].efficiency
            {
                return Err(Error::Schema(format!(
                    "{name} table efficiencies must increase within a modulation order, \
                     violated at index {}",
                    w[1].index
                )));
            }
        }
        let mut effs: Vec<f64> = entries.iter().map(|e| e.efficiency).collect();
        effs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        for w in effs.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Schema(format!(
                    "{name} table efficiencies must be unique, {} appears twice",
                    w[0]
                )));
            }
        }
    }
    Ok(())
}

/// Reads table rows from a CSV file with header
/// `index,modulation_order,code_rate_x1024,efficiency`.
pub fn load_table_csv<P: AsRef<Path>>(path: P) -> Result<Vec<TableEntry>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let expected = ["index", "modulation_order", "code_rate_x1024", "efficiency"];
    let headers = reader.headers()?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Schema(format!(
            "{}: expected header {:?}, got {:?}",
            path.display(),
            expected,
            got
        )));
    }
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header line
        let record = record?;
        let parse_field = |idx: usize, name: &str| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {name}"),
            })
        };
        let index: u8 = parse_field(0, "index")?.trim().parse().map_err(|e| Error::Parse {
            line,
            message: format!("index: {e}"),
        })?;
        let modulation_order: u8 =
            parse_field(1, "modulation_order")?
                .trim()
                .parse()
                .map_err(|e| Error::Parse {
                    line,
                    message: format!("modulation_order: {e}"),
                })?;
        let code_rate_x1024: f64 =
            parse_field(2, "code_rate_x1024")?
                .trim()
                .parse()
                .map_err(|e| Error::Parse {
                    line,
                    message: format!("code_rate_x1024: {e}"),
                })?;
        let efficiency: f64 = parse_field(3, "efficiency")?.trim().parse().map_err(|e| {
            Error::Parse {
                line,
                message: format!("efficiency: {e}"),
            }
        })?;
        entries.push(TableEntry {
            index,
            modulation_order,
            code_rate_x1024,
            efficiency,
        });
    }
    Ok(entries)
}

/// Writes table rows to CSV in the canonical column order.
pub fn save_table_csv<P: AsRef<Path>>(path: P, entries: &[TableEntry]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["index", "modulation_order", "code_rate_x1024", "efficiency"])?;
    for e in entries {
        writer.write_record([
            e.index.to_string(),
            e.modulation_order.to_string(),
            e.code_rate_x1024.to_string(),
            e.efficiency.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
