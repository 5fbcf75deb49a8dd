//! Binning of continuous KPI values into named discrete states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open bins `[e_i, e_{i+1})` over ascending edges.
///
/// Values outside `[e_0, e_last)` clamp into the first or last bin and are
/// flagged, so callers can count how often the binning range was violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscretizerData", into = "DiscretizerData")]
pub struct Discretizer {
    edges: Vec<f64>,
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct DiscretizerData {
    edges: Vec<f64>,
    labels: Vec<String>,
}

impl TryFrom<DiscretizerData> for Discretizer {
    type Error = Error;
    fn try_from(data: DiscretizerData) -> Result<Self> {
        Discretizer::new(data.edges, data.labels)
    }
}

impl From<Discretizer> for DiscretizerData {
    fn from(d: Discretizer) -> Self {
        DiscretizerData {
            edges: d.edges,
            labels: d.labels,
        }
    }
}

impl Discretizer {
    pub fn new(edges: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidParameter(
                "discretizer needs at least two edges".into(),
            ));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("discretizer edges".into()));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "discretizer edges must be strictly ascending".into(),
            ));
        }
        if labels.len() != edges.len() - 1 {
            return Err(Error::DimensionMismatch {
                expected: edges.len() - 1,
                actual: labels.len(),
            });
        }
        Ok(Discretizer { edges, labels })
    }

    /// Equal-width bins labeled with their half-open ranges.
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameter("bins must be positive".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "need finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();
        let labels = range_labels(&edges);
        Discretizer::new(edges, labels)
    }

    /// Bins with explicit edges, labeled with their half-open ranges.
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        let labels = range_labels(&edges);
        Discretizer::new(edges, labels)
    }

    pub fn bin_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Bin index for `v` plus whether it fell outside the edge range.
    pub fn bin(&self, v: f64) -> Result<(usize, bool)> {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("cannot bin {v}")));
        }
        if v < self.edges[0] {
            return Ok((0, true));
        }
        if v >= self.edges[self.edges.len() - 1] {
            return Ok((self.bin_count() - 1, v > self.edges[self.edges.len() - 1]));
        }
        // partition_point gives the count of edges <= v; the bin is one less.
        let upper = self.edges.partition_point(|e| *e <= v);
        Ok((upper - 1, false))
    }

    /// Label of the bin `v` falls into.
    pub fn label_of(&self, v: f64) -> Result<&str> {
        Ok(&self.labels[self.bin(v)?.0])
    }
}

fn range_labels(edges: &[f64]) -> Vec<String> {
    edges
        .windows(2)
        .map(|w| format!("[{},{})", trim_float(w[0]), trim_float(w[1])))
        .collect()
}

/// Short decimal rendering for labels: at most two decimals, no tail zeros.
fn trim_float(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scan_bin(edges: &[f64], v: f64) -> (usize, bool) {
        if v < edges[0] {
            return (0, true);
        }
        for i in 0..edges.len() - 1 {
            if v >= edges[i] && v < edges[i + 1] {
                return (i, false);
            }
        }
        (edges.len() - 2, v > edges[edges.len() - 1])
    }

    #[test]
    fn test_bins_are_half_open_on_exact_edges() {
        let d = Discretizer::from_edges(vec![0.0, 4.0, 8.0, 12.0, 16.0]).unwrap();
        assert_eq!(d.bin(0.0).unwrap(), (0, false));
        assert_eq!(d.bin(4.0).unwrap(), (1, false), "edge belongs to the upper bin");
        assert_eq!(d.bin(3.999).unwrap(), (0, false));
        assert_eq!(d.bin(15.0).unwrap(), (3, false));
        // The top edge itself clamps into the last bin without flagging.
        assert_eq!(d.bin(16.0).unwrap(), (3, false));
    }

    #[test]
    fn test_out_of_range_values_clamp_and_flag() {
        let d = Discretizer::uniform(-5.0, 35.0, 6).unwrap();
        assert_eq!(d.bin(-5.1).unwrap(), (0, true));
        assert_eq!(d.bin(99.0).unwrap(), (5, true));
        assert_eq!(d.bin(-5.0).unwrap(), (0, false));
        assert_eq!(d.bin(34.999).unwrap(), (5, false));
        assert!(d.bin(f64::NAN).is_err());
    }

    #[test]
    fn test_uniform_bins_have_equal_width_and_range_labels() {
        let d = Discretizer::uniform(-5.0, 35.0, 6).unwrap();
        assert_eq!(d.bin_count(), 6);
        assert_eq!(d.edges()[0], -5.0);
        assert_eq!(d.edges()[6], 35.0);
        for w in d.edges().windows(2) {
            assert!((w[1] - w[0] - 40.0 / 6.0).abs() < 1e-9);
        }
        assert_eq!(d.labels()[0], "[-5,1.67)");
        assert_eq!(d.labels()[5], "[28.33,35)");
    }

    #[test]
    fn test_constructor_validation() {
        assert!(Discretizer::from_edges(vec![1.0]).is_err());
        assert!(Discretizer::from_edges(vec![1.0, 1.0]).is_err());
        assert!(Discretizer::from_edges(vec![2.0, 1.0]).is_err());
        assert!(Discretizer::from_edges(vec![0.0, f64::NAN]).is_err());
        assert!(Discretizer::new(vec![0.0, 1.0], vec![]).is_err());
        assert!(Discretizer::uniform(0.0, 1.0, 0).is_err());
        assert!(Discretizer::uniform(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn test_round_trip_revalidates() {
        let d = Discretizer::uniform(0.0, 29.0, 4).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        let back: Discretizer = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        let bad = json.replace("29.0", "-1.0");
        assert!(serde_json::from_str::<Discretizer>(&bad).is_err());
    }

    proptest! {
        #[test]
        fn prop_binary_search_matches_linear_scan(
            v in -100.0f64..100.0,
            lo in -50.0f64..0.0,
            width in 0.5f64..20.0,
            bins in 1usize..12,
        ) {
            let hi = lo + width * bins as f64;
            let d = Discretizer::uniform(lo, hi, bins).unwrap();
            prop_assert_eq!(d.bin(v).unwrap(), scan_bin(d.edges(), v));
        }

        #[test]
        fn prop_binning_is_monotone(
            a in -100.0f64..100.0,
            b in -100.0f64..100.0,
        ) {
            let d = Discretizer::uniform(-5.0, 35.0, 6).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(d.bin(lo).unwrap().0 <= d.bin(hi).unwrap().0);
        }
    }
}
