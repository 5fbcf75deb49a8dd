//! Echo state network for sequential detection over short KPI windows.
//!
//! The reservoir (`W_in`, `W_res`) is generated once from a seed and never
//! trained; only the linear readout `W_out` is fitted, by closed-form ridge
//! regression on the reservoir state after the final window step. Scores are
//! the softmax probability of the "interference present" output.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    normalize_features, splitmix64, FeatureStats, LabeledDataset, SAMPLE_PERIOD_MS,
};
use crate::error::{Error, Result};

/// Binary artifact layout version written by [`EsnModel::to_bytes`].
const FORMAT_VERSION: u32 = 1;
/// Upper bound on the JSON header length accepted when loading.
const MAX_HEADER_BYTES: u32 = 1 << 20;
/// Reservoir draws whose spectral radius falls below this are resampled.
const MIN_RESERVOIR_RADIUS: f64 = 1e-9;
const MAX_RESAMPLE_ATTEMPTS: u32 = 32;
/// Iteration cap for the Schur decomposition behind the spectral radius.
/// Unbounded QR iteration can cycle forever on degenerate sparse draws, so
/// a draw that fails to converge is rejected like a zero-radius one.
const SCHUR_MAX_ITERATIONS: usize = 10_000;

/// Reservoir state update nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    /// Linear update; useful for validating the recurrence in closed form.
    Identity,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Identity => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsnParams {
    /// Reservoir size M.
    pub reservoir_size: usize,
    /// Input dimension D (features per window step).
    pub input_dim: usize,
    /// Readout outputs K; fixed at 2 (clean / jammed).
    pub output_dim: usize,
    /// Largest eigenvalue magnitude the reservoir is rescaled to.
    pub spectral_radius: f64,
    /// Fraction of non-zero reservoir entries.
    pub density: f64,
    /// Input weights are uniform on `[-input_scale, input_scale]`.
    pub input_scale: f64,
    /// Ridge penalty for the readout fit.
    pub ridge_lambda: f64,
    pub activation: Activation,
    pub seed: u64,
    /// Consecutive samples per detection window.
    pub window_len: usize,
}

impl Default for EsnParams {
    fn default() -> Self {
        EsnParams {
            reservoir_size: 50,
            input_dim: crate::datagen::ROW_FEATURE_COUNT,
            output_dim: 2,
            spectral_radius: 0.9,
            density: 0.1,
            input_scale: 0.5,
            ridge_lambda: 1e-3,
            activation: Activation::Tanh,
            seed: 42,
            window_len: 2,
        }
    }
}

impl EsnParams {
    pub fn validate(&self) -> Result<()> {
        if self.reservoir_size == 0 || self.input_dim == 0 {
            return Err(Error::InvalidParameter(
                "reservoir_size and input_dim must be positive".into(),
            ));
        }
        if self.output_dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "output_dim must be 2 for binary detection, got {}",
                self.output_dim
            )));
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spectral_radius must be positive, got {}",
                self.spectral_radius
            )));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "density must be in (0, 1], got {}",
                self.density
            )));
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "input_scale must be positive, got {}",
                self.input_scale
            )));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ridge_lambda must be non-negative, got {}",
                self.ridge_lambda
            )));
        }
        if self.window_len == 0 {
            return Err(Error::InvalidParameter("window_len must be positive".into()));
        }
        Ok(())
    }
}

/// Echo state network with a fixed reservoir and a ridge-fitted readout.
#[derive(Debug, Clone, PartialEq)]
pub struct EsnModel {
    pub params: EsnParams,
    w_in: DMatrix<f64>,
    w_res: DMatrix<f64>,
    w_out: Option<DMatrix<f64>>,
    /// Reservoir redraws needed before a usable spectral radius appeared.
    pub resample_attempts: u32,
}

/// Spectral radius of `m`, or `None` when the bounded Schur iteration does
/// not converge. Matches `complex_eigenvalues()` whenever that converges.
fn largest_eigenvalue_norm(m: &DMatrix<f64>) -> Option<f64> {
    Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITERATIONS).map(|schur| {
        schur
            .complex_eigenvalues()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    })
}

impl EsnModel {
    /// Generates the reservoir deterministically from `params.seed`.
    ///
    /// The sparse reservoir draw is rejected and redrawn (with a derived
    /// sub-seed) when its spectral radius is numerically zero — a real
    /// possibility at very low densities — or when the Schur iteration
    /// behind the radius fails to converge on a degenerate draw.
    pub fn new(params: EsnParams) -> Result<Self> {
        params.validate()?;
        let m = params.reservoir_size;
        let d = params.input_dim;

        let mut rng_in = ChaCha8Rng::seed_from_u64(splitmix64(params.seed ^ 0x01));
        let w_in = DMatrix::from_fn(m, d, |_, _| {
            rng_in.random_range(-params.input_scale..params.input_scale)
        });

        let mut resample_attempts = 0;
        let (w_res, radius) = loop {
            let sub_seed = splitmix64(params.seed ^ 0x02 ^ ((resample_attempts as u64) << 32));
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
            let candidate = DMatrix::from_fn(m, m, |_, _| {
                if rng.random_bool(params.density) {
                    rng.random_range(-1.0..1.0)
                } else {
                    0.0
                }
            });
            match largest_eigenvalue_norm(&candidate) {
                Some(radius) if radius >= MIN_RESERVOIR_RADIUS => break (candidate, radius),
                Some(radius) => log::warn!(
                    "reservoir draw {resample_attempts} has spectral radius {radius:.3e}; \
                     resampling"
                ),
                None => log::warn!(
                    "reservoir draw {resample_attempts} stalled the Schur iteration; resampling"
                ),
            }
            resample_attempts += 1;
            if resample_attempts >= MAX_RESAMPLE_ATTEMPTS {
                return Err(Error::InvalidParameter(format!(
                    "no reservoir draw with spectral radius >= {MIN_RESERVOIR_RADIUS} within \
                     {MAX_RESAMPLE_ATTEMPTS} attempts; increase density ({}) or reservoir size \
                     ({m})",
                    params.density
                )));
            }
        };
        let w_res = w_res * (params.spectral_radius / radius);

        Ok(EsnModel {
            params,
            w_in,
            w_res,
            w_out: None,
            resample_attempts,
        })
    }

    #[cfg(test)]
    fn with_matrices(params: EsnParams, w_in: DMatrix<f64>, w_res: DMatrix<f64>) -> Self {
        assert_eq!(w_in.nrows(), params.reservoir_size);
        assert_eq!(w_in.ncols(), params.input_dim);
        assert_eq!(w_res.nrows(), params.reservoir_size);
        assert_eq!(w_res.ncols(), params.reservoir_size);
        EsnModel {
            params,
            w_in,
            w_res,
            w_out: None,
            resample_attempts: 0,
        }
    }

    pub fn input_weights(&self) -> &DMatrix<f64> {
        &self.w_in
    }

    pub fn reservoir_weights(&self) -> &DMatrix<f64> {
        &self.w_res
    }

    pub fn readout_weights(&self) -> Option<&DMatrix<f64>> {
        self.w_out.as_ref()
    }

    fn check_window(&self, window: &[Vec<f64>]) -> Result<()> {
        if window.is_empty() {
            return Err(Error::EmptyInput("window".into()));
        }
        for step in window {
            if step.len() != self.params.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.params.input_dim,
                    actual: step.len(),
                });
            }
            if step.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("window features".into()));
            }
        }
        Ok(())
    }

    /// Reservoir states after each window step, starting from the zero state.
    pub fn states(&self, window: &[Vec<f64>]) -> Result<Vec<DVector<f64>>> {
        self.check_window(window)?;
        let mut x = DVector::zeros(self.params.reservoir_size);
        let mut out = Vec::with_capacity(window.len());
        for step in window {
            let u = DVector::from_column_slice(step);
            let pre = &self.w_in * u + &self.w_res * &x;
            x = pre.map(|v| self.params.activation.apply(v));
            out.push(x.clone());
        }
        Ok(out)
    }

    fn final_state(&self, window: &[Vec<f64>]) -> Result<DVector<f64>> {
        Ok(self.states(window)?.pop().expect("non-empty window"))
    }

    /// Fits the readout by ridge regression in one closed-form pass.
    ///
    /// With final states as columns of `X` and one-hot targets as columns of
    /// `Y`, the readout is `W_out = Y X^T (X X^T + lambda I)^-1`, the exact
    /// minimizer of `||Y - W X||_F^2 + lambda ||W||_F^2`. The reservoir
    /// matrices are not touched.
    pub fn fit_readout(&mut self, windows: &[Vec<Vec<f64>>], labels: &[bool]) -> Result<()> {
        if windows.is_empty() {
            return Err(Error::EmptyInput("training windows".into()));
        }
        if windows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: windows.len(),
                actual: labels.len(),
            });
        }
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            return Err(Error::SingleClass);
        }
        let m = self.params.reservoir_size;
        let n = windows.len();
        let mut x = DMatrix::zeros(m, n);
        for (j, window) in windows.iter().enumerate() {
            x.set_column(j, &self.final_state(window)?);
        }
        let mut y = DMatrix::zeros(self.params.output_dim, n);
        for (j, &label) in labels.iter().enumerate() {
            y[(usize::from(label), j)] = 1.0;
        }

        let mut a = &x * x.transpose();
        for i in 0..m {
            a[(i, i)] += self.params.ridge_lambda;
        }
        let b = &x * y.transpose(); // M x K
        let solution = if self.params.ridge_lambda > 0.0 {
            nalgebra::Cholesky::new(a)
                .ok_or_else(|| {
                    Error::SingularSystem(
                        "readout normal matrix is not positive definite despite ridge_lambda > 0"
                            .into(),
                    )
                })?
                .solve(&b)
        } else {
            let lu = a.full_piv_lu();
            if !lu.is_invertible() {
                return Err(Error::SingularSystem(
                    "readout normal matrix is singular; set ridge_lambda > 0".into(),
                ));
            }
            lu.solve(&b).ok_or_else(|| {
                Error::SingularSystem(
                    "readout normal matrix is singular; set ridge_lambda > 0".into(),
                )
            })?
        };
        self.w_out = Some(solution.transpose());
        Ok(())
    }

    /// Softmax probability of the jammed class from the final window state.
    pub fn score(&self, window: &[Vec<f64>]) -> Result<f64> {
        let w_out = self
            .w_out
            .as_ref()
            .ok_or_else(|| Error::NotFitted("echo state network readout".into()))?;
        let outputs = w_out * self.final_state(window)?;
        Ok(crate::detect::sigmoid(outputs[1] - outputs[0]))
    }

    /// Parameters adjusted by [`fit_readout`](Self::fit_readout): `K * M`.
    pub fn trainable_parameters(&self) -> usize {
        self.params.output_dim * self.params.reservoir_size
    }

    /// Serializes as a JSON header followed by row-major little-endian f64
    /// blocks for `W_in`, `W_res`, and (when fitted) `W_out`.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = ArtifactHeader {
            format_version: FORMAT_VERSION,
            params: self.params,
            resample_attempts: self.resample_attempts,
            has_readout: self.w_out.is_some(),
        };
        let header_json = serde_json::to_vec(&header)?;
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
        bytes.extend_from_slice(&header_json);
        push_matrix(&mut bytes, &self.w_in);
        push_matrix(&mut bytes, &self.w_res);
        if let Some(w_out) = &self.w_out {
            push_matrix(&mut bytes, w_out);
        }
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Schema("model file shorter than its length prefix".into()));
        }
        let header_len = u32::from_le_bytes(bytes[..4].try_into().expect("4 bytes"));
        if header_len > MAX_HEADER_BYTES || 4 + header_len as usize > bytes.len() {
            return Err(Error::Schema(format!(
                "header length {header_len} exceeds the file size"
            )));
        }
        let header: ArtifactHeader =
            serde_json::from_slice(&bytes[4..4 + header_len as usize]).map_err(|e| {
                Error::Schema(format!("model header is not valid JSON: {e}"))
            })?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                header.format_version
            )));
        }
        header.params.validate()?;
        let m = header.params.reservoir_size;
        let d = header.params.input_dim;
        let k = header.params.output_dim;
        let mut offset = 4 + header_len as usize;
        let w_in = read_matrix(bytes, &mut offset, m, d)?;
        let w_res = read_matrix(bytes, &mut offset, m, m)?;
        let w_out = if header.has_readout {
            Some(read_matrix(bytes, &mut offset, k, m)?)
        } else {
            None
        };
        if offset != bytes.len() {
            return Err(Error::Schema(format!(
                "{} trailing bytes after the model blocks",
                bytes.len() - offset
            )));
        }
        Ok(EsnModel {
            params: header.params,
            w_in,
            w_res,
            w_out,
            resample_attempts: header.resample_attempts,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_bytes()?)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ArtifactHeader {
    format_version: u32,
    params: EsnParams,
    resample_attempts: u32,
    has_readout: bool,
}

fn push_matrix(bytes: &mut Vec<u8>, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            bytes.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
}

fn read_matrix(
    bytes: &[u8],
    offset: &mut usize,
    rows: usize,
    cols: usize,
) -> Result<DMatrix<f64>> {
    let need = rows
        .checked_mul(cols)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Schema(format!("implausible {rows}x{cols} matrix block")))?;
    let end = offset.checked_add(need).filter(|&e| e <= bytes.len());
    let Some(end) = end else {
        return Err(Error::Schema(format!(
            "model file truncated: needed {need} bytes for a {rows}x{cols} block"
        )));
    };
    let block = &bytes[*offset..end];
    let m = DMatrix::from_fn(rows, cols, |r, c| {
        let at = (r * cols + c) * 8;
        f64::from_le_bytes(block[at..at + 8].try_into().expect("8 bytes"))
    });
    *offset = end;
    Ok(m)
}

/// Windows cut from a dataset, ready for ESN training or scoring.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowSet {
    /// Each window is `window_len` consecutive feature rows.
    pub windows: Vec<Vec<Vec<f64>>>,
    pub labels: Vec<bool>,
    pub scenario_ids: Vec<String>,
    /// Dataset row index of each window's final sample, for evidence lookup.
    pub final_row_indices: Vec<usize>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Cuts sliding windows of `window_len` consecutive samples from the given
/// dataset rows.
///
/// Rows are grouped into (scenario, label) streams first, so a window never
/// mixes jammed and clean samples or two scenarios. Within a stream, windows
/// only span runs whose timestamps advance by exactly [`SAMPLE_PERIOD_MS`];
/// a gap (for example a train/test cut) ends the run. When `stats` is given,
/// features are z-normalized with it.
pub fn extract_windows(
    dataset: &LabeledDataset,
    indices: &[usize],
    window_len: usize,
    stats: Option<&FeatureStats>,
) -> Result<WindowSet> {
    if window_len == 0 {
        return Err(Error::InvalidParameter("window_len must be positive".into()));
    }
    if indices.is_empty() {
        return Err(Error::EmptyInput("window extraction needs rows".into()));
    }
    for &i in indices {
        if i >= dataset.rows.len() {
            return Err(Error::InvalidParameter(format!(
                "row index {i} out of bounds for {} rows",
                dataset.rows.len()
            )));
        }
    }
    let features: Vec<Vec<f64>> = match stats {
        Some(stats) => normalize_features(dataset, indices, stats)?,
        None => indices.iter().map(|&i| dataset.rows[i].features()).collect(),
    };
    let mut position: BTreeMap<usize, usize> = BTreeMap::new();
    for (pos, &i) in indices.iter().enumerate() {
        if position.insert(i, pos).is_some() {
            return Err(Error::InvalidParameter(format!("duplicate row index {i}")));
        }
    }

    let mut streams: BTreeMap<(&str, bool), Vec<usize>> = BTreeMap::new();
    for &i in indices {
        let row = &dataset.rows[i];
        streams
            .entry((row.scenario_id.as_str(), row.label))
            .or_default()
            .push(i);
    }

    let mut out = WindowSet::default();
    for ((scenario, label), mut rows) in streams {
        rows.sort_by_key(|&i| (dataset.rows[i].nr.timestamp_ms, i));
        let mut run_start = 0;
        for j in 0..rows.len() {
            let run_ends = j + 1 == rows.len()
                || dataset.rows[rows[j + 1]].nr.timestamp_ms
                    != dataset.rows[rows[j]].nr.timestamp_ms + SAMPLE_PERIOD_MS;
            if !run_ends {
                continue;
            }
            let run = &rows[run_start..=j];
            for window in run.windows(window_len) {
                out.windows.push(
                    window
                        .iter()
                        .map(|&i| features[position[&i]].clone())
                        .collect(),
                );
                out.labels.push(label);
                out.scenario_ids.push(scenario.to_string());
                out.final_row_indices.push(*window.last().expect("window_len > 0"));
            }
            run_start = j + 1;
        }
    }
    Ok(out)
}
