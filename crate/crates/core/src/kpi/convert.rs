//! Scalar conversions between dB quantities and link-level efficiencies.

use crate::error::{Error, Result};

/// Converts a dB power ratio to linear scale.
pub fn db_to_linear(db: f64) -> Result<f64> {
    if !db.is_finite() {
        return Err(Error::NonFinite("db_to_linear input".into()));
    }
    Ok(10f64.powf(db / 10.0))
}

/// Converts a positive linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> Result<f64> {
    if !linear.is_finite() {
        return Err(Error::NonFinite("linear_to_db input".into()));
    }
    if linear <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "linear_to_db requires a positive ratio, got {linear}"
        )));
    }
    Ok(10.0 * linear.log10())
}

/// Shannon spectral efficiency `log2(1 + snr)` for an SNR given in dB,
/// in bit/s/Hz.
pub fn snr_to_spectral_efficiency(snr_db: f64) -> Result<f64> {
    let linear = db_to_linear(snr_db)?;
    // log1p keeps precision for deeply negative SNRs where `linear` is tiny.
    Ok(linear.ln_1p() / std::f64::consts::LN_2)
}
