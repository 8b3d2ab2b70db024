use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::directivity::validate_frequencies;
use crate::error::{Error, Result};

/// Which model produced a transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ISM_OMNI")]
    IsmOmni,
    #[serde(rename = "GISM")]
    Gism,
    #[serde(rename = "FSRR")]
    Fsrr,
    #[serde(rename = "DEISM")]
    Deism,
    #[serde(rename = "DEISM_LC")]
    DeismLc,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::IsmOmni,
        Method::Gism,
        Method::Fsrr,
        Method::Deism,
        Method::DeismLc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::IsmOmni => "ISM_OMNI",
            Method::Gism => "GISM",
            Method::Fsrr => "FSRR",
            Method::Deism => "DEISM",
            Method::DeismLc => "DEISM_LC",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown method '{s}' (expected one of ISM_OMNI, GISM, FSRR, DEISM, DEISM_LC)"
                ))
            })
    }
}

/// A room transfer function sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RtfSpectrum {
    frequencies: Vec<f64>,
    values: Vec<Complex64>,
    pub method: Option<Method>,
    /// Hash of the configuration that produced the spectrum.
    pub fingerprint: Option<String>,
}

impl RtfSpectrum {
    pub fn new(frequencies: Vec<f64>, values: Vec<Complex64>, method: Option<Method>) -> Result<Self> {
        validate_frequencies(&frequencies)?;
        if frequencies.len() != values.len() {
            return Err(Error::config(format!(
                "{} frequencies but {} values",
                frequencies.len(),
                values.len()
            )));
        }
        Ok(RtfSpectrum {
            frequencies,
            values,
            method,
            fingerprint: None,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_fingerprint(mut self, fingerprint: impl Into<String>) -> Self {
        self.fingerprint = Some(fingerprint.into());
        self
    }

    /// Fails unless both spectra share the same grid.
    pub fn require_same_grid(&self, other: &RtfSpectrum) -> Result<()> {
        if self.frequencies != other.frequencies {
            return Err(Error::config(format!(
                "frequency grids differ ({} vs {} points)",
                self.frequencies.len(),
                other.frequencies.len()
            )));
        }
        Ok(())
    }
}
