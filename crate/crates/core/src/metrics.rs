//! Error metrics between transfer functions on a shared frequency grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::RtfSpectrum;

/// Reference pressure for sound pressure levels, in pascals.
pub const REFERENCE_PRESSURE: f64 = 2e-5;

/// Sound pressure level of a steady-state complex amplitude, taking
/// `P_rms = |H|/√2`. Zero amplitude gives `−∞`.
pub fn spl_value(h: Complex64) -> f64 {
    20.0 * (h.norm() / std::f64::consts::SQRT_2 / REFERENCE_PRESSURE).log10()
}

/// SPL per frequency, with the indices of zero-magnitude bins (which hold
/// `−∞`).
pub fn spl(h: &RtfSpectrum) -> (Vec<f64>, Vec<usize>) {
    let db: Vec<f64> = h.values().iter().map(|v| spl_value(*v)).collect();
    let zeros = db
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_infinite())
        .map(|(i, _)| i)
        .collect();
    (db, zeros)
}

/// Scaling of the log spectral distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsdForm {
    /// `10 log10` of the squared magnitude ratio, i.e. `20 log10 |H_t/H_r|`.
    #[default]
    Printed,
    /// `10 log10 |H_t/H_r|`, half the printed value.
    SingleSquare,
}

fn check_grids(a: &RtfSpectrum, b: &RtfSpectrum) -> Result<()> {
    a.require_same_grid(b)
}

/// Per-frequency level difference in dB.
pub fn level_difference(test: &RtfSpectrum, reference: &RtfSpectrum, form: LsdForm) -> Result<Vec<f64>> {
    check_grids(test, reference)?;
    let scale = match form {
        LsdForm::Printed => 20.0,
        LsdForm::SingleSquare => 10.0,
    };
    test.values()
        .iter()
        .zip(reference.values())
        .map(|(t, r)| {
            if r.norm() == 0.0 {
                Err(Error::domain("reference spectrum has a zero bin"))
            } else {
                Ok(scale * (t.norm() / r.norm()).log10())
            }
        })
        .collect()
}

/// Root-mean-square log spectral distance in dB.
pub fn log_spectral_distance(test: &RtfSpectrum, reference: &RtfSpectrum, form: LsdForm) -> Result<f64> {
    Ok(rms(&level_difference(test, reference, form)?))
}

/// 1-D phase unwrapping along frequency: jumps larger than `π` between
/// neighbouring bins are removed by adding multiples of `2π`.
pub fn unwrap_phase(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for v in values {
        let a = v.arg();
        if let Some(p) = prev {
            let d = a - p;
            if d > PI {
                offset -= 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
            } else if d < -PI {
                offset += 2.0 * PI * ((-d + PI) / (2.0 * PI)).floor();
            }
        }
        prev = Some(a);
        out.push(a + offset);
    }
    out
}

/// Per-frequency difference of the unwrapped phases, shifted by a multiple
/// of `2π` so that the first bin lies in `(−π, π]`.
pub fn phase_difference(test: &RtfSpectrum, reference: &RtfSpectrum) -> Result<Vec<f64>> {
    check_grids(test, reference)?;
    let a = unwrap_phase(test.values());
    let b = unwrap_phase(reference.values());
    let mut d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    if let Some(&d0) = d.first() {
        let shift = 2.0 * PI * ((d0 + PI) / (2.0 * PI)).ceil() - 2.0 * PI;
        if shift != 0.0 {
            d.iter_mut().for_each(|x| *x -= shift);
        }
    }
    Ok(d)
}

/// Root-mean-square phase error in radians.
pub fn phase_error(test: &RtfSpectrum, reference: &RtfSpectrum) -> Result<f64> {
    Ok(rms(&phase_difference(test, reference)?))
}

/// `‖H_a − H_b‖₂ / ‖H_a‖₂` over the whole spectrum.
pub fn relative_l2(a: &RtfSpectrum, b: &RtfSpectrum) -> Result<f64> {
    check_grids(a, b)?;
    relative_l2_values(a.values(), b.values())
}

/// [`relative_l2`] on raw value slices.
pub fn relative_l2_values(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::config("spectra differ in length"));
    }
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::domain("relative error against a zero spectrum"));
    }
    Ok((num / den).sqrt())
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// The comparison metrics of a test spectrum against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Log spectral distance as printed (`20 log10` of the ratio), dB.
    pub e_lsd: f64,
    /// Log spectral distance with a single square (`10 log10`), dB.
    pub e_lsd_single_square: f64,
    /// RMS unwrapped phase error, radians.
    pub e_phase: f64,
    /// Relative ℓ2 error of the test spectrum with respect to the reference.
    pub e_l2: f64,
    pub band: (f64, f64),
    #[serde(skip)]
    pub traces: Option<ComparisonTraces>,
}

/// Per-frequency traces behind a [`ComparisonReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTraces {
    pub frequencies: Vec<f64>,
    pub level_difference_db: Vec<f64>,
    pub phase_difference_rad: Vec<f64>,
}

/// Computes all metrics of `test` against `reference`.
pub fn compare(test: &RtfSpectrum, reference: &RtfSpectrum) -> Result<ComparisonReport> {
    check_grids(test, reference)?;
    let level = level_difference(test, reference, LsdForm::Printed)?;
    let phase = phase_difference(test, reference)?;
    let f = reference.frequencies();
    Ok(ComparisonReport {
        e_lsd: rms(&level),
        e_lsd_single_square: rms(&level) / 2.0,
        e_phase: rms(&phase),
        e_l2: relative_l2(reference, test)?,
        band: (f[0], f[f.len() - 1]),
        traces: Some(ComparisonTraces {
            frequencies: f.to_vec(),
            level_difference_db: level,
            phase_difference_rad: phase,
        }),
    })
}
