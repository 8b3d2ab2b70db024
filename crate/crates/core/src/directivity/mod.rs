//! Spherical-harmonic directivity coefficients of sources and receivers.
//!
//! A transducer mounted on a device is described, per frequency, by the
//! coefficients `C_{n,m}(k)` of its radiated field outside a transparent
//! sphere of radius `r0`:
//!
//! ```text
//! P(r, θ, φ) = Σ_{n<=N} Σ_m C_{n,m}(k) h_n^(2)(k r) Y_{n,m}(θ, φ)
//! ```
//!
//! Receivers are characterised the same way through reciprocity (a source
//! placed at the microphone); [`receiver_weights_from_reciprocity`] turns
//! such coefficients into the weights that multiply an incident field.
//!
//! Coefficient vectors are stored flat with index `n² + n + m`, so a slice of
//! length `(N+1)²` is a complete order-`N` expansion.

mod fit;
pub mod grids;
pub mod synthetic;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sph::{
    mode_count, spherical_bessel_j_upto, spherical_hankel2_upto, spherical_harmonics_upto,
};

pub use fit::{
    fit_wave_spectrum, wave_spectrum_to_coefficients, FitDiagnostics, SampledSphereField,
    WaveSpectrum, CONDITION_WARNING_THRESHOLD, DEFAULT_HANKEL_FLOOR,
};

/// Whether a coefficient set describes a radiating source or a receiver
/// characterised through reciprocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransducerKind {
    Source,
    Receiver,
}

/// Propagation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    /// Speed of sound in m/s.
    pub speed_of_sound: f64,
    /// Density in kg/m³.
    pub density: f64,
}

impl Default for Medium {
    fn default() -> Self {
        Medium {
            speed_of_sound: 343.0,
            density: 1.2,
        }
    }
}

impl Medium {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_of_sound > 0.0 && self.speed_of_sound.is_finite()) {
            return Err(Error::config("speed of sound must be positive"));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::config("density must be positive"));
        }
        Ok(())
    }

    /// Wavenumber `k = 2πf/c`.
    pub fn wavenumber(&self, frequency_hz: f64) -> f64 {
        2.0 * PI * frequency_hz / self.speed_of_sound
    }
}

/// Order `N` of a flat coefficient slice of length `(N+1)²`.
pub fn order_of(coeffs: &[Complex64]) -> Result<usize> {
    let n = (coeffs.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != coeffs.len() {
        return Err(Error::domain(format!(
            "coefficient vector of length {} is not a complete expansion",
            coeffs.len()
        )));
    }
    Ok(n - 1)
}

/// Checks that a frequency list is positive, finite and strictly increasing.
pub fn validate_frequencies(frequencies: &[f64]) -> Result<()> {
    if frequencies.is_empty() {
        return Err(Error::config("frequency list is empty"));
    }
    if frequencies.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::config("frequencies must be positive and finite"));
    }
    if frequencies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("frequencies must be strictly increasing"));
    }
    Ok(())
}

/// Per-frequency spherical-harmonic coefficients of one transducer.
#[derive(Debug, Clone, PartialEq)]
pub struct Directivity {
    kind: TransducerKind,
    r0: f64,
    max_order: usize,
    frequencies: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl Directivity {
    /// `coeffs` is frequency-major with stride `(max_order+1)²`.
    pub fn new(
        kind: TransducerKind,
        r0: f64,
        max_order: usize,
        frequencies: Vec<f64>,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if !(r0 >= 0.0 && r0.is_finite()) {
            return Err(Error::config(format!("invalid sphere radius {r0}")));
        }
        validate_frequencies(&frequencies)?;
        let stride = mode_count(max_order);
        if coeffs.len() != stride * frequencies.len() {
            return Err(Error::config(format!(
                "expected {} coefficients ({} frequencies × {stride}), got {}",
                stride * frequencies.len(),
                frequencies.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::config("directivity coefficients must be finite"));
        }
        Ok(Directivity {
            kind,
            r0,
            max_order,
            frequencies,
            coeffs,
        })
    }

    /// Builds a directivity from one coefficient vector per frequency; shorter
    /// vectors are zero-padded to the largest order present.
    pub fn from_per_frequency(
        kind: TransducerKind,
        r0: f64,
        frequencies: Vec<f64>,
        sets: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let mut max_order = 0;
        for s in &sets {
            max_order = max_order.max(order_of(s)?);
        }
        let stride = mode_count(max_order);
        let mut coeffs = Vec::with_capacity(stride * sets.len());
        for s in sets {
            let pad = stride - s.len();
            coeffs.extend(s);
            coeffs.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), pad));
        }
        Self::new(kind, r0, max_order, frequencies, coeffs)
    }

    /// Omnidirectional transducer: `C_{0,0} = -ik/√(4π)` at every frequency.
    pub fn monopole(kind: TransducerKind, frequencies: Vec<f64>, medium: &Medium) -> Result<Self> {
        let coeffs = frequencies
            .iter()
            .map(|&f| monopole_coefficients(medium.wavenumber(f))[0])
            .collect();
        Self::new(kind, 0.0, 0, frequencies, coeffs)
    }

    /// Receiver coefficients of an ideal pressure sensor at offset
    /// `(d_y, θ_y, φ_y)` from the receiver origin, truncated per frequency at
    /// `⌈k d_y⌉` and capped at `max_order` when given.
    pub fn point_receiver(
        frequencies: Vec<f64>,
        medium: &Medium,
        d_y: f64,
        theta_y: f64,
        phi_y: f64,
        max_order: Option<usize>,
    ) -> Result<Self> {
        if !(d_y >= 0.0 && d_y.is_finite()) {
            return Err(Error::config("receiver offset must be non-negative"));
        }
        let sets = frequencies
            .iter()
            .map(|&f| {
                let k = medium.wavenumber(f);
                let mut order = truncation_order(k, d_y);
                if let Some(cap) = max_order {
                    order = order.min(cap);
                }
                point_receiver_coefficients_with_order(k, d_y, theta_y, phi_y, order)
            })
            .collect();
        Self::from_per_frequency(TransducerKind::Receiver, d_y, frequencies, sets)
    }

    pub fn kind(&self) -> TransducerKind {
        self.kind
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// All coefficients, frequency-major.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficients at frequency index `i`.
    pub fn at(&self, i: usize) -> &[Complex64] {
        let stride = mode_count(self.max_order);
        &self.coeffs[i * stride..(i + 1) * stride]
    }

    pub fn with_kind(mut self, kind: TransducerKind) -> Self {
        self.kind = kind;
        self
    }

    /// Fails unless `frequencies` equals this directivity's grid exactly.
    pub fn require_grid(&self, frequencies: &[f64]) -> Result<()> {
        if self.frequencies.as_slice() != frequencies {
            return Err(Error::config(format!(
                "{:?} directivity frequency grid ({} points) does not match the requested grid ({} points); \
                 coefficients are never interpolated across frequency",
                self.kind,
                self.frequencies.len(),
                frequencies.len()
            )));
        }
        Ok(())
    }

    /// Yaw rotation of the whole directivity by `delta_phi` about +z.
    pub fn rotated(&self, delta_phi: f64) -> Self {
        let stride = mode_count(self.max_order);
        let coeffs = self
            .coeffs
            .chunks(stride)
            .flat_map(|c| rotate_azimuth(c, delta_phi))
            .collect();
        Directivity {
            coeffs,
            ..self.clone()
        }
    }

    /// Keeps orders `<= order`, dropping the rest.
    pub fn truncated(&self, order: usize) -> Self {
        if order >= self.max_order {
            return self.clone();
        }
        let stride = mode_count(self.max_order);
        let keep = mode_count(order);
        let coeffs = self
            .coeffs
            .chunks(stride)
            .flat_map(|c| c[..keep].iter().copied())
            .collect();
        Directivity {
            max_order: order,
            coeffs,
            ..self.clone()
        }
    }
}

/// Monopole coefficients, `C_{0,0} = -ik/√(4π)`.
pub fn monopole_coefficients(k: f64) -> Vec<Complex64> {
    vec![Complex64::new(0.0, -k / (4.0 * PI).sqrt())]
}

/// Receiver coefficients of an ideal pressure sensor at `(d_y, θ_y, φ_y)`,
///
/// ```text
/// C_{v,u} = -ik j_v(k d_y) Y*_{v,u}(θ_y, φ_y),   v <= ⌈k d_y⌉
/// ```
///
/// `d_y = 0` reduces to the omnidirectional receiver.
pub fn point_receiver_coefficients(k: f64, d_y: f64, theta_y: f64, phi_y: f64) -> Vec<Complex64> {
    point_receiver_coefficients_with_order(k, d_y, theta_y, phi_y, truncation_order(k, d_y))
}

pub(crate) fn point_receiver_coefficients_with_order(
    k: f64,
    d_y: f64,
    theta_y: f64,
    phi_y: f64,
    order: usize,
) -> Vec<Complex64> {
    let j = spherical_bessel_j_upto(order, k * d_y);
    let y = spherical_harmonics_upto(order, theta_y, phi_y);
    let minus_ik = Complex64::new(0.0, -k);
    y.iter()
        .enumerate()
        .map(|(i, yv)| {
            let v = (i as f64).sqrt() as usize;
            minus_ik * j[v] * yv.conj()
        })
        .collect()
}

/// `N = ⌈k r0⌉`.
pub fn truncation_order(k: f64, r0: f64) -> usize {
    let x = k * r0;
    if x <= 0.0 {
        0
    } else {
        x.ceil() as usize
    }
}

/// Receiver weights from reciprocity-derived receiver coefficients,
/// `D_{v,u} = i (-1)^u / k · C_{v,-u}`.
pub fn receiver_weights_from_reciprocity(c: &[Complex64], k: f64) -> Result<Vec<Complex64>> {
    if !(k > 0.0) {
        return Err(Error::domain("reciprocity map requires k > 0"));
    }
    let order = order_of(c)?;
    let mut d = vec![Complex64::new(0.0, 0.0); c.len()];
    for v in 0..=order {
        let centre = v * v + v;
        for u in -(v as i64)..=(v as i64) {
            let sign = if u.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let src = c[(centre as i64 - u) as usize];
            d[(centre as i64 + u) as usize] = Complex64::new(0.0, sign / k) * src;
        }
    }
    Ok(d)
}

/// Inverse of [`receiver_weights_from_reciprocity`]:
/// `C_{v,u} = -ik (-1)^u D_{v,-u}`.
pub fn coefficients_from_receiver_weights(d: &[Complex64], k: f64) -> Result<Vec<Complex64>> {
    if !(k > 0.0) {
        return Err(Error::domain("reciprocity map requires k > 0"));
    }
    let order = order_of(d)?;
    let mut c = vec![Complex64::new(0.0, 0.0); d.len()];
    for v in 0..=order {
        let centre = v * v + v;
        for u in -(v as i64)..=(v as i64) {
            let sign = if u.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            c[(centre as i64 + u) as usize] =
                Complex64::new(0.0, -k * sign) * d[(centre as i64 - u) as usize];
        }
    }
    Ok(c)
}

/// Rotation about +z: `C'_{n,m} = C_{n,m} e^{-imΔφ}`, so the rotated field at
/// `φ` equals the original at `φ - Δφ`.
pub fn rotate_azimuth(c: &[Complex64], delta_phi: f64) -> Vec<Complex64> {
    c.iter()
        .enumerate()
        .map(|(i, ci)| {
            let n = (i as f64).sqrt() as usize;
            let m = i as i64 - (n * n + n) as i64;
            if m == 0 {
                *ci
            } else {
                ci * Complex64::from_polar(1.0, -(m as f64) * delta_phi)
            }
        })
        .collect()
}

/// Radiated pressure at `(r, θ, φ)` relative to the transducer origin.
///
/// Evaluation inside the transparent sphere (`r < r0`) is allowed with a
/// warning since the expansion need not converge there.
pub fn evaluate_exterior_field(
    c: &[Complex64],
    r0: f64,
    r: f64,
    theta: f64,
    phi: f64,
    k: f64,
) -> Result<Complex64> {
    if r <= 0.0 {
        return Err(Error::singular("exterior field evaluated at the origin"));
    }
    if r < r0 {
        log::warn!("evaluating exterior field at r = {r} inside the transparent sphere r0 = {r0}");
    }
    let order = order_of(c)?;
    let h = spherical_hankel2_upto(order, k * r)?;
    let y = spherical_harmonics_upto(order, theta, phi);
    Ok(c
        .iter()
        .zip(&y)
        .enumerate()
        .map(|(i, (ci, yi))| {
            let n = (i as f64).sqrt() as usize;
            ci * h[n] * yi
        })
        .sum())
}

/// Wave spectrum on a sphere of radius `r_meas`: `C̃_{n,m} = C_{n,m} h_n^(2)(k r_meas)`.
pub fn extrapolate_to_radius(c: &[Complex64], r_meas: f64, k: f64) -> Result<Vec<Complex64>> {
    if !(r_meas > 0.0) {
        return Err(Error::domain("measurement radius must be positive"));
    }
    let order = order_of(c)?;
    let h = spherical_hankel2_upto(order, k * r_meas)?;
    Ok(c
        .iter()
        .enumerate()
        .map(|(i, ci)| ci * h[(i as f64).sqrt() as usize])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn monopole_value() {
        let k = 2.0 * PI * 343.0 / 343.0;
        let m = monopole_coefficients(k);
        assert_eq!(m.len(), 1);
        assert_relative_eq!(m[0].im, -2.0 * PI / (4.0 * PI).sqrt(), max_relative = 1e-15);
        assert_eq!(m[0].re, 0.0);
    }

    #[test]
    fn monopole_field_is_greens_function() {
        let k = 3.7;
        let d = 2.3;
        let p = evaluate_exterior_field(&monopole_coefficients(k), 0.0, d, 1.0, 0.4, k).unwrap();
        let g = Complex64::from_polar(1.0 / (4.0 * PI * d), -k * d);
        assert!((p - g).norm() <= 1e-12 * g.norm());
        let unit = evaluate_exterior_field(&monopole_coefficients(k), 0.0, 1.0, 0.3, 0.0, k).unwrap();
        assert_relative_eq!(unit.norm(), 1.0 / (4.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn truncation_orders() {
        assert_eq!(truncation_order(0.0, 0.4), 0);
        assert_eq!(truncation_order(2.0 * PI * 1000.0 / 343.0, 0.4), 8);
        assert_eq!(truncation_order(5.0, 1.0), 5);
    }

    #[test]
    fn reciprocity_of_monopole() {
        let k = 4.2;
        let d = receiver_weights_from_reciprocity(&monopole_coefficients(k), k).unwrap();
        assert_relative_eq!(d[0].re, 1.0 / (4.0 * PI).sqrt(), max_relative = 1e-15);
        assert!(d[0].im.abs() < 1e-17);
    }

    #[test]
    fn reciprocity_sign_for_u_one() {
        let k = 2.0;
        let coeffs = vec![c(0.0, 0.0), c(0.5, -1.5), c(0.0, 0.0), c(0.0, 0.0)];
        let d = receiver_weights_from_reciprocity(&coeffs, k).unwrap();
        // D_{1,1} = -i/k · C_{1,-1}
        assert_eq!(d[3], c(0.0, -1.0 / k) * coeffs[1]);
        let back = coefficients_from_receiver_weights(&d, k).unwrap();
        for (a, b) in back.iter().zip(&coeffs) {
            assert!((a - b).norm() <= 1e-14);
        }
    }

    #[test]
    fn reciprocity_rejects_zero_k() {
        assert!(receiver_weights_from_reciprocity(&[c(1.0, 0.0)], 0.0).is_err());
    }

    #[test]
    fn point_receiver_at_origin_is_omni() {
        let k = 5.0;
        let coeffs = point_receiver_coefficients(k, 0.0, 0.3, 0.2);
        assert_eq!(coeffs.len(), 1);
        assert_relative_eq!(coeffs[0].im, -k / (4.0 * PI).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn point_receiver_matches_formula() {
        let k = 3.0;
        let (theta, phi) = (PI / 2.0, 0.0);
        let coeffs = point_receiver_coefficients(k, 1.0, theta, phi);
        assert_eq!(order_of(&coeffs).unwrap(), 3);
        for (i, cv) in coeffs.iter().enumerate() {
            let idx = crate::sph::SphIndex::from_flat(i);
            let jv = crate::sph::spherical_bessel_j(idx.n(), k);
            let y = crate::sph::spherical_harmonic(idx, theta, phi).unwrap();
            let expected = c(0.0, -k) * jv * y.conj();
            assert!((cv - expected).norm() <= 1e-15);
        }
    }

    #[test]
    fn rotation_group_properties() {
        let coeffs: Vec<_> = (0..16).map(|i| c(i as f64 * 0.1, 1.0 - i as f64 * 0.05)).collect();
        let full = rotate_azimuth(&coeffs, 2.0 * PI);
        for (a, b) in full.iter().zip(&coeffs) {
            assert!((a - b).norm() <= 1e-14);
        }
        let twice = rotate_azimuth(&rotate_azimuth(&coeffs, PI), PI);
        for (a, b) in twice.iter().zip(&full) {
            assert!((a - b).norm() <= 1e-14);
        }
        let mono = monopole_coefficients(2.0);
        assert_eq!(rotate_azimuth(&mono, 1.234), mono);
    }

    #[test]
    fn rotation_shifts_field_azimuth() {
        let k = 6.0;
        let coeffs: Vec<_> = (0..9).map(|i| c((i as f64).sin(), (i as f64).cos())).collect();
        let delta = 0.7;
        let rotated = rotate_azimuth(&coeffs, delta);
        let a = evaluate_exterior_field(&rotated, 0.1, 1.3, 0.9, 0.4, k).unwrap();
        let b = evaluate_exterior_field(&coeffs, 0.1, 1.3, 0.9, 0.4 - delta, k).unwrap();
        assert!((a - b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn exterior_field_rejects_origin() {
        assert!(evaluate_exterior_field(&monopole_coefficients(1.0), 0.0, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn extrapolated_monopole_closed_form() {
        let k = 2.5;
        let ct = extrapolate_to_radius(&monopole_coefficients(k), 1.0, k).unwrap();
        let expected = Complex64::from_polar(1.0 / (4.0 * PI).sqrt(), -k);
        assert!((ct[0] - expected).norm() <= 1e-15);
        let zero = extrapolate_to_radius(&[c(0.0, 0.0); 4], 1.0, k).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn directivity_constructors_validate() {
        assert!(Directivity::new(TransducerKind::Source, 0.1, 1, vec![100.0], vec![c(0.0, 0.0); 3]).is_err());
        assert!(Directivity::new(TransducerKind::Source, 0.1, 0, vec![100.0, 50.0], vec![c(0.0, 0.0); 2]).is_err());
        assert!(Directivity::new(TransducerKind::Source, 0.1, 0, vec![100.0], vec![c(f64::NAN, 0.0)]).is_err());
        let m = Directivity::monopole(TransducerKind::Source, vec![100.0, 200.0], &Medium::default()).unwrap();
        assert_eq!(m.max_order(), 0);
        assert!(m.require_grid(&[100.0, 200.0]).is_ok());
        assert!(m.require_grid(&[100.0, 201.0]).is_err());
    }

    #[test]
    fn point_receiver_directivity_pads_orders() {
        let d = Directivity::point_receiver(vec![100.0, 1000.0], &Medium::default(), 0.1, 1.0, 0.5, None)
            .unwrap();
        // ⌈2π·1000/343 · 0.1⌉ = 2
        assert_eq!(d.max_order(), 2);
        // at 100 Hz only order 1 is populated
        assert!(d.at(0)[4..].iter().all(|z| z.norm() == 0.0));
    }
}
