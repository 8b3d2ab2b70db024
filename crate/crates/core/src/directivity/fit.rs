use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{validate_frequencies, Directivity, Medium, TransducerKind};
use crate::error::{Error, Result};
use crate::sph::{mode_count, spherical_hankel2_upto, spherical_harmonics_upto};

/// Above this condition number a fit is reported with a warning.
pub const CONDITION_WARNING_THRESHOLD: f64 = 1e8;

/// Singular values below `RANK_TOLERANCE · σ_max` make the grid degenerate.
const RANK_TOLERANCE: f64 = 1e-12;

/// Default lower bound on `|h_n(k r0)|` when dividing out the radial factor.
pub const DEFAULT_HANKEL_FLOOR: f64 = 1e-280;

/// Two directions closer than this (as unit vectors) count as duplicates.
const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// Complex pressure sampled at `J` directions on a sphere of radius `r0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSphereField {
    r0: f64,
    directions: Vec<(f64, f64)>,
    frequencies: Vec<f64>,
    pressure: Vec<Complex64>,
}

impl SampledSphereField {
    /// `pressure` is frequency-major: `pressure[f * J + j]`.
    pub fn new(
        r0: f64,
        directions: Vec<(f64, f64)>,
        frequencies: Vec<f64>,
        pressure: Vec<Complex64>,
    ) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::config(format!("sphere radius must be positive, got {r0}")));
        }
        validate_frequencies(&frequencies)?;
        if directions.is_empty() {
            return Err(Error::config("no sampling directions"));
        }
        for &(theta, phi) in &directions {
            if !(0.0..=std::f64::consts::PI).contains(&theta) || !phi.is_finite() {
                return Err(Error::config(format!("invalid direction ({theta}, {phi})")));
            }
        }
        let units: Vec<[f64; 3]> = directions.iter().map(|&(t, p)| unit(t, p)).collect();
        for (i, a) in units.iter().enumerate() {
            for (j, b) in units.iter().enumerate().skip(i + 1) {
                let d = (a[0] - b[0]).hypot(a[1] - b[1]).hypot(a[2] - b[2]);
                if d < DUPLICATE_TOLERANCE {
                    return Err(Error::config(format!(
                        "directions {i} and {j} coincide"
                    )));
                }
            }
        }
        if pressure.len() != directions.len() * frequencies.len() {
            return Err(Error::config(format!(
                "expected {} pressure samples, got {}",
                directions.len() * frequencies.len(),
                pressure.len()
            )));
        }
        if pressure.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::config("pressure samples must be finite"));
        }
        Ok(SampledSphereField {
            r0,
            directions,
            frequencies,
            pressure,
        })
    }

    /// Samples the exterior field of `d` on `directions` at radius `r0`.
    pub fn from_directivity(
        d: &Directivity,
        medium: &Medium,
        r0: f64,
        directions: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let mut pressure = Vec::with_capacity(directions.len() * d.frequencies().len());
        for (i, &f) in d.frequencies().iter().enumerate() {
            let k = medium.wavenumber(f);
            for &(theta, phi) in &directions {
                pressure.push(super::evaluate_exterior_field(d.at(i), d.r0(), r0, theta, phi, k)?);
            }
        }
        Self::new(r0, directions, d.frequencies().to_vec(), pressure)
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn directions(&self) -> &[(f64, f64)] {
        &self.directions
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn pressure(&self) -> &[Complex64] {
        &self.pressure
    }

    /// Samples at frequency index `i`.
    pub fn at(&self, i: usize) -> &[Complex64] {
        let j = self.directions.len();
        &self.pressure[i * j..(i + 1) * j]
    }
}

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// Per-frequency quality of a least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    pub frequency: f64,
    /// `‖A P − p‖ / ‖p‖`, zero for an all-zero field.
    pub relative_residual: f64,
    /// Condition number of the direction matrix.
    pub condition_number: f64,
}

/// Spherical wave spectrum `P_{n,m}(r0, k)` per frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSpectrum {
    pub r0: f64,
    pub max_order: usize,
    pub frequencies: Vec<f64>,
    /// Frequency-major with stride `(max_order+1)²`.
    pub values: Vec<Complex64>,
    pub diagnostics: Vec<FitDiagnostics>,
}

impl WaveSpectrum {
    pub fn at(&self, i: usize) -> &[Complex64] {
        let s = mode_count(self.max_order);
        &self.values[i * s..(i + 1) * s]
    }
}

/// Least-squares spherical-harmonic fit of a sampled field,
/// `min_P Σ_j |p_j − Σ P_{n,m} Y_{n,m}(θ_j, φ_j)|²`, for every frequency.
///
/// The direction matrix does not depend on frequency, so it is decomposed
/// once and its pseudo-inverse applied to each frequency's samples.
pub fn fit_wave_spectrum(field: &SampledSphereField, max_order: usize) -> Result<WaveSpectrum> {
    let cols = mode_count(max_order);
    let rows = field.directions.len();
    if rows < cols {
        return Err(Error::config(format!(
            "{rows} sampling directions cannot determine an order-{max_order} fit (need at least {cols})"
        )));
    }
    let mut a = DMatrix::<Complex64>::zeros(rows, cols);
    for (j, &(theta, phi)) in field.directions.iter().enumerate() {
        for (c, y) in spherical_harmonics_upto(max_order, theta, phi).into_iter().enumerate() {
            a[(j, c)] = y;
        }
    }
    // Singular values only serve the conditioning diagnostic; the solve
    // itself goes through Householder QR, which is backward stable.
    let sv = a.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(smin > RANK_TOLERANCE * smax) {
        return Err(Error::Conditioning {
            message: format!(
                "direction matrix is rank deficient for order {max_order} on {rows} directions"
            ),
            condition,
        });
    }
    if condition > CONDITION_WARNING_THRESHOLD {
        log::warn!("direction matrix condition number {condition:.3e} exceeds {CONDITION_WARNING_THRESHOLD:.0e}");
    }
    let qr = a.clone().qr();
    let q_adj = qr.q().adjoint();
    let r = qr.r();

    let nf = field.frequencies.len();
    let mut values = Vec::with_capacity(nf * cols);
    let mut diagnostics = Vec::with_capacity(nf);
    for (i, &f) in field.frequencies.iter().enumerate() {
        let b = DMatrix::from_column_slice(rows, 1, field.at(i));
        let p = r
            .solve_upper_triangular(&(&q_adj * &b))
            .ok_or_else(|| Error::Conditioning {
                message: "triangular factor is singular".into(),
                condition,
            })?;
        let resid = &a * &p - &b;
        let bn = b.norm();
        diagnostics.push(FitDiagnostics {
            frequency: f,
            relative_residual: if bn > 0.0 { resid.norm() / bn } else { resid.norm() },
            condition_number: condition,
        });
        values.extend(p.iter().copied());
    }
    Ok(WaveSpectrum {
        r0: field.r0,
        max_order,
        frequencies: field.frequencies.clone(),
        values,
        diagnostics,
    })
}

/// `C_{n,m} = P_{n,m} / h_n^(2)(k r0)` for one frequency.
pub fn spectrum_to_coefficients(
    p: &[Complex64],
    r0: f64,
    k: f64,
    floor: f64,
) -> Result<Vec<Complex64>> {
    let x = k * r0;
    if !(x > 0.0) {
        return Err(Error::domain(format!("k·r0 must be positive, got {x}")));
    }
    let order = super::order_of(p)?;
    let h = spherical_hankel2_upto(order, x)?;
    for (n, hn) in h.iter().enumerate() {
        if !(hn.norm() >= floor) {
            return Err(Error::Conditioning {
                message: format!("|h_{n}(k r0)| = {:.3e} below floor at k = {k}", hn.norm()),
                condition: 1.0 / hn.norm(),
            });
        }
    }
    Ok(p.iter()
        .enumerate()
        .map(|(i, pi)| pi / h[(i as f64).sqrt() as usize])
        .collect())
}

/// Converts a fitted wave spectrum into directivity coefficients.
pub fn wave_spectrum_to_coefficients(
    spectrum: &WaveSpectrum,
    medium: &Medium,
    kind: TransducerKind,
    hankel_floor: f64,
) -> Result<Directivity> {
    let mut coeffs = Vec::with_capacity(spectrum.values.len());
    for (i, &f) in spectrum.frequencies.iter().enumerate() {
        let k = medium.wavenumber(f);
        coeffs.extend(spectrum_to_coefficients(spectrum.at(i), spectrum.r0, k, hankel_floor)?);
    }
    Directivity::new(
        kind,
        spectrum.r0,
        spectrum.max_order,
        spectrum.frequencies.clone(),
        coeffs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directivity::grids;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_is_monopole_mode() {
        let grid = grids::fibonacci(64);
        let field = SampledSphereField::new(
            0.2,
            grid.directions.clone(),
            vec![100.0],
            vec![Complex64::new(1.0, 0.0); grid.len()],
        )
        .unwrap();
        let ws = fit_wave_spectrum(&field, 3).unwrap();
        assert!((ws.values[0].re - (4.0 * PI).sqrt()).abs() < 1e-12, "{:?}", &ws.values[..4]);
        assert!(ws.values[1..].iter().all(|v| v.norm() < 1e-12));
        assert!(ws.diagnostics[0].relative_residual < 1e-13);
    }

    #[test]
    fn too_few_directions() {
        let grid = grids::fibonacci(15);
        let field = SampledSphereField::new(
            0.2,
            grid.directions,
            vec![100.0],
            vec![Complex64::new(1.0, 0.0); 15],
        )
        .unwrap();
        assert!(matches!(fit_wave_spectrum(&field, 3), Err(Error::Config(_))));
    }

    #[test]
    fn degenerate_grid_is_conditioning_error() {
        // all directions on the equator cannot separate Y_{1,0}
        let directions: Vec<_> = (0..40).map(|i| (PI / 2.0, -PI + 0.15 * i as f64)).collect();
        let field = SampledSphereField::new(
            0.2,
            directions,
            vec![100.0],
            vec![Complex64::new(1.0, 0.0); 40],
        )
        .unwrap();
        match fit_wave_spectrum(&field, 2) {
            Err(Error::Conditioning { condition, .. }) => assert!(condition > 1e12),
            other => panic!("expected conditioning error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_directions_rejected() {
        let r = SampledSphereField::new(
            0.2,
            vec![(0.5, 0.1), (0.5, 0.1 + 2.0 * PI)],
            vec![100.0],
            vec![Complex64::new(1.0, 0.0); 2],
        );
        assert!(r.is_err());
    }

    #[test]
    fn division_identity() {
        let k = 3.0;
        let r0 = 0.5;
        let h0 = crate::sph::spherical_hankel2(0, k * r0).unwrap();
        let mut p = vec![Complex64::new(0.0, 0.0); 4];
        p[0] = h0;
        let c = spectrum_to_coefficients(&p, r0, k, DEFAULT_HANKEL_FLOOR).unwrap();
        assert!((c[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(c[1..].iter().all(|v| v.norm() == 0.0));
        assert!(spectrum_to_coefficients(&p, 0.0, k, DEFAULT_HANKEL_FLOOR).is_err());
    }

    #[test]
    fn hankel_floor_reports_order() {
        let p = vec![Complex64::new(1.0, 0.0); 4];
        match spectrum_to_coefficients(&p, 1.0, 2.0, 1e3) {
            Err(Error::Conditioning { message, .. }) => assert!(message.contains("h_0")),
            other => panic!("{other:?}"),
        }
    }
}
