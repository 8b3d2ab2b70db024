use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Order/mode pair `(n, m)` of a spherical harmonic, `|m| <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SphIndex {
    n: usize,
    m: i32,
}

impl SphIndex {
    pub fn new(n: usize, m: i32) -> Result<Self> {
        if m.unsigned_abs() as usize > n {
            return Err(Error::domain(format!(
                "spherical harmonic mode {m} exceeds order {n}"
            )));
        }
        Ok(SphIndex { n, m })
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn m(self) -> i32 {
        self.m
    }

    /// Position in a flat coefficient vector, `n² + n + m`.
    pub fn flat(self) -> usize {
        ((self.n * self.n + self.n) as i64 + self.m as i64) as usize
    }

    /// Inverse of [`SphIndex::flat`].
    pub fn from_flat(idx: usize) -> Self {
        let n = (idx as f64).sqrt() as usize;
        // guard against sqrt rounding on perfect squares
        let n = if (n + 1) * (n + 1) <= idx { n + 1 } else { n };
        let m = idx as i64 - (n * n + n) as i64;
        SphIndex { n, m: m as i32 }
    }
}

/// Number of coefficients `(N+1)²` of an expansion truncated at order `N`.
pub fn mode_count(max_order: usize) -> usize {
    (max_order + 1) * (max_order + 1)
}

/// `Y_{n,m}(θ, φ)` for a single index.
pub fn spherical_harmonic(idx: SphIndex, theta: f64, phi: f64) -> Result<Complex64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::domain(format!(
            "inclination {theta} outside [0, π]"
        )));
    }
    let n = idx.n();
    let legendre = normalized_legendre(n, theta.cos(), theta.sin());
    let am = idx.m().unsigned_abs() as usize;
    let y = Complex64::from_polar(legendre[tri(n, am)], am as f64 * phi);
    Ok(if idx.m() < 0 {
        if am % 2 == 1 {
            -y.conj()
        } else {
            y.conj()
        }
    } else {
        y
    })
}

/// All `Y_{n,m}(θ, φ)` with `n <= lmax`, in flat order `n² + n + m`.
///
/// The caller is responsible for `θ ∈ [0, π]`; this is the hot-path variant
/// used by the RTF kernels.
pub fn spherical_harmonics_upto(lmax: usize, theta: f64, phi: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); mode_count(lmax)];
    fill_spherical_harmonics(lmax, theta, phi, &mut out);
    out
}

pub(crate) fn fill_spherical_harmonics(lmax: usize, theta: f64, phi: f64, out: &mut [Complex64]) {
    let legendre = normalized_legendre(lmax, theta.cos(), theta.sin());
    // e^{imφ} by repeated multiplication would drift; use polar form per m.
    let phases: Vec<Complex64> = (0..=lmax)
        .map(|m| Complex64::from_polar(1.0, m as f64 * phi))
        .collect();
    for n in 0..=lmax {
        let centre = n * n + n;
        out[centre] = Complex64::new(legendre[tri(n, 0)], 0.0);
        for m in 1..=n {
            let y = phases[m] * legendre[tri(n, m)];
            out[centre + m] = y;
            out[centre - m] = if m % 2 == 1 { -y.conj() } else { y.conj() };
        }
    }
}

/// Converts a Cartesian vector to `(r, θ, φ)` with `θ ∈ [0, π]` measured
/// from +z and `φ ∈ (-π, π]` measured from +x.
pub fn cartesian_to_spherical(v: [f64; 3]) -> (f64, f64, f64) {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if r == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
    let phi = v[1].atan2(v[0]);
    (r, theta, phi)
}

#[inline]
fn tri(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

/// Orthonormalised associated Legendre values
/// `sqrt((2n+1)/(4π) (n-m)!/(n+m)!) P_n^m(x)` for `0 <= m <= n <= lmax`,
/// Condon–Shortley phase included. `s = sqrt(1 - x²)` is passed separately so
/// that it keeps full precision near the poles.
fn normalized_legendre(lmax: usize, x: f64, s: f64) -> Vec<f64> {
    let mut p = vec![0.0; tri(lmax, lmax) + 1];
    p[0] = 0.5 / PI.sqrt();
    for m in 1..=lmax {
        let mf = m as f64;
        p[tri(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[tri(m - 1, m - 1)];
    }
    for m in 0..lmax {
        p[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * p[tri(m, m)];
    }
    for m in 0..=lmax {
        let mf = m as f64;
        for n in (m + 2)..=lmax {
            let nf = n as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0))
                .sqrt();
            p[tri(n, m)] = a * (x * p[tri(n - 1, m)] - b * p[tri(n - 2, m)]);
        }
    }
    p
}
