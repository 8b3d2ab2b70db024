//! Seeded synthetic directivities standing in for measured or simulated data.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Directivity, Medium, TransducerKind};
use crate::error::Result;
use crate::sph::{mode_count, spherical_bessel_j_upto, spherical_harmonics_upto};

/// A cluster of point monopoles with complex weights at small offsets from
/// the transducer origin.
///
/// Its exterior field is known exactly, which makes it a physically
/// plausible directivity with controllable order:
///
/// ```text
/// C_{n,m} = -ik Σ_s w_s j_n(k a_s) Y*_{n,m}(â_s)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct PointCluster {
    pub offsets: Vec<[f64; 3]>,
    pub weights: Vec<Complex64>,
}

impl PointCluster {
    /// Between two and four points at radii in `[0.5, 1] · radius`.
    pub fn random(seed: u64, radius: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.gen_range(2..=4);
        let mut offsets = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for _ in 0..count {
            let r = radius * rng.gen_range(0.5..=1.0);
            let z: f64 = rng.gen_range(-1.0..=1.0);
            let phi: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let s = (1.0 - z * z).sqrt();
            offsets.push([r * s * phi.cos(), r * s * phi.sin(), r * z]);
            weights.push(Complex64::from_polar(
                rng.gen_range(0.5..=1.5),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            ));
        }
        PointCluster { offsets, weights }
    }

    /// Largest offset, the natural transparent-sphere radius.
    pub fn radius(&self) -> f64 {
        self.offsets
            .iter()
            .map(|a| (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt())
            .fold(0.0, f64::max)
    }

    /// Order-`max_order` coefficients at wavenumber `k`.
    pub fn coefficients(&self, k: f64, max_order: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); mode_count(max_order)];
        for (a, w) in self.offsets.iter().zip(&self.weights) {
            let (r, theta, phi) = crate::sph::cartesian_to_spherical(*a);
            let j = spherical_bessel_j_upto(max_order, k * r);
            let y = spherical_harmonics_upto(max_order, theta, phi);
            for (i, (o, yv)) in out.iter_mut().zip(&y).enumerate() {
                let n = (i as f64).sqrt() as usize;
                *o += Complex64::new(0.0, -k) * w * j[n] * yv.conj();
            }
        }
        out
    }

    /// Exact radiated pressure at `x` relative to the cluster origin.
    pub fn pressure(&self, x: [f64; 3], k: f64) -> Complex64 {
        self.offsets
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| {
                let d = ((x[0] - a[0]).powi(2) + (x[1] - a[1]).powi(2) + (x[2] - a[2]).powi(2)).sqrt();
                w * Complex64::from_polar(1.0 / (4.0 * std::f64::consts::PI * d), -k * d)
            })
            .sum()
    }

    pub fn directivity(
        &self,
        kind: TransducerKind,
        frequencies: Vec<f64>,
        medium: &Medium,
        max_order: usize,
    ) -> Result<Directivity> {
        let coeffs = frequencies
            .iter()
            .flat_map(|&f| self.coefficients(medium.wavenumber(f), max_order))
            .collect();
        Directivity::new(kind, self.radius(), max_order, frequencies, coeffs)
    }
}

/// Seeded random coefficients with unit-scale real and imaginary parts.
pub fn random_coefficients(seed: u64, max_order: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..mode_count(max_order))
        .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directivity::evaluate_exterior_field;

    #[test]
    fn expansion_matches_exact_field() {
        let cluster = PointCluster::random(7, 0.12);
        let k = 2.0 * std::f64::consts::PI * 500.0 / 343.0;
        let c = cluster.coefficients(k, 14);
        let x = [0.3, -0.4, 0.5];
        let (r, theta, phi) = crate::sph::cartesian_to_spherical(x);
        let approx = evaluate_exterior_field(&c, cluster.radius(), r, theta, phi, k).unwrap();
        let exact = cluster.pressure(x, k);
        assert!((approx - exact).norm() <= 1e-10 * exact.norm());
    }

    #[test]
    fn seeds_are_reproducible() {
        assert_eq!(PointCluster::random(3, 0.1), PointCluster::random(3, 0.1));
        assert_ne!(PointCluster::random(3, 0.1), PointCluster::random(4, 0.1));
        assert_eq!(random_coefficients(1, 2), random_coefficients(1, 2));
    }
}
