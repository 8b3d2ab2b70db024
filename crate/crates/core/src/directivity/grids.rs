//! Sampling grids on the unit sphere.

use std::f64::consts::PI;

/// A set of sampling directions `(θ, φ)` with optional quadrature weights.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub directions: Vec<(f64, f64)>,
    /// Quadrature weights summing to 4π, when the grid is a quadrature rule.
    pub weights: Option<Vec<f64>>,
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Near-uniform Fibonacci spiral with `count` points.
pub fn fibonacci(count: usize) -> SphereGrid {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    let directions = (0..count)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / count as f64;
            let theta = z.clamp(-1.0, 1.0).acos();
            let phi = (i as f64 * golden_angle).rem_euclid(2.0 * PI);
            let phi = if phi > PI { phi - 2.0 * PI } else { phi };
            (theta, phi)
        })
        .collect();
    SphereGrid {
        directions,
        weights: None,
    }
}

/// Gauss–Legendre nodes in `cos θ` times uniform azimuth.
///
/// Integrates spherical harmonics products of total degree up to
/// `min(2 n_theta - 1, n_phi - 1)` exactly.
pub fn gauss_legendre_product(n_theta: usize, n_phi: usize) -> SphereGrid {
    let (nodes, gl_weights) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut directions = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (x, w) in nodes.iter().zip(&gl_weights) {
        let theta = x.clamp(-1.0, 1.0).acos();
        for j in 0..n_phi {
            directions.push((theta, j as f64 * dphi));
            weights.push(w * dphi);
        }
    }
    SphereGrid {
        directions,
        weights: Some(weights),
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // ∫ x^10 = 2/11, degree 10 <= 2·6 - 1
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_relative_eq!(integral, 2.0 / 11.0, epsilon = 1e-14);
    }

    #[test]
    fn product_weights_cover_sphere() {
        let g = gauss_legendre_product(5, 9);
        assert_eq!(g.len(), 45);
        let total: f64 = g.weights.unwrap().iter().sum();
        assert_relative_eq!(total, 4.0 * PI, epsilon = 1e-13);
    }

    #[test]
    fn fibonacci_points_are_distinct_and_in_range() {
        let g = fibonacci(64);
        for (i, a) in g.directions.iter().enumerate() {
            assert!((0.0..=PI).contains(&a.0));
            for b in &g.directions[i + 1..] {
                assert!((a.0 - b.0).abs() + (a.1 - b.1).abs() > 1e-6);
            }
        }
    }
}
