use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this argument `j_n` is summed from its power series.
const SERIES_LIMIT: f64 = 1.0;

/// Spherical Bessel function of the first kind `j_n(x)`.
///
/// Total on the real line: negative arguments use `j_n(-x) = (-1)^n j_n(x)`.
pub fn spherical_bessel_j(n: usize, x: f64) -> f64 {
    spherical_bessel_j_upto(n, x)[n]
}

/// `j_0(x) ..= j_nmax(x)`.
///
/// Three regimes: a power series for `|x| < 1`, upward recurrence when
/// `|x| > nmax` (stable there), and Miller's normalised downward recurrence
/// otherwise.
pub fn spherical_bessel_j_upto(nmax: usize, x: f64) -> Vec<f64> {
    if x < 0.0 {
        let mut v = spherical_bessel_j_upto(nmax, -x);
        for (n, val) in v.iter_mut().enumerate() {
            if n % 2 == 1 {
                *val = -*val;
            }
        }
        return v;
    }
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < SERIES_LIMIT {
        for (n, val) in out.iter_mut().enumerate() {
            *val = power_series_j(n, x);
        }
        return out;
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    if x > nmax as f64 {
        out[0] = j0;
        if nmax >= 1 {
            out[1] = j1;
        }
        for n in 1..nmax {
            out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        }
        return out;
    }

    // Miller: start well above both nmax and x, recur downwards with
    // arbitrary seed and rescale against the closed-form j_0 or j_1.
    let start = nmax + x.ceil() as usize + 16 + (8.0 * (nmax as f64).sqrt()) as usize;
    let mut upper = 0.0;
    let mut current = 1e-30;
    for k in (1..=start).rev() {
        let lower = (2 * k + 1) as f64 / x * current - upper;
        upper = current;
        current = lower;
        if k - 1 <= nmax {
            out[k - 1] = current;
        }
        if current.abs() > 1e250 {
            let scale = 1e-250;
            upper *= scale;
            current *= scale;
            for v in out.iter_mut() {
                *v *= scale;
            }
        }
    }
    // out[0] now holds the unnormalised j_0, and `upper` the unnormalised j_1
    let f0 = out[0];
    let f1 = if nmax >= 1 { out[1] } else { upper };
    let norm = if j0.abs() >= j1.abs() { j0 / f0 } else { j1 / f1 };
    for v in out.iter_mut() {
        *v *= norm;
    }
    out
}

fn power_series_j(n: usize, x: f64) -> f64 {
    // j_n(x) = x^n/(2n+1)!! Σ_k (-x²/2)^k / (k! (2n+3)(2n+5)…(2n+2k+1))
    let mut lead = 1.0;
    for i in 1..=n {
        lead *= x / (2 * i + 1) as f64;
    }
    let z = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= z / (k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// `y_0(x) ..= y_nmax(x)` by upward recurrence, stable for the second kind.
pub fn spherical_bessel_y_upto(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if x <= 0.0 {
        return Err(Error::singular(format!(
            "spherical Bessel y_n requires x > 0, got {x}"
        )));
    }
    let (s, c) = x.sin_cos();
    let mut out = vec![0.0; nmax + 1];
    out[0] = -c / x;
    if nmax >= 1 {
        out[1] = -c / (x * x) - s / x;
    }
    for n in 1..nmax {
        out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
    }
    Ok(out)
}

/// Spherical Hankel function of the second kind, `h_n^(2)(x) = j_n(x) - i y_n(x)`.
///
/// `x = 0` is refused rather than mapped to infinity; callers guard
/// coincident points.
pub fn spherical_hankel2(n: usize, x: f64) -> Result<Complex64> {
    Ok(spherical_hankel2_upto(n, x)?[n])
}

/// `h_0^(2)(x) ..= h_nmax^(2)(x)`.
pub fn spherical_hankel2_upto(nmax: usize, x: f64) -> Result<Vec<Complex64>> {
    let y = spherical_bessel_y_upto(nmax, x)?;
    let j = spherical_bessel_j_upto(nmax, x);
    Ok(j.iter()
        .zip(&y)
        .map(|(&jn, &yn)| Complex64::new(jn, -yn))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn j0_at_zero_and_closed_form() {
        assert_eq!(spherical_bessel_j(0, 0.0), 1.0);
        assert_eq!(spherical_bessel_j(3, 0.0), 0.0);
        let x = 1.5_f64;
        assert_relative_eq!(spherical_bessel_j(0, x), x.sin() / x, max_relative = 1e-15);
    }

    #[test]
    fn closed_form_j2_across_regimes() {
        let j2 = |x: f64| (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
        for &x in &[0.9, 1.2, 1.9, 2.5, 7.0, 40.0] {
            assert_relative_eq!(spherical_bessel_j(2, x), j2(x), max_relative = 1e-12);
        }
    }

    #[test]
    fn miller_and_upward_regimes_agree() {
        // x = 6.5 with nmax 6 takes the upward path, with nmax 12 the
        // downward path; low orders must agree.
        let up = spherical_bessel_j_upto(6, 6.5);
        let down = spherical_bessel_j_upto(12, 6.5);
        for n in 0..=6 {
            assert_relative_eq!(up[n], down[n], max_relative = 1e-12);
        }
    }

    #[test]
    fn negative_argument_parity() {
        assert_relative_eq!(
            spherical_bessel_j(3, -2.2),
            -spherical_bessel_j(3, 2.2),
            max_relative = 1e-15
        );
    }

    #[test]
    fn hankel_order_zero_closed_form() {
        let x = 2.0_f64;
        let h = spherical_hankel2(0, x).unwrap();
        let expected = Complex64::i() * Complex64::from_polar(1.0, -x) / x;
        assert_relative_eq!((h - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hankel_refuses_zero() {
        assert!(matches!(
            spherical_hankel2(0, 0.0),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn hankel_large_argument_form() {
        let x = 1000.0;
        let h = spherical_hankel2_upto(5, x).unwrap();
        // The leading-order form i^{n+1} e^{-ix}/x has relative error
        // n(n+1)/(2x) + O(x^-2).
        for (n, hn) in h.iter().enumerate() {
            let asym = Complex64::i().powu(n as u32 + 1) * Complex64::from_polar(1.0, -x) / x;
            let rel = (hn - asym).norm() / hn.norm();
            let first_order = (n * (n + 1)) as f64 / (2.0 * x);
            assert!((rel - first_order).abs() <= 1e-4, "n = {n}: {rel}");
            assert!(rel <= 1e-3 * (1 + n * (n + 1) / 2) as f64 + 1e-6, "n = {n}");
        }
    }
}
