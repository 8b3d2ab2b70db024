//! Per-path inner kernels of the two RTF variants.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::coupling::{i_pow, mirror_factors, sign};
use crate::error::{Error, Result};
use crate::room::ImageRecord;
use crate::sph::{
    cartesian_to_spherical, fill_spherical_harmonics, mode_count, spherical_hankel2_upto,
    WignerTable,
};

/// Coefficients whose magnitude is below this are skipped as structural zeros.
pub(crate) const ZERO_COEFFICIENT: f64 = 1e-300;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
pub(crate) fn is_structural_zero(c: &Complex64) -> bool {
    c.re.abs() < ZERO_COEFFICIENT && c.im.abs() < ZERO_COEFFICIENT
}

/// Evaluation strategy for the far-field variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LcKernel {
    /// Source and receiver sums are formed separately and multiplied,
    /// `O(N² + V²)` per path.
    #[default]
    Factorized,
    /// The double sum over all `(n, m, v, u)` pairs, `O(N² V²)` per path.
    ModePairs,
}

/// Per-frequency source terms for the full kernel:
/// `4π i^{−n} (−1)^m C^s_{n,m}`.
pub(crate) fn full_source_terms(c_src: &[Complex64]) -> Vec<Complex64> {
    c_src
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let n = (i as f64).sqrt() as i64;
            let m = i as i64 - (n * n + n);
            4.0 * PI * i_pow(-n) * sign(m) * c
        })
        .collect()
}

/// Per-frequency receiver terms for the full kernel:
/// `i^v D_{v,u}` with `D_{v,u} = i (−1)^u / k · C^r_{v,−u}`.
pub(crate) fn full_receiver_terms(c_rcv: &[Complex64], k: f64) -> Vec<Complex64> {
    let v_max = (c_rcv.len() as f64).sqrt() as usize - 1;
    let mut out = vec![ZERO; c_rcv.len()];
    for v in 0..=v_max {
        let centre = (v * v + v) as i64;
        for u in -(v as i64)..=(v as i64) {
            let c = c_rcv[(centre - u) as usize];
            out[(centre + u) as usize] = i_pow(v as i64 + 1) * (sign(u) / k) * c;
        }
    }
    out
}

/// Reusable scratch space for [`full_path_term`].
pub(crate) struct FullScratch {
    lmax: usize,
    y: Vec<Complex64>,
    /// `i^l h_l(kd) Y_{l,μ}` stored by `μ` then `l`, zero where `|μ| > l`.
    t: Vec<Complex64>,
}

impl FullScratch {
    pub(crate) fn new(n_max: usize, v_max: usize) -> Self {
        let lmax = n_max + v_max;
        FullScratch {
            lmax,
            y: vec![ZERO; mode_count(lmax)],
            t: vec![ZERO; (2 * lmax + 1) * (lmax + 1)],
        }
    }
}

/// One image's contribution to the full RTF,
///
/// ```text
/// β Σ_{n,m} Λ C^s_{n,m} Σ_{v,u} α^{n,m'}_{v,u}(R^{sI→r}) · i(−1)^u/k · C^r_{v,−u}
/// ```
///
/// Returns the value and the number of `l` terms evaluated.
pub(crate) fn full_path_term(
    rec: &ImageRecord,
    k: f64,
    src_terms: &[Complex64],
    rcv_terms: &[Complex64],
    table: &WignerTable,
    scratch: &mut FullScratch,
) -> Result<(Complex64, u64)> {
    let n_max = (src_terms.len() as f64).sqrt() as usize - 1;
    let v_max = (rcv_terms.len() as f64).sqrt() as usize - 1;
    let lmax = n_max + v_max;
    debug_assert!(lmax <= scratch.lmax);
    let (d, theta, phi) = cartesian_to_spherical(rec.r_si_to_r);
    if !(d > 0.0) {
        return Err(Error::singular(format!(
            "image p={:?} q={:?} lies on the receiver",
            rec.p, rec.q
        )));
    }
    let h = spherical_hankel2_upto(lmax, k * d)?;
    fill_spherical_harmonics(lmax, theta, phi, &mut scratch.y[..mode_count(lmax)]);
    let ld = scratch.lmax + 1;
    let mu_off = scratch.lmax as i64;
    for (l, hl) in h.iter().enumerate() {
        let a = i_pow(l as i64) * hl;
        let centre = (l * l + l) as i64;
        for mu in -(l as i64)..=(l as i64) {
            scratch.t[(mu + mu_off) as usize * ld + l] = a * scratch.y[(centre + mu) as usize];
        }
    }

    let mut total = ZERO;
    let mut ops = 0u64;
    for n in 0..=n_max {
        for m in -(n as i32)..=(n as i32) {
            let s = src_terms[((n * n + n) as i64 + m as i64) as usize];
            if is_structural_zero(&s) {
                continue;
            }
            let (lambda, mp) = mirror_factors(rec.p, n, m);
            let mut inner = ZERO;
            for v in 0..=v_max {
                let lo = n.abs_diff(v);
                let hi = n + v;
                let centre = (v * v + v) as i64;
                for u in -(v as i32)..=(v as i32) {
                    let r = rcv_terms[(centre + u as i64) as usize];
                    if is_structural_zero(&r) {
                        continue;
                    }
                    let w = &table.coupling_lane(n, v, mp, u)[lo..=hi];
                    let mu = (mp - u) as i64;
                    let base = (mu + mu_off) as usize * ld;
                    let t = &scratch.t[base + lo..=base + hi];
                    let mut acc = ZERO;
                    for (tl, wl) in t.iter().zip(w) {
                        acc += tl * wl;
                    }
                    ops += (hi - lo + 1) as u64;
                    inner += acc * r;
                }
            }
            total += lambda * s * inner;
        }
    }
    Ok((rec.attenuation * total, ops))
}

/// Per-frequency far-field terms `i^n C_{n,m}`.
pub(crate) fn lc_terms(c: &[Complex64]) -> Vec<Complex64> {
    c.iter()
        .enumerate()
        .map(|(i, c)| i_pow((i as f64).sqrt() as i64) * c)
        .collect()
}

/// One image's far-field contribution,
///
/// ```text
/// −β (4π/k) e^{−ikR}/(kR) [Σ i^n C^s_{n,m} Y_{n,m}(Ω^{s→rI}_{p̃,q̃})] [Σ i^v C^r_{v,u} Y_{v,u}(Ω^{r→sI}_{p,q})]
/// ```
///
/// Returns the value and the number of mode products formed.
pub(crate) fn lc_path_term(
    rec: &ImageRecord,
    k: f64,
    src_terms: &[Complex64],
    rcv_terms: &[Complex64],
    kernel: LcKernel,
    y_src: &mut Vec<Complex64>,
    y_rcv: &mut Vec<Complex64>,
) -> Result<(Complex64, u64)> {
    let n_max = (src_terms.len() as f64).sqrt() as usize - 1;
    let v_max = (rcv_terms.len() as f64).sqrt() as usize - 1;
    let (dist, t_r, p_r) = cartesian_to_spherical(rec.r_r_to_si);
    if !(dist > 0.0) {
        return Err(Error::singular(format!(
            "image p={:?} q={:?} lies on the receiver",
            rec.p, rec.q
        )));
    }
    let (_, t_s, p_s) = cartesian_to_spherical(rec.r_s_to_ri_rev);
    y_src.resize(src_terms.len(), ZERO);
    y_rcv.resize(rcv_terms.len(), ZERO);
    fill_spherical_harmonics(n_max, t_s, p_s, y_src);
    fill_spherical_harmonics(v_max, t_r, p_r, y_rcv);

    let (product, ops) = match kernel {
        LcKernel::Factorized => {
            let s: Complex64 = src_terms.iter().zip(y_src.iter()).map(|(a, b)| a * b).sum();
            let r: Complex64 = rcv_terms.iter().zip(y_rcv.iter()).map(|(a, b)| a * b).sum();
            (s * r, (src_terms.len() + rcv_terms.len()) as u64)
        }
        LcKernel::ModePairs => {
            let mut acc = ZERO;
            let mut ops = 0u64;
            for (a, ya) in src_terms.iter().zip(y_src.iter()) {
                if is_structural_zero(a) {
                    continue;
                }
                let sa = a * ya;
                for (b, yb) in rcv_terms.iter().zip(y_rcv.iter()) {
                    if is_structural_zero(b) {
                        continue;
                    }
                    acc += sa * (b * yb);
                    ops += 1;
                }
            }
            (acc, ops)
        }
    };
    let kr = k * dist;
    let spread = Complex64::from_polar(1.0 / kr, -kr);
    Ok((-rec.attenuation * (4.0 * PI / k) * spread * product, ops))
}
