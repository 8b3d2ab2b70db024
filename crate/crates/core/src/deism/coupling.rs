//! Mode-coupling coefficients evaluated term by term.
//!
//! These are the readable reference forms. The RTF engine uses the
//! lane-oriented kernels in `kernel.rs`, which must agree with them.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::room::ImageRecord;
use crate::sph::{
    cartesian_to_spherical, spherical_hankel2_upto, spherical_harmonic, spherical_harmonics_upto,
    SphIndex, WignerTable,
};

/// Precomputed Wigner tables for source order `N` and receiver order `V`.
#[derive(Debug, Clone)]
pub struct CouplingContext {
    table: Arc<WignerTable>,
}

impl CouplingContext {
    pub fn new(n_max: usize, v_max: usize) -> Result<Self> {
        Ok(CouplingContext {
            table: Arc::new(WignerTable::build(n_max, v_max)?),
        })
    }

    pub fn from_table(table: Arc<WignerTable>) -> Self {
        CouplingContext { table }
    }

    pub fn table(&self) -> &WignerTable {
        &self.table
    }

    pub fn n_max(&self) -> usize {
        self.table.n_max()
    }

    pub fn v_max(&self) -> usize {
        self.table.v_max()
    }

    fn check(&self, n: usize, m: i32, v: usize, u: i32) -> Result<()> {
        SphIndex::new(n, m)?;
        SphIndex::new(v, u)?;
        if n > self.n_max() || v > self.v_max() {
            return Err(Error::domain(format!(
                "orders ({n}, {v}) exceed the coupling tables ({}, {})",
                self.n_max(),
                self.v_max()
            )));
        }
        Ok(())
    }
}

/// Mirror factors of image `p` for source mode `(n, m)`:
/// `Λ = (−1)^{(p_y + p_z) m + p_z n}` and `m' = (−1)^{p_x + p_y} m`.
#[inline]
pub fn mirror_factors(p: [i32; 3], n: usize, m: i32) -> (f64, i32) {
    let e = (p[1] + p[2]) as i64 * m as i64 + p[2] as i64 * n as i64;
    let lambda = if e.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let m_prime = if (p[0] + p[1]).rem_euclid(2) == 0 { m } else { -m };
    (lambda, m_prime)
}

#[inline]
pub(crate) fn i_pow(e: i64) -> Complex64 {
    match e.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[inline]
pub(crate) fn sign(e: i64) -> f64 {
    if e.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `α` from cached `h_l(kd)` and flat `Y_{l,μ}(θ, φ)` up to `l = N + V`.
pub(crate) fn alpha_from_cache(
    n: usize,
    m: i32,
    v: usize,
    u: i32,
    h: &[Complex64],
    y: &[Complex64],
    table: &WignerTable,
) -> Complex64 {
    let mu = m - u;
    let mut sum = Complex64::new(0.0, 0.0);
    for l in n.abs_diff(v)..=(n + v) {
        if mu.unsigned_abs() as usize > l {
            continue;
        }
        let xi = ((2 * n + 1) as f64 * (2 * v + 1) as f64 * (2 * l + 1) as f64 / (4.0 * PI)).sqrt();
        let w = table.w1(n, v, l) * table.w2(n, v, l, m, u) * xi;
        let ylm = y[((l * l + l) as i64 + mu as i64) as usize];
        sum += i_pow(l as i64) * h[l] * ylm * w;
    }
    4.0 * PI * i_pow(v as i64 - n as i64) * sign(m as i64) * sum
}

/// Free-field translation coefficient from source mode `(n, m)` to receiver
/// mode `(v, u)` across the vector `x0 = (d, θ, φ)` from source to receiver:
///
/// ```text
/// α = 4π i^{v−n} (−1)^m Σ_l i^l h_l(kd) Y_{l,m−u}(θ, φ) W1(n,v,l) W2(n,v,l,m,u) ξ
/// ```
pub fn single_path_coupling(
    n: usize,
    m: i32,
    v: usize,
    u: i32,
    x0: (f64, f64, f64),
    k: f64,
    ctx: &CouplingContext,
) -> Result<Complex64> {
    ctx.check(n, m, v, u)?;
    let (d, theta, phi) = x0;
    if !(d > 0.0) {
        return Err(Error::singular("mode coupling across a zero-length path"));
    }
    let lmax = n + v;
    let h = spherical_hankel2_upto(lmax, k * d)?;
    let y = spherical_harmonics_upto(lmax, theta, phi);
    Ok(alpha_from_cache(n, m, v, u, &h, &y, ctx.table()))
}

/// Reverberant coupling over a set of images,
///
/// ```text
/// γ = Σ_{p,q} β(p,q) Λ(p,m,n) α^{n,m'}_{v,u}(R^{sI→r}_{p,q})
/// ```
pub fn reverberant_coupling(
    n: usize,
    m: i32,
    v: usize,
    u: i32,
    images: &[ImageRecord],
    k: f64,
    ctx: &CouplingContext,
) -> Result<Complex64> {
    ctx.check(n, m, v, u)?;
    if images.is_empty() {
        return Err(Error::domain("reverberant coupling over an empty image set"));
    }
    let mut gamma = Complex64::new(0.0, 0.0);
    for rec in images {
        let (lambda, m_prime) = mirror_factors(rec.p, n, m);
        let (d, theta, phi) = cartesian_to_spherical(rec.r_si_to_r);
        let alpha = single_path_coupling(n, m_prime, v, u, (d, theta, phi), k, ctx)?;
        gamma += rec.attenuation * lambda * alpha;
    }
    Ok(gamma)
}

/// Deviations of the two spherical-harmonic mirror identities on one path:
///
/// ```text
/// Λ(p,m,n) Y_{n,m'}(Ω^{sI→r}_{p,q}) = Y_{n,m}(Ω^{s→rI}_{p̃,q̃})
/// Y_{n,−m}(Ω^{sI→r}) = (−1)^n Y_{n,−m}(Ω^{r→sI})
/// ```
pub fn mirror_identity_deviation(rec: &ImageRecord, n: usize, m: i32) -> Result<(f64, f64)> {
    SphIndex::new(n, m)?;
    let (lambda, m_prime) = mirror_factors(rec.p, n, m);
    let (_, t_si, p_si) = cartesian_to_spherical(rec.r_si_to_r);
    let (_, t_rev, p_rev) = cartesian_to_spherical(rec.r_s_to_ri_rev);
    let (_, t_rs, p_rs) = cartesian_to_spherical(rec.r_r_to_si);
    let lhs = lambda * spherical_harmonic(SphIndex::new(n, m_prime)?, t_si, p_si)?;
    let rhs = spherical_harmonic(SphIndex::new(n, m)?, t_rev, p_rev)?;
    let neg = SphIndex::new(n, -m)?;
    let a = spherical_harmonic(neg, t_si, p_si)?;
    let b = sign(n as i64) * spherical_harmonic(neg, t_rs, p_rs)?;
    Ok(((lhs - rhs).norm(), (a - b).norm()))
}

/// True when both mirror identities hold to `1e-12` on `rec` for `(n, m)`.
pub fn mirror_sh_identity_check(rec: &ImageRecord, n: usize, m: i32) -> bool {
    matches!(mirror_identity_deviation(rec, n, m), Ok((a, b)) if a <= 1e-12 && b <= 1e-12)
}
