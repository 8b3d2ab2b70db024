//! Baseline image-source models: omnidirectional transducers, a directional
//! source observed in an open receiving region, and the randomised-sign
//! far-field approximation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deism::{CouplingContext, EngineOptions};
use crate::directivity::{extrapolate_to_radius, truncation_order, Directivity, Medium};
use crate::error::{Error, Result};
use crate::parallel::chunked_sum;
use crate::room::{generate_images, ImageRecord, RoomSpec, TransducerPose};
use crate::sph::{
    cartesian_to_spherical, spherical_bessel_j_upto, spherical_hankel2_upto,
    spherical_harmonics_upto,
};
use crate::spectrum::{Method, RtfSpectrum};

/// Free-space Green's function `e^{−ikd}/(4πd)`.
pub fn greens_function(d: f64, k: f64) -> Result<Complex64> {
    if !(d > 0.0) {
        return Err(Error::singular("Green's function at zero distance"));
    }
    Ok(Complex64::from_polar(1.0 / (4.0 * PI * d), -k * d))
}

/// `Σ β(p,q) G(‖R^{sI→r}_{p,q}‖, k)` at one wavenumber.
pub fn ism_omni_at(images: &[ImageRecord], k: f64, chunk_size: usize) -> Result<Complex64> {
    chunked_sum(images, chunk_size, |rec| {
        Ok((rec.attenuation * greens_function(rec.length(), k)?, 1))
    })
    .map(|x| x.0)
}

fn check_poses(room: &RoomSpec, src: &TransducerPose, rcv: &TransducerPose) -> Result<()> {
    room.validate()?;
    src.validate_in(room)?;
    rcv.validate_in(room)?;
    if src.position == rcv.position {
        return Err(Error::singular("source and receiver coincide"));
    }
    Ok(())
}

/// Image-source RTF between omnidirectional transducers.
pub fn rtf_ism_omni(
    room: &RoomSpec,
    src: &TransducerPose,
    rcv: &TransducerPose,
    max_reflection_order: u32,
    frequencies: &[f64],
    opts: &EngineOptions,
) -> Result<RtfSpectrum> {
    check_poses(room, src, rcv)?;
    let images = generate_images(
        room,
        src.position,
        rcv.position,
        max_reflection_order,
        opts.image_cube,
        opts.angle_convention,
    )?;
    let values = frequencies
        .par_iter()
        .map(|&f| ism_omni_at(&images, room.medium.wavenumber(f), opts.chunk_size))
        .collect::<Result<Vec<_>>>()?;
    RtfSpectrum::new(frequencies.to_vec(), values, Some(Method::IsmOmni))
}

/// Observation point of the open receiving region, `d_y` metres from the
/// receiver origin in direction `(θ_y, φ_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverOffset {
    pub d_y: f64,
    #[serde(default)]
    pub theta_y: f64,
    #[serde(default)]
    pub phi_y: f64,
}

impl ReceiverOffset {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_y >= 0.0 && self.d_y.is_finite()) {
            return Err(Error::config("receiver offset must be non-negative"));
        }
        if !(0.0..=PI).contains(&self.theta_y) || !self.phi_y.is_finite() {
            return Err(Error::config("receiver offset direction out of range"));
        }
        Ok(())
    }
}

/// Generalised image-source RTF at one wavenumber,
///
/// ```text
/// H = Σ_{n,m} Σ_{v,u} C^s_{n,m} γ^{n,m}_{v,u} j_v(k d_y) Y_{v,u}(θ_y, φ_y),   v <= V
/// ```
///
/// with `γ` assembled term by term from per-image caches of `h_l` and `Y_l`.
pub fn gism_at(
    c_src: &[Complex64],
    offset: &ReceiverOffset,
    v_max: usize,
    images: &[ImageRecord],
    k: f64,
    ctx: &CouplingContext,
    chunk_size: usize,
) -> Result<Complex64> {
    let n_max = crate::directivity::order_of(c_src)?;
    if n_max > ctx.n_max() || v_max > ctx.v_max() {
        return Err(Error::domain("orders exceed the coupling tables"));
    }
    let j = spherical_bessel_j_upto(v_max, k * offset.d_y);
    let y_obs = spherical_harmonics_upto(v_max, offset.theta_y, offset.phi_y);
    let obs: Vec<Complex64> = y_obs
        .iter()
        .enumerate()
        .map(|(i, y)| j[(i as f64).sqrt() as usize] * y)
        .collect();
    let lmax = n_max + v_max;
    chunked_sum(images, chunk_size, |rec| {
        let (d, theta, phi) = cartesian_to_spherical(rec.r_si_to_r);
        if !(d > 0.0) {
            return Err(Error::singular("image lies on the receiver"));
        }
        let h = spherical_hankel2_upto(lmax, k * d)?;
        let y = spherical_harmonics_upto(lmax, theta, phi);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, cs) in c_src.iter().enumerate() {
            let idx = crate::sph::SphIndex::from_flat(i);
            let (lambda, mp) = crate::deism::mirror_factors(rec.p, idx.n(), idx.m());
            for (iv, ob) in obs.iter().enumerate() {
                let vi = crate::sph::SphIndex::from_flat(iv);
                let alpha = crate::deism::coupling_from_cache(
                    idx.n(),
                    mp,
                    vi.n(),
                    vi.m(),
                    &h,
                    &y,
                    ctx.table(),
                );
                acc += cs * lambda * alpha * ob;
            }
        }
        Ok((rec.attenuation * acc, 0))
    })
    .map(|x| x.0)
}

/// Generalised image-source RTF with `V = ⌈k d_y⌉` per frequency, capped at
/// `v_cap`. The receiver yaw rotates the observation direction.
#[allow(clippy::too_many_arguments)]
pub fn rtf_gism(
    source: &Directivity,
    offset: &ReceiverOffset,
    room: &RoomSpec,
    src: &TransducerPose,
    rcv: &TransducerPose,
    max_reflection_order: u32,
    frequencies: &[f64],
    v_cap: usize,
    opts: &EngineOptions,
) -> Result<RtfSpectrum> {
    check_poses(room, src, rcv)?;
    offset.validate()?;
    source.require_grid(frequencies)?;
    let images = generate_images(
        room,
        src.position,
        rcv.position,
        max_reflection_order,
        opts.image_cube,
        opts.angle_convention,
    )?;
    let source = source.rotated(src.yaw);
    let offset = ReceiverOffset {
        phi_y: offset.phi_y + rcv.yaw,
        ..*offset
    };
    let medium = room.medium;
    let v_global = frequencies
        .iter()
        .map(|&f| truncation_order(medium.wavenumber(f), offset.d_y).min(v_cap))
        .max()
        .unwrap_or(0);
    let ctx = CouplingContext::new(source.max_order(), v_global)?;
    let values = frequencies
        .par_iter()
        .enumerate()
        .map(|(i, &f)| {
            let k = medium.wavenumber(f);
            let v = truncation_order(k, offset.d_y).min(v_cap);
            gism_at(source.at(i), &offset, v, &images, k, &ctx, opts.chunk_size)
        })
        .collect::<Result<Vec<_>>>()?;
    RtfSpectrum::new(frequencies.to_vec(), values, Some(Method::Gism))
}

/// Distribution of the per-path random sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    /// `B ∈ {+1, −1}` with equal probability.
    #[default]
    PlusMinusOne,
    /// `B` uniform on `[−1, 1]`.
    UniformInterval,
    /// `B = +1` on every path.
    AllPositive,
}

/// Settings of the randomised-sign baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FsrrConfig {
    pub rng_seed: u64,
    /// Radius of the sphere the coefficients are extrapolated to.
    pub measurement_radius: f64,
    pub sign_mode: SignMode,
}

impl Default for FsrrConfig {
    fn default() -> Self {
        FsrrConfig {
            rng_seed: 0,
            measurement_radius: 1.0,
            sign_mode: SignMode::PlusMinusOne,
        }
    }
}

/// One sign per path, drawn in image order from a seeded ChaCha8 stream.
pub fn path_signs(count: usize, cfg: &FsrrConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    (0..count)
        .map(|_| match cfg.sign_mode {
            SignMode::PlusMinusOne => {
                if rng.gen_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
            SignMode::UniformInterval => rng.gen_range(-1.0..=1.0),
            SignMode::AllPositive => 1.0,
        })
        .collect()
}

/// Randomised-sign far-field RTF at one wavenumber from extrapolated
/// coefficients `C̃`, with `M_{p,q} = β(p,q)`:
///
/// ```text
/// H = Σ B M e^{−ikR}/R [Σ C̃^s_{n,m} Y_{n,m}(Ω^{s→rI}_{p̃,q̃})] [Σ C̃^r_{v,u} Y_{v,u}(Ω^{r→sI}_{p,q})]
/// ```
pub fn fsrr_at(
    ct_src: &[Complex64],
    ct_rcv: &[Complex64],
    images: &[ImageRecord],
    signs: &[f64],
    k: f64,
    chunk_size: usize,
) -> Result<Complex64> {
    let n_max = crate::directivity::order_of(ct_src)?;
    let v_max = crate::directivity::order_of(ct_rcv)?;
    if signs.len() != images.len() {
        return Err(Error::domain("one sign per image is required"));
    }
    let paired: Vec<(&ImageRecord, f64)> = images.iter().zip(signs.iter().copied()).collect();
    chunked_sum(&paired, chunk_size, |(rec, b)| {
        let (r, t_r, p_r) = cartesian_to_spherical(rec.r_r_to_si);
        if !(r > 0.0) {
            return Err(Error::singular("image lies on the receiver"));
        }
        let (_, t_s, p_s) = cartesian_to_spherical(rec.r_s_to_ri_rev);
        let ys = spherical_harmonics_upto(n_max, t_s, p_s);
        let yr = spherical_harmonics_upto(v_max, t_r, p_r);
        let s: Complex64 = ct_src.iter().zip(&ys).map(|(c, y)| c * y).sum();
        let q: Complex64 = ct_rcv.iter().zip(&yr).map(|(c, y)| c * y).sum();
        let spread = Complex64::from_polar(1.0 / r, -k * r);
        Ok((b * rec.attenuation * spread * s * q, 0))
    })
    .map(|x| x.0)
}

/// Randomised-sign far-field RTF.
#[allow(clippy::too_many_arguments)]
pub fn rtf_fsrr(
    source: &Directivity,
    receiver: &Directivity,
    room: &RoomSpec,
    src: &TransducerPose,
    rcv: &TransducerPose,
    max_reflection_order: u32,
    frequencies: &[f64],
    cfg: &FsrrConfig,
    opts: &EngineOptions,
) -> Result<RtfSpectrum> {
    check_poses(room, src, rcv)?;
    source.require_grid(frequencies)?;
    receiver.require_grid(frequencies)?;
    if !(cfg.measurement_radius > 0.0) {
        return Err(Error::config("measurement radius must be positive"));
    }
    let images = generate_images(
        room,
        src.position,
        rcv.position,
        max_reflection_order,
        opts.image_cube,
        opts.angle_convention,
    )?;
    let signs = path_signs(images.len(), cfg);
    let source = source.rotated(src.yaw);
    let receiver = receiver.rotated(rcv.yaw);
    let medium: Medium = room.medium;
    let values = frequencies
        .par_iter()
        .enumerate()
        .map(|(i, &f)| {
            let k = medium.wavenumber(f);
            let cs = extrapolate_to_radius(source.at(i), cfg.measurement_radius, k)?;
            let cr = extrapolate_to_radius(receiver.at(i), cfg.measurement_radius, k)?;
            fsrr_at(&cs, &cr, &images, &signs, k, opts.chunk_size)
        })
        .collect::<Result<Vec<_>>>()?;
    RtfSpectrum::new(frequencies.to_vec(), values, Some(Method::Fsrr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directivity::monopole_coefficients;
    use crate::room::{AngleConvention, ImageCube};

    fn room() -> RoomSpec {
        RoomSpec {
            dimensions: [4.0, 3.0, 2.5],
            zeta: 18.0,
            medium: Medium::default(),
        }
    }

    #[test]
    fn greens_function_basics() {
        assert!((greens_function(1.0, 0.0).unwrap().re - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let a = greens_function(1.5, 2.0).unwrap().norm();
        let b = greens_function(3.0, 2.0).unwrap().norm();
        assert!((a / b - 2.0).abs() < 1e-14);
        assert!(greens_function(0.0, 1.0).is_err());
        // half a wavelength of phase
        let f = 500.0;
        let k = 2.0 * PI * f / 343.0;
        let g = greens_function(343.0 / f * 0.5, k).unwrap();
        assert!((g.arg().abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn rigid_first_order_is_seven_terms() {
        let mut r = room();
        r.zeta = 1e15;
        let src = [1.1, 1.1, 1.3];
        let rcv = [2.9, 1.9, 1.3];
        let images = generate_images(&r, src, rcv, 1, ImageCube::Auto, AngleConvention::Absolute).unwrap();
        let k = 3.0;
        let h = ism_omni_at(&images, k, 4).unwrap();
        let mut expected = Complex64::new(0.0, 0.0);
        let mirrors: [[f64; 3]; 7] = [
            src,
            [-src[0], src[1], src[2]],
            [8.0 - src[0], src[1], src[2]],
            [src[0], -src[1], src[2]],
            [src[0], 6.0 - src[1], src[2]],
            [src[0], src[1], -src[2]],
            [src[0], src[1], 5.0 - src[2]],
        ];
        for m in mirrors {
            let d = ((m[0] - rcv[0]).powi(2) + (m[1] - rcv[1]).powi(2) + (m[2] - rcv[2]).powi(2)).sqrt();
            expected += Complex64::from_polar(1.0 / (4.0 * PI * d), -k * d);
        }
        assert!((h - expected).norm() <= 1e-12 * expected.norm());
    }

    #[test]
    fn fsrr_single_term() {
        let rec = ImageRecord::free_field([0.0; 3], [2.0, 0.0, 0.0]);
        let k = 1.7;
        let c = extrapolate_to_radius(&monopole_coefficients(k), 1.0, k).unwrap();
        let h = fsrr_at(&c, &c, &[rec], &[1.0], k, 1).unwrap();
        // C̃_00 Y_00 = e^{−ik}/(4π) on each side, no 1/(4π) in the spreading term
        let expected = Complex64::from_polar(0.5, -2.0 * k) * Complex64::from_polar(1.0 / (16.0 * PI * PI), -2.0 * k);
        assert!((h - expected).norm() <= 1e-14 * expected.norm());
    }

    #[test]
    fn signs_are_seeded() {
        let cfg = FsrrConfig::default();
        assert_eq!(path_signs(50, &cfg), path_signs(50, &cfg));
        assert!(path_signs(50, &cfg).iter().all(|b| b.abs() == 1.0));
        let other = FsrrConfig { rng_seed: 9, ..cfg };
        assert_ne!(path_signs(50, &cfg), path_signs(50, &other));
    }
}
