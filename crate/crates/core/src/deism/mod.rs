//! Room transfer functions between directional transducers.
//!
//! The full model couples every source mode to every receiver mode through
//! the translation coefficients of each image path. The far-field variant
//! replaces the translation by its large-distance limit, which factorises
//! into a source term and a receiver term per path.

mod coupling;
mod kernel;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directivity::{truncation_order, Directivity, Medium, TransducerKind};
use crate::error::{Error, Result};
use crate::parallel::{chunked_sum, DEFAULT_CHUNK_SIZE};
use crate::room::{generate_images, AngleConvention, ImageCube, ImageRecord, RoomSpec, TransducerPose};
use crate::sph::{mode_count, WignerTable, DEFAULT_TABLE_BUDGET_BYTES};
use crate::spectrum::{Method, RtfSpectrum};

pub use coupling::{
    mirror_factors, mirror_identity_deviation, mirror_sh_identity_check, reverberant_coupling,
    single_path_coupling, CouplingContext,
};
pub use kernel::LcKernel;
pub(crate) use coupling::alpha_from_cache as coupling_from_cache;

/// Which form of the model to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    Lc,
}

impl Variant {
    pub fn method(self) -> Method {
        match self {
            Variant::Full => Method::Deism,
            Variant::Lc => Method::DeismLc,
        }
    }
}

/// Numerical knobs shared by every RTF driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineOptions {
    /// Paths per reduction chunk; results are bit-identical for a fixed value.
    pub chunk_size: usize,
    pub angle_convention: AngleConvention,
    pub image_cube: ImageCube,
    pub lc_kernel: LcKernel,
    /// Truncate each frequency at `⌈k r0⌉` instead of the files' order.
    pub adaptive_truncation: bool,
    pub table_budget_bytes: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            chunk_size: DEFAULT_CHUNK_SIZE,
            angle_convention: AngleConvention::Absolute,
            image_cube: ImageCube::Auto,
            lc_kernel: LcKernel::Factorized,
            adaptive_truncation: false,
            table_budget_bytes: DEFAULT_TABLE_BUDGET_BYTES,
        }
    }
}

/// Everything needed to compute one room transfer function.
#[derive(Debug, Clone)]
pub struct DeismRequest {
    pub room: RoomSpec,
    pub source_pose: TransducerPose,
    pub receiver_pose: TransducerPose,
    pub source: Directivity,
    pub receiver: Directivity,
    pub max_reflection_order: u32,
    pub frequencies: Vec<f64>,
    /// Replaces the direct path, e.g. with a measured or simulated response
    /// when the transparent spheres overlap.
    pub direct_path_override: Option<RtfSpectrum>,
}

impl DeismRequest {
    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        self.source_pose.validate_in(&self.room)?;
        self.receiver_pose.validate_in(&self.room)?;
        if self.source.kind() != TransducerKind::Source {
            return Err(Error::config("source directivity is labelled as a receiver"));
        }
        if self.receiver.kind() != TransducerKind::Receiver {
            return Err(Error::config("receiver directivity is labelled as a source"));
        }
        self.source.require_grid(&self.frequencies)?;
        self.receiver.require_grid(&self.frequencies)?;
        if let Some(o) = &self.direct_path_override {
            if o.frequencies() != self.frequencies.as_slice() {
                return Err(Error::config(
                    "direct-path override frequency grid does not match the request",
                ));
            }
        } else {
            let d = crate::room::norm(sub(self.receiver_pose.position, self.source_pose.position));
            let reach = self.source.r0() + self.receiver.r0();
            if d <= reach {
                return Err(Error::config(format!(
                    "source and receiver spheres overlap (distance {d:.4} m, radii sum {reach:.4} m); \
                     supply a direct-path override"
                )));
            }
        }
        Ok(())
    }

    pub fn images(&self, opts: &EngineOptions) -> Result<Vec<ImageRecord>> {
        generate_images(
            &self.room,
            self.source_pose.position,
            self.receiver_pose.position,
            self.max_reflection_order,
            opts.image_cube,
            opts.angle_convention,
        )
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Result of an RTF computation with its work counters.
#[derive(Debug, Clone)]
pub struct RtfRun {
    pub spectrum: RtfSpectrum,
    /// Inner-loop operations: `l` terms for the full model, mode products
    /// (or mode terms when factorised) for the far-field model.
    pub operations: u64,
    pub paths: usize,
}

/// Full-model RTF for `req`.
pub fn rtf_deism(req: &DeismRequest, opts: &EngineOptions) -> Result<RtfSpectrum> {
    Ok(run(req, Variant::Full, opts)?.spectrum)
}

/// Far-field RTF for `req`.
pub fn rtf_deism_lc(req: &DeismRequest, opts: &EngineOptions) -> Result<RtfSpectrum> {
    Ok(run(req, Variant::Lc, opts)?.spectrum)
}

/// Validates `req`, builds its images, applies device yaw and evaluates.
pub fn run(req: &DeismRequest, variant: Variant, opts: &EngineOptions) -> Result<RtfRun> {
    req.validate()?;
    let images = req.images(opts)?;
    let source = req.source.rotated(req.source_pose.yaw);
    let receiver = req.receiver.rotated(req.receiver_pose.yaw);
    let direct = req.direct_path_override.as_ref().map(|o| o.values());
    rtf_from_images(
        &images,
        &source,
        &receiver,
        &req.frequencies,
        &req.room.medium,
        variant,
        opts,
        direct,
    )
}

/// The request with the two devices exchanged: positions, yaws and
/// directivity roles all swap.
pub fn exchanged(req: &DeismRequest) -> DeismRequest {
    DeismRequest {
        source_pose: req.receiver_pose,
        receiver_pose: req.source_pose,
        source: req.receiver.clone().with_kind(TransducerKind::Source),
        receiver: req.source.clone().with_kind(TransducerKind::Receiver),
        ..req.clone()
    }
}

/// Reciprocity diagnostic: `‖H − H'‖ / ‖H‖` where `H'` is computed for the
/// [`exchanged`] request. Reciprocity is expected physically but is not
/// guaranteed by the model, so this is reported rather than enforced.
pub fn reciprocity_deviation(req: &DeismRequest, variant: Variant, opts: &EngineOptions) -> Result<f64> {
    let forward = run(req, variant, opts)?.spectrum;
    let backward = run(&exchanged(req), variant, opts)?.spectrum;
    crate::metrics::relative_l2(&forward, &backward)
}

/// Evaluates a precomputed image set. Directivities are used as given (no
/// yaw), and `direct_override`, when present, replaces the direct path.
#[allow(clippy::too_many_arguments)]
pub fn rtf_from_images(
    images: &[ImageRecord],
    source: &Directivity,
    receiver: &Directivity,
    frequencies: &[f64],
    medium: &Medium,
    variant: Variant,
    opts: &EngineOptions,
    direct_override: Option<&[Complex64]>,
) -> Result<RtfRun> {
    source.require_grid(frequencies)?;
    receiver.require_grid(frequencies)?;
    if let Some(o) = direct_override {
        if o.len() != frequencies.len() {
            return Err(Error::config("direct-path override length does not match the grid"));
        }
    }
    let kept: Vec<ImageRecord>;
    let paths: &[ImageRecord] = if direct_override.is_some() {
        kept = images.iter().filter(|r| !r.is_direct()).copied().collect();
        &kept
    } else {
        images
    };
    let table = match variant {
        Variant::Full => Some(WignerTable::build_with_budget(
            source.max_order(),
            receiver.max_order(),
            opts.table_budget_bytes,
        )?),
        Variant::Lc => None,
    };

    let per_frequency: Vec<(Complex64, u64)> = frequencies
        .par_iter()
        .enumerate()
        .map(|(i, &f)| {
            let k = medium.wavenumber(f);
            let c_src = truncate(source, i, k, opts.adaptive_truncation);
            let c_rcv = truncate(receiver, i, k, opts.adaptive_truncation);
            let (mut h, ops) = match &table {
                Some(t) => deism_at(paths, c_src, c_rcv, k, t, opts.chunk_size)?,
                None => deism_lc_at(paths, c_src, c_rcv, k, opts.lc_kernel, opts.chunk_size)?,
            };
            if let Some(o) = direct_override {
                h += o[i];
            }
            Ok((h, ops))
        })
        .collect::<Result<_>>()?;

    let operations = per_frequency.iter().map(|x| x.1).sum();
    let values = per_frequency.into_iter().map(|x| x.0).collect();
    Ok(RtfRun {
        spectrum: RtfSpectrum::new(frequencies.to_vec(), values, Some(variant.method()))?,
        operations,
        paths: paths.len(),
    })
}

fn truncate(d: &Directivity, i: usize, k: f64, adaptive: bool) -> &[Complex64] {
    let c = d.at(i);
    if adaptive {
        let order = truncation_order(k, d.r0()).min(d.max_order());
        &c[..mode_count(order)]
    } else {
        c
    }
}

/// Full-model RTF at one wavenumber from coefficient slices (orders are
/// implied by their lengths and must fit `table`).
pub fn deism_at(
    images: &[ImageRecord],
    c_src: &[Complex64],
    c_rcv: &[Complex64],
    k: f64,
    table: &WignerTable,
    chunk_size: usize,
) -> Result<(Complex64, u64)> {
    let n_max = crate::directivity::order_of(c_src)?;
    let v_max = crate::directivity::order_of(c_rcv)?;
    if n_max > table.n_max() || v_max > table.v_max() {
        return Err(Error::domain("coefficient orders exceed the Wigner tables"));
    }
    if !(k > 0.0) {
        return Err(Error::domain("wavenumber must be positive"));
    }
    let src_terms = kernel::full_source_terms(c_src);
    let rcv_terms = kernel::full_receiver_terms(c_rcv, k);
    chunked_sum_with(
        images,
        chunk_size,
        || kernel::FullScratch::new(n_max, v_max),
        |rec, scratch| kernel::full_path_term(rec, k, &src_terms, &rcv_terms, table, scratch),
    )
}

/// Far-field RTF at one wavenumber from coefficient slices.
pub fn deism_lc_at(
    images: &[ImageRecord],
    c_src: &[Complex64],
    c_rcv: &[Complex64],
    k: f64,
    lc_kernel: LcKernel,
    chunk_size: usize,
) -> Result<(Complex64, u64)> {
    crate::directivity::order_of(c_src)?;
    crate::directivity::order_of(c_rcv)?;
    if !(k > 0.0) {
        return Err(Error::domain("wavenumber must be positive"));
    }
    let src_terms = kernel::lc_terms(c_src);
    let rcv_terms = kernel::lc_terms(c_rcv);
    chunked_sum_with(
        images,
        chunk_size,
        || (Vec::new(), Vec::new()),
        |rec, (ys, yr)| kernel::lc_path_term(rec, k, &src_terms, &rcv_terms, lc_kernel, ys, yr),
    )
}

/// Far-field contribution of a single path.
pub fn single_path_lc(
    rec: &ImageRecord,
    c_src: &[Complex64],
    c_rcv: &[Complex64],
    k: f64,
) -> Result<Complex64> {
    deism_lc_at(std::slice::from_ref(rec), c_src, c_rcv, k, LcKernel::Factorized, 1).map(|x| x.0)
}

/// Full-model contribution of a single path.
pub fn single_path_full(
    rec: &ImageRecord,
    c_src: &[Complex64],
    c_rcv: &[Complex64],
    k: f64,
    ctx: &CouplingContext,
) -> Result<Complex64> {
    deism_at(std::slice::from_ref(rec), c_src, c_rcv, k, ctx.table(), 1).map(|x| x.0)
}

/// [`chunked_sum`] with per-chunk scratch state.
fn chunked_sum_with<S, I, F>(
    images: &[ImageRecord],
    chunk_size: usize,
    init: I,
    term: F,
) -> Result<(Complex64, u64)>
where
    I: Fn() -> S + Sync,
    F: Fn(&ImageRecord, &mut S) -> Result<(Complex64, u64)> + Sync,
{
    let chunks: Vec<&[ImageRecord]> = images.chunks(chunk_size.max(1)).collect();
    chunked_sum(&chunks, 1, |chunk| {
        let mut scratch = init();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut ops = 0;
        for rec in chunk.iter() {
            let (v, o) = term(rec, &mut scratch)?;
            acc += v;
            ops += o;
        }
        Ok((acc, ops))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directivity::{monopole_coefficients, synthetic::random_coefficients};
    use crate::sph::cartesian_to_spherical;

    #[test]
    fn free_field_monopoles_give_greens_function() {
        let rec = ImageRecord::free_field([0.0; 3], [1.0, 2.0, -0.5]);
        let d = rec.length();
        let k = 4.4;
        let c = monopole_coefficients(k);
        let ctx = CouplingContext::new(0, 0).unwrap();
        let g = Complex64::from_polar(1.0 / (4.0 * std::f64::consts::PI * d), -k * d);
        let full = single_path_full(&rec, &c, &c, k, &ctx).unwrap();
        let lc = single_path_lc(&rec, &c, &c, k).unwrap();
        assert!((full - g).norm() <= 1e-13 * g.norm());
        assert!((lc - g).norm() <= 1e-13 * g.norm());
    }

    #[test]
    fn kernel_matches_reference_coupling() {
        let room = RoomSpec {
            dimensions: [4.0, 3.0, 2.5],
            zeta: 18.0,
            medium: Medium::default(),
        };
        let images = generate_images(&room, [1.1, 1.1, 1.3], [2.9, 1.9, 1.3], 2, ImageCube::Auto, AngleConvention::Absolute)
            .unwrap();
        let (n_max, v_max) = (2, 3);
        let ctx = CouplingContext::new(n_max, v_max).unwrap();
        let cs = random_coefficients(1, n_max);
        let cr = random_coefficients(2, v_max);
        let k = 3.1;
        let (fast, ops) = deism_at(&images, &cs, &cr, k, ctx.table(), 5).unwrap();
        let mut slow = Complex64::new(0.0, 0.0);
        for (i, s) in cs.iter().enumerate() {
            let si = crate::sph::SphIndex::from_flat(i);
            for v in 0..=v_max {
                for u in -(v as i32)..=(v as i32) {
                    let gamma = reverberant_coupling(si.n(), si.m(), v, u, &images, k, &ctx).unwrap();
                    let alpha_t = Complex64::new(0.0, if u % 2 == 0 { 1.0 } else { -1.0 } / k) * gamma;
                    let cr_neg = cr[((v * v + v) as i32 - u) as usize];
                    slow += s * alpha_t * cr_neg;
                }
            }
        }
        assert!((fast - slow).norm() <= 1e-12 * slow.norm(), "{fast} vs {slow}");
        // 9 × 16 mode pairs, Σ over l-range sizes per pair, per image
        assert!(ops > 0 && ops % images.len() as u64 == 0);
    }

    #[test]
    fn lc_kernels_agree() {
        let rec = ImageRecord::free_field([0.0; 3], [3.0, -1.0, 0.7]);
        let cs = random_coefficients(3, 3);
        let cr = random_coefficients(4, 2);
        let a = deism_lc_at(&[rec], &cs, &cr, 2.0, LcKernel::Factorized, 1).unwrap();
        let b = deism_lc_at(&[rec], &cs, &cr, 2.0, LcKernel::ModePairs, 1).unwrap();
        assert!((a.0 - b.0).norm() <= 1e-13 * a.0.norm());
        assert_eq!(a.1, 16 + 9);
        assert_eq!(b.1, 16 * 9);
    }

    #[test]
    fn full_operation_count_for_order_five() {
        let rec = ImageRecord::free_field([0.0; 3], [3.0, -1.0, 0.7]);
        let c = random_coefficients(5, 5);
        let table = WignerTable::build(5, 5).unwrap();
        let (_, ops) = deism_at(&[rec], &c, &c, 1.0, &table, 1).unwrap();
        let expected: u64 = (0..=5u64)
            .flat_map(|n| (0..=5u64).map(move |v| (2 * n + 1) * (2 * v + 1) * (n + v - n.abs_diff(v) + 1)))
            .sum();
        assert_eq!(ops, expected);
        assert_eq!(expected, 8294);
    }

    #[test]
    fn far_field_approaches_full() {
        let cs = random_coefficients(6, 2);
        let cr = random_coefficients(7, 2);
        let k = 2.0 * std::f64::consts::PI * 500.0 / 343.0;
        let ctx = CouplingContext::new(2, 2).unwrap();
        let err = |d: f64| {
            let x = [d * 0.6, d * 0.48, d * 0.64];
            let rec = ImageRecord::free_field([0.0; 3], x);
            let _ = cartesian_to_spherical(x);
            let f = single_path_full(&rec, &cs, &cr, k, &ctx).unwrap();
            let l = single_path_lc(&rec, &cs, &cr, k).unwrap();
            (f - l).norm() / f.norm()
        };
        let e10 = err(10.0);
        let e100 = err(100.0);
        assert!(e100 < e10 / 5.0, "{e10} {e100}");
    }
}
