//! Image-source baselines and the directional model against each other.

use num_complex::Complex64;
use proptest::prelude::*;

use deism::deism::{deism_at, single_path_full, single_path_lc, CouplingContext, EngineOptions};
use deism::directivity::synthetic::random_coefficients;
use deism::directivity::{monopole_coefficients, point_receiver_coefficients, truncation_order, Medium};
use deism::ism::{gism_at, greens_function, rtf_ism_omni, ReceiverOffset};
use deism::room::{generate_images, AngleConvention, ImageCube, ImageRecord, RoomSpec, TransducerPose};

fn room() -> RoomSpec {
    RoomSpec {
        dimensions: [4.0, 3.0, 2.5],
        zeta: 18.0,
        medium: Medium::default(),
    }
}

fn interior() -> impl Strategy<Value = [f64; 3]> {
    [0.6f64..3.4, 0.6f64..2.4, 0.6f64..1.9]
}

fn images(s: [f64; 3], r: [f64; 3], order: u32) -> Vec<ImageRecord> {
    generate_images(&room(), s, r, order, ImageCube::Auto, AngleConvention::Absolute).unwrap()
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
}

fn far_apart(s: [f64; 3], r: [f64; 3], min: f64) -> bool {
    (0..3).map(|a| (s[a] - r[a]).powi(2)).sum::<f64>().sqrt() > min
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn omni_ism_is_reciprocal(s in interior(), r in interior(), order in 0u32..=6) {
        prop_assume!(far_apart(s, r, 1e-3));
        let freqs = [63.0, 250.0, 910.0];
        let o = EngineOptions::default();
        let a = rtf_ism_omni(&room(), &TransducerPose::new(s, 0.0), &TransducerPose::new(r, 0.0), order, &freqs, &o).unwrap();
        let b = rtf_ism_omni(&room(), &TransducerPose::new(r, 0.0), &TransducerPose::new(s, 0.0), order, &freqs, &o).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(close(*x, *y, 1e-12), "{} vs {}", x, y);
        }
    }

    #[test]
    fn monopoles_reduce_to_greens_function_per_path(s in interior(), r in interior(), f in 30.0f64..1000.0) {
        prop_assume!(far_apart(s, r, 1e-3));
        let k = Medium::default().wavenumber(f);
        let c = monopole_coefficients(k);
        let ctx = CouplingContext::new(0, 0).unwrap();
        for rec in images(s, r, 3) {
            let g = rec.attenuation * greens_function(rec.length(), k).unwrap();
            prop_assert!(close(single_path_full(&rec, &c, &c, k, &ctx).unwrap(), g, 1e-12));
            prop_assert!(close(single_path_lc(&rec, &c, &c, k).unwrap(), g, 1e-12));
        }
    }

    #[test]
    fn both_models_are_bilinear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0, s in interior(), r in interior()) {
        prop_assume!(far_apart(s, r, 0.5));
        let k = 4.0;
        let scale = Complex64::new(a, b);
        let (n, v) = (3, 2);
        let cs1 = random_coefficients(seed, n);
        let cs2 = random_coefficients(seed ^ 1, n);
        let cr1 = random_coefficients(seed ^ 2, v);
        let cr2 = random_coefficients(seed ^ 3, v);
        let mix = |x: &[Complex64], y: &[Complex64]| -> Vec<Complex64> { x.iter().zip(y).map(|(p, q)| scale * p + q).collect() };
        let ctx = CouplingContext::new(n, v).unwrap();
        for rec in images(s, r, 1) {
            let full = |cs: &[Complex64], cr: &[Complex64]| single_path_full(&rec, cs, cr, k, &ctx).unwrap();
            let lc = |cs: &[Complex64], cr: &[Complex64]| single_path_lc(&rec, cs, cr, k).unwrap();
            let lhs = full(&mix(&cs1, &cs2), &cr1);
            let rhs = scale * full(&cs1, &cr1) + full(&cs2, &cr1);
            prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + lhs.norm()));
            let lhs = full(&cs1, &mix(&cr1, &cr2));
            let rhs = scale * full(&cs1, &cr1) + full(&cs1, &cr2);
            prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + lhs.norm()));
            let lhs = lc(&mix(&cs1, &cs2), &mix(&cr1, &cr2));
            let rhs = scale * scale * lc(&cs1, &cr1) + scale * lc(&cs1, &cr2) + scale * lc(&cs2, &cr1) + lc(&cs2, &cr2);
            prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn gism_is_linear_in_source(seed in any::<u64>(), a in -2.0f64..2.0, d_y in 0.0f64..0.2, theta_y in 0.0f64..3.1, phi_y in -3.1f64..3.1) {
        let k = 6.0;
        let offset = ReceiverOffset { d_y, theta_y, phi_y };
        let v = truncation_order(k, d_y);
        let ctx = CouplingContext::new(2, v).unwrap();
        let imgs = images([1.0, 1.2, 1.1], [2.9, 1.7, 1.4], 2);
        let c1 = random_coefficients(seed, 2);
        let c2 = random_coefficients(seed ^ 9, 2);
        let mix: Vec<Complex64> = c1.iter().zip(&c2).map(|(x, y)| a * x + y).collect();
        let h = |c: &[Complex64]| gism_at(c, &offset, v, &imgs, k, &ctx, 16).unwrap();
        let lhs = h(&mix);
        let rhs = a * h(&c1) + h(&c2);
        prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + lhs.norm()));
    }
}

#[test]
fn point_receiver_model_matches_generalised_ism() {
    let medium = Medium::default();
    let s = [1.1, 0.9, 1.3];
    let r = [2.8, 2.1, 1.2];
    let imgs = images(s, r, 3);
    for d_y in [0.05, 0.1] {
        for f in [80.0, 400.0, 1000.0] {
            let k = medium.wavenumber(f);
            let (theta_y, phi_y) = (1.2, -0.7);
            let cs = random_coefficients(5, 3);
            let cr = point_receiver_coefficients(k, d_y, theta_y, phi_y);
            let v = truncation_order(k, d_y);
            let ctx = CouplingContext::new(3, v).unwrap();
            let (deism, _) = deism_at(&imgs, &cs, &cr, k, ctx.table(), 16).unwrap();
            let gism = gism_at(&cs, &ReceiverOffset { d_y, theta_y, phi_y }, v, &imgs, k, &ctx, 16).unwrap();
            assert!(close(deism, gism, 1e-10), "d_y={d_y} f={f}: {deism} vs {gism}");
        }
    }
}

#[test]
fn far_field_error_shrinks_with_distance() {
    let k = Medium::default().wavenumber(500.0);
    let cs = random_coefficients(21, 3);
    let cr = random_coefficients(22, 3);
    let ctx = CouplingContext::new(3, 3).unwrap();
    let mut last = f64::INFINITY;
    let mut errors = Vec::new();
    for d in [1.0, 4.0, 16.0, 64.0] {
        let rec = ImageRecord::free_field([0.0; 3], [d * 0.6, d * 0.0, d * 0.8]);
        let full = single_path_full(&rec, &cs, &cr, k, &ctx).unwrap();
        let lc = single_path_lc(&rec, &cs, &cr, k).unwrap();
        let e = (full - lc).norm() / full.norm();
        assert!(e < last, "d={d}: {e} >= {last}");
        last = e;
        errors.push(e);
    }
    // First-order decay: a fourfold distance gives about a fourfold drop.
    let ratio = errors[2] / errors[3];
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}
