//! Image generation invariants of the shoebox room.

use std::collections::HashSet;

use proptest::prelude::*;

use deism::directivity::Medium;
use deism::room::{
    generate_images, reflection_coefficient, AngleConvention, ImageCube, RoomSpec,
};

fn len(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// A room with two distinct interior points.
fn scene() -> impl Strategy<Value = (RoomSpec, [f64; 3], [f64; 3])> {
    ([1.5f64..8.0, 1.5f64..8.0, 1.5f64..5.0], 1.0f64..60.0).prop_flat_map(|(dims, zeta)| {
        let point = move || {
            [
                0.1f64..dims[0] - 0.1,
                0.1f64..dims[1] - 0.1,
                0.1f64..dims[2] - 0.1,
            ]
        };
        (Just(dims), Just(zeta), point(), point()).prop_map(|(dimensions, zeta, s, r)| {
            (
                RoomSpec {
                    dimensions,
                    zeta,
                    medium: Medium::default(),
                },
                s,
                r,
            )
        })
    })
}

/// Number of integer triples with `|a| + |b| + |c| = o`.
fn lattice_shell(o: u32) -> usize {
    let o = o as i32;
    let mut count = 0;
    for a in -o..=o {
        for b in -o..=o {
            let c = o - a.abs() - b.abs();
            if c == 0 {
                count += 1;
            } else if c > 0 {
                count += 2;
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn image_counts_match_lattice_shells((room, s, r) in scene(), order in 0u32..=6) {
        let images = generate_images(&room, s, r, order, ImageCube::Auto, AngleConvention::Absolute).unwrap();
        let expected: usize = (0..=order).map(lattice_shell).sum();
        prop_assert_eq!(images.len(), expected);
        // Each lattice point (2q − p) appears exactly once.
        let keys: HashSet<[i32; 3]> = images
            .iter()
            .map(|i| std::array::from_fn(|a| 2 * i.q[a] - i.p[a]))
            .collect();
        prop_assert_eq!(keys.len(), images.len());
        for w in images.windows(2) {
            prop_assert!(w[0].reflection_order <= w[1].reflection_order);
        }
    }

    #[test]
    fn swapping_endpoints_preserves_path_lengths((room, s, r) in scene(), order in 0u32..=5) {
        let fwd = generate_images(&room, s, r, order, ImageCube::Auto, AngleConvention::Absolute).unwrap();
        let bwd = generate_images(&room, r, s, order, ImageCube::Auto, AngleConvention::Absolute).unwrap();
        let mut a: Vec<f64> = fwd.iter().map(|i| i.length()).collect();
        let mut b: Vec<f64> = bwd.iter().map(|i| i.length()).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0), "{} vs {}", x, y);
        }
    }

    #[test]
    fn reversed_path_has_same_length((room, s, r) in scene(), order in 0u32..=5) {
        let images = generate_images(&room, s, r, order, ImageCube::Auto, AngleConvention::Absolute).unwrap();
        for rec in &images {
            prop_assert!((len(rec.r_s_to_ri_rev) - rec.length()).abs() <= 1e-12 * rec.length().max(1.0));
            prop_assert_eq!(rec.r_r_to_si, rec.r_si_to_r.map(|x| -x));
            let hits: u32 = rec.wall_hits.iter().map(|h| h[0] + h[1]).sum();
            prop_assert_eq!(hits, rec.reflection_order);
        }
    }

    #[test]
    fn attenuation_is_bounded_product((room, s, r) in scene(), order in 0u32..=4) {
        let images = generate_images(&room, s, r, order, ImageCube::Auto, AngleConvention::Absolute).unwrap();
        for rec in &images {
            prop_assert!(rec.attenuation.abs() <= 1.0);
            let mut expect = 1.0;
            for a in 0..3 {
                let beta = reflection_coefficient(room.zeta, rec.incident_angles[a]);
                prop_assert!((-1.0..1.0).contains(&beta));
                // The absolute convention keeps every incident angle in [0, π/2].
                prop_assert!(rec.incident_angles[a] >= 0.0 && rec.incident_angles[a] <= std::f64::consts::FRAC_PI_2 + 1e-15);
                expect *= beta.powi((rec.wall_hits[a][0] + rec.wall_hits[a][1]) as i32);
            }
            prop_assert!((rec.attenuation - expect).abs() <= 1e-15);
            if rec.is_direct() {
                prop_assert_eq!(rec.attenuation, 1.0);
            }
        }
    }
}

#[test]
fn rigid_walls_reflect_fully() {
    for theta in [0.0, 0.3, 1.0, 1.5] {
        let b = reflection_coefficient(1e12, theta);
        assert!((b - 1.0).abs() < 1e-9, "{b}");
    }
    // ζ cos θ = 1 is the matched, fully absorbing case.
    assert!(reflection_coefficient(2.0, std::f64::consts::FRAC_PI_3).abs() < 1e-15);
}
