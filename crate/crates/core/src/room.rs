//! Shoebox rooms and their image sources.
//!
//! An image is indexed per axis by `p ∈ {0, 1}` (mirrored or not) and an
//! integer cell shift `q`; along axis `a` it sits at
//! `x_s − 2 p x_s + 2 q L`. The number of wall hits on that axis is
//! `|2q − p|`, split into `|q − p|` hits on the wall at `0` and `|q|` hits on
//! the wall at `L`.

use serde::{Deserialize, Serialize};

use crate::directivity::Medium;
use crate::error::{Error, Result};

/// Rectangular room with uniform, frequency-independent normalised wall
/// impedance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSpec {
    /// `(L_x, L_y, L_z)` in metres.
    pub dimensions: [f64; 3],
    pub zeta: f64,
    #[serde(default)]
    pub medium: Medium,
}

impl RoomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dimensions.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::config(format!(
                "room dimensions must be positive, got {:?}",
                self.dimensions
            )));
        }
        if !(self.zeta.is_finite() && self.zeta > 0.0) {
            return Err(Error::config(format!("impedance must be positive, got {}", self.zeta)));
        }
        self.medium.validate()
    }
}

/// Position of a device and its yaw (rotation about +z, radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransducerPose {
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw: f64,
}

impl TransducerPose {
    pub fn new(position: [f64; 3], yaw: f64) -> Self {
        TransducerPose { position, yaw }
    }

    /// Requires the position to lie strictly inside the room.
    pub fn validate_in(&self, room: &RoomSpec) -> Result<()> {
        if !self.yaw.is_finite() {
            return Err(Error::config("yaw must be finite"));
        }
        for a in 0..3 {
            let x = self.position[a];
            if !(x > 0.0 && x < room.dimensions[a]) {
                return Err(Error::config(format!(
                    "position {:?} is not strictly inside the room {:?}",
                    self.position, room.dimensions
                )));
            }
        }
        Ok(())
    }
}

/// How incident angles are derived from a path vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleConvention {
    /// `θ_a = arccos(|R_a| / ‖R‖)`, always in `[0, π/2]`.
    #[default]
    Absolute,
    /// `θ_a = arccos(R_a / ‖R‖)` applied to `R^{sI→r}` as printed.
    Signed,
}

/// Extent of the cell cube `q ∈ [−N_m, N_m]³` searched for images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageCube {
    /// `N_m = ⌈(N_o + 1)/2⌉`, which always covers every admissible order.
    #[default]
    Auto,
    /// A raw `N_m`; images of admissible order outside the cube are lost.
    Fixed(u32),
}

impl ImageCube {
    pub fn extent(self, max_reflection_order: u32) -> i32 {
        match self {
            ImageCube::Auto => (max_reflection_order + 1).div_ceil(2) as i32,
            ImageCube::Fixed(n) => n as i32,
        }
    }
}

/// One reflection path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageRecord {
    pub p: [i32; 3],
    pub q: [i32; 3],
    /// Indices of the reversed path with the same length.
    pub p_rev: [i32; 3],
    pub q_rev: [i32; 3],
    pub image_position: [f64; 3],
    /// `R^{sI→r}`, from the image source to the receiver.
    pub r_si_to_r: [f64; 3],
    /// `R^{r→sI} = −R^{sI→r}`.
    pub r_r_to_si: [f64; 3],
    /// `R^{s→rI}` evaluated at the reversed indices.
    pub r_s_to_ri_rev: [f64; 3],
    /// Hits on the walls at `0` and at `L` per axis.
    pub wall_hits: [[u32; 2]; 3],
    pub incident_angles: [f64; 3],
    pub attenuation: f64,
    pub reflection_order: u32,
}

impl ImageRecord {
    /// Free-field path between two points, with no room involved.
    pub fn free_field(src: [f64; 3], rcv: [f64; 3]) -> Self {
        let r = sub(rcv, src);
        ImageRecord {
            p: [0; 3],
            q: [0; 3],
            p_rev: [0; 3],
            q_rev: [0; 3],
            image_position: src,
            r_si_to_r: r,
            r_r_to_si: neg(r),
            r_s_to_ri_rev: r,
            wall_hits: [[0; 2]; 3],
            incident_angles: incident_angles_unchecked(r, AngleConvention::Absolute),
            attenuation: 1.0,
            reflection_order: 0,
        }
    }

    pub fn is_direct(&self) -> bool {
        self.p == [0; 3] && self.q == [0; 3]
    }

    pub fn length(&self) -> f64 {
        norm(self.r_si_to_r)
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn neg(a: [f64; 3]) -> [f64; 3] {
    [-a[0], -a[1], -a[2]]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Image source position `x_s − 2 p x_s + 2 q L` per axis.
pub fn image_position(p: [i32; 3], q: [i32; 3], src: [f64; 3], room: &RoomSpec) -> [f64; 3] {
    std::array::from_fn(|a| {
        src[a] - 2.0 * p[a] as f64 * src[a] + 2.0 * q[a] as f64 * room.dimensions[a]
    })
}

/// `(R^{sI→r}_{p,q}, R^{s→rI}_{p,q})`, the path from the image source to the
/// receiver and from the source to the receiver image.
pub fn path_vectors(
    p: [i32; 3],
    q: [i32; 3],
    src: [f64; 3],
    rcv: [f64; 3],
    room: &RoomSpec,
) -> ([f64; 3], [f64; 3]) {
    let si_to_r = std::array::from_fn(|a| {
        let (pa, qa, l) = (p[a] as f64, q[a] as f64, room.dimensions[a]);
        rcv[a] - src[a] + 2.0 * pa * src[a] - 2.0 * qa * l
    });
    let s_to_ri = std::array::from_fn(|a| {
        let (pa, qa, l) = (p[a] as f64, q[a] as f64, room.dimensions[a]);
        rcv[a] - src[a] - 2.0 * pa * rcv[a] + 2.0 * qa * l
    });
    (si_to_r, s_to_ri)
}

/// Indices `(p̃, q̃)` of the path from the source to a receiver image that
/// has the same length as the path from image `(p, q)` to the receiver.
///
/// Per axis: odd `|2q − p|` keeps `(p, q)`; even `|2q − p|` takes
/// `q' = ⌊(p − 2q)/2⌋` and `p' = 2q − p + 2q'`.
pub fn reversed_path_indices(p: [i32; 3], q: [i32; 3]) -> ([i32; 3], [i32; 3]) {
    let mut pr = p;
    let mut qr = q;
    for a in 0..3 {
        let s = 2 * q[a] - p[a];
        if s.rem_euclid(2) == 0 {
            let q_prime = (p[a] - 2 * q[a]).div_euclid(2);
            qr[a] = q_prime;
            pr[a] = s + 2 * q_prime;
        }
    }
    (pr, qr)
}

/// Incident angle per axis for a path travelling along `r`.
pub fn incident_angles(r: [f64; 3], convention: AngleConvention) -> Result<[f64; 3]> {
    if !(norm(r) > 0.0) {
        return Err(Error::domain("incident angles of a zero-length path"));
    }
    Ok(incident_angles_unchecked(r, convention))
}

fn incident_angles_unchecked(r: [f64; 3], convention: AngleConvention) -> [f64; 3] {
    let len = norm(r);
    std::array::from_fn(|a| {
        let c = match convention {
            AngleConvention::Absolute => r[a].abs() / len,
            AngleConvention::Signed => r[a] / len,
        };
        c.clamp(-1.0, 1.0).acos()
    })
}

/// Plane-wave reflection coefficient `β = (ζ cos θ − 1)/(ζ cos θ + 1)`.
pub fn reflection_coefficient(zeta: f64, theta: f64) -> f64 {
    let zc = zeta * theta.cos();
    (zc - 1.0) / (zc + 1.0)
}

/// Wall hits per axis: `|q − p|` on the wall at `0`, `|q|` on the wall at `L`.
pub fn wall_hits(p: [i32; 3], q: [i32; 3]) -> [[u32; 2]; 3] {
    std::array::from_fn(|a| [(q[a] - p[a]).unsigned_abs(), q[a].unsigned_abs()])
}

/// `β(p, q) = Π_a β_a^{|q_a − p_a| + |q_a|}` with `β_a` evaluated at the
/// path's incident angle on axis `a`.
pub fn path_attenuation(p: [i32; 3], q: [i32; 3], angles: [f64; 3], zeta: f64) -> f64 {
    let hits = wall_hits(p, q);
    let mut beta = 1.0;
    for a in 0..3 {
        let exponent = hits[a][0] + hits[a][1];
        if exponent > 0 {
            beta *= reflection_coefficient(zeta, angles[a]).powi(exponent as i32);
        }
    }
    beta
}

pub fn reflection_order(p: [i32; 3], q: [i32; 3]) -> u32 {
    (0..3).map(|a| (2 * q[a] - p[a]).unsigned_abs()).sum()
}

/// Builds the record for one image.
pub fn image_record(
    p: [i32; 3],
    q: [i32; 3],
    src: [f64; 3],
    rcv: [f64; 3],
    room: &RoomSpec,
    convention: AngleConvention,
) -> Result<ImageRecord> {
    let (si_to_r, _) = path_vectors(p, q, src, rcv, room);
    let (p_rev, q_rev) = reversed_path_indices(p, q);
    let (_, s_to_ri_rev) = path_vectors(p_rev, q_rev, src, rcv, room);
    let angles = incident_angles(si_to_r, convention)
        .map_err(|_| Error::singular(format!("image p={p:?} q={q:?} coincides with the receiver")))?;
    Ok(ImageRecord {
        p,
        q,
        p_rev,
        q_rev,
        image_position: image_position(p, q, src, room),
        r_si_to_r: si_to_r,
        r_r_to_si: neg(si_to_r),
        r_s_to_ri_rev: s_to_ri_rev,
        wall_hits: wall_hits(p, q),
        incident_angles: angles,
        attenuation: path_attenuation(p, q, angles, room.zeta),
        reflection_order: reflection_order(p, q),
    })
}

/// All images with reflection order at most `max_order`, sorted by
/// `(order, q_z, q_y, q_x, p_z, p_y, p_x)`.
pub fn generate_images(
    room: &RoomSpec,
    src: [f64; 3],
    rcv: [f64; 3],
    max_order: u32,
    cube: ImageCube,
    convention: AngleConvention,
) -> Result<Vec<ImageRecord>> {
    let nm = cube.extent(max_order);
    let mut keys = Vec::new();
    for qz in -nm..=nm {
        for qy in -nm..=nm {
            for qx in -nm..=nm {
                for pz in 0..2 {
                    for py in 0..2 {
                        for px in 0..2 {
                            let p = [px, py, pz];
                            let q = [qx, qy, qz];
                            let order = reflection_order(p, q);
                            if order <= max_order {
                                keys.push((order, [qz, qy, qx, pz, py, px]));
                            }
                        }
                    }
                }
            }
        }
    }
    keys.sort_unstable();
    keys.into_iter()
        .map(|(_, [qz, qy, qx, pz, py, px])| {
            image_record([px, py, pz], [qx, qy, qz], src, rcv, room, convention)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_room() -> RoomSpec {
        RoomSpec {
            dimensions: [4.0, 3.0, 2.5],
            zeta: 18.0,
            medium: Medium::default(),
        }
    }

    #[test]
    fn image_positions() {
        let room = paper_room();
        let src = [1.1, 1.1, 1.3];
        assert_eq!(image_position([0; 3], [0; 3], src, &room), src);
        assert!((image_position([1, 0, 0], [0; 3], src, &room)[0] + 1.1).abs() < 1e-15);
        assert!((image_position([0; 3], [1, 0, 0], src, &room)[0] - 9.1).abs() < 1e-15);
    }

    #[test]
    fn direct_path_vectors() {
        let room = paper_room();
        let (a, b) = path_vectors([0; 3], [0; 3], [1.0, 1.0, 1.0], [2.0, 1.5, 1.2], &room);
        assert_eq!(a, b);
        assert_eq!(a, [1.0, 0.5, 0.19999999999999996]);
    }

    #[test]
    fn reversed_indices_examples() {
        assert_eq!(reversed_path_indices([1, 0, 0], [0; 3]), ([1, 0, 0], [0; 3]));
        assert_eq!(reversed_path_indices([0; 3], [-1, 0, 0]), ([0; 3], [1, 0, 0]));
        assert_eq!(reversed_path_indices([0; 3], [0; 3]), ([0; 3], [0; 3]));
        assert_eq!(reversed_path_indices([1, 1, 0], [3, -2, 2]), ([1, 1, 0], [3, -2, -2]));
    }

    #[test]
    fn even_reflection_reversed_length() {
        let room = paper_room();
        let src = [1.1, 1.1, 1.3];
        let rcv = [2.9, 1.9, 1.3];
        let (si_to_r, s_to_ri) = path_vectors([0; 3], [-1, 0, 0], src, rcv, &room);
        assert!((norm(si_to_r) - norm(s_to_ri)).abs() > 1e-3);
        let (_, s_to_ri_plus) = path_vectors([0; 3], [1, 0, 0], src, rcv, &room);
        assert!((norm(si_to_r) - norm(s_to_ri_plus)).abs() < 1e-12);
    }

    #[test]
    fn angles() {
        let a = incident_angles([1.0, 0.0, 0.0], AngleConvention::Absolute).unwrap();
        assert_eq!(a[0], 0.0);
        assert!((a[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = incident_angles([s, s, 0.0], AngleConvention::Absolute).unwrap();
        assert!((b[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(
            incident_angles([-0.3, 0.2, 0.9], AngleConvention::Absolute).unwrap(),
            incident_angles([0.3, -0.2, -0.9], AngleConvention::Absolute).unwrap()
        );
        assert!(incident_angles([0.0; 3], AngleConvention::Absolute).is_err());
    }

    #[test]
    fn reflection_coefficients() {
        let b = reflection_coefficient(18.0, 0.0);
        assert!((b - 17.0 / 19.0).abs() < 1e-15);
        assert!((1.0 - b * b - 0.1994).abs() < 1e-3);
        assert!((reflection_coefficient(1e12, 0.3) - 1.0).abs() < 1e-11);
        assert!((reflection_coefficient(18.0, std::f64::consts::FRAC_PI_2) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn attenuation_examples() {
        assert_eq!(path_attenuation([0; 3], [0; 3], [0.3; 3], 18.0), 1.0);
        let angles = incident_angles([1.0, 0.0, 0.0], AngleConvention::Absolute).unwrap();
        assert!((path_attenuation([1, 0, 0], [0; 3], angles, 18.0) - 17.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn small_image_counts() {
        let room = paper_room();
        let count = |o| {
            generate_images(&room, [1.1, 1.1, 1.3], [2.9, 1.9, 1.3], o, ImageCube::Auto, AngleConvention::Absolute)
                .unwrap()
                .len()
        };
        assert_eq!(count(0), 1);
        assert_eq!(count(1), 7);
    }

    #[test]
    fn ordering_is_by_order_first() {
        let room = paper_room();
        let images = generate_images(&room, [1.1, 1.1, 1.3], [2.9, 1.9, 1.3], 4, ImageCube::Auto, AngleConvention::Absolute)
            .unwrap();
        assert!(images[0].is_direct());
        assert!(images.windows(2).all(|w| w[0].reflection_order <= w[1].reflection_order));
    }

    #[test]
    fn cube_extent_covers_order() {
        for o in 0..30u32 {
            let nm = ImageCube::Auto.extent(o);
            // |2q − p| <= N_o needs |q| <= (N_o + 1)/2
            assert!(2 * nm > o as i32, "{o}");
        }
    }

    #[test]
    fn pose_validation() {
        let room = paper_room();
        assert!(TransducerPose::new([1.0, 1.0, 1.0], 0.0).validate_in(&room).is_ok());
        assert!(TransducerPose::new([0.0, 1.0, 1.0], 0.0).validate_in(&room).is_err());
        assert!(TransducerPose::new([1.0, 3.0, 1.0], 0.0).validate_in(&room).is_err());
    }
}
