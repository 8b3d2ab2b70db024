//! Special functions shared by every method: complex spherical harmonics,
//! spherical Bessel and Hankel functions, and Wigner 3j symbols with their
//! precomputed lookup tables.
//!
//! Spherical harmonics use the complex orthonormal convention with the
//! Condon–Shortley phase,
//!
//! ```text
//! Y_{n,m}(θ, φ) = sqrt((2n+1)/(4π) · (n-m)!/(n+m)!) · P_n^m(cos θ) · e^{imφ}
//! ```
//!
//! where `P_n^m` carries the `(-1)^m` factor, so that
//! `Y*_{n,m} = (-1)^m Y_{n,-m}`. All radial functions use the outgoing
//! `e^{-ikr}` convention, i.e. the spherical Hankel function of the second
//! kind.

mod bessel;
mod harmonics;
mod wigner;

pub use bessel::{
    spherical_bessel_j, spherical_bessel_j_upto, spherical_bessel_y_upto, spherical_hankel2,
    spherical_hankel2_upto,
};
pub use harmonics::{
    cartesian_to_spherical, mode_count, spherical_harmonic, spherical_harmonics_upto, SphIndex,
};
pub(crate) use harmonics::fill_spherical_harmonics;
pub use wigner::{wigner3j, WignerTable, DEFAULT_TABLE_BUDGET_BYTES};
