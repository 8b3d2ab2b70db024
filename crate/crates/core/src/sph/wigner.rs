use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default memory budget for [`WignerTable::build`], 512 MiB.
pub const DEFAULT_TABLE_BUDGET_BYTES: usize = 512 << 20;

const MAX_EXACT_FACTORIAL: usize = 170;

fn factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut f = vec![1.0; MAX_EXACT_FACTORIAL + 1];
        for i in 1..=MAX_EXACT_FACTORIAL {
            f[i] = f[i - 1] * i as f64;
        }
        f
    })
}

fn ln_factorial(n: i64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Wigner 3j symbol
///
/// ```text
/// ( j1 j2 j3 )
/// ( m1 m2 m3 )
/// ```
///
/// evaluated with the Racah sum. Returns zero whenever a selection rule
/// fails (mode sum, triangle condition, `|m_i| <= j_i`, negative `j_i`).
pub fn wigner3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if j1 < 0 || j2 < 0 || j3 < 0 {
        return 0.0;
    }
    if m1 + m2 + m3 != 0 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    if j3 < (j1 - j2).abs() || j3 > j1 + j2 {
        return 0.0;
    }
    // (j1 j2 j3; 0 0 0) vanishes for odd j1+j2+j3
    if m1 == 0 && m2 == 0 && (j1 + j2 + j3) % 2 != 0 {
        return 0.0;
    }

    let (j1, j2, j3, m1, m2, m3) = (
        j1 as i64, j2 as i64, j3 as i64, m1 as i64, m2 as i64, m3 as i64,
    );
    let t_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let t_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let sign = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };

    if (j1 + j2 + j3 + 1) as usize <= MAX_EXACT_FACTORIAL {
        let f = factorials();
        let fac = |k: i64| f[k as usize];
        let delta = fac(j1 + j2 - j3) * fac(j1 - j2 + j3) * fac(-j1 + j2 + j3)
            / fac(j1 + j2 + j3 + 1);
        let pre = (delta
            * fac(j1 + m1)
            * fac(j1 - m1)
            * fac(j2 + m2)
            * fac(j2 - m2)
            * fac(j3 + m3)
            * fac(j3 - m3))
        .sqrt();
        let mut sum = 0.0;
        for t in t_min..=t_max {
            let denom = fac(t)
                * fac(j3 - j2 + t + m1)
                * fac(j3 - j1 + t - m2)
                * fac(j1 + j2 - j3 - t)
                * fac(j1 - t - m1)
                * fac(j2 - t + m2);
            let term = 1.0 / denom;
            sum += if t % 2 == 0 { term } else { -term };
        }
        sign * pre * sum
    } else {
        // Large arguments: log-space terms, reduced accuracy.
        let lf = ln_factorial;
        let ln_pre = 0.5
            * (lf(j1 + j2 - j3) + lf(j1 - j2 + j3) + lf(-j1 + j2 + j3) - lf(j1 + j2 + j3 + 1)
                + lf(j1 + m1)
                + lf(j1 - m1)
                + lf(j2 + m2)
                + lf(j2 - m2)
                + lf(j3 + m3)
                + lf(j3 - m3));
        let mut sum = 0.0;
        for t in t_min..=t_max {
            let ln_den = lf(t)
                + lf(j3 - j2 + t + m1)
                + lf(j3 - j1 + t - m2)
                + lf(j1 + j2 - j3 - t)
                + lf(j1 - t - m1)
                + lf(j2 - t + m2);
            let term = (ln_pre - ln_den).exp();
            sum += if t % 2 == 0 { term } else { -term };
        }
        sign * sum
    }
}

/// Dense lookup tables of the two Wigner 3j families used by the mode
/// coupling coefficients:
///
/// ```text
/// W1(n, v, l)       = ( n  v  l   ; 0  0  0   )
/// W2(n, v, l, m, u) = ( n  v  l   ; -m u  m-u )
/// ```
///
/// for `n <= N`, `v <= V`, `0 <= l <= N + V`. Entries that violate a
/// selection rule are stored as explicit zeros so that inner loops can run
/// over `l ∈ [|n-v|, n+v]` without branching. `l` is the fastest-varying
/// index, so [`WignerTable::w2_lane`] returns a contiguous slice over `l`.
///
/// The table is immutable after construction and may be shared freely
/// between threads.
#[derive(Debug, Clone)]
pub struct WignerTable {
    n_max: usize,
    v_max: usize,
    w1: Vec<f64>,
    w1_xi: Vec<f64>,
    w2: Vec<f64>,
    coupling: Vec<f64>,
}

impl WignerTable {
    /// Builds tables for all `n <= n_max`, `v <= v_max`, failing with
    /// [`Error::Resource`] if they would need more than `budget_bytes`.
    pub fn build_with_budget(n_max: usize, v_max: usize, budget_bytes: usize) -> Result<Self> {
        let l_dim = n_max + v_max + 1;
        let len1 = (n_max + 1) * (v_max + 1) * l_dim;
        let len2 = len1 * (2 * n_max + 1) * (2 * v_max + 1);
        let bytes = (2 * len1 + 2 * len2).saturating_mul(std::mem::size_of::<f64>());
        if bytes > budget_bytes {
            return Err(Error::Resource(format!(
                "Wigner tables for N = {n_max}, V = {v_max} need {bytes} bytes, budget is {budget_bytes}"
            )));
        }

        let mut table = WignerTable {
            n_max,
            v_max,
            w1: vec![0.0; len1],
            w1_xi: vec![0.0; len1],
            w2: vec![0.0; len2],
            coupling: vec![0.0; len2],
        };
        for n in 0..=n_max {
            for v in 0..=v_max {
                let l_lo = n.abs_diff(v);
                for l in l_lo..=(n + v) {
                    let i1 = table.w1_offset(n, v) + l;
                    let w = wigner3j(n as i32, v as i32, l as i32, 0, 0, 0);
                    let xi = ((2 * n + 1) as f64 * (2 * v + 1) as f64 * (2 * l + 1) as f64
                        / (4.0 * PI))
                        .sqrt();
                    table.w1[i1] = w;
                    table.w1_xi[i1] = w * xi;
                }
                for m in -(n as i32)..=(n as i32) {
                    for u in -(v as i32)..=(v as i32) {
                        let base = table.w2_offset(n, v, m, u);
                        for l in l_lo..=(n + v) {
                            if (m - u).unsigned_abs() as usize <= l {
                                let w2 = wigner3j(n as i32, v as i32, l as i32, -m, u, m - u);
                                table.w2[base + l] = w2;
                                table.coupling[base + l] =
                                    w2 * table.w1_xi[table.w1_offset(n, v) + l];
                            }
                        }
                    }
                }
            }
        }
        Ok(table)
    }

    pub fn build(n_max: usize, v_max: usize) -> Result<Self> {
        Self::build_with_budget(n_max, v_max, DEFAULT_TABLE_BUDGET_BYTES)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn v_max(&self) -> usize {
        self.v_max
    }

    /// Length of every lane, `N + V + 1`.
    pub fn l_dim(&self) -> usize {
        self.n_max + self.v_max + 1
    }

    #[inline]
    fn w1_offset(&self, n: usize, v: usize) -> usize {
        (n * (self.v_max + 1) + v) * self.l_dim()
    }

    #[inline]
    fn w2_offset(&self, n: usize, v: usize, m: i32, u: i32) -> usize {
        let mi = (m + self.n_max as i32) as usize;
        let ui = (u + self.v_max as i32) as usize;
        (((n * (self.v_max + 1) + v) * (2 * self.n_max + 1) + mi) * (2 * self.v_max + 1) + ui)
            * self.l_dim()
    }

    /// `W1(n, v, l)`; zero outside the table or the triangle.
    pub fn w1(&self, n: usize, v: usize, l: usize) -> f64 {
        if n > self.n_max || v > self.v_max || l >= self.l_dim() {
            return 0.0;
        }
        self.w1[self.w1_offset(n, v) + l]
    }

    /// `W2(n, v, l, m, u)`; zero outside the table or when a selection rule
    /// fails.
    pub fn w2(&self, n: usize, v: usize, l: usize, m: i32, u: i32) -> f64 {
        if n > self.n_max
            || v > self.v_max
            || l >= self.l_dim()
            || m.unsigned_abs() as usize > n
            || u.unsigned_abs() as usize > v
        {
            return 0.0;
        }
        self.w2[self.w2_offset(n, v, m, u) + l]
    }

    /// `W1(n, v, ·)` over all `l`.
    #[inline]
    pub fn w1_lane(&self, n: usize, v: usize) -> &[f64] {
        let o = self.w1_offset(n, v);
        &self.w1[o..o + self.l_dim()]
    }

    /// `W1(n, v, l) · sqrt((2n+1)(2v+1)(2l+1)/4π)` over all `l`.
    #[inline]
    pub fn w1_xi_lane(&self, n: usize, v: usize) -> &[f64] {
        let o = self.w1_offset(n, v);
        &self.w1_xi[o..o + self.l_dim()]
    }

    /// `W2(n, v, ·, m, u)` over all `l`. Requires `|m| <= n <= N`,
    /// `|u| <= v <= V`.
    #[inline]
    pub fn w2_lane(&self, n: usize, v: usize, m: i32, u: i32) -> &[f64] {
        debug_assert!(n <= self.n_max && v <= self.v_max);
        debug_assert!(m.unsigned_abs() as usize <= n && u.unsigned_abs() as usize <= v);
        let o = self.w2_offset(n, v, m, u);
        &self.w2[o..o + self.l_dim()]
    }
}

impl WignerTable {
    /// `W1 · W2 · ξ` over all `l`: the real weight of each `l` term in the
    /// translation coefficient for `(n, m) → (v, u)`.
    #[inline]
    pub fn coupling_lane(&self, n: usize, v: usize, m: i32, u: i32) -> &[f64] {
        debug_assert!(n <= self.n_max && v <= self.v_max);
        debug_assert!(m.unsigned_abs() as usize <= n && u.unsigned_abs() as usize <= v);
        let o = self.w2_offset(n, v, m, u);
        &self.coupling[o..o + self.l_dim()]
    }
}
