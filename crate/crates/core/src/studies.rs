//! Parameter sweeps and timing runs built on a resolved [`Scenario`].

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::deism::{rtf_from_images, run, DeismRequest, RtfRun, Variant};
use crate::error::{Error, Result};
use crate::formats::ARTIFACT_VERSION;
use crate::metrics::relative_l2;
use crate::room::{norm, ImageRecord};
use crate::spectrum::Method;

/// Free-field `e_l2` of the far-field model against the full model with the
/// receiver moved to each distance along the scenario's source→receiver
/// direction. Device yaws are kept.
pub fn sweep_distance(s: &Scenario, distances: &[f64]) -> Result<Vec<(f64, f64)>> {
    let src = s.source_pose.position;
    let rcv = s.receiver_pose.position;
    let dir = [rcv[0] - src[0], rcv[1] - src[1], rcv[2] - src[2]];
    let len = norm(dir);
    if !(len > 0.0) {
        return Err(Error::config("source and receiver coincide; no sweep direction"));
    }
    let source = s.source.rotated(s.source_pose.yaw);
    let receiver = s.receiver.rotated(s.receiver_pose.yaw);
    let reach = source.r0() + receiver.r0();
    distances
        .iter()
        .map(|&d| {
            if !(d > reach && d.is_finite()) {
                return Err(Error::config(format!(
                    "distance {d} m does not clear the transparent spheres ({reach} m)"
                )));
            }
            let at = [
                src[0] + d * dir[0] / len,
                src[1] + d * dir[1] / len,
                src[2] + d * dir[2] / len,
            ];
            let images = [ImageRecord::free_field(src, at)];
            let eval = |v| {
                rtf_from_images(
                    &images,
                    &source,
                    &receiver,
                    &s.frequencies,
                    &s.room.medium,
                    v,
                    s.engine(),
                    None,
                )
            };
            let full = eval(Variant::Full)?.spectrum;
            let lc = eval(Variant::Lc)?.spectrum;
            Ok((d, relative_l2(&full, &lc)?))
        })
        .collect()
}

/// One row of an order sweep. `e_l2` is `None` for order zero when the
/// direct path is overridden, since the comparison would be empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderRow {
    pub order: u32,
    pub e_l2: Option<f64>,
}

/// `e_l2` of the far-field model against the full model per maximum
/// reflection order.
pub fn sweep_order(s: &Scenario, orders: &[u32]) -> Result<Vec<OrderRow>> {
    orders
        .iter()
        .map(|&order| {
            if order == 0 && s.direct_override.is_some() {
                log::info!("order 0 skipped: the direct path is supplied externally");
                return Ok(OrderRow { order, e_l2: None });
            }
            let req = DeismRequest {
                max_reflection_order: order,
                ..s.request()
            };
            let full = run(&req, Variant::Full, s.engine())?.spectrum;
            let lc = run(&req, Variant::Lc, s.engine())?.spectrum;
            Ok(OrderRow {
                order,
                e_l2: Some(relative_l2(&full, &lc)?),
            })
        })
        .collect()
}

/// Timing of one method in a [`BenchReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: Method,
    pub wall_seconds: f64,
    pub frequencies_per_second: f64,
    /// Inner-loop operation count.
    pub operations: u64,
}

/// Timing report of the two model variants on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub artifact_version: String,
    pub fingerprint: String,
    pub frequencies: usize,
    pub paths: usize,
    pub source_order: usize,
    pub receiver_order: usize,
    pub methods: Vec<MethodTiming>,
    /// Wall-clock time of the full model over the far-field model.
    pub speedup: f64,
    /// Operation count of the full model over the far-field model.
    pub operation_ratio: f64,
}

fn timed(req: &DeismRequest, variant: Variant, s: &Scenario) -> Result<(RtfRun, f64)> {
    let t = Instant::now();
    let r = run(req, variant, s.engine())?;
    Ok((r, t.elapsed().as_secs_f64()))
}

/// Times the full and far-field models, taking the best of `repeats` runs.
pub fn bench(s: &Scenario, repeats: usize) -> Result<BenchReport> {
    let req = s.request();
    let repeats = repeats.max(1);
    let mut best = [f64::INFINITY; 2];
    let mut runs = Vec::new();
    for (i, v) in [Variant::Full, Variant::Lc].into_iter().enumerate() {
        let mut last = None;
        for _ in 0..repeats {
            let (r, t) = timed(&req, v, s)?;
            best[i] = best[i].min(t);
            last = Some(r);
        }
        runs.push(last.expect("at least one repeat"));
    }
    let nf = s.frequencies.len() as f64;
    let methods = [Variant::Full, Variant::Lc]
        .iter()
        .zip(&runs)
        .zip(best)
        .map(|((v, r), t)| MethodTiming {
            method: v.method(),
            wall_seconds: t,
            frequencies_per_second: nf / t,
            operations: r.operations,
        })
        .collect();
    Ok(BenchReport {
        artifact_version: ARTIFACT_VERSION.to_string(),
        fingerprint: s.fingerprint.clone(),
        frequencies: s.frequencies.len(),
        paths: runs[0].paths,
        source_order: s.source.max_order(),
        receiver_order: s.receiver.max_order(),
        methods,
        speedup: best[0] / best[1],
        operation_ratio: runs[0].operations as f64 / runs[1].operations.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{FrequencyGrid, SimulationConfig};
    use std::path::Path;

    fn monopoles() -> Scenario {
        SimulationConfig {
            preset: Some("paper-config-1".into()),
            frequencies: FrequencyGrid::List(vec![100.0, 300.0]),
            max_reflection_order: 1,
            ..Default::default()
        }
        .resolve(Path::new("."))
        .unwrap()
    }

    #[test]
    fn monopole_distance_sweep_is_exact() {
        let rows = sweep_distance(&monopoles(), &[1.0, 10.0]).unwrap();
        assert_eq!(rows.len(), 2);
        for (_, e) in rows {
            assert!(e < 1e-13, "{e}");
        }
    }

    #[test]
    fn single_order_gives_one_row() {
        let rows = sweep_order(&monopoles(), &[2]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].e_l2.unwrap() < 1e-12);
    }

    #[test]
    fn degenerate_bench_runs() {
        let r = bench(&monopoles(), 1).unwrap();
        assert_eq!(r.methods.len(), 2);
        assert_eq!(r.paths, 7);
        assert!(r.speedup > 0.0);
    }
}
