//! Simulation configuration and the one code path that runs it.
//!
//! A [`SimulationConfig`] is the JSON document users write. Resolving it
//! expands presets, loads or builds the directivities and yields a
//! [`Scenario`], which [`simulate`] evaluates. The command-line tool and any
//! language binding go through exactly these functions.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::deism::{self, DeismRequest, EngineOptions, Variant};
use crate::directivity::synthetic::PointCluster;
use crate::directivity::{
    fit_wave_spectrum, wave_spectrum_to_coefficients, Directivity, TransducerKind,
    DEFAULT_HANKEL_FLOOR,
};
use crate::error::{Error, Result};
use crate::formats;
use crate::ism::{self, FsrrConfig, ReceiverOffset, SignMode};
use crate::room::{RoomSpec, TransducerPose};
use crate::spectrum::{Method, RtfSpectrum};
use crate::directivity::Medium;

pub const DEFAULT_MAX_REFLECTION_ORDER: u32 = 25;

/// Upper bound on the receiver order of the generalised method when the
/// point receiver does not set one.
pub const DEFAULT_GISM_ORDER_CAP: usize = 20;

const MAX_GRID_POINTS: usize = 1_000_000;

/// Frequency grid, either a closed arithmetic range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrequencyGrid {
    Range {
        start_hz: f64,
        stop_hz: f64,
        step_hz: f64,
    },
    List(Vec<f64>),
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid::Range {
            start_hz: 20.0,
            stop_hz: 1000.0,
            step_hz: 2.0,
        }
    }
}

impl FrequencyGrid {
    /// Points of the grid. Range points are `start + i·step`, so no rounding
    /// error accumulates along the grid.
    pub fn points(&self) -> Result<Vec<f64>> {
        let f = match self {
            FrequencyGrid::List(v) => v.clone(),
            &FrequencyGrid::Range {
                start_hz,
                stop_hz,
                step_hz,
            } => {
                if !(start_hz > 0.0 && stop_hz >= start_hz && step_hz > 0.0 && stop_hz.is_finite()) {
                    return Err(Error::config(format!(
                        "invalid frequency range {start_hz}..{stop_hz} step {step_hz}"
                    )));
                }
                let span = (stop_hz - start_hz) / step_hz;
                if span >= MAX_GRID_POINTS as f64 {
                    return Err(Error::config("frequency grid is too large"));
                }
                let count = (span + 1e-9).floor() as usize + 1;
                (0..count).map(|i| start_hz + i as f64 * step_hz).collect()
            }
        };
        crate::directivity::validate_frequencies(&f)?;
        Ok(f)
    }
}

/// How a transducer's directivity is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransducerSpec {
    // A braced variant so that unknown fields are rejected.
    Monopole {},
    /// Ideal pressure sensor offset from the receiver origin.
    PointReceiver {
        d_y: f64,
        #[serde(default)]
        theta_y: f64,
        #[serde(default)]
        phi_y: f64,
        #[serde(default)]
        max_order: Option<usize>,
    },
    /// A directivity file.
    File { path: PathBuf },
    /// A sampled sphere field, fitted at the given order.
    Sampled {
        path: PathBuf,
        max_order: usize,
        #[serde(default)]
        hankel_floor: Option<f64>,
    },
    /// A seeded cluster of point sources, see [`PointCluster`].
    Synthetic {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_synthetic_radius")]
        radius: f64,
        #[serde(default = "default_synthetic_order")]
        max_order: usize,
    },
}

impl Default for TransducerSpec {
    fn default() -> Self {
        TransducerSpec::Monopole {}
    }
}

fn default_synthetic_radius() -> f64 {
    0.1
}

fn default_synthetic_order() -> usize {
    5
}

/// Settings of the randomised-sign baseline other than its seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FsrrSettings {
    pub measurement_radius: f64,
    pub sign_mode: SignMode,
}

impl Default for FsrrSettings {
    fn default() -> Self {
        let d = FsrrConfig::default();
        FsrrSettings {
            measurement_radius: d.measurement_radius,
            sign_mode: d.sign_mode,
        }
    }
}

/// A complete simulation request as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// One of `paper-config-1` … `paper-config-5`; explicit `room` and pose
    /// fields take precedence over it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<RoomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_pose: Option<TransducerPose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver_pose: Option<TransducerPose>,
    #[serde(default)]
    pub source: TransducerSpec,
    #[serde(default)]
    pub receiver: TransducerSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_order")]
    pub max_reflection_order: u32,
    #[serde(default)]
    pub frequencies: FrequencyGrid,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Spectrum file replacing the direct path of both model variants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct_path_override: Option<PathBuf>,
    #[serde(default)]
    pub engine: EngineOptions,
    #[serde(default)]
    pub fsrr: FsrrSettings,
    #[serde(default = "default_gism_cap")]
    pub gism_order_cap: usize,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Deism, Method::DeismLc]
}

fn default_order() -> u32 {
    DEFAULT_MAX_REFLECTION_ORDER
}

fn default_gism_cap() -> usize {
    DEFAULT_GISM_ORDER_CAP
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            preset: None,
            room: None,
            source_pose: None,
            receiver_pose: None,
            source: TransducerSpec::Monopole {},
            receiver: TransducerSpec::Monopole {},
            methods: default_methods(),
            max_reflection_order: DEFAULT_MAX_REFLECTION_ORDER,
            frequencies: FrequencyGrid::default(),
            rng_seed: 0,
            output_dir: None,
            direct_path_override: None,
            engine: EngineOptions::default(),
            fsrr: FsrrSettings::default(),
            gism_order_cap: DEFAULT_GISM_ORDER_CAP,
        }
    }
}

/// Room and poses of a named configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub room: RoomSpec,
    pub source_pose: TransducerPose,
    pub receiver_pose: TransducerPose,
}

pub const PRESET_NAMES: [&str; 5] = [
    "paper-config-1",
    "paper-config-2",
    "paper-config-3",
    "paper-config-4",
    "paper-config-5",
];

/// The shoebox room shared by all presets: 4 × 3 × 2.5 m, `ζ = 18`, air at
/// 343 m/s and 1.2 kg/m³.
pub fn preset_room() -> RoomSpec {
    RoomSpec {
        dimensions: [4.0, 3.0, 2.5],
        zeta: 18.0,
        medium: Medium {
            speed_of_sound: 343.0,
            density: 1.2,
        },
    }
}

/// Looks up a named preset. Facing `+x` is yaw 0, `−x` is `π`, `−y` is
/// `−π/2`. The third configuration uses the large cuboid receiver position.
pub fn preset(name: &str) -> Result<Preset> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let (s, r) = match name {
        "paper-config-1" => (([1.1, 1.1, 1.3], 0.0), ([2.9, 1.9, 1.3], PI)),
        "paper-config-2" => (([1.1, 1.1, 1.3], 0.0), ([1.9, 1.6, 1.4], PI)),
        "paper-config-3" => (([1.1, 1.1, 1.3], 0.0), ([1.05, 1.1, 1.5], 0.0)),
        "paper-config-4" => (([0.4, 1.1, 1.3], 0.0), ([2.1, 1.6, 1.3], PI)),
        "paper-config-5" => (([0.4, 1.1, 1.3], 0.0), ([2.5, 2.6, 1.3], -FRAC_PI_2)),
        _ => {
            return Err(Error::config(format!(
                "unknown preset '{name}' (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Preset {
        room: preset_room(),
        source_pose: TransducerPose::new(s.0, s.1),
        receiver_pose: TransducerPose::new(r.0, r.1),
    })
}

impl SimulationConfig {
    /// Parses a JSON document; syntax and schema errors carry a line number.
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line().max(1),
            message: e.to_string(),
        })
    }

    /// Parses raw bytes, rejecting invalid UTF-8 with a located error.
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        match std::str::from_utf8(bytes) {
            Ok(s) => Self::from_json_str(s),
            Err(e) => {
                let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
                Err(Error::parse(line, "configuration is not valid UTF-8"))
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        Self::from_json_bytes(&bytes)
    }

    /// Copy with the preset folded into explicit room and pose fields.
    pub fn expanded(&self) -> Result<Self> {
        let mut c = self.clone();
        if let Some(name) = &self.preset {
            let p = preset(name)?;
            c.room.get_or_insert(p.room);
            c.source_pose.get_or_insert(p.source_pose);
            c.receiver_pose.get_or_insert(p.receiver_pose);
        }
        Ok(c)
    }

    /// Loads and builds everything the methods need. Relative paths are
    /// taken relative to `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<Scenario> {
        let config = self.expanded()?;
        let room = config
            .room
            .ok_or_else(|| Error::config("no room given (set `room` or `preset`)"))?;
        let source_pose = config
            .source_pose
            .ok_or_else(|| Error::config("no source pose given (set `source_pose` or `preset`)"))?;
        let receiver_pose = config
            .receiver_pose
            .ok_or_else(|| Error::config("no receiver pose given (set `receiver_pose` or `preset`)"))?;
        room.validate()?;
        source_pose.validate_in(&room)?;
        receiver_pose.validate_in(&room)?;
        if config.methods.is_empty() {
            return Err(Error::config("no methods selected"));
        }
        if config.engine.chunk_size == 0 {
            return Err(Error::config("chunk size must be positive"));
        }
        let frequencies = config.frequencies.points()?;
        let medium = room.medium;
        let mut inputs = Vec::new();

        let source = build_transducer(
            &config.source,
            TransducerKind::Source,
            &frequencies,
            &medium,
            config.rng_seed,
            base_dir,
            &mut inputs,
        )?;
        let receiver = build_transducer(
            &config.receiver,
            TransducerKind::Receiver,
            &frequencies,
            &medium,
            config.rng_seed,
            base_dir,
            &mut inputs,
        )?;
        let receiver_offset = match config.receiver {
            TransducerSpec::PointReceiver {
                d_y,
                theta_y,
                phi_y,
                ..
            } => Some(ReceiverOffset { d_y, theta_y, phi_y }),
            _ => None,
        };
        if config.methods.contains(&Method::Gism) && receiver_offset.is_none() {
            return Err(Error::config("GISM needs a point_receiver receiver"));
        }

        let direct_override = match &config.direct_path_override {
            Some(p) => {
                let path = base_dir.join(p);
                inputs.push(file_digest(&path)?);
                let s = formats::load_spectrum(&path)?;
                if s.frequencies() != frequencies.as_slice() {
                    return Err(Error::config(
                        "direct-path override frequency grid does not match the configuration",
                    ));
                }
                Some(s)
            }
            None => None,
        };

        let fingerprint = fingerprint(&config, &inputs);
        let scenario = Scenario {
            config,
            room,
            source_pose,
            receiver_pose,
            source,
            receiver,
            receiver_offset,
            frequencies,
            direct_override,
            fingerprint,
        };
        if scenario
            .config
            .methods
            .iter()
            .any(|m| matches!(m, Method::Deism | Method::DeismLc))
        {
            scenario.request().validate()?;
        }
        Ok(scenario)
    }
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

#[allow(clippy::too_many_arguments)]
fn build_transducer(
    spec: &TransducerSpec,
    kind: TransducerKind,
    frequencies: &[f64],
    medium: &Medium,
    rng_seed: u64,
    base_dir: &Path,
    inputs: &mut Vec<String>,
) -> Result<Directivity> {
    let d = match spec {
        TransducerSpec::Monopole {} => Directivity::monopole(kind, frequencies.to_vec(), medium)?,
        &TransducerSpec::PointReceiver {
            d_y,
            theta_y,
            phi_y,
            max_order,
        } => {
            if kind != TransducerKind::Receiver {
                return Err(Error::config("point_receiver can only be used as the receiver"));
            }
            Directivity::point_receiver(frequencies.to_vec(), medium, d_y, theta_y, phi_y, max_order)?
        }
        TransducerSpec::File { path } => {
            let path = base_dir.join(path);
            inputs.push(file_digest(&path)?);
            let d = formats::load_directivity(&path)?;
            if d.kind() != kind {
                return Err(Error::config(format!(
                    "{} is a {:?} directivity but is used as the {kind:?}",
                    path.display(),
                    d.kind()
                )));
            }
            d.require_grid(frequencies)?;
            d
        }
        TransducerSpec::Sampled {
            path,
            max_order,
            hankel_floor,
        } => {
            let path = base_dir.join(path);
            inputs.push(file_digest(&path)?);
            let field = formats::load_sampled_field(&path)?;
            if field.frequencies() != frequencies {
                return Err(Error::config(format!(
                    "{} is not sampled on the configured frequency grid",
                    path.display()
                )));
            }
            let spectrum = fit_wave_spectrum(&field, *max_order)?;
            wave_spectrum_to_coefficients(
                &spectrum,
                medium,
                kind,
                hankel_floor.unwrap_or(DEFAULT_HANKEL_FLOOR),
            )?
        }
        &TransducerSpec::Synthetic {
            seed,
            radius,
            max_order,
        } => {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::config("synthetic radius must be positive"));
            }
            let salt = match kind {
                TransducerKind::Source => 0x5eed_0001,
                TransducerKind::Receiver => 0x5eed_0002,
            };
            let seed = seed.unwrap_or(rng_seed ^ salt);
            PointCluster::random(seed, radius).directivity(kind, frequencies.to_vec(), medium, max_order)?
        }
    };
    Ok(d)
}

/// SHA-256 of the canonical (key-sorted) expanded configuration without its
/// output directory, followed by the digests of every input file.
fn fingerprint(config: &SimulationConfig, inputs: &[String]) -> String {
    let mut c = config.clone();
    c.output_dir = None;
    let value = serde_json::to_value(&c).expect("configuration serializes");
    let mut h = Sha256::new();
    h.update(serde_json::to_string(&value).expect("value serializes").as_bytes());
    for d in inputs {
        h.update(b"\n");
        h.update(d.as_bytes());
    }
    format!("{:x}", h.finalize())
}

/// A configuration with its inputs loaded and validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// The expanded configuration.
    pub config: SimulationConfig,
    pub room: RoomSpec,
    pub source_pose: TransducerPose,
    pub receiver_pose: TransducerPose,
    pub source: Directivity,
    pub receiver: Directivity,
    /// Set when the receiver is a point receiver.
    pub receiver_offset: Option<ReceiverOffset>,
    pub frequencies: Vec<f64>,
    pub direct_override: Option<RtfSpectrum>,
    pub fingerprint: String,
}

impl Scenario {
    pub fn request(&self) -> DeismRequest {
        DeismRequest {
            room: self.room,
            source_pose: self.source_pose,
            receiver_pose: self.receiver_pose,
            source: self.source.clone(),
            receiver: self.receiver.clone(),
            max_reflection_order: self.config.max_reflection_order,
            frequencies: self.frequencies.clone(),
            direct_path_override: self.direct_override.clone(),
        }
    }

    pub fn fsrr_config(&self) -> FsrrConfig {
        FsrrConfig {
            rng_seed: self.config.rng_seed,
            measurement_radius: self.config.fsrr.measurement_radius,
            sign_mode: self.config.fsrr.sign_mode,
        }
    }

    pub fn engine(&self) -> &EngineOptions {
        &self.config.engine
    }
}

/// Runs one method of `s`. The returned spectrum carries the fingerprint.
pub fn simulate_method(s: &Scenario, method: Method) -> Result<RtfSpectrum> {
    let opts = s.engine();
    let n_o = s.config.max_reflection_order;
    let out = match method {
        Method::IsmOmni => ism::rtf_ism_omni(
            &s.room,
            &s.source_pose,
            &s.receiver_pose,
            n_o,
            &s.frequencies,
            opts,
        )?,
        Method::Gism => {
            let offset = s
                .receiver_offset
                .ok_or_else(|| Error::config("GISM needs a point_receiver receiver"))?;
            ism::rtf_gism(
                &s.source,
                &offset,
                &s.room,
                &s.source_pose,
                &s.receiver_pose,
                n_o,
                &s.frequencies,
                s.config.gism_order_cap,
                opts,
            )?
        }
        Method::Fsrr => ism::rtf_fsrr(
            &s.source,
            &s.receiver,
            &s.room,
            &s.source_pose,
            &s.receiver_pose,
            n_o,
            &s.frequencies,
            &s.fsrr_config(),
            opts,
        )?,
        Method::Deism => deism::run(&s.request(), Variant::Full, opts)?.spectrum,
        Method::DeismLc => deism::run(&s.request(), Variant::Lc, opts)?.spectrum,
    };
    Ok(out.with_fingerprint(s.fingerprint.clone()))
}

/// Runs every configured method in order.
pub fn simulate(s: &Scenario) -> Result<Vec<RtfSpectrum>> {
    s.config
        .methods
        .iter()
        .map(|&m| simulate_method(s, m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_matches_paper_sweep() {
        let f = FrequencyGrid::default().points().unwrap();
        assert_eq!(f.len(), 491);
        assert_eq!(f[0], 20.0);
        assert_eq!(*f.last().unwrap(), 1000.0);
        let g = FrequencyGrid::Range {
            start_hz: 20.0,
            stop_hz: 1000.0,
            step_hz: 20.0,
        };
        assert_eq!(g.points().unwrap().len(), 50);
    }

    #[test]
    fn presets_are_inside_the_room() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            p.source_pose.validate_in(&p.room).unwrap();
            p.receiver_pose.validate_in(&p.room).unwrap();
        }
        assert!(preset("paper-config-6").is_err());
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = SimulationConfig::from_json_str(r#"{"preset": "paper-config-1"}"#).unwrap();
        assert_eq!(c.max_reflection_order, 25);
        assert_eq!(c.methods, vec![Method::Deism, Method::DeismLc]);
        let s = c.resolve(Path::new(".")).unwrap();
        assert_eq!(s.room.dimensions, [4.0, 3.0, 2.5]);
        assert_eq!(s.fingerprint.len(), 64);
    }

    #[test]
    fn unknown_field_is_located() {
        let text = "{\n  \"preset\": \"paper-config-1\",\n  \"bogus\": 1\n}";
        match SimulationConfig::from_json_str(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transducer_selectors_parse() {
        let text = r#"{
            "preset": "paper-config-2",
            "source": {"type": "synthetic", "seed": 3, "radius": 0.15},
            "receiver": {"type": "point_receiver", "d_y": 0.1, "theta_y": 1.0},
            "methods": ["GISM", "ISM_OMNI"],
            "frequencies": [100.0, 200.0]
        }"#;
        let c = SimulationConfig::from_json_str(text).unwrap();
        let s = c.resolve(Path::new(".")).unwrap();
        assert_eq!(s.source.max_order(), 5);
        assert!(s.receiver_offset.is_some());
    }

    #[test]
    fn fingerprint_ignores_output_dir_but_not_physics() {
        let a = SimulationConfig {
            preset: Some("paper-config-1".into()),
            ..Default::default()
        };
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        let mut c = a.clone();
        c.max_reflection_order = 3;
        let fa = a.resolve(Path::new(".")).unwrap().fingerprint;
        assert_eq!(fa, b.resolve(Path::new(".")).unwrap().fingerprint);
        assert_ne!(fa, c.resolve(Path::new(".")).unwrap().fingerprint);
    }

    #[test]
    fn overlapping_spheres_need_override() {
        let text = r#"{
            "preset": "paper-config-3",
            "source": {"type": "synthetic", "seed": 1, "radius": 0.2},
            "receiver": {"type": "synthetic", "seed": 2, "radius": 0.2},
            "frequencies": [100.0]
        }"#;
        let c = SimulationConfig::from_json_str(text).unwrap();
        assert!(matches!(c.resolve(Path::new(".")), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_room_is_config_error() {
        let text = r#"{
            "room": {"dimensions": [-4.0, 3.0, 2.5], "zeta": 18.0},
            "source_pose": {"position": [1.0, 1.0, 1.0]},
            "receiver_pose": {"position": [2.0, 1.0, 1.0]}
        }"#;
        let c = SimulationConfig::from_json_str(text).unwrap();
        let e = c.resolve(Path::new(".")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
