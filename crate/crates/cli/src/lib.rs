//! Command-line front end of the room transfer function engine.
//!
//! Every command goes through the library's configuration and simulation
//! functions; this crate only parses arguments, chooses output paths and
//! renders reports.

pub mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use deism::config::{simulate, Scenario, SimulationConfig};
use deism::deism::{reciprocity_deviation, Variant};
use deism::directivity::{fit_wave_spectrum, wave_spectrum_to_coefficients, TransducerKind, DEFAULT_HANKEL_FLOOR};
use deism::error::{Error, Result};
use deism::formats;
use deism::metrics::compare;
use deism::parallel::{resolve_workers, with_workers};
use deism::spectrum::Method;
use deism::studies::{bench, sweep_distance, sweep_order};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum PlotKind {
    #[default]
    None,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum KindArg {
    #[default]
    Source,
    Receiver,
}

impl From<KindArg> for TransducerKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Source => TransducerKind::Source,
            KindArg::Receiver => TransducerKind::Receiver,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "deism", version, about = "Room transfer functions between directional transducers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Simulation configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Methods to run, overriding the configuration.
    #[arg(long, global = true, value_delimiter = ',', value_name = "NAME[,NAME...]")]
    pub method: Vec<String>,

    /// Seed for every random draw, overriding the configuration.
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,

    /// Worker threads (falls back to DEISM_WORKERS, then all cores).
    #[arg(long, global = true, value_name = "INT")]
    pub workers: Option<usize>,

    /// Output directory (or file for fit-directivity).
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = PlotKind::None)]
    pub plot: PlotKind,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit directivity coefficients to a sampled sphere field.
    FitDirectivity {
        /// Sampled sphere field file.
        input: PathBuf,
        /// Maximum spherical-harmonic order.
        #[arg(long)]
        order: usize,
        #[arg(long, value_enum, default_value_t = KindArg::Source)]
        kind: KindArg,
        /// Smallest admissible |h_n(k r0)| when converting to coefficients.
        #[arg(long)]
        hankel_floor: Option<f64>,
    },
    /// Compute transfer functions for every configured method.
    Simulate,
    /// Compare a test spectrum against a reference spectrum.
    Compare { reference: PathBuf, test: PathBuf },
    /// Free-field far-field error against distance.
    SweepDistance {
        #[arg(long, value_delimiter = ',', required = true)]
        distances: Vec<f64>,
    },
    /// Far-field error against maximum reflection order.
    SweepOrder {
        #[arg(long, value_delimiter = ',', required = true)]
        orders: Vec<u32>,
    },
    /// Time the full and far-field models.
    Bench {
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
    /// Error of each DEISM variant against the run with the devices exchanged.
    Reciprocity,
}

/// Runs a parsed command line, writing human-readable output to `out`.
/// Output is buffered while the worker pool runs and written afterwards,
/// including when the command fails part-way.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let workers = resolve_workers(cli.workers)?;
    let mut buf: Vec<u8> = Vec::new();
    let result = with_workers(workers, || dispatch(cli, &mut buf));
    out.write_all(&buf)?;
    out.flush()?;
    result?
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::FitDirectivity {
            input,
            order,
            kind,
            hankel_floor,
        } => fit_directivity(cli, out, input, *order, (*kind).into(), *hankel_floor),
        Command::Simulate => cmd_simulate(cli, out),
        Command::Compare { reference, test } => cmd_compare(cli, out, reference, test),
        Command::SweepDistance { distances } => cmd_sweep_distance(cli, out, distances),
        Command::SweepOrder { orders } => cmd_sweep_order(cli, out, orders),
        Command::Bench { repeats } => cmd_bench(cli, out, *repeats),
        Command::Reciprocity => cmd_reciprocity(cli, out),
    }
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io(path, e))
}

/// Loads the configuration and applies the command-line overrides.
pub fn load_scenario(cli: &Cli) -> Result<(Scenario, PathBuf)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut config = SimulationConfig::load(path)?;
    if !cli.method.is_empty() {
        config.methods = cli
            .method
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<_>>()?;
    }
    if let Some(seed) = cli.seed {
        config.rng_seed = seed;
    }
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let out_dir = match (&cli.output, &config.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("."),
    };
    let scenario = config.resolve(&base)?;
    fs::create_dir_all(&out_dir).map_err(|e| io(&out_dir, e))?;
    Ok((scenario, out_dir))
}

fn fit_directivity(
    cli: &Cli,
    out: &mut dyn Write,
    input: &Path,
    order: usize,
    kind: TransducerKind,
    floor: Option<f64>,
) -> Result<()> {
    let field = formats::load_sampled_field(input)?;
    // The medium is taken from the configuration when one is given.
    let medium = match &cli.config {
        Some(p) => SimulationConfig::load(p)?
            .expanded()?
            .room
            .map(|r| r.medium)
            .unwrap_or_default(),
        None => Default::default(),
    };
    let spectrum = fit_wave_spectrum(&field, order)?;
    writeln!(out, "freq_hz,relative_residual,condition_number")?;
    for d in &spectrum.diagnostics {
        writeln!(out, "{},{:.3e},{:.3e}", d.frequency, d.relative_residual, d.condition_number)?;
    }
    let directivity = wave_spectrum_to_coefficients(&spectrum, &medium, kind, floor.unwrap_or(DEFAULT_HANKEL_FLOOR))?;
    let path = match &cli.output {
        Some(p) if p.is_dir() => p.join(default_directivity_name(kind)),
        Some(p) => p.clone(),
        None => PathBuf::from(default_directivity_name(kind)),
    };
    formats::save_directivity(&directivity, &path)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn default_directivity_name(kind: TransducerKind) -> &'static str {
    match kind {
        TransducerKind::Source => "source_directivity.txt",
        TransducerKind::Receiver => "receiver_directivity.txt",
    }
}

/// File name of a method's spectrum inside the output directory.
pub fn spectrum_file_name(m: Method) -> String {
    format!("{m}.csv")
}

fn cmd_simulate(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let (scenario, dir) = load_scenario(cli)?;
    let spectra = simulate(&scenario)?;
    for s in &spectra {
        let path = dir.join(spectrum_file_name(s.method.expect("simulate tags every spectrum")));
        formats::save_spectrum(s, &path)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    if cli.plot == PlotKind::Svg {
        let path = dir.join("rtf.svg");
        write_file(&path, &svg::rtf_figure(&spectra))?;
        writeln!(out, "wrote {}", path.display())?;
    }
    writeln!(out, "fingerprint {}", scenario.fingerprint)?;
    Ok(())
}

fn cmd_compare(cli: &Cli, out: &mut dyn Write, reference: &Path, test: &Path) -> Result<()> {
    let a = formats::load_spectrum(reference)?;
    let b = formats::load_spectrum(test)?;
    let report = compare(&b, &a)?;
    writeln!(out, "e_lsd_db {:.6}", report.e_lsd)?;
    writeln!(out, "e_lsd_single_square_db {:.6}", report.e_lsd_single_square)?;
    writeln!(out, "e_phase_rad {:.6}", report.e_phase)?;
    writeln!(out, "e_l2 {:.6e}", report.e_l2)?;
    let dir = cli.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let json = dir.join("comparison.json");
    formats::save_comparison(&report, &json, Some(&dir.join("comparison_traces.csv")))?;
    writeln!(out, "wrote {}", json.display())?;
    Ok(())
}

fn cmd_sweep_distance(cli: &Cli, out: &mut dyn Write, distances: &[f64]) -> Result<()> {
    let (scenario, dir) = load_scenario(cli)?;
    let rows = sweep_distance(&scenario, distances)?;
    let mut csv = String::from("distance_m,e_l2\n");
    for (d, e) in &rows {
        csv.push_str(&format!("{d:.16e},{e:.16e}\n"));
    }
    let path = dir.join("sweep_distance.csv");
    write_file(&path, &csv)?;
    out.write_all(csv.as_bytes())?;
    if cli.plot == PlotKind::Svg {
        let series = [svg::Series {
            label: "DEISM-LC vs DEISM",
            points: rows.clone(),
        }];
        let p = dir.join("sweep_distance.svg");
        write_file(&p, &svg::xy_figure("Far-field error", "Distance (m)", "Relative error", &series, true, true))?;
    }
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn cmd_sweep_order(cli: &Cli, out: &mut dyn Write, orders: &[u32]) -> Result<()> {
    let (scenario, dir) = load_scenario(cli)?;
    let rows = sweep_order(&scenario, orders)?;
    let mut csv = String::from("order,e_l2\n");
    let mut points = Vec::new();
    for r in &rows {
        match r.e_l2 {
            Some(e) => {
                csv.push_str(&format!("{},{e:.16e}\n", r.order));
                points.push((r.order as f64, e));
            }
            None => writeln!(out, "order {} omitted: the direct path is supplied externally", r.order)?,
        }
    }
    let path = dir.join("sweep_order.csv");
    write_file(&path, &csv)?;
    out.write_all(csv.as_bytes())?;
    if cli.plot == PlotKind::Svg {
        let series = [svg::Series {
            label: "DEISM-LC vs DEISM",
            points,
        }];
        let p = dir.join("sweep_order.svg");
        write_file(&p, &svg::xy_figure("Error against reflection order", "Max. reflection order", "Relative error", &series, false, true))?;
    }
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn cmd_bench(cli: &Cli, out: &mut dyn Write, repeats: usize) -> Result<()> {
    let (scenario, dir) = load_scenario(cli)?;
    let report = bench(&scenario, repeats)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    let path = dir.join("bench.json");
    write_file(&path, &format!("{text}\n"))?;
    writeln!(out, "{text}")?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn cmd_reciprocity(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let (scenario, _) = load_scenario(cli)?;
    let variants: Vec<Variant> = [Variant::Full, Variant::Lc]
        .into_iter()
        .filter(|v| scenario.config.methods.contains(&v.method()))
        .collect();
    if variants.is_empty() {
        return Err(Error::Config("reciprocity needs DEISM or DEISM_LC among the methods".into()));
    }
    let req = scenario.request();
    writeln!(out, "method,e_l2")?;
    for v in variants {
        let e = reciprocity_deviation(&req, v, scenario.engine())?;
        writeln!(out, "{},{e:.6e}", v.method())?;
    }
    Ok(())
}
