//! Versioned on-disk formats.
//!
//! Directivities and sampled fields are a single text file: one line of JSON
//! header, one line of CSV column names, then CSV rows. Transfer functions are
//! a plain `freq_hz,re,im` CSV with a JSON sidecar next to it. Floats are
//! written with 17 significant digits so that reading back is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::directivity::{Directivity, SampledSphereField, TransducerKind};
use crate::error::{Error, Result};
use crate::metrics::ComparisonReport;
use crate::spectrum::{Method, RtfSpectrum};
use crate::sph::mode_count;

pub const FORMAT_VERSION: u32 = 1;

/// Version of this library, embedded in every sidecar.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

const DIRECTIVITY_COLUMNS: &str = "freq_hz,n,m,re,im";
const FIELD_COLUMNS: &str = "theta_rad,phi_rad,freq_hz,re,im";
const SPECTRUM_COLUMNS: &str = "freq_hz,re,im";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectivityHeader {
    version: u32,
    kind: TransducerKind,
    r0_m: f64,
    max_order: usize,
    frequencies_hz: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldHeader {
    version: u32,
    r0_m: f64,
    frequencies_hz: Vec<f64>,
}

/// Metadata written next to a spectrum CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSidecar {
    pub version: u32,
    pub artifact_version: String,
    pub method: Option<Method>,
    pub fingerprint: Option<String>,
    pub points: usize,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_at(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_at(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_at(path, e))
}

/// Line-numbered reader over a text stream.
struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(r: R) -> Self {
        Lines {
            inner: r.lines(),
            line: 0,
        }
    }

    /// Next non-blank line, or `None` at end of input.
    fn next(&mut self) -> Result<Option<String>> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            if !l.trim().is_empty() {
                return Ok(Some(l));
            }
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<String> {
        self.next()?
            .ok_or_else(|| Error::parse(self.line + 1, format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, msg)
    }

    fn header<T: serde::de::DeserializeOwned>(&mut self) -> Result<T> {
        let l = self.expect("a JSON header")?;
        serde_json::from_str(&l).map_err(|e| self.err(format!("invalid header: {e}")))
    }

    fn columns(&mut self, expected: &str) -> Result<()> {
        let l = self.expect("a column header")?;
        let got: String = l.chars().filter(|c| !c.is_whitespace()).collect();
        if got != expected {
            return Err(self.err(format!("expected columns '{expected}', found '{}'", l.trim())));
        }
        Ok(())
    }

    fn fields<'a>(&self, l: &'a str, count: usize) -> Result<Vec<&'a str>> {
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != count {
            return Err(self.err(format!("expected {count} fields, found {}", f.len())));
        }
        Ok(f)
    }

    fn float(&self, s: &str, name: &str) -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|_| self.err(format!("{name}: '{s}' is not a number")))?;
        if !v.is_finite() {
            return Err(self.err(format!("{name}: '{s}' is not finite")));
        }
        Ok(v)
    }

    fn int(&self, s: &str, name: &str) -> Result<i64> {
        s.parse()
            .map_err(|_| self.err(format!("{name}: '{s}' is not an integer")))
    }

    fn finish(&mut self) -> Result<()> {
        if self.next()?.is_some() {
            return Err(self.err("unexpected trailing row"));
        }
        Ok(())
    }
}

fn version_check(v: u32, line: usize) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::parse(line, format!("unsupported format version {v}")));
    }
    Ok(())
}

/// Writes a directivity with rows sorted by `(freq, n, m)`.
pub fn write_directivity<W: Write>(d: &Directivity, mut w: W) -> Result<()> {
    let header = DirectivityHeader {
        version: FORMAT_VERSION,
        kind: d.kind(),
        r0_m: d.r0(),
        max_order: d.max_order(),
        frequencies_hz: d.frequencies().to_vec(),
    };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    writeln!(w, "{DIRECTIVITY_COLUMNS}")?;
    for (i, &f) in d.frequencies().iter().enumerate() {
        let c = d.at(i);
        for n in 0..=d.max_order() {
            for m in -(n as i64)..=(n as i64) {
                let v = c[((n * n + n) as i64 + m) as usize];
                writeln!(w, "{},{n},{m},{},{}", fmt(f), fmt(v.re), fmt(v.im))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_directivity<R: BufRead>(r: R) -> Result<Directivity> {
    let mut lines = Lines::new(r);
    let h: DirectivityHeader = lines.header()?;
    version_check(h.version, lines.line)?;
    let header_line = lines.line;
    lines.columns(DIRECTIVITY_COLUMNS)?;
    let stride = mode_count(h.max_order);
    let mut coeffs = Vec::with_capacity(stride * h.frequencies_hz.len());
    for &f in &h.frequencies_hz {
        for n in 0..=h.max_order as i64 {
            for m in -n..=n {
                let l = lines.expect(&format!("row freq={f} n={n} m={m}"))?;
                let x = lines.fields(&l, 5)?;
                let rf = lines.float(x[0], "freq_hz")?;
                let rn = lines.int(x[1], "n")?;
                let rm = lines.int(x[2], "m")?;
                if rf != f || rn != n || rm != m {
                    return Err(lines.err(format!(
                        "expected row freq={f} n={n} m={m}, found freq={rf} n={rn} m={rm}"
                    )));
                }
                coeffs.push(Complex64::new(lines.float(x[3], "re")?, lines.float(x[4], "im")?));
            }
        }
    }
    lines.finish()?;
    Directivity::new(h.kind, h.r0_m, h.max_order, h.frequencies_hz, coeffs).map_err(|e| match e {
        Error::Config(m) => Error::parse(header_line, m),
        other => other,
    })
}

pub fn save_directivity(d: &Directivity, path: &Path) -> Result<()> {
    write_directivity(d, create(path)?)
}

pub fn load_directivity(path: &Path) -> Result<Directivity> {
    read_directivity(open(path)?)
}

/// Writes a sampled field, frequency-major, directions in their stored order.
pub fn write_sampled_field<W: Write>(field: &SampledSphereField, mut w: W) -> Result<()> {
    let header = FieldHeader {
        version: FORMAT_VERSION,
        r0_m: field.r0(),
        frequencies_hz: field.frequencies().to_vec(),
    };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    writeln!(w, "{FIELD_COLUMNS}")?;
    for (i, &f) in field.frequencies().iter().enumerate() {
        for (&(t, p), v) in field.directions().iter().zip(field.at(i)) {
            writeln!(w, "{},{},{},{},{}", fmt(t), fmt(p), fmt(f), fmt(v.re), fmt(v.im))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a sampled field. Rows are grouped by frequency in header order and
/// every frequency block must list the same directions in the same order.
pub fn read_sampled_field<R: BufRead>(r: R) -> Result<SampledSphereField> {
    let mut lines = Lines::new(r);
    let h: FieldHeader = lines.header()?;
    version_check(h.version, lines.line)?;
    let header_line = lines.line;
    lines.columns(FIELD_COLUMNS)?;
    let mut rows: Vec<(f64, f64, f64, Complex64, usize)> = Vec::new();
    while let Some(l) = lines.next()? {
        let x = lines.fields(&l, 5)?;
        rows.push((
            lines.float(x[0], "theta_rad")?,
            lines.float(x[1], "phi_rad")?,
            lines.float(x[2], "freq_hz")?,
            Complex64::new(lines.float(x[3], "re")?, lines.float(x[4], "im")?),
            lines.line,
        ));
    }
    let nf = h.frequencies_hz.len();
    if nf == 0 || rows.is_empty() || !rows.len().is_multiple_of(nf) {
        return Err(Error::parse(
            lines.line,
            format!("{} rows do not divide into {nf} frequency blocks", rows.len()),
        ));
    }
    let j = rows.len() / nf;
    let directions: Vec<(f64, f64)> = rows[..j].iter().map(|r| (r.0, r.1)).collect();
    let mut pressure = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let (fi, di) = (i / j, i % j);
        if row.2 != h.frequencies_hz[fi] {
            return Err(Error::parse(
                row.4,
                format!("expected freq_hz {}, found {}", h.frequencies_hz[fi], row.2),
            ));
        }
        if (row.0, row.1) != directions[di] {
            return Err(Error::parse(
                row.4,
                "direction differs from the first frequency block",
            ));
        }
        pressure.push(row.3);
    }
    SampledSphereField::new(h.r0_m, directions, h.frequencies_hz, pressure).map_err(|e| match e {
        Error::Config(m) => Error::parse(header_line, m),
        other => other,
    })
}

pub fn save_sampled_field(field: &SampledSphereField, path: &Path) -> Result<()> {
    write_sampled_field(field, create(path)?)
}

pub fn load_sampled_field(path: &Path) -> Result<SampledSphereField> {
    read_sampled_field(open(path)?)
}

/// Writes the `freq_hz,re,im` body of a spectrum.
pub fn write_spectrum_csv<W: Write>(s: &RtfSpectrum, mut w: W) -> Result<()> {
    writeln!(w, "{SPECTRUM_COLUMNS}")?;
    for (f, v) in s.frequencies().iter().zip(s.values()) {
        writeln!(w, "{},{},{}", fmt(*f), fmt(v.re), fmt(v.im))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectrum_csv<R: BufRead>(r: R) -> Result<RtfSpectrum> {
    let mut lines = Lines::new(r);
    lines.columns(SPECTRUM_COLUMNS)?;
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    while let Some(l) = lines.next()? {
        let x = lines.fields(&l, 3)?;
        let f = lines.float(x[0], "freq_hz")?;
        if !(f > 0.0) || freqs.last().is_some_and(|&p| f <= p) {
            return Err(lines.err("frequencies must be positive and strictly increasing"));
        }
        freqs.push(f);
        values.push(Complex64::new(lines.float(x[1], "re")?, lines.float(x[2], "im")?));
    }
    if freqs.is_empty() {
        return Err(lines.err("spectrum has no rows"));
    }
    RtfSpectrum::new(freqs, values, None)
}

/// Path of the JSON sidecar belonging to a spectrum CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the CSV and its sidecar.
pub fn save_spectrum(s: &RtfSpectrum, path: &Path) -> Result<()> {
    write_spectrum_csv(s, create(path)?)?;
    let meta = SpectrumSidecar {
        version: FORMAT_VERSION,
        artifact_version: ARTIFACT_VERSION.to_string(),
        method: s.method,
        fingerprint: s.fingerprint.clone(),
        points: s.len(),
    };
    let side = sidecar_path(path);
    let mut w = create(&side)?;
    serde_json::to_writer_pretty(&mut w, &meta).expect("sidecar serializes");
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Reads a spectrum CSV, picking up method and fingerprint from the sidecar
/// when one exists.
pub fn load_spectrum(path: &Path) -> Result<RtfSpectrum> {
    let mut s = read_spectrum_csv(open(path)?)?;
    let side = sidecar_path(path);
    if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| io_at(&side, e))?;
        let meta: SpectrumSidecar = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("{}: {e}", side.display()),
        })?;
        version_check(meta.version, 1)?;
        if meta.points != s.len() {
            return Err(Error::parse(
                1,
                format!("sidecar lists {} points, CSV has {}", meta.points, s.len()),
            ));
        }
        s.method = meta.method;
        s.fingerprint = meta.fingerprint;
    }
    Ok(s)
}

/// Writes a comparison report as JSON and, when traces are present, a
/// `freq_hz,level_difference_db,phase_difference_rad` CSV.
pub fn save_comparison(report: &ComparisonReport, json: &Path, traces_csv: Option<&Path>) -> Result<()> {
    let mut w = create(json)?;
    serde_json::to_writer_pretty(&mut w, report).expect("report serializes");
    writeln!(w)?;
    w.flush()?;
    if let (Some(path), Some(t)) = (traces_csv, &report.traces) {
        let mut w = create(path)?;
        writeln!(w, "freq_hz,level_difference_db,phase_difference_rad")?;
        for ((f, l), p) in t
            .frequencies
            .iter()
            .zip(&t.level_difference_db)
            .zip(&t.phase_difference_rad)
        {
            writeln!(w, "{},{},{}", fmt(*f), fmt(*l), fmt(*p))?;
        }
        w.flush()?;
    }
    Ok(())
}
