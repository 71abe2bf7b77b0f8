//! File formats: 16-bit binary graymaps, two-column profile CSVs, flat
//! `key = value` records and the run manifest.
//!
//! Images are written with `y` increasing upwards: the first PGM row is
//! `j = ny - 1`. Columns run over `i`, so the file is `nx` wide.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::profile::{AiryFit, PositionUnit, ProfileComparison, RadialProfile};

pub const PGM_MAXVAL: u16 = 65535;

/// Mapping from intensity to gray level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ImageScale {
    /// `[0, peak] -> [0, 65535]`. An all-zero image is divided by one.
    #[default]
    Peak,
    /// `[0, s] -> [0, 65535]`; larger values saturate.
    Fixed(f64),
}

fn quantize(v: f64, scale: f64) -> u16 {
    let q = (v / scale * PGM_MAXVAL as f64 + 0.5).floor();
    q.clamp(0.0, PGM_MAXVAL as f64) as u16
}

pub fn encode_pgm(intensity: &Array2<f64>, scale: ImageScale) -> Result<Vec<u8>> {
    if intensity.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::param("image", "values must be finite and non-negative"));
    }
    let s = match scale {
        ImageScale::Peak => {
            let peak = intensity.iter().fold(0.0f64, |m, &v| m.max(v));
            if peak > 0.0 {
                peak
            } else {
                1.0
            }
        }
        ImageScale::Fixed(s) => {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::param("raw_scale", format!("{s} must be positive")));
            }
            s
        }
    };
    let (nx, ny) = intensity.dim();
    let header = format!("P5\n{nx} {ny}\n{PGM_MAXVAL}\n");
    let mut out = Vec::with_capacity(header.len() + 2 * nx * ny);
    out.extend_from_slice(header.as_bytes());
    for j in (0..ny).rev() {
        for i in 0..nx {
            out.extend_from_slice(&quantize(intensity[[i, j]], s).to_be_bytes());
        }
    }
    Ok(out)
}

/// Gray levels indexed `[[i, j]]`, inverse of [`encode_pgm`]'s layout.
pub fn decode_pgm(bytes: &[u8]) -> Result<Array2<u16>> {
    let bad = |reason: &str| Error::Parse {
        what: "PGM",
        line: 0,
        reason: reason.to_string(),
    };
    // Header: magic, width, height, maxval, each separated by whitespace,
    // with `#` comments allowed.
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary graymap (P5)"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (nx, ny, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != PGM_MAXVAL as usize {
        return Err(bad("only 16-bit graymaps are supported"));
    }
    pos += 1; // single whitespace byte after maxval
    let data = bytes.get(pos..).unwrap_or(&[]);
    if data.len() != 2 * nx * ny {
        return Err(bad("pixel data length does not match the header"));
    }
    let mut out = Array2::zeros((nx, ny));
    for (k, px) in data.chunks_exact(2).enumerate() {
        let (row, i) = (k / nx, k % nx);
        out[[i, ny - 1 - row]] = u16::from_be_bytes([px[0], px[1]]);
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, intensity: &Array2<f64>, scale: ImageScale) -> Result<Vec<u8>> {
    let bytes = encode_pgm(intensity, scale)?;
    write_bytes(path, &bytes)?;
    Ok(bytes)
}

pub fn read_pgm(path: &Path) -> Result<Array2<u16>> {
    decode_pgm(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn format_profile(profile: &RadialProfile) -> String {
    let mut s = format!("# position_{},intensity\n", profile.unit().suffix());
    for (x, y) in profile.positions().iter().zip(profile.intensities()) {
        let _ = writeln!(s, "{x:?},{y:?}");
    }
    s
}

/// Two-column CSV. The unit comes from a `position_um` / `position_px`
/// header if present, micrometres otherwise.
pub fn parse_profile(text: &str) -> Result<RadialProfile> {
    let mut unit = PositionUnit::Micrometers;
    let mut positions = Vec::new();
    let mut intensities = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let body = line.trim_start_matches('#').trim();
        if line.starts_with('#') || body.starts_with("position") {
            if body.starts_with("position_px") {
                unit = PositionUnit::Pixels;
            } else if body.starts_with("position_um") {
                unit = PositionUnit::Micrometers;
            }
            continue;
        }
        let err = |reason: String| Error::Parse {
            what: "profile CSV",
            line: n + 1,
            reason,
        };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(err(format!("expected 2 columns, found {}", cols.len())));
        }
        let parse = |c: &str| c.parse::<f64>().map_err(|e| err(format!("`{c}`: {e}")));
        positions.push(parse(cols[0])?);
        intensities.push(parse(cols[1])?);
    }
    RadialProfile::new(positions, intensities, unit).map_err(|e| Error::Parse {
        what: "profile CSV",
        line: 0,
        reason: e.to_string(),
    })
}

pub fn write_profile(path: &Path, profile: &RadialProfile) -> Result<Vec<u8>> {
    let bytes = format_profile(profile).into_bytes();
    write_bytes(path, &bytes)?;
    Ok(bytes)
}

pub fn read_profile(path: &Path) -> Result<RadialProfile> {
    parse_profile(&read_text(path)?)
}

/// Phase-mismatch grid as CSV: `ny` lines of `nx` comma-separated values,
/// the first line being `j = 0`. Lines starting with `#` are skipped.
pub fn parse_dk_grid(text: &str, shape: (usize, usize)) -> Result<Array2<f64>> {
    let (nx, ny) = shape;
    let mut out = Array2::zeros(shape);
    let mut j = 0;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| Error::Parse {
            what: "dk grid",
            line: n + 1,
            reason,
        };
        if j >= ny {
            return Err(err(format!("more than {ny} rows")));
        }
        let mut i = 0;
        for cell in line.split(',') {
            if i >= nx {
                return Err(err(format!("more than {nx} columns")));
            }
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|e| err(format!("`{}`: {e}", cell.trim())))?;
            if !v.is_finite() {
                return Err(err("non-finite value".into()));
            }
            out[[i, j]] = v;
            i += 1;
        }
        if i != nx {
            return Err(err(format!("expected {nx} columns, found {i}")));
        }
        j += 1;
    }
    if j != ny {
        return Err(Error::Parse {
            what: "dk grid",
            line: 0,
            reason: format!("expected {ny} rows, found {j}"),
        });
    }
    Ok(out)
}

pub fn format_dk_grid(dk: &Array2<f64>) -> String {
    let (nx, ny) = dk.dim();
    let mut s = String::new();
    for j in 0..ny {
        for i in 0..nx {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{:?}", dk[[i, j]]);
        }
        s.push('\n');
    }
    s
}

pub type Record = Vec<(String, String)>;

pub fn format_record(record: &[(String, String)]) -> String {
    record.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// `key = value` per line; blank lines and `#` comments are skipped.
pub fn parse_record(text: &str) -> Result<Record> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            what: "record",
            line: n + 1,
            reason: "expected `key = value`".into(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn record_value<'a>(record: &'a [(String, String)], key: &str) -> Option<&'a str> {
    record.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

pub fn fit_record(fit: &AiryFit, unit: PositionUnit, status: &str) -> Record {
    vec![
        kv("status", status),
        kv("eps_ratio", format!("{:?}", fit.eps_ratio)),
        kv("i0", format!("{:?}", fit.i0)),
        kv(&format!("scale_{}", unit.suffix()), format!("{:?}", fit.scale)),
        kv(&format!("center_{}", unit.suffix()), format!("{:?}", fit.center)),
        kv("offset", format!("{:?}", fit.offset)),
        kv("residual", format!("{:?}", fit.residual)),
        kv("iterations", fit.iterations),
    ]
}

pub fn comparison_record(c: &ProfileComparison, unit: PositionUnit) -> Record {
    let mut r = vec![
        kv("nrmse", format!("{:?}", c.nrmse)),
        kv(
            &format!("peak_offset_{}", unit.suffix()),
            format!("{:?}", c.peak_offset),
        ),
        kv("samples", c.samples),
    ];
    if let Some(w) = &c.warning {
        r.push(kv("warning", w));
    }
    r
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// What a run wrote. Timings are informational and excluded from
/// [`RunManifest::checksums`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    /// Resolved configuration, as dotted keys.
    pub config: Record,
    pub files: Vec<ManifestEntry>,
    pub notes: Record,
    /// Seconds per stage.
    pub timings: Vec<(String, f64)>,
}

impl RunManifest {
    pub fn add_file(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.files.push(ManifestEntry {
            name: name.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
    }

    pub fn checksums(&self) -> Vec<(&str, &str)> {
        self.files
            .iter()
            .map(|f| (f.name.as_str(), f.sha256.as_str()))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut r: Record = Vec::new();
        for (k, v) in &self.config {
            r.push((format!("config.{k}"), v.clone()));
        }
        for f in &self.files {
            r.push((format!("file.{}.sha256", f.name), f.sha256.clone()));
            r.push((format!("file.{}.bytes", f.name), f.bytes.to_string()));
        }
        for (k, v) in &self.notes {
            r.push((format!("note.{k}"), v.clone()));
        }
        for (stage, t) in &self.timings {
            r.push((format!("timing.{stage}_s"), format!("{t:.6}")));
        }
        format!("# fwm run manifest\n{}", format_record(&r))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = RunManifest::default();
        for (n, (k, v)) in parse_record(text)?.into_iter().enumerate() {
            let bad = || Error::Parse {
                what: "manifest",
                line: n + 1,
                reason: format!("unrecognised key `{k}`"),
            };
            if let Some(rest) = k.strip_prefix("config.") {
                m.config.push((rest.to_string(), v));
            } else if let Some(rest) = k.strip_prefix("note.") {
                m.notes.push((rest.to_string(), v));
            } else if let Some(rest) = k.strip_prefix("timing.") {
                let stage = rest.strip_suffix("_s").ok_or_else(bad)?;
                m.timings.push((stage.to_string(), v.parse().map_err(|_| bad())?));
            } else if let Some(name) = k.strip_prefix("file.").and_then(|r| r.strip_suffix(".sha256")) {
                m.files.push(ManifestEntry {
                    name: name.to_string(),
                    sha256: v,
                    bytes: 0,
                });
            } else if let Some(name) = k.strip_prefix("file.").and_then(|r| r.strip_suffix(".bytes")) {
                let entry = m.files.iter_mut().find(|f| f.name == name).ok_or_else(bad)?;
                entry.bytes = v.parse().map_err(|_| bad())?;
            } else {
                return Err(bad());
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn quantization_contract() {
        // [[0, peak], [peak/2, 0]] in (row, col) reading order.
        let peak = 3.7;
        let mut img = Array2::zeros((2, 2));
        img[[1, 1]] = peak; // row 0 is j = 1
        img[[0, 0]] = peak / 2.0; // row 1, col 0
        let bytes = encode_pgm(&img, ImageScale::Peak).unwrap();
        let header = b"P5\n2 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let px: Vec<u16> = bytes[header.len()..]
            .chunks(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        assert_eq!(px, vec![0, 65535, 32768, 0]);
    }

    #[test]
    fn zero_image_and_rejects() {
        let z = Array2::<f64>::zeros((3, 2));
        let b = encode_pgm(&z, ImageScale::Peak).unwrap();
        assert!(b.ends_with(&[0u8; 12]));
        assert!(encode_pgm(&array![[1.0, f64::NAN]], ImageScale::Peak).is_err());
        assert!(encode_pgm(&array![[1.0, -1.0]], ImageScale::Peak).is_err());
        assert!(encode_pgm(&z, ImageScale::Fixed(0.0)).is_err());
    }

    #[test]
    fn pgm_roundtrip_and_saturation() {
        let img = Array2::from_shape_fn((5, 3), |(i, j)| (i * 3 + j) as f64);
        let back = decode_pgm(&encode_pgm(&img, ImageScale::Fixed(7.0)).unwrap()).unwrap();
        assert_eq!(back.dim(), (5, 3));
        assert_eq!(back[[0, 0]], 0);
        assert_eq!(back[[2, 1]], 65535);
        assert_eq!(back[[4, 2]], 65535);
        assert_eq!(back[[1, 0]], quantize(3.0, 7.0));
        assert!(decode_pgm(b"P2\n1 1\n65535\n\0\0").is_err());
        assert!(decode_pgm(b"P5\n2 1\n65535\n\0\0").is_err());
    }

    #[test]
    fn profile_csv() {
        let p = RadialProfile::new(vec![-1.5, 0.0, 2.25], vec![0.5, 1.0, 0.0], PositionUnit::Pixels).unwrap();
        let text = format_profile(&p);
        assert!(text.starts_with("# position_px,intensity\n"));
        assert_eq!(parse_profile(&text).unwrap(), p);
        let plain = parse_profile("position_um,intensity\n0,1\n1,2\n").unwrap();
        assert_eq!(plain.unit(), PositionUnit::Micrometers);
        assert!(matches!(parse_profile("0,1\n1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_profile("0,1\n1,x\n").is_err());
        assert!(parse_profile("1,1\n0,1\n").is_err());
    }

    #[test]
    fn dk_grid_csv() {
        let g = Array2::from_shape_fn((3, 2), |(i, j)| i as f64 - 0.25 * j as f64);
        assert_eq!(parse_dk_grid(&format_dk_grid(&g), (3, 2)).unwrap(), g);
        assert!(parse_dk_grid("1,2\n3,4\n", (3, 2)).is_err());
        assert!(parse_dk_grid("1,2,3\n", (3, 2)).is_err());
    }

    #[test]
    fn records_and_manifest() {
        let r = parse_record("# c\na = 1\n b=two words \n").unwrap();
        assert_eq!(record_value(&r, "b"), Some("two words"));
        assert!(parse_record("oops\n").is_err());

        let mut m = RunManifest::default();
        m.config.push(("grid.nx".into(), "8".into()));
        m.add_file("a.pgm", b"abc");
        m.notes.push(("image_scale".into(), "peak".into()));
        m.timings.push(("farfield".into(), 0.5));
        assert_eq!(
            m.files[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(RunManifest::parse(&m.to_text()).unwrap(), m);
    }
}
