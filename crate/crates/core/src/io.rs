//! Frame, mask, config and report serialization.
//!
//! Frames are 8-bit PGM (P5) or 8/24-bit PNG. Configs are strict JSON with
//! unknown keys rejected. Reports use a canonical pretty-printer with sorted
//! keys and six significant digits so that identical runs give identical
//! bytes.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Homography;
use crate::motion::MotionMask;
use crate::pipeline::PipelineConfig;
use crate::raster::{BinaryMask, Frame};
use crate::synth::SynthConfig;

/// Threshold used when reading a saved mask back.
pub const MASK_READ_THRESHOLD: u8 = 128;

fn decode_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Decode {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn write_err(path: &Path, message: impl ToString) -> Error {
    Error::Write {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Loads an 8-bit grayscale/RGB PNG or a binary PGM, choosing by magic bytes.
pub fn load_frame(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes).map_err(|m| decode_err(path, m))
    } else if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(&bytes).map_err(|m| decode_err(path, m))
    } else {
        Err(decode_err(path, "not a binary PGM (P5) or PNG file"))
    }
}

/// Parses a binary PGM with `maxval <= 255`. Comments in the header are
/// skipped.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<Frame, String> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err("truncated PGM header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(format!("malformed PGM header at byte {start}"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("PGM header value out of range at byte {start}"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported PGM maxval {maxval}; only 8-bit is accepted"));
    }
    if width == 0 || height == 0 {
        return Err("PGM has zero area".into());
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after PGM header".into());
    }
    pos += 1;
    let payload = &bytes[pos..];
    let need = width * height;
    if payload.len() < need {
        return Err(format!(
            "truncated PGM payload: expected {need} bytes, found {}",
            payload.len()
        ));
    }
    Frame::from_u8(width, height, 1, &payload[..need]).map_err(|e| e.to_string())
}

pub fn encode_pgm(frame: &Frame) -> Result<Vec<u8>> {
    if !frame.is_gray() {
        return Err(Error::InvalidInput("PGM output requires a grayscale frame".into()));
    }
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend(frame.to_u8());
    Ok(out)
}

fn decode_png(bytes: &[u8]) -> std::result::Result<Frame, String> {
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(format!("unsupported PNG bit depth {:?}", info.bit_depth));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => return Err(format!("unsupported PNG color type {other:?}")),
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let row = w * channels;
    let mut packed = Vec::with_capacity(row * h);
    for y in 0..h {
        let start = y * info.line_size;
        packed.extend_from_slice(&buf[start..start + row]);
    }
    Frame::from_u8(w, h, channels, &packed).map_err(|e| e.to_string())
}

fn encode_png(width: usize, height: usize, channels: usize, data: &[u8]) -> std::result::Result<Vec<u8>, String> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(if channels == 3 {
            png::ColorType::Rgb
        } else {
            png::ColorType::Grayscale
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| e.to_string())?;
        writer.write_image_data(data).map_err(|e| e.to_string())?;
    }
    Ok(out)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| write_err(path, e))?;
    }
    fs::write(path, bytes).map_err(|e| write_err(path, e))
}

/// Writes a frame as PNG, or PGM when the extension is `.pgm`.
pub fn save_frame(frame: &Frame, path: &Path) -> Result<()> {
    let bytes = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        encode_pgm(frame)?
    } else {
        encode_png(frame.width(), frame.height(), frame.channels(), &frame.to_u8())
            .map_err(|m| write_err(path, m))?
    };
    write_bytes(path, &bytes)
}

/// Writes an 8-bit grayscale PNG with 0 for background and 255 for motion.
pub fn save_mask(mask: &MotionMask, path: &Path) -> Result<()> {
    let data: Vec<u8> = mask.data().iter().map(|&v| v * 255).collect();
    let bytes = encode_png(mask.width(), mask.height(), 1, &data).map_err(|m| write_err(path, m))?;
    write_bytes(path, &bytes)
}

/// Loads a mask image, treating gray levels at or above
/// [`MASK_READ_THRESHOLD`] as motion.
pub fn load_mask(path: &Path) -> Result<MotionMask> {
    let frame = load_frame(path)?;
    if !frame.is_gray() {
        return Err(decode_err(path, "mask images must be single-channel"));
    }
    let data = frame
        .to_u8()
        .into_iter()
        .map(|v| u8::from(v >= MASK_READ_THRESHOLD))
        .collect();
    BinaryMask::from_vec(frame.width(), frame.height(), data)
}

/// Parses JSON text, reporting the failing line and column.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_pipeline_config_str(text: &str) -> Result<PipelineConfig> {
    let cfg: PipelineConfig = parse_json(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_synth_config_str(text: &str) -> Result<SynthConfig> {
    let cfg: SynthConfig = parse_json(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and validates a pipeline config file.
pub fn parse_pipeline_config(path: &Path) -> Result<PipelineConfig> {
    parse_pipeline_config_str(&read_text(path)?)
}

/// Reads and validates a synthetic-sequence config file.
pub fn parse_synth_config(path: &Path) -> Result<SynthConfig> {
    parse_synth_config_str(&read_text(path)?)
}

/// Ordered frame list with an optional ground-truth homography file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub frames: Vec<PathBuf>,
    #[serde(default)]
    pub gt_homographies: Option<PathBuf>,
}

impl Manifest {
    /// Loads a manifest and resolves relative paths against its directory.
    /// Every listed frame must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: Manifest = parse_json(&read_text(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for f in m.frames.iter_mut().chain(m.gt_homographies.iter_mut()) {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        for f in &m.frames {
            if !f.is_file() {
                return Err(Error::io(
                    f,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "listed frame is missing"),
                ));
            }
        }
        Ok(m)
    }

    /// All `.pgm` and `.png` files of a directory in lexicographic order.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut frames = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let p = entry.map_err(|e| Error::io(dir, e))?.path();
            let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            if p.is_file() && matches!(ext.as_deref(), Some("pgm" | "png")) {
                frames.push(p);
            }
        }
        frames.sort();
        Ok(Self {
            frames,
            gt_homographies: None,
        })
    }

    /// Accepts either a frame directory or a manifest file. A directory that
    /// holds `manifest.json` uses it.
    pub fn open(input: &Path) -> Result<Self> {
        if input.is_dir() {
            let inner = input.join("manifest.json");
            if inner.is_file() {
                Self::load(&inner)
            } else {
                Self::from_dir(input)
            }
        } else {
            Self::load(input)
        }
    }

    /// Writes the manifest with paths as given.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| write_err(path, e))?;
        write_bytes(path, format!("{text}\n").as_bytes())
    }
}

/// Reads a JSON array of 3x3 matrices.
pub fn load_homographies(path: &Path) -> Result<Vec<Homography>> {
    parse_json(&read_text(path)?)
}

pub fn save_homographies(hs: &[Homography], path: &Path) -> Result<()> {
    let value = ReportValue::List(
        hs.iter()
            .map(|h| {
                ReportValue::List(
                    h.to_rows()
                        .iter()
                        .map(|r| ReportValue::List(r.iter().map(|&v| ReportValue::Float(v)).collect()))
                        .collect(),
                )
            })
            .collect(),
    );
    write_report(&value, path)
}

/// JSON value tree for reports. Objects keep keys sorted; floats are printed
/// with six significant digits and must be finite.
#[derive(Debug, Clone, PartialEq)]
pub enum ReportValue {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<ReportValue>),
    Object(BTreeMap<String, ReportValue>),
}

impl ReportValue {
    pub fn object() -> Self {
        Self::Object(BTreeMap::new())
    }

    /// Inserts into an object; no-op on other variants.
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<ReportValue>) -> &mut Self {
        if let Self::Object(map) = self {
            map.insert(key.into(), value.into());
        }
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<ReportValue>) -> Self {
        self.insert(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&ReportValue> {
        match self {
            Self::Object(map) => map.get(key),
            _ => None,
        }
    }

    /// Canonical text form. Fails on non-finite floats.
    pub fn render(&self) -> std::result::Result<String, String> {
        let mut out = String::new();
        self.render_into(&mut out, 0)?;
        out.push('\n');
        Ok(out)
    }

    fn render_into(&self, out: &mut String, depth: usize) -> std::result::Result<(), String> {
        let indent = |out: &mut String, d: usize| {
            out.push('\n');
            out.extend(std::iter::repeat("  ").take(d));
        };
        match self {
            Self::Null => out.push_str("null"),
            Self::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Self::Int(i) => out.push_str(&i.to_string()),
            Self::Float(f) => out.push_str(&format_float(*f)?),
            Self::Str(s) => out.push_str(&serde_json::to_string(s).map_err(|e| e.to_string())?),
            Self::List(items) if items.is_empty() => out.push_str("[]"),
            Self::List(items) => {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    indent(out, depth + 1);
                    v.render_into(out, depth + 1)?;
                }
                indent(out, depth);
                out.push(']');
            }
            Self::Object(map) if map.is_empty() => out.push_str("{}"),
            Self::Object(map) => {
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    indent(out, depth + 1);
                    out.push_str(&serde_json::to_string(k).map_err(|e| e.to_string())?);
                    out.push_str(": ");
                    v.render_into(out, depth + 1).map_err(|e| format!("{k}: {e}"))?;
                }
                indent(out, depth);
                out.push('}');
            }
        }
        Ok(())
    }
}

/// `%g`-style formatting with six significant digits.
pub fn format_float(v: f64) -> std::result::Result<String, String> {
    if !v.is_finite() {
        return Err(format!("non-finite value {v} cannot be written"));
    }
    if v == 0.0 {
        return Ok("0".into());
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        Ok(trim(&format!("{v:.decimals$}")))
    } else {
        Ok(format!("{}e{exp}", trim(mantissa)))
    }
}

macro_rules! report_from {
    ($($t:ty => $variant:ident as $conv:ty),* $(,)?) => {
        $(impl From<$t> for ReportValue {
            fn from(v: $t) -> Self {
                Self::$variant(v as $conv)
            }
        })*
    };
}

report_from!(i64 => Int as i64, i32 => Int as i64, u32 => Int as i64, u64 => Int as i64, usize => Int as i64, f64 => Float as f64, f32 => Float as f64);

impl From<bool> for ReportValue {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

impl From<&str> for ReportValue {
    fn from(v: &str) -> Self {
        Self::Str(v.to_string())
    }
}

impl From<String> for ReportValue {
    fn from(v: String) -> Self {
        Self::Str(v)
    }
}

impl<T: Into<ReportValue>> From<Vec<T>> for ReportValue {
    fn from(v: Vec<T>) -> Self {
        Self::List(v.into_iter().map(Into::into).collect())
    }
}

impl<T: Into<ReportValue>> From<Option<T>> for ReportValue {
    fn from(v: Option<T>) -> Self {
        v.map_or(Self::Null, Into::into)
    }
}

impl From<&Homography> for ReportValue {
    fn from(h: &Homography) -> Self {
        Self::List(h.to_rows().iter().map(|r| Self::from(r.to_vec())).collect())
    }
}

/// Writes `report` in canonical form. Non-finite numbers are rejected before
/// anything is written.
pub fn write_report(report: &ReportValue, path: &Path) -> Result<()> {
    let text = report.render().map_err(|m| write_err(path, m))?;
    let file = File::create(path).map_err(|e| write_err(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes())
        .and_then(|()| w.flush())
        .map_err(|e| write_err(path, e))
}

/// Reads back any JSON file as a generic value.
pub fn read_json_value(path: &Path) -> Result<serde_json::Value> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::MotionParams;
    use crate::pipeline::{Fallback, Mode};

    #[test]
    fn pgm_examples() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend([0, 64, 128, 255]);
        let f = decode_pgm(&bytes).unwrap();
        assert_eq!(f.dims(), (2, 2));
        assert_eq!(f.to_u8(), vec![0, 64, 128, 255]);
        assert!(decode_pgm(&bytes[..bytes.len() - 1]).is_err());
        let commented = b"P5 # c\n2 # w\n1\n255\n\x01\x02";
        assert_eq!(decode_pgm(commented).unwrap().to_u8(), vec![1, 2]);
        assert_eq!(encode_pgm(&f).unwrap(), bytes);
    }

    #[test]
    fn truncated_file_is_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.pgm");
        fs::write(&p, b"P5\n4 4\n255\n\x00\x01").unwrap();
        assert!(matches!(load_frame(&p), Err(Error::Decode { .. })));
        let q = dir.path().join("junk.png");
        fs::write(&q, b"hello").unwrap();
        assert!(matches!(load_frame(&q), Err(Error::Decode { .. })));
        assert!(matches!(load_frame(&dir.path().join("missing.png")), Err(Error::Io { .. })));
    }

    #[test]
    fn png_round_trip_gray_and_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let gray = Frame::from_u8(5, 3, 1, &(0..15).map(|v| v * 17).collect::<Vec<u8>>()).unwrap();
        let rgb = Frame::from_u8(4, 2, 3, &(0..24).map(|v| v * 10).collect::<Vec<u8>>()).unwrap();
        for (name, f) in [("g.png", &gray), ("c.png", &rgb), ("g.pgm", &gray)] {
            let p = dir.path().join(name);
            save_frame(f, &p).unwrap();
            let back = load_frame(&p).unwrap();
            assert_eq!(back.channels(), f.channels());
            assert_eq!(back.data(), f.data());
        }
    }

    #[test]
    fn mask_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        save_mask(&BinaryMask::zeros(7, 5), &p).unwrap();
        assert!(load_frame(&p).unwrap().to_u8().iter().all(|&v| v == 0));
        save_mask(&BinaryMask::ones(7, 5), &p).unwrap();
        assert!(load_frame(&p).unwrap().to_u8().iter().all(|&v| v == 255));
        let checker = BinaryMask::from_fn(9, 6, |x, y| (x + y) % 2 == 0);
        save_mask(&checker, &p).unwrap();
        assert_eq!(load_mask(&p).unwrap(), checker);
    }

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = parse_pipeline_config_str("{}").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.mode, Mode::Cascaded);
        assert_eq!(cfg.fallback, Fallback::ReuseLastH);
        assert_eq!(cfg.target_dims, (640, 640));
        assert_eq!(cfg.motion, MotionParams::default());
    }

    #[test]
    fn tau_order_is_validated() {
        let err = parse_pipeline_config_str(r#"{"motion": {"tau_s": 30, "tau_l": 15}}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("tau_l must exceed tau_s"));
    }

    #[test]
    fn unknown_keys_report_position() {
        let err = parse_pipeline_config_str("{\n  \"mode\": \"cascaded\",\n  \"typo\": 1\n}").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("typo"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_pipeline_config_str(r#"{"motion": {"tau_x": 1}}"#),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_synth_config_str(r#"{"bogus": 0}"#), Err(Error::Parse { .. })));
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.mode = Mode::Independent;
        cfg.fallback = Fallback::EmitEmptyMask;
        cfg.motion.tau_s = 12.5;
        cfg.ransac.rng_seed = 99;
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(parse_pipeline_config_str(&text).unwrap(), cfg);

        let mut synth = SynthConfig::default();
        synth.ego_motion.pan = (2.0, 0.5);
        synth.seed = 7;
        let text = serde_json::to_string(&synth).unwrap();
        assert_eq!(parse_synth_config_str(&text).unwrap(), synth);
    }

    #[test]
    fn float_formatting() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1.0 / 3.0, "0.333333"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e6"),
            (0.000012345678, "1.23457e-5"),
            (0.0001234, "0.0001234"),
            (99.99996, "100"),
        ];
        for (v, s) in cases {
            assert_eq!(format_float(v).unwrap(), s, "{v}");
        }
        assert!(format_float(f64::NAN).is_err());
        assert!(format_float(f64::INFINITY).is_err());
    }

    #[test]
    fn report_is_canonical() {
        let a = ReportValue::object()
            .with("zeta", 1.5)
            .with("alpha", vec![1usize, 2])
            .with("frames", 0usize)
            .with("nested", ReportValue::object().with("b", true).with("a", ReportValue::Null));
        let text = a.render().unwrap();
        assert_eq!(
            text,
            "{\n  \"alpha\": [\n    1,\n    2\n  ],\n  \"frames\": 0,\n  \"nested\": {\n    \"a\": null,\n    \"b\": true\n  },\n  \"zeta\": 1.5\n}\n"
        );
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["zeta"], 1.5);
    }

    #[test]
    fn nan_report_is_write_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        let r = ReportValue::object().with("timing", f64::NAN);
        assert!(matches!(write_report(&r, &p), Err(Error::Write { .. })));
        assert!(!p.exists());
        write_report(&ReportValue::object().with("frames", 0usize), &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "{\n  \"frames\": 0\n}\n");
    }

    #[test]
    fn manifest_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let f = Frame::filled(4, 4, 10.0);
        save_frame(&f, &dir.path().join("b.pgm")).unwrap();
        save_frame(&f, &dir.path().join("a.png")).unwrap();
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let listed = Manifest::from_dir(dir.path()).unwrap();
        assert_eq!(listed.frames, vec![dir.path().join("a.png"), dir.path().join("b.pgm")]);

        let mp = dir.path().join("m.json");
        fs::write(&mp, r#"{"frames": ["b.pgm", "a.png"], "gt_homographies": null}"#).unwrap();
        let m = Manifest::load(&mp).unwrap();
        assert_eq!(m.frames[0], dir.path().join("b.pgm"));
        fs::write(&mp, r#"{"frames": ["nope.pgm"]}"#).unwrap();
        assert!(matches!(Manifest::load(&mp), Err(Error::Io { .. })));
    }

    #[test]
    fn homography_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.json");
        let hs = vec![Homography::identity(), Homography::translation(2.0, -1.0)];
        save_homographies(&hs, &p).unwrap();
        assert_eq!(load_homographies(&p).unwrap(), hs);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn prop_frame_and_mask_round_trips(
            w in 1usize..40,
            h in 1usize..40,
            rgb in proptest::bool::ANY,
            bytes in proptest::collection::vec(proptest::num::u8::ANY, 40 * 40 * 3),
        ) {
            let gray = Frame::from_u8(w, h, 1, &bytes[..w * h]).unwrap();
            proptest::prop_assert_eq!(&decode_pgm(&encode_pgm(&gray).unwrap()).unwrap(), &gray);

            let dir = tempfile::tempdir().unwrap();
            let frame = if rgb { Frame::from_u8(w, h, 3, &bytes[..w * h * 3]).unwrap() } else { gray.clone() };
            let png = dir.path().join("f.png");
            save_frame(&frame, &png).unwrap();
            proptest::prop_assert_eq!(&load_frame(&png).unwrap(), &frame);

            let mask = BinaryMask::from_fn(w, h, |x, y| bytes[y * w + x] & 1 == 1);
            let mp = dir.path().join("m.png");
            save_mask(&mask, &mp).unwrap();
            proptest::prop_assert_eq!(load_mask(&mp).unwrap(), mask);
        }

        #[test]
        fn prop_report_is_order_independent(
            entries in proptest::collection::vec(("[a-z]{1,6}", proptest::num::i64::ANY, -1e9f64..1e9), 0..12),
        ) {
            let mut forward = ReportValue::object();
            for (k, i, f) in &entries {
                forward.insert(k.clone(), ReportValue::object().with("i", *i).with("f", *f));
            }
            // Distinct keys leave insertion order as the only difference.
            let mut keys: Vec<&String> = entries.iter().map(|e| &e.0).collect();
            keys.sort();
            keys.dedup();
            proptest::prop_assume!(keys.len() == entries.len());
            let mut backward = ReportValue::object();
            for (k, i, f) in entries.iter().rev() {
                backward.insert(k.clone(), ReportValue::object().with("i", *i).with("f", *f));
            }
            let text = forward.render().unwrap();
            proptest::prop_assert_eq!(&text, &backward.render().unwrap());
            let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
            for (k, i, _) in &entries {
                proptest::prop_assert_eq!(parsed[k.as_str()]["i"].as_i64(), Some(*i));
            }
        }
    }
}
