//! Serialization helpers: JSON and CSV with 17 significant digits, spec
//! loading from inline JSON or files, and content hashes.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits; `{:.16e}` round-trips
/// every finite `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON formatter writing floats as `{:.16e}`.
struct Float17<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

macro_rules! forward {
    ($($name:ident ( $($arg:ident : $ty:ty),* );)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for Float17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        w.write_all(format!("{v:.16e}").as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        self.write_f64(w, v as f64)
    }

    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = Float17 {
        inner: serde_json::ser::PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Minimal CSV writer; fields are numbers or plain labels.
#[derive(Debug, Default, Clone)]
pub struct Csv {
    out: String,
}

pub enum Field<'a> {
    F(f64),
    U(u64),
    S(&'a str),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Csv { out }
    }

    pub fn row(&mut self, fields: &[Field]) {
        let cells: Vec<String> = fields
            .iter()
            .map(|f| match f {
                Field::F(v) => fmt_f64(*v),
                Field::U(v) => v.to_string(),
                Field::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
                Field::S(s) => s.to_string(),
            })
            .collect();
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `text` as JSON when it looks like an object, otherwise reads it
/// as a file path. Returns the value and the directory relative paths
/// inside it resolve against.
pub fn load_spec<T: DeserializeOwned>(text: &str) -> Result<(T, Option<PathBuf>)> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let v = serde_json::from_str(trimmed).map_err(|e| Error::Config(format!("inline spec: {e}")))?;
        return Ok((v, None));
    }
    let path = Path::new(text);
    let body = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let v = serde_json::from_str(&body).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok((v, path.parent().map(Path::to_path_buf)))
}

/// Parses `a+bi`, `a-bi`, `bi`, `a`, or `[a, b]`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Config(format!("cannot parse complex number `{text}`"));
    if let Some(inner) = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 2 {
            return Err(bad());
        }
        let re = parts[0].parse().map_err(|_| bad())?;
        let im = parts[1].parse().map_err(|_| bad())?;
        return Ok(Complex64::new(re, im));
    }
    let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) else {
        return s.parse().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let coef = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(Complex64::new(body[..k].parse().map_err(|_| bad())?, coef(&body[k..])?)),
        None => Ok(Complex64::new(0.0, coef(body)?)),
    }
}

/// Parses `geometric:start:ratio:count` or a comma-separated list.
pub fn parse_h_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse h-grid `{text}`"));
    if let Some(rest) = text.strip_prefix("geometric:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].parse().map_err(|_| bad())?;
        let ratio: f64 = parts[1].parse().map_err(|_| bad())?;
        let count: usize = parts[2].parse().map_err(|_| bad())?;
        return crate::compactness::geometric_grid(start, ratio, count)
            .map_err(|e| Error::Config(e.to_string()));
    }
    let list = text.strip_prefix("list:").unwrap_or(text);
    list.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect()
}

/// Parses `a..b` (inclusive) or a single index.
pub fn parse_range(text: &str) -> Result<(u32, u32)> {
    let bad = || Error::Config(format!("cannot parse index range `{text}`"));
    match text.split_once("..") {
        Some((a, b)) => {
            let a: u32 = a.parse().map_err(|_| bad())?;
            let b: u32 = b.trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok((a, b))
        }
        None => {
            let n = text.parse().map_err(|_| bad())?;
            Ok((n, n))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        #[derive(Serialize)]
        struct T {
            x: f64,
            v: Vec<f64>,
        }
        let t = T { x: 0.1, v: vec![1.0 / 3.0, -2.5e-300, f64::MAX] };
        let s = to_json(&t).unwrap();
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
        assert_eq!(back["v"][0].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(back["v"][2].as_f64().unwrap(), f64::MAX);
        assert!(s.contains("1.0000000000000001e-1"));
    }

    #[test]
    fn complex_parsing() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("0.5+3.0i").unwrap(), c(0.5, 3.0));
        assert_eq!(parse_complex("-0.5-2i").unwrap(), c(-0.5, -2.0));
        assert_eq!(parse_complex("1e-3+1e-2i").unwrap(), c(1e-3, 1e-2));
        assert_eq!(parse_complex("0.7").unwrap(), c(0.7, 0.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("[0.1, -0.2]").unwrap(), c(0.1, -0.2));
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn grids_and_ranges() {
        let g = parse_h_grid("geometric:0.25:2:12").unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g[11], 0.25 / 2048.0);
        assert_eq!(parse_h_grid("0.2,0.1").unwrap(), vec![0.2, 0.1]);
        assert_eq!(parse_range("1..8").unwrap(), (1, 8));
        assert_eq!(parse_range("3").unwrap(), (3, 3));
        assert!(parse_range("5..2").is_err());
    }

    #[test]
    fn csv_fields() {
        let mut csv = Csv::new(&["h", "label"]);
        csv.row(&[Field::F(0.5), Field::S("a,b")]);
        assert_eq!(csv.finish(), "h,label\n5.0000000000000000e-1,\"a,b\"\n");
    }
}
