//! Text formats: the germ-spec mini-language, path/set/run-spec JSON, and a
//! deterministic JSON writer with 17 significant digits.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::borel::FormalSeries;
use crate::error::{Error, Result};
use crate::geometry::{smooth_waypoints, Path, SingularSet};
use crate::germ::{catalog_get, Germ};

/// Parse `1.5`, `-2i`, `2+0i`, `1e-3-0.5i`, `i`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("`{text}` is not a complex number"));
    if s.is_empty() {
        return Err(bad());
    }
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(num(&s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => num(t),
    };
    match split {
        Some(k) => Ok(Complex64::new(num(&body[..k])?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn parse_list(text: &str) -> Result<Vec<Complex64>> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("expected a bracketed list, got `{text}`")))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(parse_complex).collect()
}

/// Split a top-level argument list at commas outside brackets.
fn split_args(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (k, ch) in text.char_indices() {
        match ch {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..k].trim());
                start = k + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim());
    out
}

/// A germ from the mini-language, e.g. `geometric(2+0i)`, `log_f0`,
/// `rational([1],[1,-3,2])`.
pub fn parse_germ(spec: &str) -> Result<Germ> {
    let spec = spec.trim();
    let (name, args) = match spec.find('(') {
        Some(k) => {
            let rest = spec[k + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("missing `)` in `{spec}`")))?;
            (spec[..k].trim(), Some(rest))
        }
        None => (spec, None),
    };
    match (name, args) {
        ("rational", Some(a)) => {
            let parts = split_args(a);
            if parts.len() != 2 {
                return Err(Error::Parse(format!(
                    "rational takes a numerator and a denominator list, got {} arguments",
                    parts.len()
                )));
            }
            Germ::rational(parse_list(parts[0])?, parse_list(parts[1])?)
        }
        (_, Some(a)) => {
            let params = split_args(a)
                .into_iter()
                .map(parse_complex)
                .collect::<Result<Vec<_>>>()?;
            catalog_get(name, &params)
        }
        (_, None) => catalog_get(name, &[]),
    }
}

fn pair(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// `{"waypoints": [[re, im], ...], "rounding": r}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub waypoints: Vec<[f64; 2]>,
    #[serde(default)]
    pub rounding: Option<f64>,
}

impl PathSpec {
    pub fn build(&self) -> Result<Path> {
        let pts: Vec<Complex64> = self.waypoints.iter().copied().map(pair).collect();
        smooth_waypoints(&pts, self.rounding)
    }
}

pub fn parse_path(json: &str) -> Result<Path> {
    let spec: PathSpec = from_json_with_path(json, "path")?;
    spec.build()
}

/// A finite list `[[re, im], ...]`, `{"lattice": {"step": [re, im],
/// "exclude_zero": bool}}` or `{"progression": {"first": [..], "step": [..]}}`.
pub fn parse_set(json: &str) -> Result<SingularSet> {
    let v: Value = serde_json::from_str(json).map_err(|e| Error::Parse(format!("set: {e}")))?;
    set_from_value(&v)
}

fn set_from_value(v: &Value) -> Result<SingularSet> {
    let point = |v: &Value, field: &str| -> Result<Complex64> {
        serde_json::from_value::<[f64; 2]>(v.clone())
            .map(pair)
            .map_err(|e| Error::Parse(format!("set: field `{field}`: {e}")))
    };
    match v {
        Value::Array(items) => Ok(SingularSet::finite(
            items
                .iter()
                .map(|p| point(p, "points"))
                .collect::<Result<Vec<_>>>()?,
        )),
        Value::Object(map) if map.len() == 1 => {
            let (key, body) = map.iter().next().unwrap();
            let get = |f: &str| {
                body.get(f)
                    .ok_or_else(|| Error::Parse(format!("set: `{key}` is missing field `{f}`")))
            };
            match key.as_str() {
                "lattice" => {
                    let step = point(get("step")?, "step")?;
                    let exclude = match body.get("exclude_zero") {
                        None => false,
                        Some(b) => b.as_bool().ok_or_else(|| {
                            Error::Parse("set: field `exclude_zero` must be a boolean".into())
                        })?,
                    };
                    SingularSet::lattice(step, exclude)
                }
                "progression" => SingularSet::progression(point(get("first")?, "first")?, point(get("step")?, "step")?),
                _ => Err(Error::Parse(format!("set: unknown generator `{key}`"))),
            }
        }
        _ => Err(Error::Parse(
            "set: expected a list of points or a single-key generator object".into(),
        )),
    }
}

/// Either an inline path spec or the name of a file holding one.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum PathRef {
    Inline(PathSpec),
    File(String),
}

impl<'de> Deserialize<'de> for PathRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(name) => Ok(PathRef::File(name)),
            other => serde_path_to_error::deserialize(other)
                .map(PathRef::Inline)
                .map_err(|e| serde::de::Error::custom(format!("at `path.{}`: {}", e.path(), e.inner()))),
        }
    }
}

/// Deserialize, naming the offending field in the error.
fn from_json_with_path<T: serde::de::DeserializeOwned>(json: &str, what: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(json);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        if at == "." {
            Error::Parse(format!("{what}: {}", e.inner()))
        } else {
            Error::Parse(format!("{what}: at `{at}`: {}", e.inner()))
        }
    })
}

/// `{f, g, path, tolerance, n_nodes, field_variant, snapshots}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub f: String,
    pub g: String,
    pub path: PathRef,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub n_nodes: Option<usize>,
    #[serde(default)]
    pub field_variant: Option<String>,
    #[serde(default)]
    pub snapshots: Option<Vec<f64>>,
}

pub fn parse_run_spec(json: &str) -> Result<RunSpec> {
    from_json_with_path(json, "run spec")
}

pub fn parse_series(json: &str) -> Result<FormalSeries<Complex64>> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Raw {
        coeffs: Vec<[f64; 2]>,
        offset: usize,
        order: usize,
    }
    let raw: Raw = from_json_with_path(json, "series")?;
    FormalSeries::with_order(raw.coeffs.into_iter().map(pair).collect(), raw.offset, raw.order)
}

/// Serialize with every float printed to 17 significant digits; objects keep
/// field order, so equal inputs give byte-identical output.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(Error::Json)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(a) => a.iter().all(|x| !matches!(x, Value::Array(_) | Value::Object(_))),
        _ => true,
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if is_flat(v) => {
            out.push('[');
            for (k, x) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(out, x, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, x, indent + 2);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, x)) in map.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, x, indent + 2);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Snapshot nodes as CSV rows `t,index,re,im`.
pub fn snapshots_csv(snaps: &[crate::deformation::ContourSnapshot]) -> String {
    let mut out = String::from("t,index,re,im\n");
    for s in snaps {
        for (k, z) in s.nodes.iter().enumerate() {
            let _ = writeln!(out, "{},{k},{},{}", format_float(s.t), format_float(z.re), format_float(z.im));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("2+0i").unwrap(), c(2.0, 0.0));
        assert_eq!(parse_complex("-1.5").unwrap(), c(-1.5, 0.0));
        assert_eq!(parse_complex("0.5i").unwrap(), c(0.0, 0.5));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2e+1i").unwrap(), c(1e-3, -20.0));
        assert_eq!(parse_complex(" 3 - i ").unwrap(), c(3.0, -1.0));
        assert!(parse_complex("2+").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn germ_specs() {
        assert_eq!(parse_germ("geometric(2+0i)").unwrap().taylor_coeffs()[3], c(8.0, 0.0));
        assert_eq!(parse_germ("log_f0").unwrap().taylor_coeffs()[2], c(0.5, 0.0));
        let r = parse_germ("rational([1],[1,-3,2])").unwrap();
        let poles = r.singular_set().finite_points().unwrap();
        assert_eq!(poles.len(), 2);
        assert!((poles[0] - c(0.5, 0.0)).norm() < 1e-14 && (poles[1] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(parse_germ("bessel").is_err());
        assert!(parse_germ("geometric(0)").is_err());
        assert!(parse_germ("rational([1])").is_err());
        assert!(parse_germ("geometric(2").is_err());
    }

    #[test]
    fn paths_and_sets() {
        let p = parse_path(r#"{"waypoints": [[0.3, 0], [0.3, 0.5], [1, 0.5]], "rounding": 0.1}"#).unwrap();
        assert!((p.end() - c(1.0, 0.5)).norm() < 1e-15);
        let e = parse_path(r#"{"points": [[0, 0]]}"#).unwrap_err().to_string();
        assert!(e.contains("points") || e.contains("waypoints"), "{e}");
        let s = parse_set("[[1, 0], [0, 2]]").unwrap();
        assert_eq!(s.finite_points().unwrap().len(), 2);
        let l = parse_set(r#"{"lattice": {"step": [0, 6.283185307179586], "exclude_zero": true}}"#).unwrap();
        assert!(!l.contains_zero());
        let g = parse_set(r#"{"progression": {"first": [1, 0], "step": [1, 0]}}"#).unwrap();
        assert_eq!(g.enumerate(3.5).len(), 3);
        assert!(parse_set(r#"{"lattice": {}}"#).unwrap_err().to_string().contains("step"));
    }

    #[test]
    fn run_spec_rejects_unknown_fields() {
        let ok = r#"{"f": "log_f0", "g": "geometric(1)", "path": "square.json"}"#;
        assert!(matches!(parse_run_spec(ok).unwrap().path, PathRef::File(_)));
        let bad = r#"{"f": "log_f0", "g": "geometric(1)", "path": "x", "nodes": 3}"#;
        assert!(parse_run_spec(bad).unwrap_err().to_string().contains("nodes"));
        let bad_path = r#"{"f": "log_f0", "g": "geometric(1)", "path": {"waypoints": [[0.3, 0], "x"]}}"#;
        let msg = parse_run_spec(bad_path).unwrap_err().to_string();
        assert!(msg.contains("path.waypoints[1]"), "{msg}");
        let msg = parse_path(r#"{"waypoints": [[0.3, 0]], "round": 1}"#).unwrap_err().to_string();
        assert!(msg.contains("round"), "{msg}");
    }

    #[test]
    fn json_writer_round_trips() {
        let x = 10.0_f64 / 7.0;
        let s = to_json(&serde_json::json!({"v": [x, -0.0, 3], "s": "a\"b"})).unwrap();
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["v"][0].as_f64().unwrap(), x);
        assert!(s.contains("1.4285714285714286e0"));
        assert_eq!(s, to_json(&serde_json::json!({"v": [x, -0.0, 3], "s": "a\"b"})).unwrap());
    }

    #[test]
    fn series_json() {
        let f = parse_series(r#"{"coeffs": [[1, 0], [0.5, 0]], "offset": 1, "order": 3}"#).unwrap();
        assert_eq!(f.coeff(2), Some(c(0.5, 0.0)));
        assert!(parse_series(r#"{"coeffs": [[1, 0]], "offset": 1, "order": 3}"#).is_err());
    }
}
