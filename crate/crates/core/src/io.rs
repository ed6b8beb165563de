//! JSON state files.
//!
//! ```json
//! {
//!   "format_version": "1.0",
//!   "dims": [2, 2],
//!   "truncated_from_infinite": false,
//!   "entries": [
//!     {"index": [0, 1], "re": "7.0710678118654746e-1", "im": "0.0000000000000000e0",
//!      "re_hex": "0x1.6a09e667f3bccp-1", "im_hex": "0x0p+0"}
//!   ],
//!   "metadata": {}
//! }
//! ```
//!
//! Amplitudes are written as 17-significant-digit decimal strings, which
//! already round-trip, plus an optional hex-float copy. When both are
//! present they must agree bit for bit. Plain JSON numbers are accepted on
//! input.

use std::collections::BTreeSet;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::state::{MultiIndex, StateTensor};

pub const FORMAT_VERSION: &str = "1.0";
pub const SUPPORTED_MAJOR: u64 = 1;

pub type Metadata = Map<String, Value>;

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedState {
    pub state: StateTensor,
    pub metadata: Metadata,
}

/// `0x1.<hex>p<exp>` for normal numbers, `0x0.<hex>p-1022` for subnormals,
/// `0x0p+0` for zero; trailing zero digits are dropped.
pub fn format_hex_float(x: f64) -> String {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if biased == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let mut digits = format!("{mantissa:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let frac = if digits.is_empty() { String::new() } else { format!(".{digits}") };
    format!("{sign}0x{lead}{frac}p{exp:+}")
}

/// Inverse of [`format_hex_float`]; also accepts trailing zero digits.
pub fn parse_hex_float(s: &str) -> Option<f64> {
    let (negative, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let rest = rest.strip_prefix("0x")?;
    let (mant, exp) = rest.split_once('p')?;
    let exp: i64 = exp.parse().ok()?;
    let (lead, frac) = match mant.split_once('.') {
        Some((l, f)) if !f.is_empty() => (l, f),
        Some(_) => return None,
        None => (mant, ""),
    };
    if frac.len() > 13 || !frac.chars().all(|c| c.is_ascii_hexdigit()) {
        return None;
    }
    let mut fraction = if frac.is_empty() { 0 } else { u64::from_str_radix(frac, 16).ok()? };
    fraction <<= 4 * (13 - frac.len());
    let biased = match lead {
        "1" if (-1022..=1023).contains(&exp) => (exp + 1023) as u64,
        "0" if fraction == 0 && exp == 0 => 0,
        "0" if fraction != 0 && exp == -1022 => 0,
        _ => return None,
    };
    let sign = if negative { 1u64 << 63 } else { 0 };
    Some(f64::from_bits(sign | (biased << 52) | fraction))
}

fn format_decimal(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn state_to_json(v: &StateTensor, metadata: &Metadata) -> Value {
    let entries: Vec<Value> = v
        .entries()
        .map(|(idx, a)| {
            json!({
                "index": idx.coords(),
                "re": format_decimal(a.re),
                "im": format_decimal(a.im),
                "re_hex": format_hex_float(a.re),
                "im_hex": format_hex_float(a.im),
            })
        })
        .collect();
    json!({
        "format_version": FORMAT_VERSION,
        "dims": v.dims(),
        "truncated_from_infinite": v.truncated_from_infinite(),
        "entries": entries,
        "metadata": Value::Object(metadata.clone()),
    })
}

pub fn state_to_string(v: &StateTensor, metadata: &Metadata) -> String {
    serde_json::to_string_pretty(&state_to_json(v, metadata)).expect("JSON values always serialize")
}

fn malformed(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Malformed {
        field: field.into(),
        message: message.into(),
    }
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], at: &str) -> Result<()> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            let field = if at.is_empty() { key.clone() } else { format!("{at}.{key}") };
            return Err(malformed(field, "unknown field"));
        }
    }
    Ok(())
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str, at: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| {
        let field = if at.is_empty() { key.to_string() } else { format!("{at}.{key}") };
        malformed(field, "missing")
    })
}

fn nat_list(value: &Value, field: &str) -> Result<Vec<usize>> {
    let arr = value.as_array().ok_or_else(|| malformed(field, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| {
            x.as_u64()
                .and_then(|n| usize::try_from(n).ok())
                .ok_or_else(|| malformed(format!("{field}[{k}]"), "expected a non-negative integer"))
        })
        .collect()
}

fn check_version(value: &Value) -> Result<()> {
    let found = value
        .as_str()
        .ok_or_else(|| malformed("format_version", "expected a string"))?;
    let parsed = found
        .split_once('.')
        .and_then(|(major, minor)| Some((major.parse::<u64>().ok()?, minor.parse::<u64>().ok()?)));
    match parsed {
        None => Err(malformed("format_version", format!("'{found}' is not of the form MAJOR.MINOR"))),
        Some((major, _)) if major != SUPPORTED_MAJOR => Err(Error::VersionMismatch {
            found: found.to_string(),
            supported: format!("{SUPPORTED_MAJOR}.x"),
        }),
        Some(_) => Ok(()),
    }
}

fn component(entry: &Map<String, Value>, part: &str, at: &str) -> Result<f64> {
    let field = format!("{at}.{part}");
    let (text, decimal) = match required(entry, part, at)? {
        Value::String(text) => {
            let x: f64 = text
                .trim()
                .parse()
                .map_err(|_| malformed(&field, format!("'{text}' is not a number")))?;
            (text.clone(), x)
        }
        Value::Number(n) => (n.to_string(), n.as_f64().ok_or_else(|| malformed(&field, "number out of range"))?),
        _ => return Err(malformed(&field, "expected a decimal string or number")),
    };
    if !decimal.is_finite() {
        return Err(malformed(&field, "amplitude must be finite"));
    }
    let hex_key = format!("{part}_hex");
    match entry.get(&hex_key) {
        None | Some(Value::Null) => Ok(decimal),
        Some(h) => {
            let hex_field = format!("{at}.{hex_key}");
            let hex_text = h.as_str().ok_or_else(|| malformed(&hex_field, "expected a hex-float string"))?;
            let hex = parse_hex_float(hex_text)
                .ok_or_else(|| malformed(&hex_field, format!("'{hex_text}' is not a hex float")))?;
            if hex.to_bits() != decimal.to_bits() {
                return Err(malformed(&hex_field, format!("disagrees with {part} = {text}")));
            }
            Ok(hex)
        }
    }
}

pub fn state_from_json(value: &Value) -> Result<LoadedState> {
    let obj = value.as_object().ok_or_else(|| malformed("(root)", "expected a JSON object"))?;
    check_keys(
        obj,
        &["format_version", "dims", "truncated_from_infinite", "entries", "metadata"],
        "",
    )?;
    check_version(required(obj, "format_version", "")?)?;
    let dims = nat_list(required(obj, "dims", "")?, "dims")?;
    let truncated = match obj.get("truncated_from_infinite") {
        None => false,
        Some(v) => v
            .as_bool()
            .ok_or_else(|| malformed("truncated_from_infinite", "expected a boolean"))?,
    };
    let metadata = match obj.get("metadata") {
        None | Some(Value::Null) => Metadata::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(malformed("metadata", "expected an object")),
    };
    let raw = required(obj, "entries", "")?
        .as_array()
        .ok_or_else(|| malformed("entries", "expected an array"))?;

    let mut seen = BTreeSet::new();
    let mut entries = Vec::with_capacity(raw.len());
    for (k, e) in raw.iter().enumerate() {
        let at = format!("entries[{k}]");
        let e = e.as_object().ok_or_else(|| malformed(&at, "expected an object"))?;
        check_keys(e, &["index", "re", "im", "re_hex", "im_hex"], &at)?;
        let index = MultiIndex(nat_list(required(e, "index", &at)?, &format!("{at}.index"))?);
        if index.len() != dims.len() {
            return Err(malformed(
                format!("{at}.index"),
                format!("index {index} has {} coordinates, dims has {}", index.len(), dims.len()),
            ));
        }
        if let Some(axis) = (0..dims.len()).find(|&a| index.coords()[a] >= dims[a]) {
            return Err(malformed(
                format!("{at}.index"),
                format!("index {index} is out of range on axis {axis} (dims {dims:?})"),
            ));
        }
        if !seen.insert(index.clone()) {
            return Err(malformed(format!("{at}.index"), format!("duplicate index {index}")));
        }
        let re = component(e, "re", &at)?;
        let im = component(e, "im", &at)?;
        entries.push((index, Complex64::new(re, im)));
    }
    let state = StateTensor::new(dims, entries, false)
        .map_err(|err| malformed("dims", err.to_string()))?
        .with_truncated_from_infinite(truncated);
    Ok(LoadedState { state, metadata })
}

pub fn state_from_str(text: &str) -> Result<LoadedState> {
    let value: Value = serde_json::from_str(text).map_err(|e| malformed("(root)", format!("invalid JSON: {e}")))?;
    state_from_json(&value)
}

pub fn save_state_with(v: &StateTensor, metadata: &Metadata, path: impl AsRef<Path>) -> Result<()> {
    let mut text = state_to_string(v, metadata);
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn save_state(v: &StateTensor, path: impl AsRef<Path>) -> Result<()> {
    save_state_with(v, &Metadata::new(), path)
}

pub fn load_state_file(path: impl AsRef<Path>) -> Result<LoadedState> {
    let text = std::fs::read_to_string(path)?;
    state_from_str(&text)
}

pub fn load_state(path: impl AsRef<Path>) -> Result<StateTensor> {
    Ok(load_state_file(path)?.state)
}
