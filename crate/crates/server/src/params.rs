//! Query-string decoding. Unknown or repeated parameters are rejected so a
//! mistyped filter never silently widens a result.

use std::collections::BTreeMap;

use geomedia::codec::{epoch_to_iso, parse_datetime};
use geomedia::query::Near;
use geomedia::{BBox, GeoPoint, QuerySpec, TimeInterval, TimeStamp, TimeStyle};
use serde_json::{json, Map, Value};

use crate::error::ApiError;

pub const DEFAULT_LIMIT: usize = 10;
pub const MAX_LIMIT: usize = 10_000;

/// Decoded `key=value` pairs, restricted to `allowed` keys.
#[derive(Debug, Default)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn parse(raw: Option<&str>, allowed: &[&str]) -> Result<Self, ApiError> {
        let mut out = BTreeMap::new();
        for (k, v) in form_urlencoded::parse(raw.unwrap_or("").as_bytes()) {
            if !allowed.contains(&k.as_ref()) {
                let expected = if allowed.is_empty() {
                    "none".to_string()
                } else {
                    allowed.join(", ")
                };
                return Err(ApiError::bad_query(format!(
                    "unknown query parameter {k:?} (expected: {expected})"
                )));
            }
            if out.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ApiError::bad_query(format!("query parameter {k:?} given twice")));
            }
        }
        Ok(Params(out))
    }

    /// Parameters given some other way than a query string, such as command
    /// line flags. Absent values are skipped.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Option<String>)>) -> Self {
        Params(
            pairs
                .into_iter()
                .filter_map(|(k, v)| Some((k.to_string(), v?)))
                .collect(),
        )
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, ApiError> {
        self.get(key)
            .ok_or_else(|| ApiError::bad_query(format!("missing query parameter {key:?}")))
    }
}

/// A plain decimal number: digits, sign, point and exponent only.
pub fn parse_decimal(s: &str, what: &str) -> Result<f64, ApiError> {
    let s = s.trim();
    let plain = !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'-' | b'+' | b'.' | b'e' | b'E'));
    match s.parse::<f64>() {
        Ok(v) if plain && v.is_finite() => Ok(v),
        _ => Err(ApiError::bad_query(format!("{what}: {s:?} is not a decimal number"))),
    }
}

pub fn parse_numbers<const N: usize>(s: &str, what: &str) -> Result<[f64; N], ApiError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(ApiError::bad_query(format!(
            "{what} needs {N} comma-separated numbers, got {:?}",
            s
        )));
    }
    let mut out = [0.0; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = parse_decimal(part, what)?;
    }
    Ok(out)
}

pub fn parse_bbox(s: &str) -> Result<BBox, ApiError> {
    let [a, b, c, d] = parse_numbers::<4>(s, "bbox")?;
    BBox::new(a, b, c, d)
        .ok_or_else(|| ApiError::bad_query(format!("bbox {s} is inverted or out of range")))
}

pub fn parse_point(s: &str, what: &str) -> Result<GeoPoint, ApiError> {
    let [lon, lat] = parse_numbers::<2>(s, what)?;
    GeoPoint::lon_lat(lon, lat).map_err(|e| ApiError::bad_query(format!("{what}: {e}")))
}

/// An ISO instant or epoch milliseconds.
pub fn parse_instant(s: &str) -> Result<TimeStamp, ApiError> {
    let s = s.trim();
    let digits = s.strip_prefix('-').unwrap_or(s);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        return s
            .parse::<i64>()
            .map(TimeStamp)
            .map_err(|_| ApiError::bad_query(format!("{s:?} is out of range")));
    }
    parse_datetime(s).map_err(|e| ApiError::bad_query(e.to_string()))
}

/// `instant`, `start/end`, with `..` for an open end.
pub fn parse_datetime_param(s: &str) -> Result<TimeInterval, ApiError> {
    let bound = |part: &str, open: TimeStamp| match part.trim() {
        ".." | "" => Ok(open),
        p => parse_instant(p),
    };
    let iv = match s.split_once('/') {
        None => return Ok(TimeInterval::instant(parse_instant(s)?)),
        Some((a, b)) => TimeInterval::new(bound(a, TimeStamp(i64::MIN))?, bound(b, TimeStamp(i64::MAX))?),
    };
    iv.map_err(|e| ApiError::bad_query(format!("datetime: {e}")))
}

pub fn parse_style(params: &Params) -> Result<TimeStyle, ApiError> {
    match params.get("time") {
        None => Ok(TimeStyle::Epoch),
        Some(s) => TimeStyle::parse(s)
            .ok_or_else(|| ApiError::bad_query(format!("time must be iso or epoch, got {s:?}"))),
    }
}

fn parse_count(s: &str, what: &str) -> Result<usize, ApiError> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| ApiError::bad_query(format!("{what} must be a non-negative integer, got {s:?}")))
}

pub const ITEMS_PARAMS: &[&str] = &["bbox", "datetime", "near", "visibleFrom", "limit", "offset", "time"];

/// Decode the filter parameters of an items request.
pub fn items_query(params: &Params) -> Result<QuerySpec, ApiError> {
    let mut q = QuerySpec::default();
    if let Some(s) = params.get("bbox") {
        q.bbox = Some(parse_bbox(s)?);
    }
    if let Some(s) = params.get("datetime") {
        q.interval = Some(parse_datetime_param(s)?);
    }
    if let Some(s) = params.get("near") {
        let [lon, lat, radius_m] = parse_numbers::<3>(s, "near")?;
        let center = GeoPoint::lon_lat(lon, lat).map_err(|e| ApiError::bad_query(format!("near: {e}")))?;
        if radius_m <= 0.0 {
            return Err(ApiError::bad_query(format!("near radius must be positive, got {radius_m}")));
        }
        q.near = Some(Near { center, radius_m });
    }
    if let Some(s) = params.get("visibleFrom") {
        q.visible_from = Some(parse_point(s, "visibleFrom")?);
    }
    if let Some(s) = params.get("limit") {
        q.limit = parse_count(s, "limit")?;
        if !(1..=MAX_LIMIT).contains(&q.limit) {
            return Err(ApiError::bad_query(format!("limit must be between 1 and {MAX_LIMIT}")));
        }
    }
    if let Some(s) = params.get("offset") {
        q.offset = parse_count(s, "offset")?;
    }
    Ok(q)
}

fn interval_text(iv: &TimeInterval) -> String {
    let side = |t: TimeStamp| match t.0 {
        i64::MIN | i64::MAX => "..".to_string(),
        _ => epoch_to_iso(t),
    };
    if iv.start() == iv.end() {
        side(iv.start())
    } else {
        format!("{}/{}", side(iv.start()), side(iv.end()))
    }
}

/// The decoded query in normalized form, echoed back in list responses.
pub fn echo(q: &QuerySpec) -> Value {
    let mut m = Map::new();
    if let Some(b) = &q.bbox {
        m.insert("bbox".into(), json!(b.to_array()));
    }
    if let Some(iv) = &q.interval {
        m.insert("datetime".into(), json!(interval_text(iv)));
    }
    if let Some(n) = &q.near {
        m.insert("near".into(), json!([n.center.lon, n.center.lat, n.radius_m]));
    }
    if let Some(p) = &q.visible_from {
        m.insert("visibleFrom".into(), json!([p.lon, p.lat]));
    }
    m.insert("limit".into(), json!(q.limit));
    m.insert("offset".into(), json!(q.offset));
    Value::Object(m)
}
