//! GeoMedia JSON reading and writing.
//!
//! The format extends OGC Moving Features JSON with an integer `timeline`
//! member (epoch milliseconds) next to ISO `datetimes`, an optional
//! `coordinates` track for moving doubles, and `fov` objects for photos and
//! videos:
//!
//! ```json
//! {
//!   "type": "MovingPoint",
//!   "coordinates": [[150.0, 50.0, 10], [160.0, 60.0, 12]],
//!   "datetimes": ["2018-08-01T13:01:01Z", "2018-08-01T13:01:02Z"],
//!   "interpolation": "linear"
//! }
//! ```
//!
//! Reading is strict about structure (duplicate members and trailing commas
//! are errors) but tolerant of the annotations people put in hand-written
//! listings: `//` line comments are skipped and stray whitespace around
//! member names and datetime strings is ignored. Every error carries a JSON
//! pointer to the offending member.
//!
//! Writing is canonical: a fixed member order per media type, defaults
//! written out explicitly, unknown members appended in their original order.

use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};
use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};
use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::fov::FieldOfView;
use crate::media::{GeoMediaDocument, Media, MediaError, MediaKind, MovingVideo, StPhoto};
use crate::temporal::{
    GeoPoint, InterpolationMode, MovingDouble, MovingPoint, TemporalError, TimeStamp,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    BadJson {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: unknown media type {found:?}")]
    UnknownType { path: String, found: String },
    #[error("{path}: has {found} entries, expected {expected}")]
    LengthMismatch {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: time is not later than the previous entry")]
    NonIncreasingTime { path: String },
    #[error("{path}: {message}")]
    BadFieldValue { path: String, message: String },
    #[error("{path}: bad datetime {value:?} ({message})")]
    BadDateTime {
        path: String,
        value: String,
        message: String,
    },
}

impl CodecError {
    /// JSON pointer to the offending member; empty for the document root.
    pub fn path(&self) -> &str {
        match self {
            CodecError::BadJson { .. } => "",
            CodecError::UnknownType { path, .. }
            | CodecError::LengthMismatch { path, .. }
            | CodecError::NonIncreasingTime { path }
            | CodecError::BadFieldValue { path, .. }
            | CodecError::BadDateTime { path, .. } => path,
        }
    }

    /// Short name of the error kind, e.g. `LengthMismatch`.
    pub fn code(&self) -> &'static str {
        match self {
            CodecError::BadJson { .. } => "BadJson",
            CodecError::UnknownType { .. } => "UnknownType",
            CodecError::LengthMismatch { .. } => "LengthMismatch",
            CodecError::NonIncreasingTime { .. } => "NonIncreasingTime",
            CodecError::BadFieldValue { .. } => "BadFieldValue",
            CodecError::BadDateTime { .. } => "BadDateTime",
        }
    }
}

/// Which member carries the time array on output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeStyle {
    /// `"datetimes"` with ISO-8601 UTC strings.
    Iso,
    /// `"timeline"` with integer epoch milliseconds.
    #[default]
    Epoch,
}

impl TimeStyle {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "iso" => Some(TimeStyle::Iso),
            "epoch" => Some(TimeStyle::Epoch),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// datetimes

/// Parse an ISO-8601 UTC instant such as `2018-08-01T13:01:01.250Z`.
///
/// Only the `Z` designator is accepted. Month and day may be one or two
/// digits; fractional seconds up to millisecond precision.
pub fn parse_datetime(s: &str) -> Result<TimeStamp, CodecError> {
    parse_datetime_at(s, "")
}

fn parse_datetime_at(s: &str, path: &str) -> Result<TimeStamp, CodecError> {
    let fail = |message: &str| CodecError::BadDateTime {
        path: path.to_string(),
        value: s.to_string(),
        message: message.to_string(),
    };
    let text = s.trim();
    let body = text
        .strip_suffix('Z')
        .ok_or_else(|| fail("expected a UTC time ending in 'Z'"))?;
    let (date, time) = body
        .split_once('T')
        .ok_or_else(|| fail("expected 'T' between date and time"))?;

    let mut date_parts = date.split('-');
    let year = number_field(date_parts.next(), 4, 4).ok_or_else(|| fail("bad year"))?;
    let month = number_field(date_parts.next(), 1, 2).ok_or_else(|| fail("bad month"))?;
    let day = number_field(date_parts.next(), 1, 2).ok_or_else(|| fail("bad day"))?;
    if date_parts.next().is_some() {
        return Err(fail("bad date"));
    }

    let (hms, frac) = match time.split_once('.') {
        Some((hms, frac)) => (hms, Some(frac)),
        None => (time, None),
    };
    let mut time_parts = hms.split(':');
    let hour = number_field(time_parts.next(), 2, 2).ok_or_else(|| fail("bad hour"))?;
    let minute = number_field(time_parts.next(), 2, 2).ok_or_else(|| fail("bad minute"))?;
    let second = number_field(time_parts.next(), 2, 2).ok_or_else(|| fail("bad second"))?;
    if time_parts.next().is_some() {
        return Err(fail("bad time"));
    }
    let millis = match frac {
        None => 0,
        Some(f) => {
            let digits = number_field(Some(f), 1, 3).ok_or_else(|| fail("bad fraction"))?;
            digits * 10u32.pow(3 - f.len() as u32)
        }
    };

    let date = NaiveDate::from_ymd_opt(year as i32, month, day)
        .ok_or_else(|| fail("no such calendar date"))?;
    let time = NaiveTime::from_hms_milli_opt(hour, minute, second, millis)
        .filter(|_| second < 60)
        .ok_or_else(|| fail("time of day out of range"))?;
    Ok(TimeStamp(
        NaiveDateTime::new(date, time).and_utc().timestamp_millis(),
    ))
}

fn number_field(part: Option<&str>, min_len: usize, max_len: usize) -> Option<u32> {
    let part = part?;
    if part.len() < min_len || part.len() > max_len || !part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    part.parse().ok()
}

/// Format as `YYYY-MM-DDThh:mm:ss[.sss]Z`; the fraction is left out when it is zero.
pub fn epoch_to_iso(t: TimeStamp) -> String {
    match DateTime::from_timestamp_millis(t.0) {
        Some(dt) if t.0.rem_euclid(1000) == 0 => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string(),
        None => format!("{}ms", t.0),
    }
}

// ---------------------------------------------------------------------------
// strict JSON

/// Remove `//` comments that sit outside string literals.
fn strip_line_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    let mut in_string = false;
    while let Some(c) = chars.next() {
        if in_string {
            out.push(c);
            match c {
                '\\' => {
                    if let Some(escaped) = chars.next() {
                        out.push(escaped);
                    }
                }
                '"' => in_string = false,
                _ => {}
            }
        } else if c == '/' && chars.peek() == Some(&'/') {
            for skipped in chars.by_ref() {
                if skipped == '\n' {
                    out.push('\n');
                    break;
                }
            }
        } else {
            if c == '"' {
                in_string = true;
            }
            out.push(c);
        }
    }
    out
}

/// A JSON value whose objects were checked for duplicate member names.
struct StrictValue(Value);

impl<'de> Deserialize<'de> for StrictValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(StrictVisitor).map(StrictValue)
    }
}

struct StrictVisitor;

impl<'de> Visitor<'de> for StrictVisitor {
    type Value = Value;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("any JSON value")
    }

    fn visit_bool<E>(self, v: bool) -> Result<Value, E> {
        Ok(Value::Bool(v))
    }

    fn visit_i64<E>(self, v: i64) -> Result<Value, E> {
        Ok(Value::Number(v.into()))
    }

    fn visit_u64<E>(self, v: u64) -> Result<Value, E> {
        Ok(Value::Number(v.into()))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Value, E> {
        Number::from_f64(v)
            .map(Value::Number)
            .ok_or_else(|| E::custom("non-finite number"))
    }

    fn visit_str<E>(self, v: &str) -> Result<Value, E> {
        Ok(Value::String(v.to_string()))
    }

    fn visit_string<E>(self, v: String) -> Result<Value, E> {
        Ok(Value::String(v))
    }

    fn visit_unit<E>(self) -> Result<Value, E> {
        Ok(Value::Null)
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Value, A::Error> {
        let mut items = Vec::new();
        while let Some(StrictValue(v)) = seq.next_element()? {
            items.push(v);
        }
        Ok(Value::Array(items))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Value, A::Error> {
        let mut map = Map::new();
        while let Some(key) = access.next_key::<String>()? {
            let key = key.trim().to_string();
            if map.contains_key(&key) {
                return Err(de::Error::custom(format!("duplicate member {key:?}")));
            }
            let StrictValue(v) = access.next_value()?;
            map.insert(key, v);
        }
        Ok(Value::Object(map))
    }
}

fn parse_strict_json(bytes: &[u8]) -> Result<Value, CodecError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CodecError::BadJson {
        line: 0,
        column: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let cleaned = strip_line_comments(text);
    let mut de = serde_json::Deserializer::from_str(&cleaned);
    let to_codec = |e: serde_json::Error| CodecError::BadJson {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    let StrictValue(v) = StrictValue::deserialize(&mut de).map_err(to_codec)?;
    de.end().map_err(to_codec)?;
    Ok(v)
}

// ---------------------------------------------------------------------------
// decoding

fn pointer(base: &str, key: &str) -> String {
    format!("{base}/{}", key.replace('~', "~0").replace('/', "~1"))
}

fn bad(path: impl Into<String>, message: impl Into<String>) -> CodecError {
    CodecError::BadFieldValue {
        path: path.into(),
        message: message.into(),
    }
}

/// Reads known members out of an object, leaving the rest behind.
struct Members {
    path: String,
    map: Map<String, Value>,
}

impl Members {
    fn new(value: Value, path: &str) -> Result<Self, CodecError> {
        match value {
            Value::Object(map) => Ok(Members {
                path: path.to_string(),
                map,
            }),
            _ => Err(bad(path, "expected an object")),
        }
    }

    fn at(&self, key: &str) -> String {
        pointer(&self.path, key)
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.map.shift_remove(key)
    }

    fn require(&mut self, key: &str) -> Result<Value, CodecError> {
        self.take(key)
            .ok_or_else(|| bad(self.at(key), "required member is missing"))
    }

    fn take_number(&mut self, key: &str) -> Result<Option<f64>, CodecError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => as_f64(&v, &self.at(key)).map(Some),
        }
    }

    fn take_string(&mut self, key: &str) -> Result<Option<String>, CodecError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(bad(self.at(key), "expected a string")),
        }
    }

    fn reject_leftovers(self) -> Result<(), CodecError> {
        match self.map.keys().next() {
            Some(k) => Err(bad(pointer(&self.path, k), "unknown member")),
            None => Ok(()),
        }
    }
}

fn as_f64(v: &Value, path: &str) -> Result<f64, CodecError> {
    v.as_f64().ok_or_else(|| bad(path, "expected a number"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, CodecError> {
    v.as_array().ok_or_else(|| bad(path, "expected an array"))
}

fn decode_position(v: &Value, path: &str) -> Result<GeoPoint, CodecError> {
    let arr = as_array(v, path)?;
    if arr.len() != 2 && arr.len() != 3 {
        return Err(bad(path, "a position has 2 or 3 numbers"));
    }
    let mut nums = [0.0; 3];
    for (i, item) in arr.iter().enumerate() {
        nums[i] = as_f64(item, &format!("{path}/{i}"))?;
    }
    let alt = (arr.len() == 3).then_some(nums[2]);
    GeoPoint::new(nums[0], nums[1], alt)
        .map_err(|_| bad(path, "longitude must be in [-180, 180] and latitude in [-90, 90]"))
}

fn decode_positions(v: &Value, path: &str) -> Result<Vec<GeoPoint>, CodecError> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, p)| decode_position(p, &format!("{path}/{i}")))
        .collect()
}

/// Reads exactly one of `datetimes` / `timeline`. Returns the times and the
/// pointer of the member they came from.
fn decode_times(m: &mut Members) -> Result<(Vec<TimeStamp>, String), CodecError> {
    let datetimes = m.take("datetimes");
    let timeline = m.take("timeline");
    let (times, path) = match (datetimes, timeline) {
        (Some(_), Some(_)) => {
            return Err(bad(
                m.at("timeline"),
                "give either \"datetimes\" or \"timeline\", not both",
            ))
        }
        (None, None) => {
            return Err(bad(
                m.at("timeline"),
                "a \"datetimes\" or \"timeline\" member is required",
            ))
        }
        (Some(v), None) => {
            let path = m.at("datetimes");
            let times = as_array(&v, &path)?
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    let p = format!("{path}/{i}");
                    let s = item.as_str().ok_or_else(|| bad(&p, "expected a datetime string"))?;
                    parse_datetime_at(s, &p)
                })
                .collect::<Result<Vec<_>, _>>()?;
            (times, path)
        }
        (None, Some(v)) => {
            let path = m.at("timeline");
            let times = as_array(&v, &path)?
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    item.as_i64()
                        .map(TimeStamp)
                        .ok_or_else(|| bad(format!("{path}/{i}"), "expected integer milliseconds"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (times, path)
        }
    };
    if times.is_empty() {
        return Err(bad(&path, "at least one time is required"));
    }
    if let Some(i) = times.windows(2).position(|w| w[0] >= w[1]) {
        return Err(CodecError::NonIncreasingTime {
            path: format!("{path}/{}", i + 1),
        });
    }
    Ok((times, path))
}

fn decode_interpolation(m: &mut Members) -> Result<InterpolationMode, CodecError> {
    match m.take_string("interpolation")? {
        None => Ok(InterpolationMode::Linear),
        Some(s) => InterpolationMode::parse(&s).ok_or_else(|| {
            bad(
                m.at("interpolation"),
                format!("unknown interpolation {s:?} (discrete, linear or stepwise)"),
            )
        }),
    }
}

fn decode_fov(v: Value, path: &str) -> Result<FieldOfView, CodecError> {
    let mut m = Members::new(v, path)?;
    if let Some(tag) = m.take_string("type")? {
        if !tag.eq_ignore_ascii_case("fov") {
            return Err(bad(m.at("type"), "a field of view has type \"fov\""));
        }
    }
    let h = m.take_number("horizontalAngle")?;
    let v = m.take_number("verticalAngle")?;
    let dir = m.take_number("direction2d")?;
    let distance = m.take_number("distance")?;
    let view_distance = m.take_number("viewDistance")?;
    if distance.is_some() && view_distance.is_some() {
        return Err(bad(
            m.at("viewDistance"),
            "give either \"distance\" or \"viewDistance\", not both",
        ));
    }
    let d = distance.or(view_distance);
    m.reject_leftovers()?;

    let defaults = FieldOfView::default();
    FieldOfView::new(
        h.unwrap_or(defaults.h_angle()),
        v.unwrap_or(defaults.v_angle()),
        dir.unwrap_or(defaults.direction2d()),
        d.unwrap_or(defaults.view_distance()),
    )
    .map_err(|e| {
        let field = match &e {
            crate::fov::FovError::OutOfRange { field, .. } => *field,
            crate::fov::FovError::MissingHeading { .. } => "direction2d",
        };
        let field = if field == "distance" && view_distance.is_some() {
            "viewDistance"
        } else {
            field
        };
        bad(pointer(path, field), e.to_string())
    })
}

fn temporal_error(e: TemporalError, coords_path: &str) -> CodecError {
    match e {
        TemporalError::MixedAltitude { index } => bad(
            format!("{coords_path}/{index}"),
            "all positions need altitude or none may have it",
        ),
        TemporalError::LengthMismatch {
            expected, found, ..
        } => CodecError::LengthMismatch {
            path: coords_path.to_string(),
            expected,
            found,
        },
        other => bad(coords_path, other.to_string()),
    }
}

fn length_check(path: String, expected: usize, found: usize) -> Result<(), CodecError> {
    if expected == found {
        Ok(())
    } else {
        Err(CodecError::LengthMismatch {
            path,
            expected,
            found,
        })
    }
}

fn decode_moving_point(m: &mut Members) -> Result<MovingPoint, CodecError> {
    let coords_path = m.at("coordinates");
    let coords = decode_positions(&m.require("coordinates")?, &coords_path)?;
    let (times, _) = decode_times(m)?;
    let mode = decode_interpolation(m)?;
    length_check(coords_path.clone(), times.len(), coords.len())?;
    MovingPoint::from_parts(times, coords, mode).map_err(|e| temporal_error(e, &coords_path))
}

fn decode_moving_double(m: &mut Members) -> Result<MovingDouble, CodecError> {
    let values_path = m.at("values");
    let values = as_array(&m.require("values")?, &values_path)?
        .iter()
        .enumerate()
        .map(|(i, v)| as_f64(v, &format!("{values_path}/{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let (times, _) = decode_times(m)?;
    let coords_path = m.at("coordinates");
    let track = match m.take("coordinates") {
        Some(v) => Some(decode_positions(&v, &coords_path)?),
        None => None,
    };
    let mode = decode_interpolation(m)?;
    length_check(values_path, times.len(), values.len())?;
    if let Some(track) = &track {
        length_check(coords_path.clone(), times.len(), track.len())?;
    }
    MovingDouble::new(times, values, mode, track).map_err(|e| temporal_error(e, &coords_path))
}

fn decode_stphoto(m: &mut Members) -> Result<StPhoto, CodecError> {
    let uri_path = m.at("uri");
    let uri = m
        .take_string("uri")?
        .ok_or_else(|| bad(&uri_path, "required member is missing"))?;
    let loc = decode_position(&m.require("coordinates")?, &m.at("coordinates"))?;
    let (times, time_path) = decode_times(m)?;
    length_check(time_path, 1, times.len())?;
    let fov_path = m.at("fov");
    let fov = match m.take("fov") {
        Some(v) => decode_fov(v, &fov_path)?,
        None => FieldOfView::default(),
    };
    StPhoto::new(uri, loc, times[0], fov).map_err(|e| match e {
        MediaError::RelativePhotoDirection(_) => {
            bad(pointer(&fov_path, "direction2d"), e.to_string())
        }
        _ => bad(&uri_path, e.to_string()),
    })
}

fn decode_moving_video(m: &mut Members) -> Result<MovingVideo, CodecError> {
    let uri_path = m.at("uri");
    let uri = m
        .take_string("uri")?
        .ok_or_else(|| bad(&uri_path, "required member is missing"))?;
    let track = decode_moving_point(m)?;
    let fov_path = m.at("fov");
    let fovs = match m.take("fov") {
        None => vec![FieldOfView::default()],
        Some(Value::Array(items)) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| decode_fov(v, &format!("{fov_path}/{i}")))
            .collect::<Result<Vec<_>, _>>()?,
        Some(obj @ Value::Object(_)) => vec![decode_fov(obj, &fov_path)?],
        Some(_) => return Err(bad(&fov_path, "expected an array of fov objects")),
    };
    MovingVideo::new(uri, track, fovs).map_err(|e| match e {
        MediaError::FovCount { found, samples } => CodecError::LengthMismatch {
            path: fov_path.clone(),
            expected: samples,
            found,
        },
        other => bad(&uri_path, other.to_string()),
    })
}

/// Parse and validate a GeoMedia JSON document.
pub fn parse_document(bytes: &[u8]) -> Result<GeoMediaDocument, CodecError> {
    let value = parse_strict_json(bytes)?;
    document_from_value(value)
}

/// Validate an already parsed JSON value as a GeoMedia document.
///
/// Duplicate members cannot be detected here; use [`parse_document`] on raw
/// text when that matters.
pub fn document_from_value(value: Value) -> Result<GeoMediaDocument, CodecError> {
    let mut m = Members::new(value, "")?;
    let tag = m
        .take_string("type")?
        .ok_or_else(|| bad("/type", "required member is missing"))?;
    let kind = MediaKind::parse(tag.trim()).ok_or_else(|| CodecError::UnknownType {
        path: "/type".into(),
        found: tag.clone(),
    })?;
    let media = match kind {
        MediaKind::MovingPoint => Media::MovingPoint(decode_moving_point(&mut m)?),
        MediaKind::MovingDouble => Media::MovingDouble(decode_moving_double(&mut m)?),
        MediaKind::StPhoto => Media::StPhoto(decode_stphoto(&mut m)?),
        MediaKind::MovingVideo => Media::MovingVideo(decode_moving_video(&mut m)?),
    };
    Ok(GeoMediaDocument {
        media,
        extra: m.map,
    })
}

// ---------------------------------------------------------------------------
// encoding

fn num(v: f64) -> Value {
    Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub(crate) fn position_value(p: &GeoPoint) -> Value {
    let mut coords = vec![num(p.lon), num(p.lat)];
    if let Some(alt) = p.alt {
        coords.push(num(alt));
    }
    Value::Array(coords)
}

fn positions_value(points: &[GeoPoint]) -> Value {
    Value::Array(points.iter().map(position_value).collect())
}

fn insert_times(out: &mut Map<String, Value>, times: &[TimeStamp], style: TimeStyle) {
    match style {
        TimeStyle::Iso => out.insert(
            "datetimes".into(),
            times
                .iter()
                .map(|t| Value::String(epoch_to_iso(*t)))
                .collect(),
        ),
        TimeStyle::Epoch => out.insert(
            "timeline".into(),
            times.iter().map(|t| Value::from(t.0)).collect(),
        ),
    };
}

fn photo_fov_value(f: &FieldOfView) -> Value {
    let mut m = Map::new();
    m.insert("type".into(), "fov".into());
    m.insert("horizontalAngle".into(), num(f.h_angle()));
    m.insert("verticalAngle".into(), num(f.v_angle()));
    m.insert("direction2d".into(), num(f.direction2d()));
    m.insert("distance".into(), num(f.view_distance()));
    Value::Object(m)
}

fn video_fov_value(f: &FieldOfView) -> Value {
    let mut m = Map::new();
    m.insert("verticalAngle".into(), num(f.v_angle()));
    m.insert("horizontalAngle".into(), num(f.h_angle()));
    m.insert("viewDistance".into(), num(f.view_distance()));
    m.insert("direction2d".into(), num(f.direction2d()));
    Value::Object(m)
}

/// Canonical JSON object for a document.
pub fn document_to_value(doc: &GeoMediaDocument, style: TimeStyle) -> Value {
    let mut out = Map::new();
    out.insert("type".into(), doc.kind().as_str().into());
    match &doc.media {
        Media::MovingPoint(mp) => {
            out.insert("coordinates".into(), positions_value(mp.points()));
            insert_times(&mut out, mp.times(), style);
            out.insert("interpolation".into(), mp.mode().as_str().into());
        }
        Media::MovingDouble(md) => {
            out.insert(
                "values".into(),
                md.values().iter().map(|v| num(*v)).collect(),
            );
            insert_times(&mut out, md.times(), style);
            if let Some(track) = md.track() {
                out.insert("coordinates".into(), positions_value(track));
            }
            out.insert("interpolation".into(), md.mode().as_str().into());
        }
        Media::StPhoto(p) => {
            out.insert("uri".into(), p.uri().into());
            out.insert("coordinates".into(), position_value(p.loc()));
            insert_times(&mut out, &[p.time()], style);
            out.insert("fov".into(), photo_fov_value(p.fov()));
        }
        Media::MovingVideo(v) => {
            out.insert("uri".into(), v.uri().into());
            out.insert("coordinates".into(), positions_value(v.track().points()));
            out.insert(
                "fov".into(),
                v.fovs().iter().map(video_fov_value).collect(),
            );
            insert_times(&mut out, v.track().times(), style);
            out.insert("interpolation".into(), v.track().mode().as_str().into());
        }
    }
    for (k, v) in &doc.extra {
        out.entry(k.clone()).or_insert_with(|| v.clone());
    }
    Value::Object(out)
}

/// Compact canonical encoding. Identical documents always give identical bytes.
pub fn serialize_document(doc: &GeoMediaDocument, style: TimeStyle) -> Vec<u8> {
    serde_json::to_vec(&document_to_value(doc, style)).expect("JSON values always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datetime_examples() {
        assert_eq!(parse_datetime("2018-08-1T13:01:01Z").unwrap().0, 1_533_128_461_000);
        assert_eq!(parse_datetime("1970-01-01T00:00:00Z").unwrap().0, 0);
        assert_eq!(parse_datetime("2018-08-01T13:01:01.5Z").unwrap().0, 1_533_128_461_500);
        assert_eq!(parse_datetime(" 2018-08-1T13:01:02Z ").unwrap().0, 1_533_128_462_000);
        for bad in [
            "2018-08-01T13:01:01+09:00",
            "2018-08-01T13:01:01",
            "2018-13-01T00:00:00Z",
            "2018-02-30T00:00:00Z",
            "2018-08-01T24:00:00Z",
            "2018-08-01T23:59:60Z",
            "2018-08-01 13:01:01Z",
            "2018-08-01T13:01:01.1234Z",
            "18-08-01T13:01:01Z",
            "",
        ] {
            assert!(
                matches!(parse_datetime(bad), Err(CodecError::BadDateTime { .. })),
                "{bad} should be rejected"
            );
        }
    }

    #[test]
    fn iso_formatting() {
        assert_eq!(epoch_to_iso(TimeStamp(1_533_128_461_000)), "2018-08-01T13:01:01Z");
        assert_eq!(epoch_to_iso(TimeStamp(0)), "1970-01-01T00:00:00Z");
        assert_eq!(epoch_to_iso(TimeStamp(1_533_128_461_500)), "2018-08-01T13:01:01.500Z");
        assert_eq!(epoch_to_iso(TimeStamp(-1)), "1969-12-31T23:59:59.999Z");
    }

    #[test]
    fn comments_outside_strings_only() {
        let text = "{\"a\": \"http://x//y\", // note\n \"b\": 1 // end\n}";
        let v = parse_strict_json(text.as_bytes()).unwrap();
        assert_eq!(v["a"], "http://x//y");
        assert_eq!(v["b"], 1);
    }

    #[test]
    fn duplicate_members_and_trailing_commas() {
        let dup = br#"{"type": "MovingDouble", "timeline": [1], "timeline": [1]}"#;
        assert!(matches!(parse_document(dup), Err(CodecError::BadJson { .. })));
        let trailing = br#"{"type": "MovingDouble", "values": [1.0], "timeline": [1],}"#;
        assert!(matches!(parse_document(trailing), Err(CodecError::BadJson { .. })));
        let nested = br#"{"type": "stphoto", "fov": {"distance": 1, "distance ": 2}}"#;
        assert!(matches!(parse_document(nested), Err(CodecError::BadJson { .. })));
    }

    #[test]
    fn error_paths() {
        let err = parse_document(
            br#"{"type":"MovingPoint","coordinates":[[1,2],[3,4],[5,6]],"timeline":[1,2]}"#,
        )
        .unwrap_err();
        assert_eq!(err.code(), "LengthMismatch");
        assert_eq!(err.path(), "/coordinates");

        let err = parse_document(br#"{"type":"MovingPoint","coordinates":[[1,2],[3,4]],"timeline":[2,2]}"#)
            .unwrap_err();
        assert_eq!(err, CodecError::NonIncreasingTime { path: "/timeline/1".into() });

        let err = parse_document(
            br#"{"type":"MovingPoint","coordinates":[[1,2],[3,95]],"timeline":[1,2]}"#,
        )
        .unwrap_err();
        assert_eq!(err.path(), "/coordinates/1");

        let err = parse_document(
            br#"{"type":"stphoto","uri":"a","coordinates":[1,2],"timeline":[1],"fov":{"horizontalAngle":400}}"#,
        )
        .unwrap_err();
        assert_eq!(err.code(), "BadFieldValue");
        assert_eq!(err.path(), "/fov/horizontalAngle");

        let err = parse_document(
            br#"{"type":"MovingVideo","uri":"v","coordinates":[[1,2],[3,4]],"timeline":[1,2],"fov":[{},{},{}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.code(), "LengthMismatch");
        assert_eq!(err.path(), "/fov");

        let err = parse_document(
            br#"{"type":"MovingPoint","coordinates":[[1,2]],"datetimes":["2018-08-01T13:01:01"]}"#,
        )
        .unwrap_err();
        assert_eq!(err.code(), "BadDateTime");
        assert_eq!(err.path(), "/datetimes/0");

        let err = parse_document(br#"{"type":"MovingPhoto"}"#).unwrap_err();
        assert_eq!(err.code(), "UnknownType");
        assert_eq!(err.path(), "/type");

        let err = parse_document(br#"{"type":"MovingPoint","coordinates":[[1,2]],"timeline":[1],"datetimes":["1970-01-01T00:00:00Z"]}"#).unwrap_err();
        assert_eq!(err.code(), "BadFieldValue");

        let err = parse_document(br#"{"type":"MovingPoint","coordinates":[[1,2]],"timeline":[1],"interpolation":"cubic"}"#).unwrap_err();
        assert_eq!(err.path(), "/interpolation");
    }

    #[test]
    fn defaults_filled_and_written_out() {
        let doc = parse_document(
            br#"{"type":"STPhoto","uri":"a.jpg","coordinates":[1,2],"timeline":[7],"fov":{"direction2d":45}}"#,
        )
        .unwrap();
        let Media::StPhoto(p) = &doc.media else {
            panic!("expected a photo")
        };
        assert_eq!(
            (p.fov().h_angle(), p.fov().v_angle(), p.fov().view_distance()),
            (63.0, 60.0, 100.0)
        );
        let text = String::from_utf8(serialize_document(&doc, TimeStyle::Epoch)).unwrap();
        assert_eq!(
            text,
            r#"{"type":"stphoto","uri":"a.jpg","coordinates":[1.0,2.0],"timeline":[7],"fov":{"type":"fov","horizontalAngle":63.0,"verticalAngle":60.0,"direction2d":45.0,"distance":100.0}}"#
        );
    }

    #[test]
    fn unknown_members_survive() {
        let doc = parse_document(
            br#"{"type":"MovingPoint","id":"taxi-7","coordinates":[[1,2]],"timeline":[1],"properties":{"name":"x"}}"#,
        )
        .unwrap();
        let text = String::from_utf8(serialize_document(&doc, TimeStyle::Iso)).unwrap();
        assert_eq!(
            text,
            r#"{"type":"MovingPoint","coordinates":[[1.0,2.0]],"datetimes":["1970-01-01T00:00:00.001Z"],"interpolation":"linear","id":"taxi-7","properties":{"name":"x"}}"#
        );
    }
}
