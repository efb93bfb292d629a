//! Time-varying positions and scalars.
//!
//! [`MovingPoint`] and [`MovingDouble`] are sequences of timestamped samples
//! with an [`InterpolationMode`] that decides what happens between samples.
//! Times are integer epoch milliseconds ([`TimeStamp`]); coordinates are
//! `(lon, lat, alt?)` in WGS84 degrees and meters.

use std::fmt;

use thiserror::Error;

use crate::geodesy;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemporalError {
    #[error("a track needs at least one sample")]
    Empty,
    #[error("sample {index} is not later than the sample before it")]
    NonIncreasingTime { index: usize },
    #[error("sample {index} disagrees with sample 0 on whether altitude is present")]
    MixedAltitude { index: usize },
    #[error("{what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid coordinate ({lon}, {lat})")]
    InvalidCoordinate { lon: f64, lat: f64 },
    #[error("interval start {start} is after end {end}")]
    InvalidInterval { start: TimeStamp, end: TimeStamp },
    #[error("{t} is outside the track extent {extent}")]
    OutOfRange { t: TimeStamp, extent: TimeInterval },
    #[error("{t} is not a sample time of a discrete track")]
    NotASample { t: TimeStamp },
    #[error("interval {0} does not overlap the track")]
    NoOverlap(TimeInterval),
    #[error("track has no motion to take a heading from")]
    DegenerateTrack,
}

/// Milliseconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimeStamp(pub i64);

impl TimeStamp {
    pub const fn from_millis(millis: i64) -> Self {
        TimeStamp(millis)
    }

    pub const fn millis(self) -> i64 {
        self.0
    }

    pub fn now() -> Self {
        TimeStamp(chrono::Utc::now().timestamp_millis())
    }
}

impl fmt::Display for TimeStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::codec::epoch_to_iso(*self))
    }
}

/// Closed time interval `[start, end]`; `start == end` is an instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeInterval {
    start: TimeStamp,
    end: TimeStamp,
}

impl TimeInterval {
    pub fn new(start: TimeStamp, end: TimeStamp) -> Result<Self, TemporalError> {
        if start > end {
            return Err(TemporalError::InvalidInterval { start, end });
        }
        Ok(TimeInterval { start, end })
    }

    pub fn instant(t: TimeStamp) -> Self {
        TimeInterval { start: t, end: t }
    }

    pub fn start(&self) -> TimeStamp {
        self.start
    }

    pub fn end(&self) -> TimeStamp {
        self.end
    }

    pub fn duration_millis(&self) -> i64 {
        self.end.0 - self.start.0
    }

    pub fn contains(&self, t: TimeStamp) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn contains_interval(&self, other: &TimeInterval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &TimeInterval) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn intersection(&self, other: &TimeInterval) -> Option<TimeInterval> {
        self.overlaps(other).then(|| TimeInterval {
            start: self.start.max(other.start),
            end: self.end.min(other.end),
        })
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.start, self.end)
    }
}

/// WGS84 position: longitude and latitude in degrees, optional altitude in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
    pub alt: Option<f64>,
}

impl GeoPoint {
    pub fn new(lon: f64, lat: f64, alt: Option<f64>) -> Result<Self, TemporalError> {
        let ok = lon.is_finite()
            && lat.is_finite()
            && (-180.0..=180.0).contains(&lon)
            && (-90.0..=90.0).contains(&lat)
            && alt.is_none_or(f64::is_finite);
        if !ok {
            return Err(TemporalError::InvalidCoordinate { lon, lat });
        }
        Ok(GeoPoint { lon, lat, alt })
    }

    pub fn lon_lat(lon: f64, lat: f64) -> Result<Self, TemporalError> {
        Self::new(lon, lat, None)
    }
}

/// How a track is evaluated between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InterpolationMode {
    /// Defined only at sample times.
    Discrete,
    /// Componentwise linear between the bracketing samples.
    #[default]
    Linear,
    /// Holds the latest sample at or before `t`.
    Stepwise,
}

impl InterpolationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InterpolationMode::Discrete => "discrete",
            InterpolationMode::Linear => "linear",
            InterpolationMode::Stepwise => "stepwise",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "discrete" => Some(InterpolationMode::Discrete),
            "linear" => Some(InterpolationMode::Linear),
            "stepwise" => Some(InterpolationMode::Stepwise),
            _ => None,
        }
    }
}

impl fmt::Display for InterpolationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Axis-aligned lon/lat bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    /// Returns `None` for an inverted or non-finite box.
    pub fn new(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Option<Self> {
        let finite = [min_lon, min_lat, max_lon, max_lat]
            .iter()
            .all(|v| v.is_finite());
        (finite && min_lon <= max_lon && min_lat <= max_lat).then_some(BBox {
            min_lon,
            min_lat,
            max_lon,
            max_lat,
        })
    }

    pub fn point(p: &GeoPoint) -> Self {
        BBox {
            min_lon: p.lon,
            min_lat: p.lat,
            max_lon: p.lon,
            max_lat: p.lat,
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Option<Self> {
        points
            .into_iter()
            .map(BBox::point)
            .reduce(|a, b| a.union(&b))
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_lon: self.min_lon.min(other.min_lon),
            min_lat: self.min_lat.min(other.min_lat),
            max_lon: self.max_lon.max(other.max_lon),
            max_lat: self.max_lat.max(other.max_lat),
        }
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_lon <= other.max_lon
            && other.min_lon <= self.max_lon
            && self.min_lat <= other.max_lat
            && other.min_lat <= self.max_lat
    }

    pub fn contains_point(&self, p: &GeoPoint) -> bool {
        (self.min_lon..=self.max_lon).contains(&p.lon)
            && (self.min_lat..=self.max_lat).contains(&p.lat)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.min_lon + self.max_lon) / 2.0,
            (self.min_lat + self.max_lat) / 2.0,
        )
    }

    pub fn area(&self) -> f64 {
        (self.max_lon - self.min_lon) * (self.max_lat - self.min_lat)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.min_lon, self.min_lat, self.max_lon, self.max_lat]
    }
}

/// Anything with a `[first sample, last sample]` time extent.
pub trait TimeExtent {
    fn time_extent(&self) -> TimeInterval;
}

/// Anything with a lon/lat footprint.
pub trait SpatialExtent {
    fn spatial_bbox(&self) -> BBox;
}

/// Where `t` falls on a strictly increasing timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Bracket {
    Exact(usize),
    Between { lo: usize, frac: f64 },
}

fn extent_of(times: &[TimeStamp]) -> TimeInterval {
    TimeInterval {
        start: times[0],
        end: times[times.len() - 1],
    }
}

fn locate(times: &[TimeStamp], t: TimeStamp) -> Result<Bracket, TemporalError> {
    let extent = extent_of(times);
    if !extent.contains(t) {
        return Err(TemporalError::OutOfRange { t, extent });
    }
    match times.binary_search(&t) {
        Ok(i) => Ok(Bracket::Exact(i)),
        Err(i) => {
            let (lo, hi) = (times[i - 1], times[i]);
            let frac = (t.0 - lo.0) as f64 / (hi.0 - lo.0) as f64;
            Ok(Bracket::Between { lo: i - 1, frac })
        }
    }
}

fn lerp(a: f64, b: f64, frac: f64) -> f64 {
    let v = a + (b - a) * frac;
    v.clamp(a.min(b), a.max(b))
}

fn lerp_point(a: &GeoPoint, b: &GeoPoint, frac: f64) -> GeoPoint {
    GeoPoint {
        lon: lerp(a.lon, b.lon, frac),
        lat: lerp(a.lat, b.lat, frac),
        alt: match (a.alt, b.alt) {
            (Some(x), Some(y)) => Some(lerp(x, y, frac)),
            _ => None,
        },
    }
}

fn check_timeline(times: &[TimeStamp]) -> Result<(), TemporalError> {
    if times.is_empty() {
        return Err(TemporalError::Empty);
    }
    match times.windows(2).position(|w| w[0] >= w[1]) {
        Some(i) => Err(TemporalError::NonIncreasingTime { index: i + 1 }),
        None => Ok(()),
    }
}

/// Generic evaluation shared by every sampled type.
fn evaluate<V: Copy>(
    times: &[TimeStamp],
    values: &[V],
    mode: InterpolationMode,
    t: TimeStamp,
    lerp_fn: impl Fn(&V, &V, f64) -> V,
) -> Result<V, TemporalError> {
    match locate(times, t)? {
        Bracket::Exact(i) => Ok(values[i]),
        Bracket::Between { lo, frac } => match mode {
            InterpolationMode::Discrete => Err(TemporalError::NotASample { t }),
            InterpolationMode::Stepwise => Ok(values[lo]),
            InterpolationMode::Linear => Ok(lerp_fn(&values[lo], &values[lo + 1], frac)),
        },
    }
}

/// A moving position: strictly time-ordered `(TimeStamp, GeoPoint)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingPoint {
    times: Vec<TimeStamp>,
    points: Vec<GeoPoint>,
    mode: InterpolationMode,
}

impl MovingPoint {
    pub fn new(
        samples: Vec<(TimeStamp, GeoPoint)>,
        mode: InterpolationMode,
    ) -> Result<Self, TemporalError> {
        let (times, points) = samples.into_iter().unzip();
        Self::from_parts(times, points, mode)
    }

    pub fn from_parts(
        times: Vec<TimeStamp>,
        points: Vec<GeoPoint>,
        mode: InterpolationMode,
    ) -> Result<Self, TemporalError> {
        if times.len() != points.len() {
            return Err(TemporalError::LengthMismatch {
                what: "coordinates",
                expected: times.len(),
                found: points.len(),
            });
        }
        check_timeline(&times)?;
        let has_alt = points[0].alt.is_some();
        if let Some(index) = points.iter().position(|p| p.alt.is_some() != has_alt) {
            return Err(TemporalError::MixedAltitude { index });
        }
        Ok(MovingPoint {
            times,
            points,
            mode,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[TimeStamp] {
        &self.times
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    pub fn mode(&self) -> InterpolationMode {
        self.mode
    }

    pub fn has_altitude(&self) -> bool {
        self.points[0].alt.is_some()
    }

    pub fn samples(&self) -> impl Iterator<Item = (TimeStamp, GeoPoint)> + '_ {
        self.times.iter().copied().zip(self.points.iter().copied())
    }

    /// Position at `t` under the track's interpolation mode.
    pub fn at(&self, t: TimeStamp) -> Result<GeoPoint, TemporalError> {
        self.at_with_mode(t, self.mode)
    }

    /// Position at `t` as if the track used `mode`.
    pub fn at_with_mode(
        &self,
        t: TimeStamp,
        mode: InterpolationMode,
    ) -> Result<GeoPoint, TemporalError> {
        evaluate(&self.times, &self.points, mode, t, lerp_point)
    }

    /// Restrict the track to `iv`.
    ///
    /// Linear and stepwise tracks gain synthetic boundary samples where the
    /// clipped interval ends strictly between two samples, so evaluating the
    /// slice anywhere inside `iv` gives the same answer as the original.
    pub fn slice(&self, iv: &TimeInterval) -> Result<MovingPoint, TemporalError> {
        let clip = self
            .time_extent()
            .intersection(iv)
            .ok_or(TemporalError::NoOverlap(*iv))?;
        let mut samples: Vec<(TimeStamp, GeoPoint)> =
            self.samples().filter(|(t, _)| clip.contains(*t)).collect();
        if self.mode != InterpolationMode::Discrete {
            if samples.first().is_none_or(|(t, _)| *t != clip.start) {
                samples.insert(0, (clip.start, self.at(clip.start)?));
            }
            if samples.last().is_none_or(|(t, _)| *t != clip.end) {
                samples.push((clip.end, self.at(clip.end)?));
            }
        }
        if samples.is_empty() {
            return Err(TemporalError::NoOverlap(*iv));
        }
        MovingPoint::new(samples, self.mode)
    }

    /// Direction of travel at `t`, degrees clockwise from north.
    ///
    /// Uses the segment containing `t`; at an interior vertex the outgoing
    /// segment, at the final vertex the incoming one. Segments with no
    /// horizontal motion borrow the bearing of the nearest moving segment,
    /// preferring earlier ones.
    pub fn heading_at(&self, t: TimeStamp) -> Result<f64, TemporalError> {
        if self.len() < 2 {
            return Err(TemporalError::DegenerateTrack);
        }
        let seg = match locate(&self.times, t)? {
            Bracket::Exact(i) => i.min(self.len() - 2),
            Bracket::Between { lo, .. } => lo,
        };
        let segment_bearing = |i: usize| {
            let (a, b) = (&self.points[i], &self.points[i + 1]);
            geodesy::bearing(a, b).ok()
        };
        segment_bearing(seg)
            .or_else(|| (0..seg).rev().find_map(segment_bearing))
            .or_else(|| (seg + 1..self.len() - 1).find_map(segment_bearing))
            .ok_or(TemporalError::DegenerateTrack)
    }
}

impl TimeExtent for MovingPoint {
    fn time_extent(&self) -> TimeInterval {
        extent_of(&self.times)
    }
}

impl SpatialExtent for MovingPoint {
    fn spatial_bbox(&self) -> BBox {
        BBox::from_points(&self.points).expect("tracks are never empty")
    }
}

/// A time-varying scalar, optionally tied to the positions where each value
/// was measured.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingDouble {
    times: Vec<TimeStamp>,
    values: Vec<f64>,
    mode: InterpolationMode,
    track: Option<Vec<GeoPoint>>,
}

impl MovingDouble {
    pub fn new(
        times: Vec<TimeStamp>,
        values: Vec<f64>,
        mode: InterpolationMode,
        track: Option<Vec<GeoPoint>>,
    ) -> Result<Self, TemporalError> {
        if values.len() != times.len() {
            return Err(TemporalError::LengthMismatch {
                what: "values",
                expected: times.len(),
                found: values.len(),
            });
        }
        if let Some(track) = &track {
            if track.len() != times.len() {
                return Err(TemporalError::LengthMismatch {
                    what: "coordinates",
                    expected: times.len(),
                    found: track.len(),
                });
            }
        }
        check_timeline(&times)?;
        Ok(MovingDouble {
            times,
            values,
            mode,
            track,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[TimeStamp] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> InterpolationMode {
        self.mode
    }

    pub fn track(&self) -> Option<&[GeoPoint]> {
        self.track.as_deref()
    }

    pub fn at(&self, t: TimeStamp) -> Result<f64, TemporalError> {
        evaluate(&self.times, &self.values, self.mode, t, |a, b, f| {
            lerp(*a, *b, f)
        })
    }

    pub fn track_bbox(&self) -> Option<BBox> {
        self.track.as_ref().and_then(BBox::from_points)
    }
}

impl TimeExtent for MovingDouble {
    fn time_extent(&self) -> TimeInterval {
        extent_of(&self.times)
    }
}
