//! Exact spatio-temporal predicates and media analysis over stored features.
//!
//! [`evaluate`] takes index candidates from the store and refines them with
//! the predicates here. The free functions are usable on their own.

use thiserror::Error;

use crate::fov::{fov_contains, FieldOfView};
use crate::geodesy::{circle_bbox, geo_distance};
use crate::media::{GeoMediaDocument, Media, MediaKind, MovingVideo};
use crate::store::{paginate, FeatureRecord, MediaStore, Page, StoreError};
use crate::temporal::{
    BBox, GeoPoint, InterpolationMode, MovingPoint, SpatialExtent, TemporalError, TimeExtent, TimeInterval, TimeStamp,
};

/// Sampling step [`evaluate`] uses for video visibility.
pub const DEFAULT_VISIBILITY_STEP_MS: i64 = 100;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("{op} does not apply to {kind} features")]
    WrongKind { op: &'static str, kind: MediaKind },
    #[error("{t} is outside the extent {extent}")]
    OutOfRange { t: TimeStamp, extent: TimeInterval },
    #[error("{t} is not a sample time of a discrete track")]
    NotASample { t: TimeStamp },
    #[error("track has no motion to take a heading from")]
    DegenerateTrack,
    #[error("the two tracks do not overlap in time")]
    NoTemporalOverlap,
    #[error("bad query: {0}")]
    BadQuery(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl From<TemporalError> for QueryError {
    fn from(e: TemporalError) -> Self {
        match e {
            TemporalError::OutOfRange { t, extent } => QueryError::OutOfRange { t, extent },
            TemporalError::NotASample { t } => QueryError::NotASample { t },
            TemporalError::DegenerateTrack => QueryError::DegenerateTrack,
            other => QueryError::BadQuery(other.to_string()),
        }
    }
}

/// A point with a search radius in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Near {
    pub center: GeoPoint,
    pub radius_m: f64,
}

/// Filters are combined with AND; absent filters match everything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuerySpec {
    pub bbox: Option<BBox>,
    pub interval: Option<TimeInterval>,
    /// Some track sample (or the photo's camera point) lies within the radius.
    pub near: Option<Near>,
    /// The point is inside the photo's view, or inside the video's view at
    /// some sampled instant. Only for photo and video collections.
    pub visible_from: Option<GeoPoint>,
    pub limit: usize,
    pub offset: usize,
}

impl Default for QuerySpec {
    fn default() -> Self {
        QuerySpec {
            bbox: None,
            interval: None,
            near: None,
            visible_from: None,
            limit: 10,
            offset: 0,
        }
    }
}

impl QuerySpec {
    /// Every feature, unpaged.
    pub fn all() -> Self {
        QuerySpec {
            limit: usize::MAX,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if self.limit == 0 {
            return Err(QueryError::BadQuery("limit must be at least 1".into()));
        }
        if let Some(n) = &self.near {
            if !(n.radius_m.is_finite() && n.radius_m > 0.0) {
                return Err(QueryError::BadQuery(format!(
                    "near radius must be positive, got {}",
                    n.radius_m
                )));
            }
        }
        Ok(())
    }
}

/// Position of a moving point or of a video's camera at `t`.
pub fn position_at(doc: &GeoMediaDocument, t: TimeStamp) -> Result<GeoPoint, QueryError> {
    match &doc.media {
        Media::MovingPoint(mp) => Ok(mp.at(t)?),
        Media::MovingVideo(v) => Ok(v.track().at(t)?),
        other => Err(QueryError::WrongKind {
            op: "position",
            kind: other.kind(),
        }),
    }
}

/// Camera position, absolute view direction and field of view of a video at
/// one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovSnapshot {
    pub camera: GeoPoint,
    pub direction: f64,
    pub fov: FieldOfView,
}

impl FovSnapshot {
    pub fn contains(&self, p: &GeoPoint) -> bool {
        fov_contains(&self.camera, self.direction, &self.fov, p)
    }
}

/// Per-sample FoV entries apply from their sample time until the next one.
pub fn fov_at(video: &MovingVideo, t: TimeStamp) -> Result<FovSnapshot, QueryError> {
    let track = video.track();
    let camera = track.at(t)?;
    let fov = match video.fovs() {
        [only] => *only,
        per_sample => {
            let i = track.times().partition_point(|s| *s <= t).saturating_sub(1);
            per_sample[i]
        }
    };
    let heading = if fov.is_relative() {
        Some(track.heading_at(t)?)
    } else {
        None
    };
    let direction = fov
        .resolve(heading)
        .expect("a heading is supplied for relative directions");
    Ok(FovSnapshot {
        camera,
        direction,
        fov,
    })
}

/// The instants [`visible_intervals`] inspects: every track sample time plus
/// every `step_ms` from the start of the extent, ascending.
pub fn visibility_sample_times(video: &MovingVideo, step_ms: i64) -> Vec<TimeStamp> {
    let step = step_ms.max(1);
    let extent = video.time_extent();
    let (start, end) = (extent.start().0, extent.end().0);
    let mut times: Vec<TimeStamp> = (0..)
        .map(|k: i64| start.saturating_add(k.saturating_mul(step)))
        .take_while(|t| *t <= end)
        .map(TimeStamp)
        .collect();
    times.extend_from_slice(video.track().times());
    times.sort_unstable();
    times.dedup();
    times
}

/// Maximal runs of sampled instants at which `p` is inside the video's view.
///
/// Interval bounds are sample times, so each true boundary is off by less
/// than `step_ms`. Instants whose direction cannot be resolved count as not
/// visible. `step_ms` below 1 is treated as 1.
pub fn visible_intervals(video: &MovingVideo, p: &GeoPoint, step_ms: i64) -> Vec<TimeInterval> {
    // every camera position lies in the track bbox
    let reach = circle_bbox(p, video.max_view_distance());
    if !video.track().spatial_bbox().intersects(&reach) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut run: Option<(TimeStamp, TimeStamp)> = None;
    for t in visibility_sample_times(video, step_ms) {
        let seen = fov_at(video, t).is_ok_and(|s| s.contains(p));
        run = match (run, seen) {
            (None, true) => Some((t, t)),
            (Some((a, _)), true) => Some((a, t)),
            (Some((a, b)), false) => {
                out.push(TimeInterval::new(a, b).expect("runs are ordered"));
                None
            }
            (None, false) => None,
        };
    }
    if let Some((a, b)) = run {
        out.push(TimeInterval::new(a, b).expect("runs are ordered"));
    }
    out
}

/// Mean distance in meters between two tracks, both evaluated linearly at
/// every sample time of either track inside their common extent. Symmetric.
pub fn trajectory_similarity(a: &MovingPoint, b: &MovingPoint) -> Result<f64, QueryError> {
    let overlap = a
        .time_extent()
        .intersection(&b.time_extent())
        .ok_or(QueryError::NoTemporalOverlap)?;
    let mut times: Vec<TimeStamp> = a
        .times()
        .iter()
        .chain(b.times())
        .copied()
        .filter(|t| overlap.contains(*t))
        .collect();
    times.sort_unstable();
    times.dedup();
    let mut total = 0.0;
    for t in &times {
        let pa = a.at_with_mode(*t, InterpolationMode::Linear)?;
        let pb = b.at_with_mode(*t, InterpolationMode::Linear)?;
        total += geo_distance(&pa, &pb);
    }
    Ok(total / times.len() as f64)
}

fn near_matches(media: &Media, near: &Near) -> bool {
    media
        .sample_positions()
        .iter()
        .any(|p| geo_distance(p, &near.center) <= near.radius_m)
}

fn visible_matches(media: &Media, p: &GeoPoint) -> bool {
    match media {
        Media::StPhoto(photo) => photo.sees(p),
        Media::MovingVideo(v) => !visible_intervals(v, p, DEFAULT_VISIBILITY_STEP_MS).is_empty(),
        Media::MovingPoint(_) | Media::MovingDouble(_) => false,
    }
}

/// The exact predicate [`evaluate`] applies to one feature.
pub fn feature_matches(record: &FeatureRecord, q: &QuerySpec) -> bool {
    let media = &record.doc().media;
    record.matches(q.bbox.as_ref(), q.interval.as_ref())
        && q.near.as_ref().is_none_or(|n| near_matches(media, n))
        && q.visible_from.as_ref().is_none_or(|p| visible_matches(media, p))
}

/// Features of collection `cid` that satisfy every filter in `q`, ordered by
/// fid, with paging applied after filtering.
pub fn evaluate<'a>(store: &'a MediaStore, cid: &str, q: &QuerySpec) -> Result<Page<'a>, QueryError> {
    q.validate()?;
    let kind = store.get_collection(cid)?.media_type;
    if q.visible_from.is_some() && !kind.has_fov() {
        return Err(QueryError::WrongKind {
            op: "visibleFrom",
            kind,
        });
    }
    // the near circle's box narrows the index lookup when no bbox is given:
    // every sample position lies inside its feature's bbox
    let probe = q
        .bbox
        .or_else(|| q.near.map(|n| circle_bbox(&n.center, n.radius_m)));
    let hits: Vec<&FeatureRecord> = store
        .st_matches(cid, probe.as_ref(), q.interval.as_ref())?
        .into_iter()
        .filter(|r| feature_matches(r, q))
        .collect();
    let (matched, items) = paginate(hits, q.limit, q.offset);
    Ok(Page { matched, items })
}
