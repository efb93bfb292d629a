//! Geo-tagged media records: photos with a field of view, videos whose camera
//! moves along a track, and the document wrapper the JSON codec produces.

use std::fmt;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::fov::{self, FieldOfView, SectorPolygon};
use crate::temporal::{
    BBox, GeoPoint, MovingDouble, MovingPoint, SpatialExtent, TimeExtent, TimeInterval, TimeStamp,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MediaError {
    #[error("media URI must not be empty")]
    EmptyUri,
    #[error("a photo direction must be absolute, got {0}")]
    RelativePhotoDirection(f64),
    #[error("video has {found} FoV entries for {samples} samples (expected 1 or {samples})")]
    FovCount { found: usize, samples: usize },
}

/// The four media kinds a collection can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MediaKind {
    MovingPoint,
    MovingDouble,
    StPhoto,
    MovingVideo,
}

impl MediaKind {
    pub const ALL: [MediaKind; 4] = [
        MediaKind::MovingPoint,
        MediaKind::MovingDouble,
        MediaKind::StPhoto,
        MediaKind::MovingVideo,
    ];

    /// The `"type"` tag as written in GeoMedia JSON.
    pub fn as_str(self) -> &'static str {
        match self {
            MediaKind::MovingPoint => "MovingPoint",
            MediaKind::MovingDouble => "MovingDouble",
            MediaKind::StPhoto => "stphoto",
            MediaKind::MovingVideo => "MovingVideo",
        }
    }

    /// Case-insensitive lookup of a type tag.
    pub fn parse(tag: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(tag))
    }

    pub fn has_fov(self) -> bool {
        matches!(self, MediaKind::StPhoto | MediaKind::MovingVideo)
    }
}

impl fmt::Display for MediaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A geo-tagged photo: image URI, camera location, capture time and view.
#[derive(Debug, Clone, PartialEq)]
pub struct StPhoto {
    uri: String,
    loc: GeoPoint,
    t: TimeStamp,
    fov: FieldOfView,
}

impl StPhoto {
    pub fn new(
        uri: impl Into<String>,
        loc: GeoPoint,
        t: TimeStamp,
        fov: FieldOfView,
    ) -> Result<Self, MediaError> {
        let uri = uri.into();
        if uri.is_empty() {
            return Err(MediaError::EmptyUri);
        }
        if fov.is_relative() {
            return Err(MediaError::RelativePhotoDirection(fov.direction2d()));
        }
        Ok(StPhoto { uri, loc, t, fov })
    }

    pub fn uri(&self) -> &str {
        &self.uri
    }

    pub fn loc(&self) -> &GeoPoint {
        &self.loc
    }

    pub fn time(&self) -> TimeStamp {
        self.t
    }

    pub fn fov(&self) -> &FieldOfView {
        &self.fov
    }

    /// Absolute camera bearing.
    pub fn direction(&self) -> f64 {
        fov::resolve_direction(&self.fov, None).expect("photo directions are absolute")
    }

    pub fn sector(&self, arc_step_deg: f64) -> SectorPolygon {
        fov::fov_sector_polygon(&self.loc, self.direction(), &self.fov, arc_step_deg)
    }

    pub fn sees(&self, p: &GeoPoint) -> bool {
        fov::fov_contains(&self.loc, self.direction(), &self.fov, p)
    }
}

impl TimeExtent for StPhoto {
    fn time_extent(&self) -> TimeInterval {
        TimeInterval::instant(self.t)
    }
}

impl SpatialExtent for StPhoto {
    /// Covers the whole visible sector, not just the camera point.
    fn spatial_bbox(&self) -> BBox {
        fov::sector_bbox(&self.loc, self.direction(), &self.fov)
    }
}

/// A geo-tagged video: the camera track plus either one FoV for the whole
/// video or one per track sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingVideo {
    uri: String,
    track: MovingPoint,
    fovs: Vec<FieldOfView>,
}

impl MovingVideo {
    pub fn new(
        uri: impl Into<String>,
        track: MovingPoint,
        fovs: Vec<FieldOfView>,
    ) -> Result<Self, MediaError> {
        let uri = uri.into();
        if uri.is_empty() {
            return Err(MediaError::EmptyUri);
        }
        if fovs.len() != 1 && fovs.len() != track.len() {
            return Err(MediaError::FovCount {
                found: fovs.len(),
                samples: track.len(),
            });
        }
        Ok(MovingVideo { uri, track, fovs })
    }

    pub fn uri(&self) -> &str {
        &self.uri
    }

    pub fn track(&self) -> &MovingPoint {
        &self.track
    }

    pub fn fovs(&self) -> &[FieldOfView] {
        &self.fovs
    }

    pub fn has_constant_fov(&self) -> bool {
        self.fovs.len() == 1
    }

    pub fn max_view_distance(&self) -> f64 {
        self.fovs
            .iter()
            .map(FieldOfView::view_distance)
            .fold(0.0, f64::max)
    }
}

impl TimeExtent for MovingVideo {
    fn time_extent(&self) -> TimeInterval {
        self.track.time_extent()
    }
}

impl SpatialExtent for MovingVideo {
    fn spatial_bbox(&self) -> BBox {
        self.track.spatial_bbox()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Media {
    MovingPoint(MovingPoint),
    MovingDouble(MovingDouble),
    StPhoto(StPhoto),
    MovingVideo(MovingVideo),
}

impl Media {
    pub fn kind(&self) -> MediaKind {
        match self {
            Media::MovingPoint(_) => MediaKind::MovingPoint,
            Media::MovingDouble(_) => MediaKind::MovingDouble,
            Media::StPhoto(_) => MediaKind::StPhoto,
            Media::MovingVideo(_) => MediaKind::MovingVideo,
        }
    }

    pub fn time_extent(&self) -> TimeInterval {
        match self {
            Media::MovingPoint(m) => m.time_extent(),
            Media::MovingDouble(m) => m.time_extent(),
            Media::StPhoto(m) => m.time_extent(),
            Media::MovingVideo(m) => m.time_extent(),
        }
    }

    /// `None` only for a moving double without a position track.
    pub fn spatial_bbox(&self) -> Option<BBox> {
        match self {
            Media::MovingPoint(m) => Some(m.spatial_bbox()),
            Media::MovingDouble(m) => m.track_bbox(),
            Media::StPhoto(m) => Some(m.spatial_bbox()),
            Media::MovingVideo(m) => Some(m.spatial_bbox()),
        }
    }

    /// Positions a proximity test looks at: track samples or the camera point.
    pub fn sample_positions(&self) -> &[GeoPoint] {
        match self {
            Media::MovingPoint(m) => m.points(),
            Media::MovingDouble(m) => m.track().unwrap_or(&[]),
            Media::StPhoto(m) => std::slice::from_ref(&m.loc),
            Media::MovingVideo(m) => m.track.points(),
        }
    }
}

/// A parsed GeoMedia JSON document. Members the codec does not know are kept
/// in `extra`, in their original order, and written back on serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoMediaDocument {
    pub media: Media,
    pub extra: Map<String, Value>,
}

impl GeoMediaDocument {
    pub fn new(media: Media) -> Self {
        GeoMediaDocument {
            media,
            extra: Map::new(),
        }
    }

    pub fn kind(&self) -> MediaKind {
        self.media.kind()
    }

    pub fn time_extent(&self) -> TimeInterval {
        self.media.time_extent()
    }

    pub fn spatial_bbox(&self) -> Option<BBox> {
        self.media.spatial_bbox()
    }
}

impl From<Media> for GeoMediaDocument {
    fn from(media: Media) -> Self {
        GeoMediaDocument::new(media)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::InterpolationMode;

    #[test]
    fn kind_tags() {
        assert_eq!(MediaKind::parse("STPhoto"), Some(MediaKind::StPhoto));
        assert_eq!(MediaKind::parse("movingpoint"), Some(MediaKind::MovingPoint));
        assert_eq!(MediaKind::parse("MovingPhoto"), None);
        assert_eq!(MediaKind::StPhoto.as_str(), "stphoto");
    }

    #[test]
    fn video_fov_arity() {
        let p = GeoPoint::lon_lat(0.0, 0.0).unwrap();
        let q = GeoPoint::lon_lat(0.0, 1.0).unwrap();
        let track = MovingPoint::new(
            vec![(TimeStamp(0), p), (TimeStamp(1), q)],
            InterpolationMode::Linear,
        )
        .unwrap();
        let f = FieldOfView::default();
        assert!(MovingVideo::new("v.mp4", track.clone(), vec![f]).is_ok());
        assert!(MovingVideo::new("v.mp4", track.clone(), vec![f, f]).is_ok());
        assert_eq!(
            MovingVideo::new("v.mp4", track.clone(), vec![f, f, f]),
            Err(MediaError::FovCount { found: 3, samples: 2 })
        );
        assert_eq!(
            MovingVideo::new("", track, vec![f]),
            Err(MediaError::EmptyUri)
        );
    }

    #[test]
    fn photo_rejects_relative_direction() {
        let p = GeoPoint::lon_lat(0.0, 0.0).unwrap();
        let f = FieldOfView::new(63.0, 60.0, -90.0, 100.0).unwrap();
        assert!(StPhoto::new("a.jpg", p, TimeStamp(0), f).is_err());
    }
}
