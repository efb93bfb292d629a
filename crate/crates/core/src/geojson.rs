//! Plain GeoJSON geometries for map viewers that know nothing about GeoMedia.

use serde_json::{json, Value};

use crate::codec::position_value;
use crate::fov::SectorPolygon;
use crate::media::{GeoMediaDocument, Media};
use crate::temporal::{BBox, GeoPoint};

pub fn point(p: &GeoPoint) -> Value {
    json!({ "type": "Point", "coordinates": position_value(p) })
}

/// A `LineString`, or a `Point` when there is only one position.
pub fn line_string(points: &[GeoPoint]) -> Value {
    match points {
        [single] => point(single),
        _ => json!({
            "type": "LineString",
            "coordinates": points.iter().map(position_value).collect::<Vec<_>>(),
        }),
    }
}

pub fn polygon(sector: &SectorPolygon) -> Value {
    json!({
        "type": "Polygon",
        "coordinates": [sector.ring().iter().map(position_value).collect::<Vec<_>>()],
    })
}

pub fn bbox_center(b: &BBox) -> Value {
    let (lon, lat) = b.center();
    json!({ "type": "Point", "coordinates": [lon, lat] })
}

/// Footprint of a document: the track as a line, the camera as a point, or
/// `null` for a moving double without positions.
pub fn document_geometry(doc: &GeoMediaDocument) -> Value {
    match &doc.media {
        Media::MovingPoint(mp) => line_string(mp.points()),
        Media::MovingDouble(md) => md.track().map_or(Value::Null, line_string),
        Media::StPhoto(p) => point(p.loc()),
        Media::MovingVideo(v) => line_string(v.track().points()),
    }
}
