//! Read-only views over a store, shared by the HTTP handlers and the
//! command line so both answer a query with the same JSON.

use geomedia::codec::{document_to_value, epoch_to_iso};
use geomedia::fov::{fov_sector_polygon, DEFAULT_ARC_STEP_DEG};
use geomedia::geojson;
use geomedia::query::{evaluate, fov_at, position_at, visible_intervals, DEFAULT_VISIBILITY_STEP_MS};
use geomedia::store::{FeatureRecord, Page};
use geomedia::{GeoMediaDocument, Media, MediaStore, QueryError, TimeInterval, TimeStyle};
use serde_json::{json, Value};

use crate::error::ApiError;
pub use crate::params::ITEMS_PARAMS;
use crate::params::{
    echo, items_query, parse_datetime_param, parse_decimal, parse_instant, parse_point, parse_style, Params,
};

pub const POSITION_PARAMS: &[&str] = &["at"];
pub const FOV_PARAMS: &[&str] = &["at", "step"];
pub const VISIBLE_PARAMS: &[&str] = &["point", "step", "datetime"];

pub(crate) fn link(href: String, rel: &str) -> Value {
    json!({"href": href, "rel": rel, "type": "application/json"})
}

pub fn feature_json(cid: &str, rec: &FeatureRecord, style: TimeStyle) -> Value {
    let extent = rec.extent();
    json!({
        "type": "Feature",
        "id": rec.fid(),
        "geometry": geojson::document_geometry(rec.doc()),
        "properties": {
            "mediaType": rec.doc().kind().as_str(),
            "timeExtent": [epoch_to_iso(extent.start()), epoch_to_iso(extent.end())],
        },
        "geomedia": document_to_value(rec.doc(), style),
        "links": [link(format!("/collections/{cid}/items/{}", rec.fid()), "self")],
    })
}

/// The page of features an items request selects.
pub fn items_page<'a>(store: &'a MediaStore, cid: &str, params: &Params) -> Result<Page<'a>, ApiError> {
    Ok(evaluate(store, cid, &items_query(params)?)?)
}

/// The items response: a FeatureCollection with match counts and the
/// normalized query.
pub fn items(store: &MediaStore, cid: &str, params: &Params) -> Result<Value, ApiError> {
    let q = items_query(params)?;
    let style = parse_style(params)?;
    let page = evaluate(store, cid, &q)?;
    let features: Vec<Value> = page.items.iter().map(|r| feature_json(cid, r, style)).collect();
    Ok(json!({
        "type": "FeatureCollection",
        "numberMatched": page.matched,
        "numberReturned": features.len(),
        "query": echo(&q),
        "features": features,
        "links": [link(format!("/collections/{cid}/items"), "self")],
    }))
}

/// GeoJSON Point of a feature's position at `at`.
pub fn position(store: &MediaStore, cid: &str, fid: &str, params: &Params) -> Result<Value, ApiError> {
    let rec = store.get_feature(cid, fid)?;
    position_of(rec.doc(), params)
}

pub fn position_of(doc: &GeoMediaDocument, params: &Params) -> Result<Value, ApiError> {
    let t = parse_instant(params.require("at")?)?;
    Ok(geojson::point(&position_at(doc, t)?))
}

/// GeoJSON Polygon of a photo's or video's view sector.
pub fn fov(store: &MediaStore, cid: &str, fid: &str, params: &Params) -> Result<Value, ApiError> {
    let rec = store.get_feature(cid, fid)?;
    fov_of(rec.doc(), params)
}

pub fn fov_of(doc: &GeoMediaDocument, params: &Params) -> Result<Value, ApiError> {
    let step = match params.get("step") {
        None => DEFAULT_ARC_STEP_DEG,
        Some(s) => {
            let v = parse_decimal(s, "step")?;
            if !(v > 0.0 && v <= 360.0) {
                return Err(ApiError::bad_query("step must be in (0, 360] degrees"));
            }
            v
        }
    };
    let sector = match &doc.media {
        Media::StPhoto(photo) => {
            if let Some(s) = params.get("at") {
                let t = parse_instant(s)?;
                if t != photo.time() {
                    return Err(ApiError::bad_query(format!(
                        "{} is not the photo's time {}",
                        epoch_to_iso(t),
                        epoch_to_iso(photo.time())
                    )));
                }
            }
            photo.sector(step)
        }
        Media::MovingVideo(video) => {
            let snap = fov_at(video, parse_instant(params.require("at")?)?)?;
            fov_sector_polygon(&snap.camera, snap.direction, &snap.fov, step)
        }
        other => {
            return Err(QueryError::WrongKind {
                op: "fov",
                kind: other.kind(),
            }
            .into())
        }
    };
    Ok(geojson::polygon(&sector))
}

/// When a ground point is in view, as `start/end` ISO intervals.
pub fn visible(store: &MediaStore, cid: &str, fid: &str, params: &Params) -> Result<Value, ApiError> {
    let rec = store.get_feature(cid, fid)?;
    visible_of(rec.doc(), params)
}

pub fn visible_of(doc: &GeoMediaDocument, params: &Params) -> Result<Value, ApiError> {
    let p = parse_point(params.require("point")?, "point")?;
    let step = match params.get("step") {
        None => DEFAULT_VISIBILITY_STEP_MS,
        Some(s) => s
            .parse::<i64>()
            .ok()
            .filter(|v| *v >= 1)
            .ok_or_else(|| ApiError::bad_query(format!("step must be a positive integer (ms), got {s:?}")))?,
    };
    let window = params.get("datetime").map(parse_datetime_param).transpose()?;
    let intervals = match &doc.media {
        Media::StPhoto(photo) if photo.sees(&p) => vec![TimeInterval::instant(photo.time())],
        Media::StPhoto(_) => Vec::new(),
        Media::MovingVideo(video) => visible_intervals(video, &p, step),
        other => {
            return Err(QueryError::WrongKind {
                op: "visible",
                kind: other.kind(),
            }
            .into())
        }
    };
    let intervals: Vec<String> = intervals
        .iter()
        .filter_map(|iv| match window {
            None => Some(*iv),
            Some(w) => iv.intersection(&w),
        })
        .map(|iv| format!("{}/{}", epoch_to_iso(iv.start()), epoch_to_iso(iv.end())))
        .collect();
    Ok(json!({"point": [p.lon, p.lat], "intervals": intervals}))
}
