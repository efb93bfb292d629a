//! Random document generators and reference implementations shared by the
//! integration suites. The reference functions are written from the formulas
//! directly and do not call into the library.
#![allow(dead_code)]

use geomedia::fov::FieldOfView;
use geomedia::query::{fov_at, visibility_sample_times, QuerySpec};
use geomedia::store::{FeatureRecord, MediaStore};
use geomedia::temporal::{BBox, GeoPoint, InterpolationMode, MovingDouble, MovingPoint, TimeInterval, TimeStamp};
use geomedia::{GeoMediaDocument, Media, MediaKind, MovingVideo, StPhoto};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

pub const RADIUS_M: f64 = 6_371_008.8;

/// The area random features are placed in.
pub const REGION: [f64; 4] = [126.90, 37.45, 127.10, 37.65];
pub const EPOCH0: i64 = 1_533_128_461_000;
pub const HOUR_MS: i64 = 3_600_000;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn pt(lon: f64, lat: f64) -> GeoPoint {
    GeoPoint { lon, lat, alt: None }
}

pub fn ref_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Initial great-circle bearing in degrees, `[0, 360)`.
pub fn ref_bearing(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dl = (b.lon - a.lon).to_radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    let deg = y.atan2(x).to_degrees();
    if deg < 0.0 {
        deg + 360.0
    } else {
        deg
    }
}

pub fn ref_angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 360.0;
    d.min(360.0 - d)
}

/// Sector membership from distance and bearing alone.
pub fn ref_contains(camera: &GeoPoint, direction: f64, fov: &FieldOfView, p: &GeoPoint) -> bool {
    if camera.lon == p.lon && camera.lat == p.lat {
        return true;
    }
    if ref_distance(camera, p) > fov.view_distance() {
        return false;
    }
    fov.h_angle() >= 360.0 || ref_angle_between(ref_bearing(camera, p), direction) <= fov.h_angle() / 2.0
}

/// Reference evaluation of a sampled track at `t`; `None` outside the
/// extent or, for discrete tracks, between samples.
pub fn ref_at(times: &[i64], values: &[[f64; 3]], mode: InterpolationMode, t: i64) -> Option<[f64; 3]> {
    if t < times[0] || t > *times.last().unwrap() {
        return None;
    }
    if let Some(i) = times.iter().position(|&s| s == t) {
        return Some(values[i]);
    }
    let hi = times.iter().position(|&s| s > t).unwrap();
    let lo = hi - 1;
    match mode {
        InterpolationMode::Discrete => None,
        InterpolationMode::Stepwise => Some(values[lo]),
        InterpolationMode::Linear => {
            let f = (t - times[lo]) as f64 / (times[hi] - times[lo]) as f64;
            let mut out = [0.0; 3];
            for k in 0..3 {
                out[k] = values[lo][k] + f * (values[hi][k] - values[lo][k]);
            }
            Some(out)
        }
    }
}

pub fn random_mode(rng: &mut StdRng) -> InterpolationMode {
    [InterpolationMode::Linear, InterpolationMode::Stepwise, InterpolationMode::Discrete][rng.random_range(0..3)]
}

pub fn random_point(rng: &mut StdRng) -> GeoPoint {
    pt(
        rng.random_range(REGION[0]..REGION[2]),
        rng.random_range(REGION[1]..REGION[3]),
    )
}

/// Strictly increasing sample times starting somewhere in the first hour.
pub fn random_times(rng: &mut StdRng, n: usize) -> Vec<TimeStamp> {
    let mut t = EPOCH0 + rng.random_range(0..HOUR_MS);
    (0..n)
        .map(|_| {
            let now = t;
            t += rng.random_range(200..3_000);
            TimeStamp(now)
        })
        .collect()
}

/// A wandering track of `n` samples with steps of up to about 50 m.
pub fn random_track(rng: &mut StdRng, n: usize, mode: InterpolationMode, with_alt: bool) -> MovingPoint {
    let mut p = random_point(rng);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let alt = with_alt.then(|| rng.random_range(0.0..100.0));
        points.push(GeoPoint { alt, ..p });
        p = pt(
            p.lon + rng.random_range(-0.0005..0.0005),
            p.lat + rng.random_range(-0.0004..0.0004),
        );
    }
    MovingPoint::from_parts(random_times(rng, n), points, mode).unwrap()
}

pub fn random_fov(rng: &mut StdRng, allow_relative: bool) -> FieldOfView {
    let direction = if allow_relative && rng.random_bool(0.5) {
        [-360.0, -90.0, -180.0, -270.0][rng.random_range(0..4)]
    } else {
        rng.random_range(0.0..360.0)
    };
    FieldOfView::new(
        rng.random_range(10.0..=120.0),
        rng.random_range(10.0..=90.0),
        direction,
        rng.random_range(20.0..300.0),
    )
    .unwrap()
}

pub fn random_document(rng: &mut StdRng, kind: MediaKind) -> GeoMediaDocument {
    let media = match kind {
        MediaKind::MovingPoint => {
            let n = rng.random_range(1..10);
            let mode = random_mode(rng);
            let alt = rng.random_bool(0.5);
            Media::MovingPoint(random_track(rng, n, mode, alt))
        }
        MediaKind::MovingDouble => {
            let n = rng.random_range(1..8);
            let values = (0..n).map(|_| rng.random_range(-40.0..40.0)).collect();
            let mode = random_mode(rng);
            let track = rng
                .random_bool(0.7)
                .then(|| random_track(rng, n, InterpolationMode::Linear, false));
            let times = match &track {
                Some(t) => t.times().to_vec(),
                None => random_times(rng, n),
            };
            Media::MovingDouble(
                MovingDouble::new(times, values, mode, track.map(|t| t.points().to_vec())).unwrap(),
            )
        }
        MediaKind::StPhoto => {
            let t = random_times(rng, 1)[0];
            let photo = StPhoto::new(
                format!("http://example.org/p{}.jpg", rng.random_range(0..100_000)),
                random_point(rng),
                t,
                random_fov(rng, false),
            )
            .unwrap();
            Media::StPhoto(photo)
        }
        MediaKind::MovingVideo => {
            let n = rng.random_range(1..12);
            let track = random_track(rng, n, InterpolationMode::Linear, false);
            let fovs = if rng.random_bool(0.5) {
                vec![random_fov(rng, true)]
            } else {
                (0..n).map(|_| random_fov(rng, true)).collect()
            };
            Media::MovingVideo(
                MovingVideo::new(format!("http://example.org/v{}.mp4", rng.random_range(0..100_000)), track, fovs)
                    .unwrap(),
            )
        }
    };
    GeoMediaDocument::new(media)
}

/// Brute-force visibility: the point is inside the view at some sampled
/// instant, checked with [`ref_contains`].
pub fn ref_video_sees(video: &MovingVideo, p: &GeoPoint, step_ms: i64) -> bool {
    visibility_sample_times(video, step_ms).into_iter().any(|t| {
        fov_at(video, t).is_ok_and(|s| ref_contains(&s.camera, s.direction, &s.fov, p))
    })
}

pub fn ref_feature_matches(rec: &FeatureRecord, q: &QuerySpec) -> bool {
    let doc = rec.doc();
    if let Some(b) = &q.bbox {
        let Some(fb) = doc.spatial_bbox() else { return false };
        let overlap = fb.min_lon <= b.max_lon
            && b.min_lon <= fb.max_lon
            && fb.min_lat <= b.max_lat
            && b.min_lat <= fb.max_lat;
        if !overlap {
            return false;
        }
    }
    if let Some(iv) = &q.interval {
        let e = doc.time_extent();
        if e.start() > iv.end() || iv.start() > e.end() {
            return false;
        }
    }
    if let Some(n) = &q.near {
        let positions: Vec<GeoPoint> = match &doc.media {
            Media::MovingPoint(m) => m.points().to_vec(),
            Media::MovingDouble(m) => m.track().map(<[GeoPoint]>::to_vec).unwrap_or_default(),
            Media::StPhoto(m) => vec![*m.loc()],
            Media::MovingVideo(m) => m.track().points().to_vec(),
        };
        if !positions.iter().any(|p| ref_distance(p, &n.center) <= n.radius_m) {
            return false;
        }
    }
    if let Some(p) = &q.visible_from {
        let seen = match &doc.media {
            Media::StPhoto(m) => ref_contains(m.loc(), m.fov().direction2d(), m.fov(), p),
            Media::MovingVideo(m) => ref_video_sees(m, p, 100),
            _ => false,
        };
        if !seen {
            return false;
        }
    }
    true
}

/// Linear scan over every feature with the reference predicates.
pub fn ref_evaluate(store: &MediaStore, cid: &str, q: &QuerySpec) -> (usize, Vec<String>) {
    let all: Vec<String> = store
        .features(cid)
        .unwrap()
        .filter(|r| ref_feature_matches(r, q))
        .map(|r| r.fid().to_string())
        .collect();
    let matched = all.len();
    (matched, all.into_iter().skip(q.offset).take(q.limit).collect())
}

/// A sampled position of some feature and the time it was there.
#[derive(Debug, Clone, Copy)]
pub struct Anchor {
    pub at: GeoPoint,
    pub t: TimeStamp,
}

/// Every sample of every feature in a collection.
pub fn anchors(store: &MediaStore, cid: &str) -> Vec<Anchor> {
    let mut out = Vec::new();
    for rec in store.features(cid).unwrap() {
        let (times, points): (Vec<TimeStamp>, Vec<GeoPoint>) = match &rec.doc().media {
            Media::MovingPoint(m) => (m.times().to_vec(), m.points().to_vec()),
            Media::MovingDouble(m) => match m.track() {
                Some(track) => (m.times().to_vec(), track.to_vec()),
                None => continue,
            },
            Media::StPhoto(m) => (vec![m.time()], vec![*m.loc()]),
            Media::MovingVideo(m) => (m.track().times().to_vec(), m.track().points().to_vec()),
        };
        out.extend(times.into_iter().zip(points).map(|(t, at)| Anchor { at, t }));
    }
    out
}

/// A point up to `max_m` meters from `p` in a random direction.
pub fn point_near(rng: &mut StdRng, p: &GeoPoint, max_m: f64) -> GeoPoint {
    let q = geomedia::geodesy::destination(p, rng.random_range(0.0..360.0), rng.random_range(0.0..max_m));
    pt(q.lon, q.lat)
}

pub fn random_bbox(rng: &mut StdRng, around: &GeoPoint) -> BBox {
    let (w, h) = (rng.random_range(0.0005..0.05), rng.random_range(0.0005..0.05));
    let lon = around.lon - rng.random_range(0.0..w);
    let lat = around.lat - rng.random_range(0.0..h);
    BBox::new(lon, lat, lon + w, lat + h).unwrap()
}

pub fn random_interval(rng: &mut StdRng, around: TimeStamp) -> TimeInterval {
    let len = rng.random_range(0..HOUR_MS / 4);
    let a = around.0 - rng.random_range(0..=len) + rng.random_range(-5_000..5_000);
    TimeInterval::new(TimeStamp(a), TimeStamp(a + len)).unwrap()
}

/// A query with each filter present about half the time. The filters are
/// centred on one random anchor so that together they still select a
/// non-trivial subset. `visible_from` is only set when `fov_kind` is true.
pub fn random_query(rng: &mut StdRng, anchors: &[Anchor], fov_kind: bool) -> QuerySpec {
    let focus = if anchors.is_empty() {
        Anchor { at: random_point(rng), t: TimeStamp(EPOCH0 + rng.random_range(0..HOUR_MS)) }
    } else {
        anchors[rng.random_range(0..anchors.len())]
    };
    let mut q = QuerySpec {
        limit: rng.random_range(1..200),
        offset: rng.random_range(0..5),
        ..QuerySpec::default()
    };
    if rng.random_bool(0.5) {
        q.bbox = Some(random_bbox(rng, &focus.at));
    }
    if rng.random_bool(0.5) {
        q.interval = Some(random_interval(rng, focus.t));
    }
    if rng.random_bool(0.5) {
        q.near = Some(geomedia::query::Near {
            center: point_near(rng, &focus.at, 2_000.0),
            radius_m: rng.random_range(50.0..3_000.0),
        });
    }
    if fov_kind && rng.random_bool(0.6) {
        q.visible_from = Some(point_near(rng, &focus.at, 200.0));
    }
    q
}

/// `per_kind` random features in one collection per media kind, ids
/// `f0000`, `f0001`, ... in each.
pub fn random_store(rng: &mut StdRng, per_kind: [(MediaKind, usize); 4]) -> MediaStore {
    let mut store = MediaStore::new();
    for (kind, n) in per_kind {
        let cid = collection_id(kind);
        store.create_collection_at(cid, kind.as_str(), kind, TimeStamp(EPOCH0)).unwrap();
        for i in 0..n {
            store.put_feature(cid, &format!("f{i:04}"), random_document(rng, kind)).unwrap();
        }
    }
    store
}

pub fn collection_id(kind: MediaKind) -> &'static str {
    match kind {
        MediaKind::MovingPoint => "points",
        MediaKind::MovingDouble => "sensors",
        MediaKind::StPhoto => "photos",
        MediaKind::MovingVideo => "videos",
    }
}

/// Drops `//` comments outside strings; a reference for what the listings
/// mean as plain JSON.
pub fn without_comments(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        let mut in_string = false;
        let mut escaped = false;
        let mut cut = line.len();
        let bytes = line.as_bytes();
        for (i, &b) in bytes.iter().enumerate() {
            if in_string {
                match (escaped, b) {
                    (true, _) => escaped = false,
                    (false, b'\\') => escaped = true,
                    (false, b'"') => in_string = false,
                    _ => {}
                }
            } else if b == b'"' {
                in_string = true;
            } else if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
                cut = i;
                break;
            }
        }
        out.push_str(&line[..cut]);
        out.push('\n');
    }
    out
}

/// Numeric leaves keyed by their path, with member names trimmed.
pub fn numbers(v: &Value, path: String, out: &mut Vec<(String, f64)>) {
    match v {
        Value::Number(n) => out.push((path, n.as_f64().unwrap())),
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                numbers(item, format!("{path}/{i}"), out);
            }
        }
        Value::Object(m) => {
            for (k, item) in m {
                numbers(item, format!("{path}/{}", k.trim()), out);
            }
        }
        _ => {}
    }
}

pub fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    v.pointer(path)
}
