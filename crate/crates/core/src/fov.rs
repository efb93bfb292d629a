//! Camera field of view: the wedge a camera sees from a position.
//!
//! A [`FieldOfView`] is a circular sector: everything within `view_distance`
//! meters whose bearing from the camera lies within `h_angle / 2` of the
//! camera direction. `v_angle` is carried for completeness; the 2D tests here
//! ignore it.
//!
//! Directions are either absolute bearings in `[0, 360)` or mount-relative
//! values in `[-360, 0)` that are measured clockwise from the carrier's
//! heading: `-360` front, `-90` right, `-180` rear, `-270` left.

use thiserror::Error;

use crate::geodesy::{self, angular_difference, normalize_degrees, EARTH_RADIUS_M};
use crate::temporal::{BBox, GeoPoint};

pub const DEFAULT_H_ANGLE: f64 = 63.0;
pub const DEFAULT_V_ANGLE: f64 = 60.0;
pub const DEFAULT_VIEW_DISTANCE: f64 = 100.0;
pub const DEFAULT_DIRECTION: f64 = 0.0;

/// Arc discretization step used when none is given.
pub const DEFAULT_ARC_STEP_DEG: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FovError {
    #[error("{field} = {value} is out of range ({range})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("relative direction {direction2d} needs a heading to resolve")]
    MissingHeading { direction2d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldOfView {
    h_angle: f64,
    v_angle: f64,
    direction2d: f64,
    view_distance: f64,
}

impl Default for FieldOfView {
    fn default() -> Self {
        FieldOfView {
            h_angle: DEFAULT_H_ANGLE,
            v_angle: DEFAULT_V_ANGLE,
            direction2d: DEFAULT_DIRECTION,
            view_distance: DEFAULT_VIEW_DISTANCE,
        }
    }
}

impl FieldOfView {
    pub fn new(
        h_angle: f64,
        v_angle: f64,
        direction2d: f64,
        view_distance: f64,
    ) -> Result<Self, FovError> {
        check("horizontalAngle", h_angle, "0 < x <= 360", h_angle > 0.0 && h_angle <= 360.0)?;
        check("verticalAngle", v_angle, "0 < x <= 180", v_angle > 0.0 && v_angle <= 180.0)?;
        check(
            "direction2d",
            direction2d,
            "-360 <= x < 360",
            (-360.0..360.0).contains(&direction2d),
        )?;
        check(
            "distance",
            view_distance,
            "x > 0",
            view_distance > 0.0 && view_distance.is_finite(),
        )?;
        Ok(FieldOfView {
            h_angle,
            v_angle,
            direction2d,
            view_distance,
        })
    }

    pub fn h_angle(&self) -> f64 {
        self.h_angle
    }

    pub fn v_angle(&self) -> f64 {
        self.v_angle
    }

    pub fn direction2d(&self) -> f64 {
        self.direction2d
    }

    pub fn view_distance(&self) -> f64 {
        self.view_distance
    }

    /// Mount-relative direction that needs the carrier's heading.
    pub fn is_relative(&self) -> bool {
        self.direction2d < 0.0
    }

    /// Absolute bearing of the camera axis; see [`resolve_direction`].
    pub fn resolve(&self, heading: Option<f64>) -> Result<f64, FovError> {
        resolve_direction(self, heading)
    }
}

fn check(field: &'static str, value: f64, range: &'static str, ok: bool) -> Result<(), FovError> {
    if ok {
        Ok(())
    } else {
        Err(FovError::OutOfRange {
            field,
            value,
            range,
        })
    }
}

/// Turn a possibly mount-relative direction into an absolute bearing.
///
/// Non-negative directions are returned as is. Negative ones are offsets of
/// `-direction2d mod 360` degrees clockwise from `heading`.
pub fn resolve_direction(fov: &FieldOfView, heading: Option<f64>) -> Result<f64, FovError> {
    let d = fov.direction2d;
    if d >= 0.0 {
        return Ok(normalize_degrees(d));
    }
    let heading = heading.ok_or(FovError::MissingHeading { direction2d: d })?;
    Ok(normalize_degrees(heading + (-d).rem_euclid(360.0)))
}

/// Closed ring outlining a field of view. First position equals the last.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorPolygon {
    ring: Vec<GeoPoint>,
}

impl SectorPolygon {
    pub fn ring(&self) -> &[GeoPoint] {
        &self.ring
    }

    pub fn bbox(&self) -> BBox {
        BBox::from_points(&self.ring).expect("sector rings are never empty")
    }
}

/// Discretize the sector seen from `camera` looking along `abs_direction`.
///
/// The ring is `[camera, arc..., camera]` with arc points spaced at most
/// `arc_step_deg` apart, both aperture edges included. A 360° aperture yields
/// a closed circle without the apex.
///
/// # Panics
///
/// If `arc_step_deg` is not a positive finite number.
pub fn fov_sector_polygon(
    camera: &GeoPoint,
    abs_direction: f64,
    fov: &FieldOfView,
    arc_step_deg: f64,
) -> SectorPolygon {
    assert!(
        arc_step_deg > 0.0 && arc_step_deg.is_finite(),
        "arc step must be positive"
    );
    let segments = (fov.h_angle / arc_step_deg).ceil().max(1.0) as usize;
    let spacing = fov.h_angle / segments as f64;
    let start = abs_direction - fov.h_angle / 2.0;
    let arc_point = |i: usize| {
        let theta = normalize_degrees(start + spacing * i as f64);
        geodesy::destination(camera, theta, fov.view_distance)
    };

    let ring = if fov.h_angle >= 360.0 {
        let mut ring: Vec<GeoPoint> = (0..segments).map(arc_point).collect();
        ring.push(ring[0]);
        ring
    } else {
        let mut ring = Vec::with_capacity(segments + 3);
        ring.push(*camera);
        ring.extend((0..=segments).map(arc_point));
        ring.push(*camera);
        ring
    };
    SectorPolygon { ring }
}

/// Whether `p` lies inside the field of view.
pub fn fov_contains(camera: &GeoPoint, abs_direction: f64, fov: &FieldOfView, p: &GeoPoint) -> bool {
    if camera.lon == p.lon && camera.lat == p.lat {
        return true;
    }
    if geodesy::geo_distance(camera, p) > fov.view_distance {
        return false;
    }
    if fov.h_angle >= 360.0 {
        return true;
    }
    let b = geodesy::bearing_unchecked(camera, p);
    angular_difference(b, abs_direction) <= fov.h_angle / 2.0
}

/// Tight-enough bounding box of the true (curved) sector: the discretized
/// ring plus any cardinal extreme of the arc that falls inside the aperture.
pub fn sector_bbox(camera: &GeoPoint, abs_direction: f64, fov: &FieldOfView) -> BBox {
    let ring = fov_sector_polygon(camera, abs_direction, fov, DEFAULT_ARC_STEP_DEG);
    let mut bbox = ring.bbox();
    for cardinal in [0.0, 90.0, 180.0, 270.0] {
        if fov.h_angle >= 360.0 || angular_difference(cardinal, abs_direction) <= fov.h_angle / 2.0
        {
            let q = geodesy::destination(camera, cardinal, fov.view_distance);
            bbox = bbox.union(&BBox::point(&q));
        }
    }
    bbox
}

/// One camera view, with an absolute direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct View<'a> {
    pub camera: &'a GeoPoint,
    pub direction: f64,
    pub fov: &'a FieldOfView,
}

/// Whether two discretized sectors intersect (touching counts).
///
/// Both rings are projected onto a local tangent plane centred between the
/// two cameras, which keeps the test symmetric in its arguments.
pub fn fov_overlap(a: View<'_>, b: View<'_>) -> bool {
    let gap = geodesy::geo_distance(a.camera, b.camera);
    if gap > (a.fov.view_distance + b.fov.view_distance) * (1.0 + 1e-9) {
        return false;
    }
    let origin = (
        (a.camera.lon + b.camera.lon) / 2.0,
        (a.camera.lat + b.camera.lat) / 2.0,
    );
    let project = |v: &View<'_>| -> Vec<Planar> {
        fov_sector_polygon(v.camera, v.direction, v.fov, DEFAULT_ARC_STEP_DEG)
            .ring
            .iter()
            .map(|p| Planar::project(p, origin))
            .collect()
    };
    let (ra, rb) = (project(&a), project(&b));
    rings_intersect(&ra, &rb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Planar {
    x: f64,
    y: f64,
}

impl Planar {
    fn project(p: &GeoPoint, origin: (f64, f64)) -> Planar {
        let mut dlon = p.lon - origin.0;
        if dlon > 180.0 {
            dlon -= 360.0;
        } else if dlon < -180.0 {
            dlon += 360.0;
        }
        Planar {
            x: dlon.to_radians() * EARTH_RADIUS_M * origin.1.to_radians().cos(),
            y: (p.lat - origin.1).to_radians() * EARTH_RADIUS_M,
        }
    }
}

fn orient(a: Planar, b: Planar, c: Planar) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Planar, b: Planar, p: Planar) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(p1: Planar, p2: Planar, q1: Planar, q2: Planar) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn point_in_ring(p: Planar, ring: &[Planar]) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn rings_intersect(a: &[Planar], b: &[Planar]) -> bool {
    for ea in a.windows(2) {
        for eb in b.windows(2) {
            if segments_intersect(ea[0], ea[1], eb[0], eb[1]) {
                return true;
            }
        }
    }
    point_in_ring(a[0], b) || point_in_ring(b[0], a)
}
