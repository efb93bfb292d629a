//! Spherical-earth distance, bearing and destination.
//!
//! All functions work on a sphere of radius [`EARTH_RADIUS_M`]. Field-of-view
//! distances are a few hundred meters at most, so the ellipsoid is not worth
//! the extra machinery here.

use thiserror::Error;

use crate::temporal::{BBox, GeoPoint};

/// Mean earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesyError {
    #[error("bearing is undefined between coincident points")]
    CoincidentPoints,
}

/// Great-circle (haversine) distance in meters. Altitude is ignored.
pub fn geo_distance(p: &GeoPoint, q: &GeoPoint) -> f64 {
    let (lat1, lat2) = (p.lat.to_radians(), q.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (q.lon - p.lon).to_radians();
    let a = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Initial great-circle bearing from `p` to `q`, degrees clockwise from north in `[0, 360)`.
pub fn bearing(p: &GeoPoint, q: &GeoPoint) -> Result<f64, GeodesyError> {
    if p.lon == q.lon && p.lat == q.lat {
        return Err(GeodesyError::CoincidentPoints);
    }
    Ok(bearing_unchecked(p, q))
}

pub(crate) fn bearing_unchecked(p: &GeoPoint, q: &GeoPoint) -> f64 {
    let (lat1, lat2) = (p.lat.to_radians(), q.lat.to_radians());
    let dlon = (q.lon - p.lon).to_radians();
    let y = dlon.sin() * lat2.cos();
    let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos();
    normalize_degrees(y.atan2(x).to_degrees())
}

/// Point reached by travelling `distance_m` meters from `p` along the initial
/// bearing `bearing_deg`. The altitude of `p` is carried over unchanged.
pub fn destination(p: &GeoPoint, bearing_deg: f64, distance_m: f64) -> GeoPoint {
    if distance_m == 0.0 {
        return *p;
    }
    let delta = distance_m / EARTH_RADIUS_M;
    let theta = bearing_deg.to_radians();
    let lat1 = p.lat.to_radians();
    let lon1 = p.lon.to_radians();
    let lat2 = (lat1.sin() * delta.cos() + lat1.cos() * delta.sin() * theta.cos()).asin();
    let lon2 = lon1
        + (theta.sin() * delta.sin() * lat1.cos()).atan2(delta.cos() - lat1.sin() * lat2.sin());
    GeoPoint {
        lon: wrap_longitude(lon2.to_degrees()),
        lat: lat2.to_degrees(),
        alt: p.alt,
    }
}

/// Map any angle in degrees onto `[0, 360)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Smallest absolute difference between two bearings, in `[0, 180]`.
pub fn angular_difference(a: f64, b: f64) -> f64 {
    let d = normalize_degrees(a - b);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// A box containing every point within `radius_m` of `center`.
///
/// Falls back to the full longitude range when the circle reaches a pole or
/// crosses the antimeridian, so the result is always a superset.
pub fn circle_bbox(center: &GeoPoint, radius_m: f64) -> BBox {
    // slack for rounding in the trigonometry below
    let delta = radius_m / EARTH_RADIUS_M * (1.0 + 1e-9) + 1e-10;
    let dlat = delta.to_degrees();
    let (min_lat, max_lat) = (center.lat - dlat, center.lat + dlat);
    if min_lat <= -90.0 || max_lat >= 90.0 {
        return BBox::new(-180.0, min_lat.max(-90.0), 180.0, max_lat.min(90.0))
            .expect("latitude band is ordered");
    }
    let ratio = delta.sin() / center.lat.to_radians().cos();
    let full = BBox::new(-180.0, min_lat, 180.0, max_lat).expect("latitude band is ordered");
    if ratio >= 1.0 {
        return full;
    }
    let dlon = ratio.asin().to_degrees();
    if center.lon - dlon < -180.0 || center.lon + dlon > 180.0 {
        return full;
    }
    BBox::new(center.lon - dlon, min_lat, center.lon + dlon, max_lat).expect("box is ordered")
}

fn wrap_longitude(lon: f64) -> f64 {
    if (-180.0..=180.0).contains(&lon) {
        lon
    } else {
        (lon + 180.0).rem_euclid(360.0) - 180.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_bbox_contains_the_circle() {
        for &(lon, lat, r) in &[(10.0, 0.0, 500.0), (-122.1, 37.4, 30.0), (179.9999, 60.0, 100.0), (0.0, 89.9999, 50.0)] {
            let c = GeoPoint { lon, lat, alt: None };
            let b = circle_bbox(&c, r);
            for k in 0..360 {
                let q = destination(&c, k as f64, r);
                assert!(b.contains_point(&q), "{q:?} outside {b:?}");
            }
        }
        let tight = circle_bbox(&GeoPoint { lon: 0.0, lat: 0.0, alt: None }, 111.1950802);
        assert!((tight.max_lat - 0.001).abs() < 1e-8 && (tight.max_lon - 0.001).abs() < 1e-8);
    }


    fn pt(lon: f64, lat: f64) -> GeoPoint {
        GeoPoint::new(lon, lat, None).unwrap()
    }

    // Independent reference: spherical law of cosines in its stable
    // small-angle form, written out by hand.
    fn oracle_distance(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
        let r = 6_371_008.8_f64;
        let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
        let dp = p2 - p1;
        let dl = (lon2 - lon1).to_radians();
        let h = (dp / 2.0).sin() * (dp / 2.0).sin()
            + p1.cos() * p2.cos() * (dl / 2.0).sin() * (dl / 2.0).sin();
        2.0 * r * h.sqrt().atan2((1.0 - h).sqrt())
    }

    #[test]
    fn distance_zero_for_same_point() {
        let p = pt(12.5, -33.0);
        assert_eq!(geo_distance(&p, &p), 0.0);
    }

    #[test]
    fn distance_one_millidegree_at_equator() {
        // R * 0.001 deg in radians = 111.1950802 m
        let expected = oracle_distance(0.0, 0.0, 0.001, 0.0);
        assert!((expected - 111.195_080_2).abs() < 1e-6);
        let d = geo_distance(&pt(0.0, 0.0), &pt(0.001, 0.0));
        assert!((d - expected).abs() < 1e-9);
        let d = geo_distance(&pt(0.0, 0.0), &pt(0.0, 0.001));
        assert!((d - expected).abs() < 1e-9);
    }

    #[test]
    fn cardinal_bearings() {
        let o = pt(0.0, 0.0);
        assert_eq!(bearing(&o, &pt(0.0, 1.0)).unwrap(), 0.0);
        assert!((bearing(&o, &pt(1.0, 0.0)).unwrap() - 90.0).abs() < 1e-12);
        assert!((bearing(&o, &pt(0.0, -1.0)).unwrap() - 180.0).abs() < 1e-12);
        assert!((bearing(&o, &pt(-1.0, 0.0)).unwrap() - 270.0).abs() < 1e-12);
        assert_eq!(bearing(&o, &o), Err(GeodesyError::CoincidentPoints));
    }

    #[test]
    fn diagonal_bearing_matches_forward_azimuth() {
        // atan2(sin 1° cos 1°, sin 1°) in degrees: 44.9956365...
        let a = 1f64.to_radians();
        let expected = (a.sin() * a.cos()).atan2(a.sin() - 0.0).to_degrees();
        let got = bearing(&pt(0.0, 0.0), &pt(1.0, 1.0)).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 44.995_636_5).abs() < 1e-6);
    }

    #[test]
    fn destination_east_100m() {
        let d = destination(&pt(0.0, 0.0), 90.0, 100.0);
        let dlon = (100.0 / EARTH_RADIUS_M).to_degrees();
        assert!((d.lon - dlon).abs() < 1e-12);
        assert!((d.lon - 0.000_899_3).abs() < 1e-7);
        assert!(d.lat.abs() < 1e-15);
    }

    #[test]
    fn destination_zero_distance_is_identity() {
        let p = GeoPoint::new(-122.0879583, 37.4184889, Some(4.0)).unwrap();
        assert_eq!(destination(&p, 217.0, 0.0), p);
    }

    #[test]
    fn destination_round_trip() {
        let p = pt(127.1, 35.9);
        for b in [0.0, 33.0, 90.0, 181.0, 359.0] {
            for d in [1.0, 30.0, 100.0, 5000.0] {
                let q = destination(&p, b, d);
                assert!((geo_distance(&p, &q) - d).abs() <= 1e-6 * d);
                assert!(angular_difference(bearing(&p, &q).unwrap(), b) < 1e-6);
            }
        }
    }

    #[test]
    fn angle_helpers() {
        assert_eq!(normalize_degrees(-90.0), 270.0);
        assert_eq!(normalize_degrees(720.0), 0.0);
        assert_eq!(angular_difference(350.0, 10.0), 20.0);
        assert_eq!(angular_difference(10.0, 350.0), 20.0);
        assert_eq!(angular_difference(0.0, 180.0), 180.0);
    }
}
