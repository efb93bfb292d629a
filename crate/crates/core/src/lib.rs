//! Geo-tagged media: moving points and doubles, photos and videos with a
//! camera field of view, their GeoMedia JSON encoding, and a small
//! file-backed store with a spatio-temporal index.
//!
//! ```
//! use geomedia::codec::parse_document;
//! use geomedia::media::Media;
//! use geomedia::temporal::TimeStamp;
//!
//! let doc = parse_document(br#"{
//!     "type": "MovingPoint",
//!     "coordinates": [[150.0, 50.0, 10], [160.0, 60.0, 12]],
//!     "datetimes": ["2018-08-01T13:01:01Z", "2018-08-01T13:01:02Z"],
//!     "interpolation": "linear"
//! }"#).unwrap();
//! let Media::MovingPoint(taxi) = &doc.media else { unreachable!() };
//! let p = taxi.at(TimeStamp(1_533_128_461_500)).unwrap();
//! assert_eq!((p.lon, p.lat, p.alt), (155.0, 55.0, Some(11.0)));
//! ```

pub mod codec;
pub mod fov;
pub mod geodesy;
pub mod geojson;
pub mod media;
pub mod query;
pub mod rtree;
pub mod store;
pub mod temporal;

pub use codec::{parse_document, serialize_document, CodecError, TimeStyle};
pub use fov::FieldOfView;
pub use media::{GeoMediaDocument, Media, MediaKind, MovingVideo, StPhoto};
pub use query::{evaluate, QueryError, QuerySpec};
pub use store::{MediaStore, StoreError};
pub use temporal::{
    BBox, GeoPoint, InterpolationMode, MovingDouble, MovingPoint, TimeInterval, TimeStamp,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/moving-types.md")]
    mod moving_types {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/field-of-view.md")]
    mod field_of_view {}
    #[doc = include_str!("../../../book/src/store.md")]
    mod store {}
    #[doc = include_str!("../../../book/src/queries.md")]
    mod queries {}
    #[doc = include_str!("../../../book/src/service.md")]
    mod service {}
}
