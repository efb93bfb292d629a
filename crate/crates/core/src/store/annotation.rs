//! Text, icon and polygon annotations attached to stored features.

use serde::{Deserialize, Serialize};

use crate::codec::parse_datetime;
use crate::temporal::{TimeInterval, TimeStamp};

/// What an annotation shows. Polygon vertices are image-space pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnnotationBody {
    Text { text: String },
    Icon { icon: String },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub aid: String,
    pub body: AnnotationBody,
    /// Only for videos: the part of the timeline the annotation covers.
    pub time_range: Option<TimeInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum WireTime {
    Millis(i64),
    Iso(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct WireAnnotation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aid: Option<String>,
    #[serde(flatten)]
    body: AnnotationBody,
    #[serde(rename = "timeRange", default, skip_serializing_if = "Option::is_none")]
    time_range: Option<[WireTime; 2]>,
}

fn wire_time(t: &WireTime) -> Result<TimeStamp, String> {
    match t {
        WireTime::Millis(ms) => Ok(TimeStamp(*ms)),
        WireTime::Iso(s) => parse_datetime(s).map_err(|e| e.to_string()),
    }
}

impl Annotation {
    /// Decode the JSON form. `aid` may be absent, in which case `default_aid`
    /// is used. `timeRange` accepts epoch milliseconds or ISO strings.
    pub fn from_json(value: serde_json::Value, default_aid: impl FnOnce() -> String) -> Result<Self, String> {
        let wire: WireAnnotation = serde_json::from_value(value).map_err(|e| e.to_string())?;
        let time_range = match &wire.time_range {
            None => None,
            Some([a, b]) => Some(
                TimeInterval::new(wire_time(a)?, wire_time(b)?).map_err(|e| e.to_string())?,
            ),
        };
        Ok(Annotation {
            aid: wire.aid.unwrap_or_else(default_aid),
            body: wire.body,
            time_range,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let wire = WireAnnotation {
            aid: Some(self.aid.clone()),
            body: self.body.clone(),
            time_range: self
                .time_range
                .map(|iv| [WireTime::Millis(iv.start().0), WireTime::Millis(iv.end().0)]),
        };
        serde_json::to_value(wire).expect("annotations always serialize")
    }

    /// Checks that do not depend on the feature being annotated.
    pub(crate) fn check_shape(&self) -> Result<(), String> {
        match &self.body {
            AnnotationBody::Text { text } if text.is_empty() => Err("empty text".into()),
            AnnotationBody::Icon { icon } if icon.is_empty() => Err("empty icon name".into()),
            AnnotationBody::Polygon { vertices } if vertices.len() < 3 => Err(format!(
                "a polygon needs at least 3 vertices, got {}",
                vertices.len()
            )),
            AnnotationBody::Polygon { vertices }
                if vertices.iter().flatten().any(|v| !v.is_finite()) =>
            {
                Err("polygon vertices must be finite".into())
            }
            _ => Ok(()),
        }
    }
}
