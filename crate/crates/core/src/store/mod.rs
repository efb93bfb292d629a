//! Collections ("layers") of geo-tagged media with a spatio-temporal index.
//!
//! A [`MediaStore`] lives in memory and is written to a directory with
//! [`MediaStore::flush`]; [`MediaStore::load`] reads it back and rebuilds the
//! indexes. Every collection holds a single media kind.

mod annotation;
mod index;
mod persist;

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

pub use annotation::{Annotation, AnnotationBody};
pub use index::SpatioTemporalIndex;
pub use persist::{MANIFEST_FILE, PENDING_MANIFEST_FILE};

use crate::media::{GeoMediaDocument, MediaKind};
use crate::temporal::{BBox, TimeInterval, TimeStamp};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{0} already exists")]
    DuplicateId(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("collection holds {expected} features, got {found}")]
    KindMismatch {
        expected: MediaKind,
        found: MediaKind,
    },
    #[error("invalid identifier {0:?}")]
    BadId(String),
    #[error("bad query: {0}")]
    BadQuery(String),
    #[error("bad annotation: {0}")]
    BadAnnotation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt store: {0}")]
    CorruptStore(String),
}

/// Collection ids end up in file names: `[A-Za-z0-9_-]{1,64}`.
pub fn is_valid_collection_id(id: &str) -> bool {
    (1..=64).contains(&id.len())
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// Feature and annotation ids: `[A-Za-z0-9_.-]{1,128}`, not starting with a dot.
pub fn is_valid_item_id(id: &str) -> bool {
    (1..=128).contains(&id.len())
        && !id.starts_with('.')
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || b == b'.')
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub id: String,
    pub title: String,
    pub media_type: MediaKind,
    pub created: TimeStamp,
}

/// A stored document with its footprint and time extent precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    fid: String,
    doc: GeoMediaDocument,
    bbox: Option<BBox>,
    extent: TimeInterval,
}

impl FeatureRecord {
    pub fn new(fid: impl Into<String>, doc: GeoMediaDocument) -> Self {
        let bbox = doc.spatial_bbox();
        let extent = doc.time_extent();
        FeatureRecord {
            fid: fid.into(),
            doc,
            bbox,
            extent,
        }
    }

    pub fn fid(&self) -> &str {
        &self.fid
    }

    pub fn doc(&self) -> &GeoMediaDocument {
        &self.doc
    }

    pub fn bbox(&self) -> Option<BBox> {
        self.bbox
    }

    pub fn extent(&self) -> TimeInterval {
        self.extent
    }

    /// The exact filter `st_query` applies.
    pub fn matches(&self, bbox: Option<&BBox>, interval: Option<&TimeInterval>) -> bool {
        let spatial_ok = match bbox {
            None => true,
            Some(q) => self.bbox.is_some_and(|b| b.intersects(q)),
        };
        spatial_ok && interval.is_none_or(|iv| self.extent.overlaps(iv))
    }
}

/// Validated bbox/interval filter with paging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StQuery {
    pub bbox: Option<BBox>,
    pub interval: Option<TimeInterval>,
    pub limit: usize,
    pub offset: usize,
}

impl StQuery {
    pub fn new(
        bbox: Option<[f64; 4]>,
        interval: Option<(TimeStamp, TimeStamp)>,
        limit: usize,
        offset: usize,
    ) -> Result<Self, StoreError> {
        let bbox = match bbox {
            None => None,
            Some([a, b, c, d]) => Some(BBox::new(a, b, c, d).ok_or_else(|| {
                StoreError::BadQuery(format!("bbox {a},{b},{c},{d} is inverted or not finite"))
            })?),
        };
        let interval = match interval {
            None => None,
            Some((s, e)) => Some(
                TimeInterval::new(s, e).map_err(|e| StoreError::BadQuery(e.to_string()))?,
            ),
        };
        if limit == 0 {
            return Err(StoreError::BadQuery("limit must be at least 1".into()));
        }
        Ok(StQuery {
            bbox,
            interval,
            limit,
            offset,
        })
    }

    pub fn all() -> Self {
        StQuery {
            bbox: None,
            interval: None,
            limit: usize::MAX,
            offset: 0,
        }
    }
}

/// One page of results plus the number of matches before paging.
#[derive(Debug, Clone)]
pub struct Page<'a> {
    pub matched: usize,
    pub items: Vec<&'a FeatureRecord>,
}

pub(crate) fn paginate<T>(all: Vec<T>, limit: usize, offset: usize) -> (usize, Vec<T>) {
    let matched = all.len();
    (matched, all.into_iter().skip(offset).take(limit).collect())
}

#[derive(Debug, Clone, Default)]
pub(crate) struct CollectionState {
    meta: Option<Collection>,
    features: BTreeMap<String, FeatureRecord>,
    annotations: BTreeMap<String, BTreeMap<String, Annotation>>,
    index: SpatioTemporalIndex,
}

impl CollectionState {
    fn new(meta: Collection) -> Self {
        CollectionState {
            meta: Some(meta),
            ..Default::default()
        }
    }

    fn meta(&self) -> &Collection {
        self.meta.as_ref().expect("collections always carry metadata")
    }
}

#[derive(Debug, Clone, Default)]
pub struct MediaStore {
    collections: BTreeMap<String, CollectionState>,
}

impl MediaStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn collection(&self, cid: &str) -> Result<&CollectionState, StoreError> {
        self.collections
            .get(cid)
            .ok_or_else(|| StoreError::NotFound(format!("collection {cid}")))
    }

    fn collection_mut(&mut self, cid: &str) -> Result<&mut CollectionState, StoreError> {
        self.collections
            .get_mut(cid)
            .ok_or_else(|| StoreError::NotFound(format!("collection {cid}")))
    }

    pub fn create_collection(
        &mut self,
        id: &str,
        title: &str,
        media_type: MediaKind,
    ) -> Result<&Collection, StoreError> {
        self.create_collection_at(id, title, media_type, TimeStamp::now())
    }

    pub fn create_collection_at(
        &mut self,
        id: &str,
        title: &str,
        media_type: MediaKind,
        created: TimeStamp,
    ) -> Result<&Collection, StoreError> {
        if !is_valid_collection_id(id) {
            return Err(StoreError::BadId(id.to_string()));
        }
        if self.collections.contains_key(id) {
            return Err(StoreError::DuplicateId(format!("collection {id}")));
        }
        let meta = Collection {
            id: id.to_string(),
            title: title.to_string(),
            media_type,
            created,
        };
        let state = self
            .collections
            .entry(id.to_string())
            .or_insert(CollectionState::new(meta));
        Ok(state.meta())
    }

    pub fn delete_collection(&mut self, id: &str) -> Result<Collection, StoreError> {
        self.collections
            .remove(id)
            .map(|mut s| s.meta.take().expect("collections always carry metadata"))
            .ok_or_else(|| StoreError::NotFound(format!("collection {id}")))
    }

    /// Collections ordered by id.
    pub fn list_collections(&self) -> Vec<&Collection> {
        self.collections.values().map(CollectionState::meta).collect()
    }

    pub fn get_collection(&self, id: &str) -> Result<&Collection, StoreError> {
        self.collection(id).map(CollectionState::meta)
    }

    pub fn feature_count(&self, cid: &str) -> Result<usize, StoreError> {
        Ok(self.collection(cid)?.features.len())
    }

    /// Union of all feature boxes and extents in a collection.
    pub fn collection_extent(
        &self,
        cid: &str,
    ) -> Result<(Option<BBox>, Option<TimeInterval>), StoreError> {
        let c = self.collection(cid)?;
        let bbox = c
            .features
            .values()
            .filter_map(FeatureRecord::bbox)
            .reduce(|a, b| a.union(&b));
        let start = c.features.values().map(|f| f.extent.start()).min();
        let end = c.features.values().map(|f| f.extent.end()).max();
        let extent = start.zip(end).map(|(s, e)| {
            TimeInterval::new(s, e).expect("min start never exceeds max end")
        });
        Ok((bbox, extent))
    }

    /// Insert or replace a feature.
    pub fn put_feature(
        &mut self,
        cid: &str,
        fid: &str,
        doc: GeoMediaDocument,
    ) -> Result<&FeatureRecord, StoreError> {
        if !is_valid_item_id(fid) {
            return Err(StoreError::BadId(fid.to_string()));
        }
        let c = self.collection_mut(cid)?;
        let expected = c.meta().media_type;
        if doc.kind() != expected {
            return Err(StoreError::KindMismatch {
                expected,
                found: doc.kind(),
            });
        }
        let record = FeatureRecord::new(fid, doc);
        if let Some(anns) = c.annotations.get(fid) {
            for ann in anns.values() {
                check_annotation_fits(ann, &record).map_err(|msg| {
                    StoreError::BadAnnotation(format!(
                        "replacing {fid} would invalidate annotation {}: {msg}",
                        ann.aid
                    ))
                })?;
            }
        }
        if let Some(old) = c.features.remove(fid) {
            c.index.remove(fid, old.bbox, old.extent);
        }
        c.index.insert(fid, record.bbox, record.extent);
        Ok(c.features.entry(fid.to_string()).or_insert(record))
    }

    pub fn get_feature(&self, cid: &str, fid: &str) -> Result<&FeatureRecord, StoreError> {
        self.collection(cid)?
            .features
            .get(fid)
            .ok_or_else(|| StoreError::NotFound(format!("feature {cid}/{fid}")))
    }

    /// Removes the feature and its annotations.
    pub fn delete_feature(&mut self, cid: &str, fid: &str) -> Result<FeatureRecord, StoreError> {
        let c = self.collection_mut(cid)?;
        let old = c
            .features
            .remove(fid)
            .ok_or_else(|| StoreError::NotFound(format!("feature {cid}/{fid}")))?;
        c.index.remove(fid, old.bbox, old.extent);
        c.annotations.remove(fid);
        Ok(old)
    }

    /// All features, ordered by fid.
    pub fn features(&self, cid: &str) -> Result<impl Iterator<Item = &FeatureRecord>, StoreError> {
        Ok(self.collection(cid)?.features.values())
    }

    /// Every feature passing the bbox/interval filter, ordered by fid.
    pub fn st_matches(
        &self,
        cid: &str,
        bbox: Option<&BBox>,
        interval: Option<&TimeInterval>,
    ) -> Result<Vec<&FeatureRecord>, StoreError> {
        let c = self.collection(cid)?;
        let mut hits: Vec<&FeatureRecord> = c
            .index
            .candidates(bbox, interval)
            .into_iter()
            .filter_map(|fid| c.features.get(fid))
            .filter(|f| f.matches(bbox, interval))
            .collect();
        hits.sort_unstable_by(|a, b| a.fid.cmp(&b.fid));
        Ok(hits)
    }

    pub fn st_query(&self, cid: &str, q: &StQuery) -> Result<Page<'_>, StoreError> {
        let hits = self.st_matches(cid, q.bbox.as_ref(), q.interval.as_ref())?;
        let (matched, items) = paginate(hits, q.limit, q.offset);
        Ok(Page { matched, items })
    }

    pub fn put_annotation(
        &mut self,
        cid: &str,
        fid: &str,
        ann: Annotation,
    ) -> Result<&Annotation, StoreError> {
        if !is_valid_item_id(&ann.aid) {
            return Err(StoreError::BadId(ann.aid.clone()));
        }
        ann.check_shape().map_err(StoreError::BadAnnotation)?;
        let c = self.collection_mut(cid)?;
        let record = c
            .features
            .get(fid)
            .ok_or_else(|| StoreError::NotFound(format!("feature {cid}/{fid}")))?;
        check_annotation_fits(&ann, record).map_err(StoreError::BadAnnotation)?;
        let slot = c.annotations.entry(fid.to_string()).or_default();
        let aid = ann.aid.clone();
        slot.insert(aid.clone(), ann);
        Ok(&slot[&aid])
    }

    /// Annotations of a feature, ordered by aid.
    pub fn list_annotations(&self, cid: &str, fid: &str) -> Result<Vec<&Annotation>, StoreError> {
        let c = self.collection(cid)?;
        if !c.features.contains_key(fid) {
            return Err(StoreError::NotFound(format!("feature {cid}/{fid}")));
        }
        Ok(c.annotations
            .get(fid)
            .map(|m| m.values().collect())
            .unwrap_or_default())
    }

    pub fn get_annotation(&self, cid: &str, fid: &str, aid: &str) -> Result<&Annotation, StoreError> {
        self.list_annotations(cid, fid)?
            .into_iter()
            .find(|a| a.aid == aid)
            .ok_or_else(|| StoreError::NotFound(format!("annotation {cid}/{fid}/{aid}")))
    }

    pub fn delete_annotation(
        &mut self,
        cid: &str,
        fid: &str,
        aid: &str,
    ) -> Result<Annotation, StoreError> {
        let c = self.collection_mut(cid)?;
        if !c.features.contains_key(fid) {
            return Err(StoreError::NotFound(format!("feature {cid}/{fid}")));
        }
        let slot = c.annotations.get_mut(fid);
        let removed = slot.and_then(|m| m.remove(aid));
        if c.annotations.get(fid).is_some_and(BTreeMap::is_empty) {
            c.annotations.remove(fid);
        }
        removed.ok_or_else(|| StoreError::NotFound(format!("annotation {cid}/{fid}/{aid}")))
    }

    /// First free id of the form `a<N>` for a new annotation on `fid`.
    pub fn next_annotation_id(&self, cid: &str, fid: &str) -> String {
        let taken = self
            .collections
            .get(cid)
            .and_then(|c| c.annotations.get(fid));
        (1..)
            .map(|n| format!("a{n}"))
            .find(|aid| taken.is_none_or(|m| !m.contains_key(aid)))
            .expect("some id is always free")
    }

    pub fn annotation_count(&self) -> usize {
        self.collections
            .values()
            .flat_map(|c| c.annotations.values())
            .map(BTreeMap::len)
            .sum()
    }
}

fn check_annotation_fits(ann: &Annotation, record: &FeatureRecord) -> Result<(), String> {
    let Some(range) = ann.time_range else {
        return Ok(());
    };
    if record.doc.kind() != MediaKind::MovingVideo {
        return Err("a time range is only allowed on video features".into());
    }
    if !record.extent.contains_interval(&range) {
        return Err(format!(
            "time range {range} lies outside the video extent {}",
            record.extent
        ));
    }
    Ok(())
}
