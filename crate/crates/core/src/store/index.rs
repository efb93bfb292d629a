use crate::rtree::RTree;
use crate::temporal::{BBox, TimeInterval, TimeStamp};

/// R-tree over feature boxes plus a start-sorted list of feature extents.
///
/// Lookups return a superset of the features matching both filters; callers
/// refine with the exact predicates.
#[derive(Debug, Clone, Default)]
pub struct SpatioTemporalIndex {
    spatial: RTree<String>,
    // sorted by (start, fid)
    temporal: Vec<(TimeStamp, TimeStamp, String)>,
}

impl SpatioTemporalIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bulk_load<'a>(
        entries: impl IntoIterator<Item = (&'a str, Option<BBox>, TimeInterval)>,
    ) -> Self {
        let mut spatial = Vec::new();
        let mut temporal = Vec::new();
        for (fid, bbox, extent) in entries {
            if let Some(b) = bbox {
                spatial.push((b, fid.to_string()));
            }
            temporal.push((extent.start(), extent.end(), fid.to_string()));
        }
        temporal.sort();
        SpatioTemporalIndex {
            spatial: RTree::bulk_load(spatial),
            temporal,
        }
    }

    pub fn len(&self) -> usize {
        self.temporal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temporal.is_empty()
    }

    pub fn insert(&mut self, fid: &str, bbox: Option<BBox>, extent: TimeInterval) {
        if let Some(b) = bbox {
            self.spatial.insert(b, fid.to_string());
        }
        let key = (extent.start(), extent.end(), fid.to_string());
        let at = self.temporal.partition_point(|e| e < &key);
        self.temporal.insert(at, key);
    }

    pub fn remove(&mut self, fid: &str, bbox: Option<BBox>, extent: TimeInterval) {
        if let Some(b) = bbox {
            let removed = self.spatial.remove(&b, &fid.to_string());
            debug_assert!(removed, "index out of sync for {fid}");
        }
        let key = (extent.start(), extent.end(), fid.to_string());
        if let Ok(at) = self.temporal.binary_search(&key) {
            self.temporal.remove(at);
        }
    }

    /// Candidate fids, unordered. `None` for both filters means everything.
    pub fn candidates(&self, bbox: Option<&BBox>, interval: Option<&TimeInterval>) -> Vec<&str> {
        match (bbox, interval) {
            (Some(b), _) => self.spatial.search(b).into_iter().map(String::as_str).collect(),
            (None, Some(iv)) => {
                let upto = self.temporal.partition_point(|(start, _, _)| *start <= iv.end());
                self.temporal[..upto]
                    .iter()
                    .filter(|(_, end, _)| *end >= iv.start())
                    .map(|(_, _, fid)| fid.as_str())
                    .collect()
            }
            (None, None) => self.temporal.iter().map(|(_, _, f)| f.as_str()).collect(),
        }
    }
}
