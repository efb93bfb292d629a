//! On-disk layout and crash-safe flushing.
//!
//! ```text
//! <dir>/manifest.json        collection metadata, per-file counts and SHA-256
//! <dir>/<cid>.ndjson         one {"id", "document"} line per feature
//! <dir>/<cid>.ann.ndjson     one annotation per line, tagged with its fid
//! ```
//!
//! A flush writes every changed file under a `.tmp` name, then atomically
//! publishes the new manifest as `manifest.json.pending`. That rename is the
//! commit point: after it the temp files are renamed into place and the
//! pending manifest becomes `manifest.json`. A load that finds a pending
//! manifest finishes those renames first, so an interrupted flush leaves
//! either the old store or the new one, never a mix. Hash checks turn any
//! other damage into [`StoreError::CorruptStore`].

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::{Annotation, CollectionState, Collection, FeatureRecord, MediaStore, SpatioTemporalIndex, StoreError};
use crate::codec::{document_from_value, document_to_value, TimeStyle};
use crate::media::MediaKind;
use crate::temporal::TimeStamp;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PENDING_MANIFEST_FILE: &str = "manifest.json.pending";
const FORMAT: &str = "geomedia-store/1";
const TMP_SUFFIX: &str = ".tmp";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FileEntry {
    file: String,
    count: usize,
    sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ManifestCollection {
    id: String,
    title: String,
    media_type: String,
    created: i64,
    features: FileEntry,
    annotations: FileEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    format: String,
    collections: Vec<ManifestCollection>,
}

impl Manifest {
    fn files(&self) -> impl Iterator<Item = &FileEntry> {
        self.collections
            .iter()
            .flat_map(|c| [&c.features, &c.annotations])
    }
}

#[derive(Debug)]
enum FsOp {
    Write { path: PathBuf, bytes: Vec<u8> },
    Rename { from: PathBuf, to: PathBuf },
    Remove(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn corrupt(msg: impl Into<String>) -> StoreError {
    StoreError::CorruptStore(msg.into())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn tmp_name(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(TMP_SUFFIX);
    PathBuf::from(s)
}

fn sync_dir(dir: &Path) -> Result<(), StoreError> {
    // directory fsync makes the renames durable; not every platform allows it
    if let Ok(d) = fs::File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

fn run_ops(dir: &Path, ops: Vec<FsOp>, limit: usize) -> Result<(), StoreError> {
    for op in ops.into_iter().take(limit) {
        match op {
            FsOp::Write { path, bytes } => {
                let mut f = fs::File::create(&path).map_err(io_err(&path))?;
                f.write_all(&bytes).map_err(io_err(&path))?;
                f.sync_all().map_err(io_err(&path))?;
            }
            FsOp::Rename { from, to } => {
                fs::rename(&from, &to).map_err(io_err(&from))?;
                sync_dir(dir)?;
            }
            FsOp::Remove(path) => match fs::remove_file(&path) {
                Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
                    return Err(io_err(&path)(e))
                }
                _ => {}
            },
        }
    }
    Ok(())
}

fn feature_lines(state: &CollectionState) -> Vec<u8> {
    let mut out = Vec::new();
    for rec in state.features.values() {
        let mut line = Map::new();
        line.insert("id".into(), rec.fid.clone().into());
        line.insert("document".into(), document_to_value(&rec.doc, TimeStyle::Epoch));
        serde_json::to_writer(&mut out, &line).expect("JSON values always serialize");
        out.push(b'\n');
    }
    out
}

fn annotation_lines(state: &CollectionState) -> (Vec<u8>, usize) {
    let mut out = Vec::new();
    let mut count = 0;
    for (fid, anns) in &state.annotations {
        for ann in anns.values() {
            let mut line = Map::new();
            line.insert("fid".into(), fid.clone().into());
            if let Value::Object(body) = ann.to_json() {
                line.extend(body);
            }
            serde_json::to_writer(&mut out, &line).expect("JSON values always serialize");
            out.push(b'\n');
            count += 1;
        }
    }
    (out, count)
}

fn read_manifest(path: &Path) -> Result<Manifest, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let m: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| corrupt(format!("{}: {e}", path.display())))?;
    if m.format != FORMAT {
        return Err(corrupt(format!("unsupported store format {:?}", m.format)));
    }
    Ok(m)
}

fn file_matches(path: &Path, sha: &str) -> bool {
    fs::read(path).is_ok_and(|b| sha256_hex(&b) == sha)
}

/// Data files in `dir` that `keep` does not mention.
fn stale_files(dir: &Path, keep: &BTreeSet<String>) -> Result<Vec<PathBuf>, StoreError> {
    let mut stale = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let ours = name.ends_with(".ndjson") || name.ends_with(".ndjson.tmp");
        if ours && !keep.contains(&name) {
            stale.push(entry.path());
        }
    }
    stale.sort();
    Ok(stale)
}

impl MediaStore {
    /// Create an empty store in `dir`, creating the directory if needed.
    /// Fails if `dir` already holds a store.
    pub fn init(dir: &Path) -> Result<MediaStore, StoreError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        if dir.join(MANIFEST_FILE).exists() || dir.join(PENDING_MANIFEST_FILE).exists() {
            return Err(StoreError::DuplicateId(format!("store at {}", dir.display())));
        }
        let store = MediaStore::new();
        store.flush(dir)?;
        Ok(store)
    }

    /// Write the whole store to `dir`; all-or-nothing.
    pub fn flush(&self, dir: &Path) -> Result<(), StoreError> {
        let ops = self.flush_plan(dir)?;
        run_ops(dir, ops, usize::MAX)
    }

    /// Run only the first `steps` filesystem operations of a flush, as if the
    /// process died there. Returns the number of operations a full flush
    /// performs. Exists for crash-recovery tests.
    #[doc(hidden)]
    pub fn flush_interrupted(&self, dir: &Path, steps: usize) -> Result<usize, StoreError> {
        let ops = self.flush_plan(dir)?;
        let total = ops.len();
        run_ops(dir, ops, steps)?;
        Ok(total)
    }

    fn flush_plan(&self, dir: &Path) -> Result<Vec<FsOp>, StoreError> {
        if !dir.is_dir() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let current: BTreeMap<String, String> = match read_manifest(&dir.join(MANIFEST_FILE)) {
            Ok(m) => m
                .files()
                .map(|f| (f.file.clone(), f.sha256.clone()))
                .collect(),
            Err(_) => BTreeMap::new(),
        };

        let mut writes = Vec::new();
        let mut renames = Vec::new();
        let mut entries = Vec::new();
        let mut stage = |file: String, bytes: Vec<u8>, count: usize| {
            let sha = sha256_hex(&bytes);
            let path = dir.join(&file);
            let unchanged = current.get(&file) == Some(&sha) && file_matches(&path, &sha);
            if !unchanged {
                let tmp = tmp_name(&path);
                writes.push(FsOp::Write {
                    path: tmp.clone(),
                    bytes,
                });
                renames.push(FsOp::Rename { from: tmp, to: path });
            }
            FileEntry {
                file,
                count,
                sha256: sha,
            }
        };
        for (cid, state) in &self.collections {
            let meta = state.meta();
            let features = stage(
                format!("{cid}.ndjson"),
                feature_lines(state),
                state.features.len(),
            );
            let (ann_bytes, ann_count) = annotation_lines(state);
            let annotations = stage(format!("{cid}.ann.ndjson"), ann_bytes, ann_count);
            entries.push(ManifestCollection {
                id: meta.id.clone(),
                title: meta.title.clone(),
                media_type: meta.media_type.as_str().to_string(),
                created: meta.created.0,
                features,
                annotations,
            });
        }
        let manifest = Manifest {
            format: FORMAT.to_string(),
            collections: entries,
        };
        let keep: BTreeSet<String> = manifest.files().map(|f| f.file.clone()).collect();
        let mut manifest_bytes =
            serde_json::to_vec_pretty(&manifest).expect("manifests always serialize");
        manifest_bytes.push(b'\n');

        let pending = dir.join(PENDING_MANIFEST_FILE);
        let pending_tmp = tmp_name(&pending);
        let mut ops = writes;
        ops.push(FsOp::Write {
            path: pending_tmp.clone(),
            bytes: manifest_bytes,
        });
        ops.push(FsOp::Rename {
            from: pending_tmp,
            to: pending.clone(),
        });
        ops.extend(renames);
        ops.push(FsOp::Rename {
            from: pending,
            to: dir.join(MANIFEST_FILE),
        });
        let planned_tmps: BTreeSet<PathBuf> = ops
            .iter()
            .filter_map(|op| match op {
                FsOp::Write { path, .. } => Some(path.clone()),
                _ => None,
            })
            .collect();
        ops.extend(
            stale_files(dir, &keep)?
                .into_iter()
                .filter(|p| !planned_tmps.contains(p))
                .map(FsOp::Remove),
        );
        Ok(ops)
    }

    /// Finish a flush that was interrupted after its commit point.
    fn recover(dir: &Path) -> Result<(), StoreError> {
        let pending = dir.join(PENDING_MANIFEST_FILE);
        if !pending.exists() {
            return Ok(());
        }
        let m = read_manifest(&pending)?;
        for f in m.files() {
            let path = dir.join(&f.file);
            let tmp = tmp_name(&path);
            if file_matches(&tmp, &f.sha256) {
                fs::rename(&tmp, &path).map_err(io_err(&tmp))?;
            } else if !file_matches(&path, &f.sha256) {
                return Err(corrupt(format!(
                    "cannot finish interrupted flush: {} does not match its manifest",
                    f.file
                )));
            }
        }
        fs::rename(&pending, dir.join(MANIFEST_FILE)).map_err(io_err(&pending))?;
        sync_dir(dir)?;
        let keep: BTreeSet<String> = m.files().map(|f| f.file.clone()).collect();
        for stale in stale_files(dir, &keep)? {
            let _ = fs::remove_file(stale);
        }
        Ok(())
    }

    /// Read a store written by [`MediaStore::flush`] and rebuild its indexes.
    pub fn load(dir: &Path) -> Result<MediaStore, StoreError> {
        if !dir.is_dir() {
            return Err(StoreError::Io {
                path: dir.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such store directory"),
            });
        }
        Self::recover(dir)?;
        let manifest_path = dir.join(MANIFEST_FILE);
        if !manifest_path.exists() {
            return Err(StoreError::Io {
                path: manifest_path,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a store (no manifest)"),
            });
        }
        let manifest = read_manifest(&manifest_path)?;
        let mut store = MediaStore::new();
        for mc in &manifest.collections {
            let kind = MediaKind::parse(&mc.media_type)
                .ok_or_else(|| corrupt(format!("unknown media type {:?}", mc.media_type)))?;
            if !super::is_valid_collection_id(&mc.id) || store.collections.contains_key(&mc.id) {
                return Err(corrupt(format!("bad or repeated collection id {:?}", mc.id)));
            }
            let mut state = CollectionState::new(Collection {
                id: mc.id.clone(),
                title: mc.title.clone(),
                media_type: kind,
                created: TimeStamp(mc.created),
            });
            load_features(dir, mc, kind, &mut state)?;
            state.index = SpatioTemporalIndex::bulk_load(
                state
                    .features
                    .values()
                    .map(|r| (r.fid.as_str(), r.bbox, r.extent)),
            );
            store.collections.insert(mc.id.clone(), state);
            load_annotations(dir, mc, &mut store)?;
        }
        Ok(store)
    }
}

fn read_checked(dir: &Path, entry: &FileEntry) -> Result<String, StoreError> {
    let path = dir.join(&entry.file);
    let bytes = fs::read(&path).map_err(|e| corrupt(format!("{}: {e}", entry.file)))?;
    if sha256_hex(&bytes) != entry.sha256 {
        return Err(corrupt(format!("{} does not match its checksum", entry.file)));
    }
    let text = String::from_utf8(bytes).map_err(|_| corrupt(format!("{} is not UTF-8", entry.file)))?;
    let lines = text.lines().filter(|l| !l.trim().is_empty()).count();
    if lines != entry.count {
        return Err(corrupt(format!(
            "{} has {lines} records, manifest says {}",
            entry.file, entry.count
        )));
    }
    Ok(text)
}

fn load_features(
    dir: &Path,
    mc: &ManifestCollection,
    kind: MediaKind,
    state: &mut CollectionState,
) -> Result<(), StoreError> {
    let text = read_checked(dir, &mc.features)?;
    for (n, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let at = |msg: String| corrupt(format!("{} line {}: {msg}", mc.features.file, n + 1));
        let mut v: Map<String, Value> = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        let fid = match v.remove("id") {
            Some(Value::String(s)) if super::is_valid_item_id(&s) => s,
            _ => return Err(at("missing or invalid id".into())),
        };
        let doc = v
            .remove("document")
            .ok_or_else(|| at("missing document".into()))
            .and_then(|d| document_from_value(d).map_err(|e| at(e.to_string())))?;
        if doc.kind() != kind {
            return Err(at(format!("{} in a {kind} collection", doc.kind())));
        }
        if state.features.contains_key(&fid) {
            return Err(at(format!("repeated feature id {fid}")));
        }
        state.features.insert(fid.clone(), FeatureRecord::new(fid, doc));
    }
    Ok(())
}

fn load_annotations(dir: &Path, mc: &ManifestCollection, store: &mut MediaStore) -> Result<(), StoreError> {
    let text = read_checked(dir, &mc.annotations)?;
    for (n, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let at = |msg: String| corrupt(format!("{} line {}: {msg}", mc.annotations.file, n + 1));
        let mut v: Map<String, Value> = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        let fid = match v.remove("fid") {
            Some(Value::String(s)) => s,
            _ => return Err(at("missing fid".into())),
        };
        let ann = Annotation::from_json(Value::Object(v), String::new).map_err(at)?;
        store
            .put_annotation(&mc.id, &fid, ann)
            .map_err(|e| at(e.to_string()))?;
    }
    Ok(())
}
