//! HTTP service exposing a [`MediaStore`] as collections of items, in the
//! style of the OGC API Features (WFS 3) drafts, plus position, field-of-view
//! and visibility endpoints per item.
//!
//! Every mutation is applied to a copy of the store, flushed to disk, and
//! only then published, so readers never see a change that is not durable.

mod error;
pub mod params;
pub mod views;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, RawQuery, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{middleware, Json, Router};
use geomedia::codec::epoch_to_iso;
use geomedia::store::{Annotation, Collection};
use geomedia::{parse_document, GeoMediaDocument, MediaKind, MediaStore, StoreError, TimeStyle};
use serde_json::{json, Map, Value};

pub use error::{attach_path, ApiError, ErrorCode};
use views::link;
use params::{parse_style, Params};

/// Environment variable naming the listen address.
pub const ADDR_ENV: &str = "GEOCMS_ADDR";
/// Environment variable naming the store directory.
pub const STORE_ENV: &str = "GEOCMS_STORE";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

/// Shared service state: the store and the directory it is flushed to.
#[derive(Debug)]
pub struct AppState {
    store: RwLock<MediaStore>,
    dir: Option<PathBuf>,
}

impl AppState {
    /// A store that lives only in memory; mutations are not persisted.
    pub fn in_memory(store: MediaStore) -> Self {
        AppState {
            store: RwLock::new(store),
            dir: None,
        }
    }

    /// Load the store in `dir`, or create an empty one there when `init` is
    /// set and `dir` holds no store yet.
    pub fn open(dir: &Path, init: bool) -> Result<Self, StoreError> {
        let has_store = dir.join(geomedia::store::MANIFEST_FILE).exists()
            || dir.join(geomedia::store::PENDING_MANIFEST_FILE).exists();
        let store = if init && !has_store {
            MediaStore::init(dir)?
        } else {
            MediaStore::load(dir)?
        };
        Ok(AppState {
            store: RwLock::new(store),
            dir: Some(dir.to_path_buf()),
        })
    }

    pub fn read(&self) -> RwLockReadGuard<'_, MediaStore> {
        self.store.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Apply `f` to a copy of the store, flush it, then publish it. Nothing
    /// changes if `f` or the flush fails.
    pub fn mutate<T>(&self, f: impl FnOnce(&mut MediaStore) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let mut guard = self.store.write().unwrap_or_else(|e| e.into_inner());
        let mut next = guard.clone();
        let out = f(&mut next)?;
        if let Some(dir) = &self.dir {
            next.flush(dir).map_err(|e| ApiError::internal(e.to_string()))?;
        }
        *guard = next;
        Ok(out)
    }
}

type Shared = Arc<AppState>;

async fn mutate<T: Send + 'static>(
    state: Shared,
    f: impl FnOnce(&mut MediaStore) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(move || state.mutate(f))
        .await
        .map_err(|e| ApiError::internal(format!("mutation task failed: {e}")))?
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/", get(landing))
        .route("/collections", get(list_collections).post(create_collection))
        .route("/collections/{cid}", get(get_collection).delete(delete_collection))
        .route("/collections/{cid}/items", get(list_items))
        .route(
            "/collections/{cid}/items/{fid}",
            get(get_item).put(put_item).delete(delete_item),
        )
        .route("/collections/{cid}/items/{fid}/position", get(item_position))
        .route("/collections/{cid}/items/{fid}/fov", get(item_fov))
        .route("/collections/{cid}/items/{fid}/visible", get(item_visible))
        .route(
            "/collections/{cid}/items/{fid}/annotations",
            get(list_annotations).post(create_annotation),
        )
        .route(
            "/collections/{cid}/items/{fid}/annotations/{aid}",
            get(get_annotation).delete(delete_annotation),
        )
        .fallback(|| async { ApiError::not_found("no such resource") })
        .layer(middleware::from_fn(attach_path))
        .with_state(state)
}

/// Serve until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: Shared) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Bind `addr`, returning the listener and the address actually bound.
pub async fn bind(addr: &str) -> std::io::Result<(tokio::net::TcpListener, SocketAddr)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((listener, local))
}

fn no_params(raw: &Option<String>) -> Result<(), ApiError> {
    Params::parse(raw.as_deref(), &[]).map(|_| ())
}

fn json_body(bytes: &Bytes) -> Result<Value, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_body(format!("invalid JSON: {e}")))
}

async fn landing(RawQuery(raw): RawQuery) -> Result<Json<Value>, ApiError> {
    no_params(&raw)?;
    Ok(Json(json!({
        "title": "geocms",
        "description": "Geo-tagged media collections: moving points and values, photos and videos with a field of view",
        "links": [link("/".into(), "self"), link("/collections".into(), "data")],
    })))
}

fn collection_summary(c: &Collection) -> Value {
    json!({
        "id": c.id,
        "title": c.title,
        "mediaType": c.media_type.as_str(),
        "created": epoch_to_iso(c.created),
        "links": [
            link(format!("/collections/{}", c.id), "self"),
            link(format!("/collections/{}/items", c.id), "items"),
        ],
    })
}

async fn list_collections(State(state): State<Shared>, RawQuery(raw): RawQuery) -> Result<Json<Value>, ApiError> {
    no_params(&raw)?;
    let store = state.read();
    let collections: Vec<Value> = store.list_collections().into_iter().map(collection_summary).collect();
    Ok(Json(json!({
        "collections": collections,
        "links": [link("/collections".into(), "self")],
    })))
}

async fn create_collection(
    State(state): State<Shared>,
    RawQuery(raw): RawQuery,
    body: Bytes,
) -> Result<Response, ApiError> {
    no_params(&raw)?;
    let Value::Object(mut m) = json_body(&body)? else {
        return Err(ApiError::bad_body("expected a JSON object"));
    };
    let text = |m: &mut Map<String, Value>, key: &str| match m.remove(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(ApiError::bad_body(format!("{key} must be a string"))),
    };
    let id = text(&mut m, "id")?.ok_or_else(|| ApiError::bad_body("missing id"))?;
    let title = text(&mut m, "title")?.unwrap_or_else(|| id.clone());
    let kind = text(&mut m, "mediaType")?.ok_or_else(|| ApiError::bad_body("missing mediaType"))?;
    let kind = MediaKind::parse(&kind).ok_or_else(|| {
        ApiError::bad_body(format!(
            "unknown mediaType {kind:?} (expected one of MovingPoint, MovingDouble, stphoto, MovingVideo)"
        ))
    })?;
    if let Some(k) = m.keys().next() {
        return Err(ApiError::bad_body(format!("unknown member {k:?}")));
    }
    let summary = mutate(state, move |store| {
        store
            .create_collection(&id, &title, kind)
            .map(collection_summary)
            .map_err(ApiError::from_body_store)
    })
    .await?;
    let location = format!("/collections/{}", summary["id"].as_str().unwrap_or_default());
    Ok(created(location, summary))
}

fn created(location: String, body: Value) -> Response {
    let mut resp = (StatusCode::CREATED, Json(body)).into_response();
    if let Ok(v) = HeaderValue::from_str(&location) {
        resp.headers_mut().insert(header::LOCATION, v);
    }
    resp
}

async fn get_collection(
    State(state): State<Shared>,
    UrlPath(cid): UrlPath<String>,
    RawQuery(raw): RawQuery,
) -> Result<Json<Value>, ApiError> {
    no_params(&raw)?;
    let store = state.read();
    let c = store.get_collection(&cid)?;
    let (bbox, extent) = store.collection_extent(&cid)?;
    let mut v = collection_summary(c);
    v["numberOfFeatures"] = json!(store.feature_count(&cid)?);
    v["extent"] = json!({
        "spatial": {"bbox": bbox.map(|b| vec![b.to_array()]).unwrap_or_default()},
        "temporal": {"interval": extent
            .map(|iv| vec![[epoch_to_iso(iv.start()), epoch_to_iso(iv.end())]])
            .unwrap_or_default()},
    });
    Ok(Json(v))
}

async fn delete_collection(
    State(state): State<Shared>,
    UrlPath(cid): UrlPath<String>,
    RawQuery(raw): RawQuery,
) -> Result<StatusCode, ApiError> {
    no_params(&raw)?;
    mutate(state, move |store| Ok(store.delete_collection(&cid)?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn list_items(
    State(state): State<Shared>,
    UrlPath(cid): UrlPath<String>,
    RawQuery(raw): RawQuery,
) -> Result<Json<Value>, ApiError> {
    let params = Params::parse(raw.as_deref(), views::ITEMS_PARAMS)?;
    Ok(Json(views::items(&state.read(), &cid, &params)?))
}

async fn item_position(
    State(state): State<Shared>,
    UrlPath((cid, fid)): UrlPath<(String, String)>,
    RawQuery(raw): RawQuery,
) -> Result<Json<Value>, ApiError> {
    let params = Params::parse(raw.as_deref(), views::POSITION_PARAMS)?;
    Ok(Json(views::position(&state.read(), &cid, &fid, &params)?))
}

async fn item_fov(
    State(state): State<Shared>,
    UrlPath((cid, fid)): UrlPath<(String, String)>,
    RawQuery(raw): RawQuery,
) -> Result<Json<Value>, ApiError> {
    let params = Params::parse(raw.as_deref(), views::FOV_PARAMS)?;
    Ok(Json(views::fov(&state.read(), &cid, &fid, &params)?))
}

async fn item_visible(
    State(state): State<Shared>,
    UrlPath((cid, fid)): UrlPath<(String, String)>,
    RawQuery(raw): RawQuery,
) -> Result<Json<Value>, ApiError> {
    let params = Params::parse(raw.as_deref(), views::VISIBLE_PARAMS)?;
    Ok(Json(views::visible(&state.read(), &cid, &fid, &params)?))
}

fn document_response(status: StatusCode, doc: &GeoMediaDocument, style: TimeStyle) -> Response {
    let bytes = geomedia::serialize_document(doc, style);
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    (status, headers, bytes).into_response()
}

async fn get_item(
    State(state): State<Shared>,
    UrlPath((cid, fid)): UrlPath<(String, String)>,
    RawQuery(raw): RawQuery,
) -> Result<Response, ApiError> {
    let params = Params::parse(raw.as_deref(), &["time"])?;
    let style = parse_style(&params)?;
    let store = state.read();
    let rec = store.get_feature(&cid, &fid)?;
    Ok(document_response(StatusCode::OK, rec.doc(), style))
}

async fn put_item(
    State(state): State<Shared>,
    UrlPath((cid, fid)): UrlPath<(String, String)>,
    RawQuery(raw): RawQuery,
    body: Bytes,
) -> Result<Response, ApiError> {
    let params = Params::parse(raw.as_deref(), &["time"])?;
    let style = parse_style(&params)?;
    let doc = parse_document(&body)?;
    let (existed, doc) = mutate(state, move |store| {
        let existed = store.get_feature(&cid, &fid).is_ok();
        let rec = store.put_feature(&cid, &fid, doc)?;
        Ok((existed, rec.doc().clone()))
    })
    .await?;
    let status = if existed { StatusCode::OK } else { StatusCode::CREATED };
    Ok(document_response(status, &doc, style))
}

async fn delete_item(
    State(state): State<Shared>,
    UrlPath((cid, fid)): UrlPath<(String, String)>,
    RawQuery(raw): RawQuery,
) -> Result<StatusCode, ApiError> {
    no_params(&raw)?;
    mutate(state, move |store| Ok(store.delete_feature(&cid, &fid).map(|_| ())?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn list_annotations(
    State(state): State<Shared>,
    UrlPath((cid, fid)): UrlPath<(String, String)>,
    RawQuery(raw): RawQuery,
) -> Result<Json<Value>, ApiError> {
    no_params(&raw)?;
    let store = state.read();
    let anns: Vec<Value> = store
        .list_annotations(&cid, &fid)?
        .into_iter()
        .map(Annotation::to_json)
        .collect();
    Ok(Json(json!({"annotations": anns})))
}

async fn create_annotation(
    State(state): State<Shared>,
    UrlPath((cid, fid)): UrlPath<(String, String)>,
    RawQuery(raw): RawQuery,
    body: Bytes,
) -> Result<Response, ApiError> {
    no_params(&raw)?;
    let body = json_body(&body)?;
    let (location, ann) = mutate(state, move |store| {
        store.get_feature(&cid, &fid)?;
        let ann = Annotation::from_json(body, || store.next_annotation_id(&cid, &fid))
            .map_err(ApiError::bad_body)?;
        if store.get_annotation(&cid, &fid, &ann.aid).is_ok() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                ErrorCode::Conflict,
                format!("annotation {} already exists", ann.aid),
            ));
        }
        let stored = store
            .put_annotation(&cid, &fid, ann)
            .map_err(ApiError::from_body_store)?;
        Ok((
            format!("/collections/{cid}/items/{fid}/annotations/{}", stored.aid),
            stored.to_json(),
        ))
    })
    .await?;
    Ok(created(location, ann))
}

async fn get_annotation(
    State(state): State<Shared>,
    UrlPath((cid, fid, aid)): UrlPath<(String, String, String)>,
    RawQuery(raw): RawQuery,
) -> Result<Json<Value>, ApiError> {
    no_params(&raw)?;
    let store = state.read();
    Ok(Json(store.get_annotation(&cid, &fid, &aid)?.to_json()))
}

async fn delete_annotation(
    State(state): State<Shared>,
    UrlPath((cid, fid, aid)): UrlPath<(String, String, String)>,
    RawQuery(raw): RawQuery,
) -> Result<StatusCode, ApiError> {
    no_params(&raw)?;
    mutate(state, move |store| Ok(store.delete_annotation(&cid, &fid, &aid).map(|_| ())?)).await?;
    Ok(StatusCode::NO_CONTENT)
}
