//! Route-level behaviour, driven in-process through the router.

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use geomedia::query::evaluate;
use geomedia::{parse_document, MediaStore};
use geomedia_server::params::{items_query, Params, ITEMS_PARAMS};
use geomedia_server::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> Vec<u8> {
    let path = format!("{}/../core/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

struct Client {
    app: Router,
    state: Arc<AppState>,
}

impl Client {
    fn new(state: AppState) -> Self {
        let state = Arc::new(state);
        Client {
            app: router(state.clone()),
            state,
        }
    }

    async fn send(&self, method: Method, uri: &str, body: Option<Vec<u8>>) -> (StatusCode, Vec<u8>) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map(Body::from).unwrap_or_else(Body::empty))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    async fn json(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes) = self
            .send(method, uri, body.map(|b| serde_json::to_vec(&b).unwrap()))
            .await;
        let v = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| panic!("non-JSON body: {}", String::from_utf8_lossy(&bytes)))
        };
        (status, v)
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.json(Method::GET, uri, None).await
    }
}

async fn taxi_client() -> Client {
    let c = Client::new(AppState::in_memory(MediaStore::new()));
    let (s, _) = c
        .json(Method::POST, "/collections", Some(json!({"id": "taxi", "title": "Taxi GPS", "mediaType": "MovingPoint"})))
        .await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, _) = c.send(Method::PUT, "/collections/taxi/items/t1", Some(fixture("moving_point.json"))).await;
    assert_eq!(s, StatusCode::CREATED);
    c
}

#[tokio::test]
async fn landing_and_collections() {
    let c = taxi_client().await;
    let (s, v) = c.get("/").await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["links"].as_array().unwrap().iter().any(|l| l["href"] == "/collections"));
    let (_, v) = c.get("/collections").await;
    assert_eq!(v["collections"][0]["id"], "taxi");
    assert_eq!(v["collections"][0]["mediaType"], "MovingPoint");
    let (_, v) = c.get("/collections/taxi").await;
    assert_eq!(v["numberOfFeatures"], 1);
    assert_eq!(v["extent"]["spatial"]["bbox"], json!([[150.0, 50.0, 170.0, 60.0]]));
    assert_eq!(
        v["extent"]["temporal"]["interval"],
        json!([["2018-08-01T13:01:01Z", "2018-08-01T13:01:03Z"]])
    );
}

#[tokio::test]
async fn collection_errors() {
    let c = taxi_client().await;
    let body = json!({"id": "taxi", "mediaType": "MovingPoint"});
    let (s, v) = c.json(Method::POST, "/collections", Some(body)).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("Conflict")));
    assert_eq!(v["path"], "/collections");
    assert_eq!(v["httpStatus"], 409);
    let (s, v) = c.json(Method::POST, "/collections", Some(json!({"id": "x", "mediaType": "Car"}))).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("BadBody")));
    let (s, v) = c.json(Method::POST, "/collections", Some(json!({"id": "a b", "mediaType": "stphoto"}))).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("BadBody")));
    let (s, v) = c.get("/collections/nope").await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("NotFound")));
    assert_eq!(v["path"], "/collections/nope");
    let (s, v) = c.get("/no/such/route").await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("NotFound")));
    let (s, v) = c.json(Method::PATCH, "/collections", None).await;
    assert_eq!(s, StatusCode::METHOD_NOT_ALLOWED);
    assert_eq!(v["path"], "/collections");
}

#[tokio::test]
async fn items_queries() {
    let c = taxi_client().await;
    let (s, v) = c.get("/collections/taxi/items?bbox=140,40,180,70").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((v["numberMatched"].as_u64(), v["numberReturned"].as_u64()), (Some(1), Some(1)));
    assert_eq!(v["features"][0]["id"], "t1");
    assert_eq!(v["features"][0]["geometry"]["type"], "LineString");
    assert_eq!(v["query"], json!({"bbox": [140.0, 40.0, 180.0, 70.0], "limit": 10, "offset": 0}));

    let (_, v) = c.get("/collections/taxi/items?bbox=0,0,1,1").await;
    assert_eq!(v["numberReturned"], 0);
    let (_, v) = c.get("/collections/taxi/items?datetime=2018-08-01T13:01:02Z").await;
    assert_eq!(v["numberReturned"], 1);
    let (_, v) = c.get("/collections/taxi/items?datetime=2018-08-01T14:00:00Z/..").await;
    assert_eq!(v["numberReturned"], 0);
    let (_, v) = c.get("/collections/taxi/items?near=160.001,60,100").await;
    assert_eq!(v["numberReturned"], 1);
    let (_, v) = c.get("/collections/taxi/items?time=iso").await;
    assert_eq!(v["features"][0]["geomedia"]["datetimes"][0], "2018-08-01T13:01:01Z");

    for bad in ["bbox=1,2,0,3", "bobx=1,2,3,4", "limit=0", "near=1,2,-5", "datetime=yesterday", "bbox=1,2,3,4&bbox=1,2,3,4"] {
        let (s, v) = c.get(&format!("/collections/taxi/items?{bad}")).await;
        assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("BadQuery")), "{bad}");
    }
    let (s, v) = c.get("/collections/taxi/items?visibleFrom=160,60").await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("KindMismatch")));
}

#[tokio::test]
async fn items_response_equals_evaluate() {
    let c = Client::new(AppState::in_memory(MediaStore::new()));
    c.json(Method::POST, "/collections", Some(json!({"id": "taxi", "mediaType": "MovingPoint"}))).await;
    for i in 0..30 {
        let lon = 150.0 + i as f64 * 0.5;
        let doc = json!({"type": "MovingPoint", "coordinates": [[lon, 50.0], [lon + 0.2, 50.1]],
                         "timeline": [1000 * i, 1000 * i + 500]});
        let (s, _) = c.json(Method::PUT, &format!("/collections/taxi/items/f{i:02}"), Some(doc)).await;
        assert_eq!(s, StatusCode::CREATED);
    }
    for query in ["bbox=152,49,160,51&limit=3&offset=2", "datetime=1970-01-01T00:00:05Z/1970-01-01T00:00:12Z", "near=155,50,30000", "limit=100"] {
        let (_, v) = c.get(&format!("/collections/taxi/items?{query}")).await;
        let got: Vec<&str> = v["features"].as_array().unwrap().iter().map(|f| f["id"].as_str().unwrap()).collect();
        let q = items_query(&Params::parse(Some(query), ITEMS_PARAMS).unwrap()).unwrap();
        let store = c.state.read();
        let page = evaluate(&store, "taxi", &q).unwrap();
        let want: Vec<&str> = page.items.iter().map(|f| f.fid()).collect();
        assert_eq!(got, want, "{query}");
        assert_eq!(v["numberMatched"].as_u64().unwrap() as usize, page.matched);
    }
}

#[tokio::test]
async fn item_round_trip_and_replace() {
    let c = taxi_client().await;
    let (s, body) = c.send(Method::GET, "/collections/taxi/items/t1", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(parse_document(&body).unwrap(), parse_document(&fixture("moving_point.json")).unwrap());
    let (s, _) = c.send(Method::PUT, "/collections/taxi/items/t1", Some(fixture("moving_point.json"))).await;
    assert_eq!(s, StatusCode::OK);
    let (s, v) = c.send(Method::PUT, "/collections/taxi/items/p1", Some(fixture("stphoto.json"))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{}", String::from_utf8_lossy(&v));
    let (s, v) = c.json(Method::PUT, "/collections/taxi/items/t2", Some(json!({"type": "MovingPoint", "coordinates": [[1, 2]], "timeline": [1, 2]}))).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("BadBody")));
    assert!(v["message"].as_str().unwrap().contains("(at /coordinates)"), "{v}");
    let (s, _) = c.json(Method::DELETE, "/collections/taxi/items/t1", None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, _) = c.get("/collections/taxi/items/t1").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn position_fov_and_visibility() {
    let c = taxi_client().await;
    let (s, v) = c.get("/collections/taxi/items/t1/position?at=2018-08-01T13:01:02Z").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"type": "Point", "coordinates": [160.0, 60.0, 12.0]}));
    let (_, v) = c.get("/collections/taxi/items/t1/position?at=1533128461500").await;
    assert_eq!(v["coordinates"], json!([155.0, 55.0, 11.0]));
    let (s, v) = c.get("/collections/taxi/items/t1/position?at=2018-08-01T14:00:00Z").await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("BadQuery")));
    let (s, _) = c.get("/collections/taxi/items/t1/position").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = c.get("/collections/taxi/items/t1/fov?at=2018-08-01T13:01:02Z").await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    c.json(Method::POST, "/collections", Some(json!({"id": "photos", "mediaType": "stphoto"}))).await;
    c.send(Method::PUT, "/collections/photos/items/p1", Some(fixture("stphoto.json"))).await;
    let (s, v) = c.get("/collections/photos/items/p1/fov").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["type"], "Polygon");
    assert_eq!(v["coordinates"][0].as_array().unwrap().len(), 16);
    let (_, v) = c.get("/collections/photos/items/p1/visible?point=-122.08785,37.4184889").await;
    assert_eq!(v["intervals"], json!(["2018-08-01T13:01:01Z/2018-08-01T13:01:01Z"]));
    let (_, v) = c.get("/collections/photos/items/p1/visible?point=-122.08807,37.4184889").await;
    assert_eq!(v["intervals"], json!([]));

    c.json(Method::POST, "/collections", Some(json!({"id": "videos", "mediaType": "MovingVideo"}))).await;
    c.send(Method::PUT, "/collections/videos/items/v1", Some(fixture("moving_video.json"))).await;
    let (s, v) = c.get("/collections/videos/items/v1/fov?at=1533128462000").await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["coordinates"][0][0], json!([160.0, 60.0]));
    // 10 m east of the middle sample, inside the 90-degree view while the camera is there
    let (_, v) = c.get("/collections/videos/items/v1/visible?point=160.00018,60").await;
    let intervals = v["intervals"].as_array().unwrap();
    assert_eq!(intervals.len(), 1, "{v}");
    assert!(intervals[0].as_str().unwrap().contains("2018-08-01T13:01:02Z"), "{v}");
}

#[tokio::test]
async fn annotations() {
    let c = Client::new(AppState::in_memory(MediaStore::new()));
    c.json(Method::POST, "/collections", Some(json!({"id": "photos", "mediaType": "stphoto"}))).await;
    c.send(Method::PUT, "/collections/photos/items/p1", Some(fixture("stphoto.json"))).await;
    let base = "/collections/photos/items/p1/annotations";
    let (s, v) = c.json(Method::POST, base, Some(json!({"kind": "text", "text": "stop sign"}))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v, json!({"aid": "a1", "kind": "text", "text": "stop sign"}));
    let (_, v) = c.get(base).await;
    assert_eq!(v["annotations"].as_array().unwrap().len(), 1);
    let (s, v) = c.json(Method::POST, base, Some(json!({"kind": "polygon", "vertices": [[0, 0], [1, 1]]}))).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("BadBody")));
    let (s, _) = c.json(Method::POST, base, Some(json!({"aid": "a1", "kind": "icon", "icon": "car"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, v) = c.get(&format!("{base}/a1")).await;
    assert_eq!((s, v["text"].as_str()), (StatusCode::OK, Some("stop sign")));
    let (s, _) = c.json(Method::DELETE, &format!("{base}/a1"), None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, _) = c.get(&format!("{base}/a1")).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn mutations_are_durable_before_responding() {
    let dir = tempfile::tempdir().unwrap();
    let c = Client::new(AppState::open(dir.path(), true).unwrap());
    c.json(Method::POST, "/collections", Some(json!({"id": "taxi", "mediaType": "MovingPoint"}))).await;
    c.send(Method::PUT, "/collections/taxi/items/t1", Some(fixture("moving_point.json"))).await;
    // a second service over the same directory sees the write without any shutdown step
    let reopened = Client::new(AppState::open(dir.path(), false).unwrap());
    let (s, body) = reopened.send(Method::GET, "/collections/taxi/items/t1", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(parse_document(&body).unwrap(), parse_document(&fixture("moving_point.json")).unwrap());
}

#[tokio::test]
async fn responses_are_deterministic() {
    let a = taxi_client().await;
    let b = taxi_client().await;
    for uri in ["/collections/taxi/items?bbox=140,40,180,70", "/collections/taxi/items/t1", "/collections/taxi/items/t1/position?at=2018-08-01T13:01:02Z"] {
        assert_eq!(a.send(Method::GET, uri, None).await, b.send(Method::GET, uri, None).await, "{uri}");
    }
}
