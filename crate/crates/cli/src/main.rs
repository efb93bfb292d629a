//! `geocms`: ingest GeoMedia JSON into a store, query it, evaluate positions,
//! view sectors and visibility, convert time encodings, and serve it over
//! HTTP.
//!
//! Exit status is 0 on success, 2 for usage errors and malformed queries, and
//! 1 for every other failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geomedia::{geojson, parse_document, serialize_document, GeoMediaDocument, MediaKind, MediaStore, TimeStyle};
use geomedia_server::params::Params;
use geomedia_server::{views, ApiError, AppState, ErrorCode, ADDR_ENV, DEFAULT_ADDR, STORE_ENV};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "geocms", version, about = "Geo-tagged media store, query tool and HTTP service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create an empty store.
    Init {
        #[arg(long, env = STORE_ENV)]
        store: PathBuf,
    },
    /// Add or replace features from GeoMedia JSON files.
    Ingest(IngestArgs),
    /// Select features of a collection.
    Query(QueryArgs),
    /// Position of a feature at an instant, as a GeoJSON Point.
    At {
        /// ISO 8601 instant or epoch milliseconds.
        #[arg(long = "at")]
        at: String,
        #[command(flatten)]
        target: Target,
    },
    /// View sector of a photo, or of a video at an instant, as a GeoJSON Polygon.
    Fov {
        #[arg(long = "at")]
        at: Option<String>,
        /// Maximum angle between arc vertices, in degrees.
        #[arg(long)]
        step: Option<String>,
        #[command(flatten)]
        target: Target,
    },
    /// Time intervals during which a ground point is in view.
    Visible {
        /// LON,LAT of the ground point.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Sampling step in milliseconds.
        #[arg(long)]
        step: Option<String>,
        /// Only report intervals within START/END.
        #[arg(long)]
        datetime: Option<String>,
        #[command(flatten)]
        target: Target,
    },
    /// Re-serialize a document with ISO datetimes or an epoch timeline.
    Convert {
        #[arg(long, value_enum)]
        to: Style,
        file: PathBuf,
    },
    /// Serve the store over HTTP until interrupted.
    Serve {
        #[arg(long, env = STORE_ENV)]
        store: PathBuf,
        #[arg(long, env = ADDR_ENV, default_value = DEFAULT_ADDR)]
        addr: String,
        /// Create the store if the directory holds none.
        #[arg(long)]
        init: bool,
    },
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long, env = STORE_ENV)]
    store: PathBuf,
    #[arg(long)]
    collection: String,
    /// Create the collection if it does not exist.
    #[arg(long, requires = "media_type")]
    create: bool,
    /// Media type of a collection created with --create.
    #[arg(long)]
    media_type: Option<String>,
    /// Title of a collection created with --create.
    #[arg(long)]
    title: Option<String>,
    /// Documents to ingest, as PATH or FID=PATH. The feature id defaults to
    /// the file stem.
    #[arg(required = true)]
    files: Vec<String>,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long, env = STORE_ENV)]
    store: PathBuf,
    #[arg(long)]
    collection: String,
    /// MIN_LON,MIN_LAT,MAX_LON,MAX_LAT
    #[arg(long, allow_hyphen_values = true)]
    bbox: Option<String>,
    /// Instant or START/END; `..` leaves an end open.
    #[arg(long)]
    datetime: Option<String>,
    /// LON,LAT,RADIUS_M
    #[arg(long, allow_hyphen_values = true)]
    near: Option<String>,
    /// LON,LAT of a ground point the media must see.
    #[arg(long, allow_hyphen_values = true)]
    visible_from: Option<String>,
    #[arg(long)]
    limit: Option<String>,
    #[arg(long)]
    offset: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Ids)]
    format: Format,
    /// Time encoding of documents in the geomedia format.
    #[arg(long, value_enum)]
    time: Option<Style>,
}

/// A document file, or a feature in a store.
#[derive(Debug, Args)]
struct Target {
    #[arg(long, env = STORE_ENV)]
    store: Option<PathBuf>,
    #[arg(long, requires = "item")]
    collection: Option<String>,
    #[arg(long, requires = "collection")]
    item: Option<String>,
    /// A GeoMedia JSON file, instead of --collection and --item.
    #[arg(conflicts_with_all = ["collection", "item"], required_unless_present = "item")]
    file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    /// One feature id per line.
    Ids,
    /// A FeatureCollection of bounding-box centres.
    Geojson,
    /// The items response of the HTTP service.
    Geomedia,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Style {
    Iso,
    Epoch,
}

impl Style {
    fn time_style(self) -> TimeStyle {
        match self {
            Style::Iso => TimeStyle::Iso,
            Style::Epoch => TimeStyle::Epoch,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Style::Iso => "iso",
            Style::Epoch => "epoch",
        }
    }
}

/// A failed command: its exit status and what to print.
#[derive(Debug)]
struct Failure {
    status: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            status: 2,
            message: message.into(),
        }
    }

    fn operational(message: impl Into<String>) -> Self {
        Failure {
            status: 1,
            message: message.into(),
        }
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        let status = if e.code == ErrorCode::BadQuery { 2 } else { 1 };
        Failure {
            status,
            message: format!("{}: {}", e.code.as_str(), e.message),
        }
    }
}

impl From<geomedia::StoreError> for Failure {
    fn from(e: geomedia::StoreError) -> Self {
        ApiError::from(e).into()
    }
}

type Outcome = Result<(), Failure>;

fn print_json(v: &Value) -> Outcome {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, v).map_err(|e| Failure::operational(e.to_string()))?;
    writeln!(out).map_err(|e| Failure::operational(e.to_string()))
}

fn read_document(path: &Path) -> Result<GeoMediaDocument, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::operational(format!("{}: {e}", path.display())))?;
    parse_document(&bytes).map_err(|e| Failure::operational(diagnostic(path, &e)))
}

fn diagnostic(path: &Path, e: &geomedia::CodecError) -> String {
    let pointer = if e.path().is_empty() { "/" } else { e.path() };
    format!("{}: {pointer}: {e}", path.display())
}

fn load(store: &Path) -> Result<MediaStore, Failure> {
    MediaStore::load(store).map_err(|e| Failure::operational(format!("cannot open store {}: {e}", store.display())))
}

/// Run a per-feature view on a file or a stored feature.
fn with_target(
    target: &Target,
    params: Params,
    on_doc: fn(&GeoMediaDocument, &Params) -> Result<Value, ApiError>,
) -> Outcome {
    let value = match (&target.file, &target.collection, &target.item) {
        (Some(file), _, _) => on_doc(&read_document(file)?, &params)?,
        (None, Some(cid), Some(fid)) => {
            let dir = target
                .store
                .as_deref()
                .ok_or_else(|| Failure::usage(format!("--store or {STORE_ENV} is required with --item")))?;
            let store = load(dir)?;
            on_doc(store.get_feature(cid, fid)?.doc(), &params)?
        }
        _ => return Err(Failure::usage("give a FILE, or --collection with --item")),
    };
    print_json(&value)
}

fn ingest(args: &IngestArgs) -> Outcome {
    let mut store = load(&args.store)?;
    if store.get_collection(&args.collection).is_err() {
        if !args.create {
            return Err(Failure::operational(format!(
                "NotFound: collection {} does not exist (use --create)",
                args.collection
            )));
        }
        let tag = args.media_type.as_deref().unwrap_or_default();
        let kind = MediaKind::parse(tag).ok_or_else(|| Failure::usage(format!("unknown media type {tag:?}")))?;
        let title = args.title.clone().unwrap_or_else(|| args.collection.clone());
        store.create_collection(&args.collection, &title, kind)?;
    }
    let mut ingested = 0usize;
    let mut failures = 0usize;
    for spec in &args.files {
        let (fid, path) = match spec.split_once('=') {
            Some((fid, path)) => (fid.to_string(), PathBuf::from(path)),
            None => {
                let path = PathBuf::from(spec);
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (stem, path)
            }
        };
        let outcome = read_document(&path).and_then(|doc| {
            store
                .put_feature(&args.collection, &fid, doc)
                .map(|_| ())
                .map_err(|e| Failure::operational(format!("{}: {}", path.display(), Failure::from(e).message)))
        });
        match outcome {
            Ok(()) => ingested += 1,
            Err(f) => {
                failures += 1;
                eprintln!("error: {}", f.message);
            }
        }
    }
    store
        .flush(&args.store)
        .map_err(|e| Failure::operational(format!("flush failed, nothing ingested: {e}")))?;
    let noun = if ingested == 1 { "feature" } else { "features" };
    println!("{ingested} {noun} ingested");
    if failures > 0 {
        let noun = if failures == 1 { "file" } else { "files" };
        return Err(Failure::operational(format!("{failures} {noun} failed")));
    }
    Ok(())
}

fn query(args: &QueryArgs) -> Outcome {
    let store = load(&args.store)?;
    let params = Params::from_pairs([
        ("bbox", args.bbox.clone()),
        ("datetime", args.datetime.clone()),
        ("near", args.near.clone()),
        ("visibleFrom", args.visible_from.clone()),
        ("limit", args.limit.clone()),
        ("offset", args.offset.clone()),
        ("time", args.time.map(|s| s.name().to_string())),
    ]);
    match args.format {
        Format::Geomedia => print_json(&views::items(&store, &args.collection, &params)?),
        Format::Ids => {
            let page = views::items_page(&store, &args.collection, &params)?;
            let mut out = std::io::stdout().lock();
            for rec in page.items {
                writeln!(out, "{}", rec.fid()).map_err(|e| Failure::operational(e.to_string()))?;
            }
            Ok(())
        }
        Format::Geojson => {
            let page = views::items_page(&store, &args.collection, &params)?;
            let features: Vec<Value> = page
                .items
                .iter()
                .map(|rec| {
                    json!({
                        "type": "Feature",
                        "id": rec.fid(),
                        "geometry": rec.bbox().map_or(Value::Null, |b| geojson::bbox_center(&b)),
                        "properties": {"mediaType": rec.doc().kind().as_str()},
                    })
                })
                .collect();
            print_json(&json!({"type": "FeatureCollection", "features": features}))
        }
    }
}

fn serve(store: &Path, addr: &str, init: bool) -> Outcome {
    let state = AppState::open(store, init)
        .map_err(|e| Failure::operational(format!("cannot open store {}: {e}", store.display())))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::operational(e.to_string()))?;
    runtime.block_on(async {
        let (listener, bound) = geomedia_server::bind(addr)
            .await
            .map_err(|e| Failure::operational(format!("cannot bind {addr}: {e}")))?;
        println!("listening on http://{bound}");
        std::io::stdout().flush().ok();
        geomedia_server::serve(listener, Arc::new(state))
            .await
            .map_err(|e| Failure::operational(e.to_string()))
    })
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Init { store } => {
            MediaStore::init(&store)
                .map_err(|e| Failure::operational(format!("cannot create store {}: {e}", store.display())))?;
            println!("initialized empty store in {}", store.display());
            Ok(())
        }
        Command::Ingest(args) => ingest(&args),
        Command::Query(args) => query(&args),
        Command::At { at, target } => with_target(&target, Params::from_pairs([("at", Some(at))]), views::position_of),
        Command::Fov { at, step, target } => {
            with_target(&target, Params::from_pairs([("at", at), ("step", step)]), views::fov_of)
        }
        Command::Visible {
            point,
            step,
            datetime,
            target,
        } => with_target(
            &target,
            Params::from_pairs([("point", Some(point)), ("step", step), ("datetime", datetime)]),
            views::visible_of,
        ),
        Command::Convert { to, file } => {
            let doc = read_document(&file)?;
            let mut out = std::io::stdout().lock();
            out.write_all(&serialize_document(&doc, to.time_style()))
                .and_then(|_| writeln!(out))
                .map_err(|e| Failure::operational(e.to_string()))
        }
        Command::Serve { store, addr, init } => serve(&store, &addr, init),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}
