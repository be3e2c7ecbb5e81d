use std::collections::HashMap;
use std::io::Cursor;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use image::{ImageFormat, Rgb, RgbImage};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::error::Error;
use crate::palette::PaletteQuery;

use super::{QuerySummary, SearchIndex, SearchRequest, SearchResponse};

const SWATCH: u32 = 48;
const IMAGE_EXTENSIONS: [(&str, &str); 4] =
    [("png", "image/png"), ("jpg", "image/jpeg"), ("jpeg", "image/jpeg"), ("webp", "image/webp")];

const PLACEHOLDER_PAGE: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>palette search</title></head>
<body>
<h1>palette search</h1>
<p>No UI bundle configured. The JSON API is available:</p>
<ul>
<li><code>GET /api/queries</code></li>
<li><code>POST /api/search</code> with <code>{\"query_id\": 0, \"palette\": [\"#ffd3e5\"], \"k\": 10}</code></li>
<li><code>GET /api/image/{id}</code></li>
</ul>
</body></html>
";

/// Shared, read-only server state.
#[derive(Debug, Clone)]
pub struct AppState {
    index: Arc<SearchIndex>,
    images_dir: Option<PathBuf>,
    image_ids: Arc<HashMap<String, usize>>,
}

impl AppState {
    pub fn new(index: SearchIndex, images_dir: Option<PathBuf>) -> Self {
        let bundle = index.bundle();
        let image_ids = (0..bundle.num_images()).map(|j| (bundle.image_id(j), j)).collect();
        Self { index: Arc::new(index), images_dir, image_ids: Arc::new(image_ids) }
    }

    pub fn index(&self) -> &SearchIndex {
        &self.index
    }
}

struct ApiError(Error);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0 {
            Error::UnknownQuery(_) => StatusCode::NOT_FOUND,
            Error::InvalidConfig(_) | Error::InvalidColor(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

async fn queries(State(state): State<AppState>) -> Json<Vec<QuerySummary>> {
    Json(state.index.queries())
}

async fn search(State(state): State<AppState>, Json(req): Json<SearchRequest>) -> Result<Json<SearchResponse>, ApiError> {
    let index = state.index.clone();
    tokio::task::spawn_blocking(move || index.search(&req))
        .await
        .map_err(|e| ApiError(Error::Provider(e.to_string())))?
        .map(Json)
        .map_err(ApiError)
}

/// PNG with one square per palette color (a gray square for an empty palette).
pub(crate) fn swatch_png(palette: &PaletteQuery) -> Vec<u8> {
    let colors: Vec<[u8; 3]> = if palette.is_empty() {
        vec![[200, 200, 200]]
    } else {
        palette.colors().iter().map(|c| [c.r, c.g, c.b]).collect()
    };
    let img = RgbImage::from_fn(SWATCH * colors.len() as u32, SWATCH, |x, _| Rgb(colors[(x / SWATCH) as usize]));
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).expect("in-memory PNG encoding");
    out.into_inner()
}

async fn image(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let Some(&j) = state.image_ids.get(&id) else {
        return (StatusCode::NOT_FOUND, Json(json!({ "error": format!("unknown image {id}") }))).into_response();
    };
    if let Some(dir) = &state.images_dir {
        for (ext, mime) in IMAGE_EXTENSIONS {
            if let Ok(bytes) = tokio::fs::read(dir.join(format!("{id}.{ext}"))).await {
                return ([(header::CONTENT_TYPE, mime)], bytes).into_response();
            }
        }
    }
    let bundle = state.index.bundle();
    let palette = bundle
        .manifest
        .iter()
        .find(|r| r.target_image_index == j)
        .map(|r| r.palette.clone())
        .unwrap_or_default();
    ([(header::CONTENT_TYPE, "image/png")], swatch_png(&palette)).into_response()
}

async fn healthz() -> &'static str {
    "ok"
}

/// API routes plus static UI files from `static_dir` (or a placeholder page).
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/queries", get(queries))
        .route("/api/search", post(search))
        .route("/api/image/{id}", get(image))
        .route("/healthz", get(healthz))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    }
}

/// Serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
