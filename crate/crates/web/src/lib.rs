//! WebAssembly bindings for the demo page in `www/`.
//!
//! Build with `wasm-pack build crates/web --target web --out-dir www/pkg`
//! and serve `crates/web/www` as static files.

pub mod session;

use serde::Serialize;
use wasm_bindgen::prelude::*;

pub use session::{GridRow, SegmentMetrics, SegmentView, Session, TrainSummary};

fn js_err(e: paramtune::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub struct Demo {
    session: Session,
    last: Option<SegmentView>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(count: usize, seed: u64) -> Result<Demo, JsError> {
        Ok(Demo {
            session: Session::new(count, seed).map_err(js_err)?,
            last: None,
        })
    }

    pub fn count(&self) -> usize {
        self.session.count()
    }

    pub fn width(&self) -> usize {
        self.session.width()
    }

    pub fn height(&self) -> usize {
        self.session.height()
    }

    pub fn image(&self, index: usize) -> Result<Vec<u8>, JsError> {
        self.session.image_rgba(index).map_err(js_err)
    }

    pub fn mask(&self, index: usize) -> Result<Vec<u8>, JsError> {
        self.session.mask_rgba(index).map_err(js_err)
    }

    /// Segments one image; returns the metrics as JSON and keeps the
    /// rendering for [`Demo::segmentation`].
    pub fn segment(&mut self, index: usize, n: i32, k: i32) -> Result<String, JsError> {
        let view = self.session.segment(index, n as i64, k as i64).map_err(js_err)?;
        let json = to_json(&view.metrics)?;
        self.last = Some(view);
        Ok(json)
    }

    /// RGBA pixels of the last segmentation.
    pub fn segmentation(&self) -> Vec<u8> {
        self.last.as_ref().map(|v| v.rgba.clone()).unwrap_or_default()
    }

    pub fn train(&self, episodes: usize, seed: u64) -> Result<String, JsError> {
        to_json(&self.session.train(episodes, seed).map_err(js_err)?)
    }

    pub fn gridsearch(&self) -> Result<String, JsError> {
        to_json(&self.session.gridsearch().map_err(js_err)?)
    }
}
