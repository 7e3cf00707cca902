//! Browser bindings for the static demo page in `www/`.
//!
//! Everything returns JSON strings; the page draws them on a canvas. The
//! logic lives in [`api`] so it can be tested natively.

use wasm_bindgen::prelude::*;

pub mod api;

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// A running simulation of one shipped scenario.
#[wasm_bindgen]
pub struct Demo(api::Session);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(scenario: &str, mode: &str, seed: u64) -> Result<Demo, JsError> {
        js(api::Session::new(scenario, mode, seed)).map(Demo)
    }

    /// Advance up to `steps` steps and return the resulting frame.
    pub fn step(&mut self, steps: usize) -> Result<String, JsError> {
        js(self.0.step(steps))
    }

    pub fn frame(&self) -> String {
        self.0.frame()
    }

    /// Predicted end-effector paths over `horizon` steps from the current state.
    pub fn preview(&self, horizon: usize) -> Result<String, JsError> {
        js(self.0.preview(horizon))
    }
}

#[wasm_bindgen]
pub fn scenario_names() -> String {
    api::scenario_names()
}

#[wasm_bindgen]
pub fn barrier_profile(gain: f64, rate: f64, damping: f64) -> Result<String, JsError> {
    js(api::barrier_profile(gain, rate, damping))
}

#[wasm_bindgen]
pub fn attractor_profile(gain: f64, smoothing: f64) -> String {
    api::attractor_profile(gain, smoothing)
}
