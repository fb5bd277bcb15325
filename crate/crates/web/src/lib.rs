//! WebAssembly bindings for the static demo page in `www/`.
//!
//! The page offers three things: a matcher playground, replay of a
//! coordination scenario, and a live simulation grid. Each exported function
//! is a thin wrapper over a plain Rust function so the logic can be tested
//! natively.

use mutual_assist::matcher::evaluate_all;
use mutual_assist::registry::{events_to_jsonl, parse_scenario, replay};
use mutual_assist::sim::{SimParams, Simulation};
use mutual_assist::{MatchVerdict, ServiceAdvertisement, ServiceRequest, Taxonomy, Timestamp};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Verdict<'a> {
    advertisement: &'a str,
    #[serde(flatten)]
    verdict: MatchVerdict,
}

fn taxonomy_or_builtin(taxonomy_json: &str) -> Result<Taxonomy, String> {
    if taxonomy_json.trim().is_empty() {
        Ok(Taxonomy::builtin())
    } else {
        Taxonomy::from_json(taxonomy_json).map_err(|e| e.to_string())
    }
}

/// Concept names of the taxonomy (the shipped one when `taxonomy_json` is
/// blank), as a JSON array.
pub fn concept_names(taxonomy_json: &str) -> Result<String, String> {
    let t = taxonomy_or_builtin(taxonomy_json)?;
    let names: Vec<&str> = t.concepts().iter().map(|c| c.as_str()).collect();
    Ok(serde_json::to_string(&names).expect("strings serialize"))
}

/// Verdicts for every advert, best match first, as a JSON array.
pub fn match_adverts(taxonomy_json: &str, request_json: &str, adverts_json: &str, now: Timestamp) -> Result<String, String> {
    let t = taxonomy_or_builtin(taxonomy_json)?;
    let req: ServiceRequest = serde_json::from_str(request_json).map_err(|e| format!("request: {e}"))?;
    let adverts: Vec<ServiceAdvertisement> =
        serde_json::from_str(adverts_json).map_err(|e| format!("advertisements: {e}"))?;
    let ranked = evaluate_all(&t, &req, &adverts, now).map_err(|e| e.to_string())?;
    let out: Vec<Verdict> = ranked
        .iter()
        .map(|(adv, v)| Verdict {
            advertisement: &adv.id,
            verdict: *v,
        })
        .collect();
    Ok(serde_json::to_string(&out).expect("verdicts serialize"))
}

/// Replays a scenario against the shipped taxonomy; the event log as JSON lines.
pub fn replay_events(scenario_json: &str) -> Result<String, String> {
    let commands = parse_scenario(scenario_json).map_err(|e| e.to_string())?;
    let reg = replay(Taxonomy::builtin(), commands).map_err(|e| e.to_string())?;
    Ok(events_to_jsonl(reg.events()))
}

fn js_err(e: String) -> JsValue {
    JsValue::from_str(&e)
}

#[wasm_bindgen(js_name = conceptNames)]
pub fn concept_names_js(taxonomy_json: &str) -> Result<String, JsValue> {
    concept_names(taxonomy_json).map_err(js_err)
}

#[wasm_bindgen(js_name = matchAdverts)]
pub fn match_adverts_js(taxonomy_json: &str, request_json: &str, adverts_json: &str, now: f64) -> Result<String, JsValue> {
    match_adverts(taxonomy_json, request_json, adverts_json, now as Timestamp).map_err(js_err)
}

#[wasm_bindgen(js_name = replayScenario)]
pub fn replay_scenario_js(scenario_json: &str) -> Result<String, JsValue> {
    replay_events(scenario_json).map_err(js_err)
}

/// A simulation the page can step and draw.
#[wasm_bindgen]
pub struct SimSession {
    sim: Simulation,
}

impl SimSession {
    pub fn from_json(params_json: &str) -> Result<SimSession, String> {
        let params: SimParams = serde_json::from_str(params_json).map_err(|e| e.to_string())?;
        let sim = Simulation::new(params).map_err(|e| e.to_string())?;
        Ok(Self { sim })
    }
}

#[wasm_bindgen]
impl SimSession {
    #[wasm_bindgen(constructor)]
    pub fn new(params_json: &str) -> Result<SimSession, JsValue> {
        Self::from_json(params_json).map_err(js_err)
    }

    pub fn side(&self) -> usize {
        self.sim.grid().side()
    }

    #[wasm_bindgen(js_name = stepsDone)]
    pub fn steps_done(&self) -> f64 {
        self.sim.steps_done() as f64
    }

    /// Advances `count` steps.
    pub fn step(&mut self, count: u32) {
        for _ in 0..count {
            self.sim.step();
        }
    }

    /// One byte per cell, row-major: the role index (professional,
    /// informal, neutral, alarm, normal, participant) with bit 3 set while
    /// the cell is linked.
    #[wasm_bindgen(js_name = roleCodes)]
    pub fn role_codes(&self) -> Vec<u8> {
        self.sim.grid().role_codes()
    }

    /// Metrics so far without the per-step series.
    #[wasm_bindgen(js_name = metricsJson)]
    pub fn metrics_json(&self) -> String {
        let mut report = self.sim.report();
        report.series.clear();
        serde_json::to_string(&report).expect("reports serialize")
    }
}
