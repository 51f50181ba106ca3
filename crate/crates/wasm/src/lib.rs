//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns JSON strings so the same functions run
//! natively in tests. Errors come back as a message string, which the
//! JavaScript side receives as a thrown value.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use gunsent_core::features::{self, FeatureConfig};
use gunsent_core::geo::{self, StateGeo};
use gunsent_core::scoring::{self, PopulationTable, SentimentCounts, StateInfo};
use gunsent_core::CorpusWindow;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

fn fixture() -> &'static StateGeo {
    static GEO: OnceLock<StateGeo> = OnceLock::new();
    GEO.get_or_init(geo::simplified_fixture)
}

#[derive(Debug, Deserialize)]
struct StateInput {
    pro: u64,
    anti: u64,
    #[serde(default)]
    neutral: u64,
    population: u64,
    #[serde(default)]
    gun_ownership_pct: f64,
}

/// PGPSS for user-entered states.
///
/// Input: `{"CODE": {"pro", "anti", "neutral"?, "population"}, ...}`.
/// Output: the scoring result's `states` array.
#[wasm_bindgen]
pub fn pgpss(states_json: &str) -> Result<String, String> {
    let input: BTreeMap<String, StateInput> = serde_json::from_str(states_json).map_err(|e| e.to_string())?;
    if input.is_empty() {
        return Err("enter at least one state".into());
    }
    let counts: BTreeMap<String, SentimentCounts> = input
        .iter()
        .map(|(code, s)| (code.clone(), SentimentCounts::new(s.pro, s.anti, s.neutral)))
        .collect();
    let info = input
        .into_iter()
        .map(|(code, s)| {
            let info = StateInfo {
                population: s.population,
                gun_ownership_pct: s.gun_ownership_pct,
            };
            (code, info)
        })
        .collect();
    let pop = PopulationTable::from_states(info).map_err(|e| e.to_string())?;
    let window = CorpusWindow::new(0, 0).map_err(|e| e.to_string())?;
    let result = scoring::score_all_states(&counts, window, &pop).map_err(|e| e.to_string())?;
    serde_json::to_string(&result.states).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Explored {
    tokens: Vec<String>,
    hashtags: Vec<String>,
    mentions: Vec<String>,
    ngrams: Vec<String>,
    terms: Vec<String>,
}

/// Tokens, N-grams and the final feature terms of one text.
#[wasm_bindgen]
pub fn explore_ngrams(text: &str, order: usize, use_hashtags: bool, use_mentions: bool) -> Result<String, String> {
    let config = FeatureConfig {
        ngram_order: order,
        use_hashtags,
        use_mentions,
        ..FeatureConfig::default()
    };
    config.validate().map_err(|e| e.to_string())?;
    let tokens = features::tokenize(text);
    let words: Vec<String> = tokens
        .iter()
        .filter(|t| !t.starts_with('#') && !t.starts_with('@'))
        .cloned()
        .collect();
    let tweet = gunsent_core::ingest::Tweet::from_text("demo", text, 0);
    let out = Explored {
        hashtags: tweet.hashtags.clone(),
        mentions: tweet.mentions.clone(),
        ngrams: features::extract_ngrams(&words, order),
        terms: features::document_terms(&tweet, &config),
        tokens,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// State containing `(lon, lat)` as `{"code", "name"}`, or `null`.
#[wasm_bindgen]
pub fn locate_state(lon: f64, lat: f64) -> String {
    let g = fixture();
    match geo::locate(lon, lat, &g.polygons).and_then(|c| g.get(c)) {
        Some(p) => serde_json::json!({"code": p.state_code, "name": p.name}).to_string(),
        None => "null".into(),
    }
}

/// Outer rings of every fixture state for drawing:
/// `[{"code", "name", "rings": [[[lon, lat], ...], ...]}, ...]`.
#[wasm_bindgen]
pub fn state_outlines() -> String {
    let outlines: Vec<_> = fixture()
        .polygons
        .iter()
        .map(|p| {
            let rings: Vec<_> = p.parts.iter().filter_map(|part| part.rings.first()).collect();
            serde_json::json!({"code": p.state_code, "name": p.name, "rings": rings})
        })
        .collect();
    serde_json::to_string(&outlines).expect("outlines serialize")
}
