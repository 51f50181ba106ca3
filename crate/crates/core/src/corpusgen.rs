//! Deterministic synthetic labeled corpora.
//!
//! Each tweet is a bag of tokens: with probability `signal_rate` a token comes
//! from its class lexicon, otherwise from the shared lexicon. Hashtags follow
//! the same rule against class and shared hashtag lists. Timestamps are
//! uniform over the window except that the day containing `event_spike`
//! gets its density multiplied. Geotagged tweets get a point sampled inside
//! their state's polygon that resolves back to that state.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::SentimentLabel;
use crate::geo::StateGeo;
use crate::ingest::{AnnotatedTweet, Coordinates, CorpusWindow, Tweet};
use crate::rng::{self, StreamRng};
use crate::time;

#[derive(Debug, Error, PartialEq)]
#[error("invalid generator spec: {0}")]
pub struct InvalidSpec(pub String);

/// One value per sentiment class.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMap<T> {
    pub pro_gun: T,
    pub anti_gun: T,
    pub neutral: T,
}

impl<T> ClassMap<T> {
    pub fn new(pro_gun: T, anti_gun: T, neutral: T) -> Self {
        ClassMap {
            pro_gun,
            anti_gun,
            neutral,
        }
    }

    pub fn get(&self, label: SentimentLabel) -> &T {
        match label {
            SentimentLabel::ProGun => &self.pro_gun,
            SentimentLabel::AntiGun => &self.anti_gun,
            SentimentLabel::Neutral => &self.neutral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpike {
    pub timestamp: i64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub n_per_class: ClassMap<usize>,
    pub class_lexicons: ClassMap<Vec<String>>,
    pub shared_lexicon: Vec<String>,
    pub signal_rate: f64,
    pub tokens_per_tweet: TokenRange,
    pub class_hashtags: ClassMap<Vec<String>>,
    pub shared_hashtags: Vec<String>,
    /// Probability that a tweet carries one hashtag.
    pub hashtag_rate: f64,
    pub geo_distribution: BTreeMap<String, f64>,
    /// Probability that a tweet carries coordinates.
    pub geotag_rate: f64,
    pub time_window: CorpusWindow,
    pub event_spike: Option<EventSpike>,
    pub seed: u64,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

impl Default for GeneratorSpec {
    /// A 10,000-tweet gun-debate corpus over 2012-12-07..2013-01-15 with a
    /// spike on 2012-12-14, spread over the bundled states by population.
    fn default() -> Self {
        GeneratorSpec {
            n_per_class: ClassMap::new(4000, 4000, 2000),
            class_lexicons: ClassMap::new(
                words(
                    "freedom rights defend constitution liberty armed protect carry \
                     amendment patriot selfdefense ccw lawful owners shall infringed \
                     tyranny militia",
                ),
                words(
                    "ban control reform victims tragedy stop violence assault \
                     background checks enough mourn children safer outrage massacre \
                     lobby magazines",
                ),
                words(
                    "obama visiting news today update report watch live press \
                     conference announced statement says schedule sunday coverage \
                     reporters interview",
                ),
            ),
            shared_lexicon: words(
                "the a gun guns is we to and of in this people about now just it \
                 for on all our",
            ),
            signal_rate: 0.6,
            tokens_per_tweet: TokenRange { min: 6, max: 14 },
            class_hashtags: ClassMap::new(
                words("#2ndamendment #nra #gunrights #molonlabe"),
                words("#guncontrol #banguns #guncontrolnow #enough"),
                words("#news #breaking #ct #obama"),
            ),
            shared_hashtags: words("#sandyhook #newtown"),
            hashtag_rate: 0.5,
            geo_distribution: population_weights(&crate::geo::simplified_fixture()),
            geotag_rate: 0.9,
            time_window: CorpusWindow {
                start: 1_354_838_401,
                end: 1_358_294_399,
            },
            event_spike: Some(EventSpike {
                timestamp: 1_355_496_000,
                multiplier: 8.0,
            }),
            seed: 42,
        }
    }
}

impl GeneratorSpec {
    /// Default spec with state weights proportional to population.
    pub fn with_population_weights(geo: &StateGeo) -> Self {
        GeneratorSpec {
            geo_distribution: population_weights(geo),
            ..GeneratorSpec::default()
        }
    }

    pub fn from_json(s: &str) -> Result<Self, InvalidSpec> {
        let spec: GeneratorSpec = serde_json::from_str(s).map_err(|e| InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn total(&self) -> usize {
        SentimentLabel::ALL.iter().map(|&l| *self.n_per_class.get(l)).sum()
    }

    pub fn validate(&self) -> Result<(), InvalidSpec> {
        let bad = |m: &str| Err(InvalidSpec(m.to_string()));
        if !(0.0..=1.0).contains(&self.signal_rate) {
            return bad("signal_rate must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.hashtag_rate) || !(0.0..=1.0).contains(&self.geotag_rate) {
            return bad("hashtag_rate and geotag_rate must be in [0, 1]");
        }
        if self.tokens_per_tweet.min == 0 || self.tokens_per_tweet.min > self.tokens_per_tweet.max {
            return bad("tokens_per_tweet needs 1 <= min <= max");
        }
        if self.time_window.start > self.time_window.end {
            return bad("time_window start is after end");
        }
        let mut seen = BTreeSet::new();
        let lexicons = SentimentLabel::ALL
            .iter()
            .map(|&l| self.class_lexicons.get(l))
            .chain([&self.shared_lexicon]);
        for lex in lexicons {
            let own: BTreeSet<&String> = lex.iter().collect();
            if own.iter().any(|w| seen.contains(*w)) {
                return bad("class and shared lexicons must be pairwise disjoint");
            }
            seen.extend(own);
        }
        if seen.iter().any(|w| w.chars().any(char::is_whitespace) || w.is_empty()) {
            return bad("lexicon entries must be single non-empty tokens");
        }
        if self.signal_rate > 0.0
            && SentimentLabel::ALL
                .iter()
                .any(|&l| *self.n_per_class.get(l) > 0 && self.class_lexicons.get(l).is_empty())
        {
            return bad("every generated class needs a non-empty lexicon");
        }
        if self.signal_rate < 1.0 && self.shared_lexicon.is_empty() {
            return bad("shared_lexicon is empty but signal_rate < 1");
        }
        let all_tags = SentimentLabel::ALL
            .iter()
            .flat_map(|&l| self.class_hashtags.get(l))
            .chain(&self.shared_hashtags);
        if all_tags.clone().any(|t| !t.starts_with('#') || t.len() < 2) {
            return bad("hashtags must start with '#'");
        }
        if let Some(s) = self.event_spike {
            if !(s.multiplier.is_finite() && s.multiplier > 0.0) {
                return bad("event_spike multiplier must be > 0");
            }
        }
        if self.geo_distribution.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("geo_distribution weights must be nonnegative");
        }
        if self.geotag_rate > 0.0 && self.geo_distribution.values().all(|&w| w == 0.0) {
            return bad("geo_distribution weights must not all be zero");
        }
        Ok(())
    }
}

pub fn population_weights(geo: &StateGeo) -> BTreeMap<String, f64> {
    geo.population
        .states
        .iter()
        .map(|(k, v)| (k.clone(), v.population as f64))
        .collect()
}

/// Generates the corpus, sorted by timestamp with ids `g0000001`, ...
/// `state` is set exactly for the geotagged tweets.
pub fn generate_corpus(spec: &GeneratorSpec, geo: &StateGeo) -> Result<Vec<AnnotatedTweet>, InvalidSpec> {
    spec.validate()?;
    let states = checked_states(spec, geo)?;
    let mut r = rng::stream(spec.seed, rng::domain::CORPUS);
    let days = DaySampler::new(spec.time_window, spec.event_spike);

    let mut labels = class_sequence(spec);
    labels.shuffle(&mut r);

    let mut drafts = Vec::with_capacity(labels.len());
    for label in labels {
        let n_tokens = r.gen_range(spec.tokens_per_tweet.min..=spec.tokens_per_tweet.max);
        let mut tokens: Vec<&str> = (0..n_tokens)
            .map(|_| {
                let pool = if r.gen::<f64>() < spec.signal_rate {
                    spec.class_lexicons.get(label)
                } else {
                    &spec.shared_lexicon
                };
                pool[r.gen_range(0..pool.len())].as_str()
            })
            .collect();
        if r.gen::<f64>() < spec.hashtag_rate {
            let pool = if r.gen::<f64>() < spec.signal_rate {
                spec.class_hashtags.get(label)
            } else {
                &spec.shared_hashtags
            };
            if !pool.is_empty() {
                tokens.push(pool[r.gen_range(0..pool.len())].as_str());
            }
        }
        let text = tokens.join(" ");
        let timestamp = days.sample(&mut r);
        let placed = if r.gen::<f64>() < spec.geotag_rate {
            let (code, weight_total) = (&states.0, states.1);
            let mut pick = r.gen::<f64>() * weight_total;
            let mut chosen = code[code.len() - 1].0;
            for &(c, w) in code.iter() {
                if pick < w {
                    chosen = c;
                    break;
                }
                pick -= w;
            }
            Some((chosen.to_string(), place_in_state(geo, chosen, &mut r)))
        } else {
            None
        };
        drafts.push((timestamp, label, text, placed));
    }
    drafts.sort_by_key(|d| d.0);

    Ok(drafts
        .into_iter()
        .enumerate()
        .map(|(i, (timestamp, label, text, placed))| {
            let mut tweet = Tweet::from_text(format!("g{:07}", i + 1), text, timestamp);
            tweet.lang = "en".into();
            tweet.country_code = Some("US".into());
            let state = placed.map(|(code, c)| {
                tweet.coordinates = Some(c);
                code
            });
            AnnotatedTweet {
                tweet,
                state,
                label: Some(label),
            }
        })
        .collect())
}

/// Corpus whose texts are three class-lexicon tokens forming a tri-gram that
/// occurs exactly once. Uni-grams and bi-grams repeat; no tags or coordinates.
pub fn generate_unique_trigram_corpus(spec: &GeneratorSpec) -> Result<Vec<AnnotatedTweet>, InvalidSpec> {
    spec.validate()?;
    let mut r = rng::stream(spec.seed, rng::domain::CORPUS + 1);
    let days = DaySampler::new(spec.time_window, spec.event_spike);
    let mut drafts = Vec::new();
    for label in SentimentLabel::ALL {
        let n = *spec.n_per_class.get(label);
        let lex = spec.class_lexicons.get(label);
        let l = lex.len();
        if n > 0 && (l == 0 || n > l * l * l) {
            return Err(InvalidSpec(format!(
                "{label}: {n} unique tri-grams requested from a lexicon of {l}"
            )));
        }
        let mut used = BTreeSet::new();
        while used.len() < n {
            let code = r.gen_range(0..l * l * l);
            if used.insert(code) {
                let text = format!("{} {} {}", lex[code / (l * l)], lex[(code / l) % l], lex[code % l]);
                drafts.push((days.sample(&mut r), label, text));
            }
        }
    }
    drafts.shuffle(&mut r);
    drafts.sort_by_key(|d| d.0);
    Ok(drafts
        .into_iter()
        .enumerate()
        .map(|(i, (ts, label, text))| AnnotatedTweet {
            tweet: Tweet::from_text(format!("u{:07}", i + 1), text, ts),
            state: None,
            label: Some(label),
        })
        .collect())
}

fn class_sequence(spec: &GeneratorSpec) -> Vec<SentimentLabel> {
    SentimentLabel::ALL
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, *spec.n_per_class.get(l)))
        .collect()
}

type WeightedStates<'a> = (Vec<(&'a str, f64)>, f64);

fn checked_states<'a>(spec: &'a GeneratorSpec, geo: &StateGeo) -> Result<WeightedStates<'a>, InvalidSpec> {
    let mut out = Vec::new();
    for (code, &w) in &spec.geo_distribution {
        if geo.get(code).is_none() {
            return Err(InvalidSpec(format!("unknown state {code:?} in geo_distribution")));
        }
        if w > 0.0 {
            out.push((code.as_str(), w));
        }
    }
    let total = out.iter().map(|s| s.1).sum();
    if out.is_empty() {
        out.push(("", 0.0));
    }
    Ok((out, total))
}

/// Coordinates rounded to 1e-6 degrees that resolve to `code`.
fn place_in_state(geo: &StateGeo, code: &str, r: &mut StreamRng) -> Coordinates {
    let poly = geo.get(code).expect("state checked");
    loop {
        let (lon, lat) = poly.sample_point(r);
        let (lon, lat) = ((lon * 1e6).round() / 1e6, (lat * 1e6).round() / 1e6);
        if crate::geo::locate(lon, lat, &geo.polygons) == Some(code) {
            return Coordinates { lat, lon };
        }
    }
}

/// Picks a UTC day weighted by its overlap with the window (times the spike
/// multiplier on the spike day), then a uniform second within that overlap.
struct DaySampler {
    spans: Vec<(i64, i64, f64)>,
    total: f64,
}

impl DaySampler {
    fn new(window: CorpusWindow, spike: Option<EventSpike>) -> Self {
        let spike_day = spike.map(|s| (time::floor_day(s.timestamp), s.multiplier));
        let spans: Vec<(i64, i64, f64)> = window
            .days()
            .into_iter()
            .map(|day| {
                let lo = day.max(window.start);
                let hi = (day + time::SECONDS_PER_DAY - 1).min(window.end);
                let mut w = (hi - lo + 1) as f64;
                if let Some((d, m)) = spike_day {
                    if d == day {
                        w *= m;
                    }
                }
                (lo, hi, w)
            })
            .collect();
        let total = spans.iter().map(|s| s.2).sum();
        DaySampler { spans, total }
    }

    fn sample(&self, r: &mut StreamRng) -> i64 {
        let mut pick = r.gen::<f64>() * self.total;
        let mut span = self.spans[self.spans.len() - 1];
        for &s in &self.spans {
            if pick < s.2 {
                span = s;
                break;
            }
            pick -= s.2;
        }
        r.gen_range(span.0..=span.1)
    }
}
