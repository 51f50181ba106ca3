//! Hourly/daily sentiment series, tag frequency tables and the snapshot the
//! service exposes.
//!
//! All buckets are UTC aligned. Every bucket carries one point per state with
//! at least one tweet plus a national `"US"` rollup. Tweets without a state
//! only reach the rollup and the separate `unresolved` series, so for every
//! bucket `US == sum(states) + unresolved`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::StateGeo;
use crate::ingest::{AnnotatedTweet, CorpusWindow, Tweet};
use crate::scoring::{self, PgpssResult, ScoringError, SentimentCounts, NATIONAL};
use crate::time;
use crate::Provenance;

pub const SNAPSHOT_VERSION: u32 = 1;
/// Number of tags kept per kind in a snapshot.
pub const STORED_TAGS: usize = 100;

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported snapshot version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("tweet {0:?} has no sentiment label")]
    Unlabeled(String),
    #[error("tweet {id:?} has unknown state {state:?}")]
    UnknownState { id: String, state: String },
    #[error("no tweets to aggregate and no window given")]
    EmptyCorpus,
    #[error("snapshot invariant violated: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Hour,
    Day,
}

impl Granularity {
    pub fn floor(self, ts: i64) -> i64 {
        match self {
            Granularity::Hour => time::floor_hour(ts),
            Granularity::Day => time::floor_day(ts),
        }
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hour" => Ok(Granularity::Hour),
            "day" => Ok(Granularity::Day),
            _ => Err(format!("unknown granularity {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub bucket_start: i64,
    pub granularity: Granularity,
    pub state_code: String,
    pub counts: SentimentCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagKind {
    Hashtag,
    Mention,
}

impl TagKind {
    pub fn sigil(self) -> char {
        match self {
            TagKind::Hashtag => '#',
            TagKind::Mention => '@',
        }
    }
}

impl FromStr for TagKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hashtag" => Ok(TagKind::Hashtag),
            "mention" => Ok(TagKind::Mention),
            _ => Err(format!("unknown tag kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagFrequency {
    pub tag: String,
    pub kind: TagKind,
    pub count: u64,
}

/// Per-(bucket, state) counts plus a `"US"` rollup per bucket, sorted by
/// bucket then state code. Unlabeled records are skipped.
pub fn bucket_counts(records: &[AnnotatedTweet], granularity: Granularity) -> Vec<SeriesPoint> {
    let mut map: BTreeMap<(i64, &str), SentimentCounts> = BTreeMap::new();
    for r in records {
        let Some(label) = r.label else { continue };
        let bucket = granularity.floor(r.tweet.timestamp);
        map.entry((bucket, NATIONAL)).or_default().record(label);
        if let Some(state) = &r.state {
            map.entry((bucket, state.as_str())).or_default().record(label);
        }
    }
    to_points(map, granularity)
}

fn unresolved_counts(records: &[AnnotatedTweet], granularity: Granularity) -> Vec<SeriesPoint> {
    let mut map: BTreeMap<(i64, &str), SentimentCounts> = BTreeMap::new();
    for r in records.iter().filter(|r| r.state.is_none()) {
        if let Some(label) = r.label {
            map.entry((granularity.floor(r.tweet.timestamp), NATIONAL))
                .or_default()
                .record(label);
        }
    }
    to_points(map, granularity)
}

fn to_points(map: BTreeMap<(i64, &str), SentimentCounts>, granularity: Granularity) -> Vec<SeriesPoint> {
    map.into_iter()
        .map(|((bucket_start, state), counts)| SeriesPoint {
            bucket_start,
            granularity,
            state_code: state.to_string(),
            counts,
        })
        .collect()
}

/// The `n` most frequent tags of one kind; ties break lexicographically.
pub fn top_tags<'a, I>(tweets: I, kind: TagKind, n: usize) -> Vec<TagFrequency>
where
    I: IntoIterator<Item = &'a Tweet>,
{
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for t in tweets {
        let tags = match kind {
            TagKind::Hashtag => &t.hashtags,
            TagKind::Mention => &t.mentions,
        };
        for tag in tags {
            *counts.entry(tag.as_str()).or_default() += 1;
        }
    }
    let mut v: Vec<(&str, u64)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    v.into_iter()
        .take(n)
        .map(|(tag, count)| TagFrequency {
            tag: tag.to_string(),
            kind,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMeta {
    pub code: String,
    pub name: String,
    pub population: u64,
    pub gun_ownership_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopTags {
    pub hashtags: Vec<TagFrequency>,
    pub mentions: Vec<TagFrequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyScores {
    pub day: i64,
    pub scores: PgpssResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub window: CorpusWindow,
    pub classifier_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub states: Vec<StateMeta>,
    pub national_population: u64,
    /// Hourly points followed by daily points.
    pub series: Vec<SeriesPoint>,
    /// Counts of tweets without a state, keyed `"US"`, hourly then daily.
    pub unresolved: Vec<SeriesPoint>,
    pub pgpss_daily: Vec<DailyScores>,
    pub pgpss_window: PgpssResult,
    pub top_tags: TopTags,
    pub totals: SentimentCounts,
}

/// Aggregates classified, state-assigned records. Records outside `window`
/// are ignored; without a window the corpus's own time span is used.
pub fn build_snapshot(
    records: &[AnnotatedTweet],
    geo: &StateGeo,
    window: Option<CorpusWindow>,
    classifier_id: &str,
) -> Result<Snapshot, AggregateError> {
    let window = match window {
        Some(w) => w,
        None => CorpusWindow::covering(records.iter().map(|r| r.tweet.timestamp))
            .ok_or(AggregateError::EmptyCorpus)?,
    };
    let mut kept = Vec::with_capacity(records.len());
    for r in records.iter().filter(|r| window.contains(r.tweet.timestamp)) {
        if r.label.is_none() {
            return Err(AggregateError::Unlabeled(r.tweet.id.clone()));
        }
        if let Some(s) = &r.state {
            if !geo.population.states.contains_key(s) {
                return Err(AggregateError::UnknownState {
                    id: r.tweet.id.clone(),
                    state: s.clone(),
                });
            }
        }
        kept.push(r.clone());
    }

    let mut series = bucket_counts(&kept, Granularity::Hour);
    series.extend(bucket_counts(&kept, Granularity::Day));
    let mut unresolved = unresolved_counts(&kept, Granularity::Hour);
    unresolved.extend(unresolved_counts(&kept, Granularity::Day));

    let states: Vec<StateMeta> = geo
        .polygons
        .iter()
        .map(|p| {
            let info = &geo.population.states[&p.state_code];
            StateMeta {
                code: p.state_code.clone(),
                name: p.name.clone(),
                population: info.population,
                gun_ownership_pct: info.gun_ownership_pct,
            }
        })
        .collect();

    let daily: Vec<&SeriesPoint> = series
        .iter()
        .filter(|p| p.granularity == Granularity::Day && p.state_code != NATIONAL)
        .collect();
    let pgpss_daily = window
        .days()
        .into_iter()
        .map(|day| {
            let counts = state_counts(&states, daily.iter().copied().filter(|p| p.bucket_start == day));
            let day_window = CorpusWindow {
                start: day.max(window.start),
                end: (day + time::SECONDS_PER_DAY - 1).min(window.end),
            };
            Ok(DailyScores {
                day,
                scores: scoring::score_all_states(&counts, day_window, &geo.population)?,
            })
        })
        .collect::<Result<Vec<_>, ScoringError>>()?;
    let pgpss_window = scoring::score_all_states(
        &state_counts(&states, daily.iter().copied()),
        window,
        &geo.population,
    )?;

    let tweets = kept.iter().map(|r| &r.tweet);
    let snapshot = Snapshot {
        version: SNAPSHOT_VERSION,
        window,
        classifier_id: classifier_id.to_string(),
        provenance: None,
        national_population: geo.population.national_population,
        states,
        series,
        unresolved,
        pgpss_daily,
        pgpss_window,
        top_tags: TopTags {
            hashtags: top_tags(tweets.clone(), TagKind::Hashtag, STORED_TAGS),
            mentions: top_tags(tweets, TagKind::Mention, STORED_TAGS),
        },
        totals: kept.iter().filter_map(|r| r.label).fold(SentimentCounts::default(), |mut c, l| {
            c.record(l);
            c
        }),
    };
    snapshot.validate()?;
    Ok(snapshot)
}

/// Counts per known state (zero for states without points).
fn state_counts<'a>(
    states: &[StateMeta],
    points: impl Iterator<Item = &'a SeriesPoint>,
) -> BTreeMap<String, SentimentCounts> {
    let mut counts: BTreeMap<String, SentimentCounts> = states
        .iter()
        .map(|s| (s.code.clone(), SentimentCounts::default()))
        .collect();
    for p in points {
        if let Some(c) = counts.get_mut(&p.state_code) {
            *c += p.counts;
        }
    }
    counts
}

impl Snapshot {
    pub fn points(&self, granularity: Granularity, state: &str) -> impl Iterator<Item = &SeriesPoint> {
        let state = state.to_string();
        self.series
            .iter()
            .filter(move |p| p.granularity == granularity && p.state_code == state)
    }

    pub fn state(&self, code: &str) -> Option<&StateMeta> {
        self.states.iter().find(|s| s.code == code)
    }

    /// Per-state daily counts summed over days in `[from_day, to_day]`.
    pub fn counts_between(&self, from_day: i64, to_day: i64) -> BTreeMap<String, SentimentCounts> {
        state_counts(
            &self.states,
            self.series.iter().filter(|p| {
                p.granularity == Granularity::Day
                    && p.state_code != NATIONAL
                    && (from_day..=to_day).contains(&p.bucket_start)
            }),
        )
    }

    /// PGPSS over the days `[from_day, to_day]`, recomputed from summed counts.
    pub fn score_between(&self, from_day: i64, to_day: i64) -> Result<PgpssResult, ScoringError> {
        let states = self
            .states
            .iter()
            .map(|s| {
                (
                    s.code.clone(),
                    scoring::StateInfo {
                        population: s.population,
                        gun_ownership_pct: s.gun_ownership_pct,
                    },
                )
            })
            .collect();
        let pop = scoring::PopulationTable::with_national(states, self.national_population)?;
        let window = CorpusWindow {
            start: from_day.max(self.window.start),
            end: (to_day + time::SECONDS_PER_DAY - 1).min(self.window.end),
        };
        scoring::score_all_states(&self.counts_between(from_day, to_day), window, &pop)
    }

    /// Checks bucket alignment, hour/day conservation and the national rollup.
    pub fn validate(&self) -> Result<(), AggregateError> {
        let bad = |m: String| Err(AggregateError::Invalid(m));
        if self.version != SNAPSHOT_VERSION {
            return Err(AggregateError::VersionMismatch {
                found: self.version,
                expected: SNAPSHOT_VERSION,
            });
        }
        for p in self.series.iter().chain(&self.unresolved) {
            if p.granularity.floor(p.bucket_start) != p.bucket_start {
                return bad(format!("bucket {} is not aligned", p.bucket_start));
            }
        }
        let mut rolled: BTreeMap<(i64, &str), SentimentCounts> = BTreeMap::new();
        let mut daily: BTreeMap<(i64, &str), SentimentCounts> = BTreeMap::new();
        for p in &self.series {
            let key = (time::floor_day(p.bucket_start), p.state_code.as_str());
            match p.granularity {
                Granularity::Hour => *rolled.entry(key).or_default() += p.counts,
                Granularity::Day => *daily.entry(key).or_default() += p.counts,
            }
        }
        if rolled != daily {
            return bad("hourly counts do not sum to daily counts".into());
        }
        for g in [Granularity::Hour, Granularity::Day] {
            let mut sums: BTreeMap<i64, SentimentCounts> = BTreeMap::new();
            let mut national: BTreeMap<i64, SentimentCounts> = BTreeMap::new();
            for p in self.series.iter().filter(|p| p.granularity == g) {
                let target = if p.state_code == NATIONAL { &mut national } else { &mut sums };
                *target.entry(p.bucket_start).or_default() += p.counts;
            }
            for p in self.unresolved.iter().filter(|p| p.granularity == g) {
                *sums.entry(p.bucket_start).or_default() += p.counts;
            }
            if sums != national {
                return bad(format!("{g:?} national counts differ from states plus unresolved"));
            }
            if national.values().copied().sum::<SentimentCounts>() != self.totals {
                return bad(format!("{g:?} series do not sum to the class totals"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

/// Writes the snapshot as JSON, gzip-compressed when `gzip` is set.
pub fn write_snapshot(snapshot: &Snapshot, path: &Path, gzip: bool) -> Result<(), AggregateError> {
    let file = BufWriter::new(File::create(path)?);
    if gzip {
        let mut enc = GzEncoder::new(file, Compression::default());
        serde_json::to_writer(&mut enc, snapshot)?;
        enc.finish()?.flush()?;
    } else {
        let mut file = file;
        serde_json::to_writer(&mut file, snapshot)?;
        file.flush()?;
    }
    Ok(())
}

/// Reads a plain or gzip-compressed snapshot (detected by magic bytes) and
/// validates it.
pub fn read_snapshot(path: &Path) -> Result<Snapshot, AggregateError> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    parse_snapshot(&bytes)
}

pub fn parse_snapshot(bytes: &[u8]) -> Result<Snapshot, AggregateError> {
    let json = if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes).read_to_end(&mut out)?;
        out
    } else {
        bytes.to_vec()
    };
    let value: serde_json::Value = serde_json::from_slice(&json)?;
    if let Some(v) = value.get("version").and_then(serde_json::Value::as_u64) {
        if v != u64::from(SNAPSHOT_VERSION) {
            return Err(AggregateError::VersionMismatch {
                found: v as u32,
                expected: SNAPSHOT_VERSION,
            });
        }
    }
    let snapshot: Snapshot = serde_json::from_value(value)?;
    snapshot.validate()?;
    Ok(snapshot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::SentimentLabel::{self, *};

    fn rec(id: &str, ts: i64, state: Option<&str>, label: SentimentLabel, text: &str) -> AnnotatedTweet {
        AnnotatedTweet {
            tweet: Tweet::from_text(id, text, ts),
            state: state.map(str::to_string),
            label: Some(label),
        }
    }

    const T14: i64 = 1_355_493_600; // 2012-12-14T14:00:00Z

    #[test]
    fn hourly_and_daily_buckets() {
        let recs = vec![
            rec("1", T14 + 300, Some("CT"), ProGun, "x"),
            rec("2", T14 + 3300, Some("CT"), ProGun, "y"),
        ];
        for g in [Granularity::Hour, Granularity::Day] {
            let pts = bucket_counts(&recs, g);
            assert_eq!(pts.len(), 2);
            assert!(pts.iter().all(|p| p.counts.pro == 2));
            assert_eq!(pts[0].bucket_start, g.floor(T14));
        }
        assert!(bucket_counts(&[], Granularity::Day).is_empty());
    }

    #[test]
    fn tag_ranking() {
        let tweets = [
            Tweet::from_text("1", "#a #b", 0),
            Tweet::from_text("2", "#a #b", 0),
            Tweet::from_text("3", "#a", 0),
        ];
        let top = top_tags(&tweets, TagKind::Hashtag, 20);
        assert_eq!(
            top.iter().map(|t| (t.tag.as_str(), t.count)).collect::<Vec<_>>(),
            [("#a", 3), ("#b", 2)]
        );
        let tie = top_tags(&tweets[..2], TagKind::Hashtag, 1);
        assert_eq!(tie[0].tag, "#a");
        assert!(top_tags(&tweets, TagKind::Mention, 5).is_empty());
    }

    #[test]
    fn single_tweet_snapshot_round_trips() {
        let geo = crate::geo::simplified_fixture();
        let recs = vec![rec("1", T14, Some("CT"), AntiGun, "#enough")];
        let snap = build_snapshot(&recs, &geo, None, "oracle").unwrap();
        let states_hourly = snap
            .series
            .iter()
            .filter(|p| p.state_code != NATIONAL && p.granularity == Granularity::Hour)
            .count();
        assert_eq!(states_hourly, 1);
        assert_eq!(snap.pgpss_daily.len(), 1);
        let dir = tempfile::tempdir().unwrap();
        for gz in [false, true] {
            let path = dir.path().join(format!("s{gz}.json"));
            write_snapshot(&snap, &path, gz).unwrap();
            assert_eq!(read_snapshot(&path).unwrap(), snap);
        }
    }

    #[test]
    fn rejects_unknown_state_and_missing_label() {
        let geo = crate::geo::simplified_fixture();
        let mut r = rec("1", T14, Some("ZZ"), ProGun, "x");
        assert!(matches!(
            build_snapshot(&[r.clone()], &geo, None, "m"),
            Err(AggregateError::UnknownState { .. })
        ));
        r.state = None;
        r.label = None;
        assert!(matches!(
            build_snapshot(&[r], &geo, None, "m"),
            Err(AggregateError::Unlabeled(_))
        ));
    }
}
