//! Tweet records: newline-delimited JSON input, filter rules and the trimmed CSV.
//!
//! Input schema, one object per line:
//!
//! ```text
//! {"id": "1", "text": "...", "timestamp": "2012-12-14T15:02:00Z",
//!  "lat": 41.4, "lon": -73.3, "hashtags": ["#SandyHook"], "mentions": ["@NRA"],
//!  "lang": "en", "country_code": "US", "is_retweet": false}
//! ```
//!
//! `id`, `text` and `timestamp` are required. When `hashtags` or `mentions` are
//! absent they are recovered from the text. An optional `label` field carries a
//! gold sentiment label through to the CSV.
//!
//! Trimmed CSV columns: `id,timestamp_utc,text,lat,lon,state,label,hashtags,mentions`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::classifiers::SentimentLabel;
use crate::features::tokenize;
use crate::time;

pub const CSV_HEADER: [&str; 9] = [
    "id",
    "timestamp_utc",
    "text",
    "lat",
    "lon",
    "state",
    "label",
    "hashtags",
    "mentions",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("invalid filter rules: {0}")]
    InvalidRules(String),
    #[error("invalid corpus window: start {start} is after end {end}")]
    InvalidWindow { start: i64, end: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinates {
    pub lat: f64,
    pub lon: f64,
}

impl Coordinates {
    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    pub timestamp: i64,
    pub coordinates: Option<Coordinates>,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub lang: String,
    pub country_code: Option<String>,
    pub is_retweet: bool,
}

impl Tweet {
    /// A tweet with tags recovered from its text and no metadata.
    pub fn from_text(id: impl Into<String>, text: impl Into<String>, timestamp: i64) -> Self {
        let text = text.into();
        let (hashtags, mentions) = tags_from_text(&text);
        Tweet {
            id: id.into(),
            text,
            timestamp,
            coordinates: None,
            hashtags,
            mentions,
            lang: String::new(),
            country_code: None,
            is_retweet: false,
        }
    }

    /// The projection stored in the trimmed CSV: filter-only metadata
    /// (`lang`, `country_code`, `is_retweet`) is cleared.
    pub fn trimmed(&self) -> Tweet {
        Tweet {
            lang: String::new(),
            country_code: None,
            is_retweet: false,
            ..self.clone()
        }
    }
}

/// A tweet plus the annotations added downstream of parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedTweet {
    pub tweet: Tweet,
    pub state: Option<String>,
    pub label: Option<SentimentLabel>,
}

impl AnnotatedTweet {
    pub fn new(tweet: Tweet) -> Self {
        AnnotatedTweet {
            tweet,
            state: None,
            label: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusWindow {
    pub start: i64,
    pub end: i64,
}

impl CorpusWindow {
    pub fn new(start: i64, end: i64) -> Result<Self, IngestError> {
        if start > end {
            return Err(IngestError::InvalidWindow { start, end });
        }
        Ok(CorpusWindow { start, end })
    }

    pub fn contains(&self, ts: i64) -> bool {
        self.start <= ts && ts <= self.end
    }

    /// Smallest window covering every timestamp, `None` for an empty corpus.
    pub fn covering<I: IntoIterator<Item = i64>>(timestamps: I) -> Option<Self> {
        let mut it = timestamps.into_iter();
        let first = it.next()?;
        let (lo, hi) = it.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t)));
        Some(CorpusWindow { start: lo, end: hi })
    }

    /// UTC midnights of every day the window touches.
    pub fn days(&self) -> Vec<i64> {
        let mut out = Vec::new();
        let mut day = time::floor_day(self.start);
        while day <= self.end {
            out.push(day);
            day += time::SECONDS_PER_DAY;
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterRules {
    pub keywords: Vec<String>,
    pub phrases: Vec<String>,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub country_code: Option<String>,
    pub lang: Option<String>,
    pub exclude_retweets: bool,
}

impl FilterRules {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.keywords.is_empty()
            && self.phrases.is_empty()
            && self.hashtags.is_empty()
            && self.mentions.is_empty()
        {
            return Err(IngestError::InvalidRules(
                "at least one keyword, phrase, hashtag or mention is required".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct ParsedRecords {
    pub records: Vec<AnnotatedTweet>,
    pub errors: Vec<ParseError>,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Default)]
pub struct ParsedTweets {
    pub tweets: Vec<Tweet>,
    pub errors: Vec<ParseError>,
    pub warnings: Vec<ParseWarning>,
}

/// Parses newline-delimited JSON. Malformed lines become [`ParseError`]s and
/// never abort the stream; blank lines are skipped.
pub fn parse_tweet_json<R: Read>(stream: R) -> ParsedTweets {
    let parsed = parse_records(stream);
    ParsedTweets {
        tweets: parsed.records.into_iter().map(|r| r.tweet).collect(),
        errors: parsed.errors,
        warnings: parsed.warnings,
    }
}

/// Like [`parse_tweet_json`], keeping an optional gold `label` per record.
pub fn parse_records<R: Read>(stream: R) -> ParsedRecords {
    let mut out = ParsedRecords::default();
    let mut seen = HashSet::new();
    let reader = io::BufReader::new(stream);
    for (idx, line) in reader.split(b'\n').enumerate() {
        let line_no = idx + 1;
        let bytes = match line {
            Ok(b) => b,
            Err(e) => {
                out.errors.push(ParseError {
                    line: line_no,
                    reason: format!("read failure: {e}"),
                });
                break;
            }
        };
        let Ok(text) = std::str::from_utf8(&bytes) else {
            out.errors.push(ParseError {
                line: line_no,
                reason: "line is not valid UTF-8".into(),
            });
            continue;
        };
        if text.trim().is_empty() {
            continue;
        }
        match parse_line(text, line_no, &mut out.warnings) {
            Ok(record) => {
                if !seen.insert(record.tweet.id.clone()) {
                    out.errors.push(ParseError {
                        line: line_no,
                        reason: format!("duplicate id {:?}", record.tweet.id),
                    });
                } else {
                    out.records.push(record);
                }
            }
            Err(reason) => out.errors.push(ParseError {
                line: line_no,
                reason,
            }),
        }
    }
    out
}

fn parse_line(
    text: &str,
    line_no: usize,
    warnings: &mut Vec<ParseWarning>,
) -> Result<AnnotatedTweet, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value
        .as_object()
        .ok_or_else(|| "expected a JSON object".to_string())?;

    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err("field id must be a non-empty string".into()),
        None => return Err("missing required field id".into()),
    };
    let body = match obj.get("text") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err("field text must be a string".into()),
        None => return Err("missing required field text".into()),
    };
    let timestamp = match obj.get("timestamp") {
        Some(Value::String(s)) => {
            time::parse_timestamp(s).ok_or_else(|| format!("unparseable timestamp {s:?}"))?
        }
        Some(Value::Number(n)) => n
            .as_i64()
            .ok_or_else(|| format!("unparseable timestamp {n}"))?,
        Some(_) => return Err("field timestamp must be a string".into()),
        None => return Err("missing required field timestamp".into()),
    };

    let lat = obj.get("lat").and_then(Value::as_f64);
    let lon = obj.get("lon").and_then(Value::as_f64);
    let coordinates = match (lat, lon) {
        (Some(lat), Some(lon)) => {
            let c = Coordinates { lat, lon };
            if c.is_valid() {
                Some(c)
            } else {
                warnings.push(ParseWarning {
                    line: line_no,
                    reason: format!("coordinates out of range ({lat}, {lon}); dropped"),
                });
                None
            }
        }
        (None, None) => None,
        _ => {
            warnings.push(ParseWarning {
                line: line_no,
                reason: "only one of lat/lon present; coordinates dropped".into(),
            });
            None
        }
    };

    let (text_tags, text_mentions) = tags_from_text(&body);
    let hashtags = match obj.get("hashtags") {
        Some(v) => string_list(v, '#')?,
        None => text_tags,
    };
    let mentions = match obj.get("mentions") {
        Some(v) => string_list(v, '@')?,
        None => text_mentions,
    };
    let lang = obj
        .get("lang")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    let country_code = obj
        .get("country_code")
        .and_then(Value::as_str)
        .map(|s| s.to_ascii_uppercase());
    let is_retweet = match obj.get("is_retweet") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err("field is_retweet must be a boolean".into()),
    };
    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.parse::<SentimentLabel>().map_err(|e| e.to_string())?),
        Some(Value::Number(n)) => Some(
            n.as_u64()
                .and_then(|c| SentimentLabel::from_code(c as u8))
                .ok_or_else(|| format!("invalid label {n}"))?,
        ),
        Some(_) => return Err("field label must be a string or integer".into()),
    };

    Ok(AnnotatedTweet {
        tweet: Tweet {
            id,
            text: body,
            timestamp,
            coordinates,
            hashtags,
            mentions,
            lang,
            country_code,
            is_retweet,
        },
        state: None,
        label,
    })
}

fn string_list(v: &Value, sigil: char) -> Result<Vec<String>, String> {
    let arr = v
        .as_array()
        .ok_or_else(|| format!("expected an array of {sigil}-tags"))?;
    let mut out = Vec::with_capacity(arr.len());
    for item in arr {
        let s = item
            .as_str()
            .ok_or_else(|| format!("expected an array of {sigil}-tags"))?;
        if let Some(tag) = normalize_tag(s, sigil) {
            if !out.contains(&tag) {
                out.push(tag);
            }
        }
    }
    Ok(out)
}

/// Lowercases a tag and makes sure it carries its sigil. Returns `None` for
/// empty tags or tags containing separators that would break the CSV layout.
pub fn normalize_tag(raw: &str, sigil: char) -> Option<String> {
    let body = raw.trim();
    let body = body.strip_prefix(sigil).unwrap_or(body);
    if body.is_empty() || body.chars().any(|c| c.is_whitespace() || c == ';') {
        return None;
    }
    Some(format!("{sigil}{}", body.to_lowercase()))
}

/// Hashtags and mentions found by the tokenizer, in order of first appearance.
pub fn tags_from_text(text: &str) -> (Vec<String>, Vec<String>) {
    let mut hashtags = Vec::new();
    let mut mentions = Vec::new();
    for tok in tokenize(text) {
        let bucket = if tok.starts_with('#') {
            &mut hashtags
        } else if tok.starts_with('@') {
            &mut mentions
        } else {
            continue;
        };
        if !bucket.contains(&tok) {
            bucket.push(tok);
        }
    }
    (hashtags, mentions)
}

/// Keeps tweets that match at least one keyword, phrase, hashtag or mention
/// and pass the country, language and retweet filters. Input order is kept.
pub fn apply_filters(tweets: &[Tweet], rules: &FilterRules) -> Vec<Tweet> {
    let matcher = Matcher::new(rules);
    tweets
        .iter()
        .filter(|t| matcher.keep(t))
        .cloned()
        .collect()
}

struct Matcher<'a> {
    rules: &'a FilterRules,
    sequences: Vec<Vec<String>>,
    hashtags: Vec<String>,
    mentions: Vec<String>,
}

impl<'a> Matcher<'a> {
    fn new(rules: &'a FilterRules) -> Self {
        // Keywords and phrases are both token sequences; a keyword like
        // "Sandy Hook" matches as a phrase.
        let sequences = rules
            .keywords
            .iter()
            .chain(&rules.phrases)
            .map(|k| tokenize(k))
            .filter(|seq| !seq.is_empty())
            .collect();
        Matcher {
            rules,
            sequences,
            hashtags: rules
                .hashtags
                .iter()
                .filter_map(|h| normalize_tag(h, '#'))
                .collect(),
            mentions: rules
                .mentions
                .iter()
                .filter_map(|m| normalize_tag(m, '@'))
                .collect(),
        }
    }

    fn keep(&self, t: &Tweet) -> bool {
        if self.rules.exclude_retweets && t.is_retweet {
            return false;
        }
        if let Some(cc) = &self.rules.country_code {
            match &t.country_code {
                Some(c) if c.eq_ignore_ascii_case(cc) => {}
                _ => return false,
            }
        }
        if let Some(lang) = &self.rules.lang {
            if !t.lang.eq_ignore_ascii_case(lang) {
                return false;
            }
        }
        if self.hashtags.iter().any(|h| t.hashtags.contains(h))
            || self.mentions.iter().any(|m| t.mentions.contains(m))
        {
            return true;
        }
        if self.sequences.is_empty() {
            return false;
        }
        let tokens = tokenize(&t.text);
        self.sequences
            .iter()
            .any(|seq| tokens.windows(seq.len()).any(|w| w == seq.as_slice()))
    }
}

/// Writes tweets as newline-delimited JSON in the input schema.
pub fn write_tweet_json<W: Write>(
    records: &[AnnotatedTweet],
    mut out: W,
) -> Result<usize, IngestError> {
    for r in records {
        let t = &r.tweet;
        let mut obj = serde_json::Map::new();
        obj.insert("id".into(), Value::String(t.id.clone()));
        obj.insert("text".into(), Value::String(t.text.clone()));
        obj.insert(
            "timestamp".into(),
            Value::String(time::format_timestamp(t.timestamp)),
        );
        if let Some(c) = t.coordinates {
            obj.insert("lat".into(), serde_json::json!(c.lat));
            obj.insert("lon".into(), serde_json::json!(c.lon));
        }
        obj.insert("hashtags".into(), serde_json::json!(t.hashtags));
        obj.insert("mentions".into(), serde_json::json!(t.mentions));
        obj.insert("lang".into(), Value::String(t.lang.clone()));
        if let Some(cc) = &t.country_code {
            obj.insert("country_code".into(), Value::String(cc.clone()));
        }
        obj.insert("is_retweet".into(), Value::Bool(t.is_retweet));
        if let Some(label) = r.label {
            obj.insert("label".into(), Value::String(label.name().into()));
        }
        serde_json::to_writer(&mut out, &Value::Object(obj))
            .map_err(|e| IngestError::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(records.len())
}

/// Writes un-annotated tweets to the trimmed CSV; returns the row count.
pub fn write_trimmed_csv(tweets: &[Tweet], path: &Path) -> Result<usize, IngestError> {
    let records: Vec<AnnotatedTweet> = tweets.iter().cloned().map(AnnotatedTweet::new).collect();
    write_annotated_csv(&records, path)
}

pub fn write_annotated_csv(records: &[AnnotatedTweet], path: &Path) -> Result<usize, IngestError> {
    let file = BufWriter::new(File::create(path)?);
    write_csv_to(records, file)
}

pub fn write_csv_to<W: Write>(records: &[AnnotatedTweet], out: W) -> Result<usize, IngestError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    let csv_err = |e: csv::Error| IngestError::Io(io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        let t = &r.tweet;
        let (lat, lon) = match t.coordinates {
            Some(c) => (c.lat.to_string(), c.lon.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            t.id.as_str(),
            &time::format_timestamp(t.timestamp),
            &t.text,
            &lat,
            &lon,
            r.state.as_deref().unwrap_or(""),
            &r.label.map(|l| l.code().to_string()).unwrap_or_default(),
            &t.hashtags.join(";"),
            &t.mentions.join(";"),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(records.len())
}

/// Reads the trimmed CSV, dropping the state and label annotations.
pub fn read_trimmed_csv(path: &Path) -> Result<Vec<Tweet>, IngestError> {
    Ok(read_annotated_csv(path)?
        .into_iter()
        .map(|r| r.tweet)
        .collect())
}

pub fn read_annotated_csv(path: &Path) -> Result<Vec<AnnotatedTweet>, IngestError> {
    read_csv_from(File::open(path)?)
}

/// Rows are numbered from 1 for the first data row (the header is row 0).
pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<AnnotatedTweet>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = rdr.headers().map_err(|e| IngestError::MalformedRow {
        row: 0,
        message: e.to_string(),
    })?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(IngestError::MalformedRow {
            row: 0,
            message: format!("unexpected header, expected {}", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 1;
        let bad = |message: String| IngestError::MalformedRow { row, message };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != CSV_HEADER.len() {
            return Err(bad(format!(
                "expected {} columns, found {}",
                CSV_HEADER.len(),
                rec.len()
            )));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(bad("empty id".into()));
        }
        let timestamp = time::parse_timestamp(&rec[1])
            .or_else(|| rec[1].parse().ok())
            .ok_or_else(|| bad(format!("unparseable timestamp {:?}", &rec[1])))?;
        let coordinates = match (&rec[3], &rec[4]) {
            ("", "") => None,
            (lat, lon) => {
                let lat: f64 = lat.parse().map_err(|_| bad(format!("bad lat {lat:?}")))?;
                let lon: f64 = lon.parse().map_err(|_| bad(format!("bad lon {lon:?}")))?;
                let c = Coordinates { lat, lon };
                if !c.is_valid() {
                    return Err(bad(format!("coordinates out of range ({lat}, {lon})")));
                }
                Some(c)
            }
        };
        let state = (!rec[5].is_empty()).then(|| rec[5].to_string());
        let label = if rec[6].is_empty() {
            None
        } else {
            Some(
                rec[6]
                    .parse::<SentimentLabel>()
                    .map_err(|e| bad(e.to_string()))?,
            )
        };
        let split_tags = |s: &str| -> Vec<String> {
            s.split(';')
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect()
        };
        out.push(AnnotatedTweet {
            tweet: Tweet {
                id,
                text: rec[2].to_string(),
                timestamp,
                coordinates,
                hashtags: split_tags(&rec[7]),
                mentions: split_tags(&rec[8]),
                lang: String::new(),
                country_code: None,
                is_retweet: false,
            },
            state,
            label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(id: &str, text: &str) -> Tweet {
        Tweet::from_text(id, text, 1_355_497_320)
    }

    #[test]
    fn parses_anti_gun_example_line() {
        let line = r#"{"id":"1","text":"BAN GUNS!!! Let our children be safe","timestamp":"2012-12-14T15:02:00Z","lang":"en"}"#;
        let parsed = parse_tweet_json(line.as_bytes());
        assert!(parsed.errors.is_empty());
        assert_eq!(parsed.tweets.len(), 1);
        let t = &parsed.tweets[0];
        assert_eq!(t.timestamp, 1_355_497_320);
        assert_eq!(t.coordinates, None);
        assert_eq!(t.text, "BAN GUNS!!! Let our children be safe");
        assert_eq!(t.lang, "en");
        assert!(!t.is_retweet);
    }

    #[test]
    fn empty_stream_and_garbage() {
        let empty = parse_tweet_json(&b""[..]);
        assert!(empty.tweets.is_empty() && empty.errors.is_empty());

        let bad = parse_tweet_json(&b"not json"[..]);
        assert!(bad.tweets.is_empty());
        assert_eq!(bad.errors.len(), 1);
        assert_eq!(bad.errors[0].line, 1);
    }

    #[test]
    fn per_line_errors_do_not_abort() {
        let input = concat!(
            r#"{"id":"a","text":"x","timestamp":"2012-12-14T15:02:00Z"}"#,
            "\n",
            r#"{"text":"no id","timestamp":"2012-12-14T15:02:00Z"}"#,
            "\n\n",
            r#"{"id":"b","text":"y","timestamp":"soon"}"#,
            "\n",
            r#"{"id":"c","text":"z","timestamp":"2012-12-14T15:02:00Z","lat":123.0,"lon":5.0}"#,
            "\n",
            r#"{"id":"a","text":"dup","timestamp":"2012-12-14T15:02:00Z"}"#,
            "\n",
        );
        let parsed = parse_tweet_json(input.as_bytes());
        assert_eq!(parsed.tweets.len(), 2);
        assert_eq!(
            parsed.errors.iter().map(|e| e.line).collect::<Vec<_>>(),
            vec![2, 4, 6]
        );
        assert!(parsed.errors[0].reason.contains("id"));
        assert!(parsed.errors[1].reason.contains("timestamp"));
        assert_eq!(parsed.warnings.len(), 1);
        assert_eq!(parsed.warnings[0].line, 5);
        assert_eq!(parsed.tweets[1].coordinates, None);
    }

    #[test]
    fn tags_recovered_from_text_when_absent() {
        let line = r#"{"id":"1","text":"We need STRICT gun controls. #Newtown @NRA","timestamp":"2012-12-14T15:02:00Z","hashtags":null}"#;
        // An explicit null is not an array.
        assert_eq!(parse_tweet_json(line.as_bytes()).errors.len(), 1);

        let line = r#"{"id":"1","text":"We need STRICT gun controls. #Newtown @NRA","timestamp":"2012-12-14T15:02:00Z"}"#;
        let t = &parse_tweet_json(line.as_bytes()).tweets[0];
        assert_eq!(t.hashtags, vec!["#newtown"]);
        assert_eq!(t.mentions, vec!["@nra"]);
    }

    #[test]
    fn retweets_excluded() {
        let mut rt = tweet("1", "guns everywhere");
        rt.is_retweet = true;
        let rules = FilterRules {
            keywords: vec!["guns".into()],
            exclude_retweets: true,
            ..Default::default()
        };
        assert!(apply_filters(&[rt.clone()], &rules).is_empty());
        let rules = FilterRules {
            exclude_retweets: false,
            ..rules
        };
        assert_eq!(apply_filters(&[rt], &rules).len(), 1);
    }

    #[test]
    fn keyword_is_case_insensitive_on_word_boundaries() {
        let rules = FilterRules {
            keywords: vec!["newtown".into()],
            ..Default::default()
        };
        let kept = apply_filters(&[tweet("1", "Obama is possibly visiting Newtown")], &rules);
        assert_eq!(kept.len(), 1);
        assert!(apply_filters(&[tweet("2", "Newtownards is elsewhere")], &rules).is_empty());
        assert!(apply_filters(&[], &rules).is_empty());
    }

    #[test]
    fn phrases_hashtags_mentions_country_lang() {
        let rules = FilterRules {
            phrases: vec!["gun violence".into()],
            hashtags: vec!["#SandyHook".into()],
            mentions: vec!["@sandyhook".into()],
            country_code: Some("us".into()),
            lang: Some("en".into()),
            ..Default::default()
        };
        let mut a = tweet("a", "End gun violence now");
        let mut b = tweet("b", "violence and guns");
        let mut c = tweet("c", "thinking of #SandyHook");
        let mut d = tweet("d", "hello @SandyHook");
        for t in [&mut a, &mut b, &mut c, &mut d] {
            t.country_code = Some("US".into());
            t.lang = "en".into();
        }
        let mut e = a.clone();
        e.id = "e".into();
        e.country_code = Some("GB".into());
        let mut f = a.clone();
        f.id = "f".into();
        f.lang = "es".into();
        let kept: Vec<String> = apply_filters(&[a, b, c, d, e, f], &rules)
            .into_iter()
            .map(|t| t.id)
            .collect();
        assert_eq!(kept, vec!["a", "c", "d"]);
    }

    #[test]
    fn rules_need_a_matcher() {
        assert!(FilterRules::default().validate().is_err());
        let rules = FilterRules {
            hashtags: vec!["#x".into()],
            ..Default::default()
        };
        assert!(rules.validate().is_ok());
    }

    #[test]
    fn csv_quotes_commas_and_quotes() {
        let t = tweet("q", "He said \"no\", then left");
        let mut buf = Vec::new();
        assert_eq!(write_csv_to(&[AnnotatedTweet::new(t.clone())], &mut buf).unwrap(), 1);
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"He said \"\"no\"\", then left\""));
        let back = read_csv_from(&buf[..]).unwrap();
        assert_eq!(back[0].tweet, t.trimmed());
    }

    #[test]
    fn csv_header_only_and_bad_rows() {
        let mut buf = Vec::new();
        assert_eq!(write_csv_to(&[], &mut buf).unwrap(), 0);
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 1);
        assert!(read_csv_from(&buf[..]).unwrap().is_empty());

        let mut text = String::from_utf8(buf).unwrap();
        text.push_str("1,2012-12-14T15:02:00Z,hello,,,,,,\r\n");
        text.push_str("x,y,z\r\n");
        match read_csv_from(text.as_bytes()) {
            Err(IngestError::MalformedRow { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected malformed row, got {other:?}"),
        }
    }

    #[test]
    fn csv_keeps_annotations() {
        let rec = AnnotatedTweet {
            tweet: tweet("1", "x"),
            state: Some("CT".into()),
            label: Some(SentimentLabel::AntiGun),
        };
        let mut buf = Vec::new();
        write_csv_to(std::slice::from_ref(&rec), &mut buf).unwrap();
        assert_eq!(read_csv_from(&buf[..]).unwrap(), vec![rec]);
    }

    #[test]
    fn window_days() {
        let w = CorpusWindow::new(1_354_838_401, 1_358_294_399).unwrap();
        assert_eq!(w.days().len(), 40);
        assert!(CorpusWindow::new(2, 1).is_err());
    }
}
