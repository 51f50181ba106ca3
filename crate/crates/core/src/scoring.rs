//! Pro-Gun Public Sentiment Scores.
//!
//! For a region `g` in a time frame `t`:
//!
//! ```text
//! PGPSS1 = pro / max(anti, 1)
//! PGPSS2 = PGPSS1 * total_g / total_frame
//! PGPSS3 = PGPSS2 * population_g / population_national
//! ```
//!
//! `total` counts neutral tweets too. Each variant is normalized across the
//! states of a frame by dividing by its maximum (all zeros stay zero).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::SentimentLabel;
use crate::ingest::CorpusWindow;

/// Pseudo-region code for national aggregates.
pub const NATIONAL: &str = "US";

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("frame total is zero")]
    ZeroFrameTotal,
    #[error("frame total {frame_total} is smaller than the region total {region_total}")]
    FrameTotalTooSmall { frame_total: u64, region_total: u64 },
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("invalid population table: {0}")]
    InvalidPopulation(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentimentCounts {
    pub pro: u64,
    pub anti: u64,
    pub neutral: u64,
}

impl SentimentCounts {
    pub fn new(pro: u64, anti: u64, neutral: u64) -> Self {
        SentimentCounts { pro, anti, neutral }
    }

    pub fn total(&self) -> u64 {
        self.pro + self.anti + self.neutral
    }

    pub fn get(&self, label: SentimentLabel) -> u64 {
        match label {
            SentimentLabel::ProGun => self.pro,
            SentimentLabel::AntiGun => self.anti,
            SentimentLabel::Neutral => self.neutral,
        }
    }

    pub fn record(&mut self, label: SentimentLabel) {
        match label {
            SentimentLabel::ProGun => self.pro += 1,
            SentimentLabel::AntiGun => self.anti += 1,
            SentimentLabel::Neutral => self.neutral += 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

impl Add for SentimentCounts {
    type Output = SentimentCounts;

    fn add(self, o: SentimentCounts) -> SentimentCounts {
        SentimentCounts::new(self.pro + o.pro, self.anti + o.anti, self.neutral + o.neutral)
    }
}

impl AddAssign for SentimentCounts {
    fn add_assign(&mut self, o: SentimentCounts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for SentimentCounts {
    fn sum<I: Iterator<Item = SentimentCounts>>(iter: I) -> Self {
        iter.fold(SentimentCounts::default(), Add::add)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateInfo {
    pub population: u64,
    pub gun_ownership_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTable {
    pub states: BTreeMap<String, StateInfo>,
    pub national_population: u64,
}

impl PopulationTable {
    /// Table whose national population is the sum of the states.
    pub fn from_states(states: BTreeMap<String, StateInfo>) -> Result<Self, ScoringError> {
        let national = states.values().map(|s| s.population).sum();
        Self::with_national(states, national)
    }

    pub fn with_national(
        states: BTreeMap<String, StateInfo>,
        national_population: u64,
    ) -> Result<Self, ScoringError> {
        let table = PopulationTable {
            states,
            national_population,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        let bad = |m: String| Err(ScoringError::InvalidPopulation(m));
        for (code, info) in &self.states {
            if info.population == 0 {
                return bad(format!("{code}: population must be > 0"));
            }
            if !(0.0..=1.0).contains(&info.gun_ownership_pct) {
                return bad(format!("{code}: gun_ownership_pct must be in [0, 1]"));
            }
            if info.population > self.national_population {
                return bad(format!("{code}: population exceeds the national population"));
            }
        }
        Ok(())
    }

    pub fn get(&self, state: &str) -> Result<&StateInfo, ScoringError> {
        self.states
            .get(state)
            .ok_or_else(|| ScoringError::UnknownState(state.to_string()))
    }
}

/// A region (state code or [`NATIONAL`]) and a time window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionFrame {
    pub state_code: String,
    pub window: CorpusWindow,
}

impl RegionFrame {
    pub fn new(
        state_code: &str,
        window: CorpusWindow,
        pop: &PopulationTable,
    ) -> Result<Self, ScoringError> {
        if state_code != NATIONAL {
            pop.get(state_code)?;
        }
        Ok(RegionFrame {
            state_code: state_code.to_string(),
            window,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreVariant {
    Pgpss1,
    Pgpss2,
    Pgpss3,
}

impl ScoreVariant {
    pub const ALL: [ScoreVariant; 3] = [ScoreVariant::Pgpss1, ScoreVariant::Pgpss2, ScoreVariant::Pgpss3];

    pub fn name(self) -> &'static str {
        match self {
            ScoreVariant::Pgpss1 => "pgpss1",
            ScoreVariant::Pgpss2 => "pgpss2",
            ScoreVariant::Pgpss3 => "pgpss3",
        }
    }
}

impl fmt::Display for ScoreVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pgpss1" | "1" => Ok(ScoreVariant::Pgpss1),
            "pgpss2" | "2" => Ok(ScoreVariant::Pgpss2),
            "pgpss3" | "3" => Ok(ScoreVariant::Pgpss3),
            _ => Err(format!("unknown score {s:?}")),
        }
    }
}

pub fn pgpss1(c: &SentimentCounts) -> f64 {
    c.pro as f64 / c.anti.max(1) as f64
}

pub fn pgpss2(c: &SentimentCounts, frame_total: u64) -> Result<f64, ScoringError> {
    if frame_total == 0 {
        return Err(ScoringError::ZeroFrameTotal);
    }
    if frame_total < c.total() {
        return Err(ScoringError::FrameTotalTooSmall {
            frame_total,
            region_total: c.total(),
        });
    }
    Ok(pgpss1(c) * (c.total() as f64 / frame_total as f64))
}

pub fn pgpss3(
    c: &SentimentCounts,
    frame_total: u64,
    pop: &PopulationTable,
    state: &str,
) -> Result<f64, ScoringError> {
    let info = pop.get(state)?;
    let share = info.population as f64 / pop.national_population as f64;
    Ok(pgpss2(c, frame_total)? * share)
}

/// Divides every value by the maximum; all-zero input maps to all zeros.
pub fn normalize_scores<K: Ord + Clone>(values: &BTreeMap<K, f64>) -> BTreeMap<K, f64> {
    let max = values.values().copied().fold(0.0, f64::max);
    values
        .iter()
        .map(|(k, &v)| (k.clone(), if max > 0.0 { v / max } else { 0.0 }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateScore {
    pub code: String,
    pub raw1: f64,
    pub raw2: f64,
    pub raw3: f64,
    pub norm1: f64,
    pub norm2: f64,
    pub norm3: f64,
}

impl StateScore {
    pub fn raw(&self, v: ScoreVariant) -> f64 {
        match v {
            ScoreVariant::Pgpss1 => self.raw1,
            ScoreVariant::Pgpss2 => self.raw2,
            ScoreVariant::Pgpss3 => self.raw3,
        }
    }

    pub fn norm(&self, v: ScoreVariant) -> f64 {
        match v {
            ScoreVariant::Pgpss1 => self.norm1,
            ScoreVariant::Pgpss2 => self.norm2,
            ScoreVariant::Pgpss3 => self.norm3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgpssResult {
    pub window: CorpusWindow,
    /// Sorted by state code.
    pub states: Vec<StateScore>,
}

impl PgpssResult {
    pub fn get(&self, code: &str) -> Option<&StateScore> {
        self.states
            .binary_search_by(|s| s.code.as_str().cmp(code))
            .ok()
            .map(|i| &self.states[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scores serialize")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["code", "raw1", "raw2", "raw3", "norm1", "norm2", "norm3"])?;
        for s in &self.states {
            w.serialize((&s.code, s.raw1, s.raw2, s.raw3, s.norm1, s.norm2, s.norm3))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scores every state in `counts` against a frame total summed over those
/// states. States with no tweets score 0.
pub fn score_all_states(
    counts: &BTreeMap<String, SentimentCounts>,
    window: CorpusWindow,
    pop: &PopulationTable,
) -> Result<PgpssResult, ScoringError> {
    let frame_total: u64 = counts.values().map(|c| c.total()).sum();
    let mut raw = [BTreeMap::new(), BTreeMap::new(), BTreeMap::new()];
    for (code, c) in counts {
        pop.get(code)?;
        let (r2, r3) = if frame_total == 0 {
            (0.0, 0.0)
        } else {
            (pgpss2(c, frame_total)?, pgpss3(c, frame_total, pop, code)?)
        };
        raw[0].insert(code.clone(), pgpss1(c));
        raw[1].insert(code.clone(), r2);
        raw[2].insert(code.clone(), r3);
    }
    let norm = raw.each_ref().map(normalize_scores);
    let states = counts
        .keys()
        .map(|code| StateScore {
            code: code.clone(),
            raw1: raw[0][code],
            raw2: raw[1][code],
            raw3: raw[2][code],
            norm1: norm[0][code],
            norm2: norm[1][code],
            norm3: norm[2][code],
        })
        .collect();
    Ok(PgpssResult { window, states })
}
