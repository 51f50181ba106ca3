//! US state boundaries and point-in-polygon state assignment.
//!
//! Input is a GeoJSON `FeatureCollection` of `Polygon` / `MultiPolygon`
//! features whose properties carry `state_code`, `population` and
//! `gun_ownership_pct` (a fraction). Vertices are `(lon, lat)` degrees and all
//! math happens directly on them.
//!
//! Containment uses the even-odd rule over every ring of a polygon, and points
//! on an edge count as inside. When states share a border the one with the
//! lexicographically smallest code wins.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ingest::Tweet;
use crate::scoring::{PopulationTable, ScoringError, StateInfo};

/// Simplified 50-state fixture bundled with the crate.
pub const SIMPLIFIED_FIXTURE: &str = include_str!("../data/us_states_simplified.geojson");

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid GeoJSON: {0}")]
    Json(String),
    #[error("feature {index}: {message}")]
    Schema { index: usize, message: String },
    #[error("{state}: {message}")]
    Geometry { state: String, message: String },
    #[error("population override row {row}: {message}")]
    Override { row: usize, message: String },
    #[error(transparent)]
    Population(#[from] ScoringError),
}

pub type Point = (f64, f64);
/// Closed ring: at least four vertices, first equal to last.
pub type Ring = Vec<Point>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    fn of<'a>(points: impl IntoIterator<Item = &'a Point>) -> BBox {
        let mut b = BBox {
            min_lon: f64::INFINITY,
            min_lat: f64::INFINITY,
            max_lon: f64::NEG_INFINITY,
            max_lat: f64::NEG_INFINITY,
        };
        for &(x, y) in points {
            b.min_lon = b.min_lon.min(x);
            b.min_lat = b.min_lat.min(y);
            b.max_lon = b.max_lon.max(x);
            b.max_lat = b.max_lat.max(y);
        }
        b
    }

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        self.min_lon <= lon && lon <= self.max_lon && self.min_lat <= lat && lat <= self.max_lat
    }
}

/// One polygon: outer ring first, holes after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonPart {
    pub rings: Vec<Ring>,
    pub bbox: BBox,
}

impl PolygonPart {
    pub fn new(rings: Vec<Ring>) -> Self {
        let bbox = BBox::of(rings.first().into_iter().flatten());
        PolygonPart { rings, bbox }
    }

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        if !self.bbox.contains(lon, lat) {
            return false;
        }
        if self.rings.iter().any(|r| on_boundary(r, lon, lat)) {
            return true;
        }
        self.rings.iter().filter(|r| crosses_odd(r, lon, lat)).count() % 2 == 1
    }

    /// Outer area minus holes, in square degrees.
    pub fn area(&self) -> f64 {
        let mut rings = self.rings.iter().map(|r| ring_area(r).abs());
        let outer = rings.next().unwrap_or(0.0);
        (outer - rings.sum::<f64>()).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePolygon {
    pub state_code: String,
    pub name: String,
    pub parts: Vec<PolygonPart>,
    pub bbox: BBox,
}

impl StatePolygon {
    pub fn new(state_code: impl Into<String>, name: impl Into<String>, parts: Vec<PolygonPart>) -> Self {
        let bbox = BBox::of(parts.iter().flat_map(|p| p.rings.first().into_iter().flatten()));
        StatePolygon {
            state_code: state_code.into(),
            name: name.into(),
            parts,
            bbox,
        }
    }

    pub fn area(&self) -> f64 {
        self.parts.iter().map(PolygonPart::area).sum()
    }

    /// Uniform point inside the state: pick a part by area, then rejection
    /// sample its bounding box.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Point {
        let areas: Vec<f64> = self.parts.iter().map(PolygonPart::area).collect();
        let total: f64 = areas.iter().sum();
        let mut pick = rng.gen::<f64>() * total;
        let mut part = &self.parts[0];
        for (p, a) in self.parts.iter().zip(&areas) {
            part = p;
            if pick < *a {
                break;
            }
            pick -= a;
        }
        let b = part.bbox;
        loop {
            let lon = b.min_lon + rng.gen::<f64>() * (b.max_lon - b.min_lon);
            let lat = b.min_lat + rng.gen::<f64>() * (b.max_lat - b.min_lat);
            if part.contains(lon, lat) {
                return (lon, lat);
            }
        }
    }
}

/// Even-odd containment across all parts and rings; edges count as inside.
pub fn point_in_polygon(lon: f64, lat: f64, poly: &StatePolygon) -> bool {
    poly.bbox.contains(lon, lat) && poly.parts.iter().any(|p| p.contains(lon, lat))
}

/// First state, in code order, containing the tweet's coordinates.
pub fn assign_state(tweet: &Tweet, polygons: &[StatePolygon]) -> Option<String> {
    let c = tweet.coordinates?;
    locate(c.lon, c.lat, polygons).map(str::to_string)
}

/// Code of the first state in lexicographic order containing the point.
pub fn locate(lon: f64, lat: f64, polygons: &[StatePolygon]) -> Option<&str> {
    polygons
        .iter()
        .filter(|p| point_in_polygon(lon, lat, p))
        .map(|p| p.state_code.as_str())
        .min()
}

fn on_boundary(ring: &[Point], x: f64, y: f64) -> bool {
    ring.windows(2).any(|e| on_segment(e[0], e[1], (x, y)))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    let scale = (b.0 - a.0).abs().max((b.1 - a.1).abs()).max(1.0);
    cross.abs() <= 1e-12 * scale
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

fn crosses_odd(ring: &[Point], x: f64, y: f64) -> bool {
    let mut inside = false;
    for e in ring.windows(2) {
        let (a, b) = (e[0], e[1]);
        if (a.1 > y) != (b.1 > y) {
            let xi = a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if x < xi {
                inside = !inside;
            }
        }
    }
    inside
}

fn ring_area(ring: &[Point]) -> f64 {
    ring.windows(2)
        .map(|e| e[0].0 * e[1].1 - e[1].0 * e[0].1)
        .sum::<f64>()
        / 2.0
}

fn orientation(a: Point, b: Point, c: Point) -> i8 {
    let v = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let within = |a: Point, b: Point, c: Point| {
        c.0 >= a.0.min(b.0) && c.0 <= a.0.max(b.0) && c.1 >= a.1.min(b.1) && c.1 <= a.1.max(b.1)
    };
    let (o1, o2) = (orientation(p1, p2, q1), orientation(p1, p2, q2));
    let (o3, o4) = (orientation(q1, q2, p1), orientation(q1, q2, p2));
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && within(p1, p2, q1))
        || (o2 == 0 && within(p1, p2, q2))
        || (o3 == 0 && within(q1, q2, p1))
        || (o4 == 0 && within(q1, q2, p2))
}

/// Index pair of two non-adjacent edges that touch, if any.
fn self_intersection(ring: &[Point]) -> Option<(usize, usize)> {
    let n = ring.len() - 1;
    let mut edges: Vec<(f64, f64, usize)> = (0..n)
        .map(|i| {
            let (a, b) = (ring[i].0, ring[i + 1].0);
            (a.min(b), a.max(b), i)
        })
        .collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    for (k, &(_, hi, i)) in edges.iter().enumerate() {
        for &(lo2, _, j) in &edges[k + 1..] {
            if lo2 > hi {
                break;
            }
            let (i, j) = (i.min(j), i.max(j));
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if !adjacent && segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return Some((i, j));
            }
        }
    }
    None
}

fn validate_ring(state: &str, ring: &[Point]) -> Result<(), GeoError> {
    let fail = |message: String| {
        Err(GeoError::Geometry {
            state: state.to_string(),
            message,
        })
    };
    if ring.len() < 4 {
        return fail(format!("ring has {} vertices, need at least 4", ring.len()));
    }
    if ring.first() != ring.last() {
        return fail("ring is not closed".into());
    }
    if ring.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return fail("non-finite vertex".into());
    }
    if let Some((i, j)) = self_intersection(ring) {
        return fail(format!("ring self-intersects at edges {i} and {j}"));
    }
    Ok(())
}

/// Polygons (sorted by state code) plus their population table.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGeo {
    pub polygons: Vec<StatePolygon>,
    pub population: PopulationTable,
}

impl StateGeo {
    pub fn get(&self, code: &str) -> Option<&StatePolygon> {
        self.polygons
            .binary_search_by(|p| p.state_code.as_str().cmp(code))
            .ok()
            .map(|i| &self.polygons[i])
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.polygons.iter().map(|p| p.state_code.as_str())
    }

    pub fn assign(&self, tweet: &Tweet) -> Option<String> {
        assign_state(tweet, &self.polygons)
    }

    /// Replaces population and gun ownership from a CSV with header
    /// `state_code,population,gun_ownership_pct`. National population is
    /// recomputed as the sum over states.
    pub fn apply_population_csv<R: Read>(&mut self, input: R) -> Result<(), GeoError> {
        #[derive(Deserialize)]
        struct Row {
            state_code: String,
            population: u64,
            gun_ownership_pct: f64,
        }
        let mut states = self.population.states.clone();
        let mut reader = csv::Reader::from_reader(input);
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let bad = |message: String| GeoError::Override { row: i + 1, message };
            let row = row.map_err(|e| bad(e.to_string()))?;
            let entry = states
                .get_mut(&row.state_code)
                .ok_or_else(|| bad(format!("unknown state {:?}", row.state_code)))?;
            *entry = StateInfo {
                population: row.population,
                gun_ownership_pct: row.gun_ownership_pct,
            };
        }
        self.population = PopulationTable::from_states(states)?;
        Ok(())
    }
}

pub fn load_state_geo(path: &Path) -> Result<StateGeo, GeoError> {
    parse_state_geo(&std::fs::read_to_string(path)?)
}

/// The bundled simplified fixture.
pub fn simplified_fixture() -> StateGeo {
    parse_state_geo(SIMPLIFIED_FIXTURE).expect("bundled fixture is valid")
}

pub fn parse_state_geo(json: &str) -> Result<StateGeo, GeoError> {
    let doc: Value = serde_json::from_str(json).map_err(|e| GeoError::Json(e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(GeoError::Json("expected a FeatureCollection".into()));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| GeoError::Json("missing features array".into()))?;
    let mut polygons = Vec::with_capacity(features.len());
    let mut states = BTreeMap::new();
    for (index, f) in features.iter().enumerate() {
        let schema = |message: &str| GeoError::Schema {
            index,
            message: message.to_string(),
        };
        let props = f.get("properties").ok_or_else(|| schema("missing properties"))?;
        let code = props
            .get("state_code")
            .and_then(Value::as_str)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| schema("missing state_code"))?
            .to_string();
        let population = props
            .get("population")
            .and_then(Value::as_u64)
            .filter(|&p| p > 0)
            .ok_or_else(|| schema("population must be a positive integer"))?;
        let gun = props
            .get("gun_ownership_pct")
            .and_then(Value::as_f64)
            .filter(|g| (0.0..=1.0).contains(g))
            .ok_or_else(|| schema("gun_ownership_pct must be a fraction in [0, 1]"))?;
        let name = props
            .get("name")
            .and_then(Value::as_str)
            .unwrap_or(&code)
            .to_string();
        let geometry = f.get("geometry").ok_or_else(|| schema("missing geometry"))?;
        let coords = geometry
            .get("coordinates")
            .ok_or_else(|| schema("missing coordinates"))?;
        let raw_parts = match geometry.get("type").and_then(Value::as_str) {
            Some("Polygon") => vec![parse_polygon(coords).ok_or_else(|| schema("bad Polygon coordinates"))?],
            Some("MultiPolygon") => coords
                .as_array()
                .ok_or_else(|| schema("bad MultiPolygon coordinates"))?
                .iter()
                .map(parse_polygon)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| schema("bad MultiPolygon coordinates"))?,
            _ => return Err(schema("geometry must be Polygon or MultiPolygon")),
        };
        if raw_parts.is_empty() {
            return Err(schema("empty geometry"));
        }
        for ring in raw_parts.iter().flatten() {
            validate_ring(&code, ring)?;
        }
        if states
            .insert(
                code.clone(),
                StateInfo {
                    population,
                    gun_ownership_pct: gun,
                },
            )
            .is_some()
        {
            return Err(schema("duplicate state_code"));
        }
        let parts = raw_parts.into_iter().map(PolygonPart::new).collect();
        polygons.push(StatePolygon::new(code, name, parts));
    }
    polygons.sort_by(|a, b| a.state_code.cmp(&b.state_code));
    Ok(StateGeo {
        polygons,
        population: PopulationTable::from_states(states)?,
    })
}

fn parse_polygon(v: &Value) -> Option<Vec<Ring>> {
    let rings = v.as_array()?;
    if rings.is_empty() {
        return None;
    }
    rings
        .iter()
        .map(|r| {
            r.as_array()?
                .iter()
                .map(|p| {
                    let p = p.as_array()?;
                    Some((p.first()?.as_f64()?, p.get(1)?.as_f64()?))
                })
                .collect()
        })
        .collect()
}
