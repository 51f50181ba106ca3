//! End-to-end acceptance checks. Runs without the libtest harness so that one
//! PASS/FAIL line per criterion is always printed; exits non-zero on failure.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use gunsent_core::aggregate::{self, Granularity, SeriesPoint};
use gunsent_core::classifiers::{self, maxent, neural, Algorithm, AlgorithmSpec, ModelParameters, SentimentLabel};
use gunsent_core::corpusgen::{self, GeneratorSpec};
use gunsent_core::evaluation;
use gunsent_core::features::{self, DocumentTermMatrix, FeatureConfig};
use gunsent_core::geo;
use gunsent_core::ingest::Tweet;
use gunsent_core::scoring::{self, PopulationTable, SentimentCounts, StateInfo};
use gunsent_core::time;
use gunsent_core::CorpusWindow;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use SentimentLabel::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("pgpss two-state example", pgpss_two_state_example),
        ("comparison table harness", comparison_tables),
        ("oracle equivalence", oracle_equivalence),
        ("cross-validation invariants", cv_invariants),
        ("conservation", conservation),
        ("geolocation", geolocation),
        ("determinism", determinism),
        ("end to end", end_to_end),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn pgpss_two_state_example() -> Outcome {
    let counts = BTreeMap::from([
        ("G1".to_string(), SentimentCounts::new(200_000, 800_000, 0)),
        ("G2".to_string(), SentimentCounts::new(8_000, 2_000, 0)),
    ]);
    let states = BTreeMap::from([
        ("G1".to_string(), StateInfo { population: 10_000_000, gun_ownership_pct: 0.3 }),
        ("G2".to_string(), StateInfo { population: 1_000_000, gun_ownership_pct: 0.5 }),
    ]);
    let pop = PopulationTable::from_states(states).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let r = scoring::score_all_states(&counts, CorpusWindow::new(0, 1).unwrap(), &pop).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let (a, b) = (r.get("G1").unwrap(), r.get("G2").unwrap());
    ensure!(a.raw1 == 0.25 && b.raw1 == 4.0, "pgpss1 {} {}", a.raw1, b.raw1);
    ensure!(a.norm1 == 0.0625 && b.norm1 == 1.0, "normalized pgpss1 {} {}", a.norm1, b.norm1);
    ensure!(close(a.raw2, 0.247525, 1e-6) && close(b.raw2, 0.039604, 1e-6), "pgpss2 {} {}", a.raw2, b.raw2);
    ensure!(a.norm2 == 1.0 && close(b.norm2, 0.16, 1e-3), "normalized pgpss2 {} {}", a.norm2, b.norm2);
    ensure!(close(a.raw3, 0.225023, 1e-6), "pgpss3 g1 {}", a.raw3);
    ensure!(close(b.raw3, 0.003600, 1e-6), "pgpss3 g2 {}", b.raw3);
    ensure!(elapsed < Duration::from_millis(50), "took {elapsed:?}");
    Ok(format!("pgpss3 = {:.6}, {:.6}", a.raw3, b.raw3))
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gunsent"));
    c.arg("--quiet");
    c
}

fn run(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = bin()
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| format!("spawn: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "`gunsent {}` exited {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

struct Table {
    rows: Vec<String>,
    columns: Vec<String>,
    cells: Vec<Vec<Value>>,
}

impl Table {
    fn read(path: &Path) -> Result<Table, String> {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let strings = |k: &str| -> Vec<String> {
            v[k].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect()
        };
        Ok(Table {
            rows: strings("rows"),
            columns: strings("columns"),
            cells: v["cells"]
                .as_array()
                .unwrap()
                .iter()
                .map(|r| r.as_array().unwrap().clone())
                .collect(),
        })
    }

    fn value(&self, row: usize, column: &str) -> Option<f64> {
        let c = self.columns.iter().position(|n| n == column)?;
        self.cells[row][c].as_f64()
    }
}

fn comparison_tables() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let started = Instant::now();
    run(d, &["evaluate", "--synthetic", "separable", "--table1", "--out-json", "t1.json"])?;
    let t1 = Table::read(&d.join("t1.json"))?;
    ensure!(t1.rows.len() == 5 && t1.columns.len() == 8, "table 1 is {}x{}", t1.rows.len(), t1.columns.len());
    ensure!(t1.cells.iter().all(|r| r.len() == 8), "ragged table 1");
    let row5000 = t1.rows.iter().position(|r| r == "5000").ok_or("no 5000 row")?;
    let mut top = Vec::new();
    for a in [Algorithm::RandomForest, Algorithm::BaggedTree, Algorithm::BoostedTree, Algorithm::Svm] {
        let acc = t1.value(row5000, a.display_name()).ok_or_else(|| format!("{a} missing"))?;
        ensure!(acc >= 0.95, "{} at 5000: {acc:.4}", a.display_name());
        top.push(format!("{} {acc:.3}", a.display_name()));
    }

    run(d, &["evaluate", "--synthetic", "separable", "--size", "5000", "--ngram", "3", "--out-json", "tri.json"])?;
    let tri = Table::read(&d.join("tri.json"))?;
    for a in Algorithm::TABLE_ORDER {
        let name = a.display_name();
        let uni = t1.value(row5000, name).ok_or_else(|| format!("{name} uni-gram missing"))?;
        let Some(t) = tri.value(0, name) else { continue };
        ensure!(uni >= t, "{name}: uni-gram {uni:.4} < tri-gram {t:.4}");
    }
    let separable = started.elapsed();
    ensure!(separable < Duration::from_secs(600), "separable runs took {separable:?}");

    run(d, &["evaluate", "--synthetic", "unique-trigram", "--table2", "--size", "1000", "--out-json", "t2.json"])?;
    let t2 = Table::read(&d.join("t2.json"))?;
    ensure!(t2.rows.len() == 3 && t2.columns.len() == 8, "table 2 is {}x{}", t2.rows.len(), t2.columns.len());
    let tri_row = t2.rows.iter().position(|r| r == "tri-gram").ok_or("no tri-gram row")?;
    let nb = t2.columns.iter().position(|c| c == "NB").ok_or("no NB column")?;
    ensure!(
        t2.cells[tri_row][nb] == evaluation::NOT_AVAILABLE,
        "NB tri-gram cell is {}",
        t2.cells[tri_row][nb]
    );
    Ok(format!("5x8 and 3x8 grids, {}, uni >= tri for all eight", top.join(", ")))
}

fn two_doc_fixture() -> (features::Vocabulary, DocumentTermMatrix) {
    let docs = [Tweet::from_text("1", "good gun", 0), Tweet::from_text("2", "ban gun", 0)];
    let config = FeatureConfig { min_doc_freq: 1, ..FeatureConfig::default() };
    let vocab = features::build_vocabulary(&docs, &config).unwrap();
    let dtm = features::vectorize_corpus(&docs, &vocab);
    (vocab, dtm)
}

fn central_difference(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-5;
    (0..x.len())
        .map(|i| {
            let (mut plus, mut minus) = (x.to_vec(), x.to_vec());
            plus[i] += h;
            minus[i] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

fn oracle_equivalence() -> Outcome {
    let (vocab, dtm) = two_doc_fixture();
    let model = classifiers::train(&AlgorithmSpec::new(Algorithm::NaiveBayes, 0), &dtm, &[ProGun, AntiGun])
        .map_err(|e| e.to_string())?;
    let ModelParameters::NaiveBayes(nb) = &model.parameters else {
        return Err("not naive Bayes parameters".into());
    };
    let good = vocab.index_of("good").ok_or("no 'good'")?;
    for (class, term, want) in [(ProGun, "good", 0.4), (AntiGun, "good", 0.2), (ProGun, "gun", 0.4), (AntiGun, "ban", 0.4)] {
        let got = nb.term_probability(class, vocab.index_of(term).unwrap()).unwrap();
        ensure!(close(got, want, 1e-12), "P({term}|{class}) = {got}");
    }
    let query = DocumentTermMatrix::new(vocab.len(), vec![vec![(good as u32, 1)]]).unwrap();
    let post = &classifiers::predict_scores(&model, &query).map_err(|e| e.to_string())?[0];
    ensure!(close(post[0], 2.0 / 3.0, 1e-12) && close(post[1], 1.0 / 3.0, 1e-12), "posterior {post:?}");

    let mut r = ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<Vec<u32>> = (0..10)
        .map(|_| (0..8).map(|_| if r.gen_bool(0.4) { r.gen_range(1..4) } else { 0 }).collect())
        .collect();
    let x = DocumentTermMatrix::from_dense(&rows);
    let labels: Vec<SentimentLabel> = (0..10).map(|i| SentimentLabel::from_index(i % 3)).collect();

    let flat: Vec<f64> = (0..3 * 8 + 3).map(|_| r.gen_range(-0.5..0.5)).collect();
    let (_, g) = maxent::loss_and_gradient(&maxent::MaxEntParams::from_flat(8, &flat), &x, &labels, 0.1);
    let numeric = central_difference(&flat, |p| {
        maxent::loss_and_gradient(&maxent::MaxEntParams::from_flat(8, p), &x, &labels, 0.1).0
    });
    let me_err = max_relative_error(&g.to_flat(), &numeric);
    ensure!(me_err < 1e-4, "maxent gradient relative error {me_err:e}");

    let params = neural::NeuralNetParams::init(8, 5, 0.5, 3);
    let flat = params.to_flat();
    let (_, g) = neural::loss_and_gradient(&params, &x, &labels);
    let numeric = central_difference(&flat, |p| {
        neural::loss_and_gradient(&neural::NeuralNetParams::from_flat(&params, p), &x, &labels).0
    });
    let nn_err = max_relative_error(&g.to_flat(), &numeric);
    ensure!(nn_err < 1e-4, "neural gradient relative error {nn_err:e}");
    Ok(format!("NB posterior 2/3, gradient errors {me_err:.1e} / {nn_err:.1e}"))
}

fn cv_invariants() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(77);
    let words: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let (tweets, labels): (Vec<Tweet>, Vec<SentimentLabel>) = (0..300)
        .map(|i| {
            let n = r.gen_range(4..10);
            let text: Vec<&str> = (0..n).map(|_| words.choose(&mut r).unwrap().as_str()).collect();
            let label = SentimentLabel::from_index((i + r.gen_range(0..3)) % 3);
            (Tweet::from_text(i.to_string(), text.join(" "), 0), label)
        })
        .unzip();

    let folds = evaluation::stratified_kfold(&labels, 10, 5).map_err(|e| e.to_string())?;
    let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
    seen.sort_unstable();
    ensure!(seen == (0..300).collect::<Vec<_>>(), "folds do not partition the indices");
    for class in SentimentLabel::ALL {
        let per_fold: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == class).count()).collect();
        let spread = per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap();
        ensure!(spread <= 1, "{class} imbalance {spread}");
    }

    let mut range = (1.0f64, 0.0f64);
    for a in Algorithm::ALL {
        let report = evaluation::cross_validate(&AlgorithmSpec::new(a, 3), &tweets, &labels, &FeatureConfig::default(), 10, 3)
            .map_err(|e| e.to_string())?;
        let mean = report.fold_accuracies.iter().sum::<f64>() / report.fold_accuracies.len() as f64;
        ensure!(close(report.mean_accuracy, mean, 1e-12), "{a}: mean {} vs {mean}", report.mean_accuracy);
        ensure!((0.20..=0.47).contains(&report.mean_accuracy), "{a}: random-label accuracy {}", report.mean_accuracy);
        range = (range.0.min(mean), range.1.max(mean));
    }
    Ok(format!("random-label accuracy in [{:.3}, {:.3}]", range.0, range.1))
}

fn by_key(points: &[SeriesPoint]) -> BTreeMap<(i64, String), SentimentCounts> {
    points.iter().map(|p| ((p.bucket_start, p.state_code.clone()), p.counts)).collect()
}

fn add(a: &mut SentimentCounts, b: &SentimentCounts) {
    a.pro += b.pro;
    a.anti += b.anti;
    a.neutral += b.neutral;
}

fn conservation() -> Outcome {
    let g = geo::simplified_fixture();
    let spec = GeneratorSpec::with_population_weights(&g);
    let corpus = corpusgen::generate_corpus(&spec, &g).map_err(|e| e.to_string())?;
    ensure!(corpus.len() == 10_000, "generated {}", corpus.len());
    let snap = aggregate::build_snapshot(&corpus, &g, None, "gold").map_err(|e| e.to_string())?;

    let quotas = &spec.n_per_class;
    ensure!(
        (snap.totals.pro, snap.totals.anti, snap.totals.neutral)
            == (quotas.pro_gun as u64, quotas.anti_gun as u64, quotas.neutral as u64),
        "totals {:?}",
        snap.totals
    );

    let split = |pts: &[SeriesPoint], gran: Granularity| -> Vec<SeriesPoint> {
        pts.iter().filter(|p| p.granularity == gran).cloned().collect()
    };
    for pts in [&snap.series, &snap.unresolved] {
        let mut rolled: BTreeMap<(i64, String), SentimentCounts> = BTreeMap::new();
        for p in split(pts, Granularity::Hour) {
            add(rolled.entry((time::floor_day(p.bucket_start), p.state_code.clone())).or_default(), &p.counts);
        }
        ensure!(rolled == by_key(&split(pts, Granularity::Day)), "hourly sums differ from daily counts");
    }

    let mut unresolved_total = 0;
    for gran in [Granularity::Hour, Granularity::Day] {
        let series = split(&snap.series, gran);
        let unresolved = by_key(&split(&snap.unresolved, gran));
        let mut states: BTreeMap<i64, SentimentCounts> = BTreeMap::new();
        let mut national: BTreeMap<i64, SentimentCounts> = BTreeMap::new();
        for p in &series {
            let target = if p.state_code == scoring::NATIONAL { &mut national } else { &mut states };
            add(target.entry(p.bucket_start).or_default(), &p.counts);
        }
        for ((t, _), c) in &unresolved {
            add(states.entry(*t).or_default(), c);
            if gran == Granularity::Day {
                unresolved_total += c.total();
            }
        }
        ensure!(states == national, "{gran:?}: national differs from states plus unresolved");
    }
    Ok(format!("10000 tweets, totals match quotas, {unresolved_total} unresolved"))
}

fn geolocation() -> Outcome {
    let g = geo::simplified_fixture();
    let spec = GeneratorSpec { geotag_rate: 1.0, ..GeneratorSpec::with_population_weights(&g) };
    let corpus = corpusgen::generate_corpus(&spec, &g).map_err(|e| e.to_string())?;
    let resolved = corpus
        .iter()
        .filter(|r| {
            let c = r.tweet.coordinates.unwrap();
            r.state.is_some() && geo::locate(c.lon, c.lat, &g.polygons) == r.state.as_deref()
        })
        .count();
    ensure!(resolved == 10_000, "{resolved} of {} resolve to their state", corpus.len());
    let full = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/us_states_full.geojson");
    let full = geo::load_state_geo(&full).map_err(|e| e.to_string())?;
    let ny = geo::locate(-74.0060, 40.7128, &full.polygons);
    ensure!(ny == Some("NY"), "(40.7128, -74.0060) -> {ny:?}");
    Ok("10000/10000 resolved, NYC -> NY".into())
}

/// gen, ingest, train, classify, score, snapshot and a small evaluation in `dir`.
fn pipeline(dir: &Path, size: &str, trees: Option<&str>) -> Result<(), String> {
    run(dir, &["gen", "--out", "corpus.jsonl"])?;
    run(dir, &["ingest", "--input", "corpus.jsonl", "--out", "tweets.csv"])?;
    if let Some(trees) = trees {
        let config = format!(r#"{{"algorithm": "rf", "hyperparameters": {{"algorithm": "RandomForest", "n_trees": {trees}, "mtry": null, "max_depth": null, "min_samples_split": 2}}}}"#);
        std::fs::write(dir.join("config.json"), config).map_err(|e| e.to_string())?;
        run(dir, &["--config", "config.json", "train", "--input", "tweets.csv", "--out-dir", "model", "--size", size])?;
    } else {
        run(dir, &["train", "--input", "tweets.csv", "--out-dir", "model", "--algorithm", "rf", "--size", size])?;
    }
    run(dir, &["classify", "--model-dir", "model", "--input", "tweets.csv", "--out", "classified.csv"])?;
    run(dir, &["score", "--input", "classified.csv", "--out", "scores.json"])?;
    run(dir, &["snapshot", "--input", "classified.csv", "--out", "snapshot.json", "--classifier-id", "rf"])?;
    Ok(())
}

fn determinism() -> Outcome {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for dir in &runs {
        pipeline(dir.path(), "1000", Some("20"))?;
        run(
            dir.path(),
            &["evaluate", "--input", "tweets.csv", "--size", "500", "--folds", "3", "--out-json", "table.json", "--out-csv", "table.csv"],
        )?;
    }
    let files = ["model/model.json", "model/vocabulary.json", "table.json", "table.csv", "scores.json", "snapshot.json", "classified.csv"];
    for f in files {
        let read = |d: &tempfile::TempDir| std::fs::read(d.path().join(f)).map_err(|e| format!("{f}: {e}"));
        ensure!(read(&runs[0])? == read(&runs[1])?, "{f} differs between runs");
    }
    Ok(format!("{} artifacts byte-identical", files.len()))
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn get(addr: SocketAddr, path: &str) -> Result<(u16, Value), String> {
    let mut s = TcpStream::connect(addr).map_err(|e| e.to_string())?;
    s.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").map_err(|e| e.to_string())?;
    let mut raw = String::new();
    s.read_to_string(&mut raw).map_err(|e| e.to_string())?;
    let (head, body) = raw.split_once("\r\n\r\n").ok_or("malformed response")?;
    let status = head.split(' ').nth(1).and_then(|c| c.parse().ok()).ok_or("no status")?;
    let body = if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        dechunk(body)
    } else {
        body.to_string()
    };
    Ok((status, serde_json::from_str(&body).map_err(|e| format!("{path}: {e}"))?))
}

fn dechunk(mut s: &str) -> String {
    let mut out = String::new();
    while let Some((size, rest)) = s.split_once("\r\n") {
        let n = usize::from_str_radix(size.trim(), 16).unwrap_or(0);
        if n == 0 {
            break;
        }
        out.push_str(&rest[..n]);
        s = rest[n..].trim_start_matches("\r\n");
    }
    out
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let started = Instant::now();
    pipeline(d, "5000", None)?;
    let model: Value = serde_json::from_slice(&std::fs::read(d.join("model/model.json")).unwrap()).unwrap();
    ensure!(model["spec"]["hyperparameters"]["n_trees"] == 200, "model has {} trees", model["spec"]["hyperparameters"]["n_trees"]);
    let corpus_lines = std::fs::read_to_string(d.join("corpus.jsonl")).unwrap().lines().count();
    ensure!(corpus_lines == 10_000, "generated {corpus_lines} tweets");

    let addr: SocketAddr = {
        let l = TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
        l.local_addr().unwrap()
    };
    let _server = Server(
        bin()
            .current_dir(d)
            .args(["serve", "--snapshot", "snapshot.json", "--addr", &addr.to_string()])
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?,
    );
    let deadline = Instant::now() + Duration::from_secs(30);
    while TcpStream::connect(addr).is_err() {
        ensure!(Instant::now() < deadline, "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    }

    let (status, meta) = get(addr, "/api/meta")?;
    ensure!(status == 200 && meta["states"].as_array().is_some_and(|s| !s.is_empty()), "meta: {status}");
    let (status, series) = get(addr, "/api/series?granularity=day")?;
    ensure!(status == 200, "series: {status}");
    let rows = series.as_array().ok_or("series has no rows")?;
    let peak = rows
        .iter()
        .max_by_key(|r| ["pro", "anti", "neutral"].iter().map(|k| r[k].as_u64().unwrap_or(0)).sum::<u64>())
        .ok_or("empty series")?;
    let peak_day = peak["bucket_start"].as_str().unwrap_or_default().get(..10).unwrap_or_default().to_string();
    ensure!(peak_day == "2012-12-14", "daily series peaks on {peak_day}");
    let (status, map) = get(addr, "/api/map")?;
    ensure!(status == 200, "map: {status}");
    let (status, _) = get(addr, "/api/tags?kind=hashtag&n=10")?;
    ensure!(status == 200, "tags: {status}");
    let (status, bubble) = get(addr, "/api/bubble?date=2012-12-14")?;
    ensure!(status == 200, "bubble: {status}");

    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    let n_map = map.as_array().map_or(0, Vec::len);
    let n_bubble = bubble.as_array().map_or(0, Vec::len);
    ensure!(n_map > 0 && n_bubble == n_map, "{n_map} map rows, {n_bubble} bubble rows");
    Ok(format!("five endpoints answered ({n_map} map rows, {n_bubble} bubble rows), peak {peak_day}"))
}
