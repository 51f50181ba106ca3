use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use gunsent_core::aggregate;
use gunsent_core::classifiers::{self, Algorithm, AlgorithmSpec, Hyperparameters, SentimentLabel};
use gunsent_core::corpusgen::{self, ClassMap, GeneratorSpec};
use gunsent_core::evaluation::{self, ComparisonTable};
use gunsent_core::features::{self, Vocabulary};
use gunsent_core::geo::{self, StateGeo};
use gunsent_core::ingest::{self, AnnotatedTweet, FilterRules, Tweet};
use gunsent_core::scoring::{self, SentimentCounts};
use gunsent_core::time::{self, SECONDS_PER_DAY};
use gunsent_core::{CorpusWindow, FeatureConfig};
use log::{info, warn};
use serde_json::Value;

use crate::config::PipelineConfig;
use crate::{
    ClassifyArgs, CliError, CorpusKind, EvaluateArgs, FeatureArgs, FeaturizeArgs, GenArgs, GeoArgs, IngestArgs,
    ScoreArgs, ServeArgs, SnapshotArgs, TrainArgs, WindowArgs,
};

pub const MODEL_FILE: &str = "model.json";
pub const VOCABULARY_FILE: &str = "vocabulary.json";
pub const DTM_FILE: &str = "dtm.json";

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = create(path)?;
    f.write_all(bytes).and_then(|_| f.flush()).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    write_bytes(path, &serde_json::to_vec(value).expect("json serializes"))
}

fn with_provenance(value: Value, config: &PipelineConfig) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("provenance".into(), serde_json::to_value(config.provenance()).unwrap());
    match value {
        Value::Object(m) => obj.extend(m),
        other => {
            obj.insert("data".into(), other);
        }
    }
    Value::Object(obj)
}

/// CSV and JSONL schemas are fixed, so their provenance goes next to them.
fn write_sidecar(path: &Path, config: &PipelineConfig) -> Result<(), CliError> {
    let mut name = path.as_os_str().to_owned();
    name.push(".provenance.json");
    let value = serde_json::to_value(config.provenance()).unwrap();
    write_json(Path::new(&name), &value)
}

fn read_records(path: &Path) -> Result<Vec<AnnotatedTweet>, CliError> {
    ingest::read_annotated_csv(path).map_err(|e| CliError::io(path, e))
}

fn apply_feature_args(config: &mut PipelineConfig, args: &FeatureArgs) -> Result<(), CliError> {
    if let Some(n) = args.ngram {
        config.features.ngram_order = n;
    }
    if let Some(m) = args.min_doc_freq {
        config.features.min_doc_freq = m;
    }
    config.validate()
}

fn parse_algorithm(s: &str) -> Result<Algorithm, CliError> {
    s.parse().map_err(CliError::usage)
}

/// Flag paths take precedence over config paths and stay out of the config hash.
fn load_geo(config: &PipelineConfig, args: &GeoArgs) -> Result<StateGeo, CliError> {
    let mut g = match args.geo.as_ref().or(config.geo.as_ref()) {
        Some(p) => geo::load_state_geo(p).map_err(|e| CliError::io(p, e))?,
        None => geo::simplified_fixture(),
    };
    if let Some(p) = args.population.as_ref().or(config.population.as_ref()) {
        let f = File::open(p).map_err(|e| CliError::io(p, e))?;
        g.apply_population_csv(f).map_err(|e| CliError::io(p, e))?;
    }
    Ok(g)
}

fn parse_day(flag: &str, s: &str) -> Result<i64, CliError> {
    time::parse_date(s).ok_or_else(|| CliError::usage(format!("--{flag} {s:?} is not a YYYY-MM-DD date")))
}

/// Window from `--from/--to`, then the config window. A missing bound falls
/// back to the config window and then to the corpus span.
fn window_arg(
    config: &mut PipelineConfig,
    args: &WindowArgs,
    records: &[AnnotatedTweet],
) -> Result<Option<CorpusWindow>, CliError> {
    if args.from.is_none() && args.to.is_none() {
        return Ok(config.window);
    }
    let base = config
        .window
        .or_else(|| CorpusWindow::covering(records.iter().map(|r| r.tweet.timestamp)));
    let start = match &args.from {
        Some(s) => parse_day("from", s)?,
        None => base.ok_or_else(|| CliError::data("no tweets to bound the window"))?.start,
    };
    let end = match &args.to {
        Some(s) => parse_day("to", s)? + SECONDS_PER_DAY - 1,
        None => base.ok_or_else(|| CliError::data("no tweets to bound the window"))?.end,
    };
    let w = CorpusWindow::new(start, end).map_err(|e| CliError::usage(e.to_string()))?;
    config.window = Some(w);
    Ok(Some(w))
}

fn generator_for(config: &PipelineConfig, kind: CorpusKind) -> GeneratorSpec {
    let spec = config.generator_spec();
    match kind {
        CorpusKind::Separable => GeneratorSpec {
            signal_rate: 1.0,
            ..spec
        },
        CorpusKind::Default | CorpusKind::UniqueTrigram => spec,
    }
}

fn generate(spec: &GeneratorSpec, kind: CorpusKind, config: &PipelineConfig) -> Result<Vec<AnnotatedTweet>, CliError> {
    let out = match kind {
        CorpusKind::UniqueTrigram => corpusgen::generate_unique_trigram_corpus(spec),
        _ => {
            let g = load_geo(config, &GeoArgs { geo: None, population: None })?;
            corpusgen::generate_corpus(spec, &g)
        }
    };
    out.map_err(|e| CliError::usage(e.to_string()))
}

pub fn gen(mut config: PipelineConfig, args: GenArgs) -> Result<(), CliError> {
    if let Some(s) = &args.n_per_class {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::usage(format!("--n-per-class {s:?} must be three integers")))?;
        let [p, a, n] = parts[..] else {
            return Err(CliError::usage("--n-per-class needs exactly three counts"));
        };
        config.generator.n_per_class = ClassMap::new(p, a, n);
    }
    let spec = generator_for(&config, args.kind);
    let corpus = generate(&spec, args.kind, &config)?;
    let written = if args.out.as_os_str() == "-" {
        ingest::write_tweet_json(&corpus, io::stdout().lock()).map_err(|e| CliError::io(&args.out, e))?
    } else {
        let n = ingest::write_tweet_json(&corpus, create(&args.out)?).map_err(|e| CliError::io(&args.out, e))?;
        write_sidecar(&args.out, &config)?;
        n
    };
    info!("generated {written} tweets (seed {})", spec.seed);
    Ok(())
}

pub fn ingest(mut config: PipelineConfig, args: IngestArgs) -> Result<(), CliError> {
    if let Some(p) = &args.rules {
        let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
        let rules: FilterRules =
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("rules {}: {e}", p.display())))?;
        config.filter = Some(rules);
    }
    if !args.keyword.is_empty() {
        let rules = config.filter.get_or_insert_with(FilterRules::default);
        rules.keywords.extend(args.keyword.iter().cloned());
    }
    config.validate()?;
    let g = load_geo(&config, &args.geo)?;

    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    let (mut errors, mut duplicates) = (0, 0);
    for path in &args.input {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let parsed = ingest::parse_records(file);
        for e in parsed.errors.iter().take(5) {
            warn!("{}:{}: {}", path.display(), e.line, e.reason);
        }
        for w in parsed.warnings.iter().take(5) {
            warn!("{}:{}: {}", path.display(), w.line, w.reason);
        }
        errors += parsed.errors.len();
        for r in parsed.records {
            if seen.insert(r.tweet.id.clone()) {
                records.push(r);
            } else {
                duplicates += 1;
            }
        }
    }
    let parsed = records.len();
    if let Some(rules) = &config.filter {
        let tweets: Vec<Tweet> = records.iter().map(|r| r.tweet.clone()).collect();
        let kept: BTreeSet<String> = ingest::apply_filters(&tweets, rules).into_iter().map(|t| t.id).collect();
        records.retain(|r| kept.contains(&r.tweet.id));
    }
    for r in &mut records {
        r.tweet = r.tweet.trimmed();
        r.state = g.assign(&r.tweet);
    }
    let located = records.iter().filter(|r| r.state.is_some()).count();
    ingest::write_csv_to(&records, create(&args.out)?).map_err(|e| CliError::io(&args.out, e))?;
    write_sidecar(&args.out, &config)?;
    info!(
        "{}",
        serde_json::json!({
            "parsed": parsed, "errors": errors, "duplicates": duplicates,
            "kept": records.len(), "located": located,
        })
    );
    Ok(())
}

fn labeled(records: &[AnnotatedTweet]) -> (Vec<Tweet>, Vec<SentimentLabel>) {
    records
        .iter()
        .filter_map(|r| r.label.map(|l| (r.tweet.clone(), l)))
        .unzip()
}

pub fn featurize(mut config: PipelineConfig, args: FeaturizeArgs) -> Result<(), CliError> {
    apply_feature_args(&mut config, &args.features)?;
    let records = read_records(&args.input)?;
    let tweets: Vec<Tweet> = records.iter().map(|r| r.tweet.clone()).collect();
    let vocab = features::build_vocabulary(&tweets, &config.features).map_err(CliError::data)?;
    let dtm = features::vectorize_corpus(&tweets, &vocab);
    let vocab_path = args.out_dir.join(VOCABULARY_FILE);
    write_bytes(&vocab_path, vocab.to_json().as_bytes())?;
    write_sidecar(&vocab_path, &config)?;
    let body = serde_json::json!({
        "ids": records.iter().map(|r| &r.tweet.id).collect::<Vec<_>>(),
        "labels": records.iter().map(|r| r.label.map(|l| l.name())).collect::<Vec<_>>(),
        "n_docs": dtm.n_docs,
        "n_terms": dtm.n_terms,
        "rows": dtm.rows,
    });
    write_json(&args.out_dir.join(DTM_FILE), &with_provenance(body, &config))?;
    info!("{} documents x {} terms ({} nonzeros)", dtm.n_docs, dtm.n_terms, dtm.nnz());
    Ok(())
}

pub fn train(mut config: PipelineConfig, args: TrainArgs) -> Result<(), CliError> {
    if let Some(a) = &args.algorithm {
        let alg = parse_algorithm(a)?;
        if alg != config.algorithm {
            config.hyperparameters = None;
        }
        config.algorithm = alg;
    }
    if args.size.is_some() {
        config.training_size = args.size;
    }
    apply_feature_args(&mut config, &args.features)?;

    let records = read_records(&args.input)?;
    let (mut tweets, mut labels) = labeled(&records);
    if tweets.is_empty() {
        return Err(CliError::data(format!("{}: no labeled rows", args.input.display())));
    }
    if let Some(size) = config.training_size {
        let idx = evaluation::compose_training_set(&labels, &evaluation::quota_for_size(size), config.seed)
            .map_err(CliError::data)?;
        tweets = idx.iter().map(|&i| tweets[i].clone()).collect();
        labels = idx.iter().map(|&i| labels[i]).collect();
    }
    let spec = config.algorithm_spec();
    let all: Vec<usize> = (0..tweets.len()).collect();
    let (vocab, mut model) =
        evaluation::train_fold(&spec, &tweets, &labels, &config.features, &all).map_err(CliError::data)?;
    model.provenance = Some(config.provenance());
    write_bytes(&args.out_dir.join(MODEL_FILE), &classifiers::serialize_model(&model))?;
    let vocab_path = args.out_dir.join(VOCABULARY_FILE);
    write_bytes(&vocab_path, vocab.to_json().as_bytes())?;
    write_sidecar(&vocab_path, &config)?;
    info!(
        "trained {} on {} tweets, {} terms",
        spec.algorithm().display_name(),
        tweets.len(),
        vocab.len()
    );
    Ok(())
}

fn load_model(dir: &Path) -> Result<(classifiers::TrainedModel, Vocabulary), CliError> {
    let mp = dir.join(MODEL_FILE);
    let vp = dir.join(VOCABULARY_FILE);
    let bytes = fs::read(&mp).map_err(|e| CliError::io(&mp, e))?;
    let model = classifiers::deserialize_model(&bytes).map_err(|e| CliError::io(&mp, e))?;
    let text = fs::read_to_string(&vp).map_err(|e| CliError::io(&vp, e))?;
    let vocab = Vocabulary::from_json(&text).map_err(|e| CliError::io(&vp, e))?;
    if vocab.len() != model.vocab_size {
        return Err(CliError::data(format!(
            "{} has {} terms but the model expects {}",
            vp.display(),
            vocab.len(),
            model.vocab_size
        )));
    }
    Ok((model, vocab))
}

pub fn classify(config: PipelineConfig, args: ClassifyArgs) -> Result<(), CliError> {
    let (model, vocab) = load_model(&args.model_dir)?;
    let mut records = read_records(&args.input)?;
    let tweets: Vec<Tweet> = records.iter().map(|r| r.tweet.clone()).collect();
    let predicted = classifiers::classify_tweets(&model, &vocab, &tweets).map_err(CliError::data)?;
    let mut counts = SentimentCounts::default();
    for (r, l) in records.iter_mut().zip(predicted) {
        r.label = Some(l);
        counts.record(l);
    }
    ingest::write_csv_to(&records, create(&args.out)?).map_err(|e| CliError::io(&args.out, e))?;
    write_sidecar(&args.out, &config)?;
    info!(
        "classified {} tweets with {}: {}",
        records.len(),
        model.algorithm().display_name(),
        serde_json::to_string(&counts).unwrap()
    );
    Ok(())
}

fn state_counts(records: &[AnnotatedTweet], window: CorpusWindow, g: &StateGeo) -> Result<BTreeMap<String, SentimentCounts>, CliError> {
    let mut counts: BTreeMap<String, SentimentCounts> =
        g.codes().map(|c| (c.to_string(), SentimentCounts::default())).collect();
    for r in records.iter().filter(|r| window.contains(r.tweet.timestamp)) {
        let Some(state) = &r.state else { continue };
        let label = r
            .label
            .ok_or_else(|| CliError::data(format!("tweet {} has no label; run classify first", r.tweet.id)))?;
        counts
            .get_mut(state)
            .ok_or_else(|| CliError::data(format!("tweet {} is in unknown state {state:?}", r.tweet.id)))?
            .record(label);
    }
    Ok(counts)
}

pub fn score(mut config: PipelineConfig, args: ScoreArgs) -> Result<(), CliError> {
    let g = load_geo(&config, &args.geo)?;
    let records = read_records(&args.input)?;
    let window = window_arg(&mut config, &args.window, &records)?;
    let window = match window {
        Some(w) => w,
        None => CorpusWindow::covering(records.iter().map(|r| r.tweet.timestamp))
            .ok_or_else(|| CliError::data("no tweets to score"))?,
    };
    let counts = state_counts(&records, window, &g)?;
    let result = scoring::score_all_states(&counts, window, &g.population).map_err(CliError::data)?;
    match &args.out {
        Some(p) if p.extension().is_some_and(|e| e == "json") => {
            write_json(p, &with_provenance(serde_json::to_value(&result).unwrap(), &config))?
        }
        Some(p) => {
            let mut f = create(p)?;
            result.write_csv(&mut f).map_err(|e| CliError::io(p, e))?;
            f.flush().map_err(|e| CliError::io(p, e))?;
            write_sidecar(p, &config)?;
        }
        None => result.write_csv(io::stdout().lock()).map_err(CliError::data)?,
    }
    if let Some(top) = result.states.iter().find(|s| s.norm3 == 1.0) {
        info!("highest pgpss3: {} ({:.6})", top.code, top.raw3);
    }
    Ok(())
}

pub fn snapshot(mut config: PipelineConfig, args: SnapshotArgs) -> Result<(), CliError> {
    let g = load_geo(&config, &args.geo)?;
    let records = read_records(&args.input)?;
    let window = window_arg(&mut config, &args.window, &records)?;
    let mut snap = aggregate::build_snapshot(&records, &g, window, &args.classifier_id).map_err(CliError::data)?;
    snap.provenance = Some(config.provenance());
    aggregate::write_snapshot(&snap, &args.out, args.gzip).map_err(|e| CliError::io(&args.out, e))?;
    info!(
        "snapshot {}..{}: {}",
        time::format_date(snap.window.start),
        time::format_date(snap.window.end),
        serde_json::to_string(&snap.totals).unwrap()
    );
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<(), CliError> {
    let rt = tokio::runtime::Runtime::new().map_err(CliError::data)?;
    info!("serving {} on http://{}", args.snapshot.display(), args.addr);
    rt.block_on(gunsent_service::serve(&args.snapshot, args.addr))
        .map_err(CliError::data)
}

fn evaluation_specs(config: &PipelineConfig, names: &[String]) -> Result<Vec<AlgorithmSpec>, CliError> {
    if names.is_empty() {
        return Ok(evaluation::table_specs(config.seed));
    }
    names
        .iter()
        .map(|n| {
            let alg = parse_algorithm(n)?;
            let hyperparameters = match &config.hyperparameters {
                Some(h) if h.algorithm() == alg => h.clone(),
                _ => Hyperparameters::default_for(alg),
            };
            Ok(AlgorithmSpec {
                hyperparameters,
                rng_seed: config.seed,
            })
        })
        .collect()
}

pub fn evaluate(mut config: PipelineConfig, args: EvaluateArgs) -> Result<(), CliError> {
    if let Some(k) = args.folds {
        config.folds = k;
    }
    if let Some(m) = args.min_doc_freq {
        config.features.min_doc_freq = m;
    }
    config.validate()?;
    let specs = evaluation_specs(&config, &args.algorithm)?;
    let default_size = config.training_size.unwrap_or(5000);
    let (sizes, orders): (Vec<usize>, Vec<usize>) = if args.table1 {
        let sizes = if args.size.is_empty() { evaluation::TABLE1_SIZES.to_vec() } else { args.size.clone() };
        (sizes, vec![1])
    } else if args.table2 {
        let sizes = if args.size.is_empty() { vec![default_size] } else { args.size.clone() };
        (sizes, vec![1, 2, 3])
    } else {
        let sizes = if args.size.is_empty() { vec![default_size] } else { args.size.clone() };
        let orders = if args.ngram.is_empty() { vec![config.features.ngram_order] } else { args.ngram.clone() };
        (sizes, orders)
    };
    let configs: Vec<FeatureConfig> = orders
        .iter()
        .map(|&n| FeatureConfig {
            ngram_order: n,
            ..config.features
        })
        .collect();
    for c in &configs {
        c.validate().map_err(|e| CliError::usage(e.to_string()))?;
    }

    let records = match (&args.input, args.synthetic) {
        (Some(p), _) => read_records(p)?,
        (None, Some(kind)) => {
            let spec = generator_for(&config, kind);
            generate(&spec, kind, &config)?
        }
        (None, None) => return Err(CliError::usage("evaluate needs --input or --synthetic")),
    };
    let (tweets, labels) = labeled(&records);
    info!(
        "evaluating {} algorithms x {} rows on {} labeled tweets, {}-fold",
        specs.len(),
        sizes.len() * configs.len(),
        tweets.len(),
        config.folds
    );
    let table = evaluation::compare_models(&specs, &sizes, &configs, &tweets, &labels, config.folds, config.seed)
        .map_err(CliError::data)?;
    report_table(&table, &config, &args)
}

fn report_table(table: &ComparisonTable, config: &PipelineConfig, args: &EvaluateArgs) -> Result<(), CliError> {
    for (r, c, m) in &table.errors {
        warn!("{} / {}: {m}", table.rows[*r], table.columns[*c]);
    }
    if let Some(p) = &args.out_csv {
        let mut f = create(p)?;
        table.write_csv(&mut f).map_err(|e| CliError::io(p, e))?;
        f.flush().map_err(|e| CliError::io(p, e))?;
        write_sidecar(p, config)?;
    }
    if let Some(p) = &args.out_json {
        let value: Value = serde_json::from_str(&table.to_json()).expect("table json");
        write_json(p, &with_provenance(value, config))?;
    }
    print!("{}", table.to_text());
    Ok(())
}
