use std::collections::BTreeMap;

use gunsent_core::aggregate::{self, Granularity};
use gunsent_core::classifiers::{self, Algorithm, AlgorithmSpec, SentimentLabel};
use gunsent_core::evaluation;
use gunsent_core::features::{self, DocumentTermMatrix, FeatureConfig};
use gunsent_core::geo::{self, PolygonPart, StatePolygon};
use gunsent_core::ingest::{self, AnnotatedTweet, Coordinates, FilterRules, Tweet};
use gunsent_core::scoring::{self, PopulationTable, SentimentCounts, StateInfo};
use gunsent_core::CorpusWindow;
use proptest::prelude::*;

const WORDS: [&str; 12] = [
    "gun", "ban", "safe", "Newtown", "control", "NRA", "kids", "rights", "now", "#guns", "@potus", "http://t.co/x",
];

fn text_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            prop::sample::select(WORDS.to_vec()).prop_map(str::to_string),
            "[a-zA-Z0-9'!?.,#@ ]{0,12}",
        ],
        0..12,
    )
    .prop_map(|w| w.join(" "))
}

fn label_strategy() -> impl Strategy<Value = SentimentLabel> {
    (0usize..3).prop_map(SentimentLabel::from_index)
}

fn tweet_strategy() -> impl Strategy<Value = Tweet> {
    (
        text_strategy(),
        1_300_000_000i64..1_400_000_000,
        prop::option::of((-90.0f64..90.0, -180.0f64..180.0)),
        any::<bool>(),
        prop::sample::select(vec!["en", "es", ""]),
    )
        .prop_map(|(text, ts, coords, rt, lang)| {
            let mut t = Tweet::from_text("x", text, ts);
            t.coordinates = coords.map(|(lat, lon)| Coordinates { lat, lon });
            t.is_retweet = rt;
            t.lang = lang.to_string();
            t
        })
}

fn tweets_strategy(max: usize) -> impl Strategy<Value = Vec<Tweet>> {
    prop::collection::vec(tweet_strategy(), 0..max).prop_map(|mut v| {
        for (i, t) in v.iter_mut().enumerate() {
            t.id = format!("t{i}");
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tokenize_is_a_fixed_point(text in text_strategy()) {
        let once = features::tokenize(&text);
        prop_assert_eq!(features::tokenize(&once.join(" ")), once);
    }

    #[test]
    fn unigram_count_equals_token_count(text in text_strategy()) {
        let tokens = features::tokenize(&text);
        prop_assert_eq!(features::extract_ngrams(&tokens, 1).len(), tokens.len());
        let bigrams = features::extract_ngrams(&tokens, 2).len();
        prop_assert_eq!(bigrams, tokens.len().saturating_sub(1));
    }

    #[test]
    fn row_sums_count_in_vocabulary_terms(
        tweets in tweets_strategy(20),
        order in 1usize..=3,
    ) {
        let config = FeatureConfig { min_doc_freq: 1, ..FeatureConfig::with_order(order) };
        let Ok(vocab) = features::build_vocabulary(&tweets, &config) else {
            return Ok(());
        };
        let dtm = features::vectorize_corpus(&tweets, &vocab);
        for (t, row) in tweets.iter().zip(&dtm.rows) {
            let terms = features::document_terms(t, &config);
            let brute = terms.iter().filter(|term| vocab.terms().contains(term)).count();
            let sum: u32 = row.iter().map(|&(_, c)| c).sum();
            prop_assert_eq!(sum as usize, brute);
        }
    }

    #[test]
    fn vocabulary_ignores_corpus_order(
        (tweets, perm) in tweets_strategy(20).prop_flat_map(|t| {
            let n = t.len();
            (Just(t), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let shuffled: Vec<Tweet> = perm.iter().map(|&i| tweets[i].clone()).collect();
        let config = FeatureConfig::default();
        let a = features::build_vocabulary(&tweets, &config).ok();
        let b = features::build_vocabulary(&shuffled, &config).ok();
        prop_assert_eq!(a.map(|v| v.to_json()), b.map(|v| v.to_json()));
    }

    #[test]
    fn filters_are_monotone(
        tweets in tweets_strategy(30),
        extra in prop::sample::select(WORDS.to_vec()),
        lang in prop::option::of(prop::sample::select(vec!["en".to_string()])),
    ) {
        let base = FilterRules {
            keywords: vec!["gun".into()],
            lang,
            ..FilterRules::default()
        };
        let ids = |rules: &FilterRules| -> Vec<String> {
            ingest::apply_filters(&tweets, rules).into_iter().map(|t| t.id).collect()
        };
        let kept = ids(&base);

        let mut wider = base.clone();
        wider.keywords.push(extra.to_string());
        let wide = ids(&wider);
        prop_assert!(kept.iter().all(|id| wide.contains(id)));

        let mut narrower = base.clone();
        narrower.exclude_retweets = true;
        let narrow = ids(&narrower);
        prop_assert!(narrow.iter().all(|id| kept.contains(id)));
    }

    #[test]
    fn every_nonblank_line_is_a_tweet_or_an_error(
        lines in prop::collection::vec(
            prop_oneof![
                (0u32..50, text_strategy()).prop_map(|(id, text)| serde_json::json!({
                    "id": id.to_string(),
                    "text": text,
                    "timestamp": "2012-12-14T15:02:00Z",
                }).to_string()),
                "[ -~]{0,30}",
                Just(String::new()),
            ],
            0..40,
        )
    ) {
        let input = lines.join("\n");
        let parsed = ingest::parse_tweet_json(input.as_bytes());
        let nonblank = lines.iter().filter(|l| !l.trim().is_empty()).count();
        prop_assert_eq!(parsed.tweets.len() + parsed.errors.len(), nonblank);
    }

    #[test]
    fn csv_round_trip_is_identity(
        tweets in tweets_strategy(25),
        labels in prop::collection::vec(prop::option::of(label_strategy()), 25),
        states in prop::collection::vec(prop::option::of(prop::sample::select(vec!["CT", "NY"])), 25),
    ) {
        let records: Vec<AnnotatedTweet> = tweets
            .iter()
            .enumerate()
            .map(|(i, t)| AnnotatedTweet {
                tweet: t.trimmed(),
                state: states[i].map(str::to_string),
                label: labels[i],
            })
            .collect();
        let mut buf = Vec::new();
        ingest::write_csv_to(&records, &mut buf).unwrap();
        let back = ingest::read_csv_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back, records);
    }

    #[test]
    fn pgpss1_is_scale_invariant(pro in 0u64..1_000_000, anti in 1u64..1_000_000, k in 1u64..1000) {
        let a = scoring::pgpss1(&SentimentCounts::new(pro, anti, 0));
        let b = scoring::pgpss1(&SentimentCounts::new(pro * k, anti * k, 0));
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn pgpss_variants_shrink(
        counts in prop::collection::vec((0u64..10_000, 0u64..10_000, 0u64..10_000), 1..8),
        pops in prop::collection::vec(1u64..40_000_000, 8),
    ) {
        let (map, table) = state_tables(&counts, &pops);
        let result = scoring::score_all_states(&map, window(), &table).unwrap();
        let frame: u64 = map.values().map(|c| c.total()).sum();
        let mut share = 0.0;
        for s in &result.states {
            prop_assert!(s.raw2 <= s.raw1 + 1e-12);
            prop_assert!(s.raw3 <= s.raw2 + 1e-12);
            if frame > 0 {
                share += map[&s.code].total() as f64 / frame as f64;
            }
        }
        if frame > 0 {
            prop_assert!((share - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_is_idempotent_and_scale_free(
        values in prop::collection::vec(0.0f64..1e6, 1..10),
        k in 1e-3f64..1e3,
    ) {
        let v: BTreeMap<usize, f64> = values.into_iter().enumerate().collect();
        let once = scoring::normalize_scores(&v);
        let twice = scoring::normalize_scores(&once);
        let scaled = scoring::normalize_scores(&v.iter().map(|(&i, &x)| (i, x * k)).collect());
        for (i, x) in &once {
            prop_assert!((x - twice[i]).abs() <= 1e-12);
            prop_assert!((x - scaled[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn pgpss2_ranking_survives_uniform_scaling(
        counts in prop::collection::vec((0u64..5_000, 0u64..5_000, 0u64..5_000), 2..8),
        k in 2u64..50,
    ) {
        let pops = vec![1_000_000; 8];
        let (a, table) = state_tables(&counts, &pops);
        let scaled: Vec<_> = counts.iter().map(|&(p, q, r)| (p * k, q * k, r * k)).collect();
        let (b, _) = state_tables(&scaled, &pops);
        let ra = scoring::score_all_states(&a, window(), &table).unwrap();
        let rb = scoring::score_all_states(&b, window(), &table).unwrap();
        let order = |r: &scoring::PgpssResult| {
            let mut codes: Vec<(&str, f64)> = r.states.iter().map(|s| (s.code.as_str(), s.raw2)).collect();
            codes.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(y.0)));
            codes.into_iter().map(|(c, _)| c.to_string()).collect::<Vec<_>>()
        };
        // Rankings agree wherever scores are not tied.
        for s in &ra.states {
            let t = rb.get(&s.code).unwrap();
            prop_assert!((s.raw2 - t.raw2).abs() <= 1e-9 * s.raw2.max(1.0), "{} vs {}", s.raw2, t.raw2);
        }
        prop_assert_eq!(order(&ra), order(&rb));
    }

    #[test]
    fn predict_is_argmax_of_scores(
        rows in prop::collection::vec(prop::collection::vec(0u32..3, 6), 12..24),
        labels in prop::collection::vec(label_strategy(), 24),
        probe in prop::collection::vec(prop::collection::vec(0u32..4, 6), 1..20),
        alg in prop::sample::select(Algorithm::ALL.to_vec()),
    ) {
        let dtm = DocumentTermMatrix::from_dense(&rows);
        let y = &labels[..rows.len()];
        let model = classifiers::train(&AlgorithmSpec::new(alg, 3), &dtm, y).unwrap();
        let probe = DocumentTermMatrix::from_dense(&probe);
        let scores = classifiers::predict_scores(&model, &probe).unwrap();
        let labels = classifiers::predict(&model, &probe).unwrap();
        for (s, l) in scores.iter().zip(labels) {
            prop_assert_eq!(SentimentLabel::from_index(classifiers::argmax(s)), l);
        }
    }

    #[test]
    fn folds_partition_the_indices(
        labels in prop::collection::vec(label_strategy(), 30..120),
        k in 2usize..10,
        seed in any::<u64>(),
    ) {
        let Ok(folds) = evaluation::stratified_kfold(&labels, k, seed) else {
            let smallest = SentimentLabel::ALL
                .iter()
                .map(|&c| labels.iter().filter(|&&l| l == c).count())
                .filter(|&n| n > 0)
                .min()
                .unwrap();
            prop_assert!(smallest < k);
            return Ok(());
        };
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for c in SentimentLabel::ALL {
            let per: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == c).count()).collect();
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn translation_preserves_containment(
        dx in -50.0f64..50.0,
        dy in -30.0f64..30.0,
        px in -1.0f64..5.0,
        py in -1.0f64..5.0,
    ) {
        // An L-shaped region with a square hole.
        let shape = |ox: f64, oy: f64| {
            let ring = |pts: &[(f64, f64)]| pts.iter().map(|&(x, y)| (x + ox, y + oy)).collect::<Vec<_>>();
            StatePolygon::new("ZZ", "Test", vec![PolygonPart::new(vec![
                ring(&[(0.0, 0.0), (4.0, 0.0), (4.0, 1.5), (1.5, 1.5), (1.5, 4.0), (0.0, 4.0), (0.0, 0.0)]),
                ring(&[(0.25, 0.25), (0.75, 0.25), (0.75, 0.75), (0.25, 0.75), (0.25, 0.25)]),
            ])])
        };
        // Offsets are multiples of 1/8 so translated coordinates stay exact.
        let (dx, dy) = ((dx * 8.0).round() / 8.0, (dy * 8.0).round() / 8.0);
        let (px, py) = ((px * 64.0).round() / 64.0, (py * 64.0).round() / 64.0);
        let base = geo::point_in_polygon(px, py, &shape(0.0, 0.0));
        let moved = geo::point_in_polygon(px + dx, py + dy, &shape(dx, dy));
        prop_assert_eq!(base, moved);
    }

    #[test]
    fn snapshot_conserves_counts_and_ignores_order(
        raw in prop::collection::vec(
            (0i64..3 * 86_400, label_strategy(), prop::option::of(prop::sample::select(vec!["CT", "NY", "TX"]))),
            1..60,
        ),
        seed in any::<u64>(),
    ) {
        let start = 1_355_443_200;
        let records: Vec<AnnotatedTweet> = raw
            .iter()
            .enumerate()
            .map(|(i, &(dt, label, state))| AnnotatedTweet {
                tweet: Tweet::from_text(format!("r{i}"), "gun", start + dt),
                state: state.map(str::to_string),
                label: Some(label),
            })
            .collect();
        let geo = geo::simplified_fixture();
        let snap = aggregate::build_snapshot(&records, &geo, None, "oracle").unwrap();
        snap.validate().unwrap();

        let mut totals = SentimentCounts::default();
        records.iter().for_each(|r| totals.record(r.label.unwrap()));
        let series: SentimentCounts = snap.points(Granularity::Day, "US").map(|p| p.counts).sum();
        prop_assert_eq!(series, totals);
        for g in [Granularity::Hour, Granularity::Day] {
            let per_state: SentimentCounts = aggregate::bucket_counts(&records, g)
                .iter()
                .filter(|p| p.state_code != "US")
                .map(|p| p.counts)
                .sum();
            let located = records.iter().filter(|r| r.state.is_some()).count() as u64;
            prop_assert_eq!(per_state.total(), located);
        }

        let mut shuffled = records.clone();
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let again = aggregate::build_snapshot(&shuffled, &geo, None, "oracle").unwrap();
        prop_assert_eq!(again.to_json(), snap.to_json());
    }
}

fn window() -> CorpusWindow {
    CorpusWindow::new(0, 86_399).unwrap()
}

fn state_tables(
    counts: &[(u64, u64, u64)],
    pops: &[u64],
) -> (BTreeMap<String, SentimentCounts>, PopulationTable) {
    let mut map = BTreeMap::new();
    let mut info = BTreeMap::new();
    for (i, &(p, a, n)) in counts.iter().enumerate() {
        let code = format!("S{i}");
        map.insert(code.clone(), SentimentCounts::new(p, a, n));
        info.insert(
            code,
            StateInfo {
                population: pops[i],
                gun_ownership_pct: 0.3,
            },
        );
    }
    (map, PopulationTable::from_states(info).unwrap())
}
