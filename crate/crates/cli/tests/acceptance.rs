//! Acceptance suite. Prints one PASS or FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use leadshare::corpus::{
    AuthorshipRecord, BilateralPair, BriClass, BriClassification, Concept, GlobalRegion, PublicationRecord, RegionMap,
    TopicMap, AREA_TAGS, FIELD_TAGS,
};
use leadshare::features::{extract_features, AffiliationScore, AuthorProfileIndex, LeadFeatureVector, N_FEATURES};
use leadshare::forecast::{confidence_band, ols_fit, parity_year, DEFAULT_HORIZON, DEFAULT_WINDOW};
use leadshare::leadmodel::{classify, fit, Classification, FitOptions, DEFAULT_THRESHOLD};
use leadshare::metrics::{lead_premium, lead_share, supporter_share, FilterSpec, Metric, PairYearCounts, SideCounts};
use leadshare::roles::{build_cooccurrence, cluster_roles, label_clusters, ContributionRecord, Role, SeedVerbs};
use leadshare::synth::{generate, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[path = "../../core/tests/support/feature_oracle.rs"]
mod feature_oracle;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_corpus(rng: &mut ChaCha8Rng, tag: usize) -> Vec<PublicationRecord> {
    let n_papers = rng.random_range(1..=50);
    let n_authors = rng.random_range(1..=20);
    let ids: Vec<String> = (0..n_papers).map(|i| format!("C{tag}P{i:02}")).collect();
    (0..n_papers)
        .map(|i| {
            let year = rng.random_range(2000..2008);
            let pub_date =
                if rng.random_bool(0.7) { NaiveDate::from_ymd_opt(year, rng.random_range(1..=12), 1) } else { None };
            let mut authors: Vec<usize> =
                (0..rng.random_range(1..=n_authors.min(6))).map(|_| rng.random_range(0..n_authors)).collect();
            authors.sort_unstable();
            authors.dedup();
            let concepts: BTreeSet<usize> = (0..rng.random_range(0..5)).map(|_| rng.random_range(0..12)).collect();
            let refs: BTreeSet<usize> =
                (0..rng.random_range(0..6)).map(|_| rng.random_range(0..n_papers)).filter(|r| *r != i).collect();
            PublicationRecord {
                paper_id: ids[i].clone(),
                year,
                pub_date,
                journal_id: "J".into(),
                impact_factor: 2.0,
                concepts: concepts.into_iter().map(|c| Concept { name: format!("K{c}"), level: 1 }).collect(),
                references: refs.into_iter().map(|r| ids[r].clone()).collect(),
                authorships: authors
                    .iter()
                    .enumerate()
                    .map(|(pos, a)| AuthorshipRecord {
                        author_id: format!("A{a}"),
                        position: pos,
                        country: "China".into(),
                        institution_id: format!("I{}", a % 7),
                    })
                    .collect(),
            }
        })
        .collect()
}

fn same_features(got: &LeadFeatureVector, want: &LeadFeatureVector) -> bool {
    let (g, w) = (got.to_array(), want.to_array());
    g[..N_FEATURES - 1] == w[..N_FEATURES - 1] && (g[N_FEATURES - 1] - w[N_FEATURES - 1]).abs() <= 1e-12
}

fn feature_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cells = 0;
    for c in 0..100 {
        let corpus = random_corpus(&mut rng, c);
        let index = AuthorProfileIndex::build(&corpus, AffiliationScore::Percentile).map_err(|e| e.to_string())?;
        for p in &corpus {
            for a in &p.authorships {
                let got = extract_features(p, &a.author_id, &index).map_err(|e| e.to_string())?;
                let want = feature_oracle::oracle(&corpus, p, &a.author_id);
                check(
                    same_features(&got, &want),
                    format!("corpus {c} {} {}: {got} vs {want}", p.paper_id, a.author_id),
                )?;
                cells += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!("{cells} author-paper cells over 100 corpora in {:.2}s", elapsed.as_secs_f64()))
}

fn share_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (cn, us) = (GlobalRegion::China, GlobalRegion::UnitedStates);
    let pair = BilateralPair::new(cn, us).expect("distinct regions");
    let mut defined = 0;
    for i in 0..10_000 {
        let mut draw = || if rng.random_bool(0.05) { 0 } else { rng.random_range(0..100_000u64) };
        let counts = SideCounts { leaders: [draw(), draw()], supporters: [draw(), draw()] };
        let p = PairYearCounts { pair, year: 2015, filter: FilterSpec::all(), counts };
        match (lead_share(&p, cn), lead_share(&p, us)) {
            (Ok(a), Ok(b)) => check((a + b - 1.0).abs() <= 1e-12, format!("case {i}: lead shares sum to {}", a + b))?,
            (Err(_), Err(_)) => {}
            _ => return Err(format!("case {i}: lead share defined on one side only")),
        }
        match (supporter_share(&p, cn), supporter_share(&p, us)) {
            (Ok(a), Ok(b)) => {
                check((a + b - 1.0).abs() <= 1e-12, format!("case {i}: supporter shares sum to {}", a + b))?
            }
            (Err(_), Err(_)) => {}
            _ => return Err(format!("case {i}: supporter share defined on one side only")),
        }
        match (lead_premium(&p, cn), lead_premium(&p, us)) {
            (Ok(a), Ok(b)) => {
                check((a + b).abs() <= 1e-12, format!("case {i}: premiums sum to {}", a + b))?;
                defined += 1;
            }
            (Err(_), Err(_)) => {}
            _ => return Err(format!("case {i}: premium defined on one side only")),
        }
        let k = rng.random_range(1..=10_000u64);
        let scaled = SideCounts {
            leaders: [counts.leaders[0] * k, counts.leaders[1] * k],
            supporters: [counts.supporters[0] * k, counts.supporters[1] * k],
        };
        for m in Metric::ALL {
            for side in 0..2 {
                check(
                    m.eval(&counts, side) == m.eval(&scaled, side),
                    format!("case {i}: {m} changes under scaling by {k}"),
                )?;
            }
        }
    }
    Ok(format!("10000 cases, {defined} with every metric defined"))
}

fn regression_recovery() -> Outcome {
    let (m, b) = (0.012, -24.25);
    let pts: Vec<(i32, f64)> = (2010..=2021).map(|x| (x, m * f64::from(x) + b)).collect();
    let f = ols_fit(&pts, DEFAULT_WINDOW).map_err(|e| e.to_string())?;
    check((f.slope - m).abs() <= 1e-9, format!("slope {}", f.slope))?;
    check((f.intercept - b).abs() <= 1e-9, format!("intercept {}", f.intercept))?;
    let parity = parity_year(&f, 0.5, DEFAULT_HORIZON);
    let year = parity.point_year.ok_or("no crossing")?;
    check((year - 2062.5).abs() <= 1e-6, format!("parity year {year}"))?;

    let noise = Normal::new(0.0, 0.02).expect("positive sigma");
    let trials = 1000;
    let mut hits = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + t);
        let pts: Vec<(i32, f64)> = (2010..=2021).map(|x| (x, m * f64::from(x) + b + noise.sample(&mut rng))).collect();
        let f = ols_fit(&pts, DEFAULT_WINDOW).map_err(|e| e.to_string())?;
        let (lo, hi) = confidence_band(&f, f.x_mean);
        let truth = m * f.x_mean + b;
        if lo <= truth && truth <= hi {
            hits += 1;
        }
    }
    let coverage = f64::from(hits) / trials as f64;
    check((coverage - 0.95).abs() <= 0.03, format!("coverage {coverage}"))?;
    Ok(format!("slope {:.12}, intercept {:.9}, parity {year:.6}, coverage {coverage:.3}", f.slope, f.intercept))
}

fn planted_blocks() -> [Vec<&'static str>; 3] {
    [
        vec![
            "conceive",
            "design",
            "lead",
            "supervise",
            "coordinate",
            "interpret",
            "write",
            "plan",
            "steer",
            "initiate",
        ],
        vec!["help", "assist", "prepare", "develop", "collect", "generate", "purify", "carry", "perform", "conduct"],
        vec![
            "participate",
            "provide",
            "contribute",
            "comment",
            "discuss",
            "edit",
            "review",
            "revise",
            "read",
            "approve",
        ],
    ]
}

fn planted_units(rng: &mut ChaCha8Rng, n_units: usize) -> Vec<ContributionRecord> {
    let blocks = planted_blocks();
    (0..n_units)
        .filter_map(|u| {
            let home = u % 3;
            let verbs: Vec<String> = blocks
                .iter()
                .enumerate()
                .flat_map(|(b, vs)| vs.iter().map(move |v| (b, v)))
                .filter(|(b, _)| rng.random_bool(if *b == home { 0.9 } else { 0.05 }))
                .map(|(_, v)| v.to_string())
                .collect();
            (!verbs.is_empty()).then(|| ContributionRecord { paper_id: format!("W{u}"), author_id: "A".into(), verbs })
        })
        .collect()
}

fn clustering_recovery() -> Outcome {
    let planted: BTreeSet<BTreeSet<String>> =
        planted_blocks().iter().map(|b| b.iter().map(|v| v.to_string()).collect()).collect();
    let lead_block: BTreeSet<String> = planted_blocks()[0].iter().map(|v| v.to_string()).collect();
    let seeds = SeedVerbs::default();
    let mut recovered = 0;
    for run in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(run);
        let units = planted_units(&mut rng, 300);
        let matrix = build_cooccurrence(&units).map_err(|e| e.to_string())?;
        check(matrix.len() == 30, format!("run {run}: vocabulary of {}", matrix.len()))?;
        let partition = cluster_roles(&matrix, 3, run).map_err(|e| e.to_string())?;
        if partition.blocks() != planted {
            continue;
        }
        recovered += 1;
        let model = label_clusters(&partition, &seeds).map_err(|e| format!("run {run}: {e}"))?;
        let lead: BTreeSet<String> =
            model.roles.iter().filter(|(_, r)| **r == Role::Lead).map(|(v, _)| v.clone()).collect();
        check(lead == lead_block, format!("run {run}: lead cluster {lead:?}"))?;
    }
    check(recovered >= 95, format!("recovered {recovered} of 100"))?;
    Ok(format!("recovered {recovered} of 100, lead block labeled in all"))
}

fn separable(n: usize, seed: u64) -> Vec<(LeadFeatureVector, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0f64, 1.0).expect("unit sigma");
    (0..n)
        .map(|_| {
            let lead = rng.random_bool(0.4);
            let shift = if lead { 2.0 } else { -2.0 };
            let mut count = || (10.0 + 3.0 * (shift + 0.5 * noise.sample(&mut rng))).max(0.0).round() as u64;
            let v = LeadFeatureVector {
                refs_previously_cited: count(),
                keyword_overlap: count(),
                self_citations: count(),
                career_age: count(),
                prior_pub_count: count(),
                citations_received: count(),
                unique_keywords: count(),
                first_or_last_count: count(),
                affiliation_score: (0.5 + 0.2 * (shift + 0.5 * noise.sample(&mut rng))).clamp(0.0, 1.0),
            };
            (v, if lead { 1.0 } else { 0.0 })
        })
        .collect()
}

fn model_sanity() -> Outcome {
    let examples = separable(2000, 31);
    let opts = FitOptions { seed: 4, threshold: DEFAULT_THRESHOLD, ..FitOptions::default() };
    let (model, report) = fit(&examples, &opts).map_err(|e| e.to_string())?;
    check(report.precision >= 0.95 && report.recall >= 0.95, format!("{report:?}"))?;
    let thresholds: Vec<f64> = (0..=20).map(|k| f64::from(k) / 20.0).collect();
    let sweep = model.threshold_sweep(&examples, &thresholds);
    for (w, t) in sweep.windows(2).zip(thresholds.windows(2)) {
        check(
            w[1].recall <= w[0].recall,
            format!("recall rises from {} to {} between {} and {}", w[0].recall, w[1].recall, t[0], t[1]),
        )?;
    }
    Ok(format!("held-out precision {:.3}, recall {:.3} (n={})", report.precision, report.recall, report.n()))
}

fn boundary_semantics() -> Outcome {
    check(classify(0.65, DEFAULT_THRESHOLD) == Classification::Supporter, "0.65 is not a supporter")?;
    check(classify(0.65 + 1e-9, DEFAULT_THRESHOLD) == Classification::Leader, "0.65 + 1e-9 is not a leader")?;
    Ok("0.65 supporter, 0.65 + 1e-9 leader".into())
}

fn static_tables() -> Outcome {
    let regions = RegionMap::builtin();
    let used: BTreeSet<GlobalRegion> = regions.entries().into_iter().map(|(_, r)| r).collect();
    check(
        used.len() == 13 && GlobalRegion::ALL.iter().all(|r| used.contains(r)),
        format!("{} regions in use", used.len()),
    )?;
    for (country, want) in [
        ("Namibia", GlobalRegion::Africa),
        ("Kazakhstan", GlobalRegion::CentralAsia),
        ("United Kingdom", GlobalRegion::UnitedKingdom),
    ] {
        let got = regions.assign_region(country).map_err(|e| e.to_string())?;
        check(got == want, format!("{country} maps to {got}"))?;
    }
    let bri = BriClassification::builtin();
    for (country, want) in
        [("Italy", BriClass::HighIncome), ("Vietnam", BriClass::LowIncome), ("United States", BriClass::NonSignatory)]
    {
        let got = bri.class_of(country);
        check(got == want, format!("{country} is {got:?}"))?;
    }
    let topics = TopicMap::builtin();
    let tags = topics.concepts_by_tag();
    for tag in AREA_TAGS.iter().chain(FIELD_TAGS.iter()) {
        check(tags.get(tag).is_some_and(|c| !c.is_empty()), format!("no concepts for {tag}"))?;
    }
    Ok(format!("{} countries in 13 regions, 11 areas, 6 fields", regions.len()))
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_leadshare")
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(binary()).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    check(out.status.success(), format!("{args:?} in {}: {}", dir.display(), String::from_utf8_lossy(&out.stderr)))
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn copy_fixture(to: &Path) -> Result<(), String> {
    std::fs::create_dir_all(to).map_err(|e| e.to_string())?;
    for name in ["corpus.jsonl", "contributions.jsonl", "pipeline.conf"] {
        std::fs::copy(fixture_dir().join(name), to.join(name)).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(())
}

fn outputs(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let path = e.map_err(|e| e.to_string())?.path();
            let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
            Ok((path.file_name().unwrap_or_default().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn determinism_and_scale() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    copy_fixture(&a)?;
    copy_fixture(&b)?;
    run_cli(&a, &["all"])?;
    run_cli(&b, &["all"])?;
    let (x, y) = (outputs(&a.join("out"))?, outputs(&b.join("out"))?);
    check(x.len() >= 18, format!("only {} outputs", x.len()))?;
    check(x.iter().map(|f| &f.0).eq(y.iter().map(|f| &f.0)), "different output sets")?;
    for (fa, fb) in x.iter().zip(&y) {
        check(fa.1 == fb.1, format!("{} differs between runs", fa.0))?;
    }

    let big = tmp.path().join("big");
    let corpus = generate(&SynthConfig::with_authorships(100_000, 11));
    corpus.write_to(&big).map_err(|e| e.to_string())?;
    std::fs::write(big.join("pipeline.conf"), "corpus = corpus.jsonl\ncontributions = contributions.jsonl\n")
        .map_err(|e| e.to_string())?;
    let stages = ["ingest", "train-roles", "build-profiles", "fit-model", "score", "aggregate", "forecast"];
    let start = Instant::now();
    for s in stages {
        run_cli(&big, &[s])?;
    }
    let elapsed = start.elapsed();
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    check(
        elapsed < Duration::from_secs(60),
        format!("{} authorships took {elapsed:?} ({profile} build)", corpus.n_authorships()),
    )?;
    Ok(format!(
        "{} fixture outputs identical; {} authorships ingest to forecast in {:.2}s ({profile} build)",
        x.len(),
        corpus.n_authorships(),
        elapsed.as_secs_f64()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("feature oracle equivalence", feature_oracle_equivalence),
        ("share identities", share_identities),
        ("regression recovery", regression_recovery),
        ("clustering recovery", clustering_recovery),
        ("model sanity", model_sanity),
        ("boundary semantics", boundary_semantics),
        ("static-table fidelity", static_tables),
        ("end-to-end determinism and scale", determinism_and_scale),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
