use std::path::Path;

use leadshare::pipeline::{Pipeline, PipelineConfig, PipelineError, Stage, StageOutcome, SweepAxis, FIGURES};
use leadshare::synth::{generate, SynthConfig};

fn setup(dir: &Path, n_papers: usize, extra: &str) -> PipelineConfig {
    let corpus = generate(&SynthConfig { n_papers, ..SynthConfig::default() });
    corpus.write_to(&dir.join("input")).unwrap();
    let text = format!(
        "corpus = input/corpus.jsonl\ncontributions = input/contributions.jsonl\noutput_dir = out\nseed = 3\n{extra}"
    );
    std::fs::write(dir.join("pipeline.conf"), &text).unwrap();
    PipelineConfig::load(&dir.join("pipeline.conf")).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn all_stages_then_cached() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = setup(tmp.path(), 600, "");
    let p = Pipeline::new(cfg).unwrap();
    let first = p.run_all().unwrap();
    assert!(first.iter().all(|(_, o)| *o == StageOutcome::Ran));
    let second = p.run_all().unwrap();
    assert!(second.iter().all(|(_, o)| *o == StageOutcome::Cached), "{second:?}");
    for f in FIGURES {
        assert!(read(tmp.path(), f).starts_with("group,pair,metric,filter,kind,year,value,lower,upper\n"));
    }
    let forecast = read(tmp.path(), "forecast.tsv");
    assert!(forecast.lines().any(|l| l.starts_with("China/U.S.\tChina\tlead_share\tall\t")), "{forecast}");
    let manifest = p.manifest().unwrap();
    for s in Stage::ALL {
        let e = manifest.get(s.as_str()).unwrap();
        assert_eq!(e.outputs.len(), s.outputs().len());
    }
}

#[test]
fn missing_and_stale_upstream() {
    let tmp = tempfile::tempdir().unwrap();
    let p = Pipeline::new(setup(tmp.path(), 300, "")).unwrap();
    let err = p.run_stage(Stage::Score).unwrap_err();
    assert!(matches!(err, PipelineError::MissingUpstream { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
    p.run_all().unwrap();
    std::fs::remove_file(tmp.path().join("out/model.txt")).unwrap();
    let err = p.run_stage(Stage::Score).unwrap_err();
    assert!(matches!(err, PipelineError::MissingUpstream { ref artifact, .. } if artifact == "model.txt"));
    assert_eq!(err.exit_code(), 3);
    p.run_stage(Stage::FitModel).unwrap();
    std::fs::write(tmp.path().join("out/counts.tsv"), "tampered").unwrap();
    let err = p.run_stage(Stage::Forecast).unwrap_err();
    assert!(matches!(err, PipelineError::HashMismatch { .. }), "{err}");
}

#[test]
fn threshold_change_recomputes_downstream_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = setup(tmp.path(), 400, "");
    Pipeline::new(cfg.clone()).unwrap().run_all().unwrap();
    let before = Pipeline::new(cfg.clone()).unwrap().manifest().unwrap();
    let changed = PipelineConfig { threshold: 0.70, ..cfg };
    let p = Pipeline::new(changed).unwrap();
    let outcomes = p.run_all().unwrap();
    for (stage, outcome) in outcomes {
        let downstream = stage >= Stage::Score;
        assert_eq!(outcome == StageOutcome::Ran, downstream, "{stage}");
    }
    let after = p.manifest().unwrap();
    for s in [Stage::Ingest, Stage::TrainRoles, Stage::BuildProfiles, Stage::FitModel] {
        assert_eq!(before.get(s.as_str()), after.get(s.as_str()));
    }
    assert_ne!(before.get("score").unwrap().outputs, after.get("score").unwrap().outputs);
}

#[test]
fn sweep_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let p = Pipeline::new(setup(tmp.path(), 600, "")).unwrap();
    p.run_all().unwrap();
    let (path, _) = p.sweep(SweepAxis::Threshold, &[]).unwrap();
    let empty = std::fs::read_to_string(&path).unwrap();
    assert_eq!(empty.lines().count(), 1);
    let (path, _) = p.sweep(SweepAxis::IfBin, &[0.0, 1.0]).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("0\t") || l.starts_with("1\t")));
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 3);
    assert!(p.sweep(SweepAxis::IfBin, &[9.0]).is_err());
}

#[test]
fn worker_count_does_not_change_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = setup(tmp.path(), 500, "");
    let one = PipelineConfig { workers: 1, output_dir: tmp.path().join("w1"), ..cfg.clone() };
    let four = PipelineConfig { workers: 4, output_dir: tmp.path().join("w4"), ..cfg };
    Pipeline::new(one).unwrap().run_all().unwrap();
    Pipeline::new(four).unwrap().run_all().unwrap();
    for s in Stage::ALL {
        for f in s.outputs() {
            let a = std::fs::read(tmp.path().join("w1").join(f)).unwrap();
            let b = std::fs::read(tmp.path().join("w4").join(f)).unwrap();
            assert!(a == b, "{f} differs");
        }
    }
}
