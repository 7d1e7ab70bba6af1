use std::path::PathBuf;

use fairforge::mtclient::{MockConfig, MockLm, MockTranslator};
use fairforge::pipeline::{run_pipeline, PipelineConfig, PipelineReport, Preset};
use fairforge::textcore::{read_jsonl, Origin, ParallelRecord};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(preset: Preset, input: &str, bias: f64, dir: &std::path::Path) -> PipelineReport {
    let mut cfg = PipelineConfig::new(preset, fixture(input), dir);
    cfg.seed = 1;
    let mt = MockTranslator::new(MockConfig {
        seed: 1,
        bias,
        ..MockConfig::default()
    });
    run_pipeline(&cfg, &mt, &MockLm).unwrap()
}

#[test]
fn merged_preset_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(Preset::RoundtripMerged, "de_corpus_500.txt", 0.9, dir.path());
    let names: Vec<&str> = r.manifest.bundles.iter().map(|b| b.name.as_str()).collect();
    assert_eq!(names, ["masc", "copy"]);
    assert!(r.manifest.non_gendered > 0);
    assert_eq!(r.detect.gender_fair + r.detect.non_gendered, r.filter.kept);
    let rt = r.roundtrip.unwrap();
    assert_eq!(rt.locality_violations, 0);
    let train: Vec<ParallelRecord> = read_jsonl(&dir.path().join("train.jsonl")).unwrap();
    assert_eq!(train.len(), r.manifest.total);
    assert!(train.iter().any(|t| t.origin == Origin::NonGendered));
    for name in ["filtered.txt", "detected.jsonl", "roundtrip_trace.jsonl", "plan.cfg", "manifest.json", "report.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    assert!(std::fs::read_dir(dir.path())
        .unwrap()
        .all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".partial")));
}

#[test]
fn presets_are_reproducible() {
    for preset in [Preset::RoundtripAll, Preset::BackwardEn] {
        let input = if preset == Preset::BackwardEn {
            "en_corpus.txt"
        } else {
            "de_corpus_500.txt"
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = run(preset, input, 0.9, a.path());
        let rb = run(preset, input, 0.9, b.path());
        assert_eq!(ra, rb);
        for f in ["train.jsonl", "manifest.json"] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap(),
                "{} {f}",
                preset.as_str()
            );
        }
    }
}

#[test]
fn backward_en_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(Preset::BackwardEn, "en_corpus.txt", 0.9, dir.path());
    let names: Vec<&str> = r.manifest.bundles.iter().map(|b| b.name.as_str()).collect();
    assert_eq!(names, ["masc", "fem", "copy"]);
    assert!(r.roundtrip.is_none());
    assert!(r.detect.gender_fair >= 25, "{:?}", r.detect);
}

#[test]
fn feminine_and_lm_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(Preset::RoundtripAll, "de_corpus_500.txt", 0.9, dir.path());
    let names: Vec<&str> = r.manifest.bundles.iter().map(|b| b.name.as_str()).collect();
    assert_eq!(names, ["masc", "fem", "copy", "lm_masc", "lm_fem", "lm_copy"]);
    assert!(r.lm.unwrap().kept > 0);
    let tc = r.roundtrip.unwrap().feminine_tag.unwrap();
    assert!(tc.feminine > 0 && tc.masculine > 0, "{tc:?}");
}

#[test]
fn missing_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::new(Preset::RoundtripPlain, dir.path().join("nope.txt"), dir.path());
    assert!(run_pipeline(&cfg, &MockTranslator::default(), &MockLm).is_err());
}
