use std::collections::BTreeSet;
use std::fs;

use isoscope_corpus::{
    run_files, FilterConfig, Pipeline, PipelineOutput, ScriptTable, Step, WhitespacePunctTokenizer,
};
use proptest::prelude::*;

fn run(config: &FilterConfig, src: &[String], tgt: &[String]) -> PipelineOutput {
    let scripts = ScriptTable::default();
    Pipeline {
        config,
        src_lang: "en",
        tgt_lang: "ru",
        scripts: &scripts,
        tokenizer: &WhitespacePunctTokenizer,
        external: None,
    }
    .run(src, tgt)
    .unwrap()
}

fn kept_lines(out: &PipelineOutput) -> BTreeSet<usize> {
    out.kept().map(|p| p.line).collect()
}

fn only(steps: &[Step]) -> FilterConfig {
    FilterConfig {
        enabled_steps: steps.iter().copied().collect(),
        ..Default::default()
    }
}

// Short lines drawn from a small alphabet so that duplicates, punctuation
// runs, foreign letters and lopsided lengths all occur often.
fn line(letters: &'static str) -> impl Strategy<Value = String> {
    let pieces: Vec<String> = [letters, "!?", "...", "x", "д", ","]
        .iter()
        .map(|s| s.to_string())
        .collect();
    prop::collection::vec(prop::sample::select(pieces), 0..8).prop_map(|v| v.join(" "))
}

fn bitext() -> impl Strategy<Value = (Vec<String>, Vec<String>)> {
    prop::collection::vec((line("cat"), line("кот")), 0..40).prop_map(|v| v.into_iter().unzip())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn idempotent((src, tgt) in bitext()) {
        let config = FilterConfig::default();
        let first = run(&config, &src, &tgt);
        let (ks, kt): (Vec<String>, Vec<String>) =
            first.kept().map(|p| (p.src.clone(), p.tgt.clone())).unzip();
        let second = run(&config, &ks, &kt);
        prop_assert_eq!(second.stats.kept, ks.len());
        prop_assert_eq!(second.stats.removed.total(), 0);
    }

    #[test]
    fn kept_is_intersection_of_step_passes((src, tgt) in bitext()) {
        let all = kept_lines(&run(&FilterConfig::default(), &src, &tgt));
        let p = kept_lines(&run(&only(&[Step::Punctuation]), &src, &tgt));
        let d = kept_lines(&run(&only(&[Step::Punctuation, Step::Dedup]), &src, &tgt));
        let s = kept_lines(&run(&only(&[Step::Script]), &src, &tgt));
        let l = kept_lines(&run(&only(&[Step::Length]), &src, &tgt));
        let expected: BTreeSet<usize> = p
            .iter()
            .filter(|i| d.contains(i) && s.contains(i) && l.contains(i))
            .copied()
            .collect();
        prop_assert_eq!(all, expected);
    }
}

#[test]
fn all_clean_corpus_has_no_removals() {
    let src: Vec<String> = (0..50).map(|i| format!("The cat number {i} sleeps.")).collect();
    let tgt: Vec<String> = (0..50).map(|i| format!("Кот номер {i} спит.")).collect();
    let out = run(&FilterConfig::default(), &src, &tgt);
    assert_eq!(out.stats.removed.total(), 0);
    assert_eq!(out.stats.kept, 50);
}

#[test]
fn empty_files_give_empty_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = (dir.path().join("in.en"), dir.path().join("in.ru"));
    fs::write(&src, "").unwrap();
    fs::write(&tgt, "").unwrap();
    let config = FilterConfig::default();
    let scripts = ScriptTable::default();
    let p = Pipeline {
        config: &config,
        src_lang: "en",
        tgt_lang: "ru",
        scripts: &scripts,
        tokenizer: &WhitespacePunctTokenizer,
        external: None,
    };
    let (out, files) = run_files(&p, &src, &tgt, &dir.path().join("out")).unwrap();
    assert_eq!(out.stats.input_pairs, 0);
    assert_eq!(out.stats.kept, 0);
    assert_eq!(fs::read_to_string(files.kept_src).unwrap(), "");
    assert_eq!(fs::read_to_string(files.rejected).unwrap(), "line\tstep\treason\tsrc\ttgt\n");
}

#[test]
fn output_bytes_are_deterministic() {
    let fixtures = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden");
    let config = FilterConfig::default();
    let scripts = ScriptTable::default();
    let p = Pipeline {
        config: &config,
        src_lang: "en",
        tgt_lang: "ru",
        scripts: &scripts,
        tokenizer: &WhitespacePunctTokenizer,
        external: None,
    };
    let read_all = |dir: &std::path::Path| -> Vec<Vec<u8>> {
        ["kept.en", "kept.ru", "rejected.tsv", "stats.json"]
            .iter()
            .map(|f| fs::read(dir.join(f)).unwrap())
            .collect()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_files(&p, &fixtures.join("src.en"), &fixtures.join("tgt.ru"), a.path()).unwrap();
    run_files(&p, &fixtures.join("src.en"), &fixtures.join("tgt.ru"), b.path()).unwrap();
    assert_eq!(read_all(a.path()), read_all(b.path()));
}

#[test]
fn misaligned_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = (dir.path().join("a"), dir.path().join("b"));
    fs::write(&src, "one\ntwo\n").unwrap();
    fs::write(&tgt, "один\n").unwrap();
    let config = FilterConfig::default();
    let scripts = ScriptTable::default();
    let p = Pipeline {
        config: &config,
        src_lang: "en",
        tgt_lang: "ru",
        scripts: &scripts,
        tokenizer: &WhitespacePunctTokenizer,
        external: None,
    };
    let err = run_files(&p, &src, &tgt, dir.path()).unwrap_err();
    assert!(matches!(
        err,
        isoscope_corpus::CorpusError::MisalignedBitext { src_lines: 2, tgt_lines: 1 }
    ));
}
