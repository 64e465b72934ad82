use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use isoscope::format::{self, Dtype};
use isoscope::ingest::{self, Stream};
use isoscope::synth::scaled_cross_polytope;
use isoscope::{isoscore, GroupKey, ModelType, PointCloud, Side, TargetLang};

fn isoscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isoscope"))
        .args(args)
        .env_remove("ISOSCOPE_WORKERS")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn key(model: ModelType, lang: &str, layer: u32) -> GroupKey {
    GroupKey {
        model_type: model,
        dataset_tag: "wmt-large".into(),
        source_lang: "en".into(),
        target_lang: TargetLang::lang(lang),
        side: Side::Decoder,
        layer,
    }
}

/// Writes f64 streams and a manifest set; returns the manifest path.
fn write_streams(dir: &Path, name: &str, streams: &[Stream]) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    let entries: Vec<_> = streams
        .iter()
        .enumerate()
        .map(|(i, s)| ingest::write_record_stream(dir, &format!("{name}_{i}.isobr"), s, Dtype::F64).unwrap())
        .collect();
    let path = dir.join(format!("{name}.json"));
    ingest::write_manifest(&path, &entries).unwrap();
    path
}

fn bisect(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    // f is decreasing on [lo, hi].
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn profile_cloud(n: usize, a: f64, center: Option<&[f64]>) -> PointCloud {
    let mut v = vec![1.0; n];
    v[0] = a;
    scaled_cross_polytope(&v, center).unwrap()
}

/// Two-language multilingual decoder fixture whose per-language and union
/// IsoScores match the stored table scores 0.1571 (ru), 0.1014 (zh) and
/// 0.0623 (union).
fn table_shaped_fixture(dir: &Path) -> PathBuf {
    let n = 10;
    let score = |c: &PointCloud| isoscore(c).unwrap().score;
    let a_ru = bisect(1.0, 1e6, 0.1571, |a| score(&profile_cloud(n, a, None)));
    let a_zh = bisect(1.0, 1e6, 0.1014, |a| score(&profile_cloud(n, a, None)));
    let ru = profile_cloud(n, a_ru, None);
    let union_at = |d: f64| {
        let mut off = vec![0.0; n];
        off[1] = d;
        let zh = profile_cloud(n, a_zh, Some(&off));
        (zh.clone(), score(&PointCloud::concat(&[&ru, &zh]).unwrap()))
    };
    assert!(union_at(0.0).1 > 0.0623);
    let d = bisect(0.0, 1e4, 0.0623, |d| union_at(d).1);
    let zh = union_at(d).0;

    let ids: Vec<u64> = (0..ru.len() as u64).collect();
    let streams = vec![
        Stream::from_cloud(key(ModelType::Multilingual, "ru", 6), &ru, &ids).unwrap(),
        Stream::from_cloud(key(ModelType::Multilingual, "zh", 6), &zh, &ids).unwrap(),
    ];
    write_streams(dir, "multi", &streams)
}

#[test]
fn isoscore_of_five_of_ten_axes() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = vec![0.0; 10];
    v[..5].fill(1.0);
    let cloud = scaled_cross_polytope(&v, None).unwrap();
    let path = dir.path().join("cloud.isobm");
    format::save_cloud(&path, &cloud, Dtype::F64).unwrap();

    let out = isoscope(&["isoscore", "--input", p(&path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let printed: f64 = stdout(&out).trim().parse().unwrap();
    assert_eq!(stdout(&out).trim(), "0.444444");
    assert!((printed - 4.0 / 9.0).abs() < 1e-6);
    assert!(stderr(&out).contains("run manifest"));
}

#[test]
fn delta_on_table_shaped_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = table_shaped_fixture(dir.path());
    let out_dir = dir.path().join("out");
    let out = isoscope(&["delta", "--manifest", p(&manifest), "--side", "dec", "--out-dir", p(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "dec\tru\t0.094800\ndec\tzh\t0.039100\n");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("delta.json")).unwrap()).unwrap();
    assert_eq!(report["convention"], "per_language_minus_union");
    let ru = &report["entries"][0];
    assert!((ru["iso_lang"].as_f64().unwrap() - 0.1571).abs() < 1e-9);
    assert!((ru["iso_union"].as_f64().unwrap() - 0.0623).abs() < 1e-9);
    assert!(out_dir.join("run_manifest.json").exists());
}

#[test]
fn delta_from_stored_scores() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.json");
    fs::write(
        &scores,
        r#"{"side": "dec", "languages": {"ru": 0.1571, "zh": 0.1014}, "union": 0.0623}"#,
    )
    .unwrap();
    let out = isoscope(&["delta", "--scores", p(&scores)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "dec\tru\t0.094800\ndec\tzh\t0.039100\n");
}

fn aligned_pair(dir: &Path, bi_ids: &[u64]) -> (PathBuf, PathBuf) {
    let n = 4;
    let cloud = |seed: u64| {
        isoscope::synth::generate_gaussian(&isoscope::synth::CloudSpec::isotropic(n, 40, seed)).unwrap()
    };
    let ids: Vec<u64> = (0..40).collect();
    let multi = vec![
        Stream::from_cloud(key(ModelType::Multilingual, "ru", 6), &cloud(1), &ids).unwrap(),
        Stream::from_cloud(key(ModelType::Multilingual, "zh", 6), &cloud(2), &ids).unwrap(),
    ];
    let bi = vec![
        Stream::from_cloud(key(ModelType::Bilingual, "ru", 6), &cloud(3), bi_ids).unwrap(),
        Stream::from_cloud(key(ModelType::Bilingual, "zh", 6), &cloud(4), &ids).unwrap(),
    ];
    (write_streams(dir, "multi", &multi), write_streams(dir, "bi", &bi))
}

#[test]
fn compare_rejects_misaligned_sentences() {
    let dir = tempfile::tempdir().unwrap();
    let bi_ids: Vec<u64> = (1..41).collect();
    let (multi, bi) = aligned_pair(dir.path(), &bi_ids);
    let out = isoscope(&["compare", "--multi", p(&multi), "--bi", p(&bi), "--side", "dec"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("en-ru"), "{err}");
    assert!(err.contains("0") && err.contains("40"), "{err}");
}

#[test]
fn compare_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let ids: Vec<u64> = (0..40).collect();
    let (multi, bi) = aligned_pair(dir.path(), &ids);
    let run = |name: &str, workers: &str| {
        let out_dir = dir.path().join(name);
        let out = isoscope(&[
            "compare", "--multi", p(&multi), "--bi", p(&bi), "--format", "csv",
            "--baselines", "--pairs", "500", "--workers", workers, "--out-dir", p(&out_dir),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        (stdout(&out), fs::read(out_dir.join("isotropy.csv")).unwrap())
    };
    let a = run("a", "1");
    let b = run("b", "4");
    assert_eq!(a, b);
    // (multi, bi) for ru and zh, then the union row, plus a header.
    assert_eq!(String::from_utf8(a.1).unwrap().lines().count(), 6);
}

#[test]
fn layerwise_and_spectrum_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let ids: Vec<u64> = (0..60).collect();
    let mut streams = Vec::new();
    for layer in [0u32, 1, 2] {
        for (i, lang) in ["ru", "zh"].into_iter().enumerate() {
            let spec = isoscope::synth::CloudSpec::isotropic(3, 60, 10 * layer as u64 + i as u64);
            let c = isoscope::synth::generate_gaussian(&spec).unwrap();
            streams.push(Stream::from_cloud(key(ModelType::Multilingual, lang, layer), &c, &ids).unwrap());
        }
    }
    let manifest = write_streams(dir.path(), "multi", &streams);
    let out = isoscope(&["layerwise", "--manifest", p(&manifest), "--side", "dec", "--layers", "0,2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let lines: Vec<_> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[2].starts_with("0\tUNION\t"));
    assert!(lines[5].starts_with("2\tUNION\t"));

    let missing = isoscope(&["layerwise", "--manifest", p(&manifest), "--layers", "7"]);
    assert_eq!(missing.status.code(), Some(1));

    let plot = dir.path().join("plot");
    let out = isoscope(&["spectrum", "--manifest", p(&manifest), "--format", "plotdata", "--out-dir", p(&plot)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 2);
    assert!(plot.join("manifest.json").exists());
}

#[test]
fn synth_then_pool_then_score() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("g.isobm");
    let out = isoscope(&[
        "synth", "--dim", "6", "--count", "3000", "--seed", "7", "--rotation-seed", "3",
        "--output", p(&cloud),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = isoscope(&["isoscore", "--input", p(&cloud), "--baselines", "--pairs", "2000"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let first: f64 = text.lines().next().unwrap().parse().unwrap();
    assert!(first > 0.9, "{text}");
    assert!(text.contains("avg_cosine\t") && text.contains("partition\t"));

    // One record of two tokens whose mean is (1, 2).
    let records = dir.path().join("r.isobr");
    let mut w = format::RecordWriter::create(&records, Dtype::F32, 2).unwrap();
    w.write_record(0, &[0.0, 1.0, 2.0, 3.0]).unwrap();
    w.write_record(1, &[5.0, 5.0]).unwrap();
    w.finish().unwrap();
    let pooled = dir.path().join("pooled.csv");
    let out = isoscope(&["pool", "--input", p(&records), "--output", p(&pooled)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let c = format::load_cloud(&pooled).unwrap();
    assert_eq!(c.to_row_major(), vec![1.0, 2.0, 5.0, 5.0]);
}

#[test]
fn filter_corpus_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = (dir.path().join("in.en"), dir.path().join("in.ru"));
    fs::write(&src, "The cat sleeps.\n!!! ???\nThe cat sleeps.\nHello\n").unwrap();
    fs::write(&tgt, "Кот спит.\nЧто?\nКот спит.\nПривет\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = isoscope(&[
        "filter-corpus", "--src", p(&src), "--tgt", p(&tgt), "--src-lang", "en", "--tgt-lang", "ru",
        "--out-dir", p(&out_dir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(out_dir.join("kept.ru")).unwrap(), "Кот спит.\nПривет\n");
    let stats: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(stats["kept"], 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    fs::write(&tgt, "one line\n").unwrap();
    let out = isoscope(&[
        "filter-corpus", "--src", p(&src), "--tgt", p(&tgt), "--src-lang", "en", "--tgt-lang", "ru",
        "--out-dir", p(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let bogus = isoscope(&["isoscore", "--no-such-flag"]);
    assert_eq!(bogus.status.code(), Some(1));
    assert!(stderr(&bogus).contains("Usage"));

    let missing = isoscope(&["isoscore", "--input", "/nonexistent/cloud.isobm"]);
    assert_eq!(missing.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.isobm");
    fs::write(&bad, b"ISOBX1\x00\x00\x02\x00\x00\x00").unwrap();
    let out = isoscope(&["isoscore", "--input", p(&bad)]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));

    let help = isoscope(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
}
