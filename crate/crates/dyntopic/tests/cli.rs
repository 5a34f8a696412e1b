use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use dyntopic::formats::{read_json, to_json, DynamicModelJson, WindowModelJson};
use dyntopic_core::dynamic::{DynamicTopicModel, WindowTopicModel};
use dyntopic_core::linalg::DenseMatrix;
use dyntopic_core::nmf::Factorization;
use dyntopic_core::validation::{cluster_topics, term_stability};
use tempfile::TempDir;

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn dyntopic(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyntopic"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn synthetic_config() -> String {
    workspace().join("data/synthetic.toml").display().to_string()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn fails(out: &Output, code: i32) -> String {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// One full synthetic run shared by the pipeline tests.
fn pipeline() -> &'static Path {
    static RUN: OnceLock<TempDir> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let out = dir.path();
        let cfg = synthetic_config();
        let corpus = out.join("synth/corpus.csv");
        let taxonomy = out.join("synth/taxonomy.tsv");
        let steps: Vec<Vec<&str>> = vec![
            vec!["synth"],
            vec!["--config", &cfg, "ingest", p(&corpus)],
            vec!["--config", &cfg, "embed"],
            vec!["--config", &cfg, "window-model"],
            vec!["--config", &cfg, "dynamic-model"],
            vec!["--config", &cfg, "validate", "--taxonomy", p(&taxonomy)],
            vec!["report"],
        ];
        for step in steps {
            ok(&dyntopic(out, &step));
        }
        dir
    })
    .path()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

fn csv_header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}

#[test]
fn ingest_sorts_records_by_date() {
    let dir = TempDir::new().unwrap();
    let input = write(
        dir.path(),
        "in.csv",
        "id,date,speaker_id,speaker_name,text\n\
         c,2001-03-01,p1,,third speech text\n\
         a,1999-07-15,p2,\"Doe, J.\",\"first, with comma\"\n\
         b,1999-11-02,p1,,second speech\n",
    );
    let out = dir.path().join("out");
    let stdout = ok(&dyntopic(&out, &["ingest", p(&input)]));
    assert!(stdout.contains("3 speeches"), "{stdout}");
    let text = fs::read_to_string(out.join("corpus/speeches.jsonl")).unwrap();
    let ids: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["a", "b", "c"]);
    assert!(text.contains("\"Doe, J.\""));
}

#[test]
fn ingest_accepts_jsonl() {
    let dir = TempDir::new().unwrap();
    let input = write(
        dir.path(),
        "in.jsonl",
        "{\"id\":\"x\",\"date\":\"2005-02-01\",\"speaker_id\":\"s\",\"text\":\"fishery quota\"}\n\n\
         {\"id\":\"y\",\"date\":\"2005-08-01T09:00:00Z\",\"speaker_id\":\"s\",\"speaker_name\":null,\"text\":\"fishery\"}\n",
    );
    let out = dir.path().join("out");
    let stdout = ok(&dyntopic(&out, &["ingest", p(&input)]));
    assert!(stdout.contains("in 3 quarter windows"), "{stdout}");
}

#[test]
fn ingest_errors_name_the_record() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let missing = write(
        dir.path(),
        "missing.csv",
        "id,date,speaker_id,speaker_name,text\ns1,2000-01-01,p,,fine\ns2,2000-01-02,p,,\n",
    );
    let err = fails(&dyntopic(&out, &["ingest", p(&missing)]), 2);
    assert!(err.contains("record 2") && err.contains("`text`"), "{err}");

    let dup = write(
        dir.path(),
        "dup.csv",
        "id,date,speaker_id,speaker_name,text\ns1,2000-01-01,p,,one\ns1,2000-01-02,p,,two\n",
    );
    let err = fails(&dyntopic(&out, &["ingest", p(&dup)]), 2);
    assert!(err.contains("duplicate") && err.contains("s1"), "{err}");

    let empty = write(dir.path(), "empty.csv", "");
    let err = fails(&dyntopic(&out, &["ingest", p(&empty)]), 2);
    assert!(err.contains("no records"), "{err}");

    let header_only = write(dir.path(), "header.csv", "id,date,speaker_id,speaker_name,text\n");
    let err = fails(&dyntopic(&out, &["ingest", p(&header_only)]), 2);
    assert!(err.contains("no records"), "{err}");

    let jsonl = write(dir.path(), "bad.jsonl", "{\"id\":\"a\",\"date\":\"2000-01-01\",\"speaker_id\":\"p\",\"text\":\"t\"}\n{oops\n");
    let err = fails(&dyntopic(&out, &["ingest", p(&jsonl)]), 2);
    assert!(err.contains("record 2 (line 2)"), "{err}");

    let err = fails(&dyntopic(&out, &["ingest", "/nonexistent/file.csv"]), 2);
    assert!(err.contains("no such file"), "{err}");
}

/// One speech per month from 1999-07 to 2014-06.
fn fifteen_years(dir: &Path) -> PathBuf {
    let mut csv = String::from("id,date,speaker_id,speaker_name,text\n");
    let mut i = 0;
    for year in 1999..=2014 {
        for month in 1..=12 {
            if (year == 1999 && month < 7) || (year == 2014 && month > 6) {
                continue;
            }
            csv.push_str(&format!("s{i},{year}-{month:02}-15,p{},,speech number {i}\n", i % 7));
            i += 1;
        }
    }
    write(dir, "long.csv", &csv)
}

#[test]
fn ingest_counts_calendar_windows() {
    let dir = TempDir::new().unwrap();
    let input = fifteen_years(dir.path());
    let out = dir.path().join("out");
    ok(&dyntopic(&out, &["ingest", p(&input)]));
    let manifest: serde_json::Value = read_json(&out.join("corpus/windows.json")).unwrap();
    assert_eq!(manifest["n_windows"], 60);
    assert_eq!(manifest["windows"][0]["label"], "1999-Q3");
    assert_eq!(manifest["windows"][59]["label"], "2014-Q2");

    ok(&dyntopic(&out, &["ingest", "--granularity", "year", p(&input)]));
    let manifest: serde_json::Value = read_json(&out.join("corpus/windows.json")).unwrap();
    assert_eq!(manifest["n_windows"], 16);
}

#[test]
fn failed_run_keeps_previous_outputs() {
    let dir = TempDir::new().unwrap();
    let input = fifteen_years(dir.path());
    let out = dir.path().join("out");
    ok(&dyntopic(&out, &["ingest", p(&input)]));
    let before = fs::read(out.join("corpus/speeches.jsonl")).unwrap();
    let bad = write(dir.path(), "bad.csv", "id,date,speaker_id,speaker_name,text\nz,notadate,p,,x\n");
    let err = fails(&dyntopic(&out, &["ingest", p(&bad)]), 2);
    assert!(err.contains("unparseable date"), "{err}");
    assert_eq!(fs::read(out.join("corpus/speeches.jsonl")).unwrap(), before);
    let leftovers: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with('.'))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    fails(&dyntopic(out, &["ingest", "--bogus"]), 2);
    fails(&dyntopic(out, &["frobnicate"]), 2);
    let cfg = write(out, "bad.toml", "[window]\nk_min = 9\nk_max = 3\n");
    let err = fails(&dyntopic(out, &["--config", p(&cfg), "synth"]), 2);
    assert!(err.contains("window k range"), "{err}");
    let err = fails(&dyntopic(out, &["synth", "--burst", "3-40"]), 2);
    assert!(err.contains("does not fit"), "{err}");
}

#[test]
fn missing_prerequisites_are_reported() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let input = fifteen_years(dir.path());
    ok(&dyntopic(&out, &["ingest", p(&input)]));
    let err = fails(&dyntopic(&out, &["window-model"]), 2);
    assert!(err.contains("dyntopic embed") && err.contains("--load"), "{err}");

    let err = fails(&dyntopic(&out, &["dynamic-model"]), 2);
    assert!(err.contains("no window models"), "{err}");
    fs::create_dir_all(out.join("window-models")).unwrap();
    let err = fails(&dyntopic(&out, &["dynamic-model"]), 2);
    assert!(err.contains("no window models"), "{err}");

    let err = fails(&dyntopic(&out, &["report"]), 2);
    for f in ["time_series.csv", "descriptors.csv", "k_coherence.csv"] {
        assert!(err.contains(f), "{err}");
    }
    let err = fails(&dyntopic(&out, &["validate"]), 2);
    assert!(err.contains("model.json"), "{err}");
}

#[test]
fn embed_loads_word2vec_files() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let vectors = write(dir.path(), "v.txt", "2 2\nfish 1 0\nquota 0.5 0.5\n");
    let stdout = ok(&dyntopic(&out, &["embed", "--load", p(&vectors)]));
    assert!(stdout.contains("2 terms, dimension 2"), "{stdout}");
    assert_eq!(fs::read_to_string(out.join("embeddings/vectors.txt")).unwrap(), "2 2\nfish 1 0\nquota 0.5 0.5\n");
    let bad = write(dir.path(), "bad.txt", "2 2\nfish 1 0\nquota 0.5\n");
    let err = fails(&dyntopic(&out, &["embed", "--load", p(&bad)]), 2);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn pipeline_recovers_planted_themes() {
    let out = pipeline();
    let selection: serde_json::Value = read_json(&out.join("dynamic/selection.json")).unwrap();
    assert_eq!(selection["chosen_k"], 3);
    let model: DynamicModelJson = read_json(&out.join("dynamic/model.json")).unwrap();
    assert_eq!(model.k_prime, 3);
    model.clone().into_model().unwrap();

    let descriptors = out.join("dynamic/descriptors.csv");
    assert_eq!(csv_header(&descriptors), ["dynamic_topic", "label", "top_terms", "coherence", "frequency"]);
    let rows = csv_rows(&descriptors);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r[2].split(' ').count(), 10);
        assert!(r[3].parse::<f64>().unwrap() <= 1.0);
    }
    let mut freqs: Vec<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    freqs.sort();
    assert_eq!(freqs, ["12", "12", "3"]);

    let series = out.join("dynamic/time_series.csv");
    assert_eq!(csv_header(&series), ["dynamic_topic", "window_label", "speech_count", "weight_sum"]);
    let burst = rows.iter().find(|r| r[4] == "3").unwrap()[0].clone();
    let active: Vec<String> = csv_rows(&series)
        .into_iter()
        .filter(|r| r[0] == burst && r[2] != "0")
        .map(|r| r[1].clone())
        .collect();
    assert_eq!(active, ["2012-Q1", "2012-Q2", "2012-Q3"]);

    let contributions = out.join("dynamic/contributions.csv");
    assert_eq!(csv_header(&contributions), ["speaker_id", "dynamic_topic", "weight_sum", "count"]);
    let total: usize = csv_rows(&contributions).iter().map(|r| r[3].parse::<usize>().unwrap()).sum();
    assert_eq!(total, 1080);

    assert_eq!(csv_header(&out.join("dynamic/coherence_cv.csv")), ["dynamic_topic", "c_v"]);
    assert_eq!(csv_rows(&out.join("window-models/chosen_k.csv")).len(), 12);
}

#[test]
fn pipeline_validation_outputs() {
    let out = pipeline();
    let stability = out.join("validation/stability.csv");
    assert_eq!(csv_header(&stability), ["dynamic_topic", "mean_jaccard", "n_members"]);
    for r in csv_rows(&stability) {
        let j: f64 = r[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&j));
    }
    let newick = fs::read_to_string(out.join("validation/dendrogram.nwk")).unwrap();
    assert!(newick.trim_end().ends_with(';'));
    for leaf in ["D0", "D1", "D2"] {
        assert!(newick.contains(leaf), "{newick}");
    }
    let dendrogram: serde_json::Value = read_json(&out.join("validation/dendrogram.json")).unwrap();
    assert_eq!(dendrogram["merges"].as_array().unwrap().len(), 2);

    // each planted theme matches the dynamic topic carrying its vocabulary
    let matches = csv_rows(&out.join("validation/taxonomy_matches.csv"));
    assert_eq!(matches.len(), 3);
    let topics: std::collections::BTreeSet<&str> = matches.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(topics.len(), 3);
    for m in &matches {
        assert!(m[3].parse::<f64>().unwrap() > 0.9, "{m:?}");
    }
}

#[test]
fn report_has_one_chart_per_topic_and_is_idempotent() {
    let out = pipeline();
    let html = fs::read_to_string(out.join("report/report.html")).unwrap();
    assert_eq!(html.matches("<div class=\"topic\"").count(), 3);
    // the only URL allowed is the SVG namespace
    let stripped = html.replace("xmlns=\"http://www.w3.org/2000/svg\"", "");
    assert!(!stripped.contains("http://") && !stripped.contains("https://"));
    assert!(!html.contains("<script"));

    let copy = TempDir::new().unwrap();
    for sub in ["dynamic", "window-models", "validation"] {
        fs::create_dir_all(copy.path().join(sub)).unwrap();
        for e in fs::read_dir(out.join(sub)).unwrap() {
            let e = e.unwrap();
            fs::copy(e.path(), copy.path().join(sub).join(e.file_name())).unwrap();
        }
    }
    ok(&dyntopic(copy.path(), &["report"]));
    ok(&dyntopic(copy.path(), &["report"]));
    assert_eq!(fs::read(copy.path().join("report/report.html")).unwrap(), html.as_bytes());

    ok(&dyntopic(copy.path(), &["report", "--topics", "0,2"]));
    let filtered = fs::read_to_string(copy.path().join("report/report.html")).unwrap();
    assert_eq!(filtered.matches("<div class=\"topic\"").count(), 2);
    assert!(filtered.contains("id=\"topic-0\"") && filtered.contains("id=\"topic-2\""));
    assert!(!filtered.contains("id=\"topic-1\""));
    let err = fails(&dyntopic(copy.path(), &["report", "--topics", "7"]), 2);
    assert!(err.contains("unknown dynamic topics 7"), "{err}");
}

#[test]
fn window_models_are_reproducible() {
    let out = pipeline();
    let again = TempDir::new().unwrap();
    for sub in ["corpus", "embeddings"] {
        fs::create_dir_all(again.path().join(sub)).unwrap();
        for e in fs::read_dir(out.join(sub)).unwrap() {
            let e = e.unwrap();
            fs::copy(e.path(), again.path().join(sub).join(e.file_name())).unwrap();
        }
    }
    let cfg = synthetic_config();
    ok(&dyntopic(again.path(), &["--config", &cfg, "--threads", "1", "window-model"]));
    for e in fs::read_dir(out.join("window-models")).unwrap() {
        let e = e.unwrap();
        let other = fs::read(again.path().join("window-models").join(e.file_name())).unwrap();
        assert!(fs::read(e.path()).unwrap() == other, "{:?} differs", e.file_name());
    }
}

#[test]
fn sparse_windows_are_skipped_with_warning() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    let cfg = synthetic_config();
    ok(&dyntopic(out, &["synth", "--themes", "2", "--windows", "2", "--burst", "none"]));
    let corpus = out.join("synth/corpus.csv");
    let mut text = fs::read_to_string(&corpus).unwrap();
    text.push_str("lone,2011-03-01,L0001,,a single late speech\n");
    fs::write(&corpus, text).unwrap();
    ok(&dyntopic(out, &["--config", &cfg, "ingest", p(&corpus)]));
    ok(&dyntopic(out, &["--config", &cfg, "embed"]));
    let run = dyntopic(out, &["--config", &cfg, "window-model"]);
    ok(&run);
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("window 2011-Q1 skipped"), "{stderr}");
    assert_eq!(csv_rows(&out.join("window-models/chosen_k.csv")).len(), 2);
    assert!(!out.join("window-models/window-004.json").exists());
}

#[test]
fn planted_four_topic_windows_choose_four() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    let cfg = synthetic_config();
    ok(&dyntopic(out, &["synth", "--themes", "4", "--windows", "2", "--burst", "none", "--docs-per-theme", "60"]));
    ok(&dyntopic(out, &["--config", &cfg, "ingest", p(&out.join("synth/corpus.csv"))]));
    ok(&dyntopic(out, &["--config", &cfg, "embed"]));
    ok(&dyntopic(out, &["--config", &cfg, "window-model", "--k-min", "2", "--k-max", "8"]));
    let rows = csv_rows(&out.join("window-models/chosen_k.csv"));
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r[4], "4", "{r:?}");
    }
}

fn fixture_window(index: usize, h_rows: &[Vec<f64>], vocabulary: &[&str]) -> WindowTopicModel {
    let k = h_rows.len();
    let w = DenseMatrix::from_rows(&vec![vec![1.0; k]; 2]).unwrap();
    let h = DenseMatrix::from_rows(h_rows).unwrap();
    let f = Factorization { w, h, k, iterations_run: 0, final_error: 0.0, objective_trace: vec![0.0] };
    WindowTopicModel::new(
        index,
        format!("W{index}"),
        vec![format!("d{index}a"), format!("d{index}b")],
        vocabulary.iter().map(|s| s.to_string()).collect(),
        f,
        10,
    )
    .unwrap()
}

#[test]
fn validate_matches_library_on_fixture() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    let vocab = ["alpha", "beta", "gamma", "delta", "eps", "zeta"];
    // every window repeats the same two topics: identical descriptors per dynamic topic
    let h = vec![vec![3.0, 2.0, 1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 3.0, 2.0, 1.0]];
    let models: Vec<WindowTopicModel> = (0..3).map(|i| fixture_window(i, &h, &vocab)).collect();
    fs::create_dir_all(out.join("window-models")).unwrap();
    for m in &models {
        let path = out.join(format!("window-models/window-{:03}.json", m.window_index));
        fs::write(path, to_json(&WindowModelJson::from(m))).unwrap();
    }
    let rows: Vec<(usize, usize)> = (0..3).flat_map(|w| [(w, 0), (w, 1)]).collect();
    let u = DenseMatrix::from_rows(&rows.iter().map(|&(_, t)| if t == 0 { vec![1.0, 0.1] } else { vec![0.1, 1.0] }).collect::<Vec<_>>()).unwrap();
    let v = DenseMatrix::from_rows(&h).unwrap();
    let columns: Vec<String> = vocab.iter().map(|s| s.to_string()).collect();
    let dtm = DynamicTopicModel::from_factors(rows, columns, u, v, 20).unwrap();
    fs::create_dir_all(out.join("dynamic")).unwrap();
    fs::write(out.join("dynamic/model.json"), to_json(&DynamicModelJson::new(&dtm, 20))).unwrap();

    let run = dyntopic(out, &["validate"]);
    ok(&run);
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("taxonomy matching skipped"), "{stderr}");
    assert!(!out.join("validation/taxonomy_matches.csv").exists());

    let expected = term_stability(&dtm, &models, 10).unwrap();
    let rows = csv_rows(&out.join("validation/stability.csv"));
    assert_eq!(rows.len(), expected.len());
    for (r, e) in rows.iter().zip(&expected) {
        assert_eq!(r[0], e.dynamic_topic.to_string());
        assert_eq!(r[1].parse::<f64>().unwrap(), 1.0);
        assert_eq!(e.mean_jaccard, Some(1.0));
        assert_eq!(r[2], "3");
    }
    let newick = fs::read_to_string(out.join("validation/dendrogram.nwk")).unwrap();
    assert_eq!(newick.trim_end(), cluster_topics(&dtm).unwrap().newick());
}
