use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use redescribe::dataio::{generate_synthetic, load_config, SyntheticSpec};
use redescribe::gclusrm::{run_gclusrm, GclusOptions};
use redescribe::multiview::{restart_seeds, run_restart, FrameworkOptions, TraceEntry};
use redescribe::naive::{run_naive, NaiveOptions};
use redescribe::report::{RunReport, SetFile};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_redescribe"))
        .args(args)
        .env_remove("REDESCRIBE_SEED")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small 3-view synthetic dataset plus a config with `extra` appended to `[settings]`.
fn dataset(dir: &Path, views: usize, extra: &str) -> PathBuf {
    let data = dir.join("data");
    let out = cli(&["synth", "--out", s(&data), "--entities", "60", "--views", &views.to_string(), "--attrs", "4", "--blocks", "2", "--block-size", "15", "--seed", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config = data.join("config.toml");
    let text = std::fs::read_to_string(&config).unwrap();
    let text = text.replace("[settings]", &format!("[settings]\nmax_iter = 2\n{extra}"));
    std::fs::write(&config, text).unwrap();
    config
}

fn set_constraint(config: &Path, line: &str) {
    let text = std::fs::read_to_string(config).unwrap();
    std::fs::write(config, text.replace("[constraints]", &format!("[constraints]\n{line}"))).unwrap();
}

#[test]
fn synth_writes_dataset_config_and_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "");
    let data = config.parent().unwrap();
    for f in ["v0.csv", "v1.csv", "v2.csv", "blocks.toml"] {
        assert!(data.join(f).exists(), "{f} missing");
    }
    let blocks = std::fs::read_to_string(data.join("blocks.toml")).unwrap();
    assert_eq!(blocks.matches("[[block]]").count(), 2);
    assert_eq!(load_config(&config).unwrap().dataset.n_entities(), 60);
}

#[test]
fn mine_writes_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "n_random_restarts = 2");
    let out = dir.path().join("out");
    let res = cli(&["mine", "--config", s(&config), "--out", s(&out), "--seed", "4"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["config.toml", "report.toml", "timing.toml", "restart-0/set-0.toml", "restart-1/set-0.toml"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(!out.join("trace.log").exists());
    let report = RunReport::read(&out.join("report.toml")).unwrap();
    assert_eq!((report.command.as_str(), report.seed, report.restarts), ("mine", 4, 2));
    assert_eq!(report.run.len(), 2);
    assert_eq!(report.aggregates(), report.aggregate);
    assert!(String::from_utf8_lossy(&res.stdout).contains("underlined_total_sc"));
}

#[test]
fn trace_flag_writes_a_log() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "");
    let out = dir.path().join("out");
    assert!(cli(&["mine", "--config", s(&config), "--out", s(&out), "--trace"]).status.success());
    let log = std::fs::read_to_string(out.join("trace.log")).unwrap();
    assert!(log.lines().all(|l| l.starts_with("restart=0 ")));
    assert!(log.contains("pair views=0,1"));
}

#[test]
fn seed_precedence_is_flag_then_environment_then_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "seed = 1");
    let run = |env: Option<&str>, flag: Option<&str>| {
        let out = dir.path().join("out");
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_redescribe"));
        cmd.args(["mine", "--config", s(&config), "--out", s(&out)]).env_remove("REDESCRIBE_SEED");
        if let Some(e) = env {
            cmd.env("REDESCRIBE_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert!(cmd.output().unwrap().status.success());
        RunReport::read(&out.join("report.toml")).unwrap().seed
    };
    assert_eq!(run(None, None), 1);
    assert_eq!(run(Some("5"), None), 5);
    assert_eq!(run(Some("5"), Some("8")), 8);
}

#[test]
fn evaluate_reproduces_mined_scores() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "");
    let out = dir.path().join("out");
    assert!(cli(&["mine", "--config", s(&config), "--out", s(&out)]).status.success());
    let set = out.join("restart-0/set-0.toml");
    let a = cli(&["evaluate", "--config", s(&config), s(&set)]);
    let b = cli(&["evaluate", "--config", s(&config), s(&set)]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let report = RunReport::read(&out.join("report.toml")).unwrap();
    let mut rd = csv::Reader::from_reader(a.stdout.as_slice());
    let headers = rd.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    let row = rows.iter().find(|r| &r[0] == "set_underlined").unwrap();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let u = &report.run[0].underlined;
    for (name, want) in [("j_sc", u.j_sc), ("p_sc", u.p_sc), ("aaj_sc", u.aaj_sc), ("aej_sc", u.aej_sc), ("comp_sc", u.comp_sc), ("total_sc", u.total_sc)] {
        assert_eq!(row[col(name)].parse::<f64>().unwrap(), want, "{name}");
    }
    assert_eq!(row[col("entity_coverage")].parse::<f64>().unwrap(), report.run[0].entity_coverage);
    assert_eq!(rows.len(), report.run[0].size + 2);

    // --out also writes the table
    let table_dir = dir.path().join("eval");
    assert!(cli(&["evaluate", "--config", s(&config), s(&set), "--out", s(&table_dir)]).status.success());
    assert_eq!(std::fs::read(table_dir.join("metrics.csv")).unwrap(), a.stdout);
}

#[test]
fn evaluate_empty_file_pads_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "");
    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "").unwrap();
    let out = cli(&["evaluate", "--config", s(&config), s(&empty), "--expected-size", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("set_underlined")).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(&fields[4..9], &["1", "1", "1", "1", "1"]);
    assert!(!text.contains("set_plain"));
}

#[test]
fn evaluate_names_an_unknown_attribute() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "");
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[[redescription]]\nqueries.v0 = \"0 <= ghost <= 1\"\nqueries.v1 = \"0 <= v1_a0 <= 1\"\n").unwrap();
    let out = cli(&["evaluate", "--config", s(&config), s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ghost"));
}

#[test]
fn evaluate_accepts_weights() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "");
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/table1");
    let set = fixture.join("redescription.toml");
    let cfg = fixture.join("config.toml");
    let out = cli(&["evaluate", "--config", s(&cfg), s(&set), "--weights", "1,0,0,0,0", "--expected-size", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // accuracy-only total of a perfect redescription
    assert!(text.lines().any(|l| l.starts_with("set_underlined") && l.split(',').nth(9) == Some("0")), "{text}");
    let wrong = cli(&["evaluate", "--config", s(&config), s(&set), "--weights", "1,0"]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cli(&["mine", "--config", "/nonexistent/config.toml"]);
    assert_eq!(missing.status.code(), Some(4));

    let config = dataset(dir.path(), 3, "");
    set_constraint(&config, "min_jaccard = 2.0");
    let invalid = cli(&["mine", "--config", s(&config), "--out", s(&dir.path().join("o1"))]);
    assert_eq!(invalid.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("min_jaccard"));

    let config = dataset(dir.path(), 3, "");
    let too_many = cli(&["mine", "--config", s(&config), "--pairs", "4", "--out", s(&dir.path().join("o2"))]);
    assert_eq!(too_many.status.code(), Some(2));

    set_constraint(&config, "max_pvalue = 0.0");
    for cmd in ["mine", "naive"] {
        let out = dir.path().join(format!("empty-{cmd}"));
        let empty = cli(&[cmd, "--config", s(&config), "--out", s(&out)]);
        assert_eq!(empty.status.code(), Some(3), "{cmd}");
        assert!(out.join("report.toml").exists());
    }
}

#[test]
fn pair_sampling_limits_the_visited_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "");
    let out = dir.path().join("out");
    assert!(cli(&["mine", "--config", s(&config), "--out", s(&out), "--pairs", "1", "--trace"]).status.success());
    let log = std::fs::read_to_string(out.join("trace.log")).unwrap();
    assert_eq!(log.lines().filter(|l| l.contains(" pair views=")).count(), 1);
}

#[test]
fn compare_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "n_random_restarts = 2");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(cli(&["mine", "--config", s(&config), "--out", s(&a)]).status.success());
    assert!(cli(&["naive", "--config", s(&config), "--out", s(&b)]).status.success());

    let same = cli(&["compare", s(&a), s(&a.join("report.toml"))]);
    assert!(same.status.success());
    let text = String::from_utf8(same.stdout).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[4], f[5]), ("0", "1"), "{line}");
    }

    let cmp = dir.path().join("cmp");
    assert!(cli(&["compare", s(&a), s(&b), "--out", s(&cmp)]).status.success());
    assert!(cmp.join("comparison.csv").exists());

    let config1 = dataset(&dir.path().join("one"), 3, "");
    let c = dir.path().join("c");
    assert!(cli(&["mine", "--config", s(&config1), "--out", s(&c)]).status.success());
    let mismatch = cli(&["compare", s(&a), s(&c)]);
    assert_eq!(mismatch.status.code(), Some(2));
    let single = cli(&["compare", s(&c), s(&c)]);
    assert!(single.status.success());
    assert!(String::from_utf8_lossy(&single.stderr).contains("skipped"));
    assert!(String::from_utf8_lossy(&single.stdout).contains("skipped"));
}

#[test]
fn naive_set_files_carry_join_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let config = dataset(dir.path(), 3, "");
    let out = dir.path().join("out");
    assert!(cli(&["naive", "--config", s(&config), "--out", s(&out)]).status.success());
    let file = SetFile::read(&out.join("restart-0/set-0.toml")).unwrap();
    let stats = file.stats.expect("stats block");
    assert_eq!(stats.pair_sizes.len(), 3);
    assert_eq!(stats.fold_sizes.len(), 3);
    assert_eq!(stats.output, file.redescription.len());
    assert_eq!(RunReport::read(&out.join("report.toml")).unwrap().command, "naive");
}

#[test]
fn two_view_naive_matches_the_pairwise_stage() {
    let data = generate_synthetic(&SyntheticSpec::blocks(60, 2, 4, 2, 15, 0.0, 2)).unwrap();
    let d = &data.dataset;
    let c = redescribe::dataio::Constraints::defaults(60);
    let settings = redescribe::dataio::Settings {
        max_iter: 2,
        seed: 3,
        ..Default::default()
    };
    let naive = run_naive(d, &c, &settings, 0, &NaiveOptions::default());
    let seeds = restart_seeds(&settings, 0).child_idx("pair", 1).child("gclus");
    let pairwise = run_gclusrm(d, (0, 1), &c, &settings, &seeds, &GclusOptions { keep_snapshots: false }).redescriptions;
    assert_eq!(naive.stats.pair_sizes, vec![((0, 1), pairwise.len())]);
    assert!(!naive.redescriptions.is_empty());
    // only the redundancy filter separates the two
    assert!(naive.redescriptions.iter().all(|r| pairwise.contains(r)));
    assert!(naive.redescriptions.len() <= pairwise.len());

    let fw = run_restart(d, &c, &settings, 0, &FrameworkOptions::default());
    let found = fw.trace.iter().find_map(|t| match t {
        TraceEntry::Pair { found, .. } => Some(*found),
        _ => None,
    });
    assert_eq!(found, Some(pairwise.len()));
}
