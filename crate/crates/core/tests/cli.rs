use std::process::{Command, Output};

fn smxim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smxim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn complexity_prints_table_and_reference_row() {
    let o = smxim(&["complexity", "--config", "full-2x2-bpsk"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("ZF        total"));
    assert!(text.contains("21568512"));
    assert!(text.contains("reference totals, BPSK (2,2): ML 3.29067e76  ZF 4.53561e8  Deep 4.53282e8"));
}

#[test]
fn ber_without_noise_has_zero_errors() {
    let o = smxim(&["ber", "--config", "tiny", "--no-noise", "--snr-db", "10", "--max-bits", "5000", "--min-bits", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row.split(',').nth(3), Some("0"), "{row}");
    }
}

#[test]
fn train_twice_with_same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.model", "b.model"].iter().map(|n| dir.path().join(n)).collect();
    for p in &paths {
        let o = smxim(&["train", "--config", "tiny", "--seed", "7", "--size", "2000", "--epochs", "2", "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("epoch 2/2 loss"));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    assert!(a.starts_with(b"smximodel v1\n"));

    let csv = dir.path().join("ber.csv");
    let o = smxim(&[
        "ber", "--config", "tiny", "--model", paths[0].to_str().unwrap(), "--receivers", "zf,deep", "--snr-db", "10",
        "--min-bits", "0", "--out", csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().nth(2).unwrap().starts_with("deep,10,"));
}

#[test]
fn gen_data_then_train_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.csv");
    let model = dir.path().join("m.model");
    let o = smxim(&["gen-data", "--config", "tiny", "--size", "300", "--out", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&data).unwrap().lines().count(), 301);
    let o = smxim(&["train", "--config", "tiny", "--data", data.to_str().unwrap(), "--epochs", "1", "--quiet", "--out", model.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).contains("epoch"));
}

#[test]
fn dump_table_matches_documented_rows() {
    let o = smxim(&["dump-table"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "bits,indices\n00,1 2\n01,2 3\n10,3 4\n11,1 4\n");
}

#[test]
fn errors_are_one_line_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "[system]\nt=2\nr=2\nk=4\nm=1\nrolloff=0.5\n[im]\nu=4\nv=2\nq=2\n[channel]\nn_ch=8\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["complexity", "--config", "tiny", "--bogus"],
        vec!["ber", "--config", "/no/such/file.toml"],
        vec!["ber", "--config", "tiny", "--receivers", "deep"],
        vec!["ber", "--config", "tiny", "--receivers", "zf", "--model", "/no/such.model"],
        vec!["complexity", "--config", bad_cfg.to_str().unwrap()],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = smxim(&args);
        assert!(!o.status.success(), "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with("error: "), "{args:?}: {err}");
    }
}
