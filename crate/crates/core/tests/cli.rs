use std::fs;
use std::process::Command;

fn dri() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dri"))
}

#[test]
fn generate_solve_decompose_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.txt");
    let status = dri()
        .args(["generate", "--customers", "60", "--seed", "4", "--out"])
        .arg(&inst)
        .status()
        .unwrap();
    assert!(status.success());

    let config = dir.path().join("run.toml");
    fs::write(&config, "theta = 3.0\nq_policy = { kind = \"fixed\", q = 3 }\n").unwrap();
    let sol = dir.path().join("sol.json");
    let report = dir.path().join("report.json");
    let out = dri()
        .arg("solve")
        .arg(&inst)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&sol)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report["q"], 3);
    assert_eq!(report["feasible"], true);
    assert!(report["z_after"].as_f64().unwrap() <= report["z_before"].as_f64().unwrap());
    let sol: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sol).unwrap()).unwrap();
    assert!(sol["routes"].as_array().is_some_and(|r| !r.is_empty()));

    let parts = dir.path().join("parts");
    let status = dri()
        .arg("decompose")
        .arg(&inst)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&parts)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(parts.join("manifest.json")).unwrap()).unwrap();
    let entries = manifest.as_array().unwrap();
    assert_eq!(entries.len(), 3);
    let total: usize = entries.iter().map(|e| e["customers"].as_array().unwrap().len()).sum();
    assert_eq!(total, 60);
    for e in entries {
        assert!(parts.join(e["file"].as_str().unwrap()).is_file());
    }
}

#[test]
fn bench_grid_writes_tables_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("grid.toml"),
        r#"
seeds = [1, 2]
[[synthetic]]
customers = 40
seed = 8
[axes]
theta = [2.0, 4.0]
q = [2]
"#,
    )
    .unwrap();
    fs::write(dir.path().join("bks.csv"), "instance,bks\nSYN_40_8,500\n").unwrap();
    let run = |out: &str| {
        let o = dri()
            .current_dir(dir.path())
            .args(["bench", "--grid", "grid.toml", "--bks", "bks.csv", "--out", out])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(dir.path().join(out).join("results.csv")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a.lines().count(), 5);
    assert!(dir.path().join("a/summary.csv").is_file());
    assert!(dir.path().join("a/results.json").is_file());

    // Identical apart from the wall-clock columns.
    let strip = |csv: &str| -> Vec<String> {
        let mut reader = ::csv::Reader::from_reader(csv.as_bytes());
        let headers = reader.headers().unwrap().clone();
        reader
            .records()
            .map(|r| {
                let r = r.unwrap();
                headers
                    .iter()
                    .zip(r.iter())
                    .filter(|(h, _)| !h.starts_with("t_"))
                    .map(|(_, v)| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
    assert!(a.lines().nth(1).unwrap().contains("500"));
}

#[test]
fn failures_exit_nonzero() {
    let o = dri().args(["solve", "/nonexistent/instance.txt"]).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn oracles_subcommand_passes() {
    let o = dri().arg("oracles").output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[PASS] negative control"));
}
