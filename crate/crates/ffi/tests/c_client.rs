//! Compiles a C program against the generated header and the static
//! library, then runs it.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "dri.h"

static const char *TEXT =
    "C_DEMO\n\nVEHICLE\nNUMBER CAPACITY\n 2 100\n\nCUSTOMER\n"
    "CUST NO. XCOORD. YCOORD. DEMAND READY TIME DUE DATE SERVICE TIME\n\n"
    " 0 0 0 0 0 1000 0\n 1 10 0 5 0 1000 0\n 2 0 10 5 0 1000 0\n 3 -10 0 5 0 1000 0\n";

int main(void) {
    DriInstance *inst = NULL;
    if (dri_instance_parse(TEXT, &inst) != DRI_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", dri_last_error_message());
        return 1;
    }
    DriSolution *sol = NULL;
    if (dri_run(inst, "{\"theta\": 2.0}", &sol) != DRI_STATUS_OK) {
        fprintf(stderr, "run: %s\n", dri_last_error_message());
        return 2;
    }
    if (dri_instance_parse(NULL, &inst) != DRI_STATUS_NULL_POINTER) return 3;
    printf("%zu %.4f %d\n", dri_solution_route_count(sol), dri_solution_total_cost(sol),
           (int)dri_solution_is_feasible(sol));
    dri_solution_free(sol);
    dri_instance_free(inst);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler available; skipping");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let target_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = target_dir.join("libdri_ffi.a");
    assert!(lib.is_file(), "static library not found at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("client");
    let out = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let line = String::from_utf8_lossy(&run.stdout);
    // Three customers on one round trip: 10 + sqrt(200) + sqrt(200) + 10.
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields[0], "1");
    let cost: f64 = fields[1].parse().unwrap();
    assert!((cost - (20.0 + 2.0 * 200f64.sqrt())).abs() < 1e-3, "{line}");
    assert_eq!(fields[2], "1");
}
