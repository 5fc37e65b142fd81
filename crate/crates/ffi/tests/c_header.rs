//! Compiles and runs a small C program against the generated header and
//! the static library. Skipped when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "pprank.h"

int main(void) {
    double w[3];
    if (pprank_attention_weights(3, w) != PPRANK_STATUS_OK) return 1;
    double xi[3] = {0.0, 0.0, 0.0};
    double r_hat[3] = {0.5, 0.3, 0.2};
    size_t original[3] = {0, 1, 2};
    PprankProblem *p = NULL;
    if (pprank_problem_new(xi, r_hat, w, original, 3, 0.8, 3, &p) != PPRANK_STATUS_OK) return 2;
    size_t order[3];
    double obj;
    if (pprank_problem_solve(p, order, &obj) != PPRANK_STATUS_OK) return 3;
    pprank_problem_free(p);
    uint64_t raw;
    if (pprank_encode(1e300, 20, &raw) != PPRANK_STATUS_OUT_OF_RANGE) return 4;
    if (pprank_last_error_message() == NULL) return 5;
    printf("%zu %zu %zu\n", order[0], order[1], order[2]);
    return 0;
}
"#;

fn have(cmd: &str) -> bool {
    Command::new(cmd)
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

#[test]
fn c_program_links_and_runs() {
    if !have("cc") {
        eprintln!("no C compiler; skipping");
        return;
    }
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libpprank_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0 1 2");
}
