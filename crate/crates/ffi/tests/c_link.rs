//! Builds `tests/c/smoke.c` against the generated header and the static
//! library, then runs it. Skipped when no C compiler is on the path.

use std::env;
use std::path::PathBuf;
use std::process::Command;

fn compiler() -> Option<String> {
    let candidates = env::var("CC").into_iter().chain(["cc".to_owned(), "clang".to_owned()]);
    candidates.into_iter().find(|cc| Command::new(cc).arg("--version").output().is_ok())
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // The test binary lives in <target>/<profile>/deps.
    let profile_dir = env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_owned();
    let lib = profile_dir.join("libcndp_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cndp_smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "{cc} failed to build the C smoke test");

    let run = Command::new(&out).output().unwrap();
    assert!(
        run.status.success(),
        "smoke test failed:\n{}{}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
