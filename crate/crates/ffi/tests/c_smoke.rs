//! Compiles and runs a small C program against the generated header and the
//! static library, exercising the bindings from the consumer side. Skips
//! quietly when no C compiler is available.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include "frobtrace.h"
#include <stdio.h>
#include <string.h>

int main(void) {
    if (strlen(frob_version()) == 0) return 1;

    int64_t disc = 0;
    if (frob_discriminant(1, 0, 0, 0, 3, &disc) != FROB_STATUS_OK) return 2;
    if (disc != -3891) return 3;

    int64_t trace = 0;
    if (frob_ap(0, 0, 0, 1, 1, 5, &trace) != FROB_STATUS_OK) return 4;
    if (trace != -3) return 5;

    if (frob_serre_family_check(3, 11) != 1) return 6;

    FrobProfile *profile = NULL;
    if (frob_profile_family(3, 11, &profile) != FROB_STATUS_OK) return 7;

    uint64_t m_a = 0;
    if (frob_profile_conductor(profile, &m_a) != FROB_STATUS_OK) return 8;
    if (m_a != 8303394ull) return 9;

    FrobConstant c;
    if (frob_constant(profile, 1, 2000, &c) != FROB_STATUS_OK) return 10;
    if (!(c.c > 0.4 && c.c < 0.5)) return 11;

    double pred = 0.0;
    if (frob_predict(profile, 1, 100000, 2000, &pred) != FROB_STATUS_OK) return 12;
    if (!(pred > 5.0 && pred < 40.0)) return 13;

    frob_profile_free(profile);
    printf("c smoke ok: disc=%lld mA=%llu C=%.6f pred=%.3f\n",
           (long long)disc, (unsigned long long)m_a, c.c, pred);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let cc = ["cc", "clang", "gcc"]
        .iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .copied();
    let Some(cc) = cc else {
        eprintln!("no C compiler found; skipping");
        return;
    };

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    // the staticlib lands next to this test binary's deps directory
    let target_dir = PathBuf::from(std::env::var("CARGO_TARGET_DIR").unwrap_or_else(|_| {
        manifest
            .parent()
            .unwrap()
            .parent()
            .unwrap()
            .join("target")
            .to_str()
            .unwrap()
            .into()
    }));
    let lib_dir = target_dir.join("debug");
    assert!(
        lib_dir.join("libfrobtrace_ffi.a").exists(),
        "staticlib not built at {}",
        lib_dir.display()
    );

    let dir = std::env::temp_dir().join(format!("frobtrace-csmoke-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("smoke.c");
    let bin = dir.join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();

    let out = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lfrobtrace_ffi")
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .output()
        .expect("compiler runs");
    assert!(
        out.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let run = Command::new(&bin).output().expect("smoke binary runs");
    assert!(
        run.status.success(),
        "smoke exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    println!("{}", String::from_utf8_lossy(&run.stdout).trim());
    std::fs::remove_dir_all(&dir).unwrap();
}
