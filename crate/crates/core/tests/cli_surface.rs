//! End-to-end exercises of the CLI subcommands through the public entry
//! point, including the cache idempotence and exit-code contracts.

use frobtrace::cli::{main_entry, EXIT_OK, EXIT_USAGE};

fn tmpdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("frobtrace-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn sweep_is_idempotent_on_cache() {
    let dir = tmpdir("sweep");
    let cache = dir.join("sweep.cache");
    let cache_s = cache.to_str().unwrap();
    let args = [
        "frobtrace",
        "sweep",
        "--family",
        "3",
        "11",
        "--x",
        "2000",
        "--cache",
        cache_s,
    ];
    assert_eq!(main_entry(args), EXIT_OK);
    let first = std::fs::read(&cache).unwrap();
    assert!(first.starts_with(b"# frobtrace-cache v1\n"));
    assert_eq!(main_entry(args), EXIT_OK);
    assert_eq!(
        std::fs::read(&cache).unwrap(),
        first,
        "cache hit must be byte-identical"
    );

    // mismatched header refuses without --force
    let other = [
        "frobtrace",
        "sweep",
        "--family",
        "5",
        "13",
        "--x",
        "2000",
        "--cache",
        cache_s,
    ];
    assert_ne!(main_entry(other), EXIT_OK);
    let forced = [
        "frobtrace",
        "sweep",
        "--family",
        "5",
        "13",
        "--x",
        "2000",
        "--cache",
        cache_s,
        "--force",
    ];
    assert_eq!(main_entry(forced), EXIT_OK);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn profile_constant_predict_run() {
    assert_eq!(
        main_entry(["frobtrace", "profile", "--family", "3", "11"]),
        EXIT_OK
    );
    assert_eq!(
        main_entry([
            "frobtrace",
            "constant",
            "--family",
            "3",
            "11",
            "--T",
            "1",
            "--L",
            "2000"
        ]),
        EXIT_OK
    );
    assert_eq!(
        main_entry([
            "frobtrace",
            "predict",
            "--family",
            "3",
            "11",
            "--T",
            "-12",
            "--x",
            "50000",
            "--L",
            "2000",
        ]),
        EXIT_OK
    );
    // zero trace is a usage error
    assert_eq!(
        main_entry(["frobtrace", "constant", "--family", "3", "11", "--T", "0"]),
        EXIT_USAGE
    );
    // uncertified pair without attestation is a computation failure
    assert_eq!(
        main_entry([
            "frobtrace",
            "constant",
            "--family",
            "3",
            "7",
            "--T",
            "1",
            "--L",
            "2000"
        ]),
        frobtrace::cli::EXIT_COMPUTE
    );
    // attestation makes it work; disc(E_5) = -10805 = -5 * 2161, so the
    // truncation has to clear the conductor prime 2161
    let attested = |trunc: &str| {
        main_entry([
            "frobtrace",
            "constant",
            "--curve1",
            "1,0,0,0,3",
            "--curve2",
            "1,0,0,0,5",
            "--attest-serre-pair",
            "--T",
            "1",
            "--L",
            trunc,
        ])
    };
    assert_eq!(
        attested("2000"),
        EXIT_USAGE,
        "truncation below a conductor prime"
    );
    assert_eq!(attested("3000"), EXIT_OK);
}

#[test]
fn oracle_subcommand_passes_and_writes_golden() {
    let dir = tmpdir("golden");
    let out = dir.join("golden");
    assert_eq!(
        main_entry(["frobtrace", "oracle", "--golden-out", out.to_str().unwrap()]),
        EXIT_OK
    );
    for f in ["pair_counts.csv", "exceptional_counts.csv", "variants.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn environment_overrides_defaults() {
    // resolve() consults FROBTRACE_<KEY> between flags and config file
    std::env::set_var("FROBTRACE_CLI_SURFACE_PROBE", "4242");
    let s = frobtrace::cli::Settings::load();
    let v: u64 = s.resolve(None, "cli_surface_probe", 7).unwrap();
    assert_eq!(v, 4242);
    let v: u64 = s.resolve(Some(1), "cli_surface_probe", 7).unwrap();
    assert_eq!(v, 1);
    std::env::remove_var("FROBTRACE_CLI_SURFACE_PROBE");
}
