// scratch: regenerate the committed golden transcripts
fn main() {
    let report = frobtrace::oracle::run_suite();
    assert!(
        report.passed(),
        "suite must pass before freezing golden files"
    );
    let dir = std::path::Path::new("crates/core/tests/golden");
    report.write_golden(dir).unwrap();
    for (name, content) in &report.golden {
        println!("{name}: {} lines", content.lines().count());
    }
}
