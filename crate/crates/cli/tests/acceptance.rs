//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use zeroext::gates::{self, GateOutcome};

fn timed(limit: Duration, gate: impl FnOnce() -> zeroext::Result<GateOutcome>) -> (bool, String) {
    let start = Instant::now();
    let outcome = gate();
    let elapsed = start.elapsed();
    match outcome {
        Ok(g) => {
            let in_time = elapsed <= limit;
            let line = format!(
                "criterion {} [{}] {}: {} ({:.1}s, limit {}s)",
                g.id,
                if g.pass && in_time { "PASS" } else { "FAIL" },
                g.name,
                g.detail,
                elapsed.as_secs_f64(),
                limit.as_secs()
            );
            (g.pass && in_time, line)
        }
        Err(e) => (false, format!("criterion ? [FAIL] error: {e}")),
    }
}

fn csv_bodies(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output dir")
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> (bool, String) {
    let start = Instant::now();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut exits = vec![];
    for dir in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_zeroext"))
            .args(["verify", "--seed", "7", "--out"])
            .arg(dir.path())
            .output()
            .expect("run verify");
        exits.push(status.status.code());
    }
    let (a, b) = (csv_bodies(dirs[0].path()), csv_bodies(dirs[1].path()));
    let same = !a.is_empty() && a == b;
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    let pass = same && exits.iter().all(|c| *c == Some(0));
    (
        pass,
        format!(
            "criterion 9 [{}] determinism: {} CSV files, {} differ; verify exit codes {:?} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            a.len(),
            differing.len(),
            exits,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let secs = Duration::from_secs;
    let results = vec![
        timed(secs(30), || gates::gate1_bbm(7)),
        timed(secs(30), gates::gate2_martingale),
        timed(secs(10), gates::gate3_indicator),
        timed(secs(300), gates::gate4_boundedness),
        timed(secs(300), gates::gate5_exponents),
        timed(secs(120), gates::gate6_adaptive),
        timed(secs(300), gates::gate7_kernels),
        timed(secs(120), gates::gate8_besov),
        determinism(),
    ];
    for (_, line) in &results {
        println!("{line}");
    }
    let failed = results.iter().filter(|(pass, _)| !pass).count();
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
