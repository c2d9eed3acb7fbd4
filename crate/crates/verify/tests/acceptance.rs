//! One line per acceptance criterion; exits nonzero if any fails.

use std::process::ExitCode;

fn main() -> ExitCode {
    let only: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let ids: Vec<u8> = if only.is_empty() {
        (1..=11).collect()
    } else {
        only
    };
    let mut failed = 0;
    for id in ids {
        let outcome = parisi_verify::run(id);
        println!("{outcome}");
        if !outcome.ok() {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
