use std::process::ExitCode;

/// Runs every criterion, or only the ids given as arguments.
fn main() -> ExitCode {
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (mut passed, mut failed) = (0, 0);
    for (id, criterion) in tenet_validation::all() {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let verdict = criterion();
        println!("{verdict}");
        if verdict.pass {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
