//! Reward-free coverage of the 51x51 grid under three behavior processes.
//!
//! Usage: `cargo run --release --example coverage [runs]`

use snap_lab::harness::coverage::{run_coverage, CoverageStrategy};

fn main() -> snap_lab::Result<()> {
    let runs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let strategies = [
        CoverageStrategy::Random,
        CoverageStrategy::RandomZeta { mu: 2.0 },
        CoverageStrategy::CountRepeat { alpha: 1.0 },
    ];
    for (len, total) in [(20, 1000), (100, 3000)] {
        println!("episode length {len}, total steps {total}, {runs} runs");
        for s in strategies {
            let r = run_coverage(s, len, total, runs, 0)?;
            println!("  {:<13} {:6.3}% +/- {:.3}", r.strategy, r.mean, r.stderr);
        }
    }
    Ok(())
}
