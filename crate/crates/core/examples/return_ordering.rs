//! Optimal finite-horizon return under fixed persistence on random tabular
//! MDPs, and the size of the repeat-structured action space.
//!
//! Usage: `cargo run --release --example return_ordering [mdps]`

use snap_lab::oracle::{enumerate_open_loop_return, optimal_return_under_persistence, TabularMDP};
use snap_lab::persistence::action_sequence_count;
use snap_lab::Result;

fn main() -> Result<()> {
    let mdps: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let (horizon, gamma) = (8, 0.99);
    println!("{:>4} {:>10} {:>10} {:>10} {:>12}", "mdp", "kappa=1", "kappa=2", "kappa=4", "open-loop 1");
    for seed in 0..mdps {
        let mdp = TabularMDP::random(4, 3, horizon, seed)?;
        let v: Vec<f64> = [1, 2, 4]
            .iter()
            .map(|&k| optimal_return_under_persistence(&mdp, k, gamma))
            .collect::<Result<_>>()?;
        let open = enumerate_open_loop_return(&mdp, 1, gamma, 10_000)?;
        println!("{seed:>4} {:>10.5} {:>10.5} {:>10.5} {open:>12.5}", v[0], v[1], v[2]);
    }
    println!("\naction sequences of length {horizon} with 3 actions:");
    for kappa in 1..=horizon as u64 {
        println!("  kappa {kappa}: {}", action_sequence_count(horizon as u64, kappa, 3)?);
    }
    println!("kappa 1, horizon 1000, 6 actions: {} digits", action_sequence_count(1000, 1, 6)?.to_string().len());
    Ok(())
}
