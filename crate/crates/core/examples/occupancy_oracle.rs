//! Exact occupancy of random and persistent walks on a small grid, checked
//! against simulation, with the exact map written as an SVG heatmap.
//!
//! Usage: `cargo run --release --example occupancy_oracle [out.svg]`

use snap_lab::harness::coverage::monte_carlo_occupancy;
use snap_lab::harness::svg::{emit_heatmap, write_svg};
use snap_lab::oracle::{exact_visitation, OracleStrategy, TabularMDP, DEFAULT_AUGMENTED_CAP};
use snap_lab::persistence::PersistenceStrategy;
use snap_lab::Result;

fn main() -> Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "occupancy.svg".into());
    let (size, start, steps) = (9, (4, 4), 12);
    let mdp = TabularMDP::grid(size, start, steps)?;
    for strategy in [
        PersistenceStrategy::None,
        PersistenceStrategy::Fixed { kappa: 3 },
        PersistenceStrategy::random_zeta(2.0),
    ] {
        let exact = exact_visitation(&mdp, &OracleStrategy::try_from(&strategy)?, steps, DEFAULT_AUGMENTED_CAP)?;
        let mc = monte_carlo_occupancy(size, start, &strategy, steps, 200_000, 0)?;
        let worst = (0..size * size)
            .filter(|&c| mc.stderr[c] > 0.0)
            .map(|c| (mc.mean[c] - exact.mean[c]).abs() / mc.stderr[c])
            .fold(0.0, f64::max);
        let reach = exact.mean.iter().filter(|&&p| p > 0.0).count();
        println!("{:<6} cells with mass {reach:>3}/{}, worst |z| {worst:.2}", strategy.name(), size * size);
        if let PersistenceStrategy::Fixed { .. } = strategy {
            let peak = exact.mean.iter().copied().fold(0.0, f64::max);
            let scaled: Vec<f64> = exact.mean.iter().map(|p| p / peak).collect();
            write_svg(std::path::Path::new(&out), &emit_heatmap(&scaled, size, size, "fixed-3 occupancy")?)?;
            println!("wrote {out}");
        }
    }
    Ok(())
}
