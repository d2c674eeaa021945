//! Hashes point-mass states into SimHash codes, counts them and shows how
//! the repeat probability falls as a region is revisited.
//!
//! Usage: `cargo run --release --example simhash_counts [bits]`

use snap_lab::env::{EnvConfig, EnvName, StateVec};
use snap_lab::novelty::{simhash, NoveltyConfig, ProjectionMatrix};
use snap_lab::persistence::repeat_probability;
use snap_lab::{seeded_rng, Result};

fn main() -> Result<()> {
    let bits: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(32);
    let proj = ProjectionMatrix::new(bits, 3, 0)?;
    for x in [[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.9, 0.1, 0.0], [-1.0, 0.0, 0.0], [0.0; 3]] {
        println!("{x:?} -> {:0width$x}", simhash(&x, &proj)?.word(), width = bits.div_ceil(4));
    }

    let env = EnvConfig::new(EnvName::PointMass, 100);
    let mut est = NoveltyConfig { bits, ..Default::default() }.build(4, Some(env.feature_bounds()), 1)?;
    let mut e = env.build()?;
    let mut rng = seeded_rng(2);
    let mut states = Vec::new();
    for _ in 0..20 {
        let mut s = e.reset();
        loop {
            states.push(s.clone());
            let step = e.step(&e.action_spec().sample_uniform(&mut rng))?;
            if step.terminal {
                break;
            }
            s = step.next_state;
        }
    }
    est.update_counts(&states)?;
    println!("\n{} states counted into {} codes", est.table().total(), est.table().len());
    for probe in [vec![0.0, 0.0, 0.0, 0.0], vec![0.9, -0.9, 0.0, 0.0]] {
        let n = est.pseudo_count(&probe)?;
        println!("state {probe:?}: count {n}, repeat probability {:.3}", repeat_probability(n, 1.0));
    }
    let fresh = StateVec(vec![0.5, 0.5, 0.0, 0.0]);
    for visit in 1..=5 {
        est.record_visit(&fresh)?;
        let n = est.pseudo_count(&fresh)?;
        println!("after visit {visit}: count {n}, p = {:.3}", repeat_probability(n, 1.0));
    }
    Ok(())
}
