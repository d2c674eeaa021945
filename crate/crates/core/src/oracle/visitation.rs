//! Exact occupancy of repeat-structured random behavior.
//!
//! The behavior process is Markov on `(state, last action, repeats left)`,
//! so its distribution can be propagated exactly.

use super::TabularMDP;
use crate::persistence::{PersistenceStrategy, Schedule, ZetaDuration};
use crate::{Error, Result};

/// Default limit on augmented-state entries.
pub const DEFAULT_AUGMENTED_CAP: usize = 20_000_000;

/// Count-free behavior processes whose repeat structure is Markov.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleStrategy {
    /// Uniform action every step.
    Random,
    /// Uniform action held for a zeta-distributed duration.
    RandomZeta { mu: f64, n_max: usize },
    /// Repeat the last action with fixed probability `p`, else uniform.
    ConstantRepeat { p: f64 },
    /// Uniform action held for exactly `kappa` steps.
    Fixed { kappa: usize },
}

impl TryFrom<&PersistenceStrategy> for OracleStrategy {
    type Error = Error;

    /// Reads a strategy as a random walk (uniform target actions).
    fn try_from(s: &PersistenceStrategy) -> Result<Self> {
        match s {
            PersistenceStrategy::None => Ok(OracleStrategy::Random),
            PersistenceStrategy::Fixed { kappa } => Ok(OracleStrategy::Fixed { kappa: *kappa }),
            PersistenceStrategy::Zeta {
                mu,
                n_max,
                epsilon: Schedule::Constant(e),
            } if *e == 1.0 => {
                Ok(OracleStrategy::RandomZeta { mu: *mu, n_max: *n_max })
            }
            PersistenceStrategy::Linear {
                schedule: Schedule::Constant(p),
            } => Ok(OracleStrategy::ConstantRepeat { p: *p }),
            other => Err(Error::config(format!(
                "{} persistence is not a count-free Markov repeat process",
                other.name()
            ))),
        }
    }
}

/// Occupancy probabilities, `per_step[t - 1][s] = P(state at step t = s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Visitation {
    pub per_step: Vec<Vec<f64>>,
    /// Mean occupancy over steps `1..=T`.
    pub mean: Vec<f64>,
}

/// `(next action, repeats left, probability)` choices of one decision.
type Decisions = Vec<(usize, usize, f64)>;

struct Kernel {
    strategy: OracleStrategy,
    actions: usize,
    zeta: Option<ZetaDuration>,
}

impl Kernel {
    /// Repeats-left slots the strategy needs.
    fn slots(&self) -> usize {
        match &self.strategy {
            OracleStrategy::Random | OracleStrategy::ConstantRepeat { .. } => 1,
            OracleStrategy::Fixed { kappa } => *kappa,
            OracleStrategy::RandomZeta { n_max, .. } => *n_max,
        }
    }

    /// Fresh uniform action with its hold length.
    fn fresh(&self, out: &mut Decisions, weight: f64) {
        let u = weight / self.actions as f64;
        for a in 0..self.actions {
            match &self.strategy {
                OracleStrategy::Random | OracleStrategy::ConstantRepeat { .. } => out.push((a, 0, u)),
                OracleStrategy::Fixed { kappa } => out.push((a, kappa - 1, u)),
                OracleStrategy::RandomZeta { n_max, .. } => {
                    let z = self.zeta.as_ref().expect("built with zeta");
                    for n in 1..=*n_max {
                        out.push((a, n - 1, u * z.pmf(n)));
                    }
                }
            }
        }
    }

    fn decide(&self, prev: Option<(usize, usize)>, out: &mut Decisions) {
        out.clear();
        let Some((a, r)) = prev else {
            self.fresh(out, 1.0);
            return;
        };
        match &self.strategy {
            OracleStrategy::Random => self.fresh(out, 1.0),
            OracleStrategy::ConstantRepeat { p } => {
                out.push((a, 0, *p));
                self.fresh(out, 1.0 - p);
            }
            OracleStrategy::Fixed { .. } | OracleStrategy::RandomZeta { .. } => {
                if r > 0 {
                    out.push((a, r - 1, 1.0));
                } else {
                    self.fresh(out, 1.0);
                }
            }
        }
    }
}

/// Exact per-step occupancy of `strategy` on `mdp` from its initial
/// distribution for `steps` steps.
pub fn exact_visitation(
    mdp: &TabularMDP,
    strategy: &OracleStrategy,
    steps: usize,
    cap: usize,
) -> Result<Visitation> {
    mdp.validate()?;
    let zeta = match strategy {
        OracleStrategy::RandomZeta { mu, n_max } => Some(ZetaDuration::new(*mu, *n_max)?),
        OracleStrategy::Fixed { kappa } if *kappa == 0 => {
            return Err(Error::config("fixed persistence needs kappa >= 1"))
        }
        OracleStrategy::ConstantRepeat { p } if !(0.0..=1.0).contains(p) => {
            return Err(Error::config(format!("repeat probability {p} outside [0, 1]")))
        }
        _ => None,
    };
    let kernel = Kernel {
        strategy: strategy.clone(),
        actions: mdp.n_actions,
        zeta,
    };
    let (ns, na, nr) = (mdp.n_states, mdp.n_actions, kernel.slots());
    let size = ns
        .checked_mul(na)
        .and_then(|x| x.checked_mul(nr))
        .ok_or(Error::TooLarge { size: usize::MAX, cap })?;
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    let sparse: Vec<Vec<Vec<(usize, f64)>>> = mdp
        .transitions
        .iter()
        .map(|row| {
            row.iter()
                .map(|p| p.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(i, &x)| (i, x)).collect())
                .collect()
        })
        .collect();
    let aug = |s: usize, a: usize, r: usize| (s * na + a) * nr + r;

    let mut per_step = Vec::with_capacity(steps);
    let mut dist = vec![0.0; size];
    let mut decisions = Decisions::new();
    for t in 0..steps {
        let mut next = vec![0.0; size];
        let mut push = |s: usize, mass: f64, decisions: &Decisions| {
            for &(a2, r2, p) in decisions {
                let m = mass * p;
                if m == 0.0 {
                    continue;
                }
                for &(s2, q) in &sparse[s][a2] {
                    next[aug(s2, a2, r2)] += m * q;
                }
            }
        };
        if t == 0 {
            kernel.decide(None, &mut decisions);
            for (s, &m) in mdp.initial.iter().enumerate() {
                if m > 0.0 {
                    push(s, m, &decisions);
                }
            }
        } else {
            for s in 0..ns {
                for a in 0..na {
                    for r in 0..nr {
                        let m = dist[aug(s, a, r)];
                        if m > 0.0 {
                            kernel.decide(Some((a, r)), &mut decisions);
                            push(s, m, &decisions);
                        }
                    }
                }
            }
        }
        dist = next;
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!(
                "augmented distribution sums to {total} at step {}",
                t + 1
            )));
        }
        let mut occ = vec![0.0; ns];
        for s in 0..ns {
            occ[s] = dist[s * na * nr..(s + 1) * na * nr].iter().sum();
        }
        per_step.push(occ);
    }
    let mut mean = vec![0.0; ns];
    if steps > 0 {
        for occ in &per_step {
            for (m, o) in mean.iter_mut().zip(occ) {
                *m += o / steps as f64;
            }
        }
    }
    Ok(Visitation { per_step, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_state_is_always_occupied() {
        let m = TabularMDP {
            n_states: 1,
            n_actions: 2,
            transitions: vec![vec![vec![1.0], vec![1.0]]],
            rewards: vec![vec![0.0, 0.0]],
            initial: vec![1.0],
            horizon: 5,
        };
        let v = exact_visitation(&m, &OracleStrategy::Random, 5, DEFAULT_AUGMENTED_CAP).unwrap();
        assert_eq!(v.mean, vec![1.0]);
    }

    #[test]
    fn one_random_step_from_grid_center() {
        let m = TabularMDP::grid(51, (25, 25), 1).unwrap();
        let v = exact_visitation(&m, &OracleStrategy::Random, 1, DEFAULT_AUGMENTED_CAP).unwrap();
        let occ = &v.per_step[0];
        for (x, y) in [(25, 26), (25, 24), (24, 25), (26, 25)] {
            assert_eq!(occ[y * 51 + x], 0.25);
        }
        assert_eq!(occ.iter().filter(|&&p| p > 0.0).count(), 4);
    }

    #[test]
    fn fixed_two_moves_in_pairs() {
        // On a 1-D line, kappa = 2 from the middle reaches distance 2 at
        // step 2 with probability 1/2.
        let m = TabularMDP::grid(5, (2, 2), 2).unwrap();
        let v = exact_visitation(&m, &OracleStrategy::Fixed { kappa: 2 }, 2, DEFAULT_AUGMENTED_CAP).unwrap();
        assert!((v.per_step[1][4 * 5 + 2] - 0.25).abs() < 1e-15);
        assert_eq!(v.per_step[1][2 * 5 + 2], 0.0);
    }

    #[test]
    fn constant_repeat_extremes() {
        let m = TabularMDP::grid(5, (2, 2), 4).unwrap();
        let random = exact_visitation(&m, &OracleStrategy::Random, 4, DEFAULT_AUGMENTED_CAP).unwrap();
        let p0 = exact_visitation(&m, &OracleStrategy::ConstantRepeat { p: 0.0 }, 4, DEFAULT_AUGMENTED_CAP).unwrap();
        assert_eq!(random, p0);
        let fixed = exact_visitation(&m, &OracleStrategy::Fixed { kappa: 4 }, 4, DEFAULT_AUGMENTED_CAP).unwrap();
        let p1 = exact_visitation(&m, &OracleStrategy::ConstantRepeat { p: 1.0 }, 4, DEFAULT_AUGMENTED_CAP).unwrap();
        for (a, b) in fixed.mean.iter().zip(&p1.mean) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn size_cap_is_enforced() {
        let m = TabularMDP::grid(51, (25, 25), 10).unwrap();
        let z = OracleStrategy::RandomZeta { mu: 2.0, n_max: 100 };
        match exact_visitation(&m, &z, 10, 1000) {
            Err(Error::TooLarge { size, cap }) => assert_eq!((size, cap), (2601 * 4 * 100, 1000)),
            other => panic!("expected size error, got {other:?}"),
        }
    }

    #[test]
    fn strategy_conversion() {
        assert_eq!(
            OracleStrategy::try_from(&PersistenceStrategy::random_zeta(2.0)).unwrap(),
            OracleStrategy::RandomZeta { mu: 2.0, n_max: 100 }
        );
        assert_eq!(
            OracleStrategy::try_from(&PersistenceStrategy::constant(0.3)).unwrap(),
            OracleStrategy::ConstantRepeat { p: 0.3 }
        );
        assert!(OracleStrategy::try_from(&PersistenceStrategy::snap(1.0)).is_err());
    }
}
