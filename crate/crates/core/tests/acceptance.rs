//! Acceptance checks. One PASS/FAIL line per criterion; the process exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use snap_lab::agents::actor_critic::{
    ddpg_actor_loss_grad, ddpg_critic_loss_grad, policy_sample, sac_actor_loss_grad, sac_critic_loss_grad, DdpgNets,
    SacNets,
};
use snap_lab::agents::net::{Mlp, OutputActivation, TargetPair};
use snap_lab::agents::replay::NStepSample;
use snap_lab::agents::{train_base, train_snap, AgentConfig, AgentKind, TrainOptions};
use snap_lab::env::{Action, EnvConfig, EnvName, StateVec};
use snap_lab::harness::coverage::{monte_carlo_occupancy, run_coverage, CoverageStrategy};
use snap_lab::harness::metrics::{aggregate_metrics, median};
use snap_lab::harness::trace::probability_trace;
use snap_lab::novelty::{simhash, CountUpdate, CounterKind, NoveltyConfig, ProjectionMatrix};
use snap_lab::oracle::{
    count_repeat_structured_sequences, enumerate_open_loop_return, exact_visitation, optimal_return_under_persistence,
    OracleStrategy, TabularMDP, DEFAULT_AUGMENTED_CAP,
};
use snap_lab::persistence::{action_sequence_count, repeat_probability, sample_zeta, PersistenceStrategy};
use snap_lab::{derive_seed, seeded_rng, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn coverage_ordering() -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for (len, total) in [(20, 1000), (100, 3000)] {
        let [random, zeta, count] = [
            CoverageStrategy::Random,
            CoverageStrategy::RandomZeta { mu: 2.0 },
            CoverageStrategy::CountRepeat { alpha: 1.0 },
        ]
        .map(|s| run_coverage(s, len, total, 30, 0));
        let (random, zeta, count) = (random?, zeta?, count?);
        let gap = |hi: &snap_lab::harness::coverage::CoverageResult, lo: &snap_lab::harness::coverage::CoverageResult| {
            let pooled = (hi.stderr.powi(2) + lo.stderr.powi(2)).sqrt();
            (hi.mean - lo.mean, pooled)
        };
        let (g1, se1) = gap(&count, &zeta);
        let (g2, se2) = gap(&zeta, &random);
        pass &= g1 > 2.0 * se1 && g2 > 2.0 * se2;
        detail.push(format!(
            "L={len},T={total}: count {:.2}% zeta {:.2}% random {:.2}% (gaps {g1:.2}>{:.2}, {g2:.2}>{:.2})",
            count.mean,
            zeta.mean,
            random.mean,
            2.0 * se1,
            2.0 * se2
        ));
    }
    outcome(pass, detail.join("; "))
}

fn repeat_probability_formula() -> Result<Outcome> {
    let mut rng = seeded_rng(2);
    let mut bad = 0;
    for _ in 0..10_000 {
        let alpha = 1.0 - rng.random::<f64>();
        let n: u64 = match rng.random_range(0..3) {
            0 => rng.random_range(0..10),
            1 => rng.random_range(0..100_000),
            _ => rng.random(),
        };
        let expected = if n <= 1 { alpha } else { alpha / (n as f64).sqrt() };
        let p = repeat_probability(n, alpha);
        if p != expected
            || repeat_probability(n.saturating_add(1), alpha) > p
            || repeat_probability(n.saturating_add(rng.random_range(0..1000)), alpha) > p
            || repeat_probability(0, alpha) != alpha
            || repeat_probability(1, alpha) != alpha
        {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} violations in 10000 pairs"))
}

fn zeta_sampler() -> Result<Outcome> {
    let (mu, n_max, draws) = (2.0, 100, 100_000);
    let norm: f64 = (1..=n_max).map(|n| (n as f64).powf(-mu)).sum();
    let mut hist = vec![0u64; n_max + 1];
    let mut rng = seeded_rng(3);
    for _ in 0..draws {
        hist[sample_zeta(mu, n_max, &mut rng)?] += 1;
    }
    let l1: f64 = (1..=n_max)
        .map(|n| (hist[n] as f64 / draws as f64 - (n as f64).powf(-mu) / norm).abs())
        .sum::<f64>()
        + hist[0] as f64 / draws as f64;
    outcome(l1 < 0.02, format!("L1 distance {l1:.5} (tolerance 0.02)"))
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn simhash_locality() -> Result<Outcome> {
    let (dim, bits, pairs) = (16, 64, 100_000);
    let proj = ProjectionMatrix::new(bits, dim, 4)?;
    let mut rng = seeded_rng(4);
    let mut pass = true;
    let mut detail = Vec::new();
    for theta in [PI / 6.0, PI / 2.0] {
        let mut differing = 0u64;
        for _ in 0..pairs {
            let u = unit((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
            let r: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let dot: f64 = u.iter().zip(&r).map(|(a, b)| a * b).sum();
            let w = unit(r.iter().zip(&u).map(|(r, u)| r - dot * u).collect());
            let v: Vec<f64> = u.iter().zip(&w).map(|(u, w)| theta.cos() * u + theta.sin() * w).collect();
            differing += simhash(&u, &proj)?.hamming(&simhash(&v, &proj)?) as u64;
        }
        let frac = differing as f64 / (pairs * bits) as f64;
        let err = (frac - theta / PI).abs();
        pass &= err <= 0.02;
        detail.push(format!("theta/pi={:.4}: {frac:.4}", theta / PI));
    }
    let mut scale_ok = true;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let code = simhash(&x, &proj)?;
        for c in [0.5, 3.0, 1e-6, 1e9, rng.random_range(0.01..100.0)] {
            let y: Vec<f64> = x.iter().map(|v| v * c).collect();
            scale_ok &= simhash(&y, &proj)? == code;
        }
    }
    let zero = simhash(&vec![0.0; dim], &proj)?;
    let zero_ok = zero.signs().iter().all(|&s| s == 1);
    pass &= scale_ok && zero_ok;
    detail.push(format!("scale invariance {scale_ok}, sign(0)=+1 {zero_ok}"));
    outcome(pass, detail.join("; "))
}

fn return_ordering() -> Result<Outcome> {
    let (gamma, tol) = (0.99, 1e-9);
    let rows: Vec<Result<(bool, bool, u32)>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mdp = TabularMDP::random(4, 3, 8, seed)?;
            let det = mdp.determinized();
            let mut ordered = true;
            let mut exact = true;
            let mut open_loop_below = 0;
            for m in [&mdp, &det] {
                let v: Vec<f64> = [1, 2, 4]
                    .iter()
                    .map(|&k| optimal_return_under_persistence(m, k, gamma))
                    .collect::<Result<_>>()?;
                ordered &= v[0] >= v[1] - tol && v[1] >= v[2] - tol;
                for (i, &k) in [1, 2, 4].iter().enumerate() {
                    let e = enumerate_open_loop_return(m, k, gamma, 10_000)?;
                    if std::ptr::eq(m, &det) {
                        exact &= (e - v[i]).abs() <= tol;
                    } else {
                        exact &= e <= v[i] + tol;
                        open_loop_below += (e < v[i] - tol) as u32;
                    }
                }
            }
            Ok((ordered, exact, open_loop_below))
        })
        .collect();
    let rows: Vec<(bool, bool, u32)> = rows.into_iter().collect::<Result<_>>()?;
    let ordered = rows.iter().filter(|r| r.0).count();
    let exact = rows.iter().filter(|r| r.1).count();
    let below: u32 = rows.iter().map(|r| r.2).sum();
    outcome(
        ordered == 100 && exact == 100,
        format!(
            "ordering {ordered}/100; deterministic DP == enumeration {exact}/100; \
             stochastic: open-loop never above DP, strictly below in {below}/300 cases"
        ),
    )
}

fn sequence_counting() -> Result<Outcome> {
    let mut bad = Vec::new();
    let mut checked = 0;
    for h in 1..=6usize {
        for a in 1..=3usize {
            for k1 in 1..=h {
                let c1 = action_sequence_count(h as u64, k1 as u64, a as u64)?;
                checked += 1;
                if c1 != count_repeat_structured_sequences(h, k1, a)?.into() {
                    bad.push(format!("count H={h} k={k1} A={a}"));
                }
                for k2 in k1 + 1..=h {
                    let c2 = action_sequence_count(h as u64, k2 as u64, a as u64)?;
                    if c1 < c2 {
                        bad.push(format!("monotone H={h} {k1}<{k2} A={a}"));
                    }
                    let strict_predicted = h.div_ceil(k1) > h.div_ceil(k2);
                    if a >= 2 && (c1 > c2) != strict_predicted {
                        bad.push(format!("strict H={h} {k1}<{k2} A={a}"));
                    }
                    if a == 1 && c1 != c2 {
                        bad.push(format!("single action H={h} {k1}<{k2}"));
                    }
                }
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{checked} (H, kappa, |A|) triples, {} violations {bad:?}; strictness checked for |A|>=2", bad.len()),
    )
}

fn simulator_vs_oracle() -> Result<Outcome> {
    let (size, start, steps, rollouts) = (5, (2, 2), 10, 1_000_000);
    let mdp = TabularMDP::grid(size, start, steps)?;
    let mut pass = true;
    let mut detail = Vec::new();
    for strategy in [PersistenceStrategy::None, PersistenceStrategy::Fixed { kappa: 2 }] {
        let exact = exact_visitation(&mdp, &OracleStrategy::try_from(&strategy)?, steps, DEFAULT_AUGMENTED_CAP)?;
        let mc = monte_carlo_occupancy(size, start, &strategy, steps, rollouts, 7)?;
        let mut worst: f64 = 0.0;
        let mut outside = 0;
        for c in 0..size * size {
            let diff = (mc.mean[c] - exact.mean[c]).abs();
            let z = if mc.stderr[c] > 0.0 {
                diff / mc.stderr[c]
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
            outside += (z > 3.0) as u32;
        }
        pass &= outside == 0;
        detail.push(format!("{}: max |z| {worst:.2}, {outside} cells beyond 3 SE", strategy.name()));
    }
    outcome(pass, detail.join("; "))
}

const FD_STEP: f64 = 1e-5;

/// Largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)` over all parameters.
fn fd_check(params: &[f64], analytic: &[f64], mut loss: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        let x = p[i];
        p[i] = x + FD_STEP;
        let up = loss(&p);
        p[i] = x - FD_STEP;
        let down = loss(&p);
        p[i] = x;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

fn with_params(net: &Mlp, p: &[f64]) -> Mlp {
    let mut n = net.clone();
    n.params_mut().copy_from_slice(p);
    n
}

fn random_vec(n: usize, rng: &mut snap_lab::Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn perturbed(net: Mlp, rng: &mut snap_lab::Rng) -> Mlp {
    let mut n = net;
    for p in n.params_mut() {
        *p += rng.random_range(-0.1..0.1);
    }
    n
}

fn gradient_fidelity() -> Result<Outcome> {
    let (sd, ad, hidden, batch_size) = (3, 2, 8, 4);
    let mut worst = [0.0f64; 4];
    for seed in 0..20u64 {
        let mut rng = seeded_rng(derive_seed(8, seed));
        let batch: Vec<NStepSample> = (0..batch_size)
            .map(|_| NStepSample {
                state: StateVec(random_vec(sd, &mut rng)),
                action: Action::Continuous(random_vec(ad, &mut rng)),
                reward: rng.random_range(-1.0..1.0),
                next_state: StateVec(random_vec(sd, &mut rng)),
                discount: 0.97,
            })
            .collect();
        let states: Vec<&[f64]> = batch.iter().map(|s| s.state.as_ref()).collect();
        let critic_net = Mlp::new(&[sd + ad, hidden, 1], OutputActivation::Identity, &mut rng);
        let mut critic = TargetPair::new(critic_net, 0.01)?;
        critic.target = perturbed(critic.target, &mut rng);

        let actor_net = Mlp::new(&[sd, hidden, ad], OutputActivation::Tanh, &mut rng);
        let mut actor = TargetPair::new(actor_net, 0.01)?;
        actor.target = perturbed(actor.target, &mut rng);
        let ddpg = DdpgNets { actor, critic: critic.clone() };

        let g = ddpg_critic_loss_grad(&batch, &ddpg)?;
        worst[0] = worst[0].max(fd_check(ddpg.critic.online.params(), &g.grad, |p| {
            let mut n = ddpg.clone();
            n.critic.online = with_params(&ddpg.critic.online, p);
            ddpg_critic_loss_grad(&batch, &n).unwrap().loss
        }));
        let g = ddpg_actor_loss_grad(states.iter().copied(), &ddpg.actor.online, &ddpg.critic.online)?;
        worst[1] = worst[1].max(fd_check(ddpg.actor.online.params(), &g.grad, |p| {
            ddpg_actor_loss_grad(states.iter().copied(), &with_params(&ddpg.actor.online, p), &ddpg.critic.online)
                .unwrap()
                .loss
        }));

        let sac = SacNets {
            actor: Mlp::new(&[sd, hidden, 2 * ad], OutputActivation::Identity, &mut rng),
            critic,
        };
        let noise = snap_lab::agents::actor_critic::SacNoise::sample(batch_size, ad, &mut rng);
        let alpha = 0.2;
        let g = sac_critic_loss_grad(&batch, &sac, alpha, &noise)?;
        worst[2] = worst[2].max(fd_check(sac.critic.online.params(), &g.grad, |p| {
            let mut n = sac.clone();
            n.critic.online = with_params(&sac.critic.online, p);
            sac_critic_loss_grad(&batch, &n, alpha, &noise).unwrap().loss
        }));
        let g = sac_actor_loss_grad(&states, &sac.actor, &sac.critic.online, alpha, &noise.current)?;
        worst[3] = worst[3].max(fd_check(sac.actor.params(), &g.grad, |p| {
            sac_actor_loss_grad(&states, &with_params(&sac.actor, p), &sac.critic.online, alpha, &noise.current)
                .unwrap()
                .loss
        }));
        // The policy sample used above must be a valid squashed action.
        let s = policy_sample(&sac.actor, states[0], &noise.current[0]);
        if s.action.iter().any(|a| a.abs() > 1.0) {
            return outcome(false, "policy action outside [-1, 1]".into());
        }
    }
    outcome(
        worst.iter().all(|&w| w < 1e-4),
        format!(
            "max relative error: deterministic critic {:.2e}, deterministic actor {:.2e}, \
             entropy critic {:.2e}, entropy actor {:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn qtable_agent() -> AgentConfig {
    AgentConfig {
        batch: 32,
        seed_frames: 500,
        exploration_steps: 0,
        ..AgentConfig::with_kind(AgentKind::QTable)
    }
}

fn grid_env() -> EnvConfig {
    EnvConfig::new(EnvName::SparseGoalGrid, 200)
}

fn tabular_novelty(seed: u64) -> Result<Option<snap_lab::novelty::NoveltyEstimator>> {
    let env = grid_env();
    NoveltyConfig::with_counter(CounterKind::Tabular)
        .build(2, Some(env.feature_bounds()), derive_seed(seed, 7))
        .map(Some)
}

fn training_integration() -> Result<Outcome> {
    let env = grid_env();
    let mut detail = Vec::new();

    // No persistence: identical to the plain learner.
    let opts = TrainOptions {
        total_steps: 3000,
        eval_every: 1000,
        eval_episodes: 2,
        ..Default::default()
    };
    let mut identical = true;
    for seed in 0..3 {
        let a = train_snap(&env, &qtable_agent(), &PersistenceStrategy::None, None, &opts, seed)?;
        let b = train_base(&env, &qtable_agent(), &opts, seed)?;
        identical &= a.to_jsonl()? == b.to_jsonl()?
            && a.probability_csv() == b.probability_csv()
            && a.summary_json()? == b.summary_json()?;
    }
    detail.push(format!("none == base (3 seeds): {identical}"));

    // Minibatch counting with the default hashed counter.
    let agent = AgentConfig {
        batch: 256,
        seed_frames: 4000,
        n_step: Some(3),
        update_every: Some(2),
        ..AgentConfig::with_kind(AgentKind::QTable)
    };
    let total = 10_000u64;
    let opts = TrainOptions {
        total_steps: total,
        eval_every: 0,
        count_update: CountUpdate::OnMinibatch,
        ..Default::default()
    };
    let novelty = NoveltyConfig::default().build(2, Some(env.feature_bounds()), 11)?;
    let r = train_snap(&env, &agent, &PersistenceStrategy::snap(1.0), Some(novelty), &opts, 5)?;
    let expected = 256 * ((total - 4000) / 2);
    let accounting = r.count_total == expected;
    detail.push(format!("count total {} (closed form {expected})", r.count_total));

    // Repeat probability falls over training.
    let opts = TrainOptions {
        total_steps: 20_000,
        eval_every: 0,
        count_update: CountUpdate::OnVisit,
        ..Default::default()
    };
    let windows: Vec<(f64, f64)> = (0..5u64)
        .into_par_iter()
        .map(|seed| {
            let r = train_snap(&env, &qtable_agent(), &PersistenceStrategy::snap(1.0), tabular_novelty(seed)?, &opts, seed)?;
            let trace = probability_trace(&r.repeat_probabilities, 1000)?;
            Ok((trace[0].1, trace[trace.len() - 1].1))
        })
        .collect::<Result<_>>()?;
    let first = median(&windows.iter().map(|w| w.0).collect::<Vec<_>>())?;
    let last = median(&windows.iter().map(|w| w.1).collect::<Vec<_>>())?;
    detail.push(format!("median window mean p: first {first:.4}, final {last:.4}"));
    outcome(identical && accounting && last < first, detail.join("; "))
}

fn first_goal_median(strategy: &PersistenceStrategy) -> Result<f64> {
    let opts = TrainOptions {
        total_steps: 200_000,
        eval_every: 0,
        stop_at_first_goal: true,
        count_update: CountUpdate::OnVisit,
        ..Default::default()
    };
    let steps: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let novelty = if strategy.needs_novelty() { tabular_novelty(seed)? } else { None };
            let r = train_snap(&grid_env(), &qtable_agent(), strategy, novelty, &opts, seed)?;
            Ok(r.first_goal_step.map_or(f64::INFINITY, |s| s as f64))
        })
        .collect::<Result<_>>()?;
    median(&steps.iter().map(|s| s.min(f64::MAX)).collect::<Vec<_>>())
}

fn sample_efficiency() -> Result<Outcome> {
    let eps = first_goal_median(&PersistenceStrategy::None)?;
    let fixed = first_goal_median(&PersistenceStrategy::Fixed { kappa: 4 })?;
    let snap = first_goal_median(&PersistenceStrategy::snap(1.0))?;
    outcome(
        snap < eps && snap < fixed,
        format!("median first-goal step: snap {snap}, epsilon-greedy {eps}, fixed-4 {fixed}"),
    )
}

fn metrics_correctness() -> Result<Outcome> {
    let a = aggregate_metrics(&[1.0, 2.0, 3.0, 4.0])?;
    let small = a.median == 2.5 && a.iqm == 2.5 && a.mean == 2.5 && a.optimality_gap == 0.0;
    let b = aggregate_metrics(&[0.5; 9])?;
    let constant = b.median == 0.5 && b.iqm == 0.5 && b.mean == 0.5 && b.optimality_gap == 0.5;
    let mut rng = seeded_rng(11);
    let u: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
    let c = aggregate_metrics(&u)?;
    let uniform = (c.iqm - 0.5).abs() <= 0.02 && (c.optimality_gap - 0.5).abs() <= 0.02;
    outcome(
        small && constant && uniform,
        format!(
            "(1,2,3,4) {small}; constant 0.5 {constant}; uniform iqm {:.4} gap {:.4}",
            c.iqm, c.optimality_gap
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 11] = [
        ("coverage ordering", coverage_ordering),
        ("repeat probability formula", repeat_probability_formula),
        ("zeta sampler", zeta_sampler),
        ("simhash locality", simhash_locality),
        ("return ordering", return_ordering),
        ("sequence counting", sequence_counting),
        ("simulator vs oracle", simulator_vs_oracle),
        ("gradient fidelity", gradient_fidelity),
        ("training loop integration", training_integration),
        ("sample efficiency", sample_efficiency),
        ("metrics correctness", metrics_correctness),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += !pass as u32;
        println!(
            "criterion {:>2} {:<28} {} ({:.1}s) {detail}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() as u32 - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
