//! The off-policy training loop with a persistence-wrapped behavior policy.

use serde::{Deserialize, Serialize};

use super::exploration::{epsilon_greedy_action, gaussian_behavior_action};
use super::replay::ReplayBuffer;
use super::{AgentConfig, Learner};
use crate::env::{Action, ActionSpec, EnvConfig, Environment, StateVec, Transition};
use crate::harness::eval::evaluate_agent;
use crate::novelty::{CountUpdate, NoveltyEstimator};
use crate::persistence::{ActionSource, Persistence, PersistenceState, PersistenceStrategy};
use crate::{derive_seed, seeded_rng, Error, Result, Rng};

// Stream tags for `derive_seed`; each concern gets its own RNG.
const ENV_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;
const EXPLORE_STREAM: u64 = 2;
const PERSIST_STREAM: u64 = 3;
const REPLAY_STREAM: u64 = 4;
const UPDATE_STREAM: u64 = 5;
const EVAL_STREAM: u64 = 6;

/// Run length, evaluation cadence and counting mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOptions {
    pub total_steps: u64,
    /// Evaluate every this many steps; 0 disables evaluation.
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub count_update: CountUpdate,
    /// End the run at the first absorbing transition (goal reached).
    pub stop_at_first_goal: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            total_steps: 10_000,
            eval_every: 1000,
            eval_episodes: 10,
            count_update: CountUpdate::OnMinibatch,
            stop_at_first_goal: false,
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 {
            return Err(Error::config("total_steps must be at least 1"));
        }
        if self.eval_every > 0 && self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: u64,
    pub mean_return: f64,
    pub returns: Vec<f64>,
}

/// Everything a run reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub evals: Vec<EvalPoint>,
    /// Repeat probability used at every behavior step.
    pub repeat_probabilities: Vec<f64>,
    /// Step count at which the first absorbing transition happened.
    pub first_goal_step: Option<u64>,
    pub steps: u64,
    pub updates: u64,
    pub count_total: u64,
}

impl RunRecord {
    fn new(seed: u64) -> Self {
        RunRecord {
            seed,
            evals: Vec::new(),
            repeat_probabilities: Vec::new(),
            first_goal_step: None,
            steps: 0,
            updates: 0,
            count_total: 0,
        }
    }

    /// One JSON object per evaluation point.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.evals {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// `step,repeat_probability` rows, one per behavior step.
    pub fn probability_csv(&self) -> String {
        let mut out = String::from("step,repeat_probability\n");
        for (t, p) in self.repeat_probabilities.iter().enumerate() {
            out.push_str(&format!("{t},{p}\n"));
        }
        out
    }

    /// Run summary without the per-step trace.
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "seed": self.seed,
            "steps": self.steps,
            "updates": self.updates,
            "count_total": self.count_total,
            "first_goal_step": self.first_goal_step,
            "final_mean_return": self.evals.last().map(|e| e.mean_return),
        }))?)
    }
}

/// Target-policy action at global step `t`, including the learner's own
/// exploration (uniform during the first `exploration_steps`).
fn target_action(
    learner: &Learner,
    cfg: &AgentConfig,
    spec: &ActionSpec,
    state: &StateVec,
    t: u64,
    rng: &mut Rng,
) -> Result<Action> {
    if t < cfg.exploration_steps {
        return Ok(spec.sample_uniform(rng));
    }
    match learner {
        Learner::QTable { .. } => {
            let q = learner.q_values(state)?;
            Ok(Action::Discrete(epsilon_greedy_action(q, cfg.epsilon.value(t).clamp(0.0, 1.0), rng)?))
        }
        Learner::Ddpg { nets, .. } => gaussian_behavior_action(
            &nets.actor.online.forward(state),
            cfg.stddev.value(t).max(0.0),
            cfg.stddev_clip,
            spec,
            rng,
        ),
        Learner::Sac { nets, .. } => {
            use rand_distr::{Distribution, StandardNormal};
            let d = spec.dim();
            let eps: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let a = super::actor_critic::policy_sample(&nets.actor, state, &eps).action;
            Ok(spec.clamp(Action::Continuous(a)))
        }
    }
}

/// Adapts a learner to the persistence layer. Errors are parked and
/// surfaced after the decision, since the trait methods are infallible.
struct PolicySource<'a> {
    learner: &'a Learner,
    cfg: &'a AgentConfig,
    spec: &'a ActionSpec,
    t: u64,
    rng: &'a mut Rng,
    error: Option<Error>,
}

impl PolicySource<'_> {
    fn park(&mut self, r: Result<Action>) -> Action {
        r.unwrap_or_else(|e| {
            self.error.get_or_insert(e);
            self.spec.sample_uniform(self.rng)
        })
    }
}

impl ActionSource for PolicySource<'_> {
    fn target_action(&mut self, state: &StateVec) -> Action {
        let r = target_action(self.learner, self.cfg, self.spec, state, self.t, self.rng);
        self.park(r)
    }

    fn greedy_action(&mut self, state: &StateVec) -> Action {
        let r = self.learner.greedy_action(state);
        self.park(r)
    }

    fn random_action(&mut self) -> Action {
        self.spec.sample_uniform(self.rng)
    }
}

/// Step-by-step training driver; [`train_snap`] runs it to completion.
pub struct Trainer {
    env_cfg: EnvConfig,
    env: Box<dyn Environment>,
    spec: ActionSpec,
    cfg: AgentConfig,
    opts: TrainOptions,
    learner: Learner,
    persistence: Persistence,
    pstate: PersistenceState,
    novelty: Option<NoveltyEstimator>,
    buffer: ReplayBuffer,
    n_step: usize,
    update_every: u64,
    explore_rng: Rng,
    persist_rng: Rng,
    replay_rng: Rng,
    update_rng: Rng,
    state: Option<StateVec>,
    episode_start: bool,
    record: RunRecord,
}

impl Trainer {
    /// Validates the whole combination before touching the environment.
    pub fn new(
        env_cfg: &EnvConfig,
        cfg: &AgentConfig,
        strategy: &PersistenceStrategy,
        novelty: Option<NoveltyEstimator>,
        opts: &TrainOptions,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        opts.validate()?;
        strategy.validate()?;
        if strategy.needs_novelty() && novelty.is_none() {
            return Err(Error::config(format!(
                "strategy {} needs a novelty estimator",
                strategy.name()
            )));
        }
        let env = env_cfg.build_seeded(derive_seed(seed, ENV_STREAM))?;
        cfg.check_env(env.as_ref())?;
        let indexer = env_cfg.build()?;
        let mut init_rng = seeded_rng(derive_seed(seed, INIT_STREAM));
        let learner = Learner::new(cfg, env.as_ref(), indexer, &mut init_rng)?;
        let kappa = strategy.nominal_kappa();
        Ok(Trainer {
            env_cfg: env_cfg.clone(),
            spec: env.action_spec().clone(),
            env,
            cfg: cfg.clone(),
            opts: opts.clone(),
            learner,
            persistence: Persistence::new(strategy.clone())?,
            pstate: PersistenceState::new(),
            novelty,
            buffer: ReplayBuffer::new(cfg.replay_capacity),
            n_step: cfg.n_step_resolved(kappa),
            update_every: cfg.update_every_resolved(kappa) as u64,
            explore_rng: seeded_rng(derive_seed(seed, EXPLORE_STREAM)),
            persist_rng: seeded_rng(derive_seed(seed, PERSIST_STREAM)),
            replay_rng: seeded_rng(derive_seed(seed, REPLAY_STREAM)),
            update_rng: seeded_rng(derive_seed(seed, UPDATE_STREAM)),
            state: None,
            episode_start: true,
            record: RunRecord::new(seed),
        })
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn novelty(&self) -> Option<&NoveltyEstimator> {
        self.novelty.as_ref()
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Mutable buffer access, for feeding a fixed transition stream.
    pub fn replay_mut(&mut self) -> &mut ReplayBuffer {
        &mut self.buffer
    }

    pub fn record(&self) -> &RunRecord {
        &self.record
    }

    pub fn steps_done(&self) -> u64 {
        self.record.steps
    }

    pub fn n_step(&self) -> usize {
        self.n_step
    }

    pub fn update_every(&self) -> u64 {
        self.update_every
    }

    fn count_visit(&mut self, s: &StateVec) -> Result<()> {
        if self.opts.count_update == CountUpdate::OnVisit {
            if let Some(n) = self.novelty.as_mut() {
                n.record_visit(s)?;
            }
        }
        Ok(())
    }

    /// One environment interaction, plus any update and evaluation it triggers.
    pub fn step(&mut self) -> Result<()> {
        let state = match self.state.take() {
            Some(s) => s,
            None => {
                let s = self.env.reset();
                self.pstate.reset();
                self.episode_start = true;
                self.count_visit(&s)?;
                s
            }
        };
        let t = self.record.steps;
        let mut source = PolicySource {
            learner: &self.learner,
            cfg: &self.cfg,
            spec: &self.spec,
            t,
            rng: &mut self.explore_rng,
            error: None,
        };
        let decision = self.persistence.behavior_step(
            &mut self.pstate,
            &state,
            t,
            &mut source,
            self.novelty.as_ref(),
            &mut self.persist_rng,
        )?;
        if let Some(e) = source.error {
            return Err(e);
        }
        let step = self.env.step(&decision.action)?;
        if !step.next_state.is_finite() {
            return Err(Error::Numerical(format!("non-finite state {:?}", step.next_state.0)));
        }
        self.record.repeat_probabilities.push(decision.repeat_probability);
        if step.absorbing() && self.record.first_goal_step.is_none() {
            self.record.first_goal_step = Some(t + 1);
        }
        self.buffer.push(Transition {
            state,
            action: decision.action,
            reward: step.reward,
            next_state: step.next_state.clone(),
            terminal: step.absorbing(),
            episode_start: self.episode_start,
        });
        self.episode_start = false;
        if !step.terminal {
            self.count_visit(&step.next_state)?;
            self.state = Some(step.next_state);
        } else {
            self.count_visit(&step.next_state)?;
        }
        self.record.steps = t + 1;
        let done = self.record.steps;
        if done > self.cfg.seed_frames && (done - self.cfg.seed_frames) % self.update_every == 0 {
            self.learn()?;
        }
        if self.opts.eval_every > 0 && done % self.opts.eval_every == 0 {
            self.evaluate()?;
        }
        Ok(())
    }

    /// Samples a minibatch, updates the learner and, in minibatch mode, the
    /// counts from the same batch. Returns false when the buffer is not ready.
    pub fn learn(&mut self) -> Result<bool> {
        let Some(batch) =
            self.buffer
                .sample_nstep(self.cfg.batch, self.n_step, self.cfg.gamma, &mut self.replay_rng)
        else {
            return Ok(false);
        };
        self.learner.update(&batch, &self.cfg, &mut self.update_rng)?;
        if self.opts.count_update == CountUpdate::OnMinibatch {
            if let Some(n) = self.novelty.as_mut() {
                n.update_counts(batch.iter().map(|s| &s.state))?;
            }
        }
        self.record.updates += 1;
        Ok(true)
    }

    fn evaluate(&mut self) -> Result<()> {
        let seed = derive_seed(self.record.seed, EVAL_STREAM ^ (self.record.steps << 8));
        let learner = &self.learner;
        let r = evaluate_agent(&self.env_cfg, |s| learner.greedy_action(s), self.opts.eval_episodes, seed)?;
        self.record.evals.push(EvalPoint {
            step: self.record.steps,
            mean_return: r.mean_return,
            returns: r.returns,
        });
        Ok(())
    }

    fn finished(&self) -> bool {
        self.record.steps >= self.opts.total_steps
            || (self.opts.stop_at_first_goal && self.record.first_goal_step.is_some())
    }

    /// Runs to `total_steps` (or the first goal, if asked).
    pub fn run(mut self) -> Result<(RunRecord, Learner, Option<NoveltyEstimator>)> {
        while !self.finished() {
            self.step()?;
        }
        self.record.count_total = self.novelty.as_ref().map_or(0, |n| n.table().total());
        Ok((self.record, self.learner, self.novelty))
    }
}

/// Trains `cfg.kind` on `env_cfg` with behavior actions routed through
/// `strategy`.
pub fn train_snap(
    env_cfg: &EnvConfig,
    cfg: &AgentConfig,
    strategy: &PersistenceStrategy,
    novelty: Option<NoveltyEstimator>,
    opts: &TrainOptions,
    seed: u64,
) -> Result<RunRecord> {
    Ok(Trainer::new(env_cfg, cfg, strategy, novelty, opts, seed)?.run()?.0)
}

/// The plain base learner: a separate loop with no persistence layer at all.
/// It shares the stream layout with [`train_snap`], so both produce the same
/// record when the strategy is `none`.
pub fn train_base(env_cfg: &EnvConfig, cfg: &AgentConfig, opts: &TrainOptions, seed: u64) -> Result<RunRecord> {
    cfg.validate()?;
    opts.validate()?;
    let mut env = env_cfg.build_seeded(derive_seed(seed, ENV_STREAM))?;
    cfg.check_env(env.as_ref())?;
    let spec = env.action_spec().clone();
    let mut init_rng = seeded_rng(derive_seed(seed, INIT_STREAM));
    let mut learner = Learner::new(cfg, env.as_ref(), env_cfg.build()?, &mut init_rng)?;
    let mut explore_rng = seeded_rng(derive_seed(seed, EXPLORE_STREAM));
    let mut replay_rng = seeded_rng(derive_seed(seed, REPLAY_STREAM));
    let mut update_rng = seeded_rng(derive_seed(seed, UPDATE_STREAM));
    let n_step = cfg.n_step_resolved(None);
    let update_every = cfg.update_every_resolved(None) as u64;
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity);
    let mut record = RunRecord::new(seed);
    let mut state: Option<StateVec> = None;
    let mut episode_start = true;
    for t in 0..opts.total_steps {
        let s = match state.take() {
            Some(s) => s,
            None => {
                episode_start = true;
                env.reset()
            }
        };
        let action = target_action(&learner, cfg, &spec, &s, t, &mut explore_rng)?;
        let step = env.step(&action)?;
        record.repeat_probabilities.push(0.0);
        if step.absorbing() && record.first_goal_step.is_none() {
            record.first_goal_step = Some(t + 1);
        }
        buffer.push(Transition {
            state: s,
            action,
            reward: step.reward,
            next_state: step.next_state.clone(),
            terminal: step.absorbing(),
            episode_start,
        });
        episode_start = false;
        if !step.terminal {
            state = Some(step.next_state);
        }
        let done = t + 1;
        record.steps = done;
        if done > cfg.seed_frames && (done - cfg.seed_frames) % update_every == 0 {
            if let Some(batch) = buffer.sample_nstep(cfg.batch, n_step, cfg.gamma, &mut replay_rng) {
                learner.update(&batch, cfg, &mut update_rng)?;
                record.updates += 1;
            }
        }
        if opts.eval_every > 0 && done % opts.eval_every == 0 {
            let seed = derive_seed(seed, EVAL_STREAM ^ (done << 8));
            let r = evaluate_agent(env_cfg, |s| learner.greedy_action(s), opts.eval_episodes, seed)?;
            record.evals.push(EvalPoint {
                step: done,
                mean_return: r.mean_return,
                returns: r.returns,
            });
        }
        if opts.stop_at_first_goal && record.first_goal_step.is_some() {
            break;
        }
    }
    Ok(record)
}
