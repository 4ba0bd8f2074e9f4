use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tracking::TrackSnapshot;

use super::{least_confident, observe_state, Action, QTable, SamplerConfig, SamplerState};

/// Exploration rate after `t` decisions: `ε₀ / (1 + η t)`.
pub fn epsilon(epsilon0: f64, eta: f64, t: u64) -> f64 {
    epsilon0 / (1.0 + eta * t as f64)
}

/// ε-greedy choice at the table's current tick.
pub fn choose_action<R: Rng + ?Sized>(q: &QTable, s: SamplerState, config: &SamplerConfig, rng: &mut R) -> Action {
    let eps = epsilon(config.epsilon0, config.eta, q.tick);
    // both draws are always taken so the stream position does not depend on Q
    let explore = rng.random::<f64>() < eps;
    let random_action = if rng.random::<bool>() { Action::Blink } else { Action::Skip };
    if explore {
        random_action
    } else {
        q.greedy(s)
    }
}

/// `A·C_s + Δc`.
pub fn reward(action: Action, delta_conf: f64, sample_cost: f64) -> f64 {
    action.as_u8() as f64 * sample_cost + delta_conf
}

/// One on-policy TD step with learning rate `1 / N(s, a)`.
pub fn sarsa_update(
    q: &mut QTable,
    s: SamplerState,
    a: Action,
    r: f64,
    s_next: SamplerState,
    a_next: Action,
    beta: f64,
) {
    let next = q.value(s_next, a_next);
    let entry = q.entry_mut(s, a);
    entry.visits += 1;
    let alpha = 1.0 / entry.visits as f64;
    entry.value += alpha * (r + beta * next - entry.value);
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    state: SamplerState,
    action: Action,
    confidence: Option<f64>,
}

/// Online blink scheduler. Call [`SarsaAgent::tick`] once per decision
/// tick; the reward for the previous decision is formed from the change in
/// lowest confidence seen at the next tick.
#[derive(Debug, Clone)]
pub struct SarsaAgent {
    config: SamplerConfig,
    q: QTable,
    rng: ChaCha8Rng,
    pending: Option<Pending>,
    forced_blinks: u64,
}

impl SarsaAgent {
    pub fn new(config: SamplerConfig, seed: u64) -> Self {
        Self::with_table(config, QTable::new(), seed)
    }

    pub fn with_table(config: SamplerConfig, q: QTable, seed: u64) -> Self {
        Self { config, q, rng: ChaCha8Rng::seed_from_u64(seed), pending: None, forced_blinks: 0 }
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }

    pub fn into_q_table(self) -> QTable {
        self.q
    }

    pub fn set_learning(&mut self, on: bool) {
        self.config.learning = on;
    }

    pub fn forced_blinks(&self) -> u64 {
        self.forced_blinks
    }

    pub fn current_epsilon(&self) -> f64 {
        epsilon(self.config.epsilon0, self.config.eta, self.q.tick)
    }

    pub fn choose(&mut self, s: SamplerState) -> Action {
        choose_action(&self.q, s, &self.config, &mut self.rng)
    }

    /// Decide for the tick at `now`, given tracks extrapolated to `now`.
    pub fn tick(&mut self, tracks: &[TrackSnapshot], now: f64, last_blink: f64) -> Action {
        let state = observe_state(tracks, now, last_blink, &self.config);
        let confidence = least_confident(tracks).map(|t| t.confidence);
        let mut action = self.choose(state);
        if let Some(dt_max) = self.config.dt_max {
            if now - last_blink >= dt_max - 1e-9 && action == Action::Skip {
                action = Action::Blink;
                self.forced_blinks += 1;
            }
        }
        self.learn_transition(state, action, confidence);
        self.q.tick += 1;
        action
    }

    /// Feeds an externally observed transition: the agent is now in `state`
    /// and will execute `action`; `confidence` is the tracked statistic for
    /// the reward (None when nothing is tracked).
    pub fn learn_transition(&mut self, state: SamplerState, action: Action, confidence: Option<f64>) {
        if let Some(prev) = self.pending {
            if self.config.learning {
                let delta = match (prev.confidence, confidence) {
                    (Some(a), Some(b)) => b - a,
                    _ => 0.0,
                };
                let r = reward(prev.action, delta, self.config.sample_cost);
                sarsa_update(&mut self.q, prev.state, prev.action, r, state, action, self.config.beta);
            }
        }
        self.pending = Some(Pending { state, action, confidence });
    }

    /// Applies a reward that the caller computed itself (used by environments
    /// whose reward is not the confidence change).
    pub fn learn_with_reward(&mut self, s: SamplerState, a: Action, r: f64, s_next: SamplerState, a_next: Action) {
        if self.config.learning {
            sarsa_update(&mut self.q, s, a, r, s_next, a_next, self.config.beta);
        }
    }

    /// Advances the exploration clock by one decision.
    pub fn advance(&mut self) {
        self.q.tick += 1;
    }

    /// Drops the pending transition, e.g. at the end of an episode.
    pub fn end_episode(&mut self) {
        self.pending = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: u8) -> SamplerState {
        SamplerState::new(c, 0, 0)
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon(1.0, 0.1, 0), 1.0);
        assert_close!(epsilon(1.0, 0.1, 90), 0.1, 1e-15);
    }

    #[test]
    fn greedy_when_epsilon_is_negligible() {
        let mut q = QTable::new();
        q.set(s(0), Action::Skip, super::super::QEntry { value: 0.2, visits: 1 });
        q.set(s(0), Action::Blink, super::super::QEntry { value: 0.7, visits: 1 });
        q.tick = u64::MAX / 2;
        let cfg = SamplerConfig { epsilon0: 1e-300, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(choose_action(&q, s(0), &cfg, &mut rng), Action::Blink);
        }
    }

    #[test]
    fn first_tick_explores_uniformly() {
        let cfg = SamplerConfig::default();
        let q = QTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let blinks = (0..10_000).filter(|_| choose_action(&q, s(0), &cfg, &mut rng).is_blink()).count();
        assert!((4_700..5_300).contains(&blinks), "{blinks}");
    }

    #[test]
    fn reward_examples() {
        assert_close!(reward(Action::Blink, 0.2, -0.05), 0.15, 1e-15);
        assert_eq!(reward(Action::Skip, 0.0, -0.05), 0.0);
        assert_eq!(reward(Action::Blink, 0.0, -0.05), -0.05);
    }

    #[test]
    fn sarsa_update_examples() {
        let mut q = QTable::new();
        sarsa_update(&mut q, s(0), Action::Blink, 1.0, s(1), Action::Skip, 0.9);
        assert_eq!(q.value(s(0), Action::Blink), 1.0);
        assert_eq!(q.visits(s(0), Action::Blink), 1);

        let mut q = QTable::new();
        sarsa_update(&mut q, s(0), Action::Skip, 0.0, s(1), Action::Skip, 0.9);
        assert_eq!(q.value(s(0), Action::Skip), 0.0);

        let mut q = QTable::new();
        q.set(s(0), Action::Blink, super::super::QEntry { value: 1.0, visits: 1 });
        q.set(s(1), Action::Skip, super::super::QEntry { value: 1.0, visits: 3 });
        sarsa_update(&mut q, s(0), Action::Blink, 0.0, s(1), Action::Skip, 0.9);
        assert_close!(q.value(s(0), Action::Blink), 0.95, 1e-15);
        assert_eq!(q.value(s(1), Action::Skip), 1.0);
        assert_eq!(q.visits(s(1), Action::Skip), 3);
    }

    #[test]
    fn forced_blink_after_dt_max() {
        let cfg = SamplerConfig { epsilon0: 1e-300, ..Default::default() };
        let mut agent = SarsaAgent::new(cfg.clone(), 3);
        let idle = observe_state(&[], 2.0, 0.0, &cfg);
        agent.q.set(idle, Action::Skip, super::super::QEntry { value: 1.0, visits: 1 });
        assert_eq!(agent.tick(&[], 2.0, 0.0), Action::Blink);
        assert_eq!(agent.forced_blinks(), 1);
    }

    #[test]
    fn same_seed_same_decisions() {
        let run = |seed| {
            let mut agent = SarsaAgent::new(SamplerConfig::default(), seed);
            let mut last = 0.0;
            (0..500)
                .map(|k| {
                    let now = k as f64 * 0.1;
                    let a = agent.tick(&[], now, last);
                    if a.is_blink() {
                        last = now;
                    }
                    a
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }
}
