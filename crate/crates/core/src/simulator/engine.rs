use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::resample::{GridPoint, GridSampler};
use super::stats::{TimeAverages, TimeIntegrals};
use crate::model::ModelParams;

/// Independent stream for replication `replication` of base seed `seed`.
///
/// ChaCha8 keyed by the seed, with the replication index selecting the
/// 64-bit stream, so streams never overlap.
pub fn rng_for(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Rates of the CTMC with an integer server count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimModel {
    pub lambda: f64,
    pub mu: f64,
    pub theta: f64,
    pub p: f64,
    pub gamma: f64,
    pub c: u32,
}

impl SimModel {
    pub fn from_params(params: &ModelParams) -> Result<Self, SimError> {
        let c = params
            .server_count()
            .filter(|&c| c >= 1)
            .ok_or(SimError::NonIntegerServers(params.c()))?;
        Ok(Self {
            lambda: params.lambda(),
            mu: params.mu(),
            theta: params.theta(),
            p: params.p(),
            gamma: params.gamma(),
            c,
        })
    }

    /// Component rates `[arrival, service, abandonment, charge return]` in `state`.
    pub fn rates(&self, state: &SimState) -> [f64; 4] {
        let busy = state.q.min(state.s);
        let waiting = state.q.saturating_sub(state.s);
        [
            self.lambda,
            self.mu * f64::from(busy),
            self.theta * f64::from(waiting),
            self.gamma * f64::from(self.c - state.s),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("simulation needs an integer server count >= 1, got c = {0}")]
    NonIntegerServers(f64),
    #[error("stop rule needs N >= 1 customers or a horizon T > 0")]
    BadStopRule,
    #[error("warmup fraction must lie in [0, 0.9], got {0}")]
    BadWarmup(f64),
    #[error("grid resolution must be finite and > 0, got {0}")]
    BadGrid(f64),
    #[error("initial state must have s <= c")]
    BadInitialState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SimState {
    pub q: u32,
    pub s: u32,
}

impl SimState {
    pub fn busy(&self) -> u32 {
        self.q.min(self.s)
    }

    pub fn waiting(&self) -> u32 {
        self.q.saturating_sub(self.s)
    }

    pub fn charging(&self, c: u32) -> u32 {
        c - self.s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    Arrival,
    /// Service completion; the server stays active.
    Completion,
    /// Service completion after which the server leaves to charge.
    CompletionToCharge,
    Abandonment,
    ChargeReturn,
}

impl Event {
    pub fn tag(self) -> &'static str {
        match self {
            Event::Arrival => "arrival",
            Event::Completion => "completion",
            Event::CompletionToCharge => "completion-to-charge",
            Event::Abandonment => "abandonment",
            Event::ChargeReturn => "charge-return",
        }
    }

    fn apply(self, state: SimState) -> SimState {
        match self {
            Event::Arrival => SimState { q: state.q + 1, ..state },
            Event::Completion | Event::Abandonment => SimState { q: state.q - 1, ..state },
            Event::CompletionToCharge => SimState {
                q: state.q - 1,
                s: state.s - 1,
            },
            Event::ChargeReturn => SimState { s: state.s + 1, ..state },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: SimState,
    pub event: Event,
    pub holding_time: f64,
}

/// One Gillespie step: exponential holding time at the total rate, then an
/// event drawn in proportion to its rate. A completing server goes to charge
/// with probability `p` (one Bernoulli draw).
pub fn step<R: Rng + ?Sized>(state: SimState, model: &SimModel, rng: &mut R) -> Transition {
    let rates = model.rates(&state);
    let total: f64 = rates.iter().sum();
    let holding_time = rng.sample::<f64, _>(Exp1) / total;
    let mut u = rng.random::<f64>() * total;
    // Rounding can leave u just past the last bucket; fall back to the last
    // component with positive rate.
    let mut slot = rates.iter().rposition(|&r| r > 0.0).expect("arrival rate is positive");
    for (i, &r) in rates.iter().enumerate() {
        if u < r {
            slot = i;
            break;
        }
        u -= r;
    }
    let event = match slot {
        0 => Event::Arrival,
        1 => {
            if rng.random::<f64>() < model.p {
                Event::CompletionToCharge
            } else {
                Event::Completion
            }
        }
        2 => Event::Abandonment,
        _ => Event::ChargeReturn,
    };
    Transition {
        next: event.apply(state),
        event,
        holding_time,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop right after the N-th arrival.
    Customers(u64),
    /// Stop at time T.
    Horizon(f64),
}

/// When an arrival counts as delayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayObservation {
    /// The arrival finds no idle active server: pre-arrival `q >= s`.
    #[default]
    PreArrival,
    /// State including the arrival satisfies `q >= s`, i.e. pre-arrival `q + 1 >= s`.
    PostArrival,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub model: SimModel,
    pub stop: StopRule,
    /// Fraction of customers (or of the horizon) discarded before statistics.
    pub warmup: f64,
    pub seed: u64,
    pub replication: u64,
    pub initial: SimState,
    /// Resample the path onto `0, dt, 2 dt, ...` when set.
    pub grid_dt: Option<f64>,
    pub record_arrivals: bool,
    pub record_events: bool,
    pub delay_observation: DelayObservation,
}

impl SimConfig {
    /// Defaults: 20% warmup, seed 0, start empty with every server available.
    pub fn new(params: &ModelParams, stop: StopRule) -> Result<Self, SimError> {
        let model = SimModel::from_params(params)?;
        let config = Self {
            model,
            stop,
            warmup: 0.2,
            seed: 0,
            replication: 0,
            initial: SimState { q: 0, s: model.c },
            grid_dt: None,
            record_arrivals: false,
            record_events: false,
            delay_observation: DelayObservation::PreArrival,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replication(mut self, replication: u64) -> Self {
        self.replication = replication;
        self
    }

    pub fn with_warmup(mut self, warmup: f64) -> Result<Self, SimError> {
        self.warmup = warmup;
        self.validate()?;
        Ok(self)
    }

    pub fn with_grid(mut self, dt: f64) -> Result<Self, SimError> {
        self.grid_dt = Some(dt);
        self.validate()?;
        Ok(self)
    }

    pub fn with_initial(mut self, initial: SimState) -> Result<Self, SimError> {
        self.initial = initial;
        self.validate()?;
        Ok(self)
    }

    pub fn with_delay_observation(mut self, observation: DelayObservation) -> Self {
        self.delay_observation = observation;
        self
    }

    pub fn recording_arrivals(mut self) -> Self {
        self.record_arrivals = true;
        self
    }

    pub fn recording_events(mut self) -> Self {
        self.record_events = true;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        match self.stop {
            StopRule::Customers(n) if n >= 1 => {}
            StopRule::Horizon(t) if t.is_finite() && t > 0.0 => {}
            _ => return Err(SimError::BadStopRule),
        }
        if !(0.0..=0.9).contains(&self.warmup) {
            return Err(SimError::BadWarmup(self.warmup));
        }
        if let Some(dt) = self.grid_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(SimError::BadGrid(dt));
            }
        }
        if self.initial.s > self.model.c {
            return Err(SimError::BadInitialState);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EventCounts {
    pub arrivals: u64,
    /// All service completions, including those followed by charging.
    pub completions: u64,
    pub charge_departures: u64,
    pub abandonments: u64,
    pub charge_returns: u64,
}

impl EventCounts {
    fn record(&mut self, event: Event) {
        match event {
            Event::Arrival => self.arrivals += 1,
            Event::Completion => self.completions += 1,
            Event::CompletionToCharge => {
                self.completions += 1;
                self.charge_departures += 1;
            }
            Event::Abandonment => self.abandonments += 1,
            Event::ChargeReturn => self.charge_returns += 1,
        }
    }

    pub fn merge(&mut self, other: &EventCounts) {
        self.arrivals += other.arrivals;
        self.completions += other.completions;
        self.charge_departures += other.charge_departures;
        self.abandonments += other.abandonments;
        self.charge_returns += other.charge_returns;
    }
}

/// Pre-arrival state seen by an arriving customer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArrivalSnapshot {
    pub t: f64,
    pub q: u32,
    pub s: u32,
}

/// Post-event state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventRecord {
    pub t: f64,
    pub event: Event,
    pub q: u32,
    pub s: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub seed: u64,
    pub replication: u64,
    pub initial: SimState,
    pub final_state: SimState,
    pub end_time: f64,
    /// Start of the statistics window.
    pub window_start: f64,
    /// Whole-run counts.
    pub counts: EventCounts,
    /// Counts inside the statistics window.
    pub window_counts: EventCounts,
    /// Delayed arrivals inside the window.
    pub delay_events: u64,
    pub delay_probability: f64,
    pub abandonment_fraction: f64,
    pub time_averages: TimeAverages,
    #[serde(skip)]
    pub integrals: TimeIntegrals,
    /// `s + charging == c` held after every event.
    pub servers_conserved: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<GridPoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<Vec<ArrivalSnapshot>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<EventRecord>>,
}

impl SimResult {
    /// `N_A = N_B + N_Ab + (q_end - q_start)` over the whole run.
    pub fn customers_conserved(&self) -> bool {
        let c = &self.counts;
        i128::from(c.arrivals)
            == i128::from(c.completions) + i128::from(c.abandonments)
                + i128::from(self.final_state.q)
                - i128::from(self.initial.q)
    }

    /// Net charge departures equal the change in charging servers.
    pub fn charging_conserved(&self) -> bool {
        let c = &self.counts;
        i128::from(c.charge_departures) - i128::from(c.charge_returns)
            == i128::from(self.initial.s) - i128::from(self.final_state.s)
    }

    pub fn window_duration(&self) -> f64 {
        self.end_time - self.window_start
    }

    /// `|arrival rate - (completion rate + abandonment rate)| / lambda` in the window.
    pub fn flow_imbalance(&self, lambda: f64) -> f64 {
        let c = &self.window_counts;
        let net = c.arrivals as f64 - c.completions as f64 - c.abandonments as f64;
        (net / self.window_duration()).abs() / lambda
    }
}

/// Runs one replication to its stop rule. Deterministic in
/// `(config, seed, replication)`.
pub fn run(config: &SimConfig) -> SimResult {
    let model = &config.model;
    let mut rng = rng_for(config.seed, config.replication);
    let mut state = config.initial;
    let mut clock = 0.0;
    let mut charging = model.c - state.s;
    let mut servers_conserved = true;

    let (warmup_arrivals, mut window_start) = match config.stop {
        StopRule::Customers(n) => {
            let w = (config.warmup * n as f64).floor() as u64;
            (w, if w == 0 { Some(0.0) } else { None })
        }
        StopRule::Horizon(t) => (0, Some(config.warmup * t)),
    };
    let horizon = match config.stop {
        StopRule::Horizon(t) => Some(t),
        StopRule::Customers(_) => None,
    };

    let mut counts = EventCounts::default();
    let mut window_counts = EventCounts::default();
    let mut delay_events = 0u64;
    let mut integrals = TimeIntegrals::default();
    let mut sampler = config.grid_dt.map(GridSampler::new);
    let mut trajectory = config.grid_dt.map(|_| Vec::new());
    let mut arrivals = config.record_arrivals.then(Vec::new);
    let mut events = config.record_events.then(Vec::new);

    loop {
        let tr = step(state, model, &mut rng);
        let mut t_next = clock + tr.holding_time;
        let past_horizon = horizon.is_some_and(|h| t_next > h);
        if past_horizon {
            t_next = horizon.expect("checked");
        }
        if let Some(start) = window_start {
            let from = clock.max(start);
            if t_next > from {
                integrals.add(state.q, state.s, t_next - from);
            }
        }
        if let (Some(sampler), Some(out)) = (sampler.as_mut(), trajectory.as_mut()) {
            sampler.emit_before(t_next, state, out);
        }
        clock = t_next;
        if past_horizon {
            break;
        }

        let in_window = window_start.is_some_and(|start| clock >= start)
            && !(tr.event == Event::Arrival && counts.arrivals < warmup_arrivals);
        if tr.event == Event::Arrival {
            if let Some(log) = arrivals.as_mut() {
                log.push(ArrivalSnapshot {
                    t: clock,
                    q: state.q,
                    s: state.s,
                });
            }
            if in_window {
                let delayed = match config.delay_observation {
                    DelayObservation::PreArrival => state.q >= state.s,
                    DelayObservation::PostArrival => state.q + 1 >= state.s,
                };
                delay_events += u64::from(delayed);
            }
        }
        counts.record(tr.event);
        if in_window {
            window_counts.record(tr.event);
        }
        match tr.event {
            Event::CompletionToCharge => charging += 1,
            Event::ChargeReturn => charging -= 1,
            _ => {}
        }
        state = tr.next;
        servers_conserved &= state.s + charging == model.c;
        if let Some(log) = events.as_mut() {
            log.push(EventRecord {
                t: clock,
                event: tr.event,
                q: state.q,
                s: state.s,
            });
        }

        if tr.event == Event::Arrival {
            if window_start.is_none() && counts.arrivals == warmup_arrivals {
                window_start = Some(clock);
            }
            if let StopRule::Customers(n) = config.stop {
                if counts.arrivals >= n {
                    break;
                }
            }
        }
    }
    if let (Some(sampler), Some(out)) = (sampler.as_mut(), trajectory.as_mut()) {
        sampler.emit_through(clock, state, out);
    }

    let window_start = window_start.unwrap_or(clock);
    let ratio = |num: u64, den: u64| if den == 0 { f64::NAN } else { num as f64 / den as f64 };
    SimResult {
        seed: config.seed,
        replication: config.replication,
        initial: config.initial,
        final_state: state,
        end_time: clock,
        window_start,
        counts,
        window_counts,
        delay_events,
        delay_probability: ratio(delay_events, window_counts.arrivals),
        abandonment_fraction: ratio(window_counts.abandonments, window_counts.arrivals),
        time_averages: integrals.averages(),
        integrals,
        servers_conserved,
        trajectory,
        arrivals,
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::resample::resample;

    fn model(lambda: f64, mu: f64, theta: f64, p: f64, gamma: f64, c: u32) -> SimModel {
        SimModel::from_params(&ModelParams::new(lambda, mu, theta, p, gamma, f64::from(c)).unwrap())
            .unwrap()
    }

    #[test]
    fn empty_system_only_admits_arrivals() {
        let m = model(3.0, 1.0, 1.0, 0.5, 1.0, 4);
        let mut rng = rng_for(1, 0);
        for _ in 0..100 {
            let tr = step(SimState { q: 0, s: 4 }, &m, &mut rng);
            assert_eq!(tr.event, Event::Arrival);
            assert_eq!(tr.next, SimState { q: 1, s: 4 });
            assert!(tr.holding_time > 0.0);
        }
    }

    #[test]
    fn certain_charging_takes_server_on_every_completion() {
        let m = model(1.0, 1.0, 1.0, 1.0, 1.0, 5);
        let mut rng = rng_for(7, 3);
        let start = SimState { q: 5, s: 3 };
        let mut completions = 0;
        for _ in 0..2_000 {
            let tr = step(start, &m, &mut rng);
            assert_ne!(tr.event, Event::Completion);
            if tr.event == Event::CompletionToCharge {
                completions += 1;
                assert_eq!(tr.next, SimState { q: 4, s: 2 });
            }
        }
        assert!(completions > 0);
    }

    #[test]
    fn non_integer_servers_rejected() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.0, 1.0, 2.5).unwrap();
        assert!(matches!(
            SimConfig::new(&p, StopRule::Customers(10)),
            Err(SimError::NonIntegerServers(_))
        ));
    }

    #[test]
    fn config_validation() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.0, 1.0, 2.0).unwrap();
        assert!(SimConfig::new(&p, StopRule::Customers(0)).is_err());
        assert!(SimConfig::new(&p, StopRule::Horizon(-1.0)).is_err());
        let cfg = SimConfig::new(&p, StopRule::Customers(10)).unwrap();
        assert!(cfg.clone().with_warmup(0.95).is_err());
        assert!(cfg.clone().with_grid(0.0).is_err());
        assert!(cfg.with_initial(SimState { q: 0, s: 3 }).is_err());
    }

    #[test]
    fn run_is_deterministic() {
        let p = ModelParams::new(20.0, 1.0, 0.5, 0.3, 0.8, 15.0).unwrap();
        let cfg = SimConfig::new(&p, StopRule::Customers(5_000))
            .unwrap()
            .with_seed(11)
            .with_replication(2)
            .recording_events();
        assert_eq!(run(&cfg), run(&cfg));
        let other = run(&cfg.clone().with_replication(3));
        assert_ne!(run(&cfg).events, other.events);
    }

    #[test]
    fn conservation_holds() {
        let p = ModelParams::new(20.0, 1.0, 0.5, 0.3, 0.8, 15.0).unwrap();
        for rep in 0..5 {
            let cfg = SimConfig::new(&p, StopRule::Customers(20_000)).unwrap().with_replication(rep);
            let r = run(&cfg);
            assert!(r.customers_conserved());
            assert!(r.charging_conserved());
            assert!(r.servers_conserved);
            assert_eq!(r.counts.arrivals, 20_000);
            assert_eq!(r.window_counts.arrivals, 16_000);
            assert!(r.flow_imbalance(p.lambda()) < 0.01);
            assert!((0.0..=1.0).contains(&r.delay_probability));
            assert!((0.0..=1.0).contains(&r.abandonment_fraction));
        }
    }

    #[test]
    fn horizon_stop_integrates_to_the_end() {
        let p = ModelParams::new(5.0, 1.0, 1.0, 0.2, 1.0, 4.0).unwrap();
        let cfg = SimConfig::new(&p, StopRule::Horizon(100.0)).unwrap().with_warmup(0.5).unwrap();
        let r = run(&cfg);
        assert_eq!(r.end_time, 100.0);
        assert_eq!(r.window_start, 50.0);
        assert!((r.integrals.duration - 50.0).abs() < 1e-9);
    }

    #[test]
    fn online_grid_matches_offline_resample() {
        let p = ModelParams::new(10.0, 1.0, 1.0, 0.4, 0.5, 8.0).unwrap();
        let cfg = SimConfig::new(&p, StopRule::Customers(2_000))
            .unwrap()
            .with_grid(0.37)
            .unwrap()
            .recording_events()
            .with_seed(5);
        let r = run(&cfg);
        let offline = resample(r.initial, r.events.as_ref().unwrap(), 0.37, r.end_time);
        assert_eq!(r.trajectory.as_ref().unwrap(), &offline);
    }

    #[test]
    fn huge_abandonment_rate_keeps_queue_empty() {
        let p = ModelParams::new(50.0, 1.0, 1e6, 0.0, 1.0, 10.0).unwrap();
        let cfg = SimConfig::new(&p, StopRule::Customers(20_000)).unwrap();
        let r = run(&cfg);
        assert!(r.time_averages.mean_excess < 0.01, "{}", r.time_averages.mean_excess);
    }

    #[test]
    fn overloaded_event_rates_balance() {
        // Flow balance at the fluid point: completions mu s* ~ 66.7, abandonments ~ 33.3.
        let p = ModelParams::new(100.0, 1.0, 1.0, 0.5, 1.0, 100.0).unwrap();
        let cfg = SimConfig::new(&p, StopRule::Customers(200_000)).unwrap().with_seed(3);
        let r = run(&cfg);
        let d = r.window_duration();
        let completion_rate = r.window_counts.completions as f64 / d;
        let abandonment_rate = r.window_counts.abandonments as f64 / d;
        assert!((completion_rate - 200.0 / 3.0).abs() < 1.0, "{completion_rate}");
        assert!((abandonment_rate - 100.0 / 3.0).abs() < 1.0, "{abandonment_rate}");
    }
}
