//! Fluid model: drift, fixed-step RK4 integration and closed-form fixed points.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::model::{ModelParams, Regime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub q: f64,
    pub s: f64,
}

impl FluidState {
    pub fn new(q: f64, s: f64) -> Self {
        Self { q, s }
    }

    pub fn distance(&self, other: &FluidState) -> f64 {
        (self.q - other.q).hypot(self.s - other.s)
    }

    fn axpy(&self, h: f64, d: Drift) -> FluidState {
        FluidState::new(self.q + h * d.dq, self.s + h * d.ds)
    }
}

/// Time derivative of the fluid state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Drift {
    pub dq: f64,
    pub ds: f64,
}

pub fn drift(state: FluidState, params: &ModelParams) -> Drift {
    let busy = state.q.min(state.s);
    let waiting = (state.q - state.s).max(0.0);
    Drift {
        dq: params.lambda() - params.mu() * busy - params.theta() * waiting,
        ds: params.gamma() * (params.c() - state.s) - params.p() * params.mu() * busy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub q_star: f64,
    pub s_star: f64,
    pub regime: Regime,
}

impl FixedPoint {
    pub fn state(&self) -> FluidState {
        FluidState::new(self.q_star, self.s_star)
    }
}

/// Equilibrium of the fluid ODE. Critical systems get the underloaded formulas.
pub fn fixed_point(params: &ModelParams) -> FixedPoint {
    let regime = params.regime();
    let (lambda, mu, theta, c) = (params.lambda(), params.mu(), params.theta(), params.c());
    if regime.tag.uses_underloaded_formulas() {
        FixedPoint {
            q_star: lambda / mu,
            s_star: c - lambda * params.p() / params.gamma(),
            regime,
        }
    } else {
        let s_star = params.kappa().value() * c;
        FixedPoint {
            q_star: (lambda - mu * s_star) / theta + s_star,
            s_star,
            regime,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FluidError {
    #[error("step must be finite and > 0 and horizon >= step (step {step}, horizon {horizon})")]
    BadGrid { step: f64, horizon: f64 },
    #[error("initial state must satisfy q >= 0 and 0 <= s <= c")]
    BadInitialState,
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FluidState>,
    pub params: ModelParams,
}

impl FluidTrajectory {
    pub fn terminal(&self) -> FluidState {
        *self.states.last().expect("trajectory holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with header `t,q,s`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["t", "q", "s"])?;
        for (t, state) in self.times.iter().zip(&self.states) {
            writer.write_record([t.to_string(), state.q.to_string(), state.s.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// `0.01 / max(mu, gamma, theta)`.
pub fn default_step(params: &ModelParams) -> f64 {
    0.01 / params.mu().max(params.gamma()).max(params.theta())
}

fn rk4_step(state: FluidState, h: f64, params: &ModelParams) -> FluidState {
    let k1 = drift(state, params);
    let k2 = drift(state.axpy(0.5 * h, k1), params);
    let k3 = drift(state.axpy(0.5 * h, k2), params);
    let k4 = drift(state.axpy(h, k3), params);
    FluidState::new(
        state.q + h / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq),
        state.s + h / 6.0 * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds),
    )
}

/// Classical RK4 on a uniform grid `0, step, 2 step, ...`; the last step is
/// shortened when `horizon` is not a multiple of `step`. The kink at `q = s`
/// is stepped through without event location.
pub fn integrate(
    params: &ModelParams,
    init: FluidState,
    horizon: f64,
    step: f64,
) -> Result<FluidTrajectory, FluidError> {
    if !(step.is_finite() && step > 0.0 && horizon.is_finite() && horizon >= step) {
        return Err(FluidError::BadGrid { step, horizon });
    }
    if !(init.q >= 0.0 && init.s >= 0.0 && init.s <= params.c()) {
        return Err(FluidError::BadInitialState);
    }
    let steps = (horizon / step - 1e-9).ceil() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(init);
    let mut state = init;
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * step;
        let t = (k as f64 * step).min(horizon);
        state = rk4_step(state, t - t_prev, params);
        if !(state.q.is_finite() && state.s.is_finite()) {
            return Err(FluidError::NonFinite { time: t });
        }
        times.push(t);
        states.push(state);
    }
    Ok(FluidTrajectory {
        times,
        states,
        params: *params,
    })
}
