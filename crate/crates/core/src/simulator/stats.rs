use serde::Serialize;

/// Running time integrals of `Q`, `S` and their products over a window.
/// Integrals from separate runs add, which gives pooled estimates directly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TimeIntegrals {
    pub duration: f64,
    q: f64,
    q2: f64,
    s: f64,
    s2: f64,
    qs: f64,
    excess: f64,
    excess2: f64,
    idle: f64,
    idle2: f64,
}

impl TimeIntegrals {
    pub fn add(&mut self, q: u32, s: u32, dt: f64) {
        let (qf, sf) = (f64::from(q), f64::from(s));
        let excess = f64::from(q.saturating_sub(s));
        let idle = f64::from(s.saturating_sub(q));
        self.duration += dt;
        self.q += qf * dt;
        self.q2 += qf * qf * dt;
        self.s += sf * dt;
        self.s2 += sf * sf * dt;
        self.qs += qf * sf * dt;
        self.excess += excess * dt;
        self.excess2 += excess * excess * dt;
        self.idle += idle * dt;
        self.idle2 += idle * idle * dt;
    }

    pub fn merge(&mut self, other: &TimeIntegrals) {
        self.duration += other.duration;
        self.q += other.q;
        self.q2 += other.q2;
        self.s += other.s;
        self.s2 += other.s2;
        self.qs += other.qs;
        self.excess += other.excess;
        self.excess2 += other.excess2;
        self.idle += other.idle;
        self.idle2 += other.idle2;
    }

    pub fn averages(&self) -> TimeAverages {
        let d = self.duration;
        if d <= 0.0 {
            return TimeAverages::nan();
        }
        let (mq, ms) = (self.q / d, self.s / d);
        let (me, mi) = (self.excess / d, self.idle / d);
        TimeAverages {
            mean_q: mq,
            mean_s: ms,
            mean_excess: me,
            mean_idle: mi,
            var_q: (self.q2 / d - mq * mq).max(0.0),
            var_s: (self.s2 / d - ms * ms).max(0.0),
            cov_qs: self.qs / d - mq * ms,
            var_excess: (self.excess2 / d - me * me).max(0.0),
            var_idle: (self.idle2 / d - mi * mi).max(0.0),
        }
    }
}

/// Time-weighted moments over the statistics window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeAverages {
    pub mean_q: f64,
    pub mean_s: f64,
    /// `E[(Q - S)+]`
    pub mean_excess: f64,
    /// `E[(S - Q)+]`
    pub mean_idle: f64,
    pub var_q: f64,
    pub var_s: f64,
    pub cov_qs: f64,
    pub var_excess: f64,
    pub var_idle: f64,
}

impl TimeAverages {
    fn nan() -> Self {
        Self {
            mean_q: f64::NAN,
            mean_s: f64::NAN,
            mean_excess: f64::NAN,
            mean_idle: f64::NAN,
            var_q: f64::NAN,
            var_s: f64::NAN,
            cov_qs: f64::NAN,
            var_excess: f64::NAN,
            var_idle: f64::NAN,
        }
    }
}
