//! Model primitives, validation and regime classification.

use std::fmt;

use serde::{Deserialize, Serialize};

/// The six primitives exactly as a user supplies them, before validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub lambda: f64,
    pub mu: f64,
    pub theta: f64,
    pub p: f64,
    pub gamma: f64,
    pub c: f64,
}

impl RawParams {
    pub fn validate(self) -> Result<ModelParams, ParamError> {
        let mut violations = Vec::new();
        check_workload(
            self.lambda,
            self.mu,
            self.theta,
            self.p,
            self.gamma,
            &mut violations,
        );
        if !(self.c.is_finite() && self.c > 0.0) {
            violations.push(Violation::new(Field::C, "must be finite and > 0", self.c));
        }
        if violations.is_empty() {
            check_loads(self.lambda, self.mu, self.p, self.gamma, &mut violations);
        }
        if violations.is_empty() {
            Ok(ModelParams {
                workload: Workload {
                    lambda: self.lambda,
                    mu: self.mu,
                    theta: self.theta,
                    p: self.p,
                    gamma: self.gamma,
                },
                c: self.c,
            })
        } else {
            Err(ParamError { violations })
        }
    }
}

/// Names of the model primitives, used in validation reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Lambda,
    Mu,
    Theta,
    P,
    Gamma,
    C,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Field::Lambda => "lambda",
            Field::Mu => "mu",
            Field::Theta => "theta",
            Field::P => "p",
            Field::Gamma => "gamma",
            Field::C => "c",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: Field,
    pub constraint: &'static str,
    pub value: f64,
}

impl Violation {
    fn new(field: Field, constraint: &'static str, value: f64) -> Self {
        Self {
            field,
            constraint,
            value,
        }
    }
}

/// Every constraint a raw parameter set violates.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ParamError {
    pub violations: Vec<Violation>,
}

impl ParamError {
    pub fn fields(&self) -> impl Iterator<Item = Field> + '_ {
        self.violations.iter().map(|v| v.field)
    }
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid model parameters:")?;
        for v in &self.violations {
            write!(f, " {} {} (got {});", v.field, v.constraint, v.value)?;
        }
        Ok(())
    }
}

fn positive_rate(field: Field, value: f64, out: &mut Vec<Violation>) {
    if !(value.is_finite() && value > 0.0) {
        out.push(Violation::new(field, "must be finite and > 0", value));
    }
}

fn check_workload(
    lambda: f64,
    mu: f64,
    theta: f64,
    p: f64,
    gamma: f64,
    out: &mut Vec<Violation>,
) {
    positive_rate(Field::Lambda, lambda, out);
    positive_rate(Field::Mu, mu, out);
    positive_rate(Field::Theta, theta, out);
    if !(0.0..=1.0).contains(&p) {
        out.push(Violation::new(Field::P, "must lie in [0, 1]", p));
    }
    positive_rate(Field::Gamma, gamma, out);
}

fn check_loads(lambda: f64, mu: f64, p: f64, gamma: f64, out: &mut Vec<Violation>) {
    if !(lambda / mu).is_finite() {
        out.push(Violation::new(Field::Mu, "lambda/mu overflows", mu));
    }
    if !(lambda * p / gamma).is_finite() {
        out.push(Violation::new(Field::Gamma, "lambda*p/gamma overflows", gamma));
    }
}

/// Demand-side primitives: everything except the server count.
///
/// Staffing solvers treat `c` as the unknown, so they take a `Workload`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Workload {
    lambda: f64,
    mu: f64,
    theta: f64,
    p: f64,
    gamma: f64,
}

impl Workload {
    pub fn new(lambda: f64, mu: f64, theta: f64, p: f64, gamma: f64) -> Result<Self, ParamError> {
        let mut violations = Vec::new();
        check_workload(lambda, mu, theta, p, gamma, &mut violations);
        if violations.is_empty() {
            check_loads(lambda, mu, p, gamma, &mut violations);
        }
        if violations.is_empty() {
            Ok(Self {
                lambda,
                mu,
                theta,
                p,
                gamma,
            })
        } else {
            Err(ParamError { violations })
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Servers needed at the regime boundary: `lambda/mu + lambda*p/gamma`.
    pub fn offered_load(&self) -> f64 {
        self.lambda / self.mu + self.lambda * self.p / self.gamma
    }

    pub fn kappa(&self) -> Kappa {
        Kappa(self.gamma / (self.gamma + self.p * self.mu))
    }

    pub fn with_servers(&self, c: f64) -> Result<ModelParams, ParamError> {
        RawParams {
            lambda: self.lambda,
            mu: self.mu,
            theta: self.theta,
            p: self.p,
            gamma: self.gamma,
            c,
        }
        .validate()
    }

    pub fn regime_at(&self, c: f64) -> Regime {
        Regime::from_margin(c - self.offered_load())
    }
}

/// A validated parameter set. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    workload: Workload,
    c: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, mu: f64, theta: f64, p: f64, gamma: f64, c: f64) -> Result<Self, ParamError> {
        RawParams {
            lambda,
            mu,
            theta,
            p,
            gamma,
            c,
        }
        .validate()
    }

    pub fn lambda(&self) -> f64 {
        self.workload.lambda
    }
    pub fn mu(&self) -> f64 {
        self.workload.mu
    }
    pub fn theta(&self) -> f64 {
        self.workload.theta
    }
    pub fn p(&self) -> f64 {
        self.workload.p
    }
    pub fn gamma(&self) -> f64 {
        self.workload.gamma
    }
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn workload(&self) -> &Workload {
        &self.workload
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            lambda: self.lambda(),
            mu: self.mu(),
            theta: self.theta(),
            p: self.p(),
            gamma: self.gamma(),
            c: self.c,
        }
    }

    pub fn offered_load(&self) -> f64 {
        self.workload.offered_load()
    }

    pub fn regime(&self) -> Regime {
        self.workload.regime_at(self.c)
    }

    pub fn kappa(&self) -> Kappa {
        self.workload.kappa()
    }

    /// Integer server count for simulation, if `c` is a whole number.
    pub fn server_count(&self) -> Option<u32> {
        if self.c.fract() == 0.0 && self.c <= u32::MAX as f64 {
            Some(self.c as u32)
        } else {
            None
        }
    }
}

impl Serialize for ModelParams {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.raw().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ModelParams {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        RawParams::deserialize(deserializer)?
            .validate()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    #[serde(rename = "UL")]
    Underloaded,
    #[serde(rename = "OL")]
    Overloaded,
    #[serde(rename = "Critical")]
    Critical,
}

impl RegimeTag {
    /// Critical systems use the underloaded closed forms.
    pub fn uses_underloaded_formulas(self) -> bool {
        !matches!(self, RegimeTag::Overloaded)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            RegimeTag::Underloaded => "UL",
            RegimeTag::Overloaded => "OL",
            RegimeTag::Critical => "Critical",
        }
    }
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Regime tag together with `c - (lambda/mu + lambda*p/gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub load_margin: f64,
}

impl Regime {
    /// Exact comparison on the margin; callers wanting slack apply their own.
    pub fn from_margin(load_margin: f64) -> Self {
        let tag = if load_margin > 0.0 {
            RegimeTag::Underloaded
        } else if load_margin < 0.0 {
            RegimeTag::Overloaded
        } else {
            RegimeTag::Critical
        };
        Self { tag, load_margin }
    }
}

/// Long-run fraction of servers available in overload, `gamma/(gamma + p*mu)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Kappa(f64);

impl Kappa {
    pub fn value(self) -> f64 {
        self.0
    }
}
