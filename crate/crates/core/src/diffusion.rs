//! Linear-noise (Ornstein-Uhlenbeck) description of fluctuations around the
//! fluid equilibrium: Jacobian, diffusion matrix, 2x2 Lyapunov solver and the
//! closed-form stationary moments for each regime.

use std::ops::{Add, Mul};

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::fluid::{fixed_point, FixedPoint};
use crate::model::{ModelParams, RegimeTag};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Matrix2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Matrix2 {
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub const fn symmetric(a11: f64, a12: f64, a22: f64) -> Self {
        Self::new(a11, a12, a12, a22)
    }

    pub fn diag(a11: f64, a22: f64) -> Self {
        Self::new(a11, 0.0, 0.0, a22)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a21.abs()).max(self.a22.abs())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(k * self.a11, k * self.a12, k * self.a21, k * self.a22)
    }

    pub fn is_finite(&self) -> bool {
        [self.a11, self.a12, self.a21, self.a22].iter().all(|v| v.is_finite())
    }

    /// Both eigenvalues in the open left half-plane.
    pub fn is_hurwitz(&self) -> bool {
        self.trace() < 0.0 && self.det() > 0.0
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_symmetric_eigenvalue(&self) -> f64 {
        let off = 0.5 * (self.a12 + self.a21);
        let mean = 0.5 * (self.a11 + self.a22);
        let half_gap = (0.5 * (self.a11 - self.a22)).hypot(off);
        mean - half_gap
    }

    pub fn outer(v: (f64, f64)) -> Self {
        Self::new(v.0 * v.0, v.0 * v.1, v.1 * v.0, v.1 * v.1)
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;
    fn add(self, rhs: Matrix2) -> Matrix2 {
        Matrix2::new(
            self.a11 + rhs.a11,
            self.a12 + rhs.a12,
            self.a21 + rhs.a21,
            self.a22 + rhs.a22,
        )
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, rhs: Matrix2) -> Matrix2 {
        Matrix2::new(
            self.a11 * rhs.a11 + self.a12 * rhs.a21,
            self.a11 * rhs.a12 + self.a12 * rhs.a22,
            self.a21 * rhs.a11 + self.a22 * rhs.a21,
            self.a21 * rhs.a12 + self.a22 * rhs.a22,
        )
    }
}

/// Serialized row-major as `[[a11, a12], [a21, a22]]`.
impl Serialize for Matrix2 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(2))?;
        seq.serialize_element(&[self.a11, self.a12])?;
        seq.serialize_element(&[self.a21, self.a22])?;
        seq.end()
    }
}

/// `J V + V J^T + Sigma`.
pub fn lyapunov_residual(j: &Matrix2, v: &Matrix2, sigma: &Matrix2) -> Matrix2 {
    *j * *v + *v * j.transpose() + *sigma
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffusionError {
    #[error("Jacobian is not Hurwitz (trace {trace}, det {det}); no stationary diffusion")]
    NotHurwitz { trace: f64, det: f64 },
    #[error("Lyapunov system is singular")]
    Singular,
    #[error("closed-form {quantity} = {closed} disagrees with Lyapunov solution {lyapunov}")]
    ClosedFormMismatch {
        quantity: &'static str,
        closed: f64,
        lyapunov: f64,
    },
}

/// Unique symmetric `V` with `J V + V J^T + Sigma = 0`.
///
/// The symmetric part of `Sigma` is used. The matrix equation collapses to a
/// 3x3 linear system in `(v11, v12, v22)`, solved by Gaussian elimination with
/// partial pivoting.
pub fn solve_lyapunov(j: &Matrix2, sigma: &Matrix2) -> Result<Matrix2, DiffusionError> {
    if !j.is_hurwitz() {
        return Err(DiffusionError::NotHurwitz {
            trace: j.trace(),
            det: j.det(),
        });
    }
    let s12 = 0.5 * (sigma.a12 + sigma.a21);
    let mut m = [
        [2.0 * j.a11, 2.0 * j.a12, 0.0, -sigma.a11],
        [j.a21, j.a11 + j.a22, j.a12, -s12],
        [0.0, 2.0 * j.a21, 2.0 * j.a22, -sigma.a22],
    ];
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("non-empty range");
        if m[pivot][col] == 0.0 {
            return Err(DiffusionError::Singular);
        }
        m.swap(col, pivot);
        for row in col + 1..3 {
            let factor = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][3] - tail) / m[row][row];
    }
    Ok(Matrix2::symmetric(x[0], x[1], x[2]))
}

/// One primitive transition: state increment and its mean rate at equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRate {
    pub name: &'static str,
    pub increment: (f64, f64),
    pub rate: f64,
}

/// Primitive transitions evaluated at the fixed point of the active face.
pub fn event_table(params: &ModelParams, fp: &FixedPoint) -> Vec<EventRate> {
    let (lambda, mu, p, gamma, theta) = (
        params.lambda(),
        params.mu(),
        params.p(),
        params.gamma(),
        params.theta(),
    );
    let busy = fp.q_star.min(fp.s_star);
    let waiting = (fp.q_star - fp.s_star).max(0.0);
    vec![
        EventRate {
            name: "arrival",
            increment: (1.0, 0.0),
            rate: lambda,
        },
        EventRate {
            name: "completion",
            increment: (-1.0, 0.0),
            rate: (1.0 - p) * mu * busy,
        },
        EventRate {
            name: "completion-to-charge",
            increment: (-1.0, -1.0),
            rate: p * mu * busy,
        },
        EventRate {
            name: "abandonment",
            increment: (-1.0, 0.0),
            rate: theta * waiting,
        },
        EventRate {
            name: "charge-return",
            increment: (0.0, 1.0),
            rate: gamma * (params.c() - fp.s_star),
        },
    ]
}

/// `sum_e rate_e * nu_e nu_e^T` over the primitive event table.
pub fn sigma_from_events(params: &ModelParams, fp: &FixedPoint) -> Matrix2 {
    event_table(params, fp)
        .iter()
        .fold(Matrix2::default(), |acc, e| acc + Matrix2::outer(e.increment).scale(e.rate))
}

/// Jacobian of the drift on the active face and the simplified diffusion
/// matrix `[[2 lambda, p mu x], [p mu x, 2 p mu x]]` with `x = q*` (UL) or `s*` (OL).
pub fn jacobian_sigma(params: &ModelParams, fp: &FixedPoint) -> (Matrix2, Matrix2) {
    let (lambda, mu, p, gamma, theta) = (
        params.lambda(),
        params.mu(),
        params.p(),
        params.gamma(),
        params.theta(),
    );
    if fp.regime.tag.uses_underloaded_formulas() {
        let j = Matrix2::new(-mu, 0.0, -p * mu, -gamma);
        let x = p * mu * fp.q_star;
        (j, Matrix2::symmetric(2.0 * lambda, x, 2.0 * x))
    } else {
        let j = Matrix2::new(-theta, theta - mu, 0.0, -(gamma + p * mu));
        let x = p * mu * fp.s_star;
        (j, Matrix2::symmetric(2.0 * lambda, x, 2.0 * x))
    }
}

/// Stationary second moments of the diffusion approximation.
///
/// `v_qq`, `v_ss`, `v_qs` are the regime closed forms. `lyapunov` is the exact
/// solution of the Lyapunov equation for the same `(J, Sigma)`. In overload the
/// two differ only in `v_qq`: the closed form keeps `lambda/theta`, while the
/// exact solution satisfies `theta v_qq + (mu - theta) v_qs = lambda`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MomentSet {
    pub regime: RegimeTag,
    pub q_star: f64,
    pub s_star: f64,
    pub v_qq: f64,
    pub v_ss: f64,
    pub v_qs: f64,
    #[serde(rename = "J")]
    pub j: Matrix2,
    #[serde(rename = "Sigma")]
    pub sigma: Matrix2,
    pub lyapunov: Matrix2,
    pub warnings: Vec<String>,
}

impl MomentSet {
    /// Variance of `Q - S` under the closed forms.
    pub fn difference_variance(&self) -> f64 {
        self.v_qq + self.v_ss - 2.0 * self.v_qs
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

const CLOSED_FORM_TOL: f64 = 1e-9;

/// Regime closed forms for the stationary variances and covariance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ClosedForms {
    pub v_qq: f64,
    pub v_ss: f64,
    pub v_qs: f64,
}

pub fn closed_forms(params: &ModelParams, fp: &FixedPoint) -> ClosedForms {
    let (lambda, mu, theta, p, gamma, c) = (
        params.lambda(),
        params.mu(),
        params.theta(),
        params.p(),
        params.gamma(),
        params.c(),
    );
    if fp.regime.tag.uses_underloaded_formulas() {
        ClosedForms {
            v_qq: lambda / mu,
            v_ss: lambda * p / gamma,
            v_qs: 0.0,
        }
    } else {
        let a = gamma + p * mu;
        let v_ss = c * gamma * p * mu / (a * a);
        ClosedForms {
            v_qq: lambda / theta,
            v_ss,
            v_qs: v_ss * (gamma + theta + p * mu - mu) / (theta + gamma + p * mu),
        }
    }
}

/// `v_qq` implied by `v_qs` through `theta v_qq + (mu - theta) v_qs = lambda`
/// in overload; the plain closure otherwise.
pub fn coupled_v_qq(params: &ModelParams, fp: &FixedPoint, v_qs: f64) -> f64 {
    if fp.regime.tag.uses_underloaded_formulas() {
        params.lambda() / params.mu()
    } else {
        (params.lambda() - (params.mu() - params.theta()) * v_qs) / params.theta()
    }
}


pub fn stationary_moments(params: &ModelParams) -> Result<MomentSet, DiffusionError> {
    let fp = fixed_point(params);
    let (j, sigma) = jacobian_sigma(params, &fp);
    let lyapunov = solve_lyapunov(&j, &sigma)?;
    let mut warnings = Vec::new();

    let raw = sigma_from_events(params, &fp);
    let sigma_gap = (raw + sigma.scale(-1.0)).max_abs();
    if sigma_gap > 1e-9 * sigma.max_abs().max(1.0) {
        warnings.push(format!(
            "simplified diffusion matrix differs from event-table assembly by {sigma_gap:e}"
        ));
    }

    if fp.regime.tag == RegimeTag::Critical {
        warnings.push(
            "critical load: underloaded matrices used; diffusion approximation least reliable here".to_string(),
        );
    }
    let ClosedForms { v_qq, v_ss, v_qs } = closed_forms(params, &fp);

    let checks = [
        ("v_ss", v_ss, lyapunov.a22),
        ("v_qs", v_qs, lyapunov.a12),
    ];
    for (quantity, closed, exact) in checks {
        let scale = lyapunov.a11.abs().max(lyapunov.a22.abs());
        if (closed - exact).abs() > CLOSED_FORM_TOL * scale.max(1e-300) {
            return Err(DiffusionError::ClosedFormMismatch {
                quantity,
                closed,
                lyapunov: exact,
            });
        }
    }
    // In UL the v_qq closure is exact; in OL it must satisfy the coupled identity.
    let coupled_qq = coupled_v_qq(params, &fp, lyapunov.a12);
    if relative_gap(coupled_qq, lyapunov.a11) > CLOSED_FORM_TOL {
        return Err(DiffusionError::ClosedFormMismatch {
            quantity: "v_qq",
            closed: coupled_qq,
            lyapunov: lyapunov.a11,
        });
    }
    let closure_gap = relative_gap(v_qq, lyapunov.a11);
    if closure_gap > 1e-6 {
        warnings.push(format!(
            "v_qq closure {v_qq} differs from the exact Lyapunov value {} by {:.2}%",
            lyapunov.a11,
            100.0 * closure_gap
        ));
    }

    Ok(MomentSet {
        regime: fp.regime.tag,
        q_star: fp.q_star,
        s_star: fp.s_star,
        v_qq,
        v_ss,
        v_qs,
        j,
        sigma,
        lyapunov,
        warnings,
    })
}

/// Range of service rates giving negative queue/server covariance in overload.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CovSignThresholds {
    /// `(gamma + theta)/(1 - p)`; infinite when `p = 1`.
    pub mu_neg: f64,
    /// `lambda gamma/(gamma c - lambda p)`; infinite when the denominator is <= 0.
    pub mu_ol: f64,
    pub window_nonempty: bool,
}

pub fn covariance_sign_thresholds(lambda: f64, theta: f64, p: f64, gamma: f64, c: f64) -> CovSignThresholds {
    let mu_neg = if p < 1.0 {
        (gamma + theta) / (1.0 - p)
    } else {
        f64::INFINITY
    };
    let denom = gamma * c - lambda * p;
    let mu_ol = if denom > 0.0 {
        lambda * gamma / denom
    } else {
        f64::INFINITY
    };
    let window_nonempty = if denom > 0.0 {
        mu_neg < mu_ol
    } else {
        mu_neg.is_finite()
    };
    CovSignThresholds {
        mu_neg,
        mu_ol,
        window_nonempty,
    }
}
