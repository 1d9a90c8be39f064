use serde::{Deserialize, Serialize};

/// Per-parameter value lists; the sweep is their Cartesian product.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepGrid {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("sweep grid for {0} is empty")]
    Empty(&'static str),
    #[error("sweep has {size} points, above the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
}

/// One configuration of a sweep, with its position in grid order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub lambda: f64,
    pub mu: f64,
    pub theta: f64,
    pub p: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl SweepGrid {
    pub fn size(&self) -> usize {
        self.axes().iter().map(|(_, v)| v.len()).product()
    }

    fn axes(&self) -> [(&'static str, &Vec<f64>); 6] {
        [
            ("lambda", &self.lambda),
            ("mu", &self.mu),
            ("theta", &self.theta),
            ("p", &self.p),
            ("gamma", &self.gamma),
            ("epsilon", &self.epsilon),
        ]
    }

    /// All points in row-major order (epsilon varies fastest), after
    /// checking every axis is non-empty and the size is within `cap`.
    pub fn points(&self, cap: usize) -> Result<Vec<SweepPoint>, SweepError> {
        for (name, values) in self.axes() {
            if values.is_empty() {
                return Err(SweepError::Empty(name));
            }
        }
        let size = self.size();
        if size > cap {
            return Err(SweepError::TooLarge { size, cap });
        }
        let mut out = Vec::with_capacity(size);
        for &lambda in &self.lambda {
            for &mu in &self.mu {
                for &theta in &self.theta {
                    for &p in &self.p {
                        for &gamma in &self.gamma {
                            for &epsilon in &self.epsilon {
                                out.push(SweepPoint {
                                    index: out.len(),
                                    lambda,
                                    mu,
                                    theta,
                                    p,
                                    gamma,
                                    epsilon,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
