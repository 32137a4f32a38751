//! Problem instances and solved connection thresholds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{gauss_inner_threshold, sphere_tail_inverse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Sphere,
    Gauss,
}

impl Model {
    pub fn tag(self) -> u8 {
        match self {
            Model::Sphere => 0,
            Model::Gauss => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Model::Sphere),
            1 => Ok(Model::Gauss),
            _ => Err(Error::Format(format!("unknown model tag {tag}"))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Sphere => "sphere",
            Model::Gauss => "gauss",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Model::Sphere),
            "gauss" | "gaussian" => Ok(Model::Gauss),
            _ => Err(Error::param(format!("unknown model {s:?}"))),
        }
    }
}

/// The two rare events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    /// The graph is complete.
    Clique,
    /// At least `(1 + eps) p n(n-1)/2` edges.
    EdgeDev(f64),
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::Clique => "clique",
            Event::EdgeDev(_) => "edge_dev",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: u32,
    pub d: u32,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl ModelParams {
    pub fn new(n: u32, d: u32, p: f64) -> Result<Self> {
        let params = ModelParams { n, d, p, epsilon: None };
        params.validate()?;
        Ok(params)
    }

    pub fn with_epsilon(n: u32, d: u32, p: f64, epsilon: f64) -> Result<Self> {
        let params = ModelParams {
            n,
            d,
            p,
            epsilon: Some(epsilon),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param(format!("n must be at least 2, got {}", self.n)));
        }
        if self.d < 2 {
            return Err(Error::param(format!("d must be at least 2, got {}", self.d)));
        }
        if !(self.p > 0.0 && self.p <= 0.5) {
            return Err(Error::param(format!("p must lie in (0, 1/2], got {}", self.p)));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) || (1.0 + eps) * self.p >= 1.0 {
                return Err(Error::param(format!(
                    "epsilon must be positive with (1 + eps) p < 1, got eps = {eps}, p = {}",
                    self.p
                )));
            }
        }
        Ok(())
    }

    pub fn pairs(&self) -> u64 {
        let n = self.n as u64;
        n * (n - 1) / 2
    }

    pub fn epsilon_or_err(&self) -> Result<f64> {
        self.epsilon
            .ok_or_else(|| Error::param("this operation needs a deviation rate epsilon"))
    }
}

/// Solved connection thresholds for both models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub p: f64,
    pub d: u32,
    /// Cutoff on the unit inner product, `Λ_d(t_sphere) = p`.
    pub t_sphere: f64,
    /// Cutoff on the raw Gaussian inner product.
    pub s_gauss: f64,
}

impl Threshold {
    pub fn solve(p: f64, d: u32) -> Result<Self> {
        if !(p > 0.0 && p <= 0.5) {
            return Err(Error::param(format!("p must lie in (0, 1/2], got {p}")));
        }
        if d < 2 {
            return Err(Error::param(format!("d must be at least 2, got {d}")));
        }
        Ok(Threshold {
            p,
            d,
            t_sphere: sphere_tail_inverse(p, d)?,
            s_gauss: gauss_inner_threshold(p, d)?,
        })
    }

    pub fn for_model(&self, model: Model) -> f64 {
        match model {
            Model::Sphere => self.t_sphere,
            Model::Gauss => self.s_gauss,
        }
    }
}
