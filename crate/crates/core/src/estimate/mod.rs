//! Estimators for the clique and edge-deviation probabilities.
//!
//! Every result is a [`LogEstimate`]: the natural log of the estimate and a
//! delta-method standard error for it. Monte Carlo work is split into
//! shards with their own [`RngStream`]s and merged in shard order, so the
//! output depends on the seed and the shard count but not on scheduling.

mod bounds;
mod mc;
mod statistic;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::params::{Event, ModelParams};
use crate::rng::RngStream;

pub use bounds::{
    choose_deviation_constants, clique_all_coord_bound, clique_lower_bound_er, edge_dev_lower_bounds,
    exp_dominance_bound, explicit_edge_dev_upper_bound, markov_event_bound, ConstantsChoice, DeviationConstants,
    EdgeDevBounds,
};
pub use mc::{
    clique_bias_estimator, clique_bias_scan, edge_count_histogram, mc_event_probability, tilted_estimator,
    tilted_variance_ratio_floor,
    BiasKind, BiasSchedule, TiltNormalizer, TiltedEstimate, DEFAULT_BIAS_GRID,
};
pub use statistic::{conditional_s_given_clique, statistic_s, ConditionalMean, EdgeStatistics, DEFAULT_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    CondBias,
    Tilted,
    ClosedForm,
    Quadrature,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::CondBias => "cond_bias",
            Method::Tilted => "tilted",
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
        })
    }
}

/// Serializes non-finite floats as the strings `"-inf"`, `"inf"`, `"nan"`,
/// which plain JSON numbers cannot express.
pub mod log_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "inf" => Ok(f64::INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(serde::de::Error::custom(format!("not a float: {t:?}"))),
            },
        }
    }

    pub fn format(x: f64) -> String {
        if x.is_finite() {
            format!("{x:e}")
        } else if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEstimate {
    pub method: Method,
    #[serde(with = "log_float")]
    pub log_value: f64,
    /// Standard error of `log_value`, i.e. the relative standard error of
    /// the estimate; zero for closed forms, infinite with no hits.
    #[serde(with = "log_float")]
    pub log_stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub flags: Vec<String>,
    /// One-sided 95% upper bound on the log estimate when there were no hits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_upper: Option<f64>,
}

impl LogEstimate {
    pub fn closed_form(log_value: f64) -> Self {
        LogEstimate {
            method: Method::ClosedForm,
            log_value,
            log_stderr: 0.0,
            n_samples: 0,
            seed: 0,
            flags: Vec::new(),
            log_upper: None,
        }
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    /// Absolute standard error of the estimate itself.
    pub fn stderr(&self) -> f64 {
        if self.log_value == f64::NEG_INFINITY {
            0.0
        } else {
            self.log_value.exp() * self.log_stderr
        }
    }

    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    /// Shifts the estimate by a known log factor.
    pub fn shifted(mut self, log_factor: f64) -> Self {
        self.log_value += log_factor;
        if let Some(u) = self.log_upper.as_mut() {
            *u += log_factor;
        }
        self
    }
}

/// `ln(e^a + e^b)`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Running sums of weights and squared weights, in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAccumulator {
    pub count: u64,
    pub hits: u64,
    pub log_sum: f64,
    pub log_sum_sq: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        LogAccumulator {
            count: 0,
            hits: 0,
            log_sum: f64::NEG_INFINITY,
            log_sum_sq: f64::NEG_INFINITY,
        }
    }
}

impl LogAccumulator {
    /// Records a miss.
    pub fn miss(&mut self) {
        self.count += 1;
    }

    /// Records a hit with weight `exp(log_w)`.
    pub fn hit(&mut self, log_w: f64) {
        self.count += 1;
        self.hits += 1;
        self.log_sum = ln_add_exp(self.log_sum, log_w);
        self.log_sum_sq = ln_add_exp(self.log_sum_sq, 2.0 * log_w);
    }

    pub fn merge(&mut self, other: &LogAccumulator) {
        self.count += other.count;
        self.hits += other.hits;
        self.log_sum = ln_add_exp(self.log_sum, other.log_sum);
        self.log_sum_sq = ln_add_exp(self.log_sum_sq, other.log_sum_sq);
    }

    /// `ln` of the mean weight.
    pub fn log_mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.log_sum - (self.count as f64).ln()
    }

    /// Relative standard error of the mean: `sqrt(var / N) / mean`.
    pub fn relative_stderr(&self) -> f64 {
        if self.hits == 0 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        if n < 2.0 {
            return f64::INFINITY;
        }
        // var / mean^2 = (N S2 / S1^2 - 1) * N / (N - 1)
        let ratio = (self.log_sum_sq - 2.0 * self.log_sum).exp() * n;
        ((ratio - 1.0).max(0.0) / (n - 1.0)).sqrt()
    }

    /// Kish effective sample size of the weights of the hits.
    pub fn effective_hits(&self) -> f64 {
        if self.hits == 0 {
            return 0.0;
        }
        (2.0 * self.log_sum - self.log_sum_sq).exp()
    }

    pub fn to_estimate(&self, method: Method, seed: u64) -> LogEstimate {
        let mut est = LogEstimate {
            method,
            log_value: f64::NEG_INFINITY,
            log_stderr: f64::INFINITY,
            n_samples: self.count,
            seed,
            flags: Vec::new(),
            log_upper: None,
        };
        if self.hits == 0 {
            est.flags.push("zero_hits".into());
            if self.count > 0 {
                est.log_upper = Some((3.0 / self.count as f64).ln());
            }
        } else {
            est.log_value = self.log_mean();
            est.log_stderr = self.relative_stderr();
        }
        est
    }
}

/// Sample budget, sharding and stream selection for a Monte Carlo run.
#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub samples: u64,
    pub shards: u32,
    pub seed: u64,
    /// Sub-stream family; estimators that must see identical draws share it.
    pub lane: u32,
    /// Stops drawing at this instant and reports what was collected.
    pub deadline: Option<Instant>,
}

impl McOptions {
    pub fn new(samples: u64, seed: u64) -> Self {
        McOptions {
            samples,
            shards: 1,
            seed,
            lane: 0,
            deadline: None,
        }
    }

    pub fn shards(mut self, shards: u32) -> Self {
        self.shards = shards.max(1);
        self
    }

    pub fn lane(mut self, lane: u32) -> Self {
        self.lane = lane;
        self
    }

    pub fn deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn shard_samples(&self, shard: u32) -> u64 {
        let s = self.shards.max(1) as u64;
        self.samples / s + u64::from((shard as u64) < self.samples % s)
    }

    pub fn stream(&self, shard: u32) -> RngStream {
        RngStream::lane(self.seed, self.lane, shard)
    }
}

/// Runs `f` once per shard and returns the results in shard order.
pub fn map_shards<T, F>(shards: u32, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u32) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..shards).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..shards).map(f).collect()
    }
}

/// Draws per shard with a deadline check every 1024 samples; merges the
/// per-shard accumulators in shard order.
pub(crate) fn run_sharded<F>(opts: &McOptions, draw: F) -> (LogAccumulator, bool)
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut LogAccumulator) + Sync + Send,
{
    let parts = map_shards(opts.shards.max(1), |shard| {
        let mut rng = opts.stream(shard).rng();
        let mut acc = LogAccumulator::default();
        let total = opts.shard_samples(shard);
        let mut timed_out = false;
        for k in 0..total {
            if k % 1024 == 0 {
                if let Some(deadline) = opts.deadline {
                    if Instant::now() >= deadline {
                        timed_out = true;
                        break;
                    }
                }
            }
            draw(&mut rng, &mut acc);
        }
        (acc, timed_out)
    });
    let mut total = LogAccumulator::default();
    let mut timed_out = false;
    for (acc, t) in &parts {
        total.merge(acc);
        timed_out |= *t;
    }
    (total, timed_out)
}

/// One output row: an estimate together with the cell it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub method: Method,
    pub event: String,
    pub n: u32,
    pub d: u32,
    pub p: f64,
    pub epsilon: Option<f64>,
    #[serde(with = "log_float")]
    pub log_value: f64,
    #[serde(with = "log_float")]
    pub log_stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub flags: Vec<String>,
}

impl EstimateRecord {
    pub fn new(params: &ModelParams, event: Event, est: &LogEstimate) -> Self {
        let epsilon = match event {
            Event::EdgeDev(eps) => Some(eps),
            Event::Clique => params.epsilon,
        };
        EstimateRecord {
            method: est.method,
            event: event.name().to_string(),
            n: params.n,
            d: params.d,
            p: params.p,
            epsilon,
            log_value: est.log_value,
            log_stderr: est.log_stderr,
            n_samples: est.n_samples,
            seed: est.seed,
            flags: est.flags.clone(),
        }
    }

    pub const CSV_HEADER: &'static str = "n,d,p,epsilon,event,method,log_value,log_stderr,n_samples,seed,flags";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.d,
            self.p,
            self.epsilon.map(|e| e.to_string()).unwrap_or_default(),
            self.event,
            self.method,
            log_float::format(self.log_value),
            log_float::format(self.log_stderr),
            self.n_samples,
            self.seed,
            self.flags.join(";"),
        )
    }
}
