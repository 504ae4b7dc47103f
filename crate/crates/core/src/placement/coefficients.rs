use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Weights of the placement objective and the norm used by the relaxed surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// `f64::INFINITY` selects the max norm; written as `"inf"` in JSON.
    #[serde(serialize_with = "ser_norm", deserialize_with = "de_norm")]
    pub p: f64,
}

impl CostCoefficients {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, p: f64) -> Result<Self> {
        let c = CostCoefficients {
            alpha,
            beta,
            gamma,
            delta,
            p,
        };
        c.validate()?;
        Ok(c)
    }

    /// Pure communication-volume objective, the LSA target.
    pub fn alpha_only() -> Self {
        CostCoefficients {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
            p: 2.0,
        }
    }

    /// What auto-tuning yields when communication and compute take equal time.
    pub fn balanced() -> Self {
        CostCoefficients {
            alpha: 0.0,
            beta: 0.25,
            gamma: 0.25,
            delta: 0.5,
            p: 2.0,
        }
    }

    /// Default for GPUs inside one machine: compute dominates, transfers are cheap.
    pub fn intra_default() -> Self {
        CostCoefficients {
            alpha: 0.0,
            beta: 0.1,
            gamma: 0.1,
            delta: 1.0,
            p: 2.0,
        }
    }

    pub fn with_p(self, p: f64) -> Self {
        CostCoefficients { p, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(field, format!("must be a finite non-negative number, got {v}")));
            }
        }
        if self.alpha + self.beta + self.gamma + self.delta <= 0.0 {
            return Err(Error::param("alpha", "at least one coefficient must be positive"));
        }
        if !(self.p >= 1.0) {
            return Err(Error::param("p", format!("norm order must be >= 1 or inf, got {}", self.p)));
        }
        Ok(())
    }
}

fn ser_norm<S: Serializer>(p: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if p.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*p)
    }
}

fn de_norm<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Norm {
        Num(f64),
        Text(String),
    }
    match Norm::deserialize(d)? {
        Norm::Num(p) => Ok(p),
        Norm::Text(t) => match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "max" => Ok(f64::INFINITY),
            other => other.parse().map_err(serde::de::Error::custom),
        },
    }
}

/// Recent timing and load measurements that drive coefficient tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilerStats {
    pub t_comm: f64,
    pub t_comp: f64,
    pub max_send: u64,
    pub max_recv: u64,
}

/// Splits weight between compute and communication by their share of time, and the
/// communication share between send and receive crosswise by their peak loads.
pub fn auto_coefficients(stats: &ProfilerStats, p: f64) -> Result<CostCoefficients> {
    if !(stats.t_comm >= 0.0 && stats.t_comp >= 0.0 && stats.t_comm.is_finite() && stats.t_comp.is_finite()) {
        return Err(Error::param("t_comm", "timings must be finite and non-negative"));
    }
    let total = stats.t_comm + stats.t_comp;
    if total <= 0.0 {
        return Err(Error::param("t_comm", "t_comm + t_comp must be positive"));
    }
    let share = stats.t_comm / total;
    let peaks = stats.max_recv + stats.max_send;
    let (beta, gamma) = if peaks == 0 {
        (share / 2.0, share / 2.0)
    } else {
        (
            share * stats.max_recv as f64 / peaks as f64,
            share * stats.max_send as f64 / peaks as f64,
        )
    };
    CostCoefficients::new(0.0, beta, gamma, stats.t_comp / total, p)
}
