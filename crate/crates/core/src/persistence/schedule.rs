use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A value that changes with the global step.
///
/// Text form mirrors the usual hyperparameter notation:
/// `linear(1.0, 0.1, 500000)`, `sigmoid(1.0, 0.1, 500000)` (midpoint and
/// steepness derived from the horizon), `sigmoid(1.0, 0.1, 250000, 0.00002)`,
/// `constant(0.5)` or a bare number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "String")]
pub enum Schedule {
    Constant(f64),
    /// `p0 + (p1 - p0) * min(t / horizon, 1)`.
    Linear { p0: f64, p1: f64, horizon: f64 },
    /// `p1 + (p0 - p1) / (1 + exp(steepness * (t - t_mid)))`.
    Sigmoid {
        p0: f64,
        p1: f64,
        t_mid: f64,
        steepness: f64,
    },
}

impl Schedule {
    pub fn linear(p0: f64, p1: f64, horizon: f64) -> Self {
        Schedule::Linear { p0, p1, horizon }
    }

    /// Sigmoid with midpoint `horizon / 2` and steepness `10 / horizon`.
    pub fn sigmoid(p0: f64, p1: f64, horizon: f64) -> Self {
        Schedule::Sigmoid {
            p0,
            p1,
            t_mid: horizon / 2.0,
            steepness: 10.0 / horizon,
        }
    }

    pub fn value(&self, t: u64) -> f64 {
        let t = t as f64;
        match *self {
            Schedule::Constant(p) => p,
            Schedule::Linear { p0, p1, horizon } => {
                let frac = if horizon > 0.0 { (t / horizon).min(1.0) } else { 1.0 };
                clamp_between(p0 + (p1 - p0) * frac, p0, p1)
            }
            Schedule::Sigmoid {
                p0,
                p1,
                t_mid,
                steepness,
            } => clamp_between(p1 + (p0 - p1) / (1.0 + (steepness * (t - t_mid)).exp()), p0, p1),
        }
    }

    /// Checks `0 <= p1 <= p0 <= 1`, as needed when the schedule is a probability.
    pub fn validate_probability(&self) -> Result<()> {
        let (p0, p1) = self.endpoints();
        if !(0.0 <= p1 && p1 <= p0 && p0 <= 1.0) {
            return Err(Error::config(format!(
                "probability schedule {self} needs 0 <= p1 <= p0 <= 1"
            )));
        }
        self.validate_shape()
    }

    /// Checks horizon and steepness without constraining the values.
    pub fn validate_shape(&self) -> Result<()> {
        match *self {
            Schedule::Constant(p) if !p.is_finite() => Err(Error::config("constant must be finite")),
            Schedule::Linear { horizon, .. } if !(horizon >= 0.0) => {
                Err(Error::config("linear schedule horizon must be non-negative"))
            }
            Schedule::Sigmoid { steepness, .. } if !(steepness > 0.0) => {
                Err(Error::config("sigmoid steepness must be positive"))
            }
            _ => Ok(()),
        }
    }

    fn endpoints(&self) -> (f64, f64) {
        match *self {
            Schedule::Constant(p) => (p, p),
            Schedule::Linear { p0, p1, .. } | Schedule::Sigmoid { p0, p1, .. } => (p0, p1),
        }
    }
}

fn clamp_between(x: f64, a: f64, b: f64) -> f64 {
    x.clamp(a.min(b), a.max(b))
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(p) => write!(f, "constant({p})"),
            Schedule::Linear { p0, p1, horizon } => write!(f, "linear({p0}, {p1}, {horizon})"),
            Schedule::Sigmoid {
                p0,
                p1,
                t_mid,
                steepness,
            } => write!(f, "sigmoid({p0}, {p1}, {t_mid}, {steepness})"),
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(p) = s.parse::<f64>() {
            return Ok(Schedule::Constant(p));
        }
        let bad = || Error::config(format!("cannot parse schedule {s:?}"));
        let open = s.find('(').ok_or_else(bad)?;
        let body = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args: Vec<f64> = body
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let sched = match (s[..open].trim(), args.as_slice()) {
            ("constant", [p]) => Schedule::Constant(*p),
            ("linear", [p0, p1, h]) => Schedule::linear(*p0, *p1, *h),
            ("sigmoid", [p0, p1, h]) => Schedule::sigmoid(*p0, *p1, *h),
            ("sigmoid", [p0, p1, t_mid, k]) => Schedule::Sigmoid {
                p0: *p0,
                p1: *p1,
                t_mid: *t_mid,
                steepness: *k,
            },
            _ => return Err(bad()),
        };
        sched.validate_shape()?;
        Ok(sched)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScheduleRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ScheduleRepr> for Schedule {
    type Error = Error;

    fn try_from(r: ScheduleRepr) -> Result<Self> {
        match r {
            ScheduleRepr::Number(p) => Ok(Schedule::Constant(p)),
            ScheduleRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Schedule> for String {
    fn from(s: Schedule) -> String {
        s.to_string()
    }
}

/// Kind-and-parameters form of [`Schedule::value`].
pub fn schedule_probability(schedule: &Schedule, t: u64) -> f64 {
    schedule.value(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_endpoints_and_midpoint() {
        let s: Schedule = "linear(1.0, 0.1, 500000)".parse().unwrap();
        assert_eq!(s.value(0), 1.0);
        assert!((s.value(500_000) - 0.1).abs() < 1e-15);
        assert!((s.value(9_000_000) - 0.1).abs() < 1e-15);
        assert!((s.value(250_000) - 0.55).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_midpoint() {
        let s = Schedule::sigmoid(1.0, 0.1, 1000.0);
        assert!((s.value(500) - 0.55).abs() < 1e-15);
        assert!(s.value(0) > 0.99 && s.value(0) <= 1.0);
        assert!(s.value(1000) < 0.11 && s.value(1000) >= 0.1);
        let explicit: Schedule = "sigmoid(0.8, 0.2, 40, 0.5)".parse().unwrap();
        assert!((explicit.value(40) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parse_forms() {
        assert_eq!("0.3".parse::<Schedule>().unwrap(), Schedule::Constant(0.3));
        assert_eq!("constant(0.3)".parse::<Schedule>().unwrap(), Schedule::Constant(0.3));
        assert!("linear(1.0, 0.1)".parse::<Schedule>().is_err());
        assert!("cosine(1, 0, 3)".parse::<Schedule>().is_err());
        assert!("sigmoid(1, 0, 10, -1)".parse::<Schedule>().is_err());
        let s: Schedule = "linear(1.0, 0.1, 500000)".parse().unwrap();
        assert_eq!(s.to_string().parse::<Schedule>().unwrap(), s);
    }

    #[test]
    fn probability_validation() {
        assert!(Schedule::linear(1.0, 0.1, 10.0).validate_probability().is_ok());
        assert!(Schedule::linear(0.1, 1.0, 10.0).validate_probability().is_err());
        assert!(Schedule::Constant(1.5).validate_probability().is_err());
    }
}
