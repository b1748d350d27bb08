use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interpolation schedule `s(t)` with its closed-form derivative.
#[derive(Clone, Copy)]
pub enum Schedule {
    Linear,
    /// `1 − (1 − t)³`.
    Cubic,
    Custom {
        name: &'static str,
        value: fn(f64) -> f64,
        derivative: fn(f64) -> f64,
    },
}

impl Schedule {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Schedule::Linear => t,
            Schedule::Cubic => 1.0 - (1.0 - t).powi(3),
            Schedule::Custom { value, .. } => value(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Schedule::Linear => 1.0,
            Schedule::Cubic => 3.0 * (1.0 - t).powi(2),
            Schedule::Custom { derivative, .. } => derivative(t),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Schedule::Linear => "linear",
            Schedule::Cubic => "cubic",
            Schedule::Custom { name, .. } => name,
        }
    }

    /// Checks the boundary values and monotonicity on a 1001-point grid.
    pub fn validate(&self) -> Result<()> {
        if self.value(0.0).abs() > 1e-12 || (self.value(1.0) - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("schedule '{}' must map 0→0 and 1→1", self.name())));
        }
        let mut prev = self.value(0.0);
        for k in 1..=1000 {
            let s = self.value(k as f64 / 1000.0);
            if !s.is_finite() || s < prev - 1e-15 {
                return Err(Error::Config(format!("schedule '{}' is not monotone", self.name())));
            }
            prev = s;
        }
        Ok(())
    }
}

pub fn make_schedule(kind: &str) -> Result<Schedule> {
    kind.parse()
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Schedule> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Schedule::Linear),
            "cubic" => Ok(Schedule::Cubic),
            other => Err(Error::Config(format!("unknown schedule '{other}'"))),
        }
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for Schedule {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

impl Serialize for Schedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}
