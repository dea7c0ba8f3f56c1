use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use super::{bias_point, DephasingParams, SweepRecord};
use crate::error::{Error, Result};

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Delta,
    G,
    EpsD,
    Beta,
    Theta,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::G => "g",
            Self::EpsD => "eps_d",
            Self::Beta => "beta",
            Self::Theta => "theta",
        }
    }

    /// `params` with this axis set to `value`.
    pub fn apply(self, params: &DephasingParams, value: f64) -> DephasingParams {
        let mut p = *params;
        match self {
            Self::Delta => p.delta = value,
            Self::G => p.g = value,
            Self::EpsD => p.eps_d = value,
            Self::Beta => p.beta = value,
            Self::Theta => p.theta = value,
        }
        p
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(Self::Delta),
            "g" => Ok(Self::G),
            "eps_d" | "eps-d" => Ok(Self::EpsD),
            "beta" => Ok(Self::Beta),
            "theta" => Ok(Self::Theta),
            other => Err(Error::InvalidParameter(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "log" => Ok(Self::Log),
            other => Err(Error::InvalidParameter(format!("unknown spacing '{other}'"))),
        }
    }
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Log => "log",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub spacing: Spacing,
}

/// Grid values of a sweep, endpoints included exactly.
pub fn sweep_grid(spec: &SweepSpec) -> Result<Vec<f64>> {
    let SweepSpec {
        from,
        to,
        points,
        spacing,
        ..
    } = *spec;
    if points < 2 {
        return Err(Error::InvalidParameter(format!("a sweep needs at least 2 points, got {points}")));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(Error::InvalidParameter("sweep range must be finite".into()));
    }
    let last = (points - 1) as f64;
    let grid = match spacing {
        Spacing::Linear => (0..points)
            .map(|i| match i {
                0 => from,
                i if i == points - 1 => to,
                i => from + (to - from) * (i as f64 / last),
            })
            .collect(),
        Spacing::Log => {
            if !(from > 0.0 && to > 0.0) {
                return Err(Error::InvalidParameter(
                    "log spacing needs a strictly positive range".into(),
                ));
            }
            let (a, b) = (from.ln(), to.ln());
            (0..points)
                .map(|i| match i {
                    0 => from,
                    i if i == points - 1 => to,
                    i => (a + (b - a) * (i as f64 / last)).exp(),
                })
                .collect()
        }
    };
    Ok(grid)
}

/// Evaluates [`bias_point`] along one axis. Points run concurrently; the
/// output follows grid order. A point that fails becomes a row of NaNs and
/// does not stop the sweep.
pub fn sweep(params: &DephasingParams, spec: &SweepSpec, oracle: bool) -> Result<Vec<SweepRecord>> {
    let grid = sweep_grid(spec)?;
    let name = spec.axis.name();
    Ok(grid
        .par_iter()
        .map(|&value| {
            let p = spec.axis.apply(params, value);
            match bias_point(&p, oracle) {
                Ok(mut r) => {
                    r.param_name = name.to_string();
                    r.param_value = value;
                    r
                }
                Err(e) => {
                    warn!("{name} = {value:e}: {e}");
                    SweepRecord::undefined(name, value, oracle)
                }
            }
        })
        .collect())
}
