//! Layered settings: built-in defaults, then a preset, then a config file,
//! then command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use weakbias::dephasing::{DephasingParams, FockCutoff, Spacing, SweepAxis, SweepSpec};

/// Sweeps that reproduce the three ratio figures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Ratio against the postselection angle, δ from 1e-4 to 1e-2.
    Fig1,
    /// Ratio against the coupling, g from −1e-4 to 1e-4.
    Fig2,
    /// Ratio against the dephasing strength, ε_D from 1e-6 to 1e-4.
    Fig3,
}

impl FromStr for Preset {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        <Preset as ValueEnum>::from_str(s, true).map_err(|e| anyhow!(e))
    }
}

impl Preset {
    pub fn settings(self) -> Settings {
        let (axis, from, to, points, spacing) = match self {
            Self::Fig1 => (SweepAxis::Delta, 1e-4, 1e-2, 50, Spacing::Log),
            Self::Fig2 => (SweepAxis::G, -1e-4, 1e-4, 41, Spacing::Linear),
            Self::Fig3 => (SweepAxis::EpsD, 1e-6, 1e-4, 30, Spacing::Log),
        };
        Settings {
            axis: Some(axis),
            from: Some(from),
            to: Some(to),
            points: Some(points),
            spacing: Some(spacing),
            ..Settings::default()
        }
    }
}

/// Every configurable value, unset ones as `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub beta: Option<f64>,
    pub theta: Option<f64>,
    pub delta: Option<f64>,
    pub g: Option<f64>,
    pub eps_d: Option<f64>,
    pub t: Option<f64>,
    pub nmax: Option<FockCutoff>,
    pub axis: Option<SweepAxis>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub points: Option<usize>,
    pub spacing: Option<Spacing>,
    pub oracle: Option<bool>,
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    /// Values from `top` win over `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        overlay!(
            self, top, beta, theta, delta, g, eps_d, t, nmax, axis, from, to, points, spacing,
            oracle, out, preset, seed
        )
    }

    /// Applies `key = value`; keys are the long flag names, with `-` or `_`
    /// between words or neither.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| anyhow!("invalid value '{value}' for '{key}': {e}"))
        }
        match key.replace(['-', '_'], "").as_str() {
            "beta" => self.beta = Some(parse(key, value)?),
            "theta" => self.theta = Some(parse(key, value)?),
            "delta" => self.delta = Some(parse(key, value)?),
            "g" => self.g = Some(parse(key, value)?),
            "epsd" => self.eps_d = Some(parse(key, value)?),
            "t" => self.t = Some(parse(key, value)?),
            "nmax" => self.nmax = Some(parse(key, value)?),
            "axis" => self.axis = Some(parse(key, value)?),
            "from" => self.from = Some(parse(key, value)?),
            "to" => self.to = Some(parse(key, value)?),
            "points" => self.points = Some(parse(key, value)?),
            "spacing" => self.spacing = Some(parse(key, value)?),
            "oracle" => self.oracle = Some(parse(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "preset" => self.preset = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            _ => bail!("unknown key '{key}'"),
        }
        Ok(())
    }

    /// Parses flat `key = value` lines; `#` starts a comment.
    pub fn parse_config(text: &str) -> Result<Settings> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            s.set(key.trim(), value.trim())
                .with_context(|| format!("line {}", i + 1))?;
        }
        Ok(s)
    }

    pub fn read_config(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse_config(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn params(&self) -> DephasingParams {
        let d = DephasingParams::default();
        DephasingParams {
            beta: self.beta.unwrap_or(d.beta),
            theta: self.theta.unwrap_or(d.theta),
            delta: self.delta.unwrap_or(d.delta),
            g: self.g.unwrap_or(d.g),
            eps_d: self.eps_d.unwrap_or(d.eps_d),
            t: self.t.unwrap_or(d.t),
            n_max: self.nmax.unwrap_or(d.n_max),
        }
    }

    /// Sweep specification; axis and range are required, spacing defaults to
    /// linear.
    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let missing = |what: &str| anyhow!("sweep needs --{what} (or a --preset)");
        Ok(SweepSpec {
            axis: self.axis.ok_or_else(|| missing("axis"))?,
            from: self.from.ok_or_else(|| missing("from"))?,
            to: self.to.ok_or_else(|| missing("to"))?,
            points: self.points.ok_or_else(|| missing("points"))?,
            spacing: self.spacing.unwrap_or(Spacing::Linear),
        })
    }
}

/// Merges the layers: defaults, the preset chosen by flags or file, the
/// config file, then the flags.
pub fn resolve(flags: Settings, config: Option<&Path>) -> Result<Settings> {
    let file = match config {
        Some(p) => Settings::read_config(p)?,
        None => Settings::default(),
    };
    let preset = flags
        .preset
        .or(file.preset)
        .map(Preset::settings)
        .unwrap_or_default();
    Ok(preset.overlay(file).overlay(flags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_comments_and_key_spellings() {
        let s = Settings::parse_config(
            "# fig tweaks\nbeta = 2.5\neps-d=3e-6  # inline\neps_d = 4e-6\n\nnmax = auto\npoints=12\noracle = true\n",
        )
        .unwrap();
        assert_eq!(s.beta, Some(2.5));
        assert_eq!(s.eps_d, Some(4e-6));
        assert_eq!(s.nmax, Some(FockCutoff::Auto));
        assert_eq!(s.points, Some(12));
        assert_eq!(s.oracle, Some(true));
    }

    #[test]
    fn config_errors_name_the_line() {
        let e = Settings::parse_config("beta = 1\nwhat = 3\n").unwrap_err();
        assert!(format!("{e:#}").contains("line 2"));
        assert!(Settings::parse_config("beta 1").is_err());
        assert!(Settings::parse_config("points = -4").is_err());
    }

    #[test]
    fn layers_apply_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "preset = fig1\npoints = 7\ndelta = 0.5\n").unwrap();
        let flags = Settings {
            delta: Some(0.25),
            ..Settings::default()
        };
        let s = resolve(flags, Some(&path)).unwrap();
        assert_eq!(s.axis, Some(SweepAxis::Delta));
        assert_eq!(s.from, Some(1e-4));
        assert_eq!(s.points, Some(7));
        assert_eq!(s.delta, Some(0.25));
        assert_eq!(s.params().beta, 1.0);
    }

    #[test]
    fn flag_preset_overrides_file_preset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "preset = fig1\n").unwrap();
        let flags = Settings {
            preset: Some(Preset::Fig3),
            ..Settings::default()
        };
        let s = resolve(flags, Some(&path)).unwrap();
        assert_eq!(s.axis, Some(SweepAxis::EpsD));
        assert_eq!(s.points, Some(30));
    }

    #[test]
    fn sweep_spec_requires_axis_and_range() {
        assert!(Settings::default().sweep_spec().is_err());
        let spec = Preset::Fig2.settings().sweep_spec().unwrap();
        assert_eq!((spec.from, spec.to, spec.points), (-1e-4, 1e-4, 41));
    }
}
