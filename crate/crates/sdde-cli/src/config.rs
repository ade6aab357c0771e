//! Scenario configuration: one TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Free {
    Alpha,
    Beta,
}

impl From<Free> for sdde::Param {
    fn from(f: Free) -> Self {
        match f {
            Free::Alpha => sdde::Param::Alpha,
            Free::Beta => sdde::Param::Beta,
        }
    }
}

/// Settings shared by the file and the flags. Every field is optional so that
/// a flag only overrides what it names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Free parameter of a branch.
    #[arg(long, global = true, value_enum)]
    pub free: Option<Free>,
    #[arg(long = "period-cap", global = true)]
    pub period_cap: Option<f64>,
    /// Integration tolerance (simulate) or mesh tolerance (branch, diagram).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Truncation order of the center-manifold field.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 or absent means all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// End time of a simulation.
    #[arg(long = "t-end", global = true)]
    pub t_end: Option<f64>,
    /// Amplitude of the random initial history.
    #[arg(long = "history-amp", global = true)]
    pub history_amp: Option<f64>,
    /// Constant initial history; replaces the random one.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub history: Option<f64>,
    /// Amplitude of the first orbit off a Hopf point.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long = "max-steps", global = true)]
    pub max_steps: Option<usize>,
    /// Fixed beta of the branch probed for fold points (diagram).
    #[arg(long = "fold-beta", global = true, allow_negative_numbers = true)]
    pub fold_beta: Option<f64>,
    /// Fixed beta of the branch probed for a touching minimum (diagram).
    #[arg(long = "m-beta", global = true, allow_negative_numbers = true)]
    pub m_beta: Option<f64>,
    /// Compare the order-2 field with the closed form (cmf).
    #[arg(long = "check-lemma", global = true)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub check_lemma: bool,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    /// `self` with every value set in `flags` replaced.
    pub fn overlay(mut self, flags: &Settings) -> Self {
        overlay!(self, flags; alpha, beta, b, free, period_cap, tol, order, out, workers, seed,
                 t_end, history_amp, history, eps, max_steps, fold_beta, m_beta);
        self.check_lemma |= flags.check_lemma;
        self
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("period_cap", self.period_cap),
            ("tol", self.tol),
            ("t_end", self.t_end),
            ("eps", self.eps),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!(
                        "{name} must be positive and finite, got {v}"
                    )));
                }
            }
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("b", self.b),
            ("fold_beta", self.fold_beta),
            ("m_beta", self.m_beta),
        ] {
            if v.is_some_and(|v| !v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be finite")));
            }
        }
        if self.history_amp.is_some_and(|a| !(0.0..1.0).contains(&a)) {
            return Err(CliError::Config("history_amp must lie in [0, 1)".into()));
        }
        if self.history.is_some_and(|h| !(h > -1.0 && h.is_finite())) {
            return Err(CliError::Config(
                "history must be finite and above -1".into(),
            ));
        }
        if let Some(o) = self.order {
            if !(2..=7).contains(&o) {
                return Err(CliError::Config(format!(
                    "order must be between 2 and 7, got {o}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_and_unknown_keys_fail() {
        let file: Settings = toml::from_str("alpha = 0.5\nb = 0.1\nfree = \"beta\"").unwrap();
        let flags = Settings {
            alpha: Some(-1.0),
            ..Default::default()
        };
        let s = file.overlay(&flags);
        assert_eq!(s.alpha, Some(-1.0));
        assert_eq!(s.b, Some(0.1));
        assert_eq!(s.free, Some(Free::Beta));
        assert!(toml::from_str::<Settings>("alpah = 1.0").is_err());
    }
}
