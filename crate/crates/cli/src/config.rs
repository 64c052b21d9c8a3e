//! Scenario configuration: the TOML schema and its translation into core
//! objects.

use serde::Deserialize;

use belldyn::channels::{Channel, MarkovDephasing, NoiseSide, RtnDephasing, SpectralDephasing};
use belldyn::correlations::BellDiagonalState;
use belldyn::dephasing::{
    DephasingProfile, OhmicSpectrum, PulseSequence, TemperatureRegime, DEFAULT_THETA_T,
};
use belldyn::phenomena::{Scenario, TimeGrid};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub initial_state: InitialState,
    pub channel: ChannelConfig,
    #[serde(default = "default_side")]
    pub side: NoiseSide,
    pub pulses: Option<PulseConfig>,
    pub time_grid: Option<TimeGridConfig>,
    #[serde(default)]
    pub outputs: Vec<OutputConfig>,
}

fn default_side() -> NoiseSide {
    NoiseSide::Both
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelConfig {
    Markov {
        #[serde(default = "default_one")]
        gamma: f64,
    },
    Rtn {
        a: f64,
        tau: f64,
    },
    Spectral {
        s: f64,
        #[serde(default = "default_one")]
        omega_c: f64,
        #[serde(default)]
        temperature: TemperatureConfig,
        theta_t: Option<f64>,
    },
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemperatureConfig {
    #[default]
    Zero,
    High,
    Finite,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    /// Periodic spacing; pulses at n * interval up to the horizon.
    pub interval: Option<f64>,
    pub horizon: Option<f64>,
    /// Alternative: explicit, strictly increasing pulse instants.
    pub instants: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridConfig {
    /// "t" (default) for uniform time sampling; "p" (Markov channels
    /// only) for sampling uniform in the dephasing probability.
    #[serde(default = "default_parameter")]
    pub parameter: String,
    pub t_max: Option<f64>,
    pub p_max: Option<f64>,
    pub samples: usize,
}

fn default_parameter() -> String {
    "t".into()
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OutputConfig {
    Trajectory {
        path: String,
    },
    Transitions {
        path: String,
    },
    RegionScan {
        path: String,
        s_grid: GridRange,
        c_grid: GridRange,
        horizon: f64,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridRange {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0) || self.max < self.min {
            return Err(CliError::config(format!(
                "{name}: need step > 0 and max >= min, got min = {}, max = {}, step = {}",
                self.min, self.max, self.step
            )));
        }
        let n = ((self.max - self.min) / self.step * (1.0 + 1e-12)).floor() as usize;
        Ok((0..=n).map(|i| self.min + i as f64 * self.step).collect())
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("config parse error: {e}")))
    }

    /// Semantic validation and construction of the core scenario objects.
    pub fn build(&self) -> Result<BuiltScenario, CliError> {
        let initial = BellDiagonalState::new(
            self.initial_state.c1,
            self.initial_state.c2,
            self.initial_state.c3,
        )
        .map_err(|e| CliError::config(format!("initial_state: {e}")))?;

        let pulses = self.build_pulses()?;
        let channel = self.build_channel(pulses.clone())?;
        if pulses.is_some() && !matches!(self.channel, ChannelConfig::Spectral { .. }) {
            return Err(CliError::config(
                "pulses: pulse sequences apply to spectral channels only".into(),
            ));
        }

        let time_grid = match &self.time_grid {
            None => None,
            Some(cfg) => Some(self.build_time_grid(cfg)?),
        };

        let needs_grid = self.outputs.iter().any(|o| {
            matches!(
                o,
                OutputConfig::Trajectory { .. } | OutputConfig::Transitions { .. }
            )
        });
        if needs_grid && time_grid.is_none() {
            return Err(CliError::config(
                "time_grid: required by trajectory/transitions outputs".into(),
            ));
        }
        for output in &self.outputs {
            if matches!(output, OutputConfig::RegionScan { .. })
                && !matches!(self.channel, ChannelConfig::Spectral { .. })
            {
                return Err(CliError::config(
                    "outputs: region scans require a spectral channel".into(),
                ));
            }
        }

        Ok(BuiltScenario {
            scenario: Scenario::new(initial, channel, self.side),
            time_grid,
            pulses,
        })
    }

    fn build_pulses(&self) -> Result<Option<PulseSequence>, CliError> {
        let Some(cfg) = &self.pulses else {
            return Ok(None);
        };
        let seq = match (&cfg.instants, cfg.interval, cfg.horizon) {
            (Some(instants), None, None) => PulseSequence::from_instants(instants.clone())
                .map_err(|e| CliError::config(format!("pulses.instants: {e}")))?,
            (None, Some(interval), Some(horizon)) => {
                PulseSequence::periodic_within(interval, horizon)
                    .map_err(|e| CliError::config(format!("pulses: {e}")))?
            }
            _ => {
                return Err(CliError::config(
                    "pulses: give either `instants` or both `interval` and `horizon`".into(),
                ))
            }
        };
        Ok(Some(seq))
    }

    fn build_channel(&self, pulses: Option<PulseSequence>) -> Result<Channel, CliError> {
        match &self.channel {
            ChannelConfig::Markov { gamma } => Ok(Channel::Markov(
                MarkovDephasing::new(*gamma)
                    .map_err(|e| CliError::config(format!("channel.gamma: {e}")))?,
            )),
            ChannelConfig::Rtn { a, tau } => Ok(Channel::Rtn(
                RtnDephasing::new(*a, *tau)
                    .map_err(|e| CliError::config(format!("channel: {e}")))?,
            )),
            ChannelConfig::Spectral {
                s,
                omega_c,
                temperature,
                theta_t,
            } => {
                let spectrum = OhmicSpectrum::new(*s, *omega_c, self.temperature_regime(*temperature, *theta_t))
                    .map_err(|e| CliError::config(format!("channel: {e}")))?;
                let profile = match pulses {
                    Some(p) => DephasingProfile::pulsed(spectrum, p),
                    None => DephasingProfile::unpulsed(spectrum),
                };
                Ok(Channel::Spectral(SpectralDephasing::new(profile)))
            }
        }
    }

    fn temperature_regime(&self, t: TemperatureConfig, theta_t: Option<f64>) -> TemperatureRegime {
        let theta_t = theta_t.unwrap_or(DEFAULT_THETA_T);
        match t {
            TemperatureConfig::Zero => TemperatureRegime::Zero,
            TemperatureConfig::High => TemperatureRegime::High { theta_t },
            TemperatureConfig::Finite => TemperatureRegime::Finite { theta_t },
        }
    }

    fn build_time_grid(&self, cfg: &TimeGridConfig) -> Result<TimeGrid, CliError> {
        match cfg.parameter.as_str() {
            "t" => {
                let t_max = cfg.t_max.ok_or_else(|| {
                    CliError::config("time_grid.t_max: required when parameter = \"t\"".into())
                })?;
                TimeGrid::uniform(t_max, cfg.samples)
                    .map_err(|e| CliError::config(format!("time_grid: {e}")))
            }
            "p" => {
                let ChannelConfig::Markov { gamma } = &self.channel else {
                    return Err(CliError::config(
                        "time_grid.parameter = \"p\" works with Markov channels only".into(),
                    ));
                };
                let p_max = cfg.p_max.ok_or_else(|| {
                    CliError::config("time_grid.p_max: required when parameter = \"p\"".into())
                })?;
                if !(p_max > 0.0 && p_max < 1.0) || cfg.samples < 2 {
                    return Err(CliError::config(format!(
                        "time_grid: need 0 < p_max < 1 and samples >= 2, got ({p_max}, {})",
                        cfg.samples
                    )));
                }
                let times = (0..cfg.samples)
                    .map(|i| {
                        let p = p_max * i as f64 / (cfg.samples - 1) as f64;
                        -(1.0 - p).ln() / gamma
                    })
                    .collect();
                TimeGrid::from_times(times)
                    .map_err(|e| CliError::config(format!("time_grid: {e}")))
            }
            other => Err(CliError::config(format!(
                "time_grid.parameter: unknown value {other:?}; use \"t\" or \"p\""
            ))),
        }
    }
}

/// Core objects assembled from a validated configuration.
pub struct BuiltScenario {
    pub scenario: Scenario,
    pub time_grid: Option<TimeGrid>,
    pub pulses: Option<PulseSequence>,
}
