//! Scenario definition and TOML loading.
//!
//! A scenario is a timed sequence of input-power steps applied to one
//! grid/controller configuration, plus the integration settings. Config
//! files carry four sections: `[grid]`, `[vsg]`, `[controller]` and
//! `[scenario]`; every omitted key falls back to the canonical bench
//! defaults.

use std::path::Path;

use serde::Deserialize;

use crate::controllers::{BaselineConfig, StrategyKind, VsgConfig};
use crate::error::{Error, Result};
use crate::grid::GridParams;

/// One input-power step: from `t` onward the command is `p_m`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmEvent {
    /// Event time, s.
    pub t: f64,
    /// New input-power command, W.
    pub p_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: GridParams,
    pub vsg: VsgConfig,
    pub baselines: BaselineConfig,
    pub strategy: StrategyKind,
    /// Total simulated time, s.
    pub duration: f64,
    /// Integration step, s.
    pub dt: f64,
    /// Input power before the first event, W.
    pub p_m_initial: f64,
    /// Informational reactive-power target, var. Not used by the
    /// active-power loop.
    pub q_initial: f64,
    /// Input-power steps, strictly ordered by time.
    pub events: Vec<PmEvent>,
}

impl Default for Scenario {
    /// The canonical bench scenario: 157 W → 600 W step at t = 6 s,
    /// 12 s duration, 200 µs sampling.
    fn default() -> Self {
        Self {
            grid: GridParams::default(),
            vsg: VsgConfig::default(),
            baselines: BaselineConfig::default(),
            strategy: StrategyKind::Proposed,
            duration: 12.0,
            dt: 2e-4,
            p_m_initial: 157.0,
            q_initial: 0.0,
            events: vec![PmEvent { t: 6.0, p_m: 600.0 }],
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ControllerSection {
    strategy: Option<StrategyKind>,
    j_big: Option<f64>,
    j_small: Option<f64>,
    k_dp: Option<f64>,
    dp_threshold_hz: Option<f64>,
    k_dp_joint: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioSection {
    duration: f64,
    dt: f64,
    p_m_initial: f64,
    q_initial: f64,
    events: Vec<PmEvent>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let s = Scenario::default();
        Self {
            duration: s.duration,
            dt: s.dt,
            p_m_initial: s.p_m_initial,
            q_initial: s.q_initial,
            events: s.events,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioFile {
    grid: Option<GridParams>,
    vsg: Option<VsgConfig>,
    controller: ControllerSection,
    scenario: Option<ScenarioSection>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        let defaults = BaselineConfig::default();
        let section = file.scenario.unwrap_or_default();
        let scenario = Scenario {
            grid: file.grid.unwrap_or_default(),
            vsg: file.vsg.unwrap_or_default(),
            baselines: BaselineConfig {
                j_big: file.controller.j_big.unwrap_or(defaults.j_big),
                j_small: file.controller.j_small.unwrap_or(defaults.j_small),
                k_dp: file.controller.k_dp.unwrap_or(defaults.k_dp),
                dp_threshold_hz: file
                    .controller
                    .dp_threshold_hz
                    .unwrap_or(defaults.dp_threshold_hz),
                k_dp_joint: file.controller.k_dp_joint.unwrap_or(defaults.k_dp_joint),
            },
            strategy: file.controller.strategy.unwrap_or(StrategyKind::Proposed),
            duration: section.duration,
            dt: section.dt,
            p_m_initial: section.p_m_initial,
            q_initial: section.q_initial,
            events: section.events,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.vsg.validate()?;
        self.baselines.validate()?;
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!(
                "scenario.dt: must be > 0 (got {})",
                self.dt
            )));
        }
        if !(self.duration >= 0.0) {
            return Err(Error::Config(format!(
                "scenario.duration: must be >= 0 (got {})",
                self.duration
            )));
        }
        if !self.p_m_initial.is_finite() {
            return Err(Error::Config("scenario.p_m_initial: must be finite".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, ev) in self.events.iter().enumerate() {
            if !(ev.t >= 0.0) || !ev.t.is_finite() {
                return Err(Error::Config(format!(
                    "scenario.events[{i}].t: must be finite and >= 0 (got {})",
                    ev.t
                )));
            }
            if ev.t <= prev {
                return Err(Error::Config(format!(
                    "scenario.events[{i}].t: events must be strictly increasing in time"
                )));
            }
            if !ev.p_m.is_finite() {
                return Err(Error::Config(format!(
                    "scenario.events[{i}].p_m: must be finite"
                )));
            }
            prev = ev.t;
        }
        if let Some(last) = self.events.last() {
            if self.duration < last.t {
                return Err(Error::Config(format!(
                    "scenario.duration: {} s is before the last event at {} s",
                    self.duration, last.t
                )));
            }
        }
        Ok(())
    }

    /// Input-power command at time `t` (piecewise constant, last event
    /// wins).
    pub fn p_m_at(&self, t: f64) -> f64 {
        let mut p = self.p_m_initial;
        for ev in &self.events {
            if ev.t <= t {
                p = ev.p_m;
            } else {
                break;
            }
        }
        p
    }

    /// Number of integration steps: `floor(duration/dt)` with a small
    /// relative guard against division noise.
    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_valid() {
        Scenario::default().validate().unwrap();
    }

    #[test]
    fn empty_config_uses_canonical_defaults() {
        let s = Scenario::from_toml_str("").unwrap();
        assert_eq!(s, Scenario::default());
    }

    #[test]
    fn full_config_parses() {
        let s = Scenario::from_toml_str(
            r#"
[grid]
u_g = 70.7107
e = 70.7107
l_filter = 7e-3
l_line = 2e-3
r_line = 0.6

[vsg]
j0 = 0.0025
j_min = 0.001
j_max = 0.006
d_p0 = 0.3

[controller]
strategy = "constant"
j_big = 0.02

[scenario]
duration = 2.0
dt = 1e-4
p_m_initial = 100.0

[[scenario.events]]
t = 1.0
p_m = 300.0
"#,
        )
        .unwrap();
        assert_eq!(s.strategy, StrategyKind::Constant);
        assert_eq!(s.baselines.j_big, 0.02);
        assert_eq!(s.events.len(), 1);
        assert_eq!(s.p_m_at(0.5), 100.0);
        assert_eq!(s.p_m_at(1.0), 300.0);
        assert_eq!(s.p_m_at(1.5), 300.0);
    }

    #[test]
    fn zero_dt_is_rejected_naming_the_field() {
        let err = Scenario::from_toml_str("[scenario]\ndt = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("dt"), "{err}");
    }

    #[test]
    fn unsorted_events_are_rejected() {
        let err = Scenario::from_toml_str(
            "[scenario]\nevents = [{ t = 2.0, p_m = 1.0 }, { t = 1.0, p_m = 2.0 }]\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("events"), "{err}");
    }

    #[test]
    fn duration_before_last_event_is_rejected() {
        let err = Scenario::from_toml_str(
            "[scenario]\nduration = 1.0\nevents = [{ t = 5.0, p_m = 600.0 }]\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("duration"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Scenario::from_toml_str("[grid]\nu_g = 70.0\nbogus = 1\n").is_err());
        assert!(Scenario::from_toml_str("[vsg]\nj_zero = 0.0025\n").is_err());
    }

    #[test]
    fn unknown_strategy_is_rejected() {
        let err = Scenario::from_toml_str("[controller]\nstrategy = \"bogus\"\n").unwrap_err();
        assert!(
            err.to_string().contains("strategy") || err.to_string().contains("bogus"),
            "{err}"
        );
    }

    #[test]
    fn step_count_handles_division_noise() {
        let s = Scenario {
            duration: 12.0,
            dt: 2e-4,
            ..Scenario::default()
        };
        assert_eq!(s.n_steps(), 60_000);
        let s = Scenario {
            duration: 1.0,
            dt: 1e-3,
            ..Scenario::default()
        };
        assert_eq!(s.n_steps(), 1000);
    }
}
