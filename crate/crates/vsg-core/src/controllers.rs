//! Control strategies for the active-power loop: the inertia +
//! speed-feedback adaptive law and the constant / J-adaptive / Dp-adaptive
//! / joint-adaptive baselines it is compared against.
//!
//! All strategies implement [`Strategy`] and are sampled once per
//! integration step with zero-order hold.

use std::fmt;
use std::ops::BitOr;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::smallsignal;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Safety margin added above the speed-feedback stability bound when the
/// frequency-limit law would otherwise cross it, s.
pub const KT_STABILITY_MARGIN: f64 = 1e-6;

/// Bitmask recording guard or clamp engagements inside a controller
/// update. Serialized as a decimal integer in trace CSVs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GuardFlags(u32);

impl GuardFlags {
    pub const NONE: GuardFlags = GuardFlags(0);
    /// dP_e/dt was below the epsilon floor in the frequency-limit division.
    pub const DPEDT_EPSILON: GuardFlags = GuardFlags(1);
    /// k_t was raised to the stability bound plus margin.
    pub const KT_STABILITY_CLAMP: GuardFlags = GuardFlags(1 << 1);
    /// The inertia accretion law exceeded j_max and was clamped.
    pub const J_CLAMP_HIGH: GuardFlags = GuardFlags(1 << 2);
    /// The inertia shedding law fell below j_min and was clamped.
    pub const J_CLAMP_LOW: GuardFlags = GuardFlags(1 << 3);

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, other: GuardFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn insert(&mut self, other: GuardFlags) {
        self.0 |= other.0;
    }
}

impl BitOr for GuardFlags {
    type Output = GuardFlags;
    fn bitor(self, rhs: GuardFlags) -> GuardFlags {
        GuardFlags(self.0 | rhs.0)
    }
}

/// Controller constants of the adaptive strategy.
///
/// The adaptation gains are derived from the inertia bounds and the
/// allowed frequency deviation (`k1()` / `k2()`), so that the accretion
/// law tops out exactly at `j_max` when the deviation reaches
/// `delta_f_max_hz`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VsgConfig {
    /// Nominal virtual inertia, kg·m².
    pub j0: f64,
    /// Lower inertia bound, kg·m².
    pub j_min: f64,
    /// Upper inertia bound, kg·m².
    pub j_max: f64,
    /// Nominal frequency-droop coefficient.
    pub d_p0: f64,
    /// Allowed frequency deviation, Hz.
    pub delta_f_max_hz: f64,
    /// Angular-acceleration threshold below which the inertia stays
    /// nominal, rad/s².
    pub t_threshold: f64,
    /// Damping-ratio target in the calm regime.
    pub zeta_nominal: f64,
    /// Damping-ratio target while |dω/dt| exceeds the threshold.
    pub zeta_boost: f64,
    /// Floor applied to |dP_e/dt| in the frequency-limit division, W/s.
    pub dpedt_epsilon: f64,
}

impl Default for VsgConfig {
    fn default() -> Self {
        Self {
            j0: 0.0025,
            j_min: 0.001,
            j_max: 0.006,
            d_p0: 0.3,
            delta_f_max_hz: 0.5,
            t_threshold: 0.3,
            zeta_nominal: 1.1,
            zeta_boost: 1.3,
            dpedt_epsilon: 1.0,
        }
    }
}

impl VsgConfig {
    /// Accretion gain: (j_max − j0)·e^{Δf_max}.
    pub fn k1(&self) -> f64 {
        (self.j_max - self.j0) * self.delta_f_max_hz.exp()
    }

    /// Shedding gain: (j0 − j_min)·e^{Δf_max}.
    pub fn k2(&self) -> f64 {
        (self.j0 - self.j_min) * self.delta_f_max_hz.exp()
    }

    /// Band edge in rad/s: 2π·Δf_max.
    pub fn delta_omega_band(&self) -> f64 {
        TWO_PI * self.delta_f_max_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_min > 0.0 && self.j_min <= self.j0 && self.j0 <= self.j_max) {
            return Err(Error::Config(format!(
                "vsg: inertia bounds must satisfy 0 < j_min <= j0 <= j_max (got j_min={}, j0={}, j_max={})",
                self.j_min, self.j0, self.j_max
            )));
        }
        if !(self.d_p0 > 0.0) {
            return Err(Error::Config(format!(
                "vsg.d_p0: must be > 0 (got {})",
                self.d_p0
            )));
        }
        if !(self.delta_f_max_hz > 0.0) {
            return Err(Error::Config(format!(
                "vsg.delta_f_max_hz: must be > 0 (got {})",
                self.delta_f_max_hz
            )));
        }
        if !(self.t_threshold >= 0.0) {
            return Err(Error::Config(format!(
                "vsg.t_threshold: must be >= 0 (got {})",
                self.t_threshold
            )));
        }
        if !(self.zeta_nominal >= 1.0 && self.zeta_boost >= self.zeta_nominal) {
            return Err(Error::Config(format!(
                "vsg: damping targets must satisfy zeta_boost >= zeta_nominal >= 1 (got {} / {})",
                self.zeta_boost, self.zeta_nominal
            )));
        }
        if !(self.dpedt_epsilon > 0.0) {
            return Err(Error::Config(format!(
                "vsg.dpedt_epsilon: must be > 0 (got {})",
                self.dpedt_epsilon
            )));
        }
        Ok(())
    }
}

/// Measurements a strategy sees at each sampling instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInputs {
    /// ω − ω0, rad/s.
    pub delta_omega: f64,
    /// Virtual angular acceleration, rad/s².
    pub domega_dt: f64,
    /// Input power command, W.
    pub p_m: f64,
    /// Electrical power, W.
    pub p_e: f64,
    /// Analytic electrical-power slew rate, W/s.
    pub dpe_dt: f64,
}

/// Live parameter set a strategy hands to the plant for one hold interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutputs {
    pub j: f64,
    pub d_p: f64,
    pub k_t: f64,
    pub flags: GuardFlags,
}

/// Inertia schedule: add inertia while the frequency deviation is growing
/// fast, shed it while the deviation is recovering fast, stay nominal
/// otherwise. The raw exponential laws are clamped to [j0, j_max] and
/// [j_min, j0] respectively.
pub fn j_adaptive_term(inputs: &ControlInputs, cfg: &VsgConfig) -> (f64, GuardFlags) {
    let product = inputs.delta_omega * inputs.domega_dt;
    let fast = inputs.domega_dt.abs() > cfg.t_threshold;
    let atten = (-inputs.delta_omega.abs() / TWO_PI).exp();
    if fast && product > 0.0 {
        let raw = cfg.j0 + cfg.k1() * atten;
        if raw > cfg.j_max {
            (cfg.j_max, GuardFlags::J_CLAMP_HIGH)
        } else {
            (raw.max(cfg.j0), GuardFlags::NONE)
        }
    } else if fast && product < 0.0 {
        let raw = cfg.j0 - cfg.k2() * atten;
        if raw < cfg.j_min {
            (cfg.j_min, GuardFlags::J_CLAMP_LOW)
        } else {
            (raw.min(cfg.j0), GuardFlags::NONE)
        }
    } else {
        (cfg.j0, GuardFlags::NONE)
    }
}

/// Frequency-limit speed-feedback law: the k_t that zeroes dω/dt at the
/// current operating point,
/// `k_t = (p_m − p_e − ω0·d_p0·Δω) / (dP_e/dt)`,
/// with the divisor floored at `dpedt_epsilon` and the result kept above
/// the stability bound `−d_p0·ω0/h_pdelta` by [`KT_STABILITY_MARGIN`].
pub fn kt_frequency_limit(
    inputs: &ControlInputs,
    cfg: &VsgConfig,
    h_pdelta: f64,
    omega_0: f64,
) -> (f64, GuardFlags) {
    let mut flags = GuardFlags::NONE;
    let numerator = inputs.p_m - inputs.p_e - omega_0 * cfg.d_p0 * inputs.delta_omega;
    let divisor = if inputs.dpe_dt.abs() < cfg.dpedt_epsilon {
        flags.insert(GuardFlags::DPEDT_EPSILON);
        if inputs.dpe_dt < 0.0 {
            -cfg.dpedt_epsilon
        } else {
            cfg.dpedt_epsilon
        }
    } else {
        inputs.dpe_dt
    };
    let mut k_t = numerator / divisor;
    let k_t_floor = -cfg.d_p0 * omega_0 / h_pdelta + KT_STABILITY_MARGIN;
    if k_t < k_t_floor {
        k_t = k_t_floor;
        flags.insert(GuardFlags::KT_STABILITY_CLAMP);
    }
    (k_t, flags)
}

/// Full adaptive update: inside the frequency band the inertia schedule
/// runs and k_t tracks the scheduled damping-ratio target at the live
/// inertia; at or beyond the band edge the inertia returns to nominal and
/// k_t switches to the frequency-limit law. The droop coefficient never
/// moves.
pub fn proposed_update(
    inputs: &ControlInputs,
    cfg: &VsgConfig,
    h_pdelta: f64,
    omega_0: f64,
) -> ControlOutputs {
    if inputs.delta_omega.abs() < cfg.delta_omega_band() {
        let (j, flags) = j_adaptive_term(inputs, cfg);
        let zeta_target = if inputs.domega_dt.abs() > cfg.t_threshold {
            cfg.zeta_boost
        } else {
            cfg.zeta_nominal
        };
        let k_t = smallsignal::kt_for_zeta(zeta_target, j, cfg.d_p0, h_pdelta, omega_0);
        ControlOutputs {
            j,
            d_p: cfg.d_p0,
            k_t,
            flags,
        }
    } else {
        let (k_t, flags) = kt_frequency_limit(inputs, cfg, h_pdelta, omega_0);
        ControlOutputs {
            j: cfg.j0,
            d_p: cfg.d_p0,
            k_t,
            flags,
        }
    }
}

/// Knobs of the reconstructed comparison baselines. The adaptive laws of
/// the literature methods are not restated here; these are representative
/// forms compared on ordering behaviour only.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Alternating-inertia upper level, kg·m².
    pub j_big: f64,
    /// Alternating-inertia lower level, kg·m².
    pub j_small: f64,
    /// Droop boost gain applied above the Dp-adaptive threshold, per Hz.
    pub k_dp: f64,
    /// Frequency threshold of the Dp-adaptive baseline, Hz.
    pub dp_threshold_hz: f64,
    /// Continuous droop gain of the joint J/Dp baseline, per Hz.
    pub k_dp_joint: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            j_big: 0.019,
            j_small: 0.002,
            k_dp: 4.0,
            dp_threshold_hz: 0.5,
            k_dp_joint: 1.5,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.j_big > 0.0 && self.j_small > 0.0) {
            return Err(Error::Config(format!(
                "controller: j_big and j_small must be > 0 (got {} / {})",
                self.j_big, self.j_small
            )));
        }
        if !(self.k_dp >= 0.0 && self.k_dp_joint >= 0.0 && self.dp_threshold_hz > 0.0) {
            return Err(Error::Config(
                "controller: droop gains must be >= 0 and dp_threshold_hz > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Strategy selected by name in scenario configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Constant,
    JAdaptive,
    DpAdaptive,
    JdpAdaptive,
    Proposed,
}

pub const STRATEGY_NAMES: [&str; 5] = [
    "constant",
    "j_adaptive",
    "dp_adaptive",
    "jdp_adaptive",
    "proposed",
];

impl StrategyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::Constant => "constant",
            StrategyKind::JAdaptive => "j_adaptive",
            StrategyKind::DpAdaptive => "dp_adaptive",
            StrategyKind::JdpAdaptive => "jdp_adaptive",
            StrategyKind::Proposed => "proposed",
        }
    }

    pub fn all() -> [StrategyKind; 5] {
        [
            StrategyKind::Constant,
            StrategyKind::JAdaptive,
            StrategyKind::DpAdaptive,
            StrategyKind::JdpAdaptive,
            StrategyKind::Proposed,
        ]
    }
}

impl FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(StrategyKind::Constant),
            "j_adaptive" => Ok(StrategyKind::JAdaptive),
            "dp_adaptive" => Ok(StrategyKind::DpAdaptive),
            "jdp_adaptive" => Ok(StrategyKind::JdpAdaptive),
            "proposed" => Ok(StrategyKind::Proposed),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}`; valid strategies: {}",
                STRATEGY_NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A control law sampled once per integration step. Implementations hold
/// no hidden state, so identical input sequences produce identical output
/// sequences.
pub trait Strategy {
    fn name(&self) -> &'static str;

    /// Parameter set in effect before the first sample.
    fn nominal(&self) -> ControlOutputs;

    /// Compute the parameter set to hold over the next `dt` seconds.
    fn update(&mut self, inputs: &ControlInputs, dt: f64) -> ControlOutputs;
}

/// Fixed parameters; the `constant` baseline and the building block for
/// fixed-k_t experiments.
#[derive(Debug, Clone, Copy)]
pub struct FixedParams {
    pub j: f64,
    pub d_p: f64,
    pub k_t: f64,
}

impl Strategy for FixedParams {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn nominal(&self) -> ControlOutputs {
        ControlOutputs {
            j: self.j,
            d_p: self.d_p,
            k_t: self.k_t,
            flags: GuardFlags::NONE,
        }
    }

    fn update(&mut self, _inputs: &ControlInputs, _dt: f64) -> ControlOutputs {
        self.nominal()
    }
}

/// The adaptive inertia + speed-feedback strategy.
#[derive(Debug, Clone)]
pub struct ProposedControl {
    pub cfg: VsgConfig,
    pub h_pdelta: f64,
    pub omega_0: f64,
}

impl Strategy for ProposedControl {
    fn name(&self) -> &'static str {
        "proposed"
    }

    fn nominal(&self) -> ControlOutputs {
        ControlOutputs {
            j: self.cfg.j0,
            d_p: self.cfg.d_p0,
            k_t: smallsignal::kt_for_zeta(
                self.cfg.zeta_nominal,
                self.cfg.j0,
                self.cfg.d_p0,
                self.h_pdelta,
                self.omega_0,
            ),
            flags: GuardFlags::NONE,
        }
    }

    fn update(&mut self, inputs: &ControlInputs, _dt: f64) -> ControlOutputs {
        proposed_update(inputs, &self.cfg, self.h_pdelta, self.omega_0)
    }
}

/// Alternating-inertia baseline: j_big while the deviation grows, j_small
/// while it recovers, nominal at the sign boundaries. No speed feedback.
#[derive(Debug, Clone)]
pub struct AlternatingInertia {
    pub j0: f64,
    pub d_p0: f64,
    pub j_big: f64,
    pub j_small: f64,
}

impl Strategy for AlternatingInertia {
    fn name(&self) -> &'static str {
        "j_adaptive"
    }

    fn nominal(&self) -> ControlOutputs {
        ControlOutputs {
            j: self.j0,
            d_p: self.d_p0,
            k_t: 0.0,
            flags: GuardFlags::NONE,
        }
    }

    fn update(&mut self, inputs: &ControlInputs, _dt: f64) -> ControlOutputs {
        let product = inputs.delta_omega * inputs.domega_dt;
        let j = if product > 0.0 {
            self.j_big
        } else if product < 0.0 {
            self.j_small
        } else {
            self.j0
        };
        ControlOutputs {
            j,
            d_p: self.d_p0,
            k_t: 0.0,
            flags: GuardFlags::NONE,
        }
    }
}

/// Threshold droop-boost baseline: the droop coefficient is raised only
/// while |Δf| exceeds the threshold, proportionally to the excess.
#[derive(Debug, Clone)]
pub struct DroopBoost {
    pub j0: f64,
    pub d_p0: f64,
    pub k_dp: f64,
    pub threshold_hz: f64,
}

impl Strategy for DroopBoost {
    fn name(&self) -> &'static str {
        "dp_adaptive"
    }

    fn nominal(&self) -> ControlOutputs {
        ControlOutputs {
            j: self.j0,
            d_p: self.d_p0,
            k_t: 0.0,
            flags: GuardFlags::NONE,
        }
    }

    fn update(&mut self, inputs: &ControlInputs, _dt: f64) -> ControlOutputs {
        let delta_f = inputs.delta_omega.abs() / TWO_PI;
        let d_p = self.d_p0 + self.k_dp * (delta_f - self.threshold_hz).max(0.0);
        ControlOutputs {
            j: self.j0,
            d_p,
            k_t: 0.0,
            flags: GuardFlags::NONE,
        }
    }
}

/// Joint baseline: alternating inertia combined with a droop coefficient
/// that grows continuously with |Δf|.
#[derive(Debug, Clone)]
pub struct JointAdaptive {
    pub inertia: AlternatingInertia,
    pub k_dp: f64,
}

impl Strategy for JointAdaptive {
    fn name(&self) -> &'static str {
        "jdp_adaptive"
    }

    fn nominal(&self) -> ControlOutputs {
        self.inertia.nominal()
    }

    fn update(&mut self, inputs: &ControlInputs, dt: f64) -> ControlOutputs {
        let base = self.inertia.update(inputs, dt);
        let d_p = self.inertia.d_p0 + self.k_dp * inputs.delta_omega.abs() / TWO_PI;
        ControlOutputs { d_p, ..base }
    }
}

/// Builds the named strategy against a given plant gain.
pub fn build_strategy(
    kind: StrategyKind,
    cfg: &VsgConfig,
    baselines: &BaselineConfig,
    h_pdelta: f64,
    omega_0: f64,
) -> Box<dyn Strategy> {
    match kind {
        StrategyKind::Constant => Box::new(FixedParams {
            j: cfg.j0,
            d_p: cfg.d_p0,
            k_t: 0.0,
        }),
        StrategyKind::JAdaptive => Box::new(AlternatingInertia {
            j0: cfg.j0,
            d_p0: cfg.d_p0,
            j_big: baselines.j_big,
            j_small: baselines.j_small,
        }),
        StrategyKind::DpAdaptive => Box::new(DroopBoost {
            j0: cfg.j0,
            d_p0: cfg.d_p0,
            k_dp: baselines.k_dp,
            threshold_hz: baselines.dp_threshold_hz,
        }),
        StrategyKind::JdpAdaptive => Box::new(JointAdaptive {
            inertia: AlternatingInertia {
                j0: cfg.j0,
                d_p0: cfg.d_p0,
                j_big: baselines.j_big,
                j_small: baselines.j_small,
            },
            k_dp: baselines.k_dp_joint,
        }),
        StrategyKind::Proposed => Box::new(ProposedControl {
            cfg: *cfg,
            h_pdelta,
            omega_0,
        }),
    }
}
