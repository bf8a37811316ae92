//! Deterministic fixed-step integration of the nonlinear swing dynamics.
//!
//! State is the pair (power angle δ, angular frequency ω) driven by
//!
//! `dδ/dt = ω − ω0`
//! `dω/dt = (P_m − P_e(δ) − K_t·dP_e/dt − D_p·ω0·(ω − ω0)) / (J·ω0)`
//!
//! with the full nonlinear power-angle relation supplying `P_e` and the
//! analytic slew `dP_e/dt = H_pδ·(ω − ω0)` feeding the speed-feedback
//! term. The controller is sampled once per step and held (zero-order
//! hold) while a classical 4-stage Runge–Kutta scheme advances the state.

use crate::controllers::{self, ControlInputs, ControlOutputs, Strategy};
use crate::error::{Error, Result};
use crate::grid::{self, GridParams, Impedance};
use crate::scenario::Scenario;
use crate::trace::{Trace, TraceRow};

/// Precomputed plant-side quantities of one grid connection.
#[derive(Debug, Clone, Copy)]
pub struct Plant {
    pub imp: Impedance,
    pub e: f64,
    pub u_g: f64,
    pub omega_0: f64,
    pub h_pdelta: f64,
}

impl Plant {
    pub fn new(params: &GridParams) -> Result<Self> {
        let imp = grid::aggregate_impedance(params)?;
        Ok(Self {
            imp,
            e: params.e,
            u_g: params.u_g,
            omega_0: params.omega_0,
            h_pdelta: grid::synchronizing_coefficient(&imp, params.e, params.u_g),
        })
    }

    pub fn power(&self, delta: f64) -> (f64, f64) {
        grid::power_output(&self.imp, self.e, self.u_g, delta)
    }

    /// Analytic electrical-power slew rate with constant EMF:
    /// `H_pδ·(ω − ω0)`.
    pub fn dpe_dt(&self, omega: f64) -> f64 {
        self.h_pdelta * (omega - self.omega_0)
    }

    pub fn equilibrium_angle(&self, p_e: f64) -> Result<f64> {
        grid::angle_for_power(&self.imp, self.e, self.u_g, p_e)
    }
}

/// Instantaneous dynamic state plus the live controller parameters in
/// effect since the last sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VsgState {
    pub t: f64,
    /// Power angle, rad.
    pub delta: f64,
    /// Angular frequency, rad/s.
    pub omega: f64,
    /// Input-power command, W.
    pub p_m: f64,
    /// Electrical power at `delta`, W.
    pub p_e: f64,
    /// Reactive power at `delta`, var.
    pub q_e: f64,
    pub j: f64,
    pub d_p: f64,
    pub k_t: f64,
    /// Electrical-power slew rate, W/s.
    pub dpe_dt: f64,
    /// Angular acceleration under the live parameters, rad/s².
    pub domega_dt: f64,
}

/// Swing-equation right-hand side at a given point under fixed controller
/// outputs. Returns (dδ/dt, dω/dt).
pub fn derivative(
    plant: &Plant,
    delta: f64,
    omega: f64,
    p_m: f64,
    out: &ControlOutputs,
) -> (f64, f64) {
    let (p_e, _) = plant.power(delta);
    let d_omega = omega - plant.omega_0;
    let dpe_dt = plant.h_pdelta * d_omega;
    let accel = (p_m - p_e - out.k_t * dpe_dt - out.d_p * plant.omega_0 * d_omega)
        / (out.j * plant.omega_0);
    (d_omega, accel)
}

/// One classical 4-stage Runge–Kutta step of an autonomous 2-state system.
pub fn rk4_step<F>(y: [f64; 2], dt: f64, f: F) -> [f64; 2]
where
    F: Fn(&[f64; 2]) -> [f64; 2],
{
    let k1 = f(&y);
    let k2 = f(&[y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
    let k3 = f(&[y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
    let k4 = f(&[y[0] + dt * k3[0], y[1] + dt * k3[1]]);
    [
        y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// State at t = 0: equilibrium angle for the initial power command,
/// nominal frequency, nominal controller parameters.
pub fn initial_state(plant: &Plant, p_m: f64, nominal: &ControlOutputs) -> Result<VsgState> {
    let delta = plant.equilibrium_angle(p_m)?;
    let (p_e, q_e) = plant.power(delta);
    let (_, accel) = derivative(plant, delta, plant.omega_0, p_m, nominal);
    Ok(VsgState {
        t: 0.0,
        delta,
        omega: plant.omega_0,
        p_m,
        p_e,
        q_e,
        j: nominal.j,
        d_p: nominal.d_p,
        k_t: nominal.k_t,
        dpe_dt: 0.0,
        domega_dt: accel,
    })
}

fn control_inputs(plant: &Plant, state: &VsgState, p_m: f64) -> ControlInputs {
    // the acceleration a controller samples reflects the parameters held
    // over the previous interval, re-evaluated against the current command
    let prev = ControlOutputs {
        j: state.j,
        d_p: state.d_p,
        k_t: state.k_t,
        flags: controllers::GuardFlags::NONE,
    };
    let (_, accel) = derivative(plant, state.delta, state.omega, p_m, &prev);
    ControlInputs {
        delta_omega: state.omega - plant.omega_0,
        domega_dt: accel,
        p_m,
        p_e: state.p_e,
        dpe_dt: state.dpe_dt,
    }
}

/// Samples the strategy from the state at step start, holds its outputs
/// and advances one `dt`. Returns the new state together with the outputs
/// that were applied. Non-finite inputs propagate to the returned state;
/// [`run_with_strategy`] turns that into an integration failure.
pub fn step(
    plant: &Plant,
    state: &VsgState,
    p_m: f64,
    strategy: &mut dyn Strategy,
    dt: f64,
) -> (VsgState, ControlOutputs) {
    let inputs = control_inputs(plant, state, p_m);
    let out = strategy.update(&inputs, dt);
    let next = advance(plant, state, p_m, &out, dt);
    (next, out)
}

/// Advances the (δ, ω) pair one step under fixed outputs and refreshes the
/// derived quantities at the new point.
fn advance(plant: &Plant, state: &VsgState, p_m: f64, out: &ControlOutputs, dt: f64) -> VsgState {
    let f = |y: &[f64; 2]| {
        let (d_delta, d_omega) = derivative(plant, y[0], y[1], p_m, out);
        [d_delta, d_omega]
    };
    let next = rk4_step([state.delta, state.omega], dt, f);
    let (delta, omega) = (next[0], next[1]);
    let (p_e, q_e) = plant.power(delta);
    let (_, accel) = derivative(plant, delta, omega, p_m, out);
    VsgState {
        t: state.t + dt,
        delta,
        omega,
        p_m,
        p_e,
        q_e,
        j: out.j,
        d_p: out.d_p,
        k_t: out.k_t,
        dpe_dt: plant.dpe_dt(omega),
        domega_dt: accel,
    }
}

fn record_row(trace: &mut Trace, plant: &Plant, state: &VsgState, out: &ControlOutputs) {
    let (_, accel) = derivative(plant, state.delta, state.omega, state.p_m, out);
    trace.rows.push(TraceRow {
        t: state.t,
        p_m: state.p_m,
        p_e: state.p_e,
        q_e: state.q_e,
        omega: state.omega,
        delta: state.delta,
        j: out.j,
        d_p: out.d_p,
        k_t: out.k_t,
        domega_dt: accel,
        flags: out.flags,
    });
}

/// Runs the scenario under the strategy named in it.
pub fn run(scenario: &Scenario) -> Result<Trace> {
    scenario.validate()?;
    let plant = Plant::new(&scenario.grid)?;
    let mut strategy = controllers::build_strategy(
        scenario.strategy,
        &scenario.vsg,
        &scenario.baselines,
        plant.h_pdelta,
        plant.omega_0,
    );
    run_with_strategy(scenario, strategy.as_mut())
}

/// Runs the scenario under an explicit strategy instance. The trace has
/// `n_steps() + 1` rows on a uniform grid; each row carries the controller
/// outputs applied from that instant until the next.
pub fn run_with_strategy(scenario: &Scenario, strategy: &mut dyn Strategy) -> Result<Trace> {
    scenario.validate()?;
    let plant = Plant::new(&scenario.grid)?;
    let n = scenario.n_steps();
    let mut trace = Trace::new(plant.omega_0);
    trace.rows.reserve(n + 1);

    let mut state = initial_state(&plant, scenario.p_m_initial, &strategy.nominal())?;
    for i in 0..n {
        state.t = i as f64 * scenario.dt;
        state.p_m = scenario.p_m_at(state.t);
        let (next, out) = step(&plant, &state, state.p_m, strategy, scenario.dt);
        record_row(&mut trace, &plant, &state, &out);
        if !next.delta.is_finite() || !next.omega.is_finite() {
            return Err(Error::Integration {
                step: i + 1,
                t: (i + 1) as f64 * scenario.dt,
                partial: Box::new(trace),
            });
        }
        state = next;
    }
    // final row: sample the controller once more, no step follows
    state.t = n as f64 * scenario.dt;
    state.p_m = scenario.p_m_at(state.t);
    let inputs = control_inputs(&plant, &state, state.p_m);
    let out = strategy.update(&inputs, scenario.dt);
    record_row(&mut trace, &plant, &state, &out);
    Ok(trace)
}
