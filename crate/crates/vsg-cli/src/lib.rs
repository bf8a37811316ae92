//! Library side of the `vsgsim` command-line tool: scenario runs,
//! strategy comparisons and small-signal analysis reports, all emitting
//! deterministic CSV artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use vsg_core::controllers::StrategyKind;
use vsg_core::error::Error as CoreError;
use vsg_core::metrics::{self, ComparisonReport, Metrics, METRICS_CSV_HEADER};
use vsg_core::scenario::Scenario;
use vsg_core::simulator::{self, Plant};
use vsg_core::smallsignal::{self, LoopParams, StabilityClass};
use vsg_core::trace::{fmt_sig9, Trace};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration/validation problems, 3 for integration
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::Integration { .. }) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn apply_dt_override(scenario: &mut Scenario, dt: Option<f64>) -> CliResult<()> {
    if let Some(dt) = dt {
        scenario.dt = dt;
        scenario.validate().map_err(CliError::from)?;
    }
    Ok(())
}

/// Step framing used for metrics: the first event (when present) against
/// the power level before it.
fn step_frame(scenario: &Scenario) -> Option<(f64, f64, f64)> {
    scenario
        .events
        .first()
        .map(|ev| (ev.t, scenario.p_m_initial, ev.p_m))
}

fn evaluate_scenario_metrics(scenario: &Scenario, trace: &Trace) -> CliResult<Option<Metrics>> {
    match step_frame(scenario) {
        None => Ok(None),
        Some((step_time, p_initial, p_final)) => {
            let m = metrics::evaluate(
                trace,
                step_time,
                p_initial,
                p_final,
                scenario.vsg.j0,
                scenario.vsg.d_p0,
                scenario.vsg.delta_f_max_hz,
                metrics::DEFAULT_BAND_PCT,
            )?;
            Ok(Some(m))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Runs one strategy on one scenario; writes `<out>/<strategy>/trace.csv`
/// and `metrics.csv`.
pub fn cmd_run(
    config: &Path,
    strategy: Option<StrategyKind>,
    out_dir: &Path,
    dt_override: Option<f64>,
) -> CliResult<PathBuf> {
    let mut scenario = Scenario::from_path(config)?;
    if let Some(kind) = strategy {
        scenario.strategy = kind;
    }
    apply_dt_override(&mut scenario, dt_override)?;

    let trace = simulator::run(&scenario)?;
    let strategy_dir = out_dir.join(scenario.strategy.as_str());
    write_file(&strategy_dir.join("trace.csv"), &trace.to_csv_string())?;

    let mut csv = String::from(METRICS_CSV_HEADER);
    csv.push('\n');
    match evaluate_scenario_metrics(&scenario, &trace)? {
        Some(m) => {
            csv.push_str(&metrics::metrics_csv_row(scenario.strategy.as_str(), &m));
            csv.push('\n');
        }
        None => {
            // no step event: only the trace-wide quantities are defined
            let max_df = metrics::max_freq_deviation(&trace);
            csv.push_str(&format!(
                "{},,,{},,,,,,{}\n",
                scenario.strategy.as_str(),
                fmt_sig9(max_df),
                max_df > scenario.vsg.delta_f_max_hz
            ));
        }
    }
    write_file(&strategy_dir.join("metrics.csv"), &csv)?;
    Ok(strategy_dir)
}

/// Runs several strategies on one scenario; writes per-strategy traces
/// plus `comparison.csv`, `orderings.csv` and the parameter-trajectory
/// table `parameters.csv`.
pub fn cmd_compare(
    config: &Path,
    strategies: &[StrategyKind],
    out_dir: &Path,
    dt_override: Option<f64>,
) -> CliResult<ComparisonReport> {
    if strategies.is_empty() {
        return Err(CliError::Core(CoreError::Config(
            "compare: at least one strategy is required".into(),
        )));
    }
    let mut scenario = Scenario::from_path(config)?;
    apply_dt_override(&mut scenario, dt_override)?;
    let Some((step_time, p_initial, p_final)) = step_frame(&scenario) else {
        return Err(CliError::Core(CoreError::Config(
            "compare: the scenario needs at least one input-power event".into(),
        )));
    };

    let mut traces: Vec<(String, Trace)> = Vec::with_capacity(strategies.len());
    for &kind in strategies {
        let mut s = scenario.clone();
        s.strategy = kind;
        let trace = simulator::run(&s)?;
        write_file(
            &out_dir.join(kind.as_str()).join("trace.csv"),
            &trace.to_csv_string(),
        )?;
        traces.push((kind.as_str().to_string(), trace));
    }

    let pairs: Vec<(String, &Trace)> = traces.iter().map(|(n, t)| (n.clone(), t)).collect();
    let report = metrics::compare(
        &pairs,
        step_time,
        p_initial,
        p_final,
        scenario.vsg.j0,
        scenario.vsg.d_p0,
        scenario.vsg.delta_f_max_hz,
        metrics::DEFAULT_BAND_PCT,
    )?;

    write_file(&out_dir.join("comparison.csv"), &report.to_csv())?;
    write_file(&out_dir.join("orderings.csv"), &report.orderings_csv())?;
    write_file(
        &out_dir.join("parameters.csv"),
        &parameter_trajectories(&traces),
    )?;
    Ok(report)
}

/// Shared time grid plus the live j / d_p / k_t trajectory of every
/// strategy, one column set per strategy.
fn parameter_trajectories(traces: &[(String, Trace)]) -> String {
    let mut header = String::from("t");
    for (name, _) in traces {
        let _ = write!(header, ",j_{name},d_p_{name},k_t_{name}");
    }
    let mut out = header;
    out.push('\n');
    let rows = traces.first().map(|(_, t)| t.rows.len()).unwrap_or(0);
    for i in 0..rows {
        let t = traces[0].1.rows[i].t;
        let mut line = fmt_sig9(t);
        for (_, trace) in traces {
            let row = &trace.rows[i];
            let _ = write!(
                line,
                ",{},{},{}",
                fmt_sig9(row.j),
                fmt_sig9(row.d_p),
                fmt_sig9(row.k_t)
            );
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Small-signal analysis of the configured operating point.
#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub r: f64,
    pub x: f64,
    pub z_mag: f64,
    pub alpha: f64,
    pub h_pdelta: f64,
    pub open_loop_zeta: f64,
    pub zeta_nominal: f64,
    pub kt_nominal: f64,
    pub zeta_boost: f64,
    pub kt_boost: f64,
    pub s1: (f64, f64),
    pub s2: (f64, f64),
    pub omega_n: f64,
    pub zeta_at_kt0: f64,
    pub a: f64,
    pub b: f64,
    pub k_t_min: f64,
    pub stable: bool,
    pub class: StabilityClass,
}

pub fn analyze(config: &Path) -> CliResult<AnalysisReport> {
    let scenario = Scenario::from_path(config)?;
    let plant = Plant::new(&scenario.grid)?;
    let vsg = &scenario.vsg;
    let params = LoopParams {
        j: vsg.j0,
        d_p: vsg.d_p0,
        k_t: 0.0,
        h_pdelta: plant.h_pdelta,
        omega_0: plant.omega_0,
    };
    params.validate()?;
    let modes = smallsignal::closed_loop_modes(&params);
    let report = smallsignal::stability_check(&params);
    Ok(AnalysisReport {
        r: plant.imp.r,
        x: plant.imp.x,
        z_mag: plant.imp.z_mag,
        alpha: plant.imp.alpha,
        h_pdelta: plant.h_pdelta,
        open_loop_zeta: smallsignal::open_loop_zeta(
            vsg.j0,
            vsg.d_p0,
            plant.h_pdelta,
            plant.omega_0,
        ),
        zeta_nominal: vsg.zeta_nominal,
        kt_nominal: smallsignal::kt_for_zeta(
            vsg.zeta_nominal,
            vsg.j0,
            vsg.d_p0,
            plant.h_pdelta,
            plant.omega_0,
        ),
        zeta_boost: vsg.zeta_boost,
        kt_boost: smallsignal::kt_for_zeta(
            vsg.zeta_boost,
            vsg.j0,
            vsg.d_p0,
            plant.h_pdelta,
            plant.omega_0,
        ),
        s1: (modes.s1.re, modes.s1.im),
        s2: (modes.s2.re, modes.s2.im),
        omega_n: modes.omega_n,
        zeta_at_kt0: modes.zeta,
        a: report.a,
        b: report.b,
        k_t_min: report.k_t_min,
        stable: report.stable,
        class: report.class,
    })
}

impl AnalysisReport {
    pub fn to_text(&self) -> String {
        let class = match self.class {
            StabilityClass::ConjugatePair => "conjugate pair (underdamped)",
            StabilityClass::NegativeReal => "two negative real roots (overdamped)",
            StabilityClass::Unstable => "unstable",
        };
        format!(
            "connection impedance\n\
             \x20 r        = {:.6} ohm\n\
             \x20 x        = {:.6} ohm\n\
             \x20 |z|      = {:.6} ohm\n\
             \x20 alpha    = {:.6} rad\n\
             active-power loop\n\
             \x20 h_pdelta = {:.4} W/rad\n\
             \x20 open-loop zeta        = {:.6}\n\
             \x20 k_t for zeta = {:.2}  = {:.6e} s\n\
             \x20 k_t for zeta = {:.2}  = {:.6e} s\n\
             characteristic modes at k_t = 0\n\
             \x20 s1 = {:.4} + {:.4}i 1/s\n\
             \x20 s2 = {:.4} + {:.4}i 1/s\n\
             \x20 omega_n = {:.4} rad/s, zeta = {:.6}\n\
             stability margins at k_t = 0\n\
             \x20 A = {:.6}, B = {:.6}\n\
             \x20 k_t_min = {:.6e} s\n\
             \x20 stable = {}, class = {}\n",
            self.r,
            self.x,
            self.z_mag,
            self.alpha,
            self.h_pdelta,
            self.open_loop_zeta,
            self.zeta_nominal,
            self.kt_nominal,
            self.zeta_boost,
            self.kt_boost,
            self.s1.0,
            self.s1.1,
            self.s2.0,
            self.s2.1,
            self.omega_n,
            self.zeta_at_kt0,
            self.a,
            self.b,
            self.k_t_min,
            self.stable,
            class
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (key, value) in [
            ("r_ohm", self.r),
            ("x_ohm", self.x),
            ("z_mag_ohm", self.z_mag),
            ("alpha_rad", self.alpha),
            ("h_pdelta_w_per_rad", self.h_pdelta),
            ("open_loop_zeta", self.open_loop_zeta),
            ("zeta_nominal", self.zeta_nominal),
            ("kt_nominal_s", self.kt_nominal),
            ("zeta_boost", self.zeta_boost),
            ("kt_boost_s", self.kt_boost),
            ("s1_re", self.s1.0),
            ("s1_im", self.s1.1),
            ("s2_re", self.s2.0),
            ("s2_im", self.s2.1),
            ("omega_n_rad_per_s", self.omega_n),
            ("zeta_at_kt0", self.zeta_at_kt0),
            ("a", self.a),
            ("b", self.b),
            ("k_t_min_s", self.k_t_min),
        ] {
            out.push_str(&format!("{key},{}\n", fmt_sig9(value)));
        }
        out.push_str(&format!("stable,{}\n", self.stable));
        out
    }
}
