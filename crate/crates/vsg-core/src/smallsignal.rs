//! Linear analysis of the active-power loop.
//!
//! The closed loop from input power to electrical power is second order:
//!
//! `J·ω0·s² + (D_p·ω0 + H_pδ·K_t)·s + H_pδ`
//!
//! Speed feedback K_t moves the damping ratio without touching the droop
//! coefficient or the inertia, which is the design lever everything else
//! here is built around.

use num_complex::Complex64;

use crate::controllers::GuardFlags;
use crate::error::{Error, Result};
use crate::trace::{Trace, TraceRow};

/// Relative tie-break threshold between the critically damped closed form
/// and its neighbours: |B| < this fraction of A² counts as a repeated
/// root.
const CRITICAL_TIE: f64 = 1e-12;

/// Parameters of the linearized active-power loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopParams {
    /// Virtual inertia, kg·m².
    pub j: f64,
    /// Frequency-droop coefficient.
    pub d_p: f64,
    /// Speed-feedback coefficient, s.
    pub k_t: f64,
    /// Synchronizing coefficient, W/rad.
    pub h_pdelta: f64,
    /// Nominal angular frequency, rad/s.
    pub omega_0: f64,
}

impl LoopParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("j", self.j),
            ("omega_0", self.omega_0),
            ("h_pdelta", self.h_pdelta),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("loop.{name}: must be > 0 (got {v})")));
            }
        }
        if !self.d_p.is_finite() || !self.k_t.is_finite() {
            return Err(Error::Config("loop: d_p and k_t must be finite".into()));
        }
        Ok(())
    }

    /// Damping numerator A = D_p·ω0 + H_pδ·K_t.
    pub fn a_coefficient(&self) -> f64 {
        self.d_p * self.omega_0 + self.h_pdelta * self.k_t
    }

    /// Discriminant B = A² − 4·J·ω0·H_pδ.
    pub fn b_coefficient(&self) -> f64 {
        let a = self.a_coefficient();
        a * a - 4.0 * self.j * self.omega_0 * self.h_pdelta
    }
}

/// Characteristic mode pair with the associated natural frequency and
/// damping ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePair {
    /// Root with the larger real part.
    pub s1: Complex64,
    /// Root with the smaller real part.
    pub s2: Complex64,
    /// Natural frequency, rad/s.
    pub omega_n: f64,
    /// Damping ratio.
    pub zeta: f64,
}

/// Damping ratio of the loop without speed feedback:
/// `ζ = (d_p/2)·√(ω0/j)·√(1/h_pdelta)`.
pub fn open_loop_zeta(j: f64, d_p: f64, h_pdelta: f64, omega_0: f64) -> f64 {
    d_p / 2.0 * (omega_0 / j).sqrt() * (1.0 / h_pdelta).sqrt()
}

/// Natural frequency, damping ratio and characteristic roots of the
/// closed loop.
pub fn closed_loop_modes(p: &LoopParams) -> ModePair {
    let a = p.j * p.omega_0;
    let b = p.a_coefficient();
    let c = p.h_pdelta;
    let omega_n = (c / a).sqrt();
    let zeta = b / (2.0 * (c * a).sqrt());
    let disc = b * b - 4.0 * a * c;
    let (s1, s2) = if disc < 0.0 {
        let im = (-disc).sqrt() / (2.0 * a);
        let re = -b / (2.0 * a);
        (Complex64::new(re, im), Complex64::new(re, -im))
    } else if b == 0.0 {
        // disc = -4ac >= 0 requires c <= 0; handled for completeness
        let sq = disc.sqrt() / (2.0 * a);
        (Complex64::new(sq, 0.0), Complex64::new(-sq, 0.0))
    } else {
        // numerically stable real-root form
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let r1 = q / a;
        let r2 = c / q;
        let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
        (Complex64::new(hi, 0.0), Complex64::new(lo, 0.0))
    };
    ModePair {
        s1,
        s2,
        omega_n,
        zeta,
    }
}

/// Speed-feedback coefficient that places the closed-loop damping ratio
/// at `zeta_target`:
/// `k_t = (2·ζ·√(h_pdelta·j·ω0) − d_p·ω0)/h_pdelta`.
pub fn kt_for_zeta(zeta_target: f64, j: f64, d_p: f64, h_pdelta: f64, omega_0: f64) -> f64 {
    (2.0 * zeta_target * (h_pdelta * j * omega_0).sqrt() - d_p * omega_0) / h_pdelta
}

/// The three root configurations of the characteristic polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    /// B < 0: conjugate pair in the left half plane.
    ConjugatePair,
    /// 0 ≤ B < A²: two negative real roots.
    NegativeReal,
    /// A ≤ 0 or B ≥ A²: at least one root with non-negative real part.
    Unstable,
}

/// Stability verdict plus the margins the verdict is built from, so that
/// callers can assert monotone degradation rather than a bare boolean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Damping numerator A = d_p·ω0 + h_pdelta·k_t.
    pub a: f64,
    /// Discriminant B = A² − 4·j·ω0·h_pdelta.
    pub b: f64,
    /// A² − B = 4·j·ω0·h_pdelta.
    pub a_sq_minus_b: f64,
    /// Lower stability bound on k_t: −d_p·ω0/h_pdelta.
    pub k_t_min: f64,
    /// Distance of k_t above the bound.
    pub k_t_margin: f64,
    pub stable: bool,
    pub class: StabilityClass,
}

/// Evaluates the closed-loop stability conditions `A > 0, J > 0` and
/// classifies the root configuration.
pub fn stability_check(p: &LoopParams) -> StabilityReport {
    let a = p.a_coefficient();
    let b = p.b_coefficient();
    let k_t_min = -p.d_p * p.omega_0 / p.h_pdelta;
    let stable = a > 0.0 && p.j > 0.0;
    let class = if !stable || b >= a * a {
        StabilityClass::Unstable
    } else if b < 0.0 {
        StabilityClass::ConjugatePair
    } else {
        StabilityClass::NegativeReal
    };
    StabilityReport {
        a,
        b,
        a_sq_minus_b: a * a - b,
        k_t_min,
        k_t_margin: p.k_t - k_t_min,
        stable,
        class,
    }
}

/// Closed-form step response of the closed loop: the electrical-power
/// deviation after a `delta_p` step in input power, sampled on a uniform
/// grid.
///
/// The trace is in deviation coordinates: `p_e` starts at 0 and settles
/// at `delta_p`; `delta` and `omega` are reconstructed through the loop
/// gain. Refuses parameter sets that fail [`stability_check`].
pub fn analytic_step_response(p: &LoopParams, delta_p: f64, t_end: f64, dt: f64) -> Result<Trace> {
    p.validate()?;
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt: must be > 0 (got {dt})")));
    }
    if !(t_end >= 0.0) {
        return Err(Error::Config(format!("t_end: must be >= 0 (got {t_end})")));
    }
    let report = stability_check(p);
    if !report.stable {
        return Err(Error::Unstable(format!(
            "A = {} <= 0 (k_t = {} is not above the bound {})",
            report.a, p.k_t, report.k_t_min
        )));
    }

    let a_coef = p.j * p.omega_0;
    let big_a = report.a;
    let omega_n = (p.h_pdelta / a_coef).sqrt();
    let zeta = big_a / (2.0 * (p.h_pdelta * a_coef).sqrt());

    enum Branch {
        Under { omega_d: f64, ratio: f64 },
        Critical,
        Over { s1: f64, s2: f64 },
    }
    let branch = if report.b.abs() < CRITICAL_TIE * big_a * big_a {
        Branch::Critical
    } else if report.b < 0.0 {
        let omega_d = omega_n * (1.0 - zeta * zeta).sqrt();
        Branch::Under {
            omega_d,
            ratio: zeta / (1.0 - zeta * zeta).sqrt(),
        }
    } else {
        let root = (zeta * zeta - 1.0).sqrt();
        Branch::Over {
            s1: omega_n * (-zeta + root),
            s2: omega_n * (-zeta - root),
        }
    };

    let n_steps = (t_end / dt + 1e-9).floor() as usize;
    let mut trace = Trace::new(p.omega_0);
    trace.rows.reserve(n_steps + 1);
    for i in 0..=n_steps {
        let t = i as f64 * dt;
        let (y, y_dot) = match &branch {
            Branch::Under { omega_d, ratio } => {
                let env = (-zeta * omega_n * t).exp();
                let (sin, cos) = (omega_d * t).sin_cos();
                let y = delta_p * (1.0 - env * (cos + ratio * sin));
                let y_dot = delta_p * omega_n / (1.0 - zeta * zeta).sqrt() * env * sin;
                (y, y_dot)
            }
            Branch::Critical => {
                let env = (-omega_n * t).exp();
                let y = delta_p * (1.0 - env * (1.0 + omega_n * t));
                let y_dot = delta_p * omega_n * omega_n * t * env;
                (y, y_dot)
            }
            Branch::Over { s1, s2 } => {
                let e1 = (s1 * t).exp();
                let e2 = (s2 * t).exp();
                let y = delta_p * (1.0 - (s2 * e1 - s1 * e2) / (s2 - s1));
                let y_dot = delta_p * s1 * s2 * (e2 - e1) / (s2 - s1);
                (y, y_dot)
            }
        };
        // second derivative from the governing equation itself
        let y_ddot = (delta_p - y) * omega_n * omega_n - 2.0 * zeta * omega_n * y_dot;
        trace.rows.push(TraceRow {
            t,
            p_m: delta_p,
            p_e: y,
            q_e: 0.0,
            omega: p.omega_0 + y_dot / p.h_pdelta,
            delta: y / p.h_pdelta,
            j: p.j,
            d_p: p.d_p,
            k_t: p.k_t,
            domega_dt: y_ddot / p.h_pdelta,
            flags: GuardFlags::NONE,
        });
    }
    Ok(trace)
}
