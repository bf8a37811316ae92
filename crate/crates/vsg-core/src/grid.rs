//! Electrical model of the VSG-to-grid connection.
//!
//! The converter is an ideal voltage source `E∠δ` behind a lumped series
//! impedance feeding the stiff grid voltage `U_g∠0`. All voltages are RMS
//! phase quantities, so the power-angle relations below yield three-phase
//! powers directly. The internal EMF magnitude is held constant: the
//! excitation loop is far slower than the active-power loop and is out of
//! scope here.

use serde::Deserialize;

use crate::error::{Error, Result};

/// Electrical constants of the grid connection.
///
/// Defaults mirror the 70.7107 V / 9 mH / 0.6 Ω bench setup used by the
/// shipped canonical scenario. The shunt filter capacitor is intentionally
/// absent: at 50 Hz a few µF contribute nothing to the power-angle
/// relation of the series path.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    /// Grid phase voltage, V rms.
    pub u_g: f64,
    /// Converter internal EMF phase voltage, V rms (held constant).
    pub e: f64,
    /// Inverter-side inductance, H.
    pub l_filter: f64,
    /// Grid-side inductance, H.
    pub l_line: f64,
    /// Grid-side parasitic resistance, Ω.
    pub r_line: f64,
    /// Nominal grid angular frequency, rad/s.
    pub omega_0: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            u_g: 70.7107,
            e: 70.7107,
            l_filter: 7e-3,
            l_line: 2e-3,
            r_line: 0.6,
            omega_0: 100.0 * std::f64::consts::PI,
        }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.u_g > 0.0) {
            return Err(Error::Config(format!(
                "grid.u_g: must be > 0 (got {})",
                self.u_g
            )));
        }
        if !(self.e > 0.0) {
            return Err(Error::Config(format!(
                "grid.e: must be > 0 (got {})",
                self.e
            )));
        }
        if !(self.omega_0 > 0.0) {
            return Err(Error::Config(format!(
                "grid.omega_0: must be > 0 (got {})",
                self.omega_0
            )));
        }
        for (name, v) in [
            ("grid.l_filter", self.l_filter),
            ("grid.l_line", self.l_line),
            ("grid.r_line", self.r_line),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "{name}: must be finite and >= 0 (got {v})"
                )));
            }
        }
        if self.l_filter + self.l_line + self.r_line <= 0.0 {
            return Err(Error::Config(
                "grid: degenerate impedance (l_filter + l_line + r_line must be > 0)".into(),
            ));
        }
        Ok(())
    }
}

/// Lumped series impedance of the connection, evaluated at `omega_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impedance {
    /// Resistance, Ω.
    pub r: f64,
    /// Reactance at the nominal frequency, Ω.
    pub x: f64,
    /// Magnitude √(r² + x²), Ω.
    pub z_mag: f64,
    /// Impedance angle atan(x/r), rad. π/2 for a pure inductance, 0 for a
    /// pure resistance.
    pub alpha: f64,
}

/// Aggregates filter and line elements into one series impedance.
pub fn aggregate_impedance(params: &GridParams) -> Result<Impedance> {
    params.validate()?;
    let r = params.r_line;
    let x = params.omega_0 * (params.l_filter + params.l_line);
    let z_mag = r.hypot(x);
    if z_mag == 0.0 {
        return Err(Error::Config("grid: degenerate impedance (|Z| = 0)".into()));
    }
    let alpha = x.atan2(r);
    Ok(Impedance { r, x, z_mag, alpha })
}

/// Three-phase active and reactive power delivered to the grid at power
/// angle `delta`:
///
/// `P_e = 3·E·U_g/Z·cos(α−δ) − 3·U_g²/Z·cos α`
/// `Q_e = 3·E·U_g/Z·sin(α−δ) − 3·U_g²/Z·sin α`
pub fn power_output(imp: &Impedance, e: f64, u_g: f64, delta: f64) -> (f64, f64) {
    let k_eu = 3.0 * e * u_g / imp.z_mag;
    let k_uu = 3.0 * u_g * u_g / imp.z_mag;
    let p_e = k_eu * (imp.alpha - delta).cos() - k_uu * imp.alpha.cos();
    let q_e = k_eu * (imp.alpha - delta).sin() - k_uu * imp.alpha.sin();
    (p_e, q_e)
}

/// Small-angle, inductance-dominated approximation of [`power_output`]:
/// `P_e = 3·E·U_g/Z·δ`, `Q_e = 3·(E·U_g − U_g²)/Z`.
pub fn power_output_simplified(imp: &Impedance, e: f64, u_g: f64, delta: f64) -> (f64, f64) {
    let p_e = 3.0 * e * u_g / imp.z_mag * delta;
    let q_e = 3.0 * (e * u_g - u_g * u_g) / imp.z_mag;
    (p_e, q_e)
}

/// Synchronizing coefficient `H_pδ = 3·E·U_g/Z` in W/rad: the constant gain
/// from power angle to electrical power used throughout the linear
/// analysis.
pub fn synchronizing_coefficient(imp: &Impedance, e: f64, u_g: f64) -> f64 {
    3.0 * e * u_g / imp.z_mag
}

/// Inverse of [`power_output`] for the active power: the equilibrium power
/// angle that delivers `p_e`. Errors when `p_e` exceeds the deliverable
/// range of the connection.
pub fn angle_for_power(imp: &Impedance, e: f64, u_g: f64, p_e: f64) -> Result<f64> {
    let k_eu = 3.0 * e * u_g / imp.z_mag;
    let cos_arg = p_e / k_eu + (u_g / e) * imp.alpha.cos();
    if !(-1.0..=1.0).contains(&cos_arg) {
        return Err(Error::Config(format!(
            "p_m: {p_e} W is outside the deliverable power range of the connection"
        )));
    }
    Ok(imp.alpha - cos_arg.acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn table1() -> GridParams {
        GridParams::default()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(a.abs())
    }

    /// Independent phasor oracle: S = 3·U_g·Ī* with Ī = (E∠δ − U_g∠0)/(r + jX).
    fn phasor_power(r: f64, x: f64, e: f64, u_g: f64, delta: f64) -> (f64, f64) {
        let z = Complex64::new(r, x);
        let e_ph = Complex64::from_polar(e, delta);
        let i = (e_ph - Complex64::new(u_g, 0.0)) / z;
        let s = 3.0 * u_g * i.conj();
        (s.re, s.im)
    }

    #[test]
    fn pure_inductance_has_half_pi_angle() {
        let p = GridParams {
            r_line: 0.0,
            ..table1()
        };
        let imp = aggregate_impedance(&p).unwrap();
        assert_eq!(imp.alpha, std::f64::consts::FRAC_PI_2);
        assert_eq!(imp.r, 0.0);
    }

    #[test]
    fn pure_resistance_has_zero_angle() {
        let p = GridParams {
            l_filter: 0.0,
            l_line: 0.0,
            r_line: 1.0,
            ..table1()
        };
        let imp = aggregate_impedance(&p).unwrap();
        assert_eq!(imp.alpha, 0.0);
        assert_eq!(imp.z_mag, 1.0);
    }

    #[test]
    fn table1_impedance_values() {
        // x = ω0·9e-3, z = √(0.36 + x²), hand-evaluated.
        let imp = aggregate_impedance(&table1()).unwrap();
        assert!(rel_close(imp.x, 2.827_433_388_230_814, 1e-12));
        assert!(rel_close(imp.z_mag, 2.890_394_361_481_212, 1e-12));
        assert!(rel_close(imp.alpha, 1.361_691_682_971_164, 1e-12));
        // magnitude invariant
        assert!(rel_close(
            imp.z_mag * imp.z_mag,
            imp.r * imp.r + imp.x * imp.x,
            1e-12
        ));
    }

    #[test]
    fn degenerate_impedance_is_rejected() {
        let p = GridParams {
            l_filter: 0.0,
            l_line: 0.0,
            r_line: 0.0,
            ..table1()
        };
        assert!(matches!(aggregate_impedance(&p), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_voltages_are_rejected() {
        let p = GridParams {
            u_g: 0.0,
            ..table1()
        };
        assert!(matches!(aggregate_impedance(&p), Err(Error::Config(_))));
        let p = GridParams {
            e: -1.0,
            ..table1()
        };
        assert!(matches!(aggregate_impedance(&p), Err(Error::Config(_))));
    }

    #[test]
    fn equal_voltages_zero_angle_gives_zero_power() {
        let imp = aggregate_impedance(&table1()).unwrap();
        let (p, q) = power_output(&imp, 70.7107, 70.7107, 0.0);
        assert_eq!(p, 0.0);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn pure_inductance_quarter_angle_peak_power() {
        let p = GridParams {
            r_line: 0.0,
            ..table1()
        };
        let imp = aggregate_impedance(&p).unwrap();
        let (pe, _) = power_output(&imp, 80.0, 70.0, std::f64::consts::FRAC_PI_2);
        let expected = 3.0 * 80.0 * 70.0 / imp.z_mag;
        assert!(rel_close(pe, expected, 1e-12));
    }

    #[test]
    fn table1_power_matches_phasor_oracle() {
        // Frozen from the phasor arithmetic S = 3·U_g·Ī* at δ = 0.1 rad.
        let imp = aggregate_impedance(&table1()).unwrap();
        let (pe, qe) = power_output(&imp, 70.7107, 70.7107, 0.1);
        assert!(rel_close(pe, 501.428_631_526_003_8, 1e-9));
        assert!(rel_close(qe, -132.910_203_185_738_28, 1e-9));
    }

    #[test]
    fn power_matches_phasor_oracle_randomized() {
        let mut rng = StdRng::seed_from_u64(0x5ea1);
        for _ in 0..1000 {
            let r: f64 = rng.gen_range(0.0..5.0);
            let x: f64 = rng.gen_range(0.01..10.0);
            let e: f64 = rng.gen_range(10.0..400.0);
            let u_g: f64 = rng.gen_range(10.0..400.0);
            let delta: f64 = rng.gen_range(-1.2..1.2);
            let imp = Impedance {
                r,
                x,
                z_mag: r.hypot(x),
                alpha: x.atan2(r),
            };
            let (pe, qe) = power_output(&imp, e, u_g, delta);
            let (pe_o, qe_o) = phasor_power(r, x, e, u_g, delta);
            let scale = pe_o.abs().max(qe_o.abs()).max(1.0);
            assert!(
                (pe - pe_o).abs() <= 1e-9 * scale,
                "p mismatch: {pe} vs {pe_o} (r={r}, x={x}, e={e}, u_g={u_g}, δ={delta})"
            );
            assert!(
                (qe - qe_o).abs() <= 1e-9 * scale,
                "q mismatch: {qe} vs {qe_o}"
            );
        }
    }

    #[test]
    fn simplified_zero_angle_zero_active_power() {
        let imp = aggregate_impedance(&table1()).unwrap();
        let (p, _) = power_output_simplified(&imp, 70.7107, 70.7107, 0.0);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn simplified_equal_voltages_zero_reactive_power() {
        let imp = aggregate_impedance(&table1()).unwrap();
        let (_, q) = power_output_simplified(&imp, 70.7107, 70.7107, 0.3);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn simplified_table1_tenth_radian() {
        let imp = aggregate_impedance(&table1()).unwrap();
        let (p, _) = power_output_simplified(&imp, 70.7107, 70.7107, 0.1);
        assert!(rel_close(p, 518.960647147924, 1e-12));
    }

    #[test]
    fn small_angle_limit_within_one_percent() {
        // With a purely inductive line the exact power is proportional to
        // sin δ, so the linearized form holds to δ²/6 < 0.17% for |δ| ≤ 0.1.
        let p = GridParams {
            r_line: 0.0,
            ..table1()
        };
        let imp = aggregate_impedance(&p).unwrap();
        for i in 1..=20 {
            let delta = 0.005 * i as f64;
            let (full, _) = power_output(&imp, 70.7107, 70.7107, delta);
            let (lin, _) = power_output_simplified(&imp, 70.7107, 70.7107, delta);
            assert!((full - lin).abs() / full.abs() <= 0.01, "δ={delta}");
        }
    }

    #[test]
    fn sync_coefficient_unit_case() {
        let imp = Impedance {
            r: 3.0,
            x: 0.0,
            z_mag: 3.0,
            alpha: 0.0,
        };
        assert_eq!(synchronizing_coefficient(&imp, 1.0, 1.0), 1.0);
    }

    #[test]
    fn sync_coefficient_table1() {
        let imp = aggregate_impedance(&table1()).unwrap();
        let h = synchronizing_coefficient(&imp, 70.7107, 70.7107);
        assert!(rel_close(h, 5189.606471479239, 1e-12));
    }

    #[test]
    fn sync_coefficient_linear_in_emf() {
        let imp = aggregate_impedance(&table1()).unwrap();
        let h1 = synchronizing_coefficient(&imp, 70.0, 70.7107);
        let h2 = synchronizing_coefficient(&imp, 140.0, 70.7107);
        assert!(rel_close(h2, 2.0 * h1, 1e-15));
    }

    #[test]
    fn slope_at_origin_equals_sync_coefficient() {
        // ∂P_e/∂δ at δ=0 with e = u_g and r = 0, by central difference.
        let p = GridParams {
            r_line: 0.0,
            ..table1()
        };
        let imp = aggregate_impedance(&p).unwrap();
        let h = 1e-6;
        let (p_plus, _) = power_output(&imp, 70.7107, 70.7107, h);
        let (p_minus, _) = power_output(&imp, 70.7107, 70.7107, -h);
        let slope = (p_plus - p_minus) / (2.0 * h);
        let h_pd = synchronizing_coefficient(&imp, 70.7107, 70.7107);
        assert!(rel_close(slope, h_pd, 1e-6));
    }

    #[test]
    fn angle_for_power_roundtrips() {
        let imp = aggregate_impedance(&table1()).unwrap();
        for p_target in [0.0, 157.0, 600.0, 2000.0] {
            let delta = angle_for_power(&imp, 70.7107, 70.7107, p_target).unwrap();
            let (p, _) = power_output(&imp, 70.7107, 70.7107, delta);
            assert!((p - p_target).abs() <= 1e-9 * p_target.abs().max(1.0));
        }
    }

    #[test]
    fn angle_for_power_rejects_undeliverable_level() {
        let imp = aggregate_impedance(&table1()).unwrap();
        assert!(angle_for_power(&imp, 70.7107, 70.7107, 1e6).is_err());
    }
}
