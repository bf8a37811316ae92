//! Time-series record of a simulation or analytic run.

use std::io::{self, Write};

use crate::controllers::GuardFlags;

/// Exact CSV header emitted for traces.
pub const TRACE_CSV_HEADER: &str =
    "t,p_m,p_e,q_e,omega,delta_f_hz,delta,j,d_p,k_t,domega_dt,guard_flags";

/// One row per integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub p_m: f64,
    pub p_e: f64,
    pub q_e: f64,
    pub omega: f64,
    pub delta: f64,
    pub j: f64,
    pub d_p: f64,
    pub k_t: f64,
    pub domega_dt: f64,
    pub flags: GuardFlags,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    /// Nominal angular frequency the frequency-deviation column is
    /// referenced to, rad/s.
    pub omega_0: f64,
    pub rows: Vec<TraceRow>,
}

/// Floating-point formatting used in every CSV artifact: 9 significant
/// digits, exponent notation.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

impl Trace {
    pub fn new(omega_0: f64) -> Self {
        Self {
            omega_0,
            rows: Vec::new(),
        }
    }

    pub fn delta_f_hz(&self, row: &TraceRow) -> f64 {
        (row.omega - self.omega_0) / (2.0 * std::f64::consts::PI)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_sig9(row.t),
                fmt_sig9(row.p_m),
                fmt_sig9(row.p_e),
                fmt_sig9(row.q_e),
                fmt_sig9(row.omega),
                fmt_sig9(self.delta_f_hz(row)),
                fmt_sig9(row.delta),
                fmt_sig9(row.j),
                fmt_sig9(row.d_p),
                fmt_sig9(row.k_t),
                fmt_sig9(row.domega_dt),
                row.flags.bits()
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_contract() {
        let trace = Trace::new(100.0 * std::f64::consts::PI);
        let csv = trace.to_csv_string();
        assert_eq!(csv.lines().next().unwrap(), TRACE_CSV_HEADER);
    }

    #[test]
    fn rows_print_nine_significant_digits() {
        assert_eq!(fmt_sig9(0.0002), "2.00000000e-4");
        assert_eq!(fmt_sig9(6.0), "6.00000000e0");
        assert_eq!(fmt_sig9(-5189.606471479239), "-5.18960647e3");
    }

    #[test]
    fn delta_f_column_is_derived_from_omega() {
        let omega_0 = 100.0 * std::f64::consts::PI;
        let mut trace = Trace::new(omega_0);
        trace.rows.push(TraceRow {
            t: 0.0,
            p_m: 0.0,
            p_e: 0.0,
            q_e: 0.0,
            omega: omega_0 + std::f64::consts::PI,
            delta: 0.0,
            j: 0.0,
            d_p: 0.0,
            k_t: 0.0,
            domega_dt: 0.0,
            flags: GuardFlags::NONE,
        });
        let csv = trace.to_csv_string();
        let row = csv.lines().nth(1).unwrap();
        let delta_f: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
        assert!((delta_f - 0.5).abs() < 1e-12);
    }
}
