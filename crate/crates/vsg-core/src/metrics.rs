//! Transient-quality indices: overshoot, settling time, maximum frequency
//! deviation, parameter-excursion ratios, and the strategy comparison
//! table built from them.

use crate::error::{Error, Result};
use crate::trace::{fmt_sig9, Trace};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Transient indices of one step response.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Peak excursion past the final value, percent of the commanded step.
    pub overshoot_pct: f64,
    /// Time from the step instant until the response stays inside the
    /// band; `None` when it never does within the trace.
    pub settling_time_s: Option<f64>,
    pub max_freq_dev_hz: f64,
    pub j_peak: f64,
    pub j_peak_ratio: f64,
    pub d_p_peak_ratio: f64,
    pub k_t_range: (f64, f64),
    /// True when the frequency deviation exceeded the allowed band.
    pub freq_violation: bool,
}

/// Peak excursion beyond `p_final`, normalized by the step size
/// `|p_final − p_initial|` and expressed in percent. Downward steps use
/// the symmetric definition.
pub fn overshoot(trace: &Trace, step_time: f64, p_initial: f64, p_final: f64) -> Result<f64> {
    if p_final == p_initial {
        return Err(Error::Metrics("overshoot undefined for a zero step".into()));
    }
    let direction = (p_final - p_initial).signum();
    let mut peak = f64::NEG_INFINITY;
    let mut seen = false;
    for row in trace.rows.iter().filter(|r| r.t >= step_time) {
        peak = peak.max(direction * (row.p_e - p_final));
        seen = true;
    }
    if !seen {
        return Err(Error::Metrics(format!(
            "no trace rows at or after the step time {step_time}"
        )));
    }
    Ok(100.0 * peak.max(0.0) / (p_final - p_initial).abs())
}

/// Time after `step_time` beyond which `|p_e − p_final|` stays within
/// `band_pct` percent of the step size for the remainder of the trace.
/// `Ok(None)` when the trace never settles.
pub fn settling_time(
    trace: &Trace,
    step_time: f64,
    p_initial: f64,
    p_final: f64,
    band_pct: f64,
) -> Result<Option<f64>> {
    if p_final == p_initial {
        return Err(Error::Metrics(
            "settling band undefined for a zero step".into(),
        ));
    }
    let band = band_pct / 100.0 * (p_final - p_initial).abs();
    let post: Vec<_> = trace.rows.iter().filter(|r| r.t >= step_time).collect();
    if post.is_empty() {
        return Err(Error::Metrics(format!(
            "no trace rows at or after the step time {step_time}"
        )));
    }
    let last_outside = post.iter().rposition(|r| (r.p_e - p_final).abs() > band);
    Ok(match last_outside {
        None => Some(0.0),
        Some(i) if i + 1 == post.len() => None,
        Some(i) => Some(post[i + 1].t - step_time),
    })
}

/// Largest |ω − ω0| over the whole trace, in Hz.
pub fn max_freq_deviation(trace: &Trace) -> f64 {
    trace
        .rows
        .iter()
        .map(|r| (r.omega - trace.omega_0).abs())
        .fold(0.0, f64::max)
        / TWO_PI
}

/// Settling band used when none is specified, percent of the step.
pub const DEFAULT_BAND_PCT: f64 = 2.0;

/// All indices of one trace against its commanded step.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    trace: &Trace,
    step_time: f64,
    p_initial: f64,
    p_final: f64,
    j0: f64,
    d_p0: f64,
    delta_f_max_hz: f64,
    band_pct: f64,
) -> Result<Metrics> {
    let overshoot_pct = overshoot(trace, step_time, p_initial, p_final)?;
    let settling_time_s = settling_time(trace, step_time, p_initial, p_final, band_pct)?;
    let max_freq_dev_hz = max_freq_deviation(trace);
    let j_peak = trace.rows.iter().map(|r| r.j).fold(0.0, f64::max);
    let d_p_peak = trace.rows.iter().map(|r| r.d_p).fold(0.0, f64::max);
    let k_t_min = trace
        .rows
        .iter()
        .map(|r| r.k_t)
        .fold(f64::INFINITY, f64::min);
    let k_t_max = trace
        .rows
        .iter()
        .map(|r| r.k_t)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Metrics {
        overshoot_pct,
        settling_time_s,
        max_freq_dev_hz,
        j_peak,
        j_peak_ratio: j_peak / j0,
        d_p_peak_ratio: d_p_peak / d_p0,
        k_t_range: (k_t_min, k_t_max),
        freq_violation: max_freq_dev_hz > delta_f_max_hz,
    })
}

/// Metrics of one strategy in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    pub strategy: String,
    pub metrics: Metrics,
}

/// One ordered pair in the comparison: how `a` relates to `b` on one
/// quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingRow {
    pub quantity: &'static str,
    pub a: String,
    pub a_value: f64,
    pub relation: &'static str,
    pub b: String,
    pub b_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub entries: Vec<ComparisonEntry>,
    pub orderings: Vec<OrderingRow>,
}

const ORDERED_QUANTITIES: [&str; 4] = [
    "overshoot_pct",
    "settling_time_s",
    "max_freq_dev_hz",
    "j_peak_ratio",
];

fn quantity_value(metrics: &Metrics, quantity: &str) -> f64 {
    match quantity {
        "overshoot_pct" => metrics.overshoot_pct,
        "settling_time_s" => metrics.settling_time_s.unwrap_or(f64::INFINITY),
        "max_freq_dev_hz" => metrics.max_freq_dev_hz,
        "j_peak_ratio" => metrics.j_peak_ratio,
        other => unreachable!("unknown quantity {other}"),
    }
}

/// Tabulates per-strategy metrics over traces of one shared scenario and
/// derives the pairwise orderings. Errors when the traces do not share a
/// time grid and input-power sequence.
#[allow(clippy::too_many_arguments)]
pub fn compare(
    traces: &[(String, &Trace)],
    step_time: f64,
    p_initial: f64,
    p_final: f64,
    j0: f64,
    d_p0: f64,
    delta_f_max_hz: f64,
    band_pct: f64,
) -> Result<ComparisonReport> {
    let Some((_, first)) = traces.first() else {
        return Err(Error::Metrics("comparison needs at least one trace".into()));
    };
    for (name, trace) in traces {
        if trace.rows.len() != first.rows.len() || trace.omega_0 != first.omega_0 {
            return Err(Error::Metrics(format!(
                "trace `{name}` does not share the scenario grid"
            )));
        }
        for (a, b) in trace.rows.iter().zip(first.rows.iter()) {
            if a.t != b.t || a.p_m != b.p_m {
                return Err(Error::Metrics(format!(
                    "trace `{name}` does not share the scenario input sequence"
                )));
            }
        }
    }
    let mut entries = Vec::with_capacity(traces.len());
    for (name, trace) in traces {
        entries.push(ComparisonEntry {
            strategy: name.clone(),
            metrics: evaluate(
                trace,
                step_time,
                p_initial,
                p_final,
                j0,
                d_p0,
                delta_f_max_hz,
                band_pct,
            )?,
        });
    }
    let mut orderings = Vec::new();
    for quantity in ORDERED_QUANTITIES {
        for i in 0..entries.len() {
            for j in (i + 1)..entries.len() {
                let a_value = quantity_value(&entries[i].metrics, quantity);
                let b_value = quantity_value(&entries[j].metrics, quantity);
                let relation = if a_value < b_value {
                    "<"
                } else if a_value > b_value {
                    ">"
                } else {
                    "="
                };
                orderings.push(OrderingRow {
                    quantity,
                    a: entries[i].strategy.clone(),
                    a_value,
                    relation,
                    b: entries[j].strategy.clone(),
                    b_value,
                });
            }
        }
    }
    Ok(ComparisonReport { entries, orderings })
}

pub const METRICS_CSV_HEADER: &str = "strategy,overshoot_pct,settling_time_s,max_freq_dev_hz,\
j_peak,j_peak_ratio,d_p_peak_ratio,k_t_min,k_t_max,freq_violation";

pub fn metrics_csv_row(strategy: &str, m: &Metrics) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        strategy,
        fmt_sig9(m.overshoot_pct),
        m.settling_time_s
            .map(fmt_sig9)
            .unwrap_or_else(|| "not_settled".into()),
        fmt_sig9(m.max_freq_dev_hz),
        fmt_sig9(m.j_peak),
        fmt_sig9(m.j_peak_ratio),
        fmt_sig9(m.d_p_peak_ratio),
        fmt_sig9(m.k_t_range.0),
        fmt_sig9(m.k_t_range.1),
        m.freq_violation
    )
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(METRICS_CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&metrics_csv_row(&e.strategy, &e.metrics));
            out.push('\n');
        }
        out
    }

    pub fn orderings_csv(&self) -> String {
        let mut out = String::from("quantity,strategy_a,value_a,relation,strategy_b,value_b\n");
        for row in &self.orderings {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.quantity,
                row.a,
                fmt_sig9(row.a_value),
                row.relation,
                row.b,
                fmt_sig9(row.b_value)
            ));
        }
        out
    }

    /// Aligned plain-text table of the per-strategy metrics.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<14} {:>12} {:>14} {:>14} {:>12} {:>12} {:>10}\n",
            "strategy",
            "overshoot %",
            "settling s",
            "max |df| Hz",
            "j peak x",
            "d_p peak x",
            "freq viol"
        ));
        for e in &self.entries {
            let m = &e.metrics;
            out.push_str(&format!(
                "{:<14} {:>12.4} {:>14} {:>14.4} {:>12.3} {:>12.3} {:>10}\n",
                e.strategy,
                m.overshoot_pct,
                m.settling_time_s
                    .map(|s| format!("{s:.4}"))
                    .unwrap_or_else(|| "not settled".into()),
                m.max_freq_dev_hz,
                m.j_peak_ratio,
                m.d_p_peak_ratio,
                m.freq_violation
            ));
        }
        out
    }
}
