//! Deterministic serialization: CSV with 17 significant digits, JSON with
//! shortest round-trip floats. No timestamps or host data.

use anyhow::Result;
use serde::Serialize;
use sradcat_core::dissipator::PropagatorEntry;
use sradcat_core::norms::DecoherenceCurve;

pub const CURVE_HEADER: [&str; 4] = ["tau", "n1", "n2", "n_ratio"];
pub const PROPAGATOR_HEADER: [&str; 5] = ["m", "n", "k", "tau", "value"];

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A twice-unit quantum number as its physical value (`3`, `-1.5`).
fn fmt_half(twice: i32) -> String {
    format!("{}", f64::from(twice) / 2.0)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)?)
}

pub fn curve_csv(curve: &DecoherenceCurve) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_HEADER)?;
    for i in 0..curve.taus.len() {
        w.write_record([curve.taus[i], curve.n1[i], curve.n2[i], curve.n_ratio[i]].map(fmt_f64))?;
    }
    finish(w)
}

pub fn propagator_csv(entries: &[PropagatorEntry]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PROPAGATOR_HEADER)?;
    for e in entries {
        w.write_record([
            fmt_half(e.twice_m),
            fmt_half(e.twice_n),
            fmt_half(e.twice_k),
            fmt_f64(e.tau),
            fmt_f64(e.value),
        ])?;
    }
    finish(w)
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
