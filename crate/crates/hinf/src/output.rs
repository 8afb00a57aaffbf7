//! Result JSON, level-set trace lines and CSV tables.

use std::io::Write;

use delay_hinf_core::levelset::LevelRecord;
use delay_hinf_core::oracles::SweepResult;
use delay_hinf_core::HinfResult;
use serde::Serialize;

use crate::CliError;

/// Rounds to 12 significant digits; non-finite values become `None` (JSON null).
pub fn round12(x: f64) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    Some(format!("{x:.11e}").parse().expect("formatted float parses"))
}

fn round_all(xs: &[f64]) -> Vec<Option<f64>> {
    xs.iter().copied().map(round12).collect()
}

#[derive(Serialize)]
struct CandidateJson {
    omega: Option<f64>,
    xi: Option<f64>,
    iterations: usize,
    residual: Option<f64>,
}

#[derive(Serialize)]
struct ResultJson {
    hinf: Option<f64>,
    peak_omega: Option<f64>,
    predicted: Option<f64>,
    #[serde(rename = "N")]
    n: usize,
    candidates: Vec<CandidateJson>,
    warnings: Vec<String>,
}

pub fn result_json(res: &HinfResult) -> String {
    let out = ResultJson {
        hinf: round12(res.norm),
        peak_omega: round12(res.peak_omega),
        predicted: round12(res.predicted_norm),
        n: res.n,
        candidates: res
            .candidates
            .iter()
            .map(|c| CandidateJson {
                omega: round12(c.omega),
                xi: round12(c.xi),
                iterations: c.iterations,
                residual: round12(c.residual),
            })
            .collect(),
        warnings: res.warnings.iter().map(|w| w.to_string()).collect(),
    };
    serde_json::to_string_pretty(&out).expect("plain data serializes")
}

#[derive(Serialize)]
struct TraceLine {
    xi: Option<f64>,
    crossings: Vec<Option<f64>>,
    midpoints: Vec<Option<f64>>,
    lambda1_values: Vec<Option<f64>>,
}

/// One JSON object per level, frequencies in original units.
pub fn write_trace<W: Write>(out: &mut W, history: &[LevelRecord], scale: f64) -> std::io::Result<()> {
    for rec in history {
        let to_orig: Vec<f64> = rec.crossings.iter().map(|w| w / scale).collect();
        let mids: Vec<f64> = rec.midpoints.iter().map(|w| w / scale).collect();
        let line = TraceLine {
            xi: round12(rec.xi),
            crossings: round_all(&to_orig),
            midpoints: round_all(&mids),
            lambda1_values: round_all(&rec.lambda1_values),
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// `omega,sigma1,sigma2,...`
pub fn write_sweep_csv<W: Write>(out: W, sweep: &SweepResult, all: &[Vec<f64>]) -> Result<(), CliError> {
    let width = all.iter().map(Vec::len).max().unwrap_or(1).max(1);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["omega".to_string()];
    header.extend((1..=width).map(|k| format!("sigma{k}")));
    w.write_record(&header)?;
    for (i, omega) in sweep.grid.iter().enumerate() {
        let mut rec = vec![fmt12(*omega)];
        match all.get(i) {
            Some(sv) => rec.extend(sv.iter().map(|s| fmt12(*s))),
            None => rec.push(fmt12(sweep.values[i])),
        }
        rec.resize(width + 1, String::new());
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `N,omega_c`
pub fn write_cutoff_csv<W: Write>(out: W, rows: &[(usize, f64)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "omega_c"])?;
    for (n, wc) in rows {
        w.write_record([n.to_string(), fmt12(*wc)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn fmt12(x: f64) -> String {
    match round12(x) {
        Some(v) => v.to_string(),
        None if x.is_nan() => "nan".into(),
        None if x > 0.0 => "inf".into(),
        None => "-inf".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_to_twelve_digits() {
        assert_eq!(round12(1.0 / 3.0), Some(0.333333333333));
        assert_eq!(round12(f64::INFINITY), None);
        assert_eq!(round12(0.0), Some(0.0));
        assert_eq!(round12(123456789.123456789), Some(123456789.123));
    }
}
