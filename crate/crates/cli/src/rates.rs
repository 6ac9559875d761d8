//! Rate reports over emitted CSV files.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use toges_core::diagnostics::fit_points;

use crate::csvio::read_columns;

/// Gap columns fitted when the caller does not name any.
pub const DEFAULT_COLUMNS: [&str; 2] = ["gap_u", "gap_v"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRate {
    pub series: String,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub sup_scaled: Option<f64>,
    pub residual: Option<f64>,
    pub used: usize,
    pub excluded: usize,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// No threshold was given.
    None,
}

/// Fits every requested column of every CSV on `window`.
pub fn report_rates(
    paths: &[impl AsRef<Path>],
    columns: &[String],
    power: f64,
    window: (f64, f64),
    threshold: Option<f64>,
) -> Result<Vec<SeriesRate>> {
    let mut out = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let data = read_columns(path)?;
        let stem = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into());
        let t = data.get("t").expect("checked by read_columns");
        let wanted: Vec<String> = if columns.is_empty() {
            DEFAULT_COLUMNS.iter().filter(|c| data.get(c).is_some()).map(|c| c.to_string()).collect()
        } else {
            columns.to_vec()
        };
        for col in wanted {
            let series = format!("{stem}/{col}");
            let Some(y) = data.get(&col) else {
                out.push(failed(series, format!("no column '{col}'")));
                continue;
            };
            let points: Vec<(f64, f64)> = t.iter().copied().zip(y.iter().copied()).collect();
            match fit_points(&points, window, power) {
                Ok(est) => out.push(SeriesRate {
                    series,
                    slope: Some(est.slope),
                    intercept: Some(est.intercept),
                    sup_scaled: Some(est.sup_scaled),
                    residual: Some(est.residual),
                    used: est.used,
                    excluded: est.excluded,
                    verdict: match threshold {
                        Some(th) if est.slope <= th => Verdict::Pass,
                        Some(_) => Verdict::Fail,
                        None => Verdict::None,
                    },
                    error: None,
                }),
                Err(e) => out.push(failed(series, e.to_string())),
            }
        }
    }
    Ok(out)
}

fn failed(series: String, error: String) -> SeriesRate {
    SeriesRate {
        series,
        slope: None,
        intercept: None,
        sup_scaled: None,
        residual: None,
        used: 0,
        excluded: 0,
        verdict: Verdict::Fail,
        error: Some(error),
    }
}

impl SeriesRate {
    /// `name  slope  sup_scaled  verdict` for the terminal.
    pub fn line(&self) -> String {
        let verdict = match self.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::None => "-",
        };
        match (self.slope, self.sup_scaled) {
            (Some(s), Some(sup)) => format!(
                "{:<32} slope={s:>9.3} sup_scaled={sup:<12.4e} used={} verdict={verdict}",
                self.series, self.used
            ),
            _ => format!(
                "{:<32} error=\"{}\" verdict={verdict}",
                self.series,
                self.error.as_deref().unwrap_or("")
            ),
        }
    }
}

/// Parses `lo:hi`.
pub fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad window start '{lo}': {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad window end '{hi}': {e}"))?;
    if !(lo > 0.0 && hi > lo) {
        return Err(format!("window needs 0 < lo < hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_parse() {
        assert_eq!(parse_window("10:1000"), Ok((10.0, 1000.0)));
        assert_eq!(parse_window(" 1e1 : 1e3 "), Ok((10.0, 1000.0)));
        assert!(parse_window("1000:10").is_err());
        assert!(parse_window("0:10").is_err());
        assert!(parse_window("10").is_err());
    }
}
