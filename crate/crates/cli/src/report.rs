use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use mppstat::stats;

use crate::run::{write_rows, ResultRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub estimator: String,
    pub weights: String,
    pub band_lo: f64,
    pub band_hi: f64,
    pub n: usize,
    pub n_defined: usize,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub target: Option<f64>,
    pub bias: Option<f64>,
    pub rmse: Option<f64>,
    pub coverage: Option<f64>,
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("{}: row {}", path.display(), i + 2)))
        .collect()
}

type Key = (String, String, u64, u64);

fn key(r: &ResultRow) -> Key {
    (r.estimator.clone(), r.weights.clone(), r.band_lo.to_bits(), r.band_hi.to_bits())
}

/// Per (estimator, weights, band) summaries, in order of first appearance.
/// Groups without a target get no bias, RMSE or coverage; a warning is
/// returned for each.
pub fn summarize(rows: &[ResultRow]) -> (Vec<SummaryRow>, Vec<String>) {
    let mut order: Vec<Key> = Vec::new();
    for r in rows {
        let k = key(r);
        if !order.contains(&k) {
            order.push(k);
        }
    }
    let mut warnings = Vec::new();
    let out = order
        .into_iter()
        .map(|k| {
            let group: Vec<&ResultRow> = rows.iter().filter(|r| key(r) == k).collect();
            let values: Vec<f64> = group.iter().filter_map(|r| r.value).collect();
            let target = group.iter().find_map(|r| r.target);
            let mean = (!values.is_empty()).then(|| stats::mean(&values));
            let variance = (values.len() >= 2).then(|| stats::variance(&values));
            let (bias, rmse, coverage) = match (target, mean) {
                (Some(t), Some(m)) => {
                    let with_ci: Vec<(f64, f64)> = group.iter().filter_map(|r| Some((r.ci_lo?, r.ci_hi?))).collect();
                    let coverage = (!with_ci.is_empty()).then(|| {
                        with_ci.iter().filter(|(lo, hi)| *lo <= t && t <= *hi).count() as f64 / with_ci.len() as f64
                    });
                    (Some(m - t), Some(stats::rmse(&values, t)), coverage)
                }
                _ => {
                    warnings.push(format!(
                        "{} ({}) band [{}, {}]: no oracle target; bias and coverage omitted",
                        k.0,
                        k.1,
                        f64::from_bits(k.2),
                        f64::from_bits(k.3)
                    ));
                    (None, None, None)
                }
            };
            SummaryRow {
                estimator: k.0,
                weights: k.1,
                band_lo: f64::from_bits(k.2),
                band_hi: f64::from_bits(k.3),
                n: group.len(),
                n_defined: values.len(),
                mean,
                variance,
                target,
                bias,
                rmse,
                coverage,
            }
        })
        .collect();
    (out, warnings)
}

/// Gnuplot script plotting replicate estimates per group against their
/// targets.
pub fn plot_script(results_file: &str, summary: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot -p plot.gp");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set xlabel 'replicate'");
    let _ = writeln!(s, "set ylabel 'estimate'");
    let _ = writeln!(s, "set key outside");
    let mut parts = Vec::new();
    for g in summary {
        let sel = format!(
            "strcol(1) eq \"{}\" && strcol(2) eq \"{}\" && $3 == {} && $4 == {}",
            g.estimator, g.weights, g.band_lo, g.band_hi
        );
        parts.push(format!(
            "'{results_file}' every ::1 using 5:({sel} ? $6 : 1/0) with points title \"{} {} [{}, {}]\"",
            g.estimator, g.weights, g.band_lo, g.band_hi
        ));
        if let Some(t) = g.target {
            parts.push(format!("{t} with lines dashtype 2 notitle"));
        }
    }
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    s
}

/// Writes `summary.csv` and `plot.gp` into `out`.
pub fn report(results: &Path, out: &Path) -> Result<Vec<String>> {
    let rows = read_results(results)?;
    let (summary, warnings) = summarize(&rows);
    fs::create_dir_all(out)?;
    write_rows(&summary, &out.join("summary.csv"))?;
    let abs = fs::canonicalize(results).unwrap_or_else(|_| results.to_path_buf());
    fs::write(out.join("plot.gp"), plot_script(&abs.display().to_string(), &summary))?;
    Ok(warnings)
}
