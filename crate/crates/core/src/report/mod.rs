//! Run reports, redescription set files and report comparison.

mod setfile;
mod wilcoxon;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use setfile::{
    record_of, redescription_of, MeasureRecord, NaiveStatsRecord, RedescriptionRecord,
    ScoresRecord, SetFile,
};
pub use wilcoxon::signed_rank_greater;

use crate::error::{Error, Result};
use crate::metrics::SetScores;

/// Hex SHA-256 of `text`.
pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Scores of one output set of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub restart: usize,
    pub weight_row: usize,
    pub size: usize,
    pub peak_store: usize,
    pub entity_coverage: f64,
    pub attribute_coverage: f64,
    pub underlined_avg_jaccard: f64,
    pub underlined: MeasureRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plain: Option<MeasureRecord>,
}

impl RunRow {
    pub fn new(restart: usize, weight_row: usize, peak_store: usize, s: &SetScores) -> Self {
        RunRow {
            restart,
            weight_row,
            size: s.size,
            peak_store,
            entity_coverage: s.entity_coverage,
            attribute_coverage: s.attribute_coverage,
            underlined_avg_jaccard: s.underlined_avg_jaccard,
            underlined: s.underlined.into(),
            plain: s.plain.map(Into::into),
        }
    }

    /// Named values that are aggregated across restarts.
    pub fn measures(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("size".to_string(), self.size as f64),
            ("peak_store".to_string(), self.peak_store as f64),
            ("entity_coverage".to_string(), self.entity_coverage),
            ("attribute_coverage".to_string(), self.attribute_coverage),
            ("underlined_avg_jaccard".to_string(), self.underlined_avg_jaccard),
        ];
        for (name, v) in MeasureRecord::NAMES.iter().zip(self.underlined.values()) {
            out.push((format!("underlined_{name}"), v));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub weight_row: usize,
    pub measure: String,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single restart.
    pub std: f64,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Everything a run reports except timing, so that repeated runs produce
/// identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub config_digest: String,
    pub restarts: usize,
    pub weight_rows: usize,
    #[serde(default)]
    pub run: Vec<RunRow>,
    #[serde(default)]
    pub aggregate: Vec<Aggregate>,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, config_digest: String, restarts: usize, weight_rows: usize, run: Vec<RunRow>) -> Self {
        let mut report = RunReport {
            command: command.to_string(),
            seed,
            config_digest,
            restarts,
            weight_rows,
            run,
            aggregate: Vec::new(),
        };
        report.aggregate = report.aggregates();
        report
    }

    /// Per weight row and measure, mean ± std over the restarts' rows.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut out = Vec::new();
        for w in 0..self.weight_rows {
            let rows: Vec<&RunRow> = self.run.iter().filter(|r| r.weight_row == w).collect();
            let Some(first) = rows.first() else { continue };
            for (m, (name, _)) in first.measures().into_iter().enumerate() {
                let values: Vec<f64> = rows.iter().map(|r| r.measures()[m].1).collect();
                let (mean, std) = mean_std(&values);
                out.push(Aggregate {
                    weight_row: w,
                    measure: name,
                    mean,
                    std,
                });
            }
        }
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} seed={} restarts={} config={}", self.command, self.seed, self.restarts, &self.config_digest[..12.min(self.config_digest.len())]);
        for a in &self.aggregate {
            if a.measure == "size" || a.measure == "underlined_total_sc" || a.measure == "peak_store" {
                let _ = writeln!(s, "row {} {:<20} {:.6} ± {:.6}", a.weight_row, a.measure, a.mean, a.std);
            }
        }
        s
    }
}

/// One line of a report comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub weight_row: usize,
    pub measure: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub mean_delta: f64,
    /// One-sided signed-rank p-value for "B scores higher (worse) than A";
    /// `None` when there is a single restart.
    pub p_value: Option<f64>,
}

/// Compares the underlined scores of two reports restart by restart.
pub fn compare_reports(a: &RunReport, b: &RunReport) -> Result<Vec<ComparisonRow>> {
    if a.restarts != b.restarts {
        return Err(Error::Usage(format!(
            "reports have different restart counts ({} vs {})",
            a.restarts, b.restarts
        )));
    }
    let mut out = Vec::new();
    for w in 0..a.weight_rows.min(b.weight_rows) {
        let rows = |rep: &RunReport| {
            let mut v: Vec<RunRow> = rep.run.iter().filter(|r| r.weight_row == w).cloned().collect();
            v.sort_by_key(|r| r.restart);
            v
        };
        let (ra, rb) = (rows(a), rows(b));
        if ra.len() != rb.len() {
            return Err(Error::Usage(format!("weight row {w} has different run counts")));
        }
        for (m, name) in MeasureRecord::NAMES.iter().enumerate() {
            let va: Vec<f64> = ra.iter().map(|r| r.underlined.values()[m]).collect();
            let vb: Vec<f64> = rb.iter().map(|r| r.underlined.values()[m]).collect();
            let d: Vec<f64> = vb.iter().zip(&va).map(|(y, x)| y - x).collect();
            out.push(ComparisonRow {
                weight_row: w,
                measure: format!("underlined_{name}"),
                mean_a: mean_std(&va).0,
                mean_b: mean_std(&vb).0,
                mean_delta: mean_std(&d).0,
                p_value: (d.len() > 1).then(|| signed_rank_greater(&d)),
            });
        }
    }
    Ok(out)
}

pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let mut s = String::from("weight_row,measure,mean_a,mean_b,mean_delta,p_value\n");
    for r in rows {
        let p = r.p_value.map_or("skipped".to_string(), |p| format!("{p}"));
        let _ = writeln!(s, "{},{},{},{},{},{}", r.weight_row, r.measure, r.mean_a, r.mean_b, r.mean_delta, p);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(restart: usize, total: f64) -> RunRow {
        RunRow {
            restart,
            weight_row: 0,
            size: 3,
            peak_store: 10,
            entity_coverage: 0.5,
            attribute_coverage: 0.5,
            underlined_avg_jaccard: 0.7,
            underlined: MeasureRecord {
                j_sc: 0.3,
                p_sc: 0.1,
                aaj_sc: 0.2,
                aej_sc: 0.2,
                comp_sc: 0.1,
                total_sc: total,
            },
            plain: None,
        }
    }

    fn report(totals: &[f64]) -> RunReport {
        let rows = totals.iter().enumerate().map(|(i, t)| row(i, *t)).collect();
        RunReport::new("mine", 1, digest("x"), totals.len(), 1, rows)
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(digest(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let r = report(&[0.2, 0.4]);
        let agg = r.aggregate.iter().find(|a| a.measure == "underlined_total_sc").unwrap();
        assert!((agg.mean - 0.3).abs() < 1e-12);
        assert!((agg.std - (0.02f64).sqrt()).abs() < 1e-12);
        let back: RunReport = toml::from_str(&r.to_toml()).unwrap();
        assert_eq!(back.aggregates(), r.aggregate);
    }

    #[test]
    fn identical_reports_compare_flat() {
        let a = report(&[0.2, 0.3, 0.4]);
        let rows = compare_reports(&a, &a).unwrap();
        assert!(rows.iter().all(|r| r.mean_delta == 0.0 && r.p_value == Some(1.0)));
    }

    #[test]
    fn uniformly_worse_b_is_significant() {
        let a = report(&[0.1; 10]);
        let b = report(&(0..10).map(|i| 0.2 + i as f64 * 0.01).collect::<Vec<_>>());
        let rows = compare_reports(&a, &b).unwrap();
        let total = rows.iter().find(|r| r.measure == "underlined_total_sc").unwrap();
        assert!(total.p_value.unwrap() <= 1.0 / 1024.0);
    }

    #[test]
    fn single_restart_skips_the_test() {
        let a = report(&[0.1]);
        let rows = compare_reports(&a, &a).unwrap();
        assert!(rows.iter().all(|r| r.p_value.is_none()));
        assert!(comparison_table(&rows).contains("skipped"));
    }

    #[test]
    fn restart_count_mismatch_is_an_error() {
        assert!(compare_reports(&report(&[0.1]), &report(&[0.1, 0.2])).is_err());
    }
}
