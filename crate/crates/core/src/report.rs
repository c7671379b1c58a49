//! Report emission: canonical JSON and CSV tables.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::privacy::{Method, PrivacyReport};
use crate::runner::ReportDocument;

/// JSON with object keys sorted and floats in shortest round-trip form.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // `serde_json::Value` stores objects in a sorted map.
    let tree = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&tree)?;
    text.push('\n');
    Ok(text)
}

pub const PRIVACY_COLUMNS: [&str; 8] = [
    "scenario_id",
    "i",
    "I_size",
    "eps",
    "delta_measured",
    "delta_ci_radius",
    "exhaustive_flag",
    "method",
];

pub const TRUTHFULNESS_COLUMNS: [&str; 9] = [
    "scenario_id",
    "k",
    "r",
    "gain",
    "gain_ci_radius",
    "bound_from_privacy",
    "verdict",
    "exhaustive_flag",
    "deterrent_verdict",
];

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn privacy_rows(report: &PrivacyReport, out: &mut Vec<[String; 8]>) {
    for s in &report.scenarios {
        let id = format!("c{}-k{}-{}", report.group_size, report.k, s.id);
        let audited = s
            .config
            .audited
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let method = match s.method {
            Method::Exact => "exact",
            Method::MonteCarlo => "monte_carlo",
        };
        for (j, eps) in report.eps_grid.iter().enumerate() {
            out.push([
                id.clone(),
                audited.clone(),
                s.config.adversaries.len().to_string(),
                eps.to_string(),
                s.delta[j].to_string(),
                (s.delta_upper[j] - s.delta[j]).max(0.0).to_string(),
                report.exhaustive.to_string(),
                method.to_string(),
            ]);
        }
    }
}

/// One row per (scenario, ε) of every individual and group privacy sweep.
pub fn write_privacy_csv<W: Write>(doc: &ReportDocument, sink: W) -> Result<()> {
    let mut rows = Vec::new();
    for report in &doc.privacy {
        privacy_rows(report, &mut rows);
    }
    for group in &doc.group_privacy {
        privacy_rows(&group.report, &mut rows);
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(PRIVACY_COLUMNS)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per truthfulness cell. `bound_from_privacy` is the smallest bound the
/// measured privacy curve implies over the grid.
pub fn write_truthfulness_csv<W: Write>(doc: &ReportDocument, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TRUTHFULNESS_COLUMNS)?;
    for (idx, row) in doc.truthfulness.iter().enumerate() {
        let bound = row.privacy_bound.bound.iter().copied().fold(f64::INFINITY, f64::min);
        w.write_record([
            format!("cell-{idx}"),
            row.cell.k.to_string(),
            row.cell.r.to_string(),
            row.cell.max_gain.to_string(),
            row.cell.gain_ci_radius.to_string(),
            bound.to_string(),
            verdict(row.cell.pass).to_string(),
            row.cell.exhaustive.to_string(),
            row.deterrent
                .as_ref()
                .map_or(String::new(), |d| verdict(d.pass).to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const PRIVACY_CSV: &str = "privacy.csv";
pub const TRUTHFULNESS_CSV: &str = "truthfulness.csv";

/// Writes the JSON report to `path`.
pub fn emit_json(doc: &ReportDocument, path: &Path) -> Result<()> {
    std::fs::write(path, canonical_json(doc)?)?;
    Ok(())
}

/// Writes `privacy.csv` and `truthfulness.csv` into `dir`, creating it.
pub fn emit_csv(doc: &ReportDocument, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_privacy_csv(doc, std::fs::File::create(dir.join(PRIVACY_CSV))?)?;
    write_truthfulness_csv(doc, std::fs::File::create(dir.join(TRUTHFULNESS_CSV))?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn keys_are_sorted() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: f64,
        }
        let text = canonical_json(&S { zeta: 1, alpha: 0.1 }).unwrap();
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
        assert!(text.contains("0.1"));
        let m: BTreeMap<&str, f64> = [("x", 1.0 / 3.0)].into();
        let back: BTreeMap<String, f64> = serde_json::from_str(&canonical_json(&m).unwrap()).unwrap();
        assert_eq!(back["x"], 1.0 / 3.0);
    }
}
