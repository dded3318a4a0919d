//! Report serialization.

use std::io::Write;

use randers_foliate_core::verify::ResidualReport;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Document<'a> {
    schema_version: u32,
    reports: &'a [ResidualReport],
}

/// Pretty JSON with a trailing newline. Non-finite numbers become `null`.
pub fn to_json(reports: &[ResidualReport]) -> String {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        reports,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
    s.push('\n');
    s
}

/// One row per report: `formula_id, example, resolution, residual, verdict`.
/// Resolutions are joined with `x`.
pub fn write_csv<W: Write>(reports: &[ResidualReport], w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["formula_id", "example", "resolution", "residual", "verdict"])?;
    for r in reports {
        let res: Vec<String> = r.resolution.iter().map(|n| n.to_string()).collect();
        wr.write_record([
            r.formula_id.as_str(),
            r.example.as_str(),
            &res.join("x"),
            &format!("{:e}", r.residual()),
            r.verdict.name(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Human-readable one-line-per-report summary.
pub fn summary(reports: &[ResidualReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let res: Vec<String> = r.resolution.iter().map(|n| n.to_string()).collect();
        s.push_str(&format!(
            "{:<15} {:<50} {:<17} {:>10} residual {:.3e} (tol {:.0e})\n",
            r.example,
            r.formula_id,
            res.join("x"),
            r.verdict.name(),
            r.residual(),
            r.tolerance
        ));
    }
    s
}
