use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{fmt_f64, ResultRecord, MANIFEST_FILE};

/// One table row per check (or one row for a manifest without checks).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub kind: String,
    pub quantity: String,
    pub rule: String,
    pub predicted: String,
    pub measured: String,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<ReportRow>,
    /// Unreadable or malformed manifests with the reason.
    pub unreadable: Vec<(PathBuf, String)>,
    pub markdown: String,
    /// 0 when every row passes, 1 when a row fails or errored, 2 when only
    /// unreadable manifests are at fault.
    pub exit_code: i32,
}

fn load(path: &Path) -> Result<ResultRecord, String> {
    let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn rows_of(r: &ResultRecord) -> Vec<ReportRow> {
    let base = |quantity: String, rule: String, predicted: String, measured: String, status: &str| ReportRow {
        experiment: r.name.clone(),
        kind: r.kind.clone(),
        quantity,
        rule,
        predicted,
        measured,
        status: status.into(),
    };
    if let Some(e) = &r.error {
        return vec![base("-".into(), "-".into(), "-".into(), e.message.clone(), "ERROR")];
    }
    if r.checks.is_empty() {
        return vec![base("-".into(), "no prediction".into(), "-".into(), "-".into(), "PASS")];
    }
    r.checks
        .iter()
        .map(|c| {
            let status = match c.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "N/A",
            };
            let predicted = if c.tolerance > 0.0 {
                format!("{} (tol {})", c.predicted, fmt_f64(c.tolerance))
            } else {
                c.predicted.clone()
            };
            let measured = c.measured.map(|m| format!("{m:.4}")).unwrap_or_else(|| "-".into());
            base(c.quantity.clone(), c.rule.clone(), predicted, measured, status)
        })
        .collect()
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

/// Aggregates manifests (files, or directories holding `manifest.json`)
/// into one markdown table. Unreadable manifests are listed under the
/// table and do not stop the others from being aggregated.
pub fn report<P: AsRef<Path>>(paths: &[P]) -> Summary {
    let mut rows = Vec::new();
    let mut unreadable = Vec::new();
    for p in paths {
        match load(p.as_ref()) {
            Ok(r) => rows.extend(rows_of(&r)),
            Err(e) => unreadable.push((p.as_ref().to_path_buf(), e)),
        }
    }
    let mut md = String::from("| experiment | kind | quantity | prediction rule | predicted | measured | status |\n");
    md.push_str("|---|---|---|---|---|---|---|\n");
    for r in &rows {
        md.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            cell(&r.experiment),
            cell(&r.kind),
            cell(&r.quantity),
            cell(&r.rule),
            cell(&r.predicted),
            cell(&r.measured),
            r.status
        ));
    }
    if !unreadable.is_empty() {
        md.push_str("\nUnreadable manifests:\n\n");
        for (p, e) in &unreadable {
            md.push_str(&format!("- {}: {}\n", p.display(), e));
        }
    }
    let failed = rows.iter().any(|r| r.status == "FAIL" || r.status == "ERROR");
    let exit_code = if failed {
        1
    } else if !unreadable.is_empty() {
        2
    } else {
        0
    };
    Summary { rows, unreadable, markdown: md, exit_code }
}
