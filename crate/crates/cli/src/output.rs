use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;
use vdisc::numfmt::format_human;
use vdisc::ranking::InspectionReport;
use vdisc::Discrepancy;

use crate::CliError;

/// Writes `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf).map_err(|e| CliError::io(path, e))?;
        buf.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    log::debug!("wrote {}", path.display());
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

fn human_d(d: Discrepancy<f64>) -> String {
    match d {
        Discrepancy::Finite(v) => format_human(v),
        Discrepancy::Infinite => "inf".into(),
        Discrepancy::Undefined => "-".into(),
    }
}

/// Top-K table per section, flagged entries marked with `*`.
pub fn render_top_k(report: &InspectionReport) -> String {
    let k = report.parameters.k;
    let mut out = format!(
        "inspection priorities for {} (K={k}, tie-break {})\n",
        report.date, report.parameters.tie_break_policy
    );
    for s in &report.sections {
        let label = match &s.operator {
            Some(op) => format!("{} / {op}", s.stratum.name),
            None => s.stratum.name.clone(),
        };
        out.push_str(&format!("\n[{label}]\n"));
        if s.entries.is_empty() {
            out.push_str("  (no eligible municipalities)\n");
            continue;
        }
        out.push_str(&format!(
            "  {:>4}  {:<24} {:<8} {:>10} {:>10}  {:>5}\n",
            "rank", "municipality", "operator", "d", "rate_ma28", "d-r"
        ));
        for e in s.entries.iter().take(k) {
            out.push_str(&format!(
                "  {:>4}  {:<24} {:<8} {:>10} {:>10}  {:>5}{}\n",
                e.rank_by_discrepancy,
                e.municipality.as_str(),
                e.operator,
                human_d(e.discrepancy.value),
                format_human(e.rate_ma28),
                format!("{}-{}", e.rank_by_discrepancy, e.rank_by_rate),
                if e.flagged { " *" } else { "" }
            ));
        }
    }
    out
}
