//! CSV serialization and per-row summaries.

use std::io::Write;

use xxz_rectify::lattice::LatticeSpec;
use xxz_rectify::transport::{PointSummary, ScanReport, SweepRow};

pub const SWEEP_HEADER: [&str; 9] = [
    "delta",
    "j_forward",
    "j_reverse",
    "R",
    "degenerate",
    "homogeneity_residual",
    "stationarity_fwd",
    "stationarity_rev",
    "wall_time_s",
];

pub const SCAN_PREFIX: [&str; 5] = ["geometry", "column_sizes", "bonds", "left", "right"];

/// Twelve significant digits, shortest form: fixed notation for exponents
/// in [-5, 12), scientific otherwise, trailing zeros dropped. Non-finite
/// values become the empty string.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..12).contains(&exp) {
        trim_zeros(&format!("{x:.*}", (11 - exp) as usize))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// The nine sweep columns of one row. `R` is empty for failed and
/// degenerate rows.
pub fn sweep_record(row: &SweepRow, timing: bool) -> Vec<String> {
    let (r, degenerate) = match row.rectification {
        Some(rect) => (rect.r.map(format_number).unwrap_or_default(), rect.is_degenerate()),
        None => (String::new(), false),
    };
    vec![
        format_number(row.delta),
        format_number(row.forward.j),
        format_number(row.reverse.j),
        r,
        degenerate.to_string(),
        format_number(row.homogeneity_residual()),
        format_number(row.forward.stationarity),
        format_number(row.reverse.stationarity),
        format_number(if timing { row.wall_time() } else { 0.0 }),
    ]
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow], timing: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.write_record(sweep_record(row, timing))?;
    }
    w.flush()?;
    Ok(())
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|t| t.to_string()).collect::<Vec<_>>().join(sep)
}

/// Geometry columns of the scan CSV, with 1-based sites.
fn describe(spec: &LatticeSpec) -> [String; 4] {
    [
        join(spec.column_sizes(), " "),
        join(spec.bonds().iter().map(|(a, b)| format!("{}-{}", a + 1, b + 1)), " "),
        join(spec.left_reservoir().iter().map(|r| r.site + 1), " "),
        join(spec.right_reservoir().iter().map(|r| r.site + 1), " "),
    ]
}

pub fn write_scan<W: Write>(out: W, report: &ScanReport, timing: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCAN_PREFIX.iter().chain(SWEEP_HEADER.iter()))?;
    for e in &report.entries {
        let mut record = vec![(e.geometry + 1).to_string()];
        record.extend(describe(&report.geometries[e.geometry]));
        record.extend(sweep_record(&e.row, timing));
        w.write_record(record)?;
    }
    w.flush()?;
    Ok(())
}

fn failure_text(p: &PointSummary) -> Option<String> {
    p.failure.as_ref().map(|e| e.to_string())
}

/// One human-readable line per row.
pub fn summary_line(row: &SweepRow) -> String {
    let head = format!("Δ = {:>6}", format_number(row.delta));
    match row.rectification {
        Some(rect) => format!(
            "{head}  R = {:>14}  J_f = {:>14}  J_r = {:>14}  residual {:.1e}  {:.1} s",
            rect.r.map(|r| format!("{r:+.8}")).unwrap_or_else(|| "degenerate".into()),
            format!("{:+.8e}", rect.j_forward),
            format!("{:+.8e}", rect.j_reverse),
            row.forward.stationarity.max(row.reverse.stationarity),
            row.wall_time()
        ),
        None => {
            let why: Vec<String> = [("forward", &row.forward), ("reverse", &row.reverse)]
                .iter()
                .filter_map(|(side, p)| failure_text(p).map(|t| format!("{side}: {t}")))
                .collect();
            format!("{head}  FAILED  {}", why.join("; "))
        }
    }
}
