use std::path::Path;

use crate::error::{Error, Result};

use super::config::{Mode, ParamPoint};
use super::experiment::{metrics_for, RunReport};

/// Column names for a mode's report.
///
/// Evac: `mode,point,scenario,strategy,base_seed,seed,aggregate,runs`,
/// then `avg_v,avg_v_sd,avg_n,avg_n_sd,ratio,ratio_sd,avg_all,avg_all_sd,
/// G1,G1_sd,..,G4,G4_sd,censored,censored_sd`, then `error`.
///
/// Stage: `mode,point,map,PN,BRF,PT,ST,SI,base_seed,seed,aggregate,runs`,
/// then `F,F_sd,APS,APS_sd,switch_count,switch_count_sd`, then `error`.
///
/// `_sd` columns are only filled on aggregate rows.
pub fn report_header(mode: Mode) -> Vec<String> {
    let keys: &[&str] = match mode {
        Mode::Evac => &["mode", "point", "scenario", "strategy"],
        Mode::Stage => &["mode", "point", "map", "PN", "BRF", "PT", "ST", "SI"],
    };
    let mut h: Vec<String> = keys.iter().map(|s| s.to_string()).collect();
    h.extend(["base_seed", "seed", "aggregate", "runs"].map(String::from));
    for m in metrics_for(mode) {
        h.push(m.name.to_string());
        h.push(format!("{}_sd", m.name));
    }
    h.push("error".into());
    h
}

/// Four decimals, `-0.0000` folded to `0.0000`, `NaN` left blank.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn record(row: &RunReport) -> Vec<String> {
    let mut r = vec![row.mode.to_string(), row.point_index.to_string()];
    match row.point {
        ParamPoint::Evac { scenario, strategy } => {
            r.push(scenario.to_string());
            r.push(strategy.code().to_string());
        }
        ParamPoint::Stage {
            map,
            pn,
            brf,
            pt,
            st,
            si,
        } => {
            r.push(map.to_string());
            r.extend([
                pn.to_string(),
                brf.to_string(),
                pt.to_string(),
                st.to_string(),
                si.to_string(),
            ]);
        }
    }
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    r.push(opt(row.base_seed));
    r.push(opt(row.seed));
    r.push(row.aggregate.to_string());
    r.push(row.runs.to_string());
    for (i, m) in metrics_for(row.mode).iter().enumerate() {
        let value = match row.values.get(i) {
            None => String::new(),
            Some(&v) if m.integer && !row.aggregate => format!("{}", v as i64),
            Some(&v) => format_float(v),
        };
        r.push(value);
        r.push(row.sd.get(i).map(|&s| format_float(s)).unwrap_or_default());
    }
    r.push(row.error.clone().unwrap_or_default());
    r
}

/// Renders rows as CSV text (LF line endings). All rows must share a mode.
pub fn render_report(rows: &[RunReport]) -> Result<String> {
    let Some(first) = rows.first() else {
        return Err(Error::Report("no rows to write".into()));
    };
    if rows.iter().any(|r| r.mode != first.mode) {
        return Err(Error::Report("rows mix evac and stage runs".into()));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Report(e.to_string());
    w.write_record(report_header(first.mode)).map_err(csv_err)?;
    for row in rows {
        w.write_record(record(row)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes the CSV report. Nothing is created when `rows` is empty.
pub fn write_report(rows: &[RunReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_report(rows)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
