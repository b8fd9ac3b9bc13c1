use std::path::Path;

use dissipath_core::dissipation::DissipationGrid;
use serde::Serialize;

use crate::error::CliError;

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// `t,P_1,...,P_N[,sigma_z]`, with `sigma_z` only for two states.
pub fn write_populations(path: &Path, times: &[f64], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let n = rows.first().map_or(0, Vec::len);
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|a| format!("P_{a}")));
    if n == 2 {
        header.push("sigma_z".into());
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (t, p) in times.iter().zip(rows) {
        let mut rec: Vec<f64> = vec![*t];
        rec.extend_from_slice(p);
        if n == 2 {
            rec.push(p[0] - p[1]);
        }
        w.serialize(rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Long format `omega,t,D,E`.
pub fn write_dissipation(path: &Path, grid: &DissipationGrid) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["omega", "t", "D", "E"])
        .map_err(|e| csv_error(path, e))?;
    let nt = grid.n_times();
    for (i, &omega) in grid.omegas.iter().enumerate() {
        for (s, &t) in grid.times.iter().enumerate() {
            let k = i * nt + s;
            w.serialize((omega, t, grid.rate[k], grid.cumulative[k]))
                .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `omega,E_inf[,stderr]`.
pub fn write_steady(
    path: &Path,
    omegas: &[f64],
    values: &[f64],
    stderr: Option<&[f64]>,
) -> Result<(), CliError> {
    let mut w = writer(path)?;
    match stderr {
        Some(se) => {
            w.write_record(["omega", "E_inf", "stderr"])
                .map_err(|e| csv_error(path, e))?;
            for ((o, v), s) in omegas.iter().zip(values).zip(se) {
                w.serialize((o, v, s)).map_err(|e| csv_error(path, e))?;
            }
        }
        None => {
            w.write_record(["omega", "E_inf"])
                .map_err(|e| csv_error(path, e))?;
            for (o, v) in omegas.iter().zip(values) {
                w.serialize((o, v)).map_err(|e| csv_error(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Steady-state table of one channel as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyTable {
    pub label: String,
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
}

/// Reads every `steady_<label>.csv` in `dir`, sorted by label.
pub fn read_steady(dir: &Path) -> Result<Vec<SteadyTable>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tables = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(label) = name
            .strip_prefix("steady_")
            .and_then(|n| n.strip_suffix(".csv"))
        else {
            continue;
        };
        let mut r = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
        let (mut omegas, mut values) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_error(&path, e))?;
            let field = |i: usize| -> Result<f64, CliError> {
                rec.get(i)
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| CliError::Data {
                        path: path.clone(),
                        message: format!("bad number in column {i}"),
                    })
            };
            omegas.push(field(0)?);
            values.push(field(1)?);
        }
        tables.push(SteadyTable {
            label: label.to_string(),
            omegas,
            values,
        });
    }
    tables.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(tables)
}

/// Last row of `populations.csv`, if present.
pub fn read_final_populations(dir: &Path) -> Result<Option<Vec<f64>>, CliError> {
    let path = dir.join("populations.csv");
    if !path.exists() {
        return Ok(None);
    }
    let mut r = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
    let n = r
        .headers()
        .map_err(|e| csv_error(&path, e))?
        .iter()
        .filter(|h| h.starts_with("P_"))
        .count();
    let mut last = None;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(&path, e))?;
        let row: Option<Vec<f64>> = (1..=n)
            .map(|i| rec.get(i).and_then(|x| x.parse().ok()))
            .collect();
        last = Some(row.ok_or_else(|| CliError::Data {
            path: path.clone(),
            message: "bad population row".into(),
        })?);
    }
    Ok(last)
}
