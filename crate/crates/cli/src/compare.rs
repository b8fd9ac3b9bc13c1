use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;
use crate::output::{read_final_populations, read_steady, SteadyTable};

const MATCH: f64 = 1e-9;

/// Per-channel differences `b - a` of the steady-state densities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelComparison {
    pub label: String,
    pub omegas: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub difference: Vec<f64>,
    pub sup_norm: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub interpolated: bool,
    pub channels: Vec<ChannelComparison>,
    /// `P_b(t_end) - P_a(t_end)` when both runs wrote populations.
    pub population_difference: Option<Vec<f64>>,
}

/// Trapezoid integral of `|a - b|` over the (possibly uneven) grid.
pub fn l1_distance(omegas: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    omegas
        .windows(2)
        .zip(d.windows(2))
        .map(|(w, v)| 0.5 * (w[1] - w[0]) * (v[0] + v[1]))
        .sum()
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> Option<f64> {
    if x.is_empty() || at < x[0] - MATCH || at > x[x.len() - 1] + MATCH {
        return None;
    }
    let k = x.partition_point(|&v| v < at);
    if k < x.len() && (x[k] - at).abs() <= MATCH {
        return Some(y[k]);
    }
    if k == 0 {
        return Some(y[0]);
    }
    if k == x.len() {
        return Some(y[k - 1]);
    }
    let s = (at - x[k - 1]) / (x[k] - x[k - 1]);
    Some(y[k - 1] + s * (y[k] - y[k - 1]))
}

fn compare_tables(
    a: &SteadyTable,
    b: &SteadyTable,
    interpolate_grid: bool,
) -> Option<ChannelComparison> {
    let mut omegas = Vec::new();
    let mut va = Vec::new();
    let mut vb = Vec::new();
    for (&w, &x) in a.omegas.iter().zip(&a.values) {
        let other = if interpolate_grid {
            interpolate(&b.omegas, &b.values, w)
        } else {
            b.omegas
                .iter()
                .position(|&o| (o - w).abs() <= MATCH)
                .map(|k| b.values[k])
        };
        if let Some(y) = other {
            omegas.push(w);
            va.push(x);
            vb.push(y);
        }
    }
    if omegas.is_empty() {
        return None;
    }
    let difference: Vec<f64> = va.iter().zip(&vb).map(|(x, y)| y - x).collect();
    Some(ChannelComparison {
        label: a.label.clone(),
        sup_norm: difference.iter().fold(0.0, |m, d| m.max(d.abs())),
        l1: l1_distance(&omegas, &va, &vb),
        omegas,
        a: va,
        b: vb,
        difference,
    })
}

/// Compares the steady-state summaries of two run directories.
pub fn compare_dirs(a: &Path, b: &Path, interpolate_grid: bool) -> Result<CompareReport, CliError> {
    let ta = read_steady(a)?;
    let tb = read_steady(b)?;
    let mut channels = Vec::new();
    let mut shared = false;
    for x in &ta {
        if let Some(y) = tb.iter().find(|y| y.label == x.label) {
            shared = true;
            if let Some(c) = compare_tables(x, y, interpolate_grid) {
                channels.push(c);
            }
        }
    }
    if !shared {
        return Err(CliError::Data {
            path: b.to_path_buf(),
            message: format!("no steady-state channel in common with {}", a.display()),
        });
    }
    if channels.is_empty() {
        return Err(CliError::DisjointGrids);
    }
    let population_difference = match (read_final_populations(a)?, read_final_populations(b)?) {
        (Some(pa), Some(pb)) if pa.len() == pb.len() => {
            Some(pb.iter().zip(&pa).map(|(y, x)| y - x).collect())
        }
        _ => None,
    };
    Ok(CompareReport {
        interpolated: interpolate_grid,
        channels,
        population_difference,
    })
}

impl CompareReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        for c in &self.channels {
            let _ = writeln!(s, "channel {}", c.label);
            let _ = writeln!(
                s,
                "{:>10} {:>14} {:>14} {:>14}",
                "omega", "E_inf(a)", "E_inf(b)", "b - a"
            );
            for k in 0..c.omegas.len() {
                let _ = writeln!(
                    s,
                    "{:>10.4} {:>14.6e} {:>14.6e} {:>14.6e}",
                    c.omegas[k], c.a[k], c.b[k], c.difference[k]
                );
            }
            let _ = writeln!(s, "sup |b - a| = {:.6e}   L1 = {:.6e}\n", c.sup_norm, c.l1);
        }
        if let Some(p) = &self.population_difference {
            let parts: Vec<String> = p
                .iter()
                .enumerate()
                .map(|(i, d)| format!("P_{}: {d:+.6e}", i + 1))
                .collect();
            let _ = writeln!(
                s,
                "final population difference (b - a): {}",
                parts.join("  ")
            );
        }
        s
    }
}
