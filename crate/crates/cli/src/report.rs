//! Report files.
//!
//! Every run writes `<name>.json`:
//!
//! | field         | content                                                   |
//! |---------------|-----------------------------------------------------------|
//! | `command`     | what ran, e.g. `solve` or `reproduce-fig1`                |
//! | `environment` | the solved environment, in config shape                   |
//! | `payoff`      | the principal's headline payoff                           |
//! | `warnings`    | validation findings that did not stop the run             |
//! | `result`      | command-specific detail (solver reports, menus, oracles)  |
//!
//! and `<name>.csv` with one row per cell of a grid on which every reported
//! test is constant: `cell_lo, cell_hi, indicator…, u, v_0, v_1, …`. Payoff
//! columns hold midpoint values; there is one indicator column per test.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use consent_core::{BinaryTest, Environment};
use serde::{Deserialize, Serialize};

use crate::config::EnvSpec;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub environment: EnvSpec,
    pub payoff: f64,
    pub warnings: Vec<String>,
    pub result: serde_json::Value,
}

/// A test to plot, with its CSV column name.
pub struct Column<'a> {
    pub name: String,
    pub test: &'a BinaryTest,
}

/// Cell edges: environment breakpoints plus every test endpoint.
fn plot_edges(env: &Environment, columns: &[Column]) -> Vec<f64> {
    let (lo, hi) = env.support();
    let mut pts = env.breakpoints();
    for c in columns {
        for &(a, b) in c.test.intervals() {
            pts.push(a);
            pts.push(b);
        }
    }
    pts.retain(|&x| x >= lo && x <= hi);
    pts.sort_by(f64::total_cmp);
    let tol = 1e-12 * (hi - lo);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for x in pts {
        if out.last().is_none_or(|&l| x - l > tol) {
            out.push(x);
        }
    }
    out
}

pub fn write_csv(path: &Path, env: &Environment, columns: &[Column]) -> Result<()> {
    let vs = env.agent_payoffs()?;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["cell_lo".to_string(), "cell_hi".to_string()];
    header.extend(columns.iter().map(|c| c.name.clone()));
    header.push("u".into());
    header.extend((0..vs.len()).map(|k| format!("v_{k}")));
    w.write_record(&header)?;
    for cell in plot_edges(env, columns).windows(2) {
        let mid = 0.5 * (cell[0] + cell[1]);
        let mut row = vec![cell[0].to_string(), cell[1].to_string()];
        row.extend(columns.iter().map(|c| u8::from(c.test.contains(mid)).to_string()));
        row.push(env.payoffs.u.eval(mid).to_string());
        row.extend(vs.iter().map(|v| v.eval(mid).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<name>.json` and `<name>.csv` under `dir`.
pub fn emit(dir: &Path, name: &str, report: &Report, env: &Environment, columns: &[Column]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let json = dir.join(format!("{name}.json"));
    let csv = dir.join(format!("{name}.csv"));
    std::fs::write(&json, serde_json::to_string_pretty(report)? + "\n")
        .with_context(|| format!("writing {}", json.display()))?;
    write_csv(&csv, env, columns)?;
    Ok(vec![json, csv])
}
